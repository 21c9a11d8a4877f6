"""
Controllers: the rule-based baseline and Soft Actor-Critic.
"""
