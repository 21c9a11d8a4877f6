"""
Gymnasium environment: observation, action mapping and reward.
"""
