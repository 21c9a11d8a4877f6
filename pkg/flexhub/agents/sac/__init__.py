"""
Soft Actor-Critic in PyTorch.
"""
