"""
flexhub - co-simulation hub and RL agents for multi-building demand flexibility.
"""

__version__ = "0.1.0"
