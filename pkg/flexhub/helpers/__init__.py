"""
Shared helpers: seeding, formatting and plotting.
"""
