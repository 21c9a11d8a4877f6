"""
Communication hub and simulation record.
"""
