"""
Command-line sub-command handlers.
"""
