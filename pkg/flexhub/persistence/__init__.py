"""
Checkpoint files and the key-value storage that indexes them.
"""
