"""
Test package for supportlab.
"""
