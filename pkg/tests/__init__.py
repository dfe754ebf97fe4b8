"""
Test suite for the metameric hologram toolkit.
"""
