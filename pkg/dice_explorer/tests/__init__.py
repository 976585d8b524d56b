"""
Test suite for DICE Explorer.
"""
