"""
Test suite for the PUE attack detector toolkit.
"""
