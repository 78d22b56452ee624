"""
PUE Attack Detector - Utilities Module
Constants, validators, seeded random streams and configuration loading.
"""
