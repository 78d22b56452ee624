"""
PUE Attack Detector - Source Package

Channel simulation, recurrent detectors and the evaluation harness.
"""

__version__ = '0.1.0'
