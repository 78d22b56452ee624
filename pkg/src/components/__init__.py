"""
PUE Attack Detector Components

Detector scoring, experiment harness, checkpoints and file export.
"""

__version__ = '0.1.0'
