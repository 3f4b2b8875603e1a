"""
Tests package for BandDensity.
"""
