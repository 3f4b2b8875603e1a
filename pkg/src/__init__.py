"""
Source package for BandDensity.
"""
