"""
Tests package for SurvKAN.
"""
