"""
SurvKAN - Cox proportional-hazards Kolmogorov-Arnold networks with symbolic hazard formulas.
"""

__version__ = "0.1.0"
