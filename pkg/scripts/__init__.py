"""
Helper scripts package.
"""

