"""
BKS Collapse
Certificates that the BKS valuation conditions collapse a 3-dimensional space
"""

__version__ = "1.0.0"
