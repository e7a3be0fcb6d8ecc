"""
critspec: critical-orbit spectra of rational maps and summability diagnostics.
"""

__version__ = "1.0.0"
