"""Reduced-order subchannel thermal-hydraulic oracle."""
