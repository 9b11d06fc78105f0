"""Groundwater quality index prediction with boosted trees and DE-weighted fusion."""

__version__ = "0.1.0"
