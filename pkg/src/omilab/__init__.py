"""Verification laboratory for martingale maximal inequalities and finite approximation."""

__version__ = "0.1.0"
