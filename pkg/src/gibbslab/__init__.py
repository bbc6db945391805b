"""Desk-scale numerical laboratory for thermal state preparation with Davies
generators restricted to promised subspaces."""

__version__ = "0.1.0"
