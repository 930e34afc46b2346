"""Pseudospectral Zakharov-Kuznetsov workbench on the cylinder R x T_lambda."""

__version__ = "0.1.0"
