"""Batch figure rendering for spin-bath simulator artifacts."""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, SchemaError, check_artifact, data_check, render
