"""Exact simulator and attack laboratory for strictly tested quantum money."""

from ._rounds import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
