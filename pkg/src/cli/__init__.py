"""
Command line interface for copuladep
"""

from .commands import run
from .parser import build_parser

__all__ = ["run", "build_parser"]
