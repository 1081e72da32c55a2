"""The workspace language: lexer, parser, printer and diagnostics."""

from .diagnostics import Diagnostic, DslError
from .parser import parse_workspace
from .printer import print_workspace
from .workspace import Workspace

__all__ = ["Diagnostic", "DslError", "Workspace", "parse_workspace", "print_workspace"]
