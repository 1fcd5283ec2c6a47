"""
LineGuard Application Package
Line-level semantic supervision for code generation: corpora, guarded decoding and metrics
"""

__version__ = "0.1.0"
__author__ = "LineGuard Team"
