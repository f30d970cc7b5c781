"""
Command-Line Interface Module

Entry points for the fluctlab batch runner.
"""

__all__ = ['fluctlab']
