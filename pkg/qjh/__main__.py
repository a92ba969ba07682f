#!/usr/bin/env python3
"""
QJH - Module entry point

This allows running the command line with: python -m qjh
"""

from .cli import main

if __name__ == "__main__":
    main()
