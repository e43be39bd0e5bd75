"""
Main entry point for the oversampling package.
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
