# scripts/survkan.py
"""
Command-line entry point: python scripts/survkan.py <command> [options]
"""
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
