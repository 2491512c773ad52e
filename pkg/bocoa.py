#!/usr/bin/env python3
"""
Command-line entry point for the EGO factor study.

Usage:
    python bocoa.py run --configs M,S --functions f1 --dims 3 --instances 2
    python bocoa.py regress --functions f1 --dims 5
    python bocoa.py plotdata results/ertd.csv --out results/ertd_plot.csv
    python bocoa.py replay results/runs/<run_id>.json
"""

import sys
import os

# Add current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.cli import main

if __name__ == "__main__":
    sys.exit(main())
