#!/usr/bin/env python3
"""
Face quality assessment toolkit entry point.

Usage:
    python fqa.py synth --out out
    python fqa.py augment --config run.json --mode bro
    python fqa.py train-head --config run.json --oracle-check
    python fqa.py eval --config run.json --attacks blur,blur_occ
    python fqa.py pipeline-sim --config run.json --k 3
    python fqa.py report --out out
"""
import sys

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
