#!/usr/bin/env python3
"""
CLI for the fluctlab experiment runner

Run a verification experiment from a JSON config and write its report.
"""

import sys

from processors.experiment_runner import main

if __name__ == "__main__":
    sys.exit(main())
