#!/usr/bin/env python3
"""SPIC command-line entry point.

Usage:
    python scripts/spic.py make-synthetic
    python scripts/spic.py train data/synthetic
    python scripts/spic.py sweep data/synthetic --plots
"""

import sys
from pathlib import Path

# Add project root to path (so src imports work when running as script)
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.bench.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
