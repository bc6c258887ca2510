#!/usr/bin/env python3
"""
Entry point for the SIRM-ROM benchmark CLI.

With --single-thread the BLAS thread pools are pinned before numpy is imported.
"""

import os
import sys

if "--single-thread" in sys.argv:
    for name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[name] = "1"

# Add the src directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from sirm_rom.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
