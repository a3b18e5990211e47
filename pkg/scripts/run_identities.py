#!/usr/bin/env python3
"""Sweep every exact rational identity for n = 1..N_MAX and write the report."""

import sys
from pathlib import Path

from hoch.experiments import run_identities

if __name__ == "__main__":
    n_max = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("hoch_out/identities")
    ok, summary = run_identities(n_max, out)
    print(f"{summary['checks']} checks, failures: {len(summary['failures'])}")
    sys.exit(0 if ok else 1)
