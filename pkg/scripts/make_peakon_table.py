#!/usr/bin/env python3
"""Tabulate peakon speeds and conserved-functional values over (n, a)."""

import sys
from fractions import Fraction
from pathlib import Path

from hoch.experiments import run_peakon_table

if __name__ == "__main__":
    n_max = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    ok, summary = run_peakon_table(list(range(1, n_max + 1)),
                                   [Fraction(1), Fraction(2)],
                                   Path("hoch_out/peakon_table"))
    print(f"{summary['rows']} rows -> hoch_out/peakon_table/peakon_table.csv")
    sys.exit(0 if ok else 1)
