#!/usr/bin/env python3
"""Measure the crest speed of a barely-mollified peakon against the exact
speed law c = speed_const(n) a^(2n-1)."""

import sys
from pathlib import Path

from hoch.experiments import run_speed

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1
    a = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
    ok, summary = run_speed(n=n, a=a, delta=0.005, L=40.0, N=32768, dt=5e-4,
                            t_end=5.0, out_dir=Path(f"hoch_out/speed_n{n}"))
    print(f"measured {summary['measured_speed']:.6f}, "
          f"expected {summary['expected_speed']:.6f}, "
          f"rel error {summary['rel_error']:.3%}")
    sys.exit(0 if ok else 1)
