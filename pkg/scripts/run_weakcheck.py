#!/usr/bin/env python3
"""Weak-solution residual scan over the 3x3 bump grid plus the wrong-speed
controls."""

import sys
from pathlib import Path

from hoch.experiments import run_weakcheck

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    levels = int(sys.argv[2]) if len(sys.argv) > 2 else 4
    ok, summary = run_weakcheck(n, 1.0, levels, Path(f"hoch_out/weakcheck_n{n}"))
    worst = max(abs(b["scan"][-1]["residual"]) / b["scan"][-1]["scale"]
                for b in summary["bumps"])
    print(f"worst relative residual {worst:.2e} at level {levels}; "
          f"wrong-speed sign flip: "
          f"{summary['wrong_speed_control']['sign_flips_with_speed_error']}")
    sys.exit(0 if ok else 1)
