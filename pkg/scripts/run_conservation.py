#!/usr/bin/env python3
"""Conservation drift of H1/H2 for a mollified peakon, with the (dt, h)
refinement study, at the standard experiment parameters."""

import sys
from pathlib import Path

from hoch.experiments import run_conserve

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    N, dt = 2048, 1e-3
    ok, summary = run_conserve(
        n=n, a=1.0, delta=0.2, L=40.0, N=N, dt=dt, t_end=5.0,
        out_dir=Path(f"hoch_out/conserve_n{n}"),
        study_levels=[(N // 4, 16 * dt), (N // 2, 4 * dt), (N, dt)])
    d = summary["final_diagnostics"]
    print(f"n={n}: H1 drift {d['H1_drift']:.3e}, H2 drift {d['H2_drift']:.3e}")
    print(f"study: H1 orders {summary['study']['H1_orders']}")
    sys.exit(0 if ok else 1)
