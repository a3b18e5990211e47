"""Command-line entry point: `hoch <experiment> [flags]`.

Every experiment accepts --config FILE holding flat `key = value` lines whose
keys are the flag names; explicit flags override config values, which override
the built-in defaults.  Artifacts (CSV rows plus a JSON summary with
"schema": 1) are written to --out.  Exit status is 0 iff every per-item
contract of the run passed.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import experiments


def parse_int_list(text: str):
    """Accept '1..4' ranges and '1,2,3' lists."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def parse_float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok]


def parse_fraction_list(text: str):
    return [Fraction(tok) for tok in text.split(",") if tok]


def load_config(path: str) -> dict:
    """Flat key-value text: `key = value` per line, '#' comments."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


_CONVERT = {
    "n": int, "n_max": int, "N": int, "levels": int, "seed": int,
    "record_every": int,
    "a": float, "delta": float, "L": float, "dt": float, "t_end": float,
    "tol": float, "fit_skip": float, "bump_offset": float, "bump_delta": float,
    "filter_strength": float,
    "eps": parse_float_list, "n_list": parse_int_list,
    "a_list": parse_fraction_list,
    "study": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "uncapped": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "out": str,
}

N_MAX_CAP = 64   # identity sweeps are polynomial in n; the cap bounds bigint growth


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI value > config value > built-in default."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key, default in defaults.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            resolved[key] = cli_val
        elif key in cfg:
            resolved[key] = _CONVERT[key](cfg[key])
        else:
            resolved[key] = default
    return resolved


def _add_common(sub, defaults: dict):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--out", help=f"output directory (default {defaults['out']})")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hoch",
        description="Higher-order Camassa-Holm toolkit: identities, peakons, "
                    "conservation, speed, weak residuals, orbital stability.")
    subs = parser.add_subparsers(dest="command", required=True)

    d_ident = {"n_max": 8, "uncapped": False, "out": "hoch_out/identities"}
    s = subs.add_parser("identities", help="exact rational identity sweep")
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--uncapped", action="store_const", const=True,
                   help=f"allow n-max beyond the default cap of {N_MAX_CAP}")
    _add_common(s, d_ident)

    d_table = {"n_list": [1, 2, 3, 4], "a_list": [Fraction(1), Fraction(2)],
               "out": "hoch_out/peakon_table"}
    s = subs.add_parser("peakon-table", help="CSV of peakon speeds and functionals")
    s.add_argument("--n", dest="n_list", type=parse_int_list,
                   help="orders, e.g. 1..4 or 1,2,3")
    s.add_argument("--a", dest="a_list", type=parse_fraction_list,
                   help="amplitudes, e.g. 1,2 or 1/2")
    _add_common(s, d_table)

    d_cons = {"n": 2, "a": 1.0, "delta": 0.2, "L": 40.0, "N": 2048,
              "dt": 1e-3, "t_end": 5.0, "tol": 1e-4, "study": False,
              "record_every": 50, "filter_strength": 0.0,
              "out": "hoch_out/conserve"}
    s = subs.add_parser("conserve", help="H1/H2 drift of a mollified-peakon run")
    s.add_argument("--n", type=int)
    s.add_argument("--a", type=float)
    s.add_argument("--delta", type=float, help="mollifier width")
    s.add_argument("--L", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--tol", type=float, help="relative drift tolerance")
    s.add_argument("--study", action="store_const", const=True,
                   help="run the 3-level (dt, h) refinement study")
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--filter-strength", dest="filter_strength", type=float,
                   help="rhs filter exponent; 0 keeps the run fully conservative")
    _add_common(s, d_cons)

    d_speed = {"n": 1, "a": 1.0, "delta": 0.005, "L": 40.0, "N": 32768,
               "dt": 5e-4, "t_end": 5.0, "tol": 0.02, "fit_skip": 0.2,
               "record_every": 25, "filter_strength": 36.0,
               "out": "hoch_out/speed"}
    s = subs.add_parser("speed", help="measured crest speed vs the exact speed law")
    s.add_argument("--n", type=int)
    s.add_argument("--a", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--L", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--tol", type=float, help="relative speed tolerance")
    s.add_argument("--fit-skip", dest="fit_skip", type=float,
                   help="fraction of the run excluded from the fit")
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--filter-strength", dest="filter_strength", type=float)
    _add_common(s, d_speed)

    d_weak = {"n": 2, "a": 1.0, "levels": 4, "out": "hoch_out/weakcheck"}
    s = subs.add_parser("weakcheck", help="weak-solution residual scan")
    s.add_argument("--n", type=int)
    s.add_argument("--a", type=float)
    s.add_argument("--levels", type=int)
    _add_common(s, d_weak)

    d_stab = {"n": 2, "a": 1.0, "eps": [0.01, 0.04, 0.09], "delta": 0.003,
              "L": 40.0, "N": 32768, "dt": 5e-4, "t_end": 10.0, "seed": None,
              "record_every": 100, "filter_strength": 36.0,
              "out": "hoch_out/stability"}
    s = subs.add_parser("stability", help="orbital-stability scaling experiment")
    s.add_argument("--n", type=int)
    s.add_argument("--a", type=float)
    s.add_argument("--eps", type=parse_float_list, help="H1 perturbation sizes")
    s.add_argument("--delta", type=float)
    s.add_argument("--L", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--seed", type=int, help="randomize the bump placement")
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--filter-strength", dest="filter_strength", type=float)
    _add_common(s, d_stab)

    d_suite = {"out": "hoch_out/functional_suite"}
    s = subs.add_parser("functional-suite",
                        help="crest-split identity suite CSV on the cone profiles")
    _add_common(s, d_suite)

    args = parser.parse_args(argv)

    if args.command == "identities":
        p = _resolve(args, d_ident)
        if p["n_max"] > N_MAX_CAP and not p["uncapped"]:
            parser.error(f"--n-max {p['n_max']} exceeds the cap {N_MAX_CAP}; "
                         "pass --uncapped to override")
        spec = experiments.ExperimentSpec("identities", p, Path(p["out"]))
        ok, summary = experiments.run_identities(p["n_max"], spec.output_dir)
        print(f"identities n=1..{p['n_max']}: "
              f"{summary['checks']} checks, {len(summary['failures'])} failures")
    elif args.command == "peakon-table":
        p = _resolve(args, d_table)
        spec = experiments.ExperimentSpec("peakon-table", p, Path(p["out"]))
        ok, summary = experiments.run_peakon_table(p["n_list"], p["a_list"],
                                                   spec.output_dir)
        print(f"peakon-table: {summary['rows']} rows -> {p['out']}")
    elif args.command == "conserve":
        p = _resolve(args, d_cons)
        levels = None
        if p["study"]:
            # joint (dt, h) refinement with dt ~ h^2
            levels = [(p["N"] // 4, 16 * p["dt"]), (p["N"] // 2, 4 * p["dt"]),
                      (p["N"], p["dt"])]
        spec = experiments.ExperimentSpec("conserve", p, Path(p["out"]))
        ok, summary = experiments.run_conserve(
            p["n"], p["a"], p["delta"], p["L"], p["N"], p["dt"], p["t_end"],
            spec.output_dir, tol=p["tol"], study_levels=levels,
            record_every=p["record_every"], filter_strength=p["filter_strength"])
        d = summary["final_diagnostics"]
        print(f"conserve n={p['n']}: status={summary['status']} "
              f"H1 drift={d['H1_drift']:.3e} H2 drift={d['H2_drift']:.3e}")
    elif args.command == "speed":
        p = _resolve(args, d_speed)
        spec = experiments.ExperimentSpec("speed", p, Path(p["out"]))
        ok, summary = experiments.run_speed(
            p["n"], p["a"], p["delta"], p["L"], p["N"], p["dt"], p["t_end"],
            spec.output_dir, tol=p["tol"], fit_skip=p["fit_skip"],
            record_every=p["record_every"], filter_strength=p["filter_strength"])
        print(f"speed n={p['n']}: measured={summary['measured_speed']:.6f} "
              f"expected={summary['expected_speed']:.6f} "
              f"rel_error={summary['rel_error']:.2%}")
    elif args.command == "weakcheck":
        p = _resolve(args, d_weak)
        tol = 1e-6 if p["levels"] >= 4 else 1e-5
        spec = experiments.ExperimentSpec("weakcheck", p, Path(p["out"]))
        ok, summary = experiments.run_weakcheck(p["n"], p["a"], p["levels"],
                                                spec.output_dir, residual_tol=tol)
        worst = max(abs(b["scan"][-1]["residual"]) / b["scan"][-1]["scale"]
                    for b in summary["bumps"])
        print(f"weakcheck n={p['n']}: worst relative residual {worst:.2e} "
              f"over {len(summary['bumps'])} bumps")
    elif args.command == "stability":
        p = _resolve(args, d_stab)
        spec = experiments.ExperimentSpec("stability", p, Path(p["out"]),
                                          seed=p["seed"])
        ok, summary = experiments.run_stability(
            p["n"], p["a"], p["eps"], p["delta"], p["L"], p["N"], p["dt"],
            p["t_end"], spec.output_dir, seed=p["seed"],
            record_every=p["record_every"],
            filter_strength=p["filter_strength"])
        r = summary["result"]
        print(f"stability n={p['n']}: sup distances {r['sup_distances']} "
              f"exponent={r['fitted_exponent']:.3f}")
    elif args.command == "functional-suite":
        p = _resolve(args, d_suite)
        spec = experiments.ExperimentSpec("functional-suite", p, Path(p["out"]))
        ok, summary = experiments.run_functional_suite(spec.output_dir)
        print(f"functional-suite: {summary['rows']} identity rows -> {p['out']}")
    else:  # pragma: no cover
        parser.error(f"unknown command {args.command}")
        return 2

    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
