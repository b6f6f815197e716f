"""Command-line front end: compute | transform | verify | sweep.

stdout carries only JSON; diagnostics go to stderr. Exit codes: 0 success
(verify: all claims pass), 1 verification violation, 2 malformed input.
The thread count comes from --threads or the APCHAR_THREADS environment
variable and never changes the output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .characteristic import POLICIES, ap_norm, default_policy
from .errors import ApCharError
from .io import dumps_17, read_weight, write_weight
from .verification import (
    VerificationReport,
    a2_identity_suite,
    below_cut_suite,
    bm_report,
    check_below_cut,
    check_cutoff_monotonicity,
    convergence_report,
    phi_suite,
    theorem1_suite,
)
from .weights import (
    Exponent,
    ExponentPair,
    GridWeight,
    bm_regularize,
    cutoff_above,
    cutoff_below,
    truncate_two_sided,
)

CLAIMS = ("theorem1", "below-cut", "a2-identity", "phi", "convergence", "bm")

# randomized-suite sizes used when verify/sweep runs without an input weight
_CLI_TRIALS = {"cut_1d": 100, "cut_2d": 10, "a2": 1000, "phi_sets": 20}


@dataclass
class RunConfig:
    """Parsed invocation: one subcommand plus its validated parameters."""

    command: str
    input: Path | None = None
    output: Path | None = None
    p1: Exponent | None = None
    p2: Exponent | None = None
    a: float | None = None
    above: float | None = None
    below: float | None = None
    truncate: int | None = None
    bm_s: float | None = None
    policy: str | None = None
    mode: str = "accurate"
    claim: str | None = None
    seed: int = 0
    threads: int = 1

    def pair(self) -> ExponentPair:
        return ExponentPair(self.p1, self.p2)


def _exponent_token(token: str) -> Exponent:
    try:
        return Exponent.from_token(token)
    except ApCharError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(token: str) -> int:
    value = int(token)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {token}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apchar",
        description="Compute generalized Muckenhoupt characteristics of grid "
                    "weights, apply cut-off/truncation operators, and verify "
                    "the monotonicity and identity claims behind them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pair(p):
        p.add_argument("--p1", type=_exponent_token, default=Exponent(1.0),
                       help="first exponent: 'inf', '-inf', '0', or a finite "
                            "nonzero decimal (default 1)")
        p.add_argument("--p2", type=_exponent_token, default=Exponent(-1.0),
                       help="second exponent, must satisfy p1 > p2 (default -1)")

    def add_common(p, default_mode):
        p.add_argument("--policy", choices=POLICIES, default=None,
                       help="cube enumeration (default: exhaustive for d <= 2, dyadic above)")
        p.add_argument("--mode", choices=("fast", "accurate"), default=default_mode,
                       help=f"accuracy mode (default {default_mode})")
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker threads (default: APCHAR_THREADS or 1)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized suites (default 0)")

    pc = sub.add_parser("compute", help="compute the characteristic of a weight file")
    pc.add_argument("--input", required=True, help="weight file (JSON, or CSV for d = 1)")
    add_pair(pc)
    add_common(pc, "fast")

    pt = sub.add_parser("transform", help="apply exactly one pointwise operator")
    pt.add_argument("--input", required=True)
    pt.add_argument("--output", required=True, help="path for the transformed weight")
    pt.add_argument("--above", type=float, help="cut from above: min(w, a)")
    pt.add_argument("--below", type=float, help="cut from below: max(w, a)")
    pt.add_argument("--truncate", type=_positive_int, help="clamp to [1/n, n]")
    pt.add_argument("--bm-s", dest="bm_s", type=float,
                    help="rational regularisation (s + w)/(s^2 + s*w + 1)")

    pv = sub.add_parser("verify", help="run one verification claim, report JSON")
    pv.add_argument("--claim", required=True, choices=CLAIMS)
    pv.add_argument("--input", help="weight file; omit to run the seeded random suite")
    pv.add_argument("--a", type=float, default=None,
                    help="cut level for theorem1/below-cut on an input weight")
    add_pair(pv)
    add_common(pv, "accurate")

    ps = sub.add_parser("sweep", help="run every claim in sequence, report a JSON array")
    ps.add_argument("--input", help="weight file; omit to run seeded random suites")
    ps.add_argument("--a", type=float, default=None,
                    help="cut level for the cut claims (default: sample median)")
    add_pair(ps)
    add_common(ps, "accurate")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    threads = args.threads if getattr(args, "threads", None) else None
    if threads is None:
        env = os.environ.get("APCHAR_THREADS", "").strip()
        threads = int(env) if env else 1
        if threads < 1:
            raise ApCharError(f"APCHAR_THREADS must be >= 1, got {env!r}")
    return RunConfig(
        command=args.command,
        input=Path(args.input) if getattr(args, "input", None) else None,
        output=Path(args.output) if getattr(args, "output", None) else None,
        p1=getattr(args, "p1", None),
        p2=getattr(args, "p2", None),
        a=getattr(args, "a", None),
        above=getattr(args, "above", None),
        below=getattr(args, "below", None),
        truncate=getattr(args, "truncate", None),
        bm_s=getattr(args, "bm_s", None),
        policy=getattr(args, "policy", None),
        mode=getattr(args, "mode", "accurate"),
        claim=getattr(args, "claim", None),
        seed=getattr(args, "seed", 0),
        threads=threads,
    )


def cmd_compute(cfg: RunConfig) -> int:
    w = read_weight(cfg.input)
    result = ap_norm(w, cfg.pair(), policy=cfg.policy, mode=cfg.mode, threads=cfg.threads)
    print(dumps_17(result.to_dict()))
    return 0


def cmd_transform(cfg: RunConfig) -> int:
    w = read_weight(cfg.input)
    chosen = [
        name
        for name, value in (("above", cfg.above), ("below", cfg.below),
                            ("truncate", cfg.truncate), ("bm-s", cfg.bm_s))
        if value is not None
    ]
    if len(chosen) != 1:
        raise ApCharError(
            f"transform requires exactly one of --above/--below/--truncate/--bm-s, got {chosen or 'none'}"
        )
    if cfg.above is not None:
        out = cutoff_above(w, cfg.above)
    elif cfg.below is not None:
        out = cutoff_below(w, cfg.below)
    elif cfg.truncate is not None:
        out = truncate_two_sided(w, cfg.truncate)
    else:
        out = bm_regularize(w, cfg.bm_s)
    write_weight(out, cfg.output)
    return 0


def _default_cut(w: GridWeight) -> float:
    return float(np.quantile(w.flat, 0.5))


def _run_claim(cfg: RunConfig, claim: str, weight: GridWeight | None,
               provenance: str) -> VerificationReport:
    pair = cfg.pair()
    if claim in ("theorem1", "below-cut"):
        check = check_cutoff_monotonicity if claim == "theorem1" else check_below_cut
        suite = theorem1_suite if claim == "theorem1" else below_cut_suite
        if weight is not None:
            a = cfg.a if cfg.a is not None else _default_cut(weight)
            report = check(weight, pair, a, policy=cfg.policy)
        else:
            report = suite(seed=cfg.seed, trials_1d=_CLI_TRIALS["cut_1d"],
                           trials_2d=_CLI_TRIALS["cut_2d"])
    elif claim == "a2-identity":
        report = a2_identity_suite(seed=cfg.seed, trials=_CLI_TRIALS["a2"], weight=weight)
    elif claim == "phi":
        # parameter sets come from seeded random partitions, never the input file
        report = phi_suite(seed=cfg.seed, n_sets=_CLI_TRIALS["phi_sets"])
        provenance = f"seed:{cfg.seed}"
    elif claim == "convergence":
        w = weight if weight is not None else _seeded_weight(cfg.seed)
        report = convergence_report(w, pair, policy=cfg.policy)
    elif claim == "bm":
        w = weight if weight is not None else _seeded_weight(cfg.seed)
        report = bm_report(w, pair, policy=cfg.policy)
    else:  # unreachable: argparse restricts choices
        raise ApCharError(f"unknown claim {claim!r}")
    report.params["weight_source"] = provenance
    return report


def _seeded_weight(seed: int) -> GridWeight:
    from .verification import random_lognormal_weight

    rng = np.random.default_rng(seed)
    return random_lognormal_weight(rng, (64,), 2.0)


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.input is not None:
        weight = read_weight(cfg.input)
        if cfg.claim in ("theorem1", "below-cut") and cfg.a is None:
            raise ApCharError(f"--claim {cfg.claim} with --input requires --a")
        provenance = str(cfg.input)
    else:
        weight = None
        provenance = f"seed:{cfg.seed}"
    report = _run_claim(cfg, cfg.claim, weight, provenance)
    print(dumps_17(report.to_dict()))
    return 0 if report.passed else 1


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.input is not None:
        weight = read_weight(cfg.input)
        provenance = str(cfg.input)
        if cfg.a is None:
            cfg.a = _default_cut(weight)
    else:
        weight = None
        provenance = f"seed:{cfg.seed}"
    reports = [_run_claim(cfg, claim, weight, provenance) for claim in CLAIMS]
    print(dumps_17([r.to_dict() for r in reports]))
    return 0 if all(r.passed for r in reports) else 1


_VALUE_FLAGS = ("--p1", "--p2", "--a", "--above", "--below", "--bm-s")


def _merge_negative_values(argv) -> list:
    """Join '--p2 -inf' style pairs so argparse does not read '-inf' as a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_negative_values(list(argv)))
    try:
        cfg = _config_from_args(args)
        if cfg.command == "compute":
            return cmd_compute(cfg)
        if cfg.command == "transform":
            return cmd_transform(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        return cmd_sweep(cfg)
    except (ApCharError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
