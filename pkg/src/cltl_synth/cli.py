"""Command-line entry point, reached via ``python -m cltl_synth``.

Flags override values from the YAML file given by ``--config``. Exit codes:
0 success, 2 configuration error, 3 solver error, 4 budget exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .automaton import AutomatonError
from .cltl import CltlSyntaxError
from .dualtree import BudgetExceeded, TreeError
from .experiments import ConfigError, RunConfig, _atomic_write, rows_to_csv, run_synthesis, summary_text, sweep_agents
from .guards import GuardError
from .model import ModelError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET = 0, 2, 3, 4

log = logging.getLogger("cltl_synth")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cltl_synth",
        description="Synthesize decoupled multi-agent strategies for counting-LTL specifications.",
        epilog="Any RunConfig field may be set in the YAML config; flags take precedence.",
    )
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--formula", help="formula text, e.g. '(! [p1, N/2]) U [p2, N/3]'")
    p.add_argument("--agents", type=int, help="number of agents N (default 1)")
    p.add_argument("--horizon", type=int, help="number of tree iterations T (default 10)")
    p.add_argument("--prune-product", type=float, help="product pruning threshold (default 1e-6)")
    p.add_argument("--prune-single", type=float, help="single-agent pruning threshold (default 1e-4)")
    p.add_argument("--runs", type=int, help="Monte Carlo runs per initial state (default 0, off)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (default 0)")
    p.add_argument("--out", help="output path stem; .json/.txt (or .csv for sweeps) are appended")
    p.add_argument("--sweep", type=_int_list, help="comma-separated agent counts for a sweep")
    p.add_argument("--method", default="dual,flat", help="sweep methods, subset of dual,flat")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        "formula": args.formula,
        "agents": args.agents,
        "horizon": args.horizon,
        "prune_product": args.prune_product,
        "prune_single": args.prune_single,
        "runs": args.runs,
        "seed": args.seed,
        "out": args.out,
    }
    try:
        if args.config:
            cfg = RunConfig.load(args.config, **overrides)
        else:
            cfg = RunConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
        if args.sweep:
            methods = [m.strip() for m in args.method.split(",") if m.strip()]
            rows = sweep_agents(cfg, args.sweep, methods)
            text = rows_to_csv(rows)
            if cfg.out:
                _atomic_write(Path(cfg.out).with_suffix(".csv"), text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        report = run_synthesis(cfg)
        sys.stdout.write(summary_text(report))
        return EXIT_OK
    except (ConfigError, CltlSyntaxError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (AutomatonError, GuardError, TreeError, ValueError, RuntimeError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
