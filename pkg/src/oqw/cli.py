"""
Command-line front end.

    oqw <mode> --config <path> [--steps N] [--out <path>] [--format csv|json] [--tolerance X]

Output files depend only on the configuration, so reruns are byte-identical.
Timing and the run summary go to stderr. Without ``--out`` (or
``output.path``) the main table is written to stdout.

Exit codes: 0 success, 1 invalid configuration, 2 engine error,
3 compare-mode discrepancy above tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .analytic import (
    ComponentSpec,
    analytic_distribution,
    classify_spectrum,
    initial_projections,
)
from .config import FORMATS, MODES, ConfigError, RunConfig, load_config
from .errors import CommutationError, OQWError
from .line import run_line
from .linalg import joint_eigendecomposition
from .walk import WalkState, evolve, position_distribution

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ENGINE = 2
EXIT_COMPARE = 3

COMPONENT_COLUMNS = (
    "kind", "weight", "lambda_abs2", "phi_abs2",
    "mean_per_step", "spread_coefficient", "mean", "spread",
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def simulate(config: RunConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Numeric distribution ``(positions, probabilities, total_trace)``."""
    n = config.steps
    if config.engine == "line":
        state = run_line(config.coin, config.rho0, n, origin=config.node)
        return state.positions, state.traces(), state.total_trace
    t = config.coin.transitions(n)
    # The graph is centred on the origin, so shift in and out.
    state = evolve(WalkState.initial({0: config.rho0}, config.tolerances.state), t, n)
    dist = position_distribution(state)
    ks = np.array(list(dist), dtype=np.int64) + config.node
    ps = np.array(list(dist.values()))
    return ks, ps, state.total_trace


def _decompose(config: RunConfig):
    tol = config.tolerances
    decomp = joint_eigendecomposition(
        config.coin.B, config.coin.C, tol=tol.normalization, cluster_tol=tol.cluster
    )
    weights = initial_projections(decomp, config.rho0, tol.state)
    return decomp, weights


def analytic(config: RunConfig):
    decomp, weights = _decompose(config)
    profile = analytic_distribution(decomp, weights, config.steps)
    components = classify_spectrum(
        decomp, weights, tol=config.tolerances.cluster, soliton_tol=config.tolerances.soliton
    )
    return profile.positions + config.node, profile.probabilities, components


def classify(config: RunConfig) -> list[ComponentSpec]:
    decomp, weights = _decompose(config)
    return classify_spectrum(
        decomp, weights, tol=config.tolerances.cluster, soliton_tol=config.tolerances.soliton
    )


def compare_tables(ks_a, ps_a, ks_b, ps_b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align two distributions on the union of their sites (missing sites are 0)."""
    ks = np.union1d(ks_a, ks_b)
    a = np.zeros(ks.shape)
    b = np.zeros(ks.shape)
    a[np.searchsorted(ks, ks_a)] = ps_a
    b[np.searchsorted(ks, ks_b)] = ps_b
    return ks, a, b


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _components_csv(components, n) -> str:
    rows = []
    for c in components:
        d = c.to_dict(n)
        rows.append([
            d["kind"],
            *(_fmt(d[k]) for k in COMPONENT_COLUMNS[1:6]),
            *((_fmt(d["mean"]), _fmt(d["spread"])) if n is not None else ("", "")),
        ])
    return _table_csv(COMPONENT_COLUMNS, rows)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _sidecar(path: Path | None) -> Path | None:
    return None if path is None else path.with_name(path.stem + ".components.csv")


def run(config: RunConfig) -> int:
    """Execute one configured run, write its outputs, and return the exit code."""
    start = time.perf_counter()
    n = config.steps
    doc: dict = {"mode": config.mode, "n": n, "coin": config.coin_label}
    status = EXIT_OK
    try:
        if config.mode == "simulate":
            ks, ps, trace = simulate(config)
            doc.update(engine=config.engine, total_trace=trace)
            header, rows = ("k", "probability"), [[int(k), _fmt(p)] for k, p in zip(ks, ps)]
            components = None
        elif config.mode == "analytic":
            ks, ps, components = analytic(config)
            header, rows = ("k", "probability"), [[int(k), _fmt(p)] for k, p in zip(ks, ps)]
        elif config.mode == "classify":
            components = classify(config)
            ks = ps = None
        else:
            ks_num, ps_num, trace = simulate(config)
            ks_an, ps_an, components = analytic(config)
            ks, ps, ps_an = compare_tables(ks_num, ps_num, ks_an, ps_an)
            diff = np.abs(ps - ps_an)
            discrepancy = float(diff.max()) if diff.size else 0.0
            passed = discrepancy <= config.tolerances.compare
            doc.update(
                engine=config.engine,
                total_trace=trace,
                discrepancy=discrepancy,
                tolerance=config.tolerances.compare,
                passed=passed,
            )
            header = ("k", "probability", "analytic_probability", "abs_difference")
            rows = [
                [int(k), _fmt(a), _fmt(b), _fmt(d)] for k, a, b, d in zip(ks, ps, ps_an, diff)
            ]
            if not passed:
                status = EXIT_COMPARE
    except CommutationError as exc:
        print(f"error: {exc} (commutator norm {exc.norm:.6g})", file=sys.stderr)
        return EXIT_ENGINE
    except OQWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE

    if ks is not None:
        doc["distribution"] = {"k": [int(k) for k in ks], "probability": [float(p) for p in ps]}
        if config.mode == "compare":
            doc["distribution"]["analytic_probability"] = [float(p) for p in ps_an]
    if components is not None:
        doc["components"] = [c.to_dict(n) for c in components]

    if config.output_format == "json":
        _emit(json.dumps(doc, indent=2) + "\n", config.output_path)
    elif config.mode == "classify":
        _emit(_components_csv(components, n), config.output_path)
    else:
        _emit(_table_csv(header, rows), config.output_path)
        if components is not None and config.output_path is not None:
            _emit(_components_csv(components, n), _sidecar(config.output_path))

    elapsed = time.perf_counter() - start
    summary = [f"mode={config.mode}", f"n={n}"]
    if "total_trace" in doc:
        summary.append(f"total_trace={doc['total_trace']:.17g}")
    if "discrepancy" in doc:
        summary.append(f"discrepancy={doc['discrepancy']:.3e}")
        summary.append("PASS" if doc["passed"] else "FAIL")
    summary.append(f"wall_time={elapsed:.3f}s")
    print(" ".join(summary), file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oqw", description="Open quantum walks on the line.")
    parser.add_argument("mode", choices=MODES, help="what to compute (overrides the config's mode)")
    parser.add_argument("--config", required=True, type=Path, help="TOML run configuration")
    parser.add_argument("--steps", type=int, help="number of steps n (overrides the config)")
    parser.add_argument("--out", type=Path, help="output file; stdout when omitted")
    parser.add_argument("--format", choices=FORMATS, dest="fmt", help="output format (default csv)")
    parser.add_argument("--tolerance", type=float, help="compare-mode tolerance")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config,
            mode=args.mode,
            steps=args.steps,
            out=args.out,
            fmt=args.fmt,
            tolerance=args.tolerance,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
