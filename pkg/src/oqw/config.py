"""
Run configuration files.

A configuration is a TOML document::

    mode = "compare"            # simulate | analytic | classify | compare
    steps = 90
    engine = "line"             # numeric engine: line | graph

    [coin]
    preset = "eq12"             # B = diag(1, cos t), C = diag(0, sin t)
    theta_pi = [1, 3]           # t = pi * 1/3; or `theta = <radians>`

    [initial]
    node = 0
    p = 0.2
    q = 0.8
    z = [0.1, 0.0]              # complex entries are [re, im] pairs

    [tolerances]
    compare = 1e-10

    [output]
    path = "trap.csv"
    format = "csv"              # csv | json

Instead of a preset, ``[coin]`` may give ``B`` and ``C`` as lists of rows
of ``[re, im]`` pairs, and ``[initial]`` may give ``rho`` the same way in
place of ``p``/``q``/``z``. Every matrix invariant is checked at load time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .analytic import SOLITON_TOL
from .errors import OQWError
from .line import LineCoin, diagonal_trap_coin
from .linalg import CLUSTER_TOL, max_abs
from .walk import NORMALIZATION_TOL, STATE_TOL

__all__ = ["MODES", "FORMATS", "ENGINES", "ConfigError", "RunConfig", "Tolerances", "load_config"]

MODES = ("simulate", "analytic", "classify", "compare")
FORMATS = ("csv", "json")
ENGINES = ("line", "graph")
PRESETS = ("eq12",)


class ConfigError(OQWError, ValueError):
    """Configuration could not be parsed or failed validation."""


@dataclass(frozen=True)
class Tolerances:
    normalization: float = NORMALIZATION_TOL
    state: float = STATE_TOL
    cluster: float = CLUSTER_TOL
    soliton: float = SOLITON_TOL
    compare: float = 1e-10


@dataclass(frozen=True, eq=False)
class RunConfig:
    mode: str
    coin: LineCoin
    coin_label: str
    rho0: np.ndarray
    steps: int | None = None
    node: int = 0
    engine: str = "line"
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_path: Path | None = None
    output_format: str = "csv"


class _Source:
    """Raw TOML text, used to point diagnostics at a line."""

    def __init__(self, path: Path, text: str):
        self.path = path
        self.lines = text.splitlines()

    def where(self, section: str | None, key: str) -> str:
        current = None
        for lineno, line in enumerate(self.lines, 1):
            stripped = line.strip()
            header = re.match(r"^\[([^\[\]]+)\]", stripped)
            if header:
                current = header.group(1).strip()
                continue
            if current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
                return f"{self.path}:{lineno}"
        return str(self.path)

    def fail(self, section: str | None, key: str, message: str) -> ConfigError:
        name = f"{section}.{key}" if section else key
        return ConfigError(f"{self.where(section, key)}: {name}: {message}")


def _complex_matrix(src: _Source, section: str, key: str, value: Any) -> np.ndarray:
    err = src.fail(section, key, "expected a square list of rows of [re, im] pairs")
    if not isinstance(value, list) or not value:
        raise err
    rows = []
    for row in value:
        if not isinstance(row, list) or len(row) != len(value):
            raise err
        entries = []
        for entry in row:
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                entries.append(complex(entry))
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                entries.append(complex(entry[0], entry[1]))
            else:
                raise err
        rows.append(entries)
    arr = np.array(rows, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise src.fail(section, key, "non-finite entry")
    return arr


def _complex_scalar(src: _Source, section: str, key: str, value: Any) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        return complex(value[0], value[1])
    raise src.fail(section, key, "expected a number or an [re, im] pair")


def _number(src: _Source, section: str | None, key: str, value: Any, kind=float):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    if not ok:
        raise src.fail(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {value!r}")
    return kind(value)


def _parse_coin(src: _Source, table: dict, tol: float) -> tuple[LineCoin, str]:
    if "preset" in table:
        preset = table["preset"]
        if preset not in PRESETS:
            raise src.fail("coin", "preset", f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
        if "theta_pi" in table:
            frac = table["theta_pi"]
            if (
                not isinstance(frac, list)
                or len(frac) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in frac)
                or frac[1] == 0
            ):
                raise src.fail("coin", "theta_pi", "expected [numerator, denominator] integers")
            theta = math.pi * frac[0] / frac[1]
            label = f"eq12(theta=pi*{frac[0]}/{frac[1]})"
        elif "theta" in table:
            theta = _number(src, "coin", "theta", table["theta"])
            label = f"eq12(theta={theta!r})"
        else:
            raise src.fail("coin", "theta", "preset 'eq12' needs `theta` or `theta_pi`")
        return diagonal_trap_coin(theta), label
    for key in ("B", "C"):
        if key not in table:
            raise src.fail("coin", key, "missing (give `preset` or both `B` and `C`)")
    B = _complex_matrix(src, "coin", "B", table["B"])
    C = _complex_matrix(src, "coin", "C", table["C"])
    if B.shape != C.shape:
        raise src.fail("coin", "C", f"shape {C.shape} does not match B {B.shape}")
    residual = max_abs(B.conj().T @ B + C.conj().T @ C - np.eye(B.shape[0]))
    if residual > tol:
        raise src.fail(
            "coin", "B",
            f"normalization violated: ||B^+B + C^+C - I||_max = {residual:.6g} (tolerance {tol:g})",
        )
    return LineCoin(B, C, tol), "explicit"


def _parse_initial(src: _Source, table: dict, dim: int, tol: float) -> tuple[np.ndarray, int]:
    node = _number(src, "initial", "node", table.get("node", 0), int)
    if "rho" in table:
        rho = _complex_matrix(src, "initial", "rho", table["rho"])
        key = "rho"
    elif "p" in table or "q" in table:
        if dim != 2:
            raise src.fail("initial", "p", f"p/q/z form needs a 2-dimensional coin, coin has dimension {dim}")
        p = _number(src, "initial", "p", table.get("p", 0.0))
        q = _number(src, "initial", "q", table.get("q", 0.0))
        z = _complex_scalar(src, "initial", "z", table.get("z", 0.0))
        rho = np.array([[p, z], [z.conjugate(), q]], dtype=np.complex128)
        key = "p"
    else:
        raise src.fail("initial", "rho", "missing (give `rho` or `p`, `q`, `z`)")
    if rho.shape != (dim, dim):
        raise src.fail("initial", key, f"shape {rho.shape} does not match coin dimension {dim}")
    herm = max_abs(rho - rho.conj().T)
    if herm > tol:
        raise src.fail("initial", key, f"density matrix not Hermitian (residual {herm:.6g})")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if min_eig < -tol:
        raise src.fail("initial", key, f"density matrix not positive semidefinite (min eigenvalue {min_eig:.6g})")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tol:
        raise src.fail("initial", key, f"trace {tr:.6g} differs from 1 (residual {abs(tr - 1.0):.6g})")
    return rho, node


def _parse_tolerances(src: _Source, table: dict) -> Tolerances:
    values = {}
    known = Tolerances.__dataclass_fields__
    for key, value in table.items():
        if key not in known:
            raise src.fail("tolerances", key, f"unknown tolerance; known: {', '.join(known)}")
        v = _number(src, "tolerances", key, value)
        if not v > 0:
            raise src.fail("tolerances", key, "must be positive")
        values[key] = v
    return Tolerances(**values)


def load_config(
    path: str | Path,
    *,
    mode: str | None = None,
    steps: int | None = None,
    out: str | Path | None = None,
    fmt: str | None = None,
    tolerance: float | None = None,
) -> RunConfig:
    """
    Read and validate a configuration file.

    Keyword arguments override the corresponding file fields (as the
    command-line flags do). ``tolerance`` overrides ``tolerances.compare``.

    Raises
    ------
    ConfigError
        On unreadable or malformed files and on any failed invariant. The
        message names the file position, the field, and the residual.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from exc
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    src = _Source(path, text)

    for key in doc:
        if key not in ("mode", "steps", "engine", "coin", "initial", "tolerances", "output"):
            raise src.fail(None, key, "unknown key")
    for section in ("coin", "initial", "tolerances", "output"):
        if section in doc and not isinstance(doc[section], dict):
            raise src.fail(None, section, "expected a table")

    mode = mode if mode is not None else doc.get("mode")
    if mode not in MODES:
        raise src.fail(None, "mode", f"expected one of {', '.join(MODES)}, got {mode!r}")
    engine = doc.get("engine", "line")
    if engine not in ENGINES:
        raise src.fail(None, "engine", f"expected one of {', '.join(ENGINES)}, got {engine!r}")
    if steps is None and "steps" in doc:
        steps = _number(src, None, "steps", doc["steps"], int)
    if steps is not None and steps < 0:
        raise src.fail(None, "steps", f"must be nonnegative, got {steps}")
    if steps is None and mode != "classify":
        raise src.fail(None, "steps", f"required for mode {mode!r}")

    tolerances = _parse_tolerances(src, doc.get("tolerances", {}))
    if tolerance is not None:
        if not tolerance > 0:
            raise ConfigError(f"--tolerance must be positive, got {tolerance!r}")
        tolerances = replace(tolerances, compare=tolerance)

    if "coin" not in doc:
        raise src.fail(None, "coin", "missing [coin] table")
    coin, label = _parse_coin(src, doc["coin"], tolerances.normalization)
    if "initial" not in doc:
        raise src.fail(None, "initial", "missing [initial] table")
    rho0, node = _parse_initial(src, doc["initial"], coin.dim, tolerances.state)

    output = doc.get("output", {})
    fmt = fmt if fmt is not None else output.get("format", "csv")
    if fmt not in FORMATS:
        raise src.fail("output", "format", f"expected one of {', '.join(FORMATS)}, got {fmt!r}")
    if out is None and "path" in output:
        if not isinstance(output["path"], str):
            raise src.fail("output", "path", "expected a string")
        out = (path.parent / output["path"])

    return RunConfig(
        mode=mode,
        coin=coin,
        coin_label=label,
        rho0=rho0,
        steps=steps,
        node=node,
        engine=engine,
        tolerances=tolerances,
        output_path=Path(out) if out is not None else None,
        output_format=fmt,
    )
