"""
Closed-form position distribution for commuting normal line coins.

When ``B`` and ``C`` share an orthonormal eigenbasis ``{|b_i>}`` with
eigenvalues ``lam_i`` and ``phi_i``, each eigenvector evolves independently
as a classical binomial walk with right-step probability ``|lam_i|^2`` and
left-step probability ``|phi_i|^2``. The position distribution after ``n``
steps is the mixture of those binomials weighted by the initial
populations ``<b_i|rho0|b_i>``.

Binomial rows are evaluated exactly for ``n <= EXACT_MAX_STEPS`` and in log
space above it, using Loader's saddle-point form (Stirling-series error
terms plus the deviance ``bd0``), which keeps the relative error near
machine precision for large ``n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, StateError
from .linalg import CLUSTER_TOL, SpectralDecomposition
from .walk import STATE_TOL, as_density_block

__all__ = [
    "EXACT_MAX_STEPS",
    "SOLITON_TOL",
    "WEIGHT_TOL",
    "ComponentKind",
    "ComponentSpec",
    "DistributionProfile",
    "analytic_distribution",
    "binomial_row",
    "classify_spectrum",
    "component_stats",
    "initial_projections",
    "log_binomial_pmf",
]

#: Largest step count evaluated with exact integer binomial coefficients.
EXACT_MAX_STEPS = 50
#: ``|lam|^2`` within this of 0 or 1 is a soliton.
SOLITON_TOL = 1e-12
#: Groups with aggregate weight at or below this are not reported.
WEIGHT_TOL = 1e-12

_LN_2PI = math.log(2.0 * math.pi)

# log(n!) - log(sqrt(2 pi n) (n/e)^n) for n = 0..15
_STIRLERR_TABLE = np.array([
    0.0,
    0.08106146679532726,
    0.0413406959554093,
    0.02767792568499834,
    0.020790672103765093,
    0.016644691189821193,
    0.013876128823070748,
    0.01189670994589177,
    0.010411265261972096,
    0.009255462182712733,
    0.00833056343336287,
    0.007573675487951841,
    0.00694284010720953,
    0.006408994188004207,
    0.0059513701127588475,
    0.005554733551962801,
])

_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n: NDArray) -> NDArray:
    n = np.asarray(n, dtype=np.float64)
    out = np.empty_like(n)
    small = n <= 15
    out[small] = _STIRLERR_TABLE[n[small].astype(np.int64)]
    big = n[~small]
    nn = big * big
    series = np.where(
        big > 500,
        (_S0 - _S1 / nn) / big,
        np.where(
            big > 80,
            (_S0 - (_S1 - _S2 / nn) / nn) / big,
            np.where(
                big > 35,
                (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / big,
                (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / big,
            ),
        ),
    )
    out[~small] = series
    return out


def _bd0(x: NDArray, mu: NDArray) -> NDArray:
    """Deviance ``x log(x/mu) + mu - x``, without cancellation near ``x == mu``."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.broadcast_to(np.asarray(mu, dtype=np.float64), x.shape)
    out = np.empty_like(x)
    near = np.abs(x - mu) < 0.1 * (x + mu)
    far = ~near
    out[far] = x[far] * np.log(x[far] / mu[far]) + mu[far] - x[far]
    if near.any():
        xn, mn = x[near], mu[near]
        v = (xn - mn) / (xn + mn)
        s = (xn - mn) * v
        ej = 2.0 * xn * v
        v2 = v * v
        j = 1
        while True:
            ej = ej * v2
            s_new = s + ej / (2 * j + 1)
            if np.array_equal(s_new, s):
                break
            s = s_new
            j += 1
        out[near] = s
    return out


def _loader_row(n: int, p: float, q: float, r: NDArray) -> NDArray:
    """Binomial pmf at right-step counts ``r`` in log space; needs ``0 < p, q``."""
    r = np.asarray(r, dtype=np.float64)
    out = np.empty_like(r)
    edge_lo = r == 0
    edge_hi = r == n
    if n == 0:
        out[:] = 1.0
        return out
    # All-left and all-right terms.
    lc_lo = -_bd0(np.array([float(n)]), n * q)[0] - n * p if p < 0.1 else n * math.log(q)
    lc_hi = -_bd0(np.array([float(n)]), n * p)[0] - n * q if q < 0.1 else n * math.log(p)
    out[edge_lo] = math.exp(lc_lo)
    out[edge_hi] = math.exp(lc_hi)
    mid = ~(edge_lo | edge_hi)
    x = r[mid]
    lc = (
        _stirlerr(np.array([float(n)]))[0]
        - _stirlerr(x)
        - _stirlerr(n - x)
        - _bd0(x, n * p)
        - _bd0(n - x, n * q)
    )
    lf = _LN_2PI + np.log(x) + np.log1p(-x / n)
    out[mid] = np.exp(lc - 0.5 * lf)
    return out


def binomial_row(n: int, p: float, q: float | None = None, method: str = "auto") -> NDArray[np.float64]:
    """
    ``C(n, r) p^r q^(n-r)`` for ``r = 0 .. n``.

    Parameters
    ----------
    n : int
        Number of steps.
    p, q : float
        Right and left step probabilities; ``q`` defaults to ``1 - p``.
    method : {"auto", "exact", "log"}
        ``"exact"`` multiplies exact integer binomials by float powers,
        ``"log"`` uses the saddle-point form, ``"auto"`` picks exact for
        ``n <= EXACT_MAX_STEPS``.

    Notes
    -----
    ``0^0 = 1``, so ``p = 1`` gives a unit mass at ``r = n`` and ``p = 0`` at ``r = 0``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if q is None:
        q = 1.0 - p
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"step probabilities out of range: p={p!r}, q={q!r}")
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_STEPS else "log"
    r = np.arange(n + 1)
    if p == 0.0 or q == 0.0:
        out = np.zeros(n + 1)
        out[n if q == 0.0 else 0] = 1.0
        return out
    if method == "exact":
        coeff = np.array([float(math.comb(n, int(i))) for i in r])
        return coeff * np.power(p, r) * np.power(q, n - r)
    if method == "log":
        return _loader_row(n, p, q, r)
    raise ValueError(f"unknown method {method!r}")


def log_binomial_pmf(n: int, k: int, p_right: float) -> float:
    """
    Probability that an ``n``-step walk with right-step probability
    ``p_right`` ends at displacement ``k``, evaluated in log space.

    Raises
    ------
    ValueError
        If ``n + k`` is odd, ``|k| > n`` or ``p_right`` is outside ``[0, 1]``.
    """
    if n < 0 or abs(k) > n:
        raise ValueError(f"|k| must not exceed n (n={n}, k={k})")
    if (n + k) % 2:
        raise ValueError(f"n + k must be even (n={n}, k={k})")
    if not 0.0 <= p_right <= 1.0:
        raise ValueError(f"p_right out of range: {p_right!r}")
    r = (n + k) // 2
    if p_right == 1.0:
        return 1.0 if r == n else 0.0
    if p_right == 0.0:
        return 1.0 if r == 0 else 0.0
    return float(_loader_row(n, p_right, 1.0 - p_right, np.array([r]))[0])


class ComponentKind(enum.Enum):
    GAUSSIAN = "Gaussian"
    SOLITON_RIGHT = "SolitonRight"
    SOLITON_LEFT = "SolitonLeft"


@dataclass(frozen=True)
class ComponentSpec:
    """
    One asymptotic component of the position distribution.

    ``mean(n)`` and ``spread(n)`` are the center and standard deviation of
    the component's displacement after ``n`` steps.
    """

    kind: ComponentKind
    weight: float
    lambda_abs2: float
    phi_abs2: float

    @property
    def mean_per_step(self) -> float:
        return self.lambda_abs2 - self.phi_abs2

    @property
    def spread_coefficient(self) -> float:
        """``2 |lam| |phi|``; the spread grows as this times ``sqrt(n)``."""
        return 2.0 * math.sqrt(self.lambda_abs2 * self.phi_abs2)

    def mean(self, n: int) -> float:
        return n * self.mean_per_step

    def spread(self, n: int) -> float:
        return self.spread_coefficient * math.sqrt(n)

    def to_dict(self, n: int | None = None) -> dict:
        d = {
            "kind": self.kind.value,
            "weight": self.weight,
            "lambda_abs2": self.lambda_abs2,
            "phi_abs2": self.phi_abs2,
            "mean_per_step": self.mean_per_step,
            "spread_coefficient": self.spread_coefficient,
        }
        if n is not None:
            d["mean"] = self.mean(n)
            d["spread"] = self.spread(n)
        return d


@dataclass(frozen=True, eq=False)
class DistributionProfile:
    """Probabilities over the parity-valid sites ``-n, -n+2, .., n`` plus components."""

    n: int
    positions: NDArray[np.int64]
    probabilities: NDArray[np.float64]
    components: tuple[ComponentSpec, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.positions.tolist(), self.probabilities.tolist()))


def initial_projections(
    decomp: SpectralDecomposition, rho0: ArrayLike, tol: float = STATE_TOL
) -> NDArray[np.float64]:
    """Populations ``<b_i|rho0|b_i>`` of the initial block in the joint eigenbasis."""
    rho = as_density_block(rho0, tol, "initial density block")
    if rho.shape[0] != decomp.dim:
        raise DimensionError(f"rho0 has dimension {rho.shape[0]}, decomposition has {decomp.dim}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tol:
        raise StateError(f"initial trace {tr!r} differs from 1 by {abs(tr - 1.0):.3e}")
    V = decomp.basis
    w = np.einsum("ji,jk,ki->i", V.conj(), rho, V).real
    # Round-off can leave populations of order -eps.
    return np.where((w < 0) & (w >= -tol), 0.0, w)


def _check_weights(weights: ArrayLike, dim: int, tol: float) -> NDArray[np.float64]:
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape != (dim,):
        raise DimensionError(f"expected {dim} weights, got {w.shape[0]}")
    if np.any(w < -tol) or np.any(w > 1.0 + tol) or not np.all(np.isfinite(w)):
        raise ValueError(f"weights must lie in [0, 1]: {w.tolist()}")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"weights sum to {w.sum()!r}, not 1")
    return w


def _group_by_modulus(values: NDArray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        for g in groups:
            if np.min(np.abs(values[g] - v)) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def classify_spectrum(
    decomp: SpectralDecomposition,
    weights: ArrayLike,
    tol: float = CLUSTER_TOL,
    soliton_tol: float = SOLITON_TOL,
    weight_tol: float = WEIGHT_TOL,
) -> list[ComponentSpec]:
    """
    Group the spectrum by ``|lam_i|`` and label each group.

    Eigenvectors whose ``|lam|`` agree within ``tol`` form one component
    with the summed weight. A component is ``SOLITON_RIGHT`` when
    ``|lam|^2 >= 1 - soliton_tol``, ``SOLITON_LEFT`` when
    ``|lam|^2 <= soliton_tol``, and ``GAUSSIAN`` otherwise. Groups with
    weight at or below ``weight_tol`` are dropped. Components are listed
    in order of first appearance in the decomposition.
    """
    w = _check_weights(weights, decomp.dim, STATE_TOL)
    mod = np.abs(decomp.lam)
    lam2 = mod**2
    phi2 = np.abs(decomp.phi) ** 2
    specs = []
    for g in _group_by_modulus(mod, tol):
        weight = float(w[g].sum())
        if weight <= weight_tol:
            continue
        l2 = float(lam2[g].mean())
        p2 = float(phi2[g].mean())
        if l2 >= 1.0 - soliton_tol:
            kind = ComponentKind.SOLITON_RIGHT
        elif l2 <= soliton_tol:
            kind = ComponentKind.SOLITON_LEFT
        else:
            kind = ComponentKind.GAUSSIAN
        specs.append(ComponentSpec(kind, weight, l2, p2))
    return specs


def analytic_distribution(
    decomp: SpectralDecomposition,
    weights: ArrayLike,
    n: int,
    method: str = "auto",
) -> DistributionProfile:
    """
    Exact position distribution after ``n`` steps from a single site.

    ``P_k = sum_i w_i C(n, (n+k)/2) |lam_i|^(n+k) |phi_i|^(n-k)`` for each
    ``k`` in ``-n, -n+2, .., n``. Eigenvectors with ``|lam| = 1`` or ``0``
    contribute unit masses at ``k = n`` or ``k = -n``.

    Raises
    ------
    ValueError
        If the weights are not a probability vector over the eigenbasis.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    w = _check_weights(weights, decomp.dim, STATE_TOL)
    lam2 = np.abs(decomp.lam) ** 2
    phi2 = np.abs(decomp.phi) ** 2
    probs = np.zeros(n + 1)
    # Identical step probabilities share one row.
    rows: dict[tuple[float, float], float] = {}
    for wi, l2, p2 in zip(w, lam2, phi2):
        if wi == 0.0:
            continue
        key = (float(l2), float(p2))
        rows[key] = rows.get(key, 0.0) + float(wi)
    for (l2, p2), wi in rows.items():
        probs += wi * binomial_row(n, min(l2, 1.0), min(p2, 1.0), method)
    positions = np.arange(-n, n + 1, 2, dtype=np.int64)
    return DistributionProfile(n, positions, probs, tuple(classify_spectrum(decomp, w)))


def component_stats(
    lambda_i: complex, phi_i: complex, n: int, tol: float = STATE_TOL
) -> tuple[float, float]:
    """
    Mean and standard deviation of one eigen-channel's displacement.

    Returns ``(n (|lam|^2 - |phi|^2), 2 |lam| |phi| sqrt(n))``.

    Raises
    ------
    ValueError
        If ``|lam|^2 + |phi|^2`` differs from 1 by more than ``tol``.
    """
    l2, p2 = abs(lambda_i) ** 2, abs(phi_i) ** 2
    if abs(l2 + p2 - 1.0) > tol:
        raise ValueError(f"|lam|^2 + |phi|^2 = {l2 + p2!r}, expected 1")
    return n * (l2 - p2), 2.0 * abs(lambda_i) * abs(phi_i) * math.sqrt(n)

