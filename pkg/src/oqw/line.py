"""
Homogeneous open quantum walk on the integer line.

Every right jump applies ``B`` and every left jump applies ``C``. Starting
from a single node, after ``n`` steps only sites ``k`` with ``n + k`` even
(relative to the origin) can be occupied, so :class:`LineState` stores just
those ``n + 1`` blocks in one contiguous array. The other half of the window
is implicit and exactly zero.

Blocks are stored by their ``d*d`` real Hermitian coordinates (diagonal,
then real and imaginary parts of the strict upper triangle). The map
``rho -> X rho X^+`` is real-linear on those coordinates, so one step is a
pair of real matrix products of the whole window against fixed
``(d*d, d*d)`` matrices, and every stored block is Hermitian exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, StateError, TransitionError
from .linalg import as_matrix, max_abs
from .walk import (
    NORMALIZATION_TOL,
    PRUNE_THRESHOLD,
    STATE_TOL,
    TransitionSet,
    WalkState,
    as_density_block,
)

__all__ = [
    "LineCoin",
    "LineState",
    "diagonal_trap_coin",
    "line_step",
    "run_line",
]


@lru_cache(maxsize=None)
def _hermitian_frame(d: int) -> tuple[NDArray, NDArray]:
    """Maps between real coordinates and row-major ``vec(rho)``.

    Returns ``(to_vec, from_vec)`` with ``vec = coords @ to_vec`` and
    ``coords = (vec @ from_vec).real``.
    """
    to_vec = np.zeros((d * d, d * d), dtype=np.complex128)
    from_vec = np.zeros((d * d, d * d), dtype=np.complex128)
    upper = [(a, b) for a in range(d) for b in range(a + 1, d)]
    u = len(upper)
    for a in range(d):
        to_vec[a, a * d + a] = 1.0
        from_vec[a * d + a, a] = 1.0
    for idx, (a, b) in enumerate(upper):
        re, im = d + idx, d + u + idx
        to_vec[re, a * d + b] = 1.0
        to_vec[re, b * d + a] = 1.0
        to_vec[im, a * d + b] = 1.0j
        to_vec[im, b * d + a] = -1.0j
        from_vec[a * d + b, re] = 1.0
        from_vec[a * d + b, im] = -1.0j
    to_vec.flags.writeable = False
    from_vec.flags.writeable = False
    return to_vec, from_vec


def _to_coords(blocks: NDArray) -> NDArray[np.float64]:
    m, d, _ = blocks.shape
    _, from_vec = _hermitian_frame(d)
    return np.ascontiguousarray((blocks.reshape(m, d * d) @ from_vec).real)


def _from_coords(coords: NDArray) -> NDArray[np.complex128]:
    m, dd = coords.shape
    d = int(round(dd ** 0.5))
    to_vec, _ = _hermitian_frame(d)
    return (coords @ to_vec).reshape(m, d, d)


@dataclass(frozen=True, eq=False)
class LineCoin:
    """Right-jump operator ``B`` and left-jump operator ``C``."""

    B: NDArray[np.complex128]
    C: NDArray[np.complex128]
    tol: float = NORMALIZATION_TOL

    def __post_init__(self):
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        if B.shape != C.shape:
            raise DimensionError(f"B has shape {B.shape}, C has shape {C.shape}")
        residual = max_abs(B.conj().T @ B + C.conj().T @ C - np.eye(B.shape[0]))
        if residual > self.tol:
            raise TransitionError(f"B^+B + C^+C != I (max-entry residual {residual:.3e})")
        B.flags.writeable = False
        C.flags.writeable = False
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @cached_property
    def kernel(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Real ``(d*d, d*d)`` step matrices for the B-move and the C-move on coordinates."""
        to_vec, from_vec = _hermitian_frame(self.dim)
        parts = []
        for X in (self.B, self.C):
            k = np.ascontiguousarray((to_vec @ np.kron(X, X.conj()).T @ from_vec).real)
            k.flags.writeable = False
            parts.append(k)
        return parts[0], parts[1]

    def transitions(self, radius: int) -> TransitionSet:
        """Equivalent path graph with sources ``-radius .. radius``."""
        return TransitionSet.line(self.B, self.C, range(-radius, radius + 1))


def diagonal_trap_coin(theta: float) -> LineCoin:
    """``B = diag(1, cos theta)``, ``C = diag(0, sin theta)``.

    The first level only ever moves right, so its population travels as an
    undispersed packet; the second level performs a binomial walk.
    """
    c, s = np.cos(theta), np.sin(theta)
    return LineCoin(np.diag([1.0, c]), np.diag([0.0, s]))


@dataclass(frozen=True, eq=False)
class LineState:
    """
    Parity-compressed window of blocks on the line.

    Attributes
    ----------
    coords : ndarray, shape (n + 1, d * d)
        Real Hermitian coordinates; row ``m`` is the block at site
        ``origin - n + 2m``.
    step_count : int
        Steps taken, ``n``.
    origin : int
        Site of the initial mass.
    """

    coords: NDArray[np.float64]
    step_count: int = 0
    origin: int = 0

    @classmethod
    def initial(cls, rho0: ArrayLike, origin: int = 0, tol: float = STATE_TOL) -> "LineState":
        rho = as_density_block(rho0, tol, "initial density block")
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > tol:
            raise StateError(f"initial trace {tr!r} differs from 1 by {abs(tr - 1.0):.3e}")
        return cls(_to_coords(rho[None]), 0, origin)

    @property
    def dim(self) -> int:
        return int(round(self.coords.shape[1] ** 0.5))

    @cached_property
    def active(self) -> NDArray[np.complex128]:
        """Blocks at the parity-active sites, shape ``(n + 1, d, d)``."""
        return _from_coords(self.coords)

    @property
    def positions(self) -> NDArray[np.int64]:
        """Sites of the ``active`` blocks, ascending."""
        n = self.step_count
        return self.origin + np.arange(-n, n + 1, 2, dtype=np.int64)

    def traces(self) -> NDArray[np.float64]:
        return self.coords[:, : self.dim].sum(axis=1)

    @property
    def total_trace(self) -> float:
        return float(self.traces().sum())

    def block(self, k: int) -> NDArray[np.complex128]:
        """Block at site ``k``; exact zeros off the parity lattice or outside the window."""
        n = self.step_count
        off = k - self.origin + n
        if off < 0 or off > 2 * n or off % 2:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return self.active[off // 2]

    def window(self) -> NDArray[np.complex128]:
        """Full ``(2n + 1, d, d)`` window over sites ``origin - n .. origin + n``."""
        n = self.step_count
        full = np.zeros((2 * n + 1, self.dim, self.dim), dtype=np.complex128)
        full[::2] = self.active
        return full

    def distribution(self) -> dict[int, float]:
        """``{k: Tr rho_k}`` over the parity-active sites."""
        return dict(zip(self.positions.tolist(), self.traces().tolist()))

    def to_walk_state(self) -> WalkState:
        return WalkState(dict(zip(self.positions.tolist(), self.active)), self.step_count)


def _check_dims(state: LineState, coin: LineCoin) -> None:
    if state.dim != coin.dim:
        raise DimensionError(f"state dimension {state.dim} != coin dimension {coin.dim}")


def _advance(coords: NDArray, kernel: tuple[NDArray, NDArray]) -> NDArray:
    m, dd = coords.shape
    new = np.empty((m + 1, dd))
    np.matmul(coords, kernel[0], out=new[1:])
    new[0] = 0.0
    new[:m] += coords @ kernel[1]
    # Far tails would otherwise decay into subnormals, which are very slow.
    np.copyto(new, 0.0, where=np.abs(new) < PRUNE_THRESHOLD)
    return new


def line_step(state: LineState, coin: LineCoin) -> LineState:
    """
    Advance one step.

    The new block at site ``i`` is ``B rho_{i-1} B^+ + C rho_{i+1} C^+``,
    summed in that order. The window grows by one site on each side.
    """
    _check_dims(state, coin)
    return LineState(_advance(state.coords, coin.kernel), state.step_count + 1, state.origin)


def run_line(coin: LineCoin, rho0: ArrayLike | LineState, steps: int, origin: int = 0) -> LineState:
    """
    Evolve ``steps`` times from ``rho0`` placed at ``origin``.

    ``rho0`` may also be an existing :class:`LineState`, which is continued.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    state = rho0 if isinstance(rho0, LineState) else LineState.initial(rho0, origin)
    _check_dims(state, coin)
    kernel = coin.kernel
    coords = state.coords
    for _ in range(steps):
        coords = _advance(coords, kernel)
    return LineState(coords, state.step_count + steps, state.origin)
