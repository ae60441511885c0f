"""
Open quantum walk on an explicit directed graph.

The state is kept diagonal in position: a sparse map from node label to
the internal-state density block on that node. One step applies, for every
target node ``i``,

    rho_i <- sum_j B_j^i rho_j (B_j^i)^dagger

where ``B_j^i`` is the transition operator attached to the edge ``j -> i``.
The engine places no spectral restriction on the operators; any set that
passes :func:`validate_transitions` is accepted.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, StateError, TransitionError
from .linalg import as_matrix, max_abs

__all__ = [
    "NORMALIZATION_TOL",
    "PRUNE_THRESHOLD",
    "STATE_TOL",
    "TransitionSet",
    "Violation",
    "WalkState",
    "apply_step",
    "as_density_block",
    "evolve",
    "hermitize",
    "position_distribution",
    "validate_transitions",
]

NORMALIZATION_TOL = 1e-10
STATE_TOL = 1e-10
#: Blocks whose trace falls below this are dropped after a step.
PRUNE_THRESHOLD = 1e-300


def hermitize(m: NDArray) -> NDArray:
    """``(M + M^dagger) / 2`` over the last two axes."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def as_density_block(
    m: ArrayLike, tol: float = STATE_TOL, name: str = "density block"
) -> NDArray[np.complex128]:
    """
    Validate a single-node density block and return it as complex128.

    The block must be Hermitian, positive semidefinite and carry trace in
    ``[0, 1]``, each within ``tol``.

    Raises
    ------
    StateError
        Naming the violated condition and its residual.
    """
    rho = as_matrix(m, name)
    herm = max_abs(rho - rho.conj().T)
    if herm > tol:
        raise StateError(f"{name} is not Hermitian (residual {herm:.3e})")
    min_eig = float(np.linalg.eigvalsh(hermitize(rho))[0])
    if min_eig < -tol:
        raise StateError(f"{name} is not positive semidefinite (min eigenvalue {min_eig:.3e})")
    tr = float(np.trace(rho).real)
    if tr < -tol or tr > 1.0 + tol:
        raise StateError(f"{name} trace {tr!r} outside [0, 1]")
    return rho


@dataclass(frozen=True, eq=False)
class TransitionSet:
    """
    Transition operators attached to directed edges.

    ``edges[(j, i)]`` is the operator applied to the internal state when the
    walker jumps from node ``j`` to node ``i``.
    """

    dim: int
    edges: Mapping[tuple[int, int], NDArray[np.complex128]] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("coin dimension must be positive")
        edges = {}
        for (j, i), op in self.edges.items():
            op = as_matrix(op, f"operator on edge {j}->{i}")
            if op.shape != (self.dim, self.dim):
                raise DimensionError(
                    f"operator on edge {j}->{i} has shape {op.shape}, expected {(self.dim, self.dim)}"
                )
            op.flags.writeable = False
            edges[(int(j), int(i))] = op
        object.__setattr__(self, "edges", edges)

    @cached_property
    def outgoing(self) -> dict[int, list[tuple[int, NDArray, NDArray]]]:
        """Per source: ``(target, B, B^dagger)`` sorted by target."""
        out: dict[int, list[tuple[int, NDArray, NDArray]]] = {}
        for (j, i), op in sorted(self.edges.items()):
            out.setdefault(j, []).append((i, op, op.conj().T.copy()))
        return out

    @classmethod
    def line(cls, B: ArrayLike, C: ArrayLike, sources: Iterable[int]) -> "TransitionSet":
        """Path graph: each source ``j`` gets ``j -> j+1`` via ``B`` and ``j -> j-1`` via ``C``."""
        B = as_matrix(B, "B")
        C = as_matrix(C, "C")
        if B.shape != C.shape:
            raise DimensionError(f"B has shape {B.shape}, C has shape {C.shape}")
        edges = {}
        for j in sources:
            edges[(j, j + 1)] = B
            edges[(j, j - 1)] = C
        return cls(B.shape[0], edges)


class Violation(NamedTuple):
    source: int
    residual: float


def validate_transitions(t: TransitionSet, tol: float = NORMALIZATION_TOL) -> list[Violation]:
    """
    Check ``sum_i (B_j^i)^dagger B_j^i = I`` for every source ``j``.

    Returns one :class:`Violation` per failing source (sorted by node), each
    carrying the max-entry residual. An empty list means the set is valid.
    """
    eye = np.eye(t.dim)
    violations = []
    for j, outs in t.outgoing.items():
        total = sum(bh @ b for _, b, bh in outs)
        residual = max_abs(total - eye)
        if residual > tol:
            violations.append(Violation(j, residual))
    return violations


@dataclass(frozen=True, eq=False)
class WalkState:
    """
    Position-diagonal walk state ``sum_i rho_i (x) |i><i|``.

    Only nodes carrying a stored block appear in ``blocks``. Use
    :meth:`initial` to build a validated starting state; the stepping
    functions construct successors directly.
    """

    blocks: Mapping[int, NDArray[np.complex128]]
    step_count: int = 0

    @property
    def dim(self) -> int:
        return next(iter(self.blocks.values())).shape[0]

    @property
    def total_trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    @classmethod
    def initial(
        cls, blocks: Mapping[int, ArrayLike], tol: float = STATE_TOL
    ) -> "WalkState":
        """Validated state from ``{node: density block}`` with total trace 1."""
        if not blocks:
            raise StateError("state needs at least one block")
        checked = {int(k): as_density_block(b, tol, f"block at node {k}") for k, b in blocks.items()}
        dims = {b.shape for b in checked.values()}
        if len(dims) != 1:
            raise DimensionError(f"blocks have mixed shapes {sorted(dims)}")
        total = sum(float(np.trace(b).real) for b in checked.values())
        if abs(total - 1.0) > tol:
            raise StateError(f"total trace {total!r} differs from 1 by {abs(total - 1.0):.3e}")
        for b in checked.values():
            b.flags.writeable = False
        return cls(dict(sorted(checked.items())), 0)

    @classmethod
    def from_density_matrix(
        cls, rho: ArrayLike, nodes: Iterable[int], dim: int, tol: float = STATE_TOL
    ) -> "WalkState":
        """
        Split a full ``(d*N, d*N)`` density matrix into position blocks.

        The position index is the outer (slow) index. Coherences between
        different nodes are rejected rather than discarded.
        """
        nodes = list(nodes)
        rho = np.asarray(rho, dtype=np.complex128)
        size = dim * len(nodes)
        if rho.shape != (size, size):
            raise DimensionError(f"expected shape {(size, size)}, got {rho.shape}")
        blocks = {}
        for a, node in enumerate(nodes):
            for b in range(len(nodes)):
                blk = rho[a * dim:(a + 1) * dim, b * dim:(b + 1) * dim]
                if a == b:
                    blocks[node] = blk
                elif max_abs(blk) > tol:
                    raise StateError(
                        f"coherence between nodes {node} and {nodes[b]} "
                        f"(magnitude {max_abs(blk):.3e}); only position-diagonal states are supported"
                    )
        return cls.initial(blocks, tol)


def apply_step(
    state: WalkState, t: TransitionSet, prune_below: float = PRUNE_THRESHOLD
) -> WalkState:
    """
    One application of the completely positive walk map.

    Sources are visited in ascending node order, so each target's sum has
    a fixed accumulation order. Output blocks are re-symmetrized and any
    block with trace below ``prune_below`` is dropped.

    Raises
    ------
    DimensionError
        If the state and transition set disagree on coin dimension.
    TransitionError
        If a node carrying mass has no outgoing edges.
    """
    if state.blocks and state.dim != t.dim:
        raise DimensionError(f"state dimension {state.dim} != transition dimension {t.dim}")
    outgoing = t.outgoing
    acc: dict[int, NDArray] = {}
    for j in sorted(state.blocks):
        rho = state.blocks[j]
        outs = outgoing.get(j)
        if outs is None:
            raise TransitionError(f"node {j} carries mass but has no outgoing transitions")
        for i, b, bh in outs:
            term = b @ rho @ bh
            if i in acc:
                acc[i] += term
            else:
                acc[i] = term
    blocks = {}
    for i in sorted(acc):
        blk = hermitize(acc[i])
        if np.trace(blk).real >= prune_below:
            blk.flags.writeable = False
            blocks[i] = blk
    return WalkState(blocks, state.step_count + 1)


def evolve(
    state: WalkState, t: TransitionSet, steps: int, prune_below: float = PRUNE_THRESHOLD
) -> WalkState:
    """Apply :func:`apply_step` ``steps`` times; ``steps == 0`` returns ``state`` itself."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    for _ in range(steps):
        state = apply_step(state, t, prune_below)
    return state


def position_distribution(state: WalkState) -> dict[int, float]:
    """``{k: Tr rho_k}`` in ascending node order."""
    return {k: float(np.trace(b).real) for k, b in sorted(state.blocks.items())}
