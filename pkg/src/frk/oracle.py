"""Dense/sparse discrete Laplacians on the approximating graphs.

This is the brute-force side of the library: renormalized graph Laplacians,
their spectra, discrete resolvent solves, boundary-value ("spike") solves,
and normal derivatives as limits of renormalized flux sums.  Everything here
is independent of the kernel construction and serves as its oracle.

Sign convention: the operator is ``Delta u = W^{-1} L u`` where L is the
conductance Laplacian (row sums zero, off-diagonals positive) and W holds the
per-vertex tent-function integrals.  Delta is negative semidefinite, so on
the interval the Dirichlet eigenvalues approach ``-(k pi)^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergent, SingularResolvent, UnsupportedAddress
from .structure import (
    Address,
    FractalSpec,
    LevelGraph,
    Vertex,
    build_level,
    canonicalize,
    cell_scale,
    locate,
)

DENSE_LIMIT = 1400          # direct dense solve below this many unknowns
EIG_LIMIT = 3600            # dense eigensolve cap
GUARD_REL_GAP = 1e-8


def max_level(default: int = 12) -> int:
    """Oracle level cap, overridable through FRK_MAX_LEVEL."""
    try:
        return int(os.environ.get("FRK_MAX_LEVEL", default))
    except ValueError:
        return default


@dataclass(frozen=True)
class DiscreteOperator:
    """The renormalized level-m graph Laplacian with boundary handling.

    ``L`` is the (sparse) conductance Laplacian over all of V_m and ``W`` the
    diagonal of tent integrals, so the operator is ``W^{-1} L``; with bc
    "dirichlet" it acts on interior rows only.
    """

    spec: FractalSpec
    m: int
    bc: str
    graph: LevelGraph
    L: sp.csr_matrix
    W: np.ndarray

    @property
    def dofs(self) -> np.ndarray:
        if self.bc == "dirichlet":
            return self.graph.interior
        return np.arange(self.graph.n)

    def dense(self) -> np.ndarray:
        """The renormalized operator as a dense matrix on its dofs."""
        idx = self.dofs
        M = self.L[np.ix_(idx, idx)].toarray() if sp.issparse(self.L) else self.L
        return M / self.W[idx, None]

    def symmetrized(self) -> np.ndarray:
        """W^{-1/2} L W^{-1/2} on the dofs: symmetric, same spectrum as dense()."""
        idx = self.dofs
        s = 1.0 / np.sqrt(self.W[idx])
        M = self.L[np.ix_(idx, idx)].toarray()
        return s[:, None] * M * s[None, :]


def laplacian(spec: FractalSpec, m: int, bc: str = "dirichlet") -> DiscreteOperator:
    if m < 1:
        raise ValueError("need level m >= 1")
    if bc not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    graph = build_level(spec, m)
    n = graph.n
    u, v, c = graph.edges_u, graph.edges_v, graph.edges_c
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([v, u, u, v])
    vals = np.concatenate([c, c, -c, -c])
    L = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return DiscreteOperator(spec, m, bc, graph, L, graph.hweight.copy())


@lru_cache(maxsize=64)
def _spectrum(spec: FractalSpec, m: int, bc: str) -> np.ndarray:
    op = laplacian(spec, m, bc)
    if len(op.dofs) > EIG_LIMIT:
        raise ValueError(
            f"level-{m} spectrum needs {len(op.dofs)} dofs; cap is {EIG_LIMIT}"
        )
    ev = scipy.linalg.eigvalsh(op.symmetrized())
    return ev[np.argsort(np.abs(ev))]


def dirichlet_spectrum(spec: FractalSpec, m: int) -> np.ndarray:
    """Eigenvalues of the Dirichlet operator, ascending in magnitude (all <= 0)."""
    return _spectrum(spec, m, "dirichlet")


def neumann_spectrum(spec: FractalSpec, m: int) -> np.ndarray:
    return _spectrum(spec, m, "neumann")


def _nearest_eigenvalue(spec, m, bc, lam):
    try:
        ev = _spectrum(spec, m, bc)
    except ValueError:
        return None
    return float(ev[np.argmin(np.abs(ev - lam))])


def _guard(spec, m, bc, lam):
    near = _nearest_eigenvalue(spec, m, bc, lam)
    if near is None:
        return
    if abs(lam - near) <= GUARD_REL_GAP * max(1.0, abs(lam), abs(near)):
        raise SingularResolvent(
            f"lambda is within guard distance of a level-{m} {bc} eigenvalue",
            nearest=near, level=m,
        )


def _solve(A, b):
    if A.shape[0] <= DENSE_LIMIT:
        return scipy.linalg.solve(A.toarray() if sp.issparse(A) else A, b)
    return spla.spsolve(A.tocsc(), b)


def discrete_resolvent(spec: FractalSpec, m: int, lam: float, f, bc: str = "dirichlet"):
    """Solve ``(lam*I - Delta) u = f`` on V_m; returns u over all vertices.

    ``f`` may be an array over the level-m vertices (canonical order) or a
    callable on addresses.  Dirichlet pins u = 0 on the boundary; Neumann
    uses the natural weighted operator at the boundary rows.
    """
    if m > max_level():
        raise ValueError(f"level {m} exceeds FRK_MAX_LEVEL={max_level()}")
    op = laplacian(spec, m, bc)
    graph = op.graph
    if callable(f):
        fv = np.array([f(v) for v in graph.vertices], dtype=float)
    else:
        fv = np.asarray(f, dtype=float)
        if fv.shape != (graph.n,):
            raise ValueError(f"f has shape {fv.shape}, expected ({graph.n},)")
    _guard(spec, m, bc, lam)

    idx = op.dofs
    Wd = sp.diags(op.W[idx])
    A = lam * Wd - op.L[np.ix_(idx, idx)]
    b = op.W[idx] * fv[idx]
    u = np.zeros(graph.n)
    u[idx] = _solve(A, b)

    resid = np.abs(lam * op.W[idx] * u[idx] - op.L[np.ix_(idx, idx)] @ u[idx] - b)
    scale = max(1e-300, float(np.abs(b).max()), float(np.abs(u).max()))
    if resid.max() > 1e-8 * scale:
        raise SingularResolvent(
            "discrete resolvent solve did not meet its residual bound",
            residual=float(resid.max()), level=m,
        )
    return u


def boundary_spike_values(spec: FractalSpec, lam: float, p, m: int) -> np.ndarray:
    """Solve ``(lam*I - Delta) u = 0`` with Kronecker data on V0.

    ``p`` is a boundary index or boundary Vertex; the returned array holds u
    over the level-m vertices.  This is the discrete counterpart of the
    fundamental boundary solution used by the kernel construction.
    """
    if isinstance(p, Vertex):
        if p.word or p.v1 >= spec.n0:
            raise UnsupportedAddress(f"{p} is not a boundary vertex")
        p = p.v1
    if not (0 <= p < spec.n0):
        raise ValueError(f"boundary index {p} out of range")
    op = laplacian(spec, m, "dirichlet")
    graph = op.graph
    _guard(spec, m, "dirichlet", lam)
    interior = graph.interior
    bnd = np.arange(spec.n0)
    ub = np.zeros(spec.n0)
    ub[p] = 1.0
    A = lam * sp.diags(op.W[interior]) - op.L[np.ix_(interior, interior)]
    b = op.L[np.ix_(interior, bnd)] @ ub
    u = np.zeros(graph.n)
    u[p] = 1.0
    u[interior] = _solve(A, b)
    return u


# ---------------------------------------------------------------------------
# normal derivatives
# ---------------------------------------------------------------------------

def _interval_cell_corners(word) -> tuple[float, float]:
    left = 0.0
    width = 1.0
    for a in word:
        width /= 2.0
        if a == 1:
            left += width
    return left, left + width


def flux_sum(spec: FractalSpec, u, q: Address, m: int, cell=()) -> float:
    """The renormalized level-m flux sum at ``q`` (restricted under ``cell``).

    ``sum over m-cells w containing q, w extending cell, of (1/r_w) *
    sum_pattern c (u(q) - u(neighbour))``.  ``u`` is a callable on addresses.
    """
    prefix = tuple(cell) if not isinstance(cell, int) else (cell,)
    uq = u(q)
    total = 0.0
    hits = 0
    for word, local in locate(spec, q, m):
        if word[: len(prefix)] != prefix:
            continue
        hits += 1
        rw, _, _ = cell_scale(spec, word)
        if spec.is_interval and isinstance(local, float):
            a, b = _interval_cell_corners(word)
            other = b if local == 0.0 else a
            total += (uq - u(other)) / rw
            continue
        k = local.v1  # local corner index
        pat = spec.pattern[word[-1]]
        for i, jj, c in pat:
            if i == k:
                total += c / rw * (uq - u(canonicalize(spec, word, jj)))
            elif jj == k:
                total += c / rw * (uq - u(canonicalize(spec, word, i)))
    if hits == 0:
        raise UnsupportedAddress(f"{q} has no level-{m} cell under prefix {prefix}")
    return total


def normal_derivative_sequence(spec, u, q, cell=(), levels=range(1, 15)):
    """The flux sums over the requested levels, as a list."""
    return [flux_sum(spec, u, q, m, cell) for m in levels]


def normal_derivative(
    spec: FractalSpec,
    u,
    q: Address,
    cell=(),
    tol: float = 1e-9,
    m_max: int = 14,
    m_start: int = 1,
) -> float:
    """The normal derivative at ``q`` as the limit of renormalized flux sums.

    ``u`` must be evaluable at every junction neighbouring ``q`` down to
    level ``m_max``.  With ``cell`` given, only cells extending that word are
    summed (the cell-restricted derivative, including the 1/r_w factor).
    Raises :class:`NonConvergent` when successive sums fail the Cauchy test.
    """
    prev = None
    for m in range(m_start, m_max + 1):
        cur = flux_sum(spec, u, q, m, cell)
        if prev is not None and abs(cur - prev) < tol:
            return cur
        prev = cur
    last = flux_sum(spec, u, q, m_max, cell)
    raise NonConvergent(m_max, last, prev)


def extrapolated_normal_derivative(spec, u, q, cell=(), m_max: int = 10) -> float:
    """Normal derivative via Aitken extrapolation of the flux sums.

    The plain flux sums converge geometrically but slowly; the discrete
    kernel backend accelerates them from the last three levels it can
    afford.  Falls back to the last flux sum when the sequence is already
    flat (harmonic data).
    """
    if m_max < 3:
        return flux_sum(spec, u, q, m_max, cell)
    d = [flux_sum(spec, u, q, m, cell) for m in (m_max - 2, m_max - 1, m_max)]
    den = (d[2] - d[1]) - (d[1] - d[0])
    if abs(den) < 1e-14 * max(1.0, abs(d[2])):
        return d[2]
    return d[2] - (d[2] - d[1]) ** 2 / den


def values_interpolator(graph: LevelGraph, values: np.ndarray):
    """Wrap a level-m value array as a callable on addresses."""
    spec = graph.spec

    def u(x: Address) -> float:
        if isinstance(x, float) and spec.is_interval:
            scaled = x * (1 << graph.m)
            k = int(round(scaled))
            if abs(scaled - k) > 1e-9:
                raise UnsupportedAddress(f"{x} is not a level-{graph.m} dyadic")
            word, corner = ((0,) * graph.m, 0) if k == 0 else (None, None)
            if k == 0:
                return float(values[graph.vertex_index(Vertex((), 0))])
            if k == (1 << graph.m):
                return float(values[graph.vertex_index(Vertex((), 1))])
            # interior dyadic k/2^m: canonical vertex of the cell to its left
            w = tuple((k - 1) >> (graph.m - 1 - i) & 1 for i in range(graph.m))
            return float(values[graph.vertex_index(canonicalize(spec, w, 1))])
        return float(values[graph.vertex_index(x)])

    return u
