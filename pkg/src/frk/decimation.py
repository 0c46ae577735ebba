"""Spectral decimation for the Sierpinski gasket presets.

An eigenvalue of the renormalized Laplacian is realized by a sequence of
graph eigenvalues, consecutive entries tied by a fixed rational map, with the
continuum value recovered as ``alpha * lim beta^m * lam_m``.  This module
builds such sequences on the branch analytic at zero, evaluates the
eigenfunction extension matrices, and computes the infinite products that
express boundary normal derivatives of the extended eigenfunctions.

Convention: sequences live on the positive-spectrum side, i.e. an
eigenfunction satisfies ``-Lap u = lam * u``.  The kernel engine works with
the resolvent parameter of ``(lam*I - Lap)``; the two are related by a plain
sign flip, see :func:`resolvent_to_decimation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ForbiddenValue, NonConvergent

SG_SQ5 = math.sqrt(5.0)

# (alpha, beta) with lam = alpha * lim beta^m lam_m
SCALES = {"sg": (1.5, 5.0), "sg3": (1.5, 90.0 / 7.0)}

FORBIDDEN = {
    "sg": (2.0, 5.0, 6.0),
    "sg3": (3.0, 5.0, 3.0 - SG_SQ5, 3.0 + SG_SQ5),
}

FORBIDDEN_TOL = 1e-9


def resolvent_to_decimation(lam: float) -> float:
    """Map the parameter of ``(lam*I - Lap)`` to the ``-Lap u = t u`` side."""
    return -lam


def decimation_to_resolvent(t: float) -> float:
    return -t


def forward_map(fractal: str, x: float) -> float:
    """The decimation relation: the level-(m-1) eigenvalue from level m."""
    if fractal == "sg":
        return x * (5.0 - x)
    if fractal == "sg3":
        return 3.0 * (5.0 - x) * (4.0 - x) * (3.0 - x) * x / (14.0 - 3.0 * x)
    raise ValueError(f"no decimation data for {fractal!r}")


def _check_forbidden(fractal: str, level: int, value: float) -> None:
    for f in FORBIDDEN[fractal]:
        if abs(value - f) < FORBIDDEN_TOL:
            raise ForbiddenValue(level, value, f)


@dataclass(frozen=True)
class LambdaSequence:
    """A decimation eigenvalue sequence ``lam_0 .. lam_M`` realizing ``lam``.

    Entries satisfy the decimation relation exactly by construction;
    ``residual`` reports ``|alpha * beta^M * lam_M - lam|``, the truncation
    error of the finite representation.
    """

    fractal: str
    lam: float
    entries: tuple[float, ...]
    alpha: float
    beta: float
    residual: float

    @property
    def depth(self) -> int:
        return len(self.entries) - 1

    def entry(self, i: int) -> float:
        if i < len(self.entries):
            return self.entries[i]
        raise IndexError(f"sequence holds {len(self.entries)} entries, asked for {i}")

    def shift(self, s: int) -> "LambdaSequence":
        """Drop the first ``s`` entries: the sequence of ``lam / beta^s``.

        This is the sequence of the same eigenfunction restricted to an
        s-level cell (the spectral parameter scales by ``r_j mu_j = 1/beta``
        per level).
        """
        if s == 0:
            return self
        if s >= len(self.entries):
            raise IndexError("shift exceeds stored depth")
        return LambdaSequence(
            self.fractal,
            self.lam / self.beta**s,
            self.entries[s:],
            self.alpha,
            self.beta,
            self.residual / self.beta**s,
        )


def lambda_sequence(fractal: str, lam_target: float, M: int = 48) -> LambdaSequence:
    """Build the sequence realizing ``lam_target`` on the principal branch.

    The sequence is seeded deep (where the relation is linear to machine
    precision, ``lam_D ~ lam/(alpha beta^D)``) and the forward map is iterated
    up to level 0, so consecutive entries satisfy the relation exactly.
    """
    if M < 4:
        raise ValueError("need depth M >= 4")
    alpha, beta = SCALES[fractal]
    if lam_target == 0.0:
        return LambdaSequence(fractal, 0.0, (0.0,) * (M + 1), alpha, beta, 0.0)

    # choose a seeding depth where |lam_D| < 1e-18: the principal branch is
    # then exact to double precision
    need = math.log(abs(lam_target) * 1e18 / alpha) / math.log(beta)
    D = max(M, int(math.ceil(need)) + 2)
    seq = [0.0] * (D + 1)
    seq[D] = lam_target / (alpha * beta**D)
    for i in range(D, 0, -1):
        seq[i - 1] = forward_map(fractal, seq[i])
    entries = tuple(seq[: M + 1])

    scaled = [alpha * beta**m * entries[m] for m in range(M + 1)]
    for m in range(1, M + 1):
        _check_forbidden(fractal, m, entries[m])
    # Cauchy check: successive renormalized differences must keep shrinking
    eps = 1e-13 * max(1.0, abs(lam_target))
    for m in range(2, M + 1):
        d_prev = abs(scaled[m - 1] - scaled[m - 2])
        d_cur = abs(scaled[m] - scaled[m - 1])
        if d_cur > 0.9 * d_prev + eps:
            raise NonConvergent(m, scaled[m], scaled[m - 1])
    residual = abs(scaled[M] - lam_target)
    return LambdaSequence(fractal, lam_target, entries, alpha, beta, residual)


# ---------------------------------------------------------------------------
# eigenfunction extension
# ---------------------------------------------------------------------------

def sg3_coefficients(lam: float) -> tuple[float, float, float, float, float]:
    """The rational solution of the one-cell subdivision system for SG3.

    Returns (own, toward, away, centre, denom): the values at the subdivided
    vertices for boundary data (1,0,0): ``own`` flanks the 1-vertex,
    ``toward``/``away`` are the two side values near a 0-vertex, ``centre``
    is the middle point.
    """
    phi = 3.0 * (5.0 - lam) * (3.0 - lam) * (4.0 - 6.0 * lam + lam * lam)
    if abs(phi) < FORBIDDEN_TOL:
        for f in FORBIDDEN["sg3"]:
            if abs(lam - f) < 1e-6:
                raise ForbiddenValue(-1, lam, f)
        raise ForbiddenValue(-1, lam, lam)
    a = (96.0 - 109.0 * lam + 33.0 * lam**2 - 3.0 * lam**3) / phi
    b = (16.0 - 3.0 * lam) * (3.0 - lam) / phi
    g = (36.0 - 7.0 * lam) / phi
    rho = 4.0 * (5.0 - lam) * (3.0 - lam) / phi
    return a, b, g, rho, phi


def sg3_phi(lam: float) -> float:
    return 3.0 * (5.0 - lam) * (3.0 - lam) * (4.0 - 6.0 * lam + lam * lam)


# Role table: for each (cell j, corner t) on SG3, how the value at F_j(q_t) is
# assembled from the boundary data.  ("delta", i): the boundary vertex i
# itself.  ("pair", i, k): the subdivision vertex adjacent to corner i on the
# side toward corner k: value = a_i*own + a_k*toward + a_other*away.
# ("centre",): the middle point, value = (a0+a1+a2)*centre.
_SG3_ROLES = {
    (0, 0): ("delta", 0), (0, 1): ("pair", 0, 1), (0, 2): ("pair", 0, 2),
    (1, 0): ("pair", 1, 0), (1, 1): ("delta", 1), (1, 2): ("pair", 1, 2),
    (2, 0): ("pair", 2, 0), (2, 1): ("pair", 2, 1), (2, 2): ("delta", 2),
    (3, 0): ("centre",), (3, 1): ("pair", 1, 2), (3, 2): ("pair", 2, 1),
    (4, 0): ("pair", 0, 1), (4, 1): ("pair", 1, 0), (4, 2): ("centre",),
    (5, 0): ("pair", 0, 2), (5, 1): ("centre",), (5, 2): ("pair", 2, 0),
}


def extension_matrix(fractal: str, lam: float) -> tuple[np.ndarray, ...]:
    """The one-level eigenfunction extension matrices ``A_j(lam)``.

    ``A_j(lam) @ data`` gives the values at the corners of cell j from the
    boundary data, for a graph eigenvalue ``lam`` at the finer level.  At
    ``lam = 0`` these are the harmonic extension matrices.
    """
    if fractal == "sg":
        D = (5.0 - lam) * (2.0 - lam)
        if abs(D) < FORBIDDEN_TOL:
            f = 5.0 if abs(lam - 5.0) < abs(lam - 2.0) else 2.0
            raise ForbiddenValue(-1, lam, f)
        if abs(lam - 6.0) < FORBIDDEN_TOL:
            raise ForbiddenValue(-1, lam, 6.0)
        own = 1.0
        near = (4.0 - lam) / D
        far = 2.0 / D
        mats = []
        for j in range(3):
            rows = []
            for t in range(3):
                if t == j:
                    row = np.eye(3)[j]
                else:
                    o = 3 - j - t
                    row = np.zeros(3)
                    row[j] = near
                    row[t] = near
                    row[o] = far
                rows.append(row)
            mats.append(np.array(rows))
        return tuple(mats)
    if fractal == "sg3":
        a, b, g, rho, _ = sg3_coefficients(lam)
        mats = []
        for j in range(6):
            rows = []
            for t in range(3):
                role = _SG3_ROLES[(j, t)]
                row = np.zeros(3)
                if role[0] == "delta":
                    row[role[1]] = 1.0
                elif role[0] == "centre":
                    row[:] = rho
                else:
                    _, i, k = role
                    o = 3 - i - k
                    row[i] = a
                    row[k] = b
                    row[o] = g
                rows.append(row)
            mats.append(np.array(rows))
        return tuple(mats)
    raise ValueError(f"no extension data for {fractal!r}")


# ---------------------------------------------------------------------------
# the boundary-flux product
# ---------------------------------------------------------------------------

def flux_product(seq: LambdaSequence) -> float:
    """The infinite product tau(lam) normalizing boundary normal derivatives.

    Continuously extended so that the harmonic case gives exactly 1.  The
    truncation error is far below double precision for the stored depths
    (entries decay geometrically).
    """
    if seq.lam == 0.0:
        return 1.0
    lam = seq.lam
    e = seq.entries
    if seq.fractal == "sg":
        if abs(2.0 - e[1]) < FORBIDDEN_TOL:
            raise ForbiddenValue(1, e[1], 2.0)
        value = 4.0 * lam / (3.0 * e[0] * (2.0 - e[1]))
        flat = 0
        for j in range(2, len(e)):
            f = 1.0 - e[j] / 3.0
            value *= f
            flat = flat + 1 if abs(f - 1.0) < 1e-15 else 0
            if flat >= 3:
                break
        return value
    if seq.fractal == "sg3":
        value = 2.0 * lam / (3.0 * e[0])
        flat = 0
        for j in range(1, len(e)):
            x = e[j]
            den = 1.0 - 1.5 * x + 0.25 * x * x
            if abs(den) < FORBIDDEN_TOL:
                raise ForbiddenValue(j, x, 3.0 - SG_SQ5 if x < 3 else 3.0 + SG_SQ5)
            f = (1.0 - x / 4.0) * (1.0 - x / 6.0) / den
            value *= f
            flat = flat + 1 if abs(f - 1.0) < 1e-15 else 0
            if flat >= 3:
                break
        return value
    raise ValueError(f"no product data for {seq.fractal!r}")


def flux_product_alt(seq: LambdaSequence) -> float:
    """SG3 only: the same product written with polynomial factors.

    Used to cross-check the displayed form of :func:`flux_product`
    numerically; the two are algebraically identical.
    """
    if seq.fractal != "sg3":
        raise ValueError("alternative product form exists for sg3 only")
    if seq.lam == 0.0:
        return 1.0
    e = seq.entries
    value = 2.0 * seq.lam / (3.0 * e[0])
    for j in range(1, len(e)):
        x = e[j]
        value *= (4.0 - x) * (6.0 - x) / (6.0 * (4.0 - 6.0 * x + x * x))
    return value


def boundary_normal_derivs(fractal: str, seq: LambdaSequence) -> tuple[float, float]:
    """Normal derivatives of the eigenfunction with boundary data (1,0,0).

    Returns the value at the vertex carrying the 1 and at a vertex carrying
    a 0; for both gasket presets these are ``((4-lam_0)/2 * tau, -tau)``.
    """
    if fractal not in ("sg", "sg3"):
        raise ValueError(f"no normal-derivative data for {fractal!r}")
    tau = flux_product(seq)
    lam0 = seq.entries[0]
    return (4.0 - lam0) / 2.0 * tau, -tau


# ---------------------------------------------------------------------------
# SG3 side sequences
# ---------------------------------------------------------------------------

def sg3_side_sequences(seq: LambdaSequence, depth: int | None = None):
    """The sequences (x_m, s_m) of side values of the (1,0,0) eigenfunction.

    ``x_m`` is one minus the value at the two vertices flanking the 1-corner
    after m subdivisions; ``s_m`` is the sum of the values flanking a
    0-corner.  Both start at 1 and follow the printed recursions; the
    harmonic case degenerates to the pure ratio ``(7/15)^m``.
    """
    if seq.fractal != "sg3":
        raise ValueError("side sequences are an sg3 construction")
    if depth is None:
        depth = seq.depth
    depth = min(depth, seq.depth)
    xs = [1.0]
    ss = [1.0]
    harmonic = seq.lam == 0.0
    for m in range(depth):
        nxt = seq.entries[m + 1]
        _, b, g, _, phi = sg3_coefficients(nxt)
        delta = (14.0 - 3.0 * nxt) * (6.0 - nxt) / phi  # = b + g
        ss.append(delta * ss[-1])
        if harmonic:
            xs.append(delta * xs[-1])
        else:
            cur = seq.entries[m]
            ratio = (
                (4.0 - nxt) * (6.0 - nxt) * nxt
                / ((4.0 - 6.0 * nxt + nxt * nxt) * cur)
            )
            xs.append(nxt / 4.0 + ratio * (xs[-1] - cur / 4.0))
    return tuple(xs), tuple(ss)


# ---------------------------------------------------------------------------
# SG tangent-direction limits (stable evaluation in the eigenbasis of A_0)
# ---------------------------------------------------------------------------

# A_0(lam) acts triangularly on the basis (1,1,1), (0,1,1), (0,1,-1):
#   (1,1,1)  -> (1,1,1) + lam/(2-lam) (0,1,1)
#   (0,1,1)  -> (6-lam)/((5-lam)(2-lam)) (0,1,1)
#   (0,1,-1) -> 1/(5-lam) (0,1,-1)
# which lets the products A_0^{-k} A_0(lam_k) ... A_0(lam_1) v be accumulated
# without the 5^k cancellation of a naive matrix evaluation.

def sg_tangent_apply(seq: LambdaSequence, k: int, vec) -> np.ndarray:
    """Evaluate ``A_0^{-k} A_0(lam_k) ... A_0(lam_1) vec`` stably."""
    if seq.fractal != "sg":
        raise ValueError("tangent products are an sg construction")
    if k > seq.depth:
        raise IndexError("k exceeds stored sequence depth")
    v = np.asarray(vec, dtype=float)
    c1 = v[0]
    c3 = (v[1] - v[2]) / 2.0
    c2 = (v[1] + v[2]) / 2.0 - c1
    grow = 1.0  # (5/3)^i, the conjugation of the mixing term through A_0^{-i}
    for i in range(1, k + 1):
        lam = seq.entries[i]
        D = (5.0 - lam) * (2.0 - lam)
        if abs(D) < FORBIDDEN_TOL:
            raise ForbiddenValue(i, lam, 2.0 if abs(lam - 2.0) < abs(lam - 5.0) else 5.0)
        grow *= 5.0 / 3.0
        c2 = grow * lam / (2.0 - lam) * c1 + (5.0 / 3.0) * (6.0 - lam) / D * c2
        c3 = 5.0 / (5.0 - lam) * c3
    return np.array([c1, c1 + c2 + c3, c1 + c2 - c3])
