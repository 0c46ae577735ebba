"""The resolvent kernel construction.

For a spectral parameter ``lam`` off the Dirichlet spectrum, the kernel of
``(lam*I - Lap)^{-1}`` is assembled as a sum over cells: each word w
contributes ``r_w * Psi^{(r_w mu_w lam)}`` pulled back to the cell K_w, where
``Psi`` is the bilinear level-1 block built from the one-cell spike solutions
and the inverse of their boundary-flux matrix.  The sum is finite at junction
pairs and geometrically convergent elsewhere.

Three backends supply the one-cell boundary solutions and their normal
derivatives:

* the unit interval uses hyperbolic closed forms (trigonometric for lam < 0),
* the gasket presets use eigenfunction-extension sequences and the infinite
  flux product,
* custom specs fall back to discrete solves at a configurable level.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import decimation as dec
from . import oracle
from .errors import (
    ForbiddenValue,
    OnSpectrum,
    SingularNeumann,
    SingularPrekernel,
    SingularResolvent,
    UnsupportedAddress,
)
from .structure import (
    Address,
    FractalSpec,
    Vertex,
    build_level,
    cell_scale,
    locate,
    preset,
)

COND_LIMIT = 1e12
_SG3_RING_ORDER = (9, 3, 4, 6, 8, 7, 5)  # centre first, then the six-cycle


# ---------------------------------------------------------------------------
# interval closed forms
# ---------------------------------------------------------------------------

def _interval_guard(lam: float, nearest_of: str = "dirichlet") -> None:
    """Trip when lam sits on the interval spectrum (all eigenvalues <= 0)."""
    if nearest_of == "neumann" and abs(lam) <= 1e-12:
        raise OnSpectrum("0 is a Neumann eigenvalue (constants)", nearest=0.0)
    if lam >= 0.0:
        return
    k = round(math.sqrt(-lam) / math.pi)
    if k == 0 and nearest_of == "dirichlet":
        return
    near = -((k * math.pi) ** 2)
    if abs(lam - near) <= 1e-8 * max(1.0, abs(lam)):
        raise OnSpectrum(
            f"lambda is on the interval {nearest_of} spectrum", nearest=near
        )


def _z(lam: float) -> complex:
    return cmath.sqrt(complex(lam))


def interval_spike(lam: float, x: float) -> float:
    """The level-1 spike: value 1 at 1/2, zero at the endpoints."""
    if not (0.0 <= x <= 1.0):
        raise UnsupportedAddress(f"{x} outside [0,1]")
    if lam == 0.0:
        return 2.0 * x if x <= 0.5 else 2.0 * (1.0 - x)
    _interval_guard(lam / 4.0)
    z = _z(lam)
    t = x if x <= 0.5 else 1.0 - x
    return (cmath.sinh(z * t) / cmath.sinh(z / 2.0)).real


def interval_boundary_solution(lam: float, b: int, x: float) -> float:
    """Kronecker boundary data at endpoint ``b``, eigen-equation inside."""
    if lam == 0.0:
        return 1.0 - x if b == 0 else x
    _interval_guard(lam)
    z = _z(lam)
    t = 1.0 - x if b == 0 else x
    return (cmath.sinh(z * t) / cmath.sinh(z)).real


def interval_closed_form(lam: float, x: float, y: float, bc: str = "dirichlet") -> float:
    """The resolvent kernel of the interval in closed form."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise UnsupportedAddress("points must lie in [0,1]")
    lo, hi = (x, y) if x <= y else (y, x)
    if bc == "dirichlet":
        if lam == 0.0:
            return lo * (1.0 - hi)
        _interval_guard(lam)
        z = _z(lam)
        val = cmath.sinh(z * lo) * cmath.sinh(z * (1.0 - hi)) / (z * cmath.sinh(z))
        return val.real
    if bc == "neumann":
        _interval_guard(lam, "neumann")
        z = _z(lam)
        val = cmath.cosh(z * lo) * cmath.cosh(z * (1.0 - hi)) / (z * cmath.sinh(z))
        return val.real
    raise ValueError(f"unknown boundary condition {bc!r}")


def interval_neumann_coefficient(lam: float) -> float:
    """The level-1 Neumann block coefficient cosh/(2 z sinh)."""
    _interval_guard(lam, "neumann")
    z = _z(lam)
    return (cmath.cosh(z / 2.0) / (2.0 * z * cmath.sinh(z / 2.0))).real


# ---------------------------------------------------------------------------
# per-parameter boundary-solution packs
# ---------------------------------------------------------------------------

class _IntervalPack:
    """Boundary solutions of the interval at one spectral parameter."""

    def __init__(self, lam: float):
        self.lam = lam
        _interval_guard(lam)

    def value_row(self, x) -> np.ndarray:
        if isinstance(x, Vertex):
            from .structure import vertex_position
            x = vertex_position(preset("interval"), x)
        return np.array(
            [interval_boundary_solution(self.lam, b, x) for b in (0, 1)]
        )

    def flux_matrix(self) -> np.ndarray:
        """N[a,b] = normal derivative of solution b at endpoint a."""
        lam = self.lam
        if lam == 0.0:
            return np.array([[1.0, -1.0], [-1.0, 1.0]])
        z = _z(lam)
        at1 = (z * cmath.cosh(z) / cmath.sinh(z)).real
        at0 = (-z / cmath.sinh(z)).real
        return np.array([[at1, at0], [at0, at1]])


class _GasketPack:
    """Boundary solutions of sg / sg3 at one spectral parameter.

    Values at junctions come from eigenfunction-extension products along the
    address word; normal derivatives come from the flux product.
    """

    def __init__(self, fractal: str, lam: float, depth: int = 48):
        self.fractal = fractal
        self.lam = lam
        self.seq = dec.lambda_sequence(fractal, dec.resolvent_to_decimation(lam), depth)
        self._products: dict = {(): np.eye(3)}
        self._mats: dict = {}

    def _matrix(self, level: int, letter: int) -> np.ndarray:
        key = (level, letter)
        got = self._mats.get(key)
        if got is None:
            got = dec.extension_matrix(self.fractal, self.seq.entry(level))[letter]
            self._mats[key] = got
        return got

    def _product(self, word) -> np.ndarray:
        """Values on the corners of cell ``word`` for each boundary datum."""
        word = tuple(word)
        got = self._products.get(word)
        if got is None:
            got = self._matrix(len(word), word[-1]) @ self._product(word[:-1])
            self._products[word] = got
        return got

    def value_row(self, x: Vertex) -> np.ndarray:
        """(solution_b(x))_b for the Kronecker boundary data."""
        if not isinstance(x, Vertex):
            raise UnsupportedAddress(f"gasket addresses are vertices, got {x!r}")
        if not x.word and x.v1 < 3:
            row = np.zeros(3)
            row[x.v1] = 1.0
            return row
        spec = preset(self.fractal)
        j, k = spec.cells_of_v1(x.v1)[0]
        P = self._product(x.word + (j,))
        return P[k].copy()

    def flux_matrix(self) -> np.ndarray:
        at1, at0 = dec.boundary_normal_derivs(self.fractal, self.seq)
        N = np.full((3, 3), at0)
        np.fill_diagonal(N, at1)
        return N


class _DiscretePack:
    """Boundary solutions of a custom spec from discrete level-m solves."""

    def __init__(self, spec: FractalSpec, lam: float, level: int):
        self.spec = spec
        self.lam = lam
        self.level = level
        self.graph = build_level(spec, level)
        self._values = [
            oracle.boundary_spike_values(spec, lam, b, level) for b in range(spec.n0)
        ]

    def value_row(self, x: Vertex) -> np.ndarray:
        i = self.graph.vertex_index(x)
        return np.array([v[i] for v in self._values])

    def flux_matrix(self) -> np.ndarray:
        n0 = self.spec.n0
        N = np.zeros((n0, n0))
        for b in range(n0):
            u = oracle.values_interpolator(self.graph, self._values[b])
            for a in range(n0):
                N[a, b] = oracle.extrapolated_normal_derivative(
                    self.spec, u, Vertex((), a), m_max=self.level
                )
        return N


# ---------------------------------------------------------------------------
# prekernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Prekernel:
    """The level-1 flux matrix ``B`` and its inverse ``G`` at one parameter."""

    lam: float
    index: tuple[int, ...]  # level-1 interior vertex ids, ascending
    B: np.ndarray
    G: np.ndarray
    cond: float


def _sg_closed_G(seq_cell: dec.LambdaSequence) -> np.ndarray:
    lam0 = seq_cell.entries[0]
    tau = dec.flux_product(seq_cell)
    den = 5.0 * (5.0 - lam0) * (2.0 - lam0) * tau
    if abs(den) < 1e-12:
        raise SingularPrekernel("flux matrix not invertible", lam0=lam0)
    G = np.full((3, 3), 3.0 / den)
    np.fill_diagonal(G, 3.0 * (3.0 - lam0) / den)
    return G


def _sg3_closed_G(seq_cell: dec.LambdaSequence) -> np.ndarray:
    lam = seq_cell.entries[0]
    tau = dec.flux_product(seq_cell)
    phi = dec.sg3_phi(lam)
    den = 15.0 * (6.0 - lam) * tau * phi
    if abs(den) < 1e-10:
        raise SingularPrekernel("flux matrix not invertible", lam0=lam)
    k1 = (3.0 - lam) * (5.0 - lam) * (6.0 - lam)
    k2 = 201.0 - 300.0 * lam + 134.5 * lam**2 - 24.0 * lam**3 + 1.5 * lam**4
    k3 = 87.0 - 75.0 * lam + 19.0 * lam**2 - 1.5 * lam**3
    k4 = 57.0 - 24.0 * lam + 2.5 * lam**2
    k5 = 51.0 - 15.0 * lam + lam**2
    ring = [k2, k3, k4, k5, k4, k3]
    Gp = np.zeros((7, 7))
    Gp[0, 0] = (2.0 - lam) * k1
    Gp[0, 1:] = k1
    Gp[1:, 0] = k1
    for i in range(6):
        for j in range(6):
            Gp[1 + i, 1 + j] = ring[(j - i) % 6]
    Gp *= 14.0 / den
    # permute from (centre, cycle) order to ascending vertex-id order
    perm = [_SG3_RING_ORDER.index(v) for v in range(3, 10)]
    return Gp[np.ix_(perm, perm)]


def sg3_det_formula(seq_cell: dec.LambdaSequence) -> float:
    """The closed-form determinant of the sg3 prekernel.

    ``(7/15)^7 * 6 (4 - 6 lam + lam^2) / ((6 - lam) phi(lam)^2 tau^7)``:
    seven factors of the flux product, one per interior vertex.
    """
    lam = seq_cell.entries[0]
    tau = dec.flux_product(seq_cell)
    phi = dec.sg3_phi(lam)
    return (7.0 / 15.0) ** 7 * 6.0 * (4.0 - 6.0 * lam + lam * lam) / (
        (6.0 - lam) * phi**2 * tau**7
    )


class KernelEngine:
    """Caches per-parameter packs and prekernels for one (spec, lam)."""

    def __init__(self, spec: FractalSpec, lam: float, backend_level: int | None = None):
        self.spec = spec
        self.lam = float(lam)
        self.interior = spec.interior1
        self.iindex = {v: i for i, v in enumerate(self.interior)}
        if spec.name in ("interval", "sg", "sg3"):
            self.kind = spec.name
        elif spec.is_interval:
            self.kind = "interval"
        else:
            self.kind = "custom"
        if backend_level is None:
            # keep the discrete backend's graph near ~4e4 cells
            backend_level = max(3, min(10, int(math.log(4e4) / math.log(spec.J))))
        self.backend_level = min(backend_level, oracle.max_level())
        self._packs: dict = {}
        self._prekernels: dict = {}
        self._psi_cache: dict = {}

    # -- packs ---------------------------------------------------------------

    def pack(self, nu: float):
        got = self._packs.get(nu)
        if got is None:
            if self.kind == "interval":
                got = _IntervalPack(nu)
            elif self.kind in ("sg", "sg3"):
                try:
                    got = _GasketPack(self.kind, nu)
                except ForbiddenValue as e:
                    raise SingularResolvent(
                        "spectral parameter hits a forbidden decimation value",
                        lam_w=nu, level=e.level, forbidden=e.forbidden,
                    ) from None
            else:
                got = _DiscretePack(self.spec, nu, self.backend_level)
            self._packs[nu] = got
        return got

    # -- prekernels ------------------------------------------------------------

    def prekernel(self, nu: float) -> Prekernel:
        got = self._prekernels.get(nu)
        if got is not None:
            return got
        spec = self.spec
        ni = len(self.interior)
        B = np.zeros((ni, ni))
        for p in self.interior:
            ip = self.iindex[p]
            for j, kp in spec.cells_of_v1(p):
                N = self.pack(spec.r[j] * spec.mu[j] * nu).flux_matrix()
                inv_r = 1.0 / spec.r[j]
                for kq in range(spec.n0):
                    q = spec.gluing[j][kq]
                    if q < spec.n0:
                        continue
                    B[ip, self.iindex[q]] += inv_r * N[kq, kp]
        cond = float(np.linalg.cond(B))
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularPrekernel(
                "flux matrix condition number exceeds limit", lam_w=nu, cond=cond
            )
        nu_cell = spec.r[0] * spec.mu[0] * nu
        if self.kind == "sg":
            G = _sg_closed_G(self.pack(nu_cell).seq)
        elif self.kind == "sg3":
            G = _sg3_closed_G(self.pack(nu_cell).seq)
        elif self.kind == "interval":
            _interval_guard(nu)  # cond of a 1x1 matrix cannot flag this
            if nu == 0.0:
                G = np.array([[0.25]])
            else:
                z = _z(nu)
                G = np.array(
                    [[(cmath.sinh(z / 2) / (2 * z * cmath.cosh(z / 2))).real]]
                )
        else:
            G = np.linalg.inv(B)
        got = Prekernel(nu, self.interior, B, G, cond)
        self._prekernels[nu] = got
        return got

    def boundary_flux_columns(self, nu: float) -> np.ndarray:
        """B entries against the boundary: sum of cell fluxes at V0 corners."""
        spec = self.spec
        ni = len(self.interior)
        Bb = np.zeros((ni, spec.n0))
        for p in self.interior:
            ip = self.iindex[p]
            for j, kp in spec.cells_of_v1(p):
                N = self.pack(spec.r[j] * spec.mu[j] * nu).flux_matrix()
                inv_r = 1.0 / spec.r[j]
                for kq in range(spec.n0):
                    q = spec.gluing[j][kq]
                    if q < spec.n0:
                        Bb[ip, q] += inv_r * N[kq, kp]
        return Bb

    # -- spike vectors and the level-1 block -----------------------------------

    def psi_vec(self, nu: float, local: Address) -> np.ndarray:
        key = (nu, local)
        got = self._psi_cache.get(key)
        if got is not None:
            return got
        spec = self.spec
        out = np.zeros(len(self.interior))
        for word, sub in locate(spec, local, 1):
            j = word[0]
            row = self.pack(spec.r[j] * spec.mu[j] * nu).value_row(sub)
            for k in range(spec.n0):
                q = spec.gluing[j][k]
                if q >= spec.n0:
                    out[self.iindex[q]] = row[k]
        self._psi_cache[key] = out
        return out

    def level_one_block(self, nu: float, lx: Address, ly: Address) -> float:
        G = self.prekernel(nu).G
        vx = self.psi_vec(nu, lx)
        vy = self.psi_vec(nu, ly)
        return float(vx @ G @ vy)


_ENGINES: dict = {}


def engine(spec: FractalSpec, lam: float, backend_level: int | None = None) -> KernelEngine:
    key = (spec, float(lam), backend_level)
    got = _ENGINES.get(key)
    if got is None:
        got = KernelEngine(spec, lam, backend_level)
        _ENGINES[key] = got
    return got


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

class SpikeFunction:
    """The level-1 solution with value 1 at one interior junction of V1.

    Solves the eigen-equation on each 1-cell, vanishes at the other level-1
    vertices, and is supported on the cells containing ``p``.
    """

    def __init__(self, spec: FractalSpec, lam: float, p, backend_level=None):
        if isinstance(p, Vertex):
            if p.word or p.v1 < spec.n0:
                raise UnsupportedAddress(f"{p} is not an interior level-1 vertex")
            p = p.v1
        if p not in spec.interior1:
            raise ValueError(f"{p} is not an interior level-1 vertex id")
        self.spec = spec
        self.lam = float(lam)
        self.p = int(p)
        self._engine = engine(spec, lam, backend_level)
        self._slot = self._engine.iindex[self.p]

    def __call__(self, x: Address) -> float:
        return float(self._engine.psi_vec(self.lam, x)[self._slot])

    def values_on_level(self, m: int) -> np.ndarray:
        g = build_level(self.spec, m)
        return np.array([self(v) for v in g.vertices])


def spike(spec: FractalSpec, lam: float, p, backend_level=None) -> SpikeFunction:
    return SpikeFunction(spec, lam, p, backend_level)


def flux_matrix(spec: FractalSpec, lam: float, backend_level=None) -> np.ndarray:
    """The symmetric matrix of summed spike normal derivatives over V1 \\ V0."""
    return engine(spec, lam, backend_level).prekernel(lam).B


def level_spike(spec: FractalSpec, lam: float, p: Vertex, m: int, backend_level=None):
    """The level-m spike: eigen-solution on m-cells, Kronecker data on V_m.

    Returns a callable; the level-1 case coincides with :class:`SpikeFunction`.
    """
    if not isinstance(p, Vertex) or p.birth_level(spec.n0) > m:
        raise UnsupportedAddress(f"{p!r} is not a level-{m} vertex")
    eng = engine(spec, lam, backend_level)
    pcells = {w: loc.v1 for w, loc in locate(spec, p, m)}

    def xi(x: Address) -> float:
        for w, locx in locate(spec, x, m):
            kp = pcells.get(w)
            if kp is not None:
                rw, muw, _ = cell_scale(spec, w)
                return float(eng.pack(rw * muw * lam).value_row(locx)[kp])
        return 0.0

    return xi


def prekernel(spec: FractalSpec, lam: float, backend_level=None) -> Prekernel:
    return engine(spec, lam, backend_level).prekernel(lam)


def level_one_kernel(spec: FractalSpec, lam: float, x: Address, y: Address,
                     backend_level=None) -> float:
    """The bilinear level-1 block: spikes contracted against the prekernel."""
    return engine(spec, lam, backend_level).level_one_block(lam, x, y)


@dataclass(frozen=True)
class KernelEvaluation:
    """One kernel evaluation with its truncation certificate."""

    x: Address
    y: Address
    lam: float
    bc: str
    depth: int
    value: float
    bound: float
    partials: tuple[float, ...]


_MAX_DEPTH = 31  # one letter below the word-length guard


def _series(spec, lam, x, y, M, tol, backend_level):
    eng = engine(spec, lam, backend_level)
    rho = max(spec.r)
    total = 0.0
    partials = []
    c_emp = 0.0
    first_term = 0.0
    zero_streak = 0
    exhausted = False
    m = 0
    limit = min(M, _MAX_DEPTH) if M is not None else _MAX_DEPTH
    while m <= limit:
        lx = dict(locate(spec, x, m))
        pairs = [(w, loc, ly) for w, ly in locate(spec, y, m) if (loc := lx.get(w)) is not None]
        if not pairs:
            exhausted = True
            break
        term = 0.0
        for w, locx, locy in pairs:
            rw, muw, _ = cell_scale(spec, w)
            try:
                term += rw * eng.level_one_block(rw * muw * lam, locx, locy)
            except SingularPrekernel as e:
                raise SingularResolvent(
                    "prekernel singular inside the series",
                    word=w, lam_w=rw * muw * lam,
                ) from e
        total += term
        partials.append(total)
        if m == 0:
            first_term = abs(term)
        else:
            c_emp = max(c_emp, abs(term) / rho**m)
        zero_streak = zero_streak + 1 if term == 0.0 else 0
        m += 1
        if zero_streak >= 2:
            # both points sit on cell corners from here on: the tail vanishes
            exhausted = True
            break
        if M is None and m >= 3 and c_emp * rho**m / (1.0 - rho) < tol:
            break
    if exhausted:
        bound = 0.0
    else:
        C = c_emp if c_emp > 0.0 else first_term / rho
        bound = C * rho ** (len(partials)) / (1.0 - rho)
    return KernelEvaluation(
        x, y, lam, "dirichlet", len(partials) - 1, total, bound, tuple(partials)
    )


def dirichlet_kernel(spec: FractalSpec, lam: float, x: Address, y: Address,
                     M: int | None = None, tol: float = 1e-9,
                     backend_level=None) -> KernelEvaluation:
    """Evaluate the Dirichlet resolvent kernel at (x, y).

    With ``M`` given the word sum is truncated at depth M; otherwise depth is
    chosen adaptively from the geometric tail bound and ``tol``.  At junction
    pairs the series is finite and the bound is exactly zero.
    """
    return _series(spec, lam, x, y, M, tol, backend_level)


def neumann_flux_matrix(spec: FractalSpec, lam: float, backend_level=None) -> np.ndarray:
    """N[a,b]: normal derivative at boundary vertex a of boundary solution b."""
    return engine(spec, lam, backend_level).pack(lam).flux_matrix()


def neumann_c_matrix(spec: FractalSpec, lam: float, backend_level=None) -> np.ndarray:
    """The boundary correction matrix: inverse of the boundary flux matrix."""
    _neumann_guard(spec, lam)
    N = neumann_flux_matrix(spec, lam, backend_level)
    cond = np.linalg.cond(N)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularNeumann(
            "boundary flux matrix is singular: lambda is a Neumann eigenvalue",
            lam=lam, cond=float(cond),
        )
    return np.linalg.inv(N)


def _neumann_guard(spec: FractalSpec, lam: float) -> None:
    if spec.is_interval:
        try:
            _interval_guard(lam, "neumann")
        except OnSpectrum as e:
            raise SingularNeumann(str(e)) from None
        return
    if abs(lam) <= 1e-12:
        raise SingularNeumann("0 is a Neumann eigenvalue (constants)", lam=lam)
    level = {"sg": 5, "sg3": 3}.get(spec.name, 3)
    try:
        ev = oracle.neumann_spectrum(spec, level)
    except ValueError:
        return
    near = float(ev[np.argmin(np.abs(ev - lam))])
    if abs(lam - near) <= oracle.GUARD_REL_GAP * max(1.0, abs(lam), abs(near)):
        raise SingularNeumann(
            "lambda is within guard distance of the discrete Neumann spectrum",
            nearest=near, level=level,
        )


def neumann_kernel(spec: FractalSpec, lam: float, x: Address, y: Address,
                   M: int | None = None, tol: float = 1e-9,
                   backend_level=None) -> KernelEvaluation:
    """The Neumann resolvent kernel: Dirichlet kernel plus boundary correction."""
    base = dirichlet_kernel(spec, lam, x, y, M, tol, backend_level)
    C = neumann_c_matrix(spec, lam, backend_level)
    pk = engine(spec, lam, backend_level).pack(lam)
    hx = pk.value_row(x)
    hy = pk.value_row(y)
    corr = float(hx @ C @ hy)
    return KernelEvaluation(
        x, y, lam, "neumann", base.depth, base.value + corr, base.bound,
        tuple(p + corr for p in base.partials),
    )


def apply_resolvent(spec: FractalSpec, lam: float, f, x: Address,
                    M: int | None = None, m_quad: int = 8,
                    bc: str = "dirichlet", backend_level=None) -> float:
    """Quadrature of the kernel against ``f``: one application of the resolvent.

    The integral is approximated cell-by-cell at depth ``m_quad`` with the
    corner-average rule ``sum_w mu_w * mean_k [G(x, corner_k) f(corner_k)]``.
    ``f`` is a callable on addresses, an array of values over the level
    ``m_quad`` vertices, or a pair ("cells", g) with g a callable on
    depth-``m_quad`` words for piecewise-constant data.
    """
    kern = dirichlet_kernel if bc == "dirichlet" else neumann_kernel
    g = build_level(spec, m_quad)
    if isinstance(f, np.ndarray):
        fv = np.asarray(f, dtype=float)
        if fv.shape != (g.n,):
            raise ValueError(f"f has shape {fv.shape}, expected ({g.n},)")
        f = lambda v, _fv=fv, _g=g: float(_fv[_g.vertex_index(v)])
    values: dict[int, float] = {}

    def kernel_at(vi: int) -> float:
        got = values.get(vi)
        if got is None:
            got = kern(spec, lam, x, g.vertices[vi], M, backend_level=backend_level).value
            values[vi] = got
        return got

    per_cell = None
    if isinstance(f, tuple) and len(f) == 2 and f[0] == "cells":
        per_cell = f[1]
    total = 0.0
    for word, corners, muw, _ in g.cells:
        if per_cell is not None:
            fw = per_cell(word)
            if fw == 0.0:
                continue
            mean = sum(kernel_at(vi) for vi in corners) / len(corners)
            total += muw * fw * mean
        else:
            mean = sum(kernel_at(vi) * f(g.vertices[vi]) for vi in corners) / len(corners)
            total += muw * mean
    return total


@dataclass(frozen=True)
class CrossScaleReport:
    lam: float
    residual: float
    matrix: np.ndarray


def cross_scale_check(spec: FractalSpec, lam: float, backend_level=None) -> CrossScaleReport:
    """Residual of the identity tying interior flux rows to boundary columns.

    For every interior p and boundary q the flux matrix satisfies
    ``sum_s B[p,s] h_q(s) = -B[p,q]`` with h_q the boundary solutions; the
    report carries the elementwise residual matrix and its max.
    """
    eng = engine(spec, lam, backend_level)
    pk = eng.prekernel(lam)
    Bb = eng.boundary_flux_columns(lam)
    pack = eng.pack(lam)
    H = np.array([pack.value_row(Vertex((), s)) for s in spec.interior1])
    resid = pk.B @ H + Bb
    return CrossScaleReport(lam, float(np.abs(resid).max()), resid)
