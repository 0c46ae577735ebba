"""Post-critically finite self-similar structures and their graph approximations.

A fractal is described by a :class:`FractalSpec`: an iterated function system
with ``J`` maps, energy renormalizers ``r_j``, measure weights ``mu_j``, a
boundary of ``n0`` vertices, and a gluing table saying which level-1 vertex
each map sends each boundary vertex to.  From that combinatorial data we build
the approximating graphs ``V_m`` with canonical, level-stable vertex ids.

Conventions
-----------
* Map indices ("letters") are 0-based; a word is a tuple of letters, read left
  to right as outermost-first composition.
* Level-1 vertex ids: ``0..n0-1`` are the boundary V0, the rest are the
  interior junctions V1 \\ V0.
* A junction vertex is addressed canonically as ``Vertex(word=u, v1=p)``: the
  point born at level ``len(u)+1`` as interior level-1 vertex ``p`` of the
  cell copy ``u``.  Boundary vertices are ``Vertex((), k)`` with ``k < n0``.
* The unit interval additionally admits plain floats in [0, 1] as addresses.
* Edge conductances at level m are ``pattern / r_w`` with ``|w| = m`` the full
  word of the containing m-cell.  With the default unit pattern this is the
  normalization for which the renormalized graph Laplacians converge to the
  Laplacian of the self-similar energy (factor 4^m on the interval).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import NotAPreset, SpecError, UnsupportedAddress

MAX_WORD_LEN = 32

Letters = tuple[int, ...]


@dataclass(frozen=True)
class Word:
    """A finite word over the map alphabet, addressing the cell ``K_w``."""

    letters: Letters = ()

    def __post_init__(self):
        letters = tuple(int(a) for a in self.letters)
        if len(letters) > MAX_WORD_LEN:
            raise ValueError(f"word longer than {MAX_WORD_LEN} letters")
        if any(a < 0 for a in letters):
            raise ValueError("letters must be non-negative map indices")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def extended(self, j: int) -> "Word":
        return Word(self.letters + (int(j),))


def _letters(w) -> Letters:
    """Accept a Word, a tuple/list of letters, or a single int."""
    if isinstance(w, Word):
        return w.letters
    if isinstance(w, int):
        return (w,)
    return tuple(int(a) for a in w)


@dataclass(frozen=True)
class Vertex:
    """Canonical address of a junction point.

    ``word`` is the cell copy in which the point first appears; ``v1`` is its
    level-1 vertex id inside that copy.  Boundary points have ``word=()`` and
    ``v1 < n0``.
    """

    word: Letters = ()
    v1: int = 0

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(a) for a in self.word))
        object.__setattr__(self, "v1", int(self.v1))

    @property
    def sort_key(self):
        return (len(self.word), self.word, self.v1)

    def birth_level(self, n0: int) -> int:
        return 0 if (not self.word and self.v1 < n0) else len(self.word) + 1

    def label(self, n0: int | None = None) -> str:
        if not self.word and n0 is not None and self.v1 < n0:
            return f"q{self.v1}"
        return ".".join(str(a) for a in self.word) + f":{self.v1}"


Address = Union[Vertex, float]


@dataclass(frozen=True)
class FractalSpec:
    """A p.c.f. self-similar structure with energy and measure data.

    ``gluing[j][k]`` is the level-1 vertex id of the image of boundary vertex
    ``k`` under map ``j``.  ``pattern`` holds the cell-local conductances: for
    each map ``j`` a tuple of ``(a, b, c)`` with ``a < b`` boundary indices.
    """

    name: str
    J: int
    r: tuple[float, ...]
    mu: tuple[float, ...]
    n0: int
    gluing: tuple[tuple[int, ...], ...]
    pattern: tuple[tuple[tuple[int, int, float], ...], ...]

    def __post_init__(self):
        _validate_spec(self)

    # -- structural helpers -------------------------------------------------

    @property
    def n1(self) -> int:
        return max(max(row) for row in self.gluing) + 1

    @property
    def interior1(self) -> tuple[int, ...]:
        """Level-1 interior vertex ids, ascending."""
        return tuple(v for v in range(self.n1) if v >= self.n0)

    def cells_of_v1(self, v: int) -> tuple[tuple[int, int], ...]:
        """All (map j, boundary index k) with gluing[j][k] == v."""
        return tuple(
            (j, k)
            for j in range(self.J)
            for k in range(self.n0)
            if self.gluing[j][k] == v
        )

    def corner_cells(self, b: int) -> tuple[tuple[int, int], ...]:
        """Cells containing the global boundary vertex ``b`` (with local index)."""
        return self.cells_of_v1(b)

    def same_structure(self, other: "FractalSpec") -> bool:
        """Structural equality, ignoring the name tag."""
        return (
            self.J == other.J
            and self.r == other.r
            and self.mu == other.mu
            and self.n0 == other.n0
            and self.gluing == other.gluing
            and self.pattern == other.pattern
        )

    @property
    def is_interval(self) -> bool:
        return self.name == "interval" or self.same_structure(preset("interval"))


def _default_pattern(J: int, n0: int) -> tuple:
    cell = tuple((a, b, 1.0) for a in range(n0) for b in range(a + 1, n0))
    return tuple(cell for _ in range(J))


def _validate_spec(spec: FractalSpec) -> None:
    if spec.J < 1:
        raise SpecError("J", "need at least one map")
    if len(spec.r) != spec.J:
        raise SpecError("r", f"expected {spec.J} entries, got {len(spec.r)}")
    if len(spec.mu) != spec.J:
        raise SpecError("mu", f"expected {spec.J} entries, got {len(spec.mu)}")
    for i, v in enumerate(spec.r):
        if not (0.0 < v < 1.0):
            raise SpecError(f"r[{i}]", f"renormalizer {v!r} outside (0,1)")
    for i, v in enumerate(spec.mu):
        if not (0.0 < v < 1.0):
            raise SpecError(f"mu[{i}]", f"measure weight {v!r} outside (0,1)")
    if abs(sum(spec.mu) - 1.0) > 1e-12:
        raise SpecError("mu", f"weights sum to {sum(spec.mu)!r}, expected 1")
    if spec.n0 < 1:
        raise SpecError("n0", "boundary must be non-empty")
    if len(spec.gluing) != spec.J:
        raise SpecError("gluing", f"expected {spec.J} rows, got {len(spec.gluing)}")
    seen = set()
    for j, row in enumerate(spec.gluing):
        if len(row) != spec.n0:
            raise SpecError(f"gluing[{j}]", f"expected {spec.n0} entries")
        for k, v in enumerate(row):
            if v < 0:
                raise SpecError(f"gluing[{j}][{k}]", "negative vertex id")
            if (j, v) in seen:
                raise SpecError(
                    f"gluing[{j}][{k}]", f"vertex {v} appears twice in one cell"
                )
            seen.add((j, v))
    n1 = max(max(row) for row in spec.gluing) + 1
    hit = {v for row in spec.gluing for v in row}
    missing = [v for v in range(n1) if v not in hit]
    if missing:
        raise SpecError("gluing", f"vertex ids {missing} are never assigned")
    for b in range(spec.n0):
        if b not in hit:
            raise SpecError("gluing", f"boundary vertex {b} is not covered by any cell")
    if len(spec.pattern) != spec.J:
        raise SpecError("conductances", f"expected {spec.J} cell patterns")
    for j, cell in enumerate(spec.pattern):
        have = {}
        for a, b, c in cell:
            if not (0 <= a < spec.n0 and 0 <= b < spec.n0 and a != b):
                raise SpecError(f"conductances[{j}]", f"bad boundary pair ({a},{b})")
            if c < 0:
                raise SpecError(f"conductances[{j}]", f"negative conductance {c!r}")
            key = (min(a, b), max(a, b))
            if key in have and have[key] != c:
                raise SpecError(
                    f"conductances[{j}]",
                    f"pair {key} given twice with different values",
                )
            have[key] = c


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def preset(name: str) -> FractalSpec:
    """The built-in structures: ``interval``, ``sg``, ``sg3``."""
    if name == "interval":
        return FractalSpec(
            name="interval",
            J=2,
            r=(0.5, 0.5),
            mu=(0.5, 0.5),
            n0=2,
            gluing=((0, 2), (2, 1)),
            pattern=_default_pattern(2, 2),
        )
    if name == "sg":
        # boundary q0,q1,q2; midpoints: 3 = (q0 q1), 4 = (q0 q2), 5 = (q1 q2)
        return FractalSpec(
            name="sg",
            J=3,
            r=(3 / 5, 3 / 5, 3 / 5),
            mu=(1 / 3, 1 / 3, 1 / 3),
            n0=3,
            gluing=((0, 3, 4), (3, 1, 5), (4, 5, 2)),
            pattern=_default_pattern(3, 3),
        )
    if name == "sg3":
        # Six upward cells of the level-3 gasket.  Interior ids:
        # 3,4 flank q0; 5 (left) / 6 (right) sit mid-side; 7,8 flank the
        # bottom; 9 is the centre point, contained in three 1-cells.
        return FractalSpec(
            name="sg3",
            J=6,
            r=(7 / 15,) * 6,
            mu=(1 / 6,) * 6,
            n0=3,
            gluing=(
                (0, 3, 4),   # top corner cell
                (5, 1, 7),   # bottom-left corner cell
                (6, 8, 2),   # bottom-right corner cell
                (9, 7, 8),   # bottom-middle cell
                (3, 5, 9),   # middle-left cell
                (4, 9, 6),   # middle-right cell
            ),
            pattern=_default_pattern(6, 3),
        )
    raise NotAPreset(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# spec documents
# ---------------------------------------------------------------------------

def load_spec(document) -> FractalSpec:
    """Validate a fractal-spec document (JSON text or an already-parsed dict)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise SpecError("$", f"not valid JSON: {e}") from None
    elif isinstance(document, dict):
        doc = document
    else:
        raise SpecError("$", f"unsupported document type {type(document).__name__}")

    if doc.get("schema") != 1:
        raise SpecError("schema", f"unsupported schema {doc.get('schema')!r}")
    for key in ("J", "r", "mu", "n0", "gluing"):
        if key not in doc:
            raise SpecError(key, "missing required field")
    try:
        J = int(doc["J"])
        n0 = int(doc["n0"])
        r = tuple(float(v) for v in doc["r"])
        mu = tuple(float(v) for v in doc["mu"])
    except (TypeError, ValueError) as e:
        raise SpecError("$", f"malformed scalar field: {e}") from None

    gluing = [[-1] * n0 for _ in range(J)]
    for i, entry in enumerate(doc["gluing"]):
        try:
            j, k, v = int(entry["cell"]), int(entry["boundary_index"]), int(entry["vertex_id"])
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"gluing[{i}]", "need cell, boundary_index, vertex_id") from None
        if not (0 <= j < J):
            raise SpecError(f"gluing[{i}].cell", f"cell {j} out of range")
        if not (0 <= k < n0):
            raise SpecError(f"gluing[{i}].boundary_index", f"index {k} out of range")
        if gluing[j][k] != -1:
            raise SpecError(f"gluing[{i}]", f"(cell={j}, boundary_index={k}) given twice")
        gluing[j][k] = v
    for j in range(J):
        for k in range(n0):
            if gluing[j][k] == -1:
                raise SpecError("gluing", f"missing entry for (cell={j}, boundary_index={k})")
    gluing = tuple(tuple(row) for row in gluing)

    if "conductances" in doc:
        n1 = max(max(row) for row in gluing) + 1
        v1_cells = {
            v: [(j, k) for j in range(J) for k in range(n0) if gluing[j][k] == v]
            for v in range(n1)
        }
        per_cell: list[dict] = [dict() for _ in range(J)]
        for i, entry in enumerate(doc["conductances"]):
            try:
                u, v, c = int(entry["u"]), int(entry["v"]), float(entry["c"])
            except (KeyError, TypeError, ValueError):
                raise SpecError(f"conductances[{i}]", "need u, v, c") from None
            if u == v or not (0 <= u < n1 and 0 <= v < n1):
                raise SpecError(f"conductances[{i}]", f"bad vertex pair ({u},{v})")
            cells_u = {j for j, _ in v1_cells.get(u, [])}
            shared = [j for j, _ in v1_cells.get(v, []) if j in cells_u]
            if not shared:
                raise SpecError(
                    f"conductances[{i}]", f"vertices {u},{v} share no level-1 cell"
                )
            for j in shared:
                ku = next(k for jj, k in v1_cells[u] if jj == j)
                kv = next(k for jj, k in v1_cells[v] if jj == j)
                key = (min(ku, kv), max(ku, kv))
                if key in per_cell[j] and per_cell[j][key] != c:
                    raise SpecError(
                        f"conductances[{i}]",
                        f"pair {u},{v} given twice with different values",
                    )
                per_cell[j][key] = c
        pattern = tuple(
            tuple((a, b, per_cell[j].get((a, b), 1.0)) for a in range(n0) for b in range(a + 1, n0))
            for j in range(J)
        )
    else:
        pattern = _default_pattern(J, n0)

    return FractalSpec(
        name=str(doc.get("name", "custom")),
        J=J, r=r, mu=mu, n0=n0, gluing=gluing, pattern=pattern,
    )


def load_spec_file(path: str) -> FractalSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return load_spec(fh.read())


# ---------------------------------------------------------------------------
# words and scales
# ---------------------------------------------------------------------------

def cell_scale(spec: FractalSpec, w) -> tuple[float, float, float]:
    """(r_w, mu_w, r_w*mu_w) for the cell K_w.

    The third component is the factor by which the spectral parameter is
    multiplied when descending into K_w.
    """
    letters = _letters(w)
    if len(letters) > MAX_WORD_LEN:
        raise ValueError(f"word longer than {MAX_WORD_LEN} letters")
    rw = 1.0
    muw = 1.0
    for a in letters:
        if not (0 <= a < spec.J):
            raise ValueError(f"letter {a} out of range for J={spec.J}")
        rw *= spec.r[a]
        muw *= spec.mu[a]
    return rw, muw, rw * muw


def canonicalize(spec: FractalSpec, word, corner: int) -> Vertex:
    """Canonical vertex for the corner ``corner`` of the cell ``word``.

    Walks up through the gluing table until the vertex is expressed in the
    cell copy where it first appears.
    """
    w = _letters(word)
    k = int(corner)
    while w:
        j = w[-1]
        v = spec.gluing[j][k]
        if v >= spec.n0:
            return Vertex(w[:-1], v)
        k = v
        w = w[:-1]
    return Vertex((), k)


def vertex_position(spec: FractalSpec, x: Address) -> float:
    """Interval only: the point of [0,1] addressed by ``x``."""
    if not spec.is_interval:
        raise UnsupportedAddress("real coordinates exist only on the interval preset")
    if isinstance(x, float):
        return x
    pos = {0: 0.0, 1: 1.0, 2: 0.5}[x.v1]
    for a in reversed(x.word):
        pos = pos / 2.0 + (0.5 if a == 1 else 0.0)
    return pos


def locate(spec: FractalSpec, x: Address, m: int) -> tuple[tuple[Letters, Address], ...]:
    """All level-m cells containing ``x``, with the local address in each.

    Interior points give one cell; junction points give every containing
    cell.  Local addresses are again addresses of the unit fractal.
    """
    if m < 0:
        raise ValueError("level must be non-negative")
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return _locate_interval(spec, float(x), m)
    if not isinstance(x, Vertex):
        raise UnsupportedAddress(f"cannot locate {x!r}")
    if m == 0:
        return (((), x),)
    birth = x.birth_level(spec.n0)
    if birth == 0:
        return tuple((w, Vertex((), k)) for w, k in _corner_cells_deep(spec, x.v1, m))
    if m < birth:
        return (((x.word[:m]), Vertex(x.word[m:], x.v1)),)
    out = []
    for j, k in spec.cells_of_v1(x.v1):
        base = x.word + (j,)
        for w, kk in _corner_cells_deep(spec, k, m - birth):
            out.append((base + w, Vertex((), kk)))
    return tuple(out)


def _corner_cells_deep(spec, b: int, depth: int):
    """Words of length ``depth`` whose cells contain boundary vertex ``q_b``."""
    if depth == 0:
        return (((), b),)
    out = []
    for j, k in spec.corner_cells(b):
        for w, kk in _corner_cells_deep(spec, k, depth - 1):
            out.append(((j,) + w, kk))
    return tuple(out)


def _locate_interval(spec, x: float, m: int):
    if not (0.0 <= x <= 1.0):
        raise UnsupportedAddress(f"{x} outside [0,1]")
    if m == 0:
        return (((), x),)
    scaled = x * (1 << m)
    k = int(math.floor(scaled))
    out = []
    if scaled == k and 0 < k:
        out.append((_dyadic_word(k - 1, m), 1.0))
    if k < (1 << m):
        out.append((_dyadic_word(k, m), scaled - k))
    return tuple(out)


def _dyadic_word(k: int, m: int) -> Letters:
    return tuple((k >> (m - 1 - i)) & 1 for i in range(m))


# ---------------------------------------------------------------------------
# level graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelGraph:
    """The level-m approximating graph with canonical vertex order.

    Vertices are sorted boundary-first, then by birth cell; ``V_m`` embeds in
    ``V_{m+1}`` id-for-id.  ``hweight[x]`` is the measure integral of the
    level-m tent function at x, the per-vertex renormalizer of the graph
    Laplacian.
    """

    spec: FractalSpec
    m: int
    vertices: tuple[Vertex, ...]
    edges_u: np.ndarray
    edges_v: np.ndarray
    edges_c: np.ndarray
    cells: tuple[tuple[Letters, tuple[int, ...], float, float], ...]
    deg_cells: np.ndarray
    hweight: np.ndarray
    index: dict = field(compare=False, repr=False, default_factory=dict)
    cells_at: dict = field(compare=False, repr=False, default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def n_boundary(self) -> int:
        return self.spec.n0

    @property
    def interior(self) -> np.ndarray:
        return np.arange(self.spec.n0, self.n)

    def vertex_index(self, x: Vertex) -> int:
        try:
            return self.index[x]
        except KeyError:
            raise UnsupportedAddress(f"{x} is not a level-{self.m} vertex") from None

    def cell_flux(self, values, q: Vertex, prefix: Letters = ()) -> float:
        """Conductance-weighted flux sum at ``q`` over m-cells under ``prefix``.

        This is the level-m approximant of the (cell-restricted) normal
        derivative: sum over containing cells w of
        ``(1/r_w) * sum_pattern c_ab (u(q) - u(neighbour))``.
        """
        qi = self.vertex_index(q)
        uq = values[qi]
        total = 0.0
        for ci in self.cells_at.get(qi, ()):
            word, corners, _, rw = self.cells[ci]
            if word[: len(prefix)] != tuple(prefix):
                continue
            kq = corners.index(qi)
            pat = self.spec.pattern[word[-1]] if word else self.spec.pattern[0]
            for a, b, c in pat:
                if a == kq:
                    total += c / rw * (uq - values[corners[b]])
                elif b == kq:
                    total += c / rw * (uq - values[corners[a]])
        return total


_LEVEL_CACHE: dict = {}


def build_level(spec: FractalSpec, m: int) -> LevelGraph:
    """Build (and cache) the level-m graph."""
    key = (spec, m)
    got = _LEVEL_CACHE.get(key)
    if got is not None:
        return got

    if m == 0:
        vertices = tuple(Vertex((), k) for k in range(spec.n0))
        index = {v: i for i, v in enumerate(vertices)}
        eu, ev, ec = [], [], []
        for a, b, c in spec.pattern[0]:
            eu.append(a)
            ev.append(b)
            ec.append(c)
        zeta = harmonic_cell_integrals(spec)
        cells = (((), tuple(range(spec.n0)), 1.0, 1.0),)
        graph = LevelGraph(
            spec, 0, vertices,
            np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64),
            np.array(ec, dtype=float),
            cells,
            np.ones(spec.n0, dtype=np.int64),
            np.asarray(zeta, dtype=float).copy(),
            index={v: i for i, v in enumerate(vertices)},
            cells_at={i: [0] for i in range(spec.n0)},
        )
        _LEVEL_CACHE[key] = graph
        return graph

    n0 = spec.n0
    zeta = harmonic_cell_integrals(spec)

    verts: dict[Vertex, int] = {}
    order: list[Vertex] = []

    def vid(v: Vertex) -> int:
        i = verts.get(v)
        if i is None:
            i = len(order)
            verts[v] = i
            order.append(v)
        return i

    for k in range(n0):
        vid(Vertex((), k))

    words = [()]
    for _ in range(m - 1):
        words = [w + (j,) for w in words for j in range(spec.J)]

    cells = []
    eu, ev, ec = [], [], []
    for u in words:
        for j in range(spec.J):
            w = u + (j,)
            corners = tuple(vid(canonicalize(spec, w, k)) for k in range(n0))
            rw, muw, _ = cell_scale(spec, w)
            cells.append((w, corners, muw, rw))
            for a, b, c in spec.pattern[j]:
                eu.append(corners[a])
                ev.append(corners[b])
                ec.append(c / rw)

    vertices = tuple(order)
    perm = sorted(range(len(vertices)), key=lambda i: vertices[i].sort_key)
    rank = {old: new for new, old in enumerate(perm)}
    vertices = tuple(order[i] for i in perm)
    index = {v: i for i, v in enumerate(vertices)}

    cells = tuple(
        (w, tuple(rank[i] for i in corners), muw, rw) for w, corners, muw, rw in cells
    )
    eu = np.array([rank[i] for i in eu], dtype=np.int64)
    ev = np.array([rank[i] for i in ev], dtype=np.int64)
    ec = np.array(ec, dtype=float)

    n = len(vertices)
    deg = np.zeros(n, dtype=np.int64)
    hw = np.zeros(n, dtype=float)
    cells_at: dict[int, list[int]] = {}
    for ci, (w, corners, muw, rw) in enumerate(cells):
        for k, vi in enumerate(corners):
            deg[vi] += 1
            hw[vi] += muw * zeta[k]
            cells_at.setdefault(vi, []).append(ci)

    graph = LevelGraph(
        spec, m, vertices, eu, ev, ec, cells, deg, hw,
        index=index, cells_at=cells_at,
    )
    _LEVEL_CACHE[key] = graph
    return graph


# ---------------------------------------------------------------------------
# harmonic structure of the level-1 network
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def level1_laplacian(spec: FractalSpec) -> np.ndarray:
    """Conductance Laplacian of the level-1 network (r-weighted)."""
    n1 = spec.n1
    L = np.zeros((n1, n1))
    for j in range(spec.J):
        row = spec.gluing[j]
        for a, b, c in spec.pattern[j]:
            u, v = row[a], row[b]
            w = c / spec.r[j]
            L[u, v] += w
            L[v, u] += w
            L[u, u] -= w
            L[v, v] -= w
    return L


@lru_cache(maxsize=None)
def harmonic_extension_matrices(spec: FractalSpec) -> tuple[np.ndarray, ...]:
    """H_j mapping boundary values to values on the j-th cell's corners.

    Row k of H_j is the harmonic value at the image of boundary vertex k
    under map j.  Rows sum to 1.
    """
    n0, n1 = spec.n0, spec.n1
    L = level1_laplacian(spec)
    interior = list(range(n0, n1))
    ext = np.zeros((n1, n0))
    ext[:n0, :n0] = np.eye(n0)
    if interior:
        Lii = L[np.ix_(interior, interior)]
        Lib = L[np.ix_(interior, range(n0))]
        ext[interior, :] = -np.linalg.solve(Lii, Lib)
    return tuple(
        np.array([ext[spec.gluing[j][k]] for k in range(n0)]) for j in range(spec.J)
    )


@lru_cache(maxsize=None)
def harmonic_cell_integrals(spec: FractalSpec) -> tuple[float, ...]:
    """Integrals of the boundary harmonic functions against the measure.

    ``zeta[k]`` is the mu-integral over the whole fractal of the harmonic
    function that is 1 at boundary vertex k and 0 at the others.  These give
    the tent-function weights: the integral of the level-m tent at x is
    ``sum over containing cells of mu_w * zeta[corner index]``.
    """
    H = harmonic_extension_matrices(spec)
    A = sum(spec.mu[j] * H[j] for j in range(spec.J))
    # fixed point I = A^T I with sum(I) = 1
    n0 = spec.n0
    M = A.T - np.eye(n0)
    M = np.vstack([M, np.ones((1, n0))])
    rhs = np.zeros(n0 + 1)
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return tuple(float(v) for v in sol)


def measure_total(graph: LevelGraph) -> float:
    return float(sum(c[2] for c in graph.cells))
