"""Structure layer: presets, graphs, words, addressing, spec documents."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frk.errors import NotAPreset, SpecError
from frk.structure import (
    Vertex,
    Word,
    build_level,
    canonicalize,
    cell_scale,
    harmonic_cell_integrals,
    harmonic_extension_matrices,
    load_spec,
    locate,
    preset,
)

IV = preset("interval")
SG = preset("sg")
SG3 = preset("sg3")


# -- presets -----------------------------------------------------------------

def test_preset_interval():
    assert IV.J == 2 and IV.n0 == 2
    assert IV.r == (0.5, 0.5) and IV.mu == (0.5, 0.5)

def test_preset_sg():
    assert SG.J == 3 and SG.n0 == 3
    assert all(r == 3 / 5 for r in SG.r)
    assert all(m == pytest.approx(1 / 3) for m in SG.mu)

def test_preset_sg3():
    assert SG3.J == 6 and SG3.n0 == 3
    assert all(r == 7 / 15 for r in SG3.r)
    assert all(m == pytest.approx(1 / 6) for m in SG3.mu)
    # the centre point belongs to three 1-cells
    assert len(SG3.cells_of_v1(9)) == 3

def test_unknown_preset():
    with pytest.raises(NotAPreset):
        preset("pentagasket")


# -- level graphs ------------------------------------------------------------

def test_interval_level3_counts():
    g = build_level(IV, 3)
    assert g.n == 9
    assert len(g.edges_u) == 8

def test_sg_level_counts():
    for m in (1, 2, 3, 4):
        g = build_level(SG, m)
        assert g.n == 3 * (3**m + 1) // 2
    assert len(build_level(SG, 1).interior) == 3

def test_sg3_level1_interior():
    g = build_level(SG3, 1)
    assert len(g.interior) == 7
    # one vertex of graph degree six
    deg = np.zeros(g.n, dtype=int)
    for u, v in zip(g.edges_u, g.edges_v):
        deg[u] += 1
        deg[v] += 1
    assert sorted(deg[g.interior]) == [4, 4, 4, 4, 4, 4, 6]

def test_vertex_embedding_stable():
    for spec, m in ((IV, 3), (SG, 2), (SG3, 1)):
        small = build_level(spec, m).vertices
        big = set(build_level(spec, m + 1).vertices)
        assert all(v in big for v in small)
        assert all(v.birth_level(spec.n0) == 0 for v in small[: spec.n0])

def test_cell_measures_sum_to_one():
    for spec, m in ((IV, 6), (SG, 4), (SG3, 3)):
        total = sum(c[2] for c in build_level(spec, m).cells)
        assert total == pytest.approx(1.0, abs=1e-12)

def test_conductance_scaling():
    # level-m edges carry pattern / r_w with the full m-letter word
    g = build_level(SG, 3)
    assert np.allclose(g.edges_c, (5 / 3) ** 3)
    g = build_level(IV, 4)
    assert np.allclose(g.edges_c, 2.0**4)


# -- words and scales --------------------------------------------------------

def test_cell_scale_interval():
    for m in (1, 3, 7):
        _, _, s = cell_scale(IV, (0,) * m)
        assert s == pytest.approx(4.0**-m, rel=1e-15)

def test_cell_scale_sg_one_letter():
    r, mu, s = cell_scale(SG, (2,))
    assert r == pytest.approx(3 / 5)
    assert s == pytest.approx(1 / 5)

def test_cell_scale_empty():
    assert cell_scale(SG3, ()) == (1.0, 1.0, 1.0)

def test_word_length_guard():
    with pytest.raises(ValueError):
        Word((0,) * 33)
    with pytest.raises(ValueError):
        cell_scale(IV, (0,) * 40)

@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=10), st.lists(st.integers(0, 2), max_size=10))
def test_scale_multiplicative(w, v):
    rw, mw, _ = cell_scale(SG, w)
    rv, mv, _ = cell_scale(SG, v)
    rwv, mwv, _ = cell_scale(SG, tuple(w) + tuple(v))
    assert rwv == pytest.approx(rw * rv, rel=1e-15)
    assert mwv == pytest.approx(mw * mv, rel=1e-15)


# -- locate / canonicalize ---------------------------------------------------

def test_locate_interval_interior():
    ((w, local),) = locate(IV, 0.3, 1)
    assert w == (0,)
    assert local == pytest.approx(0.6)

def test_locate_interval_junction():
    cells = locate(IV, 0.5, 1)
    assert len(cells) == 2
    locals_ = sorted(loc for _, loc in cells)
    assert locals_ == [0.0, 1.0]

def test_locate_sg3_centre():
    cells = locate(SG3, Vertex((), 9), 1)
    assert sorted(w for w, _ in cells) == [(3,), (4,), (5,)]

def test_locate_before_birth():
    v = Vertex((0, 1), 5)  # born at level 3
    ((w, local),) = locate(SG, v, 1)
    assert w == (0,)
    assert local == Vertex((1,), 5)

@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=4), st.integers(0, 2), st.integers(0, 2))
def test_canonicalize_idempotent(word, j, k):
    w = tuple(word) + (j,)
    v = canonicalize(SG, w, k)
    for cell, local in locate(SG, v, len(w)):
        assert canonicalize(SG, cell, local.v1) == v


# -- spec documents ----------------------------------------------------------

def _interval_doc():
    return {
        "schema": 1,
        "name": "custom",
        "J": 2,
        "r": [0.5, 0.5],
        "mu": [0.5, 0.5],
        "n0": 2,
        "gluing": [
            {"cell": 0, "boundary_index": 0, "vertex_id": 0},
            {"cell": 0, "boundary_index": 1, "vertex_id": 2},
            {"cell": 1, "boundary_index": 0, "vertex_id": 2},
            {"cell": 1, "boundary_index": 1, "vertex_id": 1},
        ],
    }

def test_load_spec_roundtrip():
    spec = load_spec(json.dumps(_interval_doc()))
    assert spec.same_structure(IV)

def test_load_spec_bad_weights():
    doc = _interval_doc()
    doc["mu"] = [0.6, 0.6]
    with pytest.raises(SpecError) as e:
        load_spec(doc)
    assert "mu" in str(e.value)

def test_load_spec_conductance_mismatch():
    doc = _interval_doc()
    doc["conductances"] = [
        {"u": 0, "v": 2, "c": 1.0},
        {"u": 2, "v": 0, "c": 2.0},
    ]
    with pytest.raises(SpecError) as e:
        load_spec(doc)
    assert "conductances" in str(e.value)

def test_load_spec_gluing_missing():
    doc = _interval_doc()
    doc["gluing"] = doc["gluing"][:3]
    with pytest.raises(SpecError) as e:
        load_spec(doc)
    assert "gluing" in str(e.value)

def test_load_spec_conductance_no_shared_cell():
    doc = _interval_doc()
    doc["conductances"] = [{"u": 0, "v": 1, "c": 1.0}]
    with pytest.raises(SpecError):
        load_spec(doc)


# -- harmonic structure --------------------------------------------------------

def test_sg_harmonic_extension_matrices():
    H = harmonic_extension_matrices(SG)
    A0 = np.array([[5, 0, 0], [2, 2, 1], [2, 1, 2]]) / 5.0
    A1 = np.array([[2, 2, 1], [0, 5, 0], [1, 2, 2]]) / 5.0
    A2 = np.array([[2, 1, 2], [1, 2, 2], [0, 0, 5]]) / 5.0
    for got, want in zip(H, (A0, A1, A2)):
        assert np.allclose(got, want, atol=1e-14)

def test_sg3_harmonic_values():
    H = harmonic_extension_matrices(SG3)
    # data (1,0,0): flank 8/15, sides 4/15 and 3/15, centre 5/15
    col = np.array([H[j] @ np.array([1.0, 0, 0]) for j in range(6)])
    vals = sorted(set(np.round(col.ravel(), 12)))
    assert vals == [0.0, pytest.approx(3 / 15), pytest.approx(4 / 15),
                    pytest.approx(5 / 15), pytest.approx(8 / 15), 1.0]

def test_harmonic_integrals_symmetric_presets():
    for spec in (IV, SG, SG3):
        zeta = harmonic_cell_integrals(spec)
        assert np.allclose(zeta, 1.0 / spec.n0, atol=1e-12)

def test_tent_weights_sg3():
    g = build_level(SG3, 2)
    w = g.hweight[g.interior]
    vals = sorted(set(np.round(w, 14)))
    assert vals == [pytest.approx(2 / (3 * 36)), pytest.approx(1 / 36)]
