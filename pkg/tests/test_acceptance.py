"""Acceptance criteria.

Each test pins one acceptance criterion at its stated tolerance and prints a
single PASS/FAIL line (run with ``pytest -s`` to see them).  Tolerances are
fixed here, not configurable.
"""

import time

import numpy as np

from frk import decimation as dec
from frk.kernel import (
    apply_resolvent,
    cross_scale_check,
    dirichlet_kernel,
    engine,
    flux_matrix,
    interval_closed_form,
    neumann_kernel,
    prekernel,
    sg3_det_formula,
)
from frk.oracle import (
    boundary_spike_values,
    discrete_resolvent,
    flux_sum,
    normal_derivative,
    values_interpolator,
)
from frk.structure import Vertex, build_level, preset, vertex_position

IV = preset("interval")
SG = preset("sg")
SG3 = preset("sg3")


def report(k: int, ok: bool, text: str):
    print(f"ACCEPTANCE {k:2d}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, text


def _dyadic_pairs(rng, count, max_depth=10):
    out = []
    for _ in range(count):
        d = int(rng.integers(1, max_depth + 1))
        x = int(rng.integers(0, (1 << d) + 1)) / (1 << d)
        y = int(rng.integers(0, (1 << d) + 1)) / (1 << d)
        out.append((x, y))
    return out


def test_acceptance_01_interval_series_vs_closed_form():
    rng = np.random.default_rng(101)
    t0 = time.monotonic()
    worst = 0.0
    for lam in (0.5, 1.0, 4.0):
        for x, y in _dyadic_pairs(rng, 100):
            got = dirichlet_kernel(IV, lam, x, y, M=12).value
            worst = max(worst, abs(got - interval_closed_form(lam, x, y)))
    dt = time.monotonic() - t0
    report(1, worst <= 1e-10 and dt < 5.0,
           f"interval series vs closed form: max |diff| = {worst:.3e} "
           f"(tol 1e-10), runtime {dt:.2f}s (< 5s)")


def test_acceptance_02_green_function_limit():
    rng = np.random.default_rng(102)
    lam = 1e-8
    worst = 0.0
    for x, y in _dyadic_pairs(rng, 100):
        got = dirichlet_kernel(IV, lam, x, y, M=12).value
        lo, hi = min(x, y), max(x, y)
        worst = max(worst, abs(got - lo * (1.0 - hi)))
    report(2, worst <= 1e-6,
           f"interval kernel at lambda=1e-8 vs x(1-y): max err = {worst:.3e} (tol 1e-6)")


def test_acceptance_03_sg_harmonic_prekernel():
    G = prekernel(SG, 0.0).G
    worst = max(
        max(abs(G[i, i] - 9 / 50) for i in range(3)),
        max(abs(G[i, j] - 3 / 50) for i in range(3) for j in range(3) if i != j),
    )
    report(3, worst <= 1e-12,
           f"sg harmonic prekernel entries 9/50 and 3/50: max err = {worst:.3e} (tol 1e-12)")


def test_acceptance_04_sg_closed_form_vs_inverse():
    rng = np.random.default_rng(104)
    worst = 0.0
    for lam in rng.uniform(-4.0, 4.0, size=20):
        pk = prekernel(SG, float(lam))
        worst = max(worst, float(np.abs(np.linalg.inv(pk.B) - pk.G).max()))
    report(4, worst <= 1e-10,
           f"sg closed-form prekernel vs numeric inverse over 20 lambdas: "
           f"max entry err = {worst:.3e} (tol 1e-10)")


def test_acceptance_05_sg3_determinant_identity():
    rng = np.random.default_rng(105)
    worst = 0.0
    for lam in rng.uniform(-0.5, 0.5, size=20):
        lam = float(lam)
        pk = prekernel(SG3, lam)
        det_num = float(np.linalg.det(np.linalg.inv(pk.B)))
        seq = engine(SG3, lam).pack(SG3.r[0] * SG3.mu[0] * lam).seq
        det_cf = sg3_det_formula(seq)
        worst = max(worst, abs(det_num - det_cf) / abs(det_cf))
    at0 = float(np.linalg.det(prekernel(SG3, 0.0).G))
    exact0 = (7 / 15) ** 7 / 8100
    ok = worst <= 1e-8 and abs(at0 - exact0) / exact0 <= 1e-8
    report(5, ok,
           f"sg3 determinant identity: max rel err = {worst:.3e} (tol 1e-8), "
           f"value at 0 = {at0:.6e} vs (7/15)^7/8100 = {exact0:.6e}")


def test_acceptance_06_sg3_extension_system_residuals():
    rng = np.random.default_rng(106)
    lams = list(rng.uniform(-2.0, 2.5, size=12))
    lams += list(dec.lambda_sequence("sg3", 0.9).entries[:5])
    worst = 0.0
    for lam in lams:
        lam = float(lam)
        if min(abs(lam - f) for f in dec.FORBIDDEN["sg3"]) < 1e-3:
            continue
        a, b, g, rho, _ = dec.sg3_coefficients(lam)
        res = [
            (4 - lam) * a - (1 + a + b + rho),
            (4 - lam) * b - (a + g + rho),
            (4 - lam) * g - (b + g + rho),
            (4 - lam) * rho - (4.0 / 3.0) * (a + b + g),
        ]
        worst = max(worst, max(abs(r) for r in res))
    report(6, worst <= 1e-12,
           f"sg3 one-cell eigenvalue equations: max residual = {worst:.3e} (tol 1e-12)")


def test_acceptance_07_normal_derivative_formulas():
    worst = 0.0
    detail = []
    for name, spec in (("sg", SG), ("sg3", SG3)):
        for lam_dec in (0.0, 0.3, 1.0):
            seq = dec.lambda_sequence(name, lam_dec)
            at1, at0 = dec.boundary_normal_derivs(name, seq)
            lam_res = dec.decimation_to_resolvent(lam_dec)
            pack = engine(spec, lam_res).pack(lam_res)
            u = lambda v: float(pack.value_row(v)[0])
            # the defining limit through the level-10-capable evaluations
            d1 = normal_derivative(spec, u, Vertex((), 0), tol=5e-7, m_max=14)
            d0 = normal_derivative(spec, u, Vertex((), 1), tol=5e-7, m_max=14)
            err = max(abs(d1 - at1), abs(d0 - at0))
            worst = max(worst, err)
            if lam_dec == 0.0:
                assert (at1, at0) == (2.0, -1.0)
                assert abs(d1 - 2.0) < 1e-12 and abs(d0 + 1.0) < 1e-12
            detail.append(f"{name}@{lam_dec}: {err:.2e}")
    # cross-check the sg evaluations against an honest discrete solve at level 10
    vals = boundary_spike_values(SG, -1.0, 0, 10)
    ud = values_interpolator(build_level(SG, 10), vals)
    pack = engine(SG, -1.0).pack(-1.0)
    ue = lambda v: float(pack.value_row(v)[0])
    gap = abs(flux_sum(SG, ud, Vertex((), 0), 10) - flux_sum(SG, ue, Vertex((), 0), 10))
    report(7, worst <= 1e-6 and gap <= 1e-7,
           f"normal derivatives vs oracle limit: max err = {worst:.3e} (tol 1e-6); "
           f"sg level-10 discrete solve agrees with the evaluations to {gap:.1e} "
           f"[{', '.join(detail)}]")


def test_acceptance_08_discrete_oracle_equivalence():
    t0 = time.monotonic()
    lam = 1.0
    results = []

    # interval, f = indicator of the left 1-cell
    u_k = apply_resolvent(IV, lam, ("cells", lambda w: 1.0 if w[0] == 0 else 0.0),
                          0.5, m_quad=9)
    errs_iv = []
    for m in (9, 11):
        g = build_level(IV, m)
        fv = np.array([1.0 if vertex_position(IV, v) <= 0.5 else 0.0
                       for v in g.vertices])
        u_d = discrete_resolvent(IV, m, lam, fv)
        errs_iv.append(abs(u_d[g.vertex_index(Vertex((), 2))] - u_k) / abs(u_k))
    results.append(("interval", errs_iv))

    # sg, f = indicator of 1-cell 0, compared at three junctions
    xs = [Vertex((), 3), Vertex((), 5), Vertex((0,), 4)]
    u_ks = [apply_resolvent(SG, lam, ("cells", lambda w: 1.0 if w[0] == 0 else 0.0),
                            x, m_quad=6) for x in xs]
    errs_sg = []
    for m in (6, 8):
        g = build_level(SG, m)
        fv = np.zeros(g.n)
        for w, corners, _, _ in g.cells:
            if w[0] == 0:
                for vi in corners:
                    fv[vi] = 1.0
        u_d = discrete_resolvent(SG, m, lam, fv)
        errs_sg.append(max(
            abs(u_d[g.vertex_index(x)] - u_k) / abs(u_k)
            for x, u_k in zip(xs, u_ks)))
    results.append(("sg", errs_sg))

    dt = time.monotonic() - t0
    ok = (errs_iv[0] <= 1e-2 and errs_sg[0] <= 1e-2
          and errs_iv[1] < errs_iv[0] and errs_sg[1] < errs_sg[0]
          and dt < 60.0)
    report(8, ok,
           "kernel quadrature vs discrete resolvent (cell indicators): "
           + "; ".join(f"{n} rel errs {e[0]:.2e} -> {e[1]:.2e}" for n, e in results)
           + f" (tol 1e-2, decreasing), runtime {dt:.1f}s (< 60s)")


def test_acceptance_09_geometric_convergence_rate():
    def rate(spec, x, lam=1.0):
        p = dirichlet_kernel(spec, lam, x, x, M=10).partials
        deltas = [abs(p[m + 1] - p[m]) for m in range(2, 9)]
        ratios = [deltas[i + 1] / deltas[i] for i in range(len(deltas) - 1)]
        return float(np.exp(np.mean(np.log(ratios))))

    deep = Vertex((0, 1) * 6, 3)
    rows = [
        ("interval", rate(IV, 1 / 3), 0.5),
        ("sg", rate(SG, deep), 0.6),
        ("sg3", rate(SG3, deep), 7 / 15),
    ]
    ok = all(abs(r - want) / want <= 0.10 for _, r, want in rows)
    report(9, ok,
           "geometric decay of partial sums: "
           + ", ".join(f"{n}: fitted {r:.4f} vs {want:.4f}" for n, r, want in rows)
           + " (within 10%)")


def test_acceptance_10_cross_scale_identity():
    rng = np.random.default_rng(110)
    worst = {}
    for spec in (IV, SG, SG3):
        vals = [float(v) for v in rng.uniform(-2.0, 2.0, size=10)]
        worst[spec.name] = max(cross_scale_check(spec, v).residual for v in vals)
    ok = all(v <= 1e-8 for v in worst.values())
    report(10, ok,
           "cross-scale flux identity over 10 sampled lambdas: "
           + ", ".join(f"{k}: {v:.2e}" for k, v in worst.items()) + " (tol 1e-8)")


def test_acceptance_11_neumann():
    rng = np.random.default_rng(111)
    lam = 1.0
    worst = 0.0
    for x, y in _dyadic_pairs(rng, 40, max_depth=8):
        got = neumann_kernel(IV, lam, x, y, M=12).value
        worst = max(worst, abs(got - interval_closed_form(lam, x, y, "neumann")))
    x0 = Vertex((), 3)
    u = lambda y: neumann_kernel(SG, lam, x0, y, M=12).value
    fluxes = [abs(flux_sum(SG, u, Vertex((), 0), m)) for m in (4, 6, 8)]
    ok = worst <= 1e-9 and fluxes[0] > fluxes[1] > fluxes[2]
    report(11, ok,
           f"neumann: interval series vs cosh closed form max err = {worst:.3e} "
           f"(tol 1e-9); sg boundary flux decays {fluxes[0]:.2e} > {fluxes[1]:.2e} "
           f"> {fluxes[2]:.2e}")


def test_acceptance_12_flux_matrix_symmetry_and_continuity():
    rng = np.random.default_rng(112)
    asym = 0.0
    for spec in (IV, SG, SG3):
        for lam in rng.uniform(-3.0, 3.0, size=6):
            B = flux_matrix(spec, float(lam))
            asym = max(asym, float(np.abs(B - B.T).max()))
    mono = True
    gaps = {}
    for spec in (IV, SG, SG3):
        B0 = flux_matrix(spec, 0.0)
        norms = [float(np.abs(flux_matrix(spec, l) - B0).max())
                 for l in (1e-2, 1e-4, 1e-6)]
        gaps[spec.name] = norms
        mono = mono and norms[0] > norms[1] > norms[2]
    ok = asym <= 1e-10 and mono
    report(12, ok,
           f"flux matrix symmetry max |B - B^T| = {asym:.3e} (tol 1e-10); "
           "B -> B(0) monotone along 1e-2, 1e-4, 1e-6: "
           + ", ".join(f"{k}: {v[0]:.1e} > {v[1]:.1e} > {v[2]:.1e}"
                       for k, v in gaps.items()))
