"""Command-line interface.

Subcommands: ``eval`` (one kernel value), ``grid`` (CSV of kernel values over
a point grid, optionally rendered to a figure), ``verify`` (invariant
suites), ``spectrum seq`` (decimation sequences), ``spec check`` (validate a
fractal-spec file).

Exit codes: 0 success, 1 usage error, 2 mathematical guard failure or failed
verification.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import decimation as dec
from . import kernel, oracle
from .errors import FrkError, SpecError
from .structure import (
    FractalSpec,
    Vertex,
    build_level,
    load_spec_file,
    preset,
    vertex_position,
)

FMT = "%.12g"


def _num(v) -> str:
    return FMT % float(v)


def fractal_arg(value: str) -> FractalSpec:
    if value in ("interval", "sg", "sg3"):
        return preset(value)
    return load_spec_file(value)


def parse_address(spec: FractalSpec, text: str):
    """Pointer syntax: a float on the interval; 'q0' or '0.2:5' on gaskets."""
    if spec.is_interval:
        try:
            return float(text)
        except ValueError:
            pass
    if text.startswith("q") and text[1:].isdigit():
        k = int(text[1:])
        if not (0 <= k < spec.n0):
            raise SpecError("address", f"boundary index {k} out of range")
        return Vertex((), k)
    if ":" in text:
        head, _, tail = text.partition(":")
        word = tuple(int(a) for a in head.split(".")) if head else ()
        v1 = int(tail)
        if any(not (0 <= a < spec.J) for a in word):
            raise SpecError("address", f"letter out of range in {text!r}")
        if not (spec.n0 <= v1 < spec.n1):
            raise SpecError("address", f"{v1} is not an interior level-1 vertex id")
        return Vertex(word, v1)
    raise SpecError("address", f"cannot parse address {text!r}")


def format_address(spec: FractalSpec, x) -> str:
    if isinstance(x, float):
        return _num(x)
    return x.label(spec.n0)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    spec = args.fractal
    x = parse_address(spec, args.x)
    y = parse_address(spec, args.y)
    kern = kernel.dirichlet_kernel if args.bc == "dirichlet" else kernel.neumann_kernel
    ev = kern(spec, args.lam, x, y, M=args.depth, tol=args.tol)
    record = {
        "x": format_address(spec, x),
        "y": format_address(spec, y),
        "lambda": args.lam,
        "value": ev.value,
        "bound": ev.bound,
        "M": ev.depth,
    }
    if args.format == "json":
        _emit(args, json.dumps(record) + "\n")
    else:
        _emit(
            args,
            "x,y,lambda,value,bound,M\n%s,%s,%s,%s,%s,%d\n"
            % (record["x"], record["y"], _num(args.lam), _num(ev.value),
               _num(ev.bound), ev.depth),
        )
    return 0


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def _grid_points(spec: FractalSpec, resolution: int):
    if spec.is_interval:
        if resolution > 4096:
            raise SpecError("resolution", "interval grids cap at 4096 per axis")
        if resolution < 2:
            raise SpecError("resolution", "need at least 2 points per axis")
        return [i / (resolution - 1) for i in range(resolution)]
    if resolution > 8:
        raise SpecError("resolution", "fractal grids cap at depth 8")
    return list(build_level(spec, resolution).vertices)


def cmd_grid(args) -> int:
    spec = args.fractal
    if args.resolution is None or args.resolution < 1:
        raise SpecError("resolution", "empty grid request")
    pts = _grid_points(spec, args.resolution)
    kern = kernel.dirichlet_kernel if args.bc == "dirichlet" else kernel.neumann_kernel
    rows = []
    values = np.zeros((len(pts), len(pts)))
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            ev = kern(spec, args.lam, x, y, M=args.depth, tol=args.tol)
            values[i, j] = ev.value
            rows.append(
                "%s,%s,%s,%s,%s,%d"
                % (format_address(spec, x), format_address(spec, y),
                   _num(args.lam), _num(ev.value), _num(ev.bound), ev.depth)
            )
    _emit(args, "x,y,lambda,value,bound,M\n" + "\n".join(rows) + "\n")
    if args.plot:
        _render_grid(spec, pts, values, args)
    return 0


def _render_grid(spec, pts, values, args) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    if spec.is_interval:
        xs = np.array(pts)
        pc = ax.pcolormesh(xs, xs, values.T, shading="auto", cmap="viridis")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        pc = ax.imshow(values, origin="lower", cmap="viridis")
        ax.set_xlabel("vertex index (canonical order)")
        ax.set_ylabel("vertex index")
    fig.colorbar(pc, ax=ax, label="kernel value")
    ax.set_title(f"{spec.name}: {args.bc} kernel, lambda={_num(args.lam)}")
    fig.tight_layout()
    fig.savefig(args.plot, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _sample_points(spec, rng, count):
    if spec.is_interval:
        return [float(rng.integers(0, 257)) / 256.0 for _ in range(count)]
    verts = build_level(spec, 3).vertices
    idx = rng.integers(0, len(verts), size=count)
    return [verts[i] for i in idx]


def _suite_symmetry(spec, lam, rng):
    pts = _sample_points(spec, rng, 20)
    worst = 0.0
    for x in pts[:10]:
        for y in pts[10:]:
            a = kernel.dirichlet_kernel(spec, lam, x, y, M=8).value
            b = kernel.dirichlet_kernel(spec, lam, y, x, M=8).value
            worst = max(worst, abs(a - b))
    return [("kernel symmetry", worst, 1e-12)]

def _suite_boundary(spec, lam, rng):
    pts = _sample_points(spec, rng, 8)
    worst = 0.0
    for k in range(spec.n0):
        q = 0.0 if spec.is_interval and k == 0 else (1.0 if spec.is_interval else Vertex((), k))
        for y in pts:
            worst = max(worst, abs(kernel.dirichlet_kernel(spec, lam, q, y, M=8).value))
    return [("boundary vanishing", worst, 1e-15)]

def _suite_oracle(spec, lam, rng, quad=None):
    level = {"interval": 9, "sg": 5, "sg3": 3}.get(spec.name, 4)
    tol = 1e-3 if spec.is_interval else 1e-2
    g = build_level(spec, level)
    u = oracle.discrete_resolvent(spec, level, lam, np.ones(g.n))
    if spec.is_interval:
        mq = quad if quad else 8
        xs = [0.5, 0.25]
        uk = [kernel.apply_resolvent(spec, lam, lambda v: 1.0, x, m_quad=mq) for x in xs]
        ud = [u[g.vertex_index(Vertex((), 2))], u[g.vertex_index(Vertex((0,), 2))]]
    else:
        vs = [Vertex((), spec.interior1[0]), Vertex((), spec.interior1[-1])]
        mq = quad if quad else {"sg": 5, "sg3": 3}.get(spec.name, 4)
        uk = [kernel.apply_resolvent(spec, lam, lambda v: 1.0, x, m_quad=mq) for x in vs]
        ud = [u[g.vertex_index(v)] for v in vs]
    worst = max(abs(a - b) / max(abs(b), 1e-30) for a, b in zip(uk, ud))
    return [("resolvent vs discrete oracle", worst, tol)]

def _suite_crossscale(spec, lam, rng):
    lams = [lam] + [float(v) for v in rng.uniform(0.05, 2.0, size=9)]
    worst = max(kernel.cross_scale_check(spec, v).residual for v in lams)
    return [("cross-scale flux identity", worst, 1e-8)]

def _suite_tau(spec, lam, rng):
    checks = []
    for name in ("sg", "sg3"):
        s = dec.lambda_sequence(name, 0.0)
        checks.append((f"{name} product at 0", abs(dec.flux_product(s) - 1.0), 0.0))
        s = dec.lambda_sequence(name, 1e-6)
        checks.append((f"{name} product continuity", abs(dec.flux_product(s) - 1.0), 1e-4))
    worst = 0.0
    for t in rng.uniform(-3.0, 2.5, size=10):
        s = dec.lambda_sequence("sg3", float(t))
        worst = max(worst, abs(dec.flux_product(s) - dec.flux_product_alt(s)))
    checks.append(("sg3 product forms agree", worst, 1e-12))
    return checks

def _suite_detg(spec, lam, rng):
    s3 = preset("sg3")
    worst = 0.0
    for v in rng.uniform(-0.5, 0.5, size=20):
        lam_r = float(v)
        pk = kernel.prekernel(s3, lam_r)
        det_num = float(np.linalg.det(np.linalg.inv(pk.B)))
        seq = kernel.engine(s3, lam_r).pack(s3.r[0] * s3.mu[0] * lam_r).seq
        det_cf = kernel.sg3_det_formula(seq)
        worst = max(worst, abs(det_num - det_cf) / abs(det_cf))
    return [("sg3 determinant identity", worst, 1e-8)]

SUITES = {
    "symmetry": _suite_symmetry,
    "boundary": _suite_boundary,
    "oracle": _suite_oracle,
    "crossscale": _suite_crossscale,
    "tau": _suite_tau,
    "detg": _suite_detg,
}


def cmd_verify(args) -> int:
    spec = args.fractal
    rng = np.random.default_rng(args.seed)
    if args.suite not in SUITES:
        raise SpecError("suite", f"unknown suite {args.suite!r}")
    if args.suite == "oracle":
        checks = _suite_oracle(spec, args.lam, rng, quad=args.quad)
    else:
        checks = SUITES[args.suite](spec, args.lam, rng)
    entries = [
        {"name": n, "residual": float(r), "tolerance": float(t),
         "pass": bool(r <= t or (t == 0.0 and r == 0.0))}
        for n, r, t in checks
    ]
    ok = all(e["pass"] for e in entries)
    report = {
        "fractal": spec.name,
        "suite": args.suite,
        "lambda": args.lam,
        "seed": args.seed,
        "pass": ok,
        "checks": entries,
    }
    _emit(args, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# spectrum seq / spec check
# ---------------------------------------------------------------------------

def cmd_spectrum_seq(args) -> int:
    spec = args.fractal
    if spec.name not in ("sg", "sg3"):
        raise SpecError("fractal", "decimation sequences exist for sg and sg3")
    M = args.depth if args.depth is not None else 12
    seq = dec.lambda_sequence(spec.name, args.lam, max(M, 4))
    rows = ["m,lambda_m,scaled"]
    for m in range(M + 1):
        rows.append(
            "%d,%s,%s"
            % (m, _num(seq.entries[m]),
               _num(seq.alpha * seq.beta**m * seq.entries[m]))
        )
    _emit(args, "\n".join(rows) + "\n")
    return 0


def cmd_spec_check(args) -> int:
    spec = load_spec_file(args.path)
    _emit(args, "ok: name=%s J=%d n0=%d vertices(V1)=%d\n"
          % (spec.name, spec.J, spec.n0, spec.n1))
    return 0


def cmd_operator(args) -> int:
    """Dump the renormalized level-m operator as CSV (debugging aid)."""
    spec = args.fractal
    m = args.level
    op = oracle.laplacian(spec, m, args.bc)
    M = op.dense()
    idx = op.dofs
    labels = [format_address(spec, op.graph.vertices[i])
              if not spec.is_interval
              else _num(vertex_position(spec, op.graph.vertices[i]))
              for i in idx]
    lines = ["vertex," + ",".join(labels)]
    for row_label, row in zip(labels, M):
        lines.append(row_label + "," + ",".join(_num(v) for v in row))
    _emit(args, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="frk",
        description="Resolvent kernels of the Laplacian on p.c.f. self-similar fractals.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, lam_required=True):
        p.add_argument("--fractal", type=fractal_arg, default=preset("interval"),
                       help="preset name (interval, sg, sg3) or spec file path")
        p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                       help="spectral parameter")
        p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
        p.add_argument("--depth", type=int, default=None, help="series depth M")
        p.add_argument("--quad", type=int, default=None,
                       help="quadrature level (default chosen per fractal)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--out", default=None, help="write output to this file")
        p.add_argument("--tol", type=float, default=1e-9, help="series tolerance")
        p.add_argument("--seed", type=int, default=0, help="sampling seed")

    p = sub.add_parser("eval", help="evaluate the kernel at one pair of points")
    common(p)
    p.add_argument("x")
    p.add_argument("y")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="kernel values over a point grid, as CSV")
    common(p)
    p.add_argument("--resolution", type=int, default=None,
                   help="points per axis (interval) or vertex depth (fractals)")
    p.add_argument("--plot", default=None, help="also render the grid to this image file")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("verify", help="run an invariant suite")
    common(p)
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="spectral decimation utilities")
    spectrum_sub = p.add_subparsers(dest="subcommand", required=True)
    ps = spectrum_sub.add_parser("seq", help="emit a decimation sequence as CSV")
    common(ps)
    ps.set_defaults(func=cmd_spectrum_seq)

    p = sub.add_parser("spec", help="fractal-spec file utilities")
    spec_sub = p.add_subparsers(dest="subcommand", required=True)
    pc = spec_sub.add_parser("check", help="validate a spec file")
    pc.add_argument("path")
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=cmd_spec_check)

    p = sub.add_parser("operator", help="dump a discrete operator matrix as CSV")
    common(p)
    p.add_argument("--level", type=int, default=2, help="graph level m")
    p.set_defaults(func=cmd_operator)

    return ap


def _validate_args(args) -> None:
    import math as _math

    lam = getattr(args, "lam", None)
    if lam is not None and not _math.isfinite(lam):
        raise SpecError("lambda", f"{lam!r} is not finite")
    for field in ("depth", "quad", "resolution", "level"):
        v = getattr(args, field, None)
        if v is not None and v < 0:
            raise SpecError(field, f"{v!r} must be non-negative")
    tol = getattr(args, "tol", None)
    if tol is not None and not (tol > 0.0 and _math.isfinite(tol)):
        raise SpecError("tol", f"{tol!r} must be positive and finite")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        _validate_args(args)
        return args.func(args)
    except SpecError as e:
        # invalid input (bad spec document, bad address, empty grid): usage
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FrkError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
