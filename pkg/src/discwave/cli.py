"""Command-line front end: ``discwave <subcommand> ...``.

Exit codes: 0 success, 1 validation failure, 2 hypothesis failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from .exactnum import format_scalar, parse_scalar, to_float

EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# -- parsing helpers -----------------------------------------------------------------------


def _load_json_arg(text: str | None):
    """Inline JSON, or a path to a JSON file."""
    if text is None:
        return {}
    s = text.strip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(s)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"{text!r} is neither JSON nor an existing file")
    return json.loads(path.read_text())


def _t_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        t0, t1 = int(a), int(b)
    except ValueError:
        raise UsageError(f"time range must look like -3:3, got {text!r}") from None
    if t0 > t1:
        raise UsageError("empty time range")
    return t0, t1


def _word(key: str) -> tuple[int, ...]:
    key = key.strip()
    if not key:
        return ()
    return tuple(int(c) for c in key.replace(",", ".").split("."))


def _word_key(w) -> str:
    return ".".join(str(a) for a in w)


def _scalar(v, p=None, q=None):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return Fraction(v) if isinstance(v, int) else Fraction(str(v))
    return parse_scalar(str(v), p, q)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _basis(name: str):
    from .laurent import STANDARD_BASIS

    if name != "std":
        raise UsageError(f"unknown basis {name!r} (only 'std' is built in)")
    return STANDARD_BASIS


# -- subcommands --------------------------------------------------------------------------


def cmd_wave_z(args) -> int:
    from .flatwave import solve
    from .laurent import LaurentPoly

    f = LaurentPoly({int(k): _scalar(v) for k, v in _load_json_arg(args.f).items()})
    g = LaurentPoly({int(k): _scalar(v) for k, v in _load_json_arg(args.g).items()})
    grid = solve(_basis(args.basis), f, g, _t_range(args.t))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "t", "value"])
    for n, t, v in grid.rows():
        w.writerow([n, t, format_scalar(v)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _tree_series(args, p):
    from .regtree import BallTooSmallError, TreeBall, wave_solve_tree

    ball = TreeBall(args.q, args.radius, p)
    g1 = ball.from_mapping({_word(k): _scalar(v, p or args.q, args.q) for k, v in _load_json_arg(args.g1).items()})
    g2 = ball.from_mapping({_word(k): _scalar(v, p or args.q, args.q) for k, v in _load_json_arg(args.g2).items()})
    try:
        ser = wave_solve_tree(ball, _basis(args.init), g1, g2, _t_range(args.t))
    except BallTooSmallError as exc:
        raise UsageError(str(exc)) from None
    t0, t1 = _t_range(args.t)
    slices = {}
    for t in range(t0, t1 + 1):
        vals = ser[t].values()
        slices[str(t)] = {_word_key(ball.words[i]): format_scalar(v) for i, v in enumerate(vals) if v}
    out = {"q": args.q, "radius": args.radius, "basis": args.init, "slices": slices}
    if p is not None:
        out["p"] = p
    _emit(_json_dump(out), args.out)
    return EXIT_OK


def cmd_wave_tree(args) -> int:
    return _tree_series(args, None)


def cmd_wave_bitree(args) -> int:
    return _tree_series(args, args.p)


def _family(args):
    from .chebyshev import special_family

    name = args.family.upper()
    if name in ("F",) and args.q is None:
        raise UsageError("family F needs --q")
    if name in ("H", "R") and (args.p is None or args.q is None):
        raise UsageError(f"family {name} needs --p and --q")
    if name == "MP" and args.binv is None:
        raise UsageError("family MP needs --binv")
    binv = None if args.binv is None else Fraction(args.binv)
    try:
        return special_family(name, q=args.q, p=args.p, binv=binv)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_cheb_table(args) -> int:
    fam = _family(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "k", "coefficient"])
    for t in range(args.t_max + 1):
        for k, c in fam(t).items():
            w.writerow([t, k, format_scalar(c)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_ortho_check(args) -> int:
    from .chebyshev import ortho_measure, quad_inner

    fam = _family(args)
    mu = ortho_measure(fam)
    worst = 0.0
    norms = []
    for k in range(args.kmax + 1):
        for n in range(k, args.kmax + 1):
            v = quad_inner(fam(k), fam(n), mu, args.nodes)
            if n == k:
                norms.append(v)
            else:
                worst = max(worst, abs(v))
    ok = worst < args.tol
    report = {
        "family": fam.name,
        "kmax": args.kmax,
        "nodes": args.nodes,
        "max_offdiag": worst,
        "norms": norms,
        "atoms": [[[a.real, a.imag], m] for a, m in mu.atoms],
        "passed": ok,
    }
    _emit(_json_dump(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scatter(args) -> int:
    from .regtree import BoundaryGrid, TreeBall, T_plus, energy_form, tplus_norm_sq

    state = _load_json_arg(args.state)
    ball = TreeBall(args.q, args.depth)
    maps = [{_word(k): _scalar(v, args.q, args.q) for k, v in state.get(key, {}).items()} for key in ("f1", "f2")]
    if any(len(w) > args.depth for m in maps for w in m):
        raise UsageError("state support is deeper than --depth")
    f1, f2 = (ball.from_mapping(m) for m in maps)
    energy = to_float(energy_form(ball, (f1, f2), (f1, f2)))
    grid = BoundaryGrid(args.q, args.depth, args.nodes)
    T = T_plus(grid, f1.to_float(), f2.to_float())
    norm = tplus_norm_sq(grid, T).real
    ok = abs(norm - energy) <= args.tol * max(1.0, abs(energy))
    report = {
        "q": args.q,
        "depth": args.depth,
        "nodes": args.nodes,
        "cylinders": [_word_key(c) for c in grid.cylinders],
        "xi": [[float(z.real), float(z.imag)] for z in grid.xi],
        "T_plus": [[[float(v.real), float(v.imag)] for v in row] for row in T],
        "energy": energy,
        "T_plus_norm_sq": norm,
        "isometry_ok": ok,
    }
    _emit(_json_dump(report), args.report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gen_graph(args) -> int:
    from .deloc import GraphError, gen_biregular

    try:
        g = gen_biregular(args.n_q, args.p, args.q, args.seed)
    except GraphError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_FAIL
    _emit(g.to_text(), args.out)
    return EXIT_OK


def cmd_deloc_certify(args) -> int:
    from .deloc import (
        GraphError,
        HypothesisError,
        NTooSmallError,
        certify,
        eig,
        load_graph,
        sn_norms,
    )

    try:
        g = load_graph(args.graph)
    except (GraphError, OSError, ValueError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_FAIL
    if not g.q > g.p:
        sys.stderr.write("certificates need q > p\n")
        return EXIT_FAIL
    vals, vecs = eig(g)
    idx = range(len(vals)) if args.index is None else [args.index]
    norms = sn_norms(g, args.N, args.r)
    certs, code = [], EXIT_OK
    for i in idx:
        if not 0 <= i < len(vals):
            raise UsageError(f"eigenpair index {i} out of range")
        try:
            c = certify(
                g, vecs[:, i], float(vals[i]), args.eps, args.r, args.C, args.alpha, args.N,
                args.M, args.gamma, spectrum=(vals, vecs), norms=norms,
            )
        except HypothesisError as exc:
            certs.append({"index": i, "eigenvalue": float(vals[i]), "error": str(exc), "report": _finite(exc.report)})
            code = EXIT_HYPOTHESIS
            continue
        except NTooSmallError as exc:
            certs.append({"index": i, "eigenvalue": float(vals[i]), "error": str(exc)})
            code = max(code, EXIT_FAIL) if code != EXIT_HYPOTHESIS else code
            continue
        entry = {"index": i} | c.to_json()
        certs.append(entry)
        if not c.valid and code == EXIT_OK:
            code = EXIT_FAIL
    _emit(_json_dump({"graph": str(args.graph), "certificates": certs}), args.out)
    return code


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def selftest_checks():
    """(name, passed) for a fast suite of exact identities."""
    from .bitree import kernel_closed_form_bi
    from .chebyshev import special_family
    from .deloc import cheb_identity_rhs, fejer_poly, tilde_G_kernel1, tilde_G_kernel2
    from .flatwave import energy, solve, wave_residual
    from .laurent import STANDARD_BASIS, LaurentPoly, decompose, gram_det, pairing
    from .regtree import (
        RadialFn,
        RadialTree,
        TreeBall,
        cheb_operator_series,
        kernel_closed_form,
        radial_convolve,
        satake,
    )

    checks = []
    checks.append(("gram determinant of the standard basis is -1", gram_det(STANDARD_BASIS.h1, STANDARD_BASIS.h2) == LaurentPoly({0: -1})))
    f = LaurentPoly({-2: Fraction(1, 3), 0: 2, 3: Fraction(-5, 7)})
    a1, a2 = decompose(f, STANDARD_BASIS)
    checks.append(("standard decomposition recombines", a1 * STANDARD_BASIS.h1 + a2 * STANDARD_BASIS.h2 == f))
    checks.append(("pairing is symmetric", pairing(f, STANDARD_BASIS.h2) == pairing(STANDARD_BASIS.h2, f)))
    grid = solve(STANDARD_BASIS, f, LaurentPoly({1: 1}), (-6, 6))
    checks.append(("flat wave residual vanishes", all(wave_residual(grid, n, t) == 0 for t in range(-5, 6) for n in range(-12, 13))))
    checks.append(("flat energy is conserved", len({energy(grid, t) for t in range(-5, 6)}) == 1))
    for q in (2, 3):
        space = RadialTree(q, 8)
        for fam in ("T", "U", "F"):
            # the U_t kernel is Ch_t^x; the family named U (h = 1) is shifted by one
            h = LaurentPoly({1: 1}) if fam == "U" else special_family(fam, q=q).h
            series = cheb_operator_series(space, h, space.delta(), 6)
            ok = all(space.to_radial(series[t]) == kernel_closed_form(fam, t, q) for t in range(7))
            checks.append((f"regular tree {fam}_t kernels, q={q}", ok))
        x, y = RadialFn({0: 1, 1: 2}), RadialFn({1: Fraction(1, 2), 2: -1})
        checks.append((f"Satake is multiplicative, q={q}", satake(radial_convolve(x, y, q), q) == satake(x, q) * satake(y, q)))
    for p, q in ((2, 3), (3, 2)):
        ball = TreeBall(q, 8, p)
        for fam in ("R", "H"):
            h = special_family(fam, p=p, q=q).h
            series = cheb_operator_series(ball, h, ball.delta(), 4)
            ok = True
            for t in range(5):
                prof = kernel_closed_form_bi(fam, t, p, q)
                vals = series[t].values()
                ok &= all(vals[i] == prof[int(ball.depth[i])] for i in range(ball.size))
            checks.append((f"biregular {fam}_t kernels, (p,q)=({p},{q})", ok))
    b = Fraction(2, 3)
    checks.append(("Chebyshev expansion of x^k + x^-k", all(cheb_identity_rhs(k, ell, b) == LaurentPoly({k: 1, -k: 1}) for k in range(3, 12) for ell in range(k - 2))))
    checks.append(("two forms of the delocalization kernel agree", all(tilde_G_kernel1(M, d, b) == tilde_G_kernel2(M, d, b) for M in (4, 6) for d in (4, 6))))
    checks.append(("F_M(1) = M", all(fejer_poly(M).subs(1) == M for M in range(1, 10))))
    return checks


def cmd_selftest(args) -> int:
    checks = selftest_checks()
    for name, ok in checks:
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {name}\n")
    passed = sum(ok for _, ok in checks)
    sys.stdout.write(f"{passed}/{len(checks)} passed\n")
    return EXIT_OK if passed == len(checks) else EXIT_FAIL


# -- argument parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="discwave", description="Discrete wave equations on Z and on trees.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("wave-z", help="solve the flat wave equation on Z")
    s.add_argument("--basis", default="std")
    s.add_argument("--f", required=True, help="first initial datum: JSON {n: value} or a file")
    s.add_argument("--g", default="{}", help="second initial datum")
    s.add_argument("--t", required=True, help="time range a:b")
    s.add_argument("--out")
    s.set_defaults(func=cmd_wave_z)

    for name, func, bi in (("wave-tree", cmd_wave_tree, False), ("wave-bitree", cmd_wave_bitree, True)):
        s = sub.add_parser(name, help="solve the wave equation on a tree ball")
        if bi:
            s.add_argument("--p", type=int, required=True)
        s.add_argument("--q", type=int, required=True)
        s.add_argument("--radius", type=int, required=True)
        s.add_argument("--init", default="std")
        s.add_argument("--g1", default="{}", help="JSON {word: value}; words like '0.1.2', '' for the root")
        s.add_argument("--g2", default="{}")
        s.add_argument("--t", required=True)
        s.add_argument("--out")
        s.set_defaults(func=func)

    for name, func in (("cheb-table", cmd_cheb_table), ("ortho-check", cmd_ortho_check)):
        s = sub.add_parser(name)
        s.add_argument("--family", required=True, choices=["T", "U", "V", "W", "F", "MP", "H", "R"], type=str.upper)
        s.add_argument("--p", type=int)
        s.add_argument("--q", type=int)
        s.add_argument("--binv")
        if name == "cheb-table":
            s.add_argument("--t-max", type=int, required=True)
        else:
            s.add_argument("--kmax", type=int, default=12)
            s.add_argument("--nodes", type=int, default=4096)
            s.add_argument("--tol", type=float, default=1e-8)
        s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("scatter", help="outgoing translation representation of a tree state")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--state", required=True, help='JSON {"f1": {word: value}, "f2": {...}} or a file')
    s.add_argument("--nodes", type=int, default=2048)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--report")
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("gen-graph", help="random biregular graph (configuration model)")
    s.add_argument("--n-q", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_graph)

    s = sub.add_parser("deloc-certify", help="delocalization certificates for eigenfunctions of B_q")
    s.add_argument("--graph", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--M", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--C", type=float)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--index", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_deloc_certify)

    s = sub.add_parser("selftest", help="run the exact-identity suite")
    s.set_defaults(func=cmd_selftest)
    return ap


def _validate(args) -> None:
    for name in ("p", "q", "radius", "depth", "n_q", "t_max", "kmax", "N", "M"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name in ("radius", "depth", "t_max", "kmax") else 1):
            raise UsageError(f"--{name.replace('_', '-')} out of range: {v}")
    eps = getattr(args, "eps", None)
    if eps is not None and not 0 < eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    r = getattr(args, "r", None)
    if r is not None and not 1 <= r < 2:
        raise UsageError("--r must lie in [1, 2)")
    nodes = getattr(args, "nodes", None)
    if nodes is not None and nodes < 64:
        raise UsageError("--nodes must be at least 64")


def _glue_negative(argv: list[str]) -> list[str]:
    """Let ``--t -3:3`` through: argparse would read -3:3 as an option."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a == "--t" and i + 1 < len(argv) and argv[i + 1].startswith("-") and ":" in argv[i + 1]:
            out.append(f"--t={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_glue_negative(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        _validate(args)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"discwave: error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"discwave: {exc}\n")
        return EXIT_FAIL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
