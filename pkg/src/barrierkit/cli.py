"""Command-line entry point.

Every subcommand writes a JSON report (``<command>.json``) into the report
directory (``--report-dir``, else ``$BARRIERKIT_REPORT_DIR``, else the
current directory) and prints a short summary. Exit codes: 0 consistent,
2 violated, 1 invalid input.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .barrier import (BarrierParams, barrier_functions, build_barrier, certify_on_model,
                      params_for_domain)
from .domains import (cylinder, ds_cone_region, euclidean_ball, euclidean_cone, horoball,
                      sample_submanifold, slab, space_form_ball)
from .errors import DomainError, FormatError, HypothesisError
from .io import make_report, read_varifold, write_csv, write_varifold
from .modelspace import riccati_closed_form, riccati_domain_end
from .principles import (GrowthParams, audit_max_principle, audit_parabolic,
                         enclosure_bounds, sphere_cap_example)
from .spectral import min_trace_subspace, p_minus
from .varifold import (DiscreteVarifold, check_mean_curvature_bound, growth_diagnostics,
                       random_smooth_field, truncated_field)

DEFAULT_SEED = 12345
REPORT_ENV = "BARRIERKIT_REPORT_DIR"
CONSISTENT, INPUT_ERROR, VIOLATED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(message)


# ---------------------------------------------------------------------------
# argument helpers


def parse_radii(text):
    """``start:stop:step`` (inclusive) or a comma separated list."""
    try:
        if ":" in text:
            a, b, s = (float(t) for t in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            return np.arange(a, b + 0.5 * s, s)
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise DomainError(f"bad radii {text!r}; expected start:stop:step or a list") from None


def parse_vector(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise DomainError(f"bad vector {text!r}") from None


def parse_matrix(text):
    """Rows separated by ``;``, entries by ``,`` or whitespace."""
    try:
        rows = [[float(t) for t in r.replace(",", " ").split()] for r in text.split(";")]
    except ValueError:
        raise DomainError(f"bad matrix {text!r}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise DomainError("matrix must be square")
    return np.array(rows)


def parse_domain(text, m):
    """``ball:RHO``, ``spaceform:C:RHO``, ``cylinder:S:RHO[:C]``, ``cone:THETA``,
    ``horoball``, ``slab:W[:OFFSET]``, ``ds-cone:S:C``."""
    kind, *args = text.split(":")
    try:
        a = [float(t) for t in args]
    except ValueError:
        raise DomainError(f"bad domain {text!r}") from None
    try:
        if kind == "ball":
            return euclidean_ball(*a, m=m)
        if kind == "spaceform":
            return space_form_ball(*a, m=m)
        if kind == "cylinder":
            return cylinder(int(a[0]), *a[1:], m=m)
        if kind == "cone":
            return euclidean_cone(*a, m=m)
        if kind == "horoball" and not a:
            return horoball(m=m)
        if kind == "slab":
            return slab(a[0], m=m, offset=a[1] if len(a) > 1 else None)
        if kind == "ds-cone":
            return ds_cone_region(m, int(a[0]), a[1])
    except (TypeError, IndexError):
        pass
    raise DomainError(f"bad domain {text!r}")


def _sample_kwargs(args):
    kw = {}
    if args.kind == "plane":
        kw.update(extent=args.extent, m=args.m, boundary=not args.no_boundary)
    elif args.kind == "round_sphere":
        kw.update(rho=args.rho)
    elif args.kind in ("catenoid2d", "catenoid3d"):
        kw.update(s_max=args.s_max)
    return kw


def load_varifold(args):
    if args.varifold:
        V = read_varifold(args.varifold)
        src = {"varifold": args.varifold}
    elif args.kind:
        S = sample_submanifold(args.kind, args.resolution, **_sample_kwargs(args))
        V = DiscreteVarifold.from_sample(S)
        src = {"sample": args.kind, "resolution": args.resolution, **_sample_kwargs(args)}
    else:
        raise DomainError("give --varifold FILE or --sample KIND")
    if args.shift:
        sh = parse_vector(args.shift)
        if len(sh) != V.m:
            raise DomainError(f"shift needs {V.m} components")
        V = DiscreteVarifold(V.points + sh, V.weights, V.frames, V.boundary_mask, V.ell,
                             V.rectifiable, V.frame_tol)
        src["shift"] = sh.tolist()
    return V, src


def _center(args, V):
    """``--center`` if given, else the ``--shift`` of the sample, else the origin."""
    if getattr(args, "center", None):
        c = parse_vector(args.center)
    elif args.shift:
        c = parse_vector(args.shift)
    else:
        return None
    if len(c) != V.m:
        raise DomainError(f"center needs {V.m} components")
    return c


def _add_sample_flags(p, with_file=True):
    if with_file:
        p.add_argument("--varifold", help="varifold file")
    p.add_argument("--sample", dest="kind",
                   choices=["round_sphere", "plane", "catenoid2d", "catenoid3d"])
    p.add_argument("--resolution", type=float, default=None,
                   help="points (sphere), spacing (plane) or levels (catenoids)")
    p.add_argument("--extent", type=float, default=10.0, help="plane half-width")
    p.add_argument("--no-boundary", action="store_true", help="plane without boundary flags")
    p.add_argument("--rho", type=float, default=1.0, help="sphere radius")
    p.add_argument("--s-max", type=float, default=150.0, help="catenoid arclength cut")
    p.add_argument("--m", type=int, default=3, help="ambient dimension (plane)")
    p.add_argument("--shift", default=None, help="translate the sample by x1,...,xm")


# ---------------------------------------------------------------------------
# commands; each returns (inputs, outputs, verdict, csv columns or None)


def cmd_barrier(args):
    p = BarrierParams(args.c, args.ell, args.lam1, args.lam2, args.h, args.R)
    cert = build_barrier(p)
    out = {"certificate": cert.as_dict(), "message": "" if cert.strict else
           "no strict certificate (h = Lambda_ell, delta_bar = 0)"}
    verdict, cols = "consistent", None
    if args.domain:
        d = parse_domain(args.domain, args.dim)
        rep = certify_on_model(cert, d, n_grid=args.grid, slack=args.slack)
        out.update(min_margin=rep.min_margin, required=rep.required, passed=rep.passed)
        verdict = "consistent" if rep.passed else "violated"
        cols = {"r": rep.r_grid, "margin": rep.margins}
    return vars(p), out, verdict, cols


def cmd_riccati(args):
    T = args.t_max
    end = riccati_domain_end(args.tau, args.c, T)
    ts = np.linspace(0.0, end, args.n + 1)
    try:
        riccati_closed_form(args.tau, args.c, end)
        blowup = False
    except DomainError:
        # the endpoint is the blow-up time itself
        ts, blowup = ts[:-1], True
    f = np.array([riccati_closed_form(args.tau, args.c, t) for t in ts])
    out = {"domain_end": end, "blows_up": blowup, "f_end": float(f[-1]), "n": len(ts)}
    return ({"tau0": args.tau, "c": args.c, "t_max": T}, out, "consistent",
            {"t": ts, "f": f})


def cmd_pminus(args):
    A = parse_matrix(args.matrix)
    v = p_minus(A, args.ell)
    w = min_trace_subspace(A, args.ell, method=args.method, seed=args.seed)
    ok = abs(v - w) <= args.tol * max(1.0, abs(v))
    out = {"p_minus": v, "min_trace": w, "difference": abs(v - w),
           "eigenvalues": np.linalg.eigvalsh((A + A.T) / 2)}
    return {"matrix": A, "ell": args.ell}, out, "consistent" if ok else "violated", None


def cmd_enclosure(args):
    b = enclosure_bounds(args.lam, args.H, args.c, args.dist_boundary)
    inputs = {"Lambda_ell": args.lam, "H": args.H, "c": args.c,
              "dist_boundary": args.dist_boundary}
    return inputs, {"bound": b.bound, "case": b.case, "nonexistence": b.nonexistence}, \
        "consistent", None


def cmd_varifold_check(args):
    V, src = load_varifold(args)
    rng = np.random.default_rng(args.seed)
    center = _center(args, V)
    center = np.zeros(V.m) if center is None else center
    if args.adversarial:
        # Z = -x near the origin points along the mean curvature of a round sphere
        fields = [truncated_field(lambda x: center - x, args.radius, center)]
    else:
        fields = [random_smooth_field(V.m, rng, args.radius, center=center)
                  for _ in range(args.n_fields)]
    rep = check_mean_curvature_bound(V, args.h, fields, tol=args.tol)
    out = {"values": rep.values, "min_value": rep.min_value, "tol": rep.tol,
           "mass": V.mass, "n": V.n}
    inputs = {**src, "h": args.h, "seed": args.seed, "n_fields": len(fields),
              "adversarial": args.adversarial}
    return inputs, out, "consistent" if rep.consistent else "violated", None


def cmd_growth(args):
    V, src = load_varifold(args)
    radii = parse_radii(args.radii)
    center = _center(args, V)
    rep = growth_diagnostics(V, args.sigma, args.alpha, radii, center)
    out = {"exponent": rep.exponent, "d0_estimate": rep.d0_estimate,
           "parabolic": rep.parabolic.value, "parabolic_detail": rep.parabolic.detail,
           "stochastically_complete": rep.stochastically_complete.value,
           "stochastic_completeness_detail": rep.stochastically_complete.detail,
           "confidence": rep.parabolic.confidence}
    inputs = {**src, "radii": radii, "sigma": args.sigma, "alpha": args.alpha}
    return inputs, out, "consistent", {"r": rep.radii, "mass": rep.masses}


def _barrier_for(args):
    d = parse_domain(args.domain, args.dim)
    p = params_for_domain(d, args.ell, h=args.h, R=args.R, c=args.c)
    cert = build_barrier(p)
    return d, p, cert


def cmd_maxprin(args):
    V, src = load_varifold(args)
    if V.ell != args.ell:
        raise DomainError(f"varifold has ell = {V.ell}, command asked for {args.ell}")
    d, p, cert = _barrier_for(args)
    u, gu, hu = barrier_functions(cert, d)
    gamma = math.exp(-cert.C2 * cert.R) if args.gamma is None else args.gamma
    gp = GrowthParams(args.sigma, args.alpha, args.d0)
    center = _center(args, V)
    rep = audit_max_principle(V, u, gu, hu, args.h, gp, gamma, center=center,
                              I_threshold=args.I_threshold, tol=args.tol)
    out = rep.as_dict()
    out["certificate"] = cert.as_dict()
    inputs = {**src, "domain": args.domain, "barrier_params": vars(p)}
    return inputs, out, rep.verdict, None


def cmd_parabolic(args):
    V, src = load_varifold(args)
    if V.ell != args.ell:
        raise DomainError(f"varifold has ell = {V.ell}, command asked for {args.ell}")
    d, p, cert = _barrier_for(args)
    u, gu, hu = barrier_functions(cert, d)
    gamma = math.exp(-cert.C2 * cert.R) if args.gamma is None else args.gamma
    parab = None
    growth = {}
    if args.radii:
        g = growth_diagnostics(V, 0.0, 0.0, parse_radii(args.radii), _center(args, V))
        parab = bool(g.parabolic.value)
        growth = {"exponent": g.exponent, "parabolic": parab}
    rep = audit_parabolic(V, [(u, gu, hu, 0.0)], args.h, gamma, parabolic=parab,
                          spread_tol=args.spread_tol)
    out = {**rep.__dict__, "growth": growth, "certificate": cert.as_dict(), "gamma": gamma}
    inputs = {**src, "domain": args.domain, "barrier_params": vars(p)}
    return inputs, out, "consistent" if rep.passed else "violated", None


def cmd_spectrum(args):
    rep = sphere_cap_example(args.eps, args.r_cap, args.level)
    out = dict(rep.__dict__)
    inputs = {"eps": args.eps, "r_cap": args.r_cap, "level": args.level}
    return inputs, out, "consistent" if rep.passed else "violated", None


def cmd_sample(args):
    if not args.kind:
        raise DomainError("--sample KIND is required")
    V, src = load_varifold(args)
    write_varifold(args.out, V)
    return src, {"n": V.n, "m": V.m, "ell": V.ell, "mass": V.mass, "file": args.out}, \
        "consistent", None


COMMANDS = {
    "barrier": cmd_barrier, "riccati": cmd_riccati, "pminus": cmd_pminus,
    "enclosure": cmd_enclosure, "varifold-check": cmd_varifold_check, "growth": cmd_growth,
    "maxprin": cmd_maxprin, "parabolic": cmd_parabolic, "spectrum": cmd_spectrum,
    "sample": cmd_sample,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--report-dir", default=None)
    common.add_argument("--csv", default=None, help="write plot-ready series to this file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap = _Parser(prog="barrierkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    p = sub.add_parser("barrier", help="barrier constants and model certification")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--lam1", type=float, required=True, help="Lambda_{ell-1}")
    p.add_argument("--lam2", type=float, required=True, help="Lambda_ell")
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--domain", default=None, help="certify on this model domain")
    p.add_argument("--dim", type=int, default=3, help="ambient dimension of --domain")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--slack", type=float, default=1e-8)

    p = sub.add_parser("riccati", help="scalar Riccati solution on its domain")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)

    p = sub.add_parser("pminus", help="mean of the ell smallest eigenvalues")
    p.add_argument("--matrix", required=True, help="rows separated by ';'")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--method", default="auto", choices=["auto", "search", "frame"])
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("enclosure", help="distance bound to the domain boundary")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--dist-boundary", type=float, default=math.inf)

    p = sub.add_parser("varifold-check", help="mean curvature bound via first variation")
    _add_sample_flags(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--n-fields", type=int, default=20)
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--center", default=None)
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("growth", help="mass growth diagnostics")
    _add_sample_flags(p)
    p.add_argument("--radii", required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--center", default=None)

    for name, hlp in (("maxprin", "maximum principle audit"),
                      ("parabolic", "parabolic maximum principle audit")):
        p = sub.add_parser(name, help=hlp)
        _add_sample_flags(p)
        p.add_argument("--domain", required=True)
        p.add_argument("--dim", type=int, default=3)
        p.add_argument("--ell", type=int, default=2)
        p.add_argument("--h", type=float, default=0.0)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--R", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None,
                       help="level; default exp(-C2 R), the collar edge")
        p.add_argument("--center", default=None, help="centre of the growth balls")
        if name == "maxprin":
            p.add_argument("--sigma", type=float, default=0.0)
            p.add_argument("--alpha", type=float, default=0.0)
            p.add_argument("--d0", type=float, default=0.0)
            p.add_argument("--I-threshold", type=float, default=None)
            p.add_argument("--tol", type=float, default=1e-9)
        else:
            p.add_argument("--radii", default=None, help="growth radii for parabolicity")
            p.add_argument("--spread-tol", type=float, default=1e-6)

    p = sub.add_parser("spectrum", help="Barta quotient on the sphere-cap mesh")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--r-cap", type=float, default=math.pi / 5)
    p.add_argument("--level", type=int, default=6)

    p = sub.add_parser("sample", help="write a sampled submanifold as a varifold file")
    _add_sample_flags(p, with_file=False)
    p.add_argument("--out", required=True)
    p.set_defaults(varifold=None)
    return ap


def _summary(report):
    flat = {}
    for k, v in report["outputs"].items():
        if isinstance(v, dict):
            flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            flat[k] = v
    keys = [k for k, v in flat.items() if isinstance(v, (int, float, str, bool))][:10]
    lines = [f"{report['command']}: {report['verdict']}"]
    lines += [f"  {k} = {flat[k]}" for k in keys]
    return "\n".join(lines)


def run(argv):
    """Run one subcommand and return its exit code."""
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise DomainError(f"missing subcommand; one of {', '.join(COMMANDS)}")
        with np.errstate(over="ignore"):
            inputs, outputs, verdict, cols = COMMANDS[args.command](args)
    except (DomainError, HypothesisError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    inputs = {**inputs, "seed": args.seed}
    rep = make_report(args.command, inputs, outputs, verdict,
                      ["computed"], __version__, time.perf_counter() - t0)
    rdir = args.report_dir or os.environ.get(REPORT_ENV) or "."
    os.makedirs(rdir, exist_ok=True)
    with open(os.path.join(rdir, f"{args.command}.json"), "w") as fh:
        json.dump(rep, fh, indent=1, sort_keys=True)
    if args.csv and cols is not None:
        write_csv(args.csv, cols)
    print(_summary(rep))
    return CONSISTENT if verdict == "consistent" else VIOLATED


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
