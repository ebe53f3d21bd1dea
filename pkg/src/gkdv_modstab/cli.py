"""Command-line front end.

    gkdv-modstab <wave|stability|whitham|evans|scan|verify> --nl TAG --a A --E E --c C
                 [--config PATH] [--format csv|json|pretty] [--tol-quad X] [--tol-fd X]
                 [--evans-radius R] [--out PATH]

Exit codes: 0 success, 1 internal error, 2 no periodic orbit, 3 degenerate
orbit, 4 a ``verify`` check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from .conserved import brackets, gradients
from .errors import DegenerateIndex, DegenerateOrbit, ModStabError, NoPeriodicOrbit
from .evans import (
    evans_values,
    fit_expansion,
    gamma0,
    large_lambda_sign,
    monodromy_matrices,
    spectrum_near_origin,
)
from .modulation import (
    check_equivalence,
    classify_modulational,
    coperiodic_index,
    dispersion_cubic,
    match_multisets,
    perturbed,
    s_derivative_residual,
    whitham_linearization,
)
from .nonlinearity import from_tag
from .scan import ScanConfig, analyze_point, format_float, record_json, run_scan, write_csv, write_jsonl
from .wave import make_wave, sample_profile

EXIT_OK, EXIT_INTERNAL, EXIT_NO_ORBIT, EXIT_DEGENERATE, EXIT_VERIFY = 0, 1, 2, 3, 4

CONFIG_KEYS = {
    "nl": str,
    "a": float,
    "E": float,
    "c": float,
    "format": str,
    "tol_quad": float,
    "tol_fd": float,
    "evans_radius": float,
    "evans_kappa": float,
    "out": str,
    "grid": str,
    "workers": int,
    "evans": bool,
    "no_timing": bool,
}
DEFAULTS = {
    "nl": "kdv",
    "format": "pretty",
    "tol_quad": 1e-12,
    "tol_fd": 1e-7,
    "evans_radius": 1e-2,
    "evans_kappa": 1e-2,
    "workers": 1,
    "evans": False,
    "no_timing": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share the internal-error code; 2 is reserved for "no orbit"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INTERNAL, f"{self.prog}: error: {message}\n")


def load_config(path: str) -> dict:
    """Flat JSON object; unknown keys are an error."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for k, v in data.items():
        typ = CONFIG_KEYS[k]
        if typ is float and isinstance(v, (int, float)) and not isinstance(v, bool):
            out[k] = float(v)
        elif isinstance(v, typ):
            out[k] = v
        else:
            raise UsageError(f"config key {k!r} expects {typ.__name__}")
    return out


def resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(load_config(args.config))
    for k in CONFIG_KEYS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            cfg[k] = v
    if cfg["format"] not in ("csv", "json", "pretty"):
        raise UsageError(f"bad format {cfg['format']!r}")
    return cfg


def _need_point(cfg):
    missing = [k for k in ("a", "E", "c") if k not in cfg]
    if missing:
        raise UsageError(f"missing parameters: {', '.join(missing)}")
    return cfg["a"], cfg["E"], cfg["c"]


def parse_grid(text: str) -> dict:
    """``a=min:max:n,E=...,c=v`` -> ranges; a bare value fixes the parameter."""
    ranges = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise UsageError(f"bad grid item {part!r}")
        name, rng = (s.strip() for s in part.split("=", 1))
        bits = rng.split(":")
        try:
            if len(bits) == 1:
                v = float(bits[0])
                ranges[name] = (v, v, 1)
            elif len(bits) == 3:
                ranges[name] = (float(bits[0]), float(bits[1]), int(bits[2]))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad grid item {part!r}") from None
    return ranges


# --- output -----------------------------------------------------------------------


def _num(v, digits):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, complex):
        return {"re": _num(v.real, digits), "im": _num(v.imag, digits)}
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(format_float(v, digits))


def _jsonable(obj, digits):
    if isinstance(obj, dict):
        return {k: _jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v, digits) for v in obj]
    if isinstance(obj, (np.floating, np.complexfloating)):
        obj = obj.item()
    return _num(obj, digits)


def _flat(obj, prefix=""):
    """Flatten nested dicts/lists into dotted keys for csv and pretty output."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flat(v, f"{prefix}{k}."))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        for i, v in enumerate(obj):
            out.update(_flat(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def _scalar_text(v, digits):
    if isinstance(v, complex):
        return f"{format_float(v.real, digits)}{'+' if v.imag >= 0 else '-'}{format_float(abs(v.imag), digits)}j"
    if isinstance(v, (bool, str)) or v is None:
        return "" if v is None else str(v)
    return format_float(v, digits)


def emit(obj: dict, fmt: str, stream):
    if fmt == "json":
        stream.write(json.dumps(_jsonable(obj, 17)) + "\n")
        return
    if fmt == "csv":
        import csv

        flat = _flat(obj)
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(flat.keys())
        w.writerow([_scalar_text(v, 17) for v in flat.values()])
        return
    flat = _flat(obj)
    width = max(map(len, flat)) if flat else 0
    for k, v in flat.items():
        stream.write(f"{k.ljust(width)}  {_scalar_text(v, 6)}\n")


@contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


# --- commands ---------------------------------------------------------------------


def _wave(cfg):
    nl = from_tag(cfg["nl"])
    a, E, c = _need_point(cfg)
    return nl, make_wave(nl, a, E, c, tol=cfg["tol_quad"])


def cmd_wave(cfg, out):
    nl, w = _wave(cfg)
    prof = sample_profile(nl, w)
    emit({
        "nl": nl.name, "a": w.a, "E": w.E, "c": w.c, "uminus": w.uminus, "uplus": w.uplus, "T": w.T,
        "energy_residual": prof.energy_residual,
        "max_u": float(prof.us.max()), "min_u": float(prof.us.min()),
    }, cfg["format"], out)
    return EXIT_OK


def cmd_stability(cfg, out):
    a, E, c = _need_point(cfg)
    scfg = _scan_config(cfg, {"a": a, "E": E, "c": c}, {})
    rec = analyze_point(cfg["nl"], a, E, c, scfg)
    if cfg["format"] == "json":
        out.write(record_json(rec) + "\n")
    elif cfg["format"] == "csv":
        out.write(write_csv([rec]))
    else:
        d = rec.to_dict()
        width = max(map(len, d))
        for k, v in d.items():
            out.write(f"{k.ljust(width)}  {_scalar_text(v, 6)}\n")
        if rec.outcome not in ("NoPeriodicOrbit", "Degenerate", "Error"):
            nl, w = _wave(cfg)
            cs = gradients(nl, w, rtol=cfg["tol_fd"], tol=cfg["tol_quad"])
            br = brackets(cs)
            dc = dispersion_cubic(br)
            roots = ", ".join(_scalar_text(complex(z), 6) for z in dc.roots)
            out.write(f"{'cubic'.ljust(width)}  -y^3 {dc.b1:+.6g} y {dc.b0:+.6g}; roots {roots}\n")
            try:
                out.write(f"{'coperiodic'.ljust(width)}  {coperiodic_index(br, cs.d('T', 'E')).report}\n")
            except DegenerateIndex as exc:
                out.write(f"{'coperiodic'.ljust(width)}  degenerate: {exc}\n")
    if rec.outcome == "NoPeriodicOrbit":
        print(f"error: no periodic orbit at (a, E, c) = ({a}, {E}, {c})", file=sys.stderr)
        return EXIT_NO_ORBIT
    if rec.outcome == "Degenerate":
        print(f"error: degenerate orbit at (a, E, c) = ({a}, {E}, {c})", file=sys.stderr)
        return EXIT_DEGENERATE
    if rec.outcome == "Error":
        print(f"error: {rec.flags}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_whitham(cfg, out):
    nl, w = _wave(cfg)
    cs = gradients(nl, w, rtol=cfg["tol_fd"], tol=cfg["tol_quad"])
    wl = whitham_linearization(nl, w, cs)
    rep = check_equivalence(nl, w, cs, wl)
    dc = dispersion_cubic(brackets(cs))
    emit({
        "T": cs.T,
        "B": wl.B.tolist(),
        "C": wl.C.tolist(),
        "A": wl.A.tolist(),
        "eigs": [complex(z) for z in wl.eigs],
        "hyperbolic": wl.hyperbolic,
        "verdict": str(classify_modulational(dc)),
        "equivalence_max_rel_dev": rep.max_rel_deviation,
        "eig_root_mismatch": rep.eig_root_mismatch,
    }, cfg["format"], out)
    return EXIT_OK


def cmd_evans(cfg, out):
    nl, w = _wave(cfg)
    cs = gradients(nl, w, rtol=cfg["tol_fd"], tol=cfg["tol_quad"])
    dc = dispersion_cubic(brackets(cs))
    prof = sample_profile(nl, w)
    ex = fit_expansion(nl, prof, radius=cfg["evans_radius"])
    wl = whitham_linearization(nl, w, cs)
    g0, spread = gamma0(ex, wl)
    mus = spectrum_near_origin(nl, prof, cfg["evans_kappa"], dc)
    lam, dl = large_lambda_sign(nl, prof)
    emit({
        "c30": ex.c30, "c21": ex.c21, "c12": ex.c12, "c03": ex.c03,
        "pred_c30": dc.b0, "pred_c21": dc.b1, "pred_c03": 1j,
        "fit_residual": ex.residual, "refit_shift": ex.refit_shift,
        "gamma0": g0, "gamma0_spread": spread,
        "kappa": cfg["evans_kappa"], "roots": [complex(z) for z in mus],
        "predicted_roots": [complex(z) for z in 1j * cfg["evans_kappa"] / dc.roots],
        "Lambda": lam, "D_Lambda": dl,
    }, cfg["format"], out)
    return EXIT_OK


def _scan_config(cfg, fixed, ranges):
    pipeline = ("conserved", "cubic", "whitham") + (("evans",) if cfg.get("evans") else ())
    return ScanConfig(
        cfg["nl"], ranges=ranges, fixed=fixed, pipeline=pipeline,
        tol_quad=cfg["tol_quad"], tol_fd=cfg["tol_fd"], evans_radius=cfg["evans_radius"],
        evans_kappa=cfg["evans_kappa"], workers=cfg["workers"], record_timing=not cfg["no_timing"],
    )


def cmd_scan(cfg, out):
    if "grid" not in cfg:
        raise UsageError("scan needs --grid")
    ranges = parse_grid(cfg["grid"])
    fixed = {k: cfg[k] for k in ("a", "E", "c") if k in cfg and k not in ranges}
    scfg = _scan_config(cfg, fixed, ranges)
    records = run_scan(scfg)
    if cfg["format"] == "json":
        write_jsonl(records, out)
    elif cfg["format"] == "csv":
        write_csv(records, out)
    else:
        cols = ("a", "E", "c", "outcome", "T", "disc", "flags")
        out.write("  ".join(c.rjust(13) for c in cols) + "\n")
        for r in records:
            d = r.to_dict()
            out.write("  ".join(_scalar_text(d[c], 6).rjust(13) for c in cols) + "\n")
    return EXIT_OK


def verify_checks(nl, w, tol_fd=1e-7, tol_quad=1e-12, evans_radius=1e-2, tamper=None):
    """Run the identity suite; returns a list of (name, residual, threshold, passed)."""
    rows = []

    def check(name, value, thr, passed=None):
        ok = bool(value < thr) if passed is None else bool(passed)
        rows.append((name, float(value), float(thr), ok))

    cs = gradients(nl, w, rtol=tol_fd, tol=tol_quad)
    if tamper:
        q, p = tamper.split("_")
        cs = perturbed(cs, q, p, 1e-3)
    check("grad_relation", float(np.max(np.abs(cs.grad_relation_residual(*w.aEc)))), 1e-6)
    for k, v in cs.identity_residuals().items():
        check(f"identity {k}", v, 1e-7)
    br = brackets(cs)
    dc = dispersion_cubic(br)
    T = cs.T
    wl = whitham_linearization(nl, w, cs)
    detB = np.linalg.det(wl.B)
    check("det B = {T,M,P}/T^4", abs(detB - br.TMP_aEc / T**4) / abs(br.TMP_aEc / T**4), 1e-6)
    check("d_s <M,P,w> = -d_c <M,P,w>", s_derivative_residual(nl, w, cs), 1e-6)
    rep = check_equivalence(nl, w, cs, wl)
    check("whitham pencil vs cubic", rep.max_rel_deviation, 1e-5)
    check("eig(A) vs -T/y_j", match_multisets(wl.eigs, -T / dc.roots), 1e-5)
    prof = sample_profile(nl, w)
    probe = np.array([x + 1j * y for x in (-0.3, 0.0, 0.3) for y in (-0.2, 0.1, 0.4)])
    Ms = monodromy_matrices(nl, prof, probe)
    dets = np.linalg.det(Ms)
    check("det M(mu) = 1", float(np.max(np.abs(dets - 1))), 1e-8)
    M0 = monodromy_matrices(nl, prof, [0.0])
    D0 = evans_values(M0, [0.1, 0.3])[0]
    exact = (1 - np.exp(1j * np.array([0.1, 0.3]))) ** 3
    check("D(0,k) = (1-e^{ik})^3", float(np.max(np.abs(D0 - exact))), 1e-8)
    ex = fit_expansion(nl, prof, radius=evans_radius)
    rel = max(abs(ex.c30 - dc.b0) / abs(dc.b0), abs(ex.c21 - dc.b1) / abs(dc.b1), abs(ex.c03 - 1j))
    check("expansion vs brackets", rel, 1e-3)
    check("spurious mu kappa^2 term", ex.spurious_ratio(), 1e-3)
    lam, dl = large_lambda_sign(nl, prof)
    check(f"D({lam:g},0) < 0", dl, 0.0)
    if nl.monomial is not None and nl.monomial[1] % 2 == 0 and w.a == 0.0 and abs(w.uminus + w.uplus) <= 1e-12 * w.width:
        check("M = 0 (odd f, symmetric well)", abs(cs.M) / (T * w.width), 1e-10)
    return rows


def cmd_verify(cfg, out, tamper=None):
    nl, w = _wave(cfg)
    rows = verify_checks(nl, w, cfg["tol_fd"], cfg["tol_quad"], cfg["evans_radius"], tamper)
    fmt = cfg["format"]
    if fmt == "pretty":
        width = max(len(r[0]) for r in rows)
        for name, val, thr, ok in rows:
            out.write(f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {val:.3e}  (< {thr:.0e})\n")
    else:
        emit({"checks": [{"name": n, "value": v, "threshold": t, "passed": ok} for n, v, t, ok in rows],
              "all_passed": all(r[3] for r in rows)}, fmt, out)
    return EXIT_OK if all(r[3] for r in rows) else EXIT_VERIFY


COMMANDS = {
    "wave": cmd_wave,
    "stability": cmd_stability,
    "whitham": cmd_whitham,
    "evans": cmd_evans,
    "scan": cmd_scan,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nl", help="nonlinearity: kdv, mkdv+, mkdv-, power:p")
    common.add_argument("--a", type=float)
    common.add_argument("--E", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--config", help="flat JSON config; flags override it")
    common.add_argument("--format", choices=("csv", "json", "pretty"))
    common.add_argument("--tol-quad", dest="tol_quad", type=float)
    common.add_argument("--tol-fd", dest="tol_fd", type=float)
    common.add_argument("--evans-radius", dest="evans_radius", type=float)
    common.add_argument("--evans-kappa", dest="evans_kappa", type=float)
    common.add_argument("--out", help="write output here instead of stdout")

    parser = _Parser(
        prog="gkdv-modstab",
        description="Modulational stability of periodic waves of u_t = u_xxx + f(u)_x.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("wave", parents=[common], help="turning points and period, with a profile check")
    p = sub.add_parser("stability", parents=[common], help="cubic verdict and full record")
    p.add_argument("--evans", action="store_true", default=None, help="also run the Evans stage")
    sub.add_parser("whitham", parents=[common], help="Whitham matrices and hyperbolicity")
    sub.add_parser("evans", parents=[common], help="Evans expansion fit and roots near 0")
    p = sub.add_parser("scan", parents=[common], help="sweep a grid of (a, E, c)")
    p.add_argument("--grid", help="a=min:max:n,E=min:max:n,c=value")
    p.add_argument("--workers", type=int)
    p.add_argument("--evans", action="store_true", default=None)
    p.add_argument("--no-timing", dest="no_timing", action="store_true", default=None,
                   help="leave timing_ms empty so output is byte-reproducible")
    p = sub.add_parser("verify", parents=[common], help="run the identity suite")
    p.add_argument("--tamper", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        with _output(cfg.get("out")) as out:
            if args.command == "verify":
                return cmd_verify(cfg, out, tamper=args.tamper)
            return COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except NoPeriodicOrbit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ORBIT
    except DegenerateOrbit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ModStabError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
