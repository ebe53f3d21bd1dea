"""Acceptance criteria 1 to 9.  Each test records one PASS/FAIL line, shown
in the "acceptance criteria" section of the pytest summary."""
import math

import numpy as np
import pytest

from oracles import count_real_roots_scan
from gkdv_modstab import NoPeriodicOrbit, from_tag, make_wave, sample_profile
from gkdv_modstab.conserved import brackets, gradients
from gkdv_modstab.evans import (
    evans_values,
    fit_expansion,
    monodromy_matrices,
    spectrum_near_origin,
)
from gkdv_modstab.modulation import (
    Verdict,
    check_equivalence,
    classify_modulational,
    dispersion_cubic,
    match_multisets,
    s_derivative_residual,
    whitham_linearization,
)
from gkdv_modstab.scan import ScanConfig, run_scan, write_csv


@pytest.fixture
def report(request):
    def _report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines[n] = line
        print(line)
    return _report


# --- sample sets ----------------------------------------------------------------------


def kdv_window(a, c):
    """E range of periodic KdV orbits: between V at the local max and min of V."""
    r = math.sqrt(c * c + 4 * a)
    V = lambda u: u**3 / 3 - a * u - c * u * u / 2
    return V((c + r) / 2), V((c - r) / 2)


def kdv_grid():
    pts = []
    for a in np.linspace(-0.05, 0.2, 5):
        for c in np.linspace(0.5, 2.0, 5):
            lo, hi = kdv_window(a, c)
            for frac in np.linspace(0.1, 0.9, 5):
                pts.append(("kdv", float(a), float(lo + frac * (hi - lo)), float(c)))
    return pts


def mkdv_samples(tag):
    """Deterministic sweep; points without a periodic orbit are dropped by
    the package's own well detection."""
    if tag == "mkdv+":
        box = [(a, E, c) for a in (-0.1, 0.0, 0.1) for c in (-1.0, 1.0, 2.0)
               for E in (-0.2, -0.05, 0.05, 0.2, 0.5)]
    else:
        box = [(a, E, c) for a in (-0.1, -0.05, 0.0, 0.05, 0.1) for c in (-1.0, -1.5, -2.0)
               for E in (0.05, 0.2, 0.5, 0.9)]
    out = []
    nl = from_tag(tag)
    for a, E, c in box:
        try:
            make_wave(nl, a, E, c)
        except NoPeriodicOrbit:
            continue
        out.append((tag, a, E, c))
    return out


class Point:
    def __init__(self, key):
        self.key = key
        tag, a, E, c = key
        self.nl = from_tag(tag)
        self.wave = make_wave(self.nl, a, E, c)
        self.cs = gradients(self.nl, self.wave)
        self.br = brackets(self.cs)
        self.cubic = dispersion_cubic(self.br)
        self.verdict = classify_modulational(self.cubic)

    def whitham(self):
        if not hasattr(self, "_wl"):
            self._wl = whitham_linearization(self.nl, self.wave, self.cs)
        return self._wl

    def profile(self):
        if not hasattr(self, "_prof"):
            self._prof = sample_profile(self.nl, self.wave)
        return self._prof


@pytest.fixture(scope="module")
def kdv_points():
    return [Point(k) for k in kdv_grid()]


@pytest.fixture(scope="module")
def mkdv_points():
    return {tag: [Point(k) for k in mkdv_samples(tag)] for tag in ("mkdv+", "mkdv-")}


@pytest.fixture(scope="module")
def all_points(kdv_points, mkdv_points):
    return kdv_points + mkdv_points["mkdv+"] + mkdv_points["mkdv-"]


# --- criteria -------------------------------------------------------------------------


def test_1_kdv_always_stable(kdv_points, report):
    ratios = [p.cubic.disc / p.cubic.scale for p in kdv_points]
    verdicts = [p.verdict for p in kdv_points]
    n_ok = sum(r > 1e-8 and v is Verdict.STABLE for r, v in zip(ratios, verdicts))
    ok = len(kdv_points) == 125 and n_ok == 125
    report(1, ok, f"KdV 5x5x5 grid: {n_ok}/{len(kdv_points)} Stable, min disc/scale = {min(ratios):.3e}")
    assert ok


def test_2_mkdv_four_real_roots(mkdv_points, report):
    mismatches, counts = [], {}
    for tag, sign in (("mkdv+", -1), ("mkdv-", 1)):
        pts = mkdv_points[tag]
        counts[tag] = len(pts)
        for p in pts:
            _, a, E, c = p.key
            # E - V(y) = E + a y + (c/2) y^2 -+ y^4/4
            four = count_real_roots_scan([sign / 4, 0.0, c / 2, a, E]) == 4
            if four != (p.verdict is Verdict.STABLE):
                mismatches.append((p.key, str(p.verdict)))
    n_unst = sum(p.verdict is Verdict.UNSTABLE for v in mkdv_points.values() for p in v)
    ok = min(counts.values()) >= 10 and not mismatches
    report(2, ok, f"mKdV samples {counts} ({n_unst} unstable): {len(mismatches)} mismatches {mismatches[:3]}")
    assert ok


def test_3_identities(all_points, report):
    worst = {"grad": 0.0, "P_E+2T_c-2M_a": 0.0, "d_s": 0.0}
    for p in all_points:
        if p.wave.E != 0.0:
            worst["grad"] = max(worst["grad"], float(np.max(np.abs(p.cs.grad_relation_residual(*p.wave.aEc)))))
        worst["P_E+2T_c-2M_a"] = max(worst["P_E+2T_c-2M_a"], p.cs.identity_residuals()["P_E+2T_c-2M_a"])
        worst["d_s"] = max(worst["d_s"], s_derivative_residual(p.nl, p.wave, p.cs))
    ok = worst["grad"] < 1e-6 and worst["P_E+2T_c-2M_a"] < 1e-7 and worst["d_s"] < 1e-6
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    report(3, ok, f"{len(all_points)} points, worst residuals: {detail}")
    assert ok


def _structure_worst(p):
    probe = np.array([x + 1j * y for x in (-0.3, 0.0, 0.3) for y in (-0.2, 0.1, 0.4)])
    Ms = monodromy_matrices(p.nl, p.profile(), np.concatenate([probe, [0.2, 0.7, 0.0]]))
    det = float(np.max(np.abs(np.linalg.det(Ms[:9]) - 1)))
    Dr = evans_values(Ms[9:11], [0.0])[:, 0]
    imag = float(np.max(np.abs(Dr.imag) / np.abs(Dr)))
    ks = np.array([0.1, 0.3])
    d0 = float(np.max(np.abs(evans_values(Ms[11:], ks)[0] - (1 - np.exp(1j * ks)) ** 3)))
    return det, imag, d0


def test_4_evans_structure(kdv_points, mkdv_points, report):
    pts = kdv_points[::25] + mkdv_points["mkdv+"][::4] + mkdv_points["mkdv-"][::4]
    w = np.max([_structure_worst(p) for p in pts], axis=0)
    ok = w[0] < 1e-8 and w[1] < 1e-10 and w[2] < 1e-8
    report(4, ok, f"{len(pts)} waves: |det M - 1| {w[0]:.2e}, Im D(mu,0)/|D| {w[1]:.2e}, "
                  f"|D(0,k) - (1-e^ik)^3| {w[2]:.2e}")
    assert ok


def test_5_expansion_coefficients(kdv_points, mkdv_points, report):
    pts = kdv_points[::26] + mkdv_points["mkdv+"][::8] + mkdv_points["mkdv-"][::8]
    n_kdv = sum(p.key[0] == "kdv" for p in pts)
    rel, spur = 0.0, 0.0
    for p in pts:
        ex = fit_expansion(p.nl, p.profile())
        dc = p.cubic
        rel = max(rel, abs(ex.c30 - dc.b0) / abs(dc.b0), abs(ex.c21 - dc.b1) / abs(dc.b1), abs(ex.c03 - 1j))
        spur = max(spur, ex.spurious_ratio())
    ok = n_kdv >= 5 and len(pts) - n_kdv >= 5 and rel < 1e-3 and spur < 1e-3
    report(5, ok, f"{n_kdv} KdV + {len(pts) - n_kdv} mKdV fits: worst coefficient rel. error {rel:.2e}, "
                  f"spurious i k^2 mu term {spur:.2e}")
    assert ok


def test_6_whitham_equivalence(all_points, report):
    dev, eig = 0.0, 0.0
    for p in all_points:
        wl = p.whitham()
        rep = check_equivalence(p.nl, p.wave, p.cs, wl)
        dev = max(dev, rep.max_rel_deviation)
        eig = max(eig, match_multisets(wl.eigs, -p.cs.T / p.cubic.roots))
    ok = dev < 1e-5 and eig < 1e-5
    report(6, ok, f"{len(all_points)} points: pencil vs cubic {dev:.2e}, eig(A) vs -T/y_j {eig:.2e}")
    assert ok


def _tangent_angle_error(p, kappa=1e-2):
    """Largest angular distance (mod pi) between the initial directions of
    the unstable Evans roots and the lines arg(i y) of the complex pair."""
    dc = p.cubic
    kappa /= max(1.0, float(np.max(np.abs(1 / dc.roots))))
    m1 = spectrum_near_origin(p.nl, p.profile(), kappa, dc)
    m2 = spectrum_near_origin(p.nl, p.profile(), kappa / 2, dc)
    pair = [y for y in dc.roots if abs(y.imag) > 0]
    lines = [np.angle(1j * y) for y in pair]
    worst = 0.0
    for y in pair:
        pred = 1j * kappa / y
        a = m1[np.argmin(np.abs(m1 - pred))]
        b = m2[np.argmin(np.abs(m2 - pred / 2))]
        if abs(a.real) < 0.1 * abs(a):
            return np.inf  # root did not leave the imaginary axis
        tangent = (4 * b - a) / kappa  # Richardson: removes the O(kappa^2) drift
        d = [(np.angle(tangent) - t) % np.pi for t in lines]
        worst = max(worst, min(min(x, np.pi - x) for x in d))
    return worst


def test_7_eigenvalues_match_verdict(all_points, report):
    bad = []
    for p in all_points:
        real = bool(np.all(np.abs(p.whitham().eigs.imag) <= 1e-10 * np.abs(p.whitham().eigs)))
        if real != (p.verdict in (Verdict.STABLE, Verdict.INDETERMINATE)):
            bad.append(p.key)
    # unstable example located by a scan over an mKdV box
    cfg = ScanConfig("mkdv+", ranges={"a": (0.0, 0.1, 3), "E": (0.1, 0.3, 3)}, fixed={"c": 1.0},
                     record_timing=False)
    found = next((r for r in run_scan(cfg) if r.outcome == "Unstable"), None)
    err = np.inf
    if found is not None:
        err = _tangent_angle_error(Point(("mkdv+", found.a, found.E, found.c)))
    ok = not bad and err < 1e-2
    where = None if found is None else (found.a, found.E, found.c)
    report(7, ok, f"{len(all_points)} points, {len(bad)} eig/verdict mismatches; unstable mkdv+ at "
                  f"(a,E,c)={where}: root angle error {err:.2e} rad")
    assert ok


def _harmonic_cases():
    # (tag, a, c, f'(u), V'(u) coefficients highest first)
    return [
        ("kdv", 0.1, 1.0), ("kdv", 0.0, 2.0), ("kdv", -0.05, 0.7),
        ("mkdv+", 0.0, 1.0), ("mkdv+", 0.1, 1.5), ("mkdv+", 0.05, -1.0),
        ("mkdv-", 0.05, -1.0), ("mkdv-", 0.0, -2.0),
    ]


def _harmonic_error(tag, a, c):
    if tag == "kdv":
        dV = [1.0, -c, -a]  # u^2 - c u - a
        V = lambda u: u**3 / 3 - a * u - c * u * u / 2
        d2V = lambda u: 2 * u - c
    else:
        s = 1.0 if tag == "mkdv+" else -1.0
        dV = [s, 0.0, -c, -a]
        V = lambda u: s * u**4 / 4 - a * u - c * u * u / 2
        d2V = lambda u: 3 * s * u * u - c
    crit = [r.real for r in np.roots(dV) if abs(r.imag) < 1e-12]
    mins = [u for u in crit if d2V(u) > 0]
    u0 = min(mins, key=V)
    w = make_wave(from_tag(tag), a, V(u0) + 1e-6, c, bracket_hint=u0)
    exact = 2 * np.pi / math.sqrt(d2V(u0))
    return abs(w.T - exact) / exact


def test_8_harmonic_limit(report):
    errs = {case: _harmonic_error(*case) for case in _harmonic_cases()}
    worst = max(errs.values())
    ok = worst < 1e-3
    report(8, ok, f"{len(errs)} KdV/mKdV wells: worst |T - 2pi/sqrt(V'')|/T = {worst:.2e}")
    assert ok


def test_9_determinism(report):
    base = dict(nl_tag="mkdv+", ranges={"a": (0.0, 0.1, 2), "E": (-0.2, 0.5, 3), "c": (-1.0, 1.0, 2)},
                pipeline=("conserved", "cubic", "whitham", "evans"), record_timing=False)
    outs = {n: write_csv(run_scan(ScanConfig(**base, workers=n))) for n in (1, 4, 8)}
    ok = outs[1] == outs[4] == outs[8]
    rows = outs[1].count("\n") - 1
    report(9, ok, f"{rows}-point scan with Evans stage: CSV identical for 1, 4, 8 workers = {ok}")
    assert ok
