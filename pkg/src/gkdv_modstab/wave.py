"""Periodic traveling-wave profiles of u_t = u_xxx + f(u)_x.

Profiles solve u_x^2/2 = E + a u + (c/2) u^2 - F(u), i.e. they oscillate in a
well of the effective potential V(u; a, c) = F(u) - a u - (c/2) u^2 between
two simple turning points u- < u+ where V = E.

Complete integrals over the well, such as the period

    T = sqrt(2) * int_{u-}^{u+} du / sqrt(E - V),

are evaluated after the substitution u = u- + (u+ - u-) sin^2(theta), which
turns du / sqrt(E - V) into 2 dtheta / sqrt(h) with the smooth, positive factor
h(u) = (E - V) / ((u - u-)(u+ - u)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rk
from .errors import DegenerateOrbit, IntegrationFailure, NoPeriodicOrbit, QuadratureFailure
from .nonlinearity import Nonlinearity

__all__ = [
    "WaveParams",
    "WaveProfile",
    "effective_potential",
    "find_turning_points",
    "make_wave",
    "period",
    "well_integrals",
    "sample_profile",
]

SQRT2 = np.sqrt(2.0)
DEFAULT_QUAD_TOL = 1e-12
DEFAULT_SIMPLICITY = 1e-8
NEAR_DEGENERATE = 1e-6


@dataclass(frozen=True)
class WaveParams:
    a: float
    E: float
    c: float
    uminus: float
    uplus: float
    T: float
    # quadrature partition in theta; reused at nearby parameters so that finite
    # differences see a smooth function of (a, E, c)
    panels: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @property
    def width(self) -> float:
        return self.uplus - self.uminus

    @property
    def aEc(self) -> tuple[float, float, float]:
        return (self.a, self.E, self.c)


def effective_potential(nl: Nonlinearity, a: float, c: float, u):
    return nl.F(u) - a * u - 0.5 * c * u * u


def _dV(nl, a, c, u):
    return nl.f(u) - a - c * u


def _d2V(nl, a, c, u):
    return nl.df(u) - c


def _hybrid_root(g, dg, lo, hi, glo, ghi, maxiter=200):
    """Safeguarded Newton inside a sign-change bracket [lo, hi]."""
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0.0:
            return x
        if (gx < 0) == (glo < 0):
            lo, glo = x, gx
        else:
            hi, ghi = x, gx
        d = dg(x)
        step_ok = False
        if d != 0.0 and np.isfinite(d):
            xn = x - gx / d
            if lo < xn < hi:
                step_ok = True
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    # a couple of polishing Newton steps, kept only if they reduce |g|
    for _ in range(3):
        gx, d = g(x), dg(x)
        if d == 0.0 or gx == 0.0:
            break
        xn = x - gx / d
        if abs(g(xn)) < abs(gx):
            x = xn
        else:
            break
    return x


def _critical_points(nl, a, c, lo, hi, npts=4097):
    """Critical points of V on [lo, hi] located by a sign scan of V'."""
    # small irrational offset keeps symmetric critical points off the nodes
    shift = (hi - lo) * 1e-7 * np.pi
    us = np.linspace(lo, hi, npts) + shift
    vp = _dV(nl, a, c, us)
    s = np.sign(vp)
    out = []
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        r = _hybrid_root(
            lambda u: _dV(nl, a, c, u),
            lambda u: _d2V(nl, a, c, u),
            us[i], us[i + 1], vp[i], vp[i + 1],
        )
        kind = "min" if vp[i] < 0 else "max"
        out.append((r, kind))
    return out


def _walk(nl, a, E, c, umin, cps, lo, hi, direction):
    """Bracket of the turning point on one side of the minimum ``umin``.

    V is monotone between consecutive critical points, so walking outward
    until the first local maximum above E yields a unique sign change.
    Returns None when the well leaks past the window edge.
    """
    V = lambda u: effective_potential(nl, a, c, u)
    ordered = [cp for cp in cps if (cp[0] - umin) * direction > 0]
    ordered.sort(key=lambda cp: cp[0] * direction)
    last_min = umin
    for u, kind in ordered:
        if kind == "min":
            last_min = u
            continue
        vm = V(u)
        if vm > E:
            return (last_min, u)
        if vm == E:
            raise DegenerateOrbit(f"energy level E={E!r} sits on a local maximum of V at u={u!r}")
    edge = hi if direction > 0 else lo
    if V(edge) > E:
        return (last_min, edge)
    return None


def _initial_window(a, E, c, hint):
    center = 0.0 if hint is None else float(hint)
    w = 4.0 * (1.0 + np.sqrt(abs(a)) + abs(c) + abs(E) ** (1.0 / 3.0))
    return center, w


def find_turning_points(
    nl: Nonlinearity,
    a: float,
    E: float,
    c: float,
    bracket_hint: float | None = None,
    simplicity: float = DEFAULT_SIMPLICITY,
    max_expand: int = 10,
) -> tuple[float, float]:
    """Turning points (u-, u+) of the well at level E.

    With several disjoint wells the one containing ``bracket_hint`` is used,
    otherwise the one whose potential minimum is lowest (ties go to the
    leftmost).  Raises NoPeriodicOrbit if no bounded well lies below E and
    DegenerateOrbit if a turning point is nearly a double root.
    """
    a, E, c = float(a), float(E), float(c)
    V = lambda u: effective_potential(nl, a, c, u)
    g = lambda u: E - V(u)
    dg = lambda u: -_dV(nl, a, c, u)
    center, w = _initial_window(a, E, c, bracket_hint)
    for _ in range(max_expand):
        lo, hi = center - w, center + w
        cps = _critical_points(nl, a, c, lo, hi)
        minima = [u for u, k in cps if k == "min" and V(u) < E]
        if not minima:
            w *= 4.0
            continue
        if bracket_hint is None:
            minima.sort(key=lambda u: (V(u), u))
        else:
            minima.sort(key=lambda u: abs(u - bracket_hint))
        leaked = False
        for umin in minima:
            right = _walk(nl, a, E, c, umin, cps, lo, hi, +1)
            left = _walk(nl, a, E, c, umin, cps, lo, hi, -1)
            if right is None or left is None:
                leaked = True
                continue
            um = _hybrid_root(g, dg, left[0], left[1], g(left[0]), g(left[1]))
            up = _hybrid_root(g, dg, right[0], right[1], g(right[0]), g(right[1]))
            if bracket_hint is not None and not (um <= bracket_hint <= up):
                continue
            margin_m = abs(_dV(nl, a, c, um)) * (up - um)
            margin_p = abs(_dV(nl, a, c, up)) * (up - um)
            if not (up > um) or min(margin_m, margin_p) <= simplicity:
                raise DegenerateOrbit(
                    f"turning points u-={um!r}, u+={up!r} are not simple "
                    f"(|V'|*width = {min(margin_m, margin_p):.3g})"
                )
            return um, up
        if not leaked:
            break
        w *= 4.0
    raise NoPeriodicOrbit(f"no bounded well of V below E={E!r} for a={a!r}, c={c!r}")


# --- quadrature -------------------------------------------------------------


@lru_cache(maxsize=8)
def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def _h_factor(nl, a, E, c, um, up, theta):
    """h = (E - V)/((u-u-)(u+-u)) at u = u- + w sin^2 theta.

    E - V is factored exactly about the nearer turning point with the divided
    difference of F (using V(u-) = V(u+) = E), so there is no cancellation as
    u approaches either endpoint.
    """
    w = up - um
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    u = um + w * s2
    left = s2 <= 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        # E - V(u) = -(u - u-) * (F[u, u-] - a - (c/2)(u + u-))
        hl = -(nl.F_divided(u, um) - a - 0.5 * c * (u + um)) / (w * c2)
        # E - V(u) = (u+ - u) * (F[u, u+] - a - (c/2)(u + u+))
        hr = (nl.F_divided(u, up) - a - 0.5 * c * (u + up)) / (w * s2)
    return u, np.where(left, hl, hr)


def _panel_rule(panels, order):
    x, wts = _gl(order)
    p = np.asarray(panels)
    left, right = p[:-1, None], p[1:, None]
    half = 0.5 * (right - left)
    th = (left + right) / 2 + half * x[None, :]
    return th, half * wts[None, :]


def _eval_panels(nl, a, E, c, um, up, integrands, panels, order):
    th, wt = _panel_rule(panels, order)
    u, h = _h_factor(nl, a, E, c, um, up, th.ravel())
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise QuadratureFailure(
            f"smooth factor h is nonpositive or non-finite inside the well [{um!r}, {up!r}]"
        )
    g = np.atleast_2d(integrands(u))  # (k, npts)
    vals = g * (2.0 / np.sqrt(h))[None, :]
    return (vals.reshape(g.shape[0], *th.shape) * wt[None]).sum(axis=2)  # (k, npanels)


def well_integrals(
    nl: Nonlinearity,
    a: float,
    E: float,
    c: float,
    um: float,
    up: float,
    integrands,
    tol: float = DEFAULT_QUAD_TOL,
    order: int = 20,
    panels=None,
    max_panels: int = 4096,
):
    """Integrals int_{u-}^{u+} g_k(u) du / sqrt(E - V(u)) for each row g_k of
    ``integrands(u)``.

    Panels in theta are bisected until each agrees with its two halves to
    ``tol`` (absolute + relative).  Passing ``panels`` skips adaptation and
    uses that partition as is.  Returns ``(values, panels)``.
    """
    if panels is not None and len(panels) >= 2:
        vals = _eval_panels(nl, a, E, c, um, up, integrands, np.asarray(panels), order)
        return vals.sum(axis=1), tuple(panels)
    work = list(np.linspace(0.0, np.pi / 2, 5))
    while True:
        p = np.asarray(work)
        coarse = _eval_panels(nl, a, E, c, um, up, integrands, p, order)
        mids = 0.5 * (p[:-1] + p[1:])
        fine_p = np.empty(2 * len(p) - 1)
        fine_p[0::2], fine_p[1::2] = p, mids
        fine = _eval_panels(nl, a, E, c, um, up, integrands, fine_p, order)
        fine_pairs = fine[:, 0::2] + fine[:, 1::2]
        total = np.abs(fine_pairs.sum(axis=1))
        frac = np.diff(p) / (np.pi / 2)
        err = np.abs(fine_pairs - coarse)
        bad = np.any(err > tol * (1.0 + total)[:, None] * frac[None, :], axis=0)
        if not np.any(bad):
            return fine_pairs.sum(axis=1), tuple(p)
        if len(p) > max_panels:
            raise QuadratureFailure("adaptive panel bisection did not converge")
        new = [p[0]]
        for i in range(len(p) - 1):
            if bad[i]:
                new.append(mids[i])
            new.append(p[i + 1])
        work = new


def period(nl: Nonlinearity, params: WaveParams, tol: float = DEFAULT_QUAD_TOL) -> float:
    vals, _ = well_integrals(
        nl, params.a, params.E, params.c, params.uminus, params.uplus,
        lambda u: np.ones_like(u), tol=tol, panels=params.panels or None,
    )
    return float(SQRT2 * vals[0])


def make_wave(
    nl: Nonlinearity,
    a: float,
    E: float,
    c: float,
    bracket_hint: float | None = None,
    tol: float = DEFAULT_QUAD_TOL,
    simplicity: float = DEFAULT_SIMPLICITY,
    panels=None,
) -> WaveParams:
    """Locate the turning points and the period for (a, E, c)."""
    um, up = find_turning_points(nl, a, E, c, bracket_hint, simplicity=simplicity)
    try:
        vals, used = well_integrals(
            nl, a, E, c, um, up, lambda u: np.ones_like(u), tol=tol, panels=panels
        )
    except QuadratureFailure as exc:
        # the logarithmic blow-up next to a separatrix defeats the quadrature
        # before the simplicity test trips; report it as what it is
        margin = min(abs(_dV(nl, a, c, um)), abs(_dV(nl, a, c, up))) * (up - um)
        if margin <= NEAR_DEGENERATE:
            raise DegenerateOrbit(f"orbit too close to a separatrix (|V'|*width = {margin:.3g})") from exc
        raise
    T = float(SQRT2 * vals[0])
    if not (np.isfinite(T) and T > 0):
        raise QuadratureFailure(f"bad period {T!r}")
    return WaveParams(float(a), float(E), float(c), float(um), float(up), T, tuple(used))


# --- profile ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """One period of the profile, u(0) = u-, u_x(0) = 0.

    ``xs``/``us``/``uxs`` are the n public samples (x = kT/n, k < n).  The full
    step grid and the RK stage states are kept so that the Evans integrator can
    reuse them without re-solving the profile ODE.
    """

    params: WaveParams
    xs: np.ndarray
    us: np.ndarray
    uxs: np.ndarray
    interp_order: int
    x_steps: np.ndarray = field(repr=False)
    y_steps: np.ndarray = field(repr=False)  # (nsteps+1, 2)
    y_stages: np.ndarray = field(repr=False)  # (nsteps, N_STAGES, 2)
    energy_residual: float = 0.0

    @property
    def nsteps(self) -> int:
        return len(self.x_steps) - 1

    def evaluate(self, nl: Nonlinearity, x):
        """(u, u_x) at arbitrary x in [0, T] by quintic Hermite interpolation on
        the step grid (u'' taken from the ODE)."""
        p = self.params
        x = np.asarray(x, dtype=float)
        hstep = p.T / self.nsteps
        k = np.clip(np.floor(x / hstep).astype(int), 0, self.nsteps - 1)
        t = (x - self.x_steps[k]) / hstep
        u0, v0 = self.y_steps[k, 0], self.y_steps[k, 1]
        u1, v1 = self.y_steps[k + 1, 0], self.y_steps[k + 1, 1]
        acc = lambda u: p.a + p.c * u - nl.f(u)
        a0, a1 = acc(u0), acc(u1)
        j0, j1 = (p.c - nl.df(u0)) * v0, (p.c - nl.df(u1)) * v1
        return _hermite5(t, hstep, u0, v0, a0, u1, v1, a1), _hermite5(t, hstep, v0, a0, j0, v1, a1, j1)


def _hermite5(t, h, f0, d0, s0, f1, d1, s1):
    """Quintic Hermite interpolant from value, first and second derivative."""
    t2, t3 = t * t, t * t * t
    t4, t5 = t3 * t, t3 * t2
    h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h10 = t - 6 * t3 + 8 * t4 - 3 * t5
    h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
    h01 = 10 * t3 - 15 * t4 + 6 * t5
    h11 = -4 * t3 + 7 * t4 - 3 * t5
    h21 = 0.5 * (t3 - 2 * t4 + t5)
    return (
        h00 * f0 + h10 * h * d0 + h20 * h * h * s0
        + h01 * f1 + h11 * h * d1 + h21 * h * h * s1
    )


def sample_profile(
    nl: Nonlinearity, params: WaveParams, n: int = 64, steps_per_sample: int = 32,
    residual_tol: float = 1e-9,
) -> WaveProfile:
    """Integrate u'' = a + c u - f(u) from (u-, 0) over one period with the
    fixed-step order-8 scheme, step T/(steps_per_sample * n)."""
    if n < 64:
        raise ValueError("sample_profile needs n >= 64")
    a, E, c, T = params.a, params.E, params.c, params.T
    nsteps = steps_per_sample * n

    def rhs(x, y):
        u, ux = y
        return np.array([ux, a + c * u - nl.f(u)])

    try:
        ys, stages = rk.integrate(rhs, np.array([params.uminus, 0.0]), 0.0, T, nsteps, keep_stages=True)
    except FloatingPointError as exc:
        raise IntegrationFailure(str(exc)) from exc
    xsteps = np.linspace(0.0, T, nsteps + 1)
    u, ux = ys[:, 0], ys[:, 1]
    scale = max(1.0, abs(E), float(np.max(np.abs(nl.F(u)))), float(np.max(np.abs(a * u))),
                float(np.max(np.abs(0.5 * c * u * u))))
    resid = float(np.max(np.abs(0.5 * ux**2 - (E - effective_potential(nl, a, c, u)))))
    if resid > residual_tol * scale:
        raise IntegrationFailure(f"energy residual {resid:.3g} exceeds tolerance")
    if (abs(u[-1] - u[0]) > residual_tol * max(1.0, params.width)
            or abs(ux[-1]) > residual_tol * max(1.0, float(np.max(np.abs(ux))))):
        raise IntegrationFailure(
            f"profile does not close after one period: u(T)-u(0)={u[-1]-u[0]:.3g}, u_x(T)={ux[-1]:.3g}"
        )
    idx = np.arange(n) * steps_per_sample
    return WaveProfile(
        params=params,
        xs=xsteps[idx],
        us=u[idx].copy(),
        uxs=ux[idx].copy(),
        interp_order=5,
        x_steps=xsteps,
        y_steps=ys,
        y_stages=stages,
        energy_residual=resid / scale,
    )
