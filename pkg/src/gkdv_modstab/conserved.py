"""Period, mass, momentum and Hamiltonian of a periodic wave together with
their gradients in (a, E, c).  The Jacobian brackets are built from those
gradients.

    M = int_0^T u dx,   P = int_0^T u^2 dx,   H = int_0^T (u_x^2/2 - F(u)) dx

Each is a complete integral over the well, evaluated with the same regularised
quadrature as the period.  Gradients come from central differences with
Richardson extrapolation on the (already smooth) regularised integrals.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GradientUnresolved
from .nonlinearity import Nonlinearity
from .wave import (
    DEFAULT_QUAD_TOL,
    SQRT2,
    WaveParams,
    _dV,
    _h_factor,
    _panel_rule,
    make_wave,
    well_integrals,
)

__all__ = [
    "ConservedSet",
    "Brackets",
    "QUANTITIES",
    "PARAMETERS",
    "conserved_quantities",
    "gradients",
    "bracket",
    "brackets",
    "period_gradient_integral",
]

QUANTITIES = ("T", "M", "P", "H")
PARAMETERS = ("a", "E", "c")


@dataclass(frozen=True)
class ConservedSet:
    T: float
    M: float
    P: float
    H: float
    grad: np.ndarray  # (4, 3): rows T, M, P, H; columns d/da, d/dE, d/dc

    def d(self, quantity: str, param: str) -> float:
        return float(self.grad[QUANTITIES.index(quantity), PARAMETERS.index(param)])

    def action_hessian(self) -> np.ndarray:
        """Second derivatives of the action K, whose first derivatives are
        (K_a, K_E, K_c) = (M, T, P/2); rows and columns in (a, E, c) order.
        Symmetric up to differencing error."""
        g = self.grad
        return np.vstack([g[1], g[0], 0.5 * g[2]])

    def _hessian_scale(self) -> np.ndarray:
        # sqrt(|K_ii K_jj|): size of entry (i, j) even when it vanishes by symmetry
        diag = np.sqrt(np.abs(np.diag(self.action_hessian())))
        return np.outer(diag, diag)

    def grad_relation_residual(self, a: float, E: float, c: float) -> np.ndarray:
        """E grad T + a grad M + (c/2) grad P + grad H, componentwise, divided
        by the size of the terms in each column (or their natural size from
        the action Hessian when they all vanish by symmetry)."""
        g = self.grad
        terms = np.vstack([E * g[0], a * g[1], 0.5 * c * g[2], g[3]])
        S = self._hessian_scale()
        natural = abs(a) * S[0] + abs(E) * S[1] + abs(c) * S[2]
        scale = np.maximum(np.max(np.abs(terms), axis=0), natural)
        return terms.sum(axis=0) / scale

    def identity_residuals(self) -> dict[str, float]:
        """Relative residuals of M_a = P_E = 2 T_c and of the symmetry of the
        action Hessian, T_a = M_E and P_a = 2 M_c."""
        d = self.d
        S = self._hessian_scale()
        out = {}
        trio = (d("M", "a"), d("P", "E"), 2 * d("T", "c"))
        s = max(map(abs, trio))
        out["P_E+2T_c-2M_a"] = abs(trio[1] + trio[2] - 2 * trio[0]) / s
        out["M_a-P_E"] = abs(trio[0] - trio[1]) / s
        out["M_a-2T_c"] = abs(trio[0] - trio[2]) / s
        pair = (d("T", "a"), d("M", "E"))
        out["T_a-M_E"] = abs(pair[0] - pair[1]) / max(*map(abs, pair), S[0, 1])
        pair = (0.5 * d("P", "a"), d("M", "c"))
        out["P_a-2M_c"] = abs(pair[0] - pair[1]) / max(*map(abs, pair), S[0, 2])
        return out


@dataclass(frozen=True)
class Brackets:
    TMP_aEc: float
    TP_Ec: float
    MP_aE: float


def _moments(nl, params: WaveParams, tol=DEFAULT_QUAD_TOL, panels=None):
    a, E, c = params.a, params.E, params.c

    def integrands(u):
        return np.vstack([
            np.ones_like(u),
            u,
            u * u,
            E + a * u + 0.5 * c * u * u - 2.0 * nl.F(u),
        ])

    vals, used = well_integrals(
        nl, a, E, c, params.uminus, params.uplus, integrands, tol=tol,
        panels=panels if panels is not None else (params.panels or None),
    )
    return SQRT2 * vals, used


def conserved_quantities(nl: Nonlinearity, params: WaveParams, tol: float = DEFAULT_QUAD_TOL):
    """(M, P, H) over one period."""
    (T, M, P, H), _ = _moments(nl, params, tol)
    return float(M), float(P), float(H)


def _evaluator(nl, center: WaveParams, tol, simplicity):
    hint = 0.5 * (center.uminus + center.uplus)
    panels = center.panels

    def q(a, E, c):
        w = make_wave(nl, a, E, c, bracket_hint=hint, tol=tol, simplicity=simplicity, panels=panels)
        vals, _ = _moments(nl, w, tol, panels=panels)
        return vals

    return q


def gradients(
    nl: Nonlinearity,
    params: WaveParams,
    rtol: float = 1e-7,
    h0: float = 1e-4,
    hmin: float = 1e-10,
    tol: float = DEFAULT_QUAD_TOL,
    simplicity: float = 1e-12,
) -> ConservedSet:
    """T, M, P, H and their 4x3 gradient.

    For each parameter p the step starts at h0*max(1,|p|) and is halved until
    two successive Richardson values agree to ``rtol`` relative to the
    stencil-wide magnitude of each quantity.
    """
    center_vals, panels = _moments(nl, params, tol)
    if not params.panels:
        params = replace(params, panels=panels)
    q = _evaluator(nl, params, tol, simplicity)
    base = np.array(params.aEc)
    # natural sizes of the integrals; keeps quantities that vanish by symmetry
    # (M for odd f with a = 0) from being judged against roundoff alone
    U = max(abs(params.uminus), abs(params.uplus))
    T0 = abs(center_vals[0])
    floor = np.array([T0, T0 * U, T0 * U * U, abs(center_vals[3])])
    grad = np.empty((4, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        h = h0 * max(1.0, abs(base[j]))
        cache = {}

        def D(step):
            if step not in cache:
                plus, minus = q(*(base + step * e)), q(*(base - step * e))
                cache[step] = ((plus - minus) / (2 * step), np.maximum(np.abs(plus), np.abs(minus)))
            return cache[step]

        def richardson(step):
            d1, m1 = D(step)
            d2, m2 = D(step / 2)
            return (4 * d2 - d1) / 3, np.maximum(m1, m2)

        prev, mag = richardson(h)
        while True:
            h /= 2
            if h < hmin:
                raise GradientUnresolved(
                    f"d/d{PARAMETERS[j]} did not settle before step {h:.3g}"
                )
            cur, mag2 = richardson(h)
            mag = np.maximum(np.maximum(mag, mag2), np.maximum(np.abs(center_vals), floor))
            scale = np.maximum(np.abs(cur), mag / max(1.0, abs(base[j])))
            if np.all(np.abs(cur - prev) <= rtol * scale):
                break
            prev = cur
        grad[:, j] = cur
    T, M, P, H = center_vals
    return ConservedSet(float(T), float(M), float(P), float(H), grad)


def bracket(cs: ConservedSet, quantities, params) -> float:
    """Jacobian determinant {q1, q2[, q3]}_{p1, p2[, p3]} from the gradient.

    Argument order matters: swapping two quantities flips the sign.
    """
    if len(quantities) != len(params):
        raise ValueError("bracket needs as many quantities as parameters")
    rows = [QUANTITIES.index(x) for x in quantities]
    cols = [PARAMETERS.index(x) for x in params]
    return float(np.linalg.det(cs.grad[np.ix_(rows, cols)]))


def brackets(cs: ConservedSet) -> Brackets:
    return Brackets(
        TMP_aEc=bracket(cs, "TMP", "aEc"),
        TP_Ec=bracket(cs, "TP", "Ec"),
        MP_aE=bracket(cs, "MP", "aE"),
    )


def period_gradient_integral(nl: Nonlinearity, params: WaveParams, order: int = 40) -> np.ndarray:
    """(T_a, T_E, T_c) by differentiating the regularised period integral.

    With u = u- + w sin^2(theta), T = 2 sqrt(2) int dtheta / sqrt(h), and the
    turning points move with the parameters as du+-/dp = d_p(E - V)/V'(u+-).
    Used only to cross-check the finite-difference route.
    """
    a, E, c, um, up = params.a, params.E, params.c, params.uminus, params.uplus
    w = up - um
    panels = params.panels or tuple(np.linspace(0, np.pi / 2, 9))
    th, wt = _panel_rule(np.asarray(panels), order)
    th, wt = th.ravel(), wt.ravel()
    u, h = _h_factor(nl, a, E, c, um, up, th)
    s2, c2 = np.sin(th) ** 2, np.cos(th) ** 2
    dn = w * w * s2 * c2
    vpm, vpp = _dV(nl, a, c, um), _dV(nl, a, c, up)
    # d_p (E - V) at fixed u for p = a, E, c
    dgs = (lambda x: x, lambda x: np.ones_like(x), lambda x: 0.5 * x * x)
    out = np.empty(3)
    for k, dg in enumerate(dgs):
        dum = dg(np.asarray(um)) / vpm
        dup = dg(np.asarray(up)) / vpp
        du = dum * c2 + dup * s2
        # total derivative of the numerator E - V(u(theta))
        dnum = dg(u) - _dV(nl, a, c, u) * du
        ddn = 2 * w * (dup - dum) * s2 * c2
        dh = (dnum - h * ddn) / dn
        out[k] = 2 * SQRT2 * np.sum(wt * (-0.5) * h ** -1.5 * dh)
    return out
