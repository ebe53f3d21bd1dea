"""Low-frequency (modulational) stability from the Jacobian brackets.

Two routes are provided and cross-checked:

* the dispersion cubic  P(y) = -y^3 + b1 y + b0,
  b1 = ({T,P}_{E,c} + 2{M,P}_{a,E}) / 2,  b0 = -{T,M,P}_{a,E,c} / 2,
  whose discriminant sign decides stability near the spectral origin;
* the linearised Whitham system  d_t U(w) - d_x F(w) = 0  with
  U = (M w, P w, w), F = (a - s M w, -s P w - 2E, -s w), w = 1/T, linearised in
  (a, E, s) about (a0, E0, 0), whose hyperbolicity is the same condition.

Discriminant convention: the cubic is normalised to the monic depressed form
y^3 + p y + q (p = -b1, q = -b0) and disc = -4 p^3 - 27 q^2 = 4 b1^3 - 27 b0^2,
positive iff three distinct real roots.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .conserved import Brackets, ConservedSet, brackets, gradients
from .errors import DegenerateIndex, SingularC
from .nonlinearity import Nonlinearity
from .wave import WaveParams, make_wave, well_integrals

__all__ = [
    "Verdict",
    "DispersionCubic",
    "WhithamLinearization",
    "CoperiodicIndex",
    "EquivalenceReport",
    "dispersion_cubic",
    "cubic_from_coefficients",
    "classify_modulational",
    "coperiodic_index",
    "whitham_linearization",
    "whitham_fields",
    "whitham_jacobians_direct",
    "s_derivative_residual",
    "check_equivalence",
    "match_multisets",
]


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DispersionCubic:
    b3: float
    b1: float
    b0: float
    disc: float
    roots: np.ndarray  # 3 complex, real roots first in ascending order

    def __call__(self, y):
        return self.b3 * y**3 + self.b1 * y + self.b0

    @property
    def scale(self) -> float:
        return max(abs(self.b1) ** 3, self.b0**2, 1.0)


def _depressed_roots(p: float, q: float) -> np.ndarray:
    """Roots of y^3 + p y + q by Cardano / Viete, with a companion-matrix
    fallback near a repeated root."""
    disc = -4 * p**3 - 27 * q**2
    scale = max(abs(p) ** 3, q * q, 1e-300)
    if abs(disc) <= 1e-10 * scale:
        comp = np.array([[0.0, 0.0, -q], [1.0, 0.0, -p], [0.0, 1.0, 0.0]])
        roots = np.linalg.eigvals(comp).astype(complex)
    elif disc > 0:
        r = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * r), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        roots = np.array([r * np.cos(phi - 2 * np.pi * k / 3) for k in range(3)], dtype=complex)
    else:
        sq = np.sqrt(q * q / 4 + p**3 / 27)
        A = -np.sign(q if q != 0 else 1.0) * np.cbrt(abs(q) / 2 + sq)
        Bc = -p / (3 * A) if A != 0 else 0.0
        re = -(A + Bc) / 2
        im = np.sqrt(3.0) / 2 * (A - Bc)
        roots = np.array([A + Bc, re + 1j * im, re - 1j * im], dtype=complex)
    # Newton polish on the monic cubic
    for _ in range(2):
        f = roots**3 + p * roots + q
        d = 3 * roots**2 + p
        ok = np.abs(d) > 1e-300
        roots = np.where(ok, roots - f / np.where(ok, d, 1.0), roots)
    return roots


def _order_roots(roots: np.ndarray) -> np.ndarray:
    return np.array(sorted(roots, key=lambda z: (abs(z.imag) > 1e-12 * max(1.0, abs(z)), z.real, z.imag)))


def cubic_from_coefficients(b1: float, b0: float) -> DispersionCubic:
    """Build P(y) = -y^3 + b1 y + b0 directly from its coefficients."""
    b1, b0 = float(b1), float(b0)
    disc = 4 * b1**3 - 27 * b0**2
    roots = _order_roots(_depressed_roots(-b1, -b0))
    return DispersionCubic(-1.0, b1, b0, disc, roots)


def dispersion_cubic(br: Brackets) -> DispersionCubic:
    return cubic_from_coefficients(0.5 * (br.TP_Ec + 2 * br.MP_aE), -0.5 * br.TMP_aEc)


def classify_modulational(dc: DispersionCubic, tol: float = 1e-8) -> Verdict:
    """Stable / Unstable by the sign of the discriminant; Indeterminate inside
    the band |disc| <= tol * max(|b1|^3, b0^2, 1)."""
    band = tol * dc.scale
    if dc.disc > band:
        return Verdict.STABLE
    if dc.disc < -band:
        return Verdict.UNSTABLE
    return Verdict.INDETERMINATE


@dataclass(frozen=True)
class CoperiodicIndex:
    sign: int
    T_E: float | None
    report: str


def coperiodic_index(br: Brackets, T_E: float | None = None, threshold: float = 1e-10) -> CoperiodicIndex:
    """Sign of {T,M,P}_{a,E,c}: negative means co-periodic instability."""
    ref = threshold * max(1.0, abs(br.TP_Ec) ** 1.5, abs(br.MP_aE) ** 1.5)
    if not np.isfinite(br.TMP_aEc) or abs(br.TMP_aEc) <= ref:
        raise DegenerateIndex(
            f"|{{T,M,P}}| = {abs(br.TMP_aEc):.3g} is below {ref:.3g}; the expansion is silent here"
        )
    if br.TMP_aEc < 0:
        return CoperiodicIndex(-1, T_E, "unstable to co-periodic perturbations")
    if T_E is None:
        msg = "stable to co-periodic perturbations provided T_E > 0 (T_E not supplied)"
    elif T_E > 0:
        msg = f"stable to co-periodic perturbations (T_E = {T_E:.6g} > 0)"
    else:
        msg = f"no conclusion for co-periodic perturbations (T_E = {T_E:.6g} <= 0)"
    return CoperiodicIndex(1, T_E, msg)


# --- Whitham system -------------------------------------------------------------


@dataclass(frozen=True)
class WhithamLinearization:
    """Linearised Whitham system at (a0, E0, s=0).

    ``B`` and ``C`` are the Jacobians of U and F with respect to (a, E, s)
    after the common row reduction rows_1,2 -= (M, P) * row_3, which leaves
    det(mu B - lam C), C^{-1} B and B^{-1} C unchanged and makes C diagonal,
    C = diag(1, -2, -w).  ``A = B^{-1} C`` is the characteristic matrix: a
    real eigenvalue eta gives a spectral branch mu = i eta kappa / T.
    """

    T: float
    B: np.ndarray
    C: np.ndarray
    A: np.ndarray
    eigs: np.ndarray
    # coefficients of  det(mu B - lam C) = sum_k t[k] mu^(3-k) lam^k,  lam = i kappa / T
    tilde_coeffs: np.ndarray

    @property
    def hyperbolic(self) -> bool:
        return bool(np.all(np.abs(self.eigs.imag) <= 1e-9 * np.max(np.abs(self.eigs))))

    def tilde_P(self, mu, kappa):
        lam = 1j * np.asarray(kappa) / self.T
        mu = np.asarray(mu)
        t = self.tilde_coeffs
        return t[0] * mu**3 + t[1] * mu**2 * lam + t[2] * mu * lam**2 + t[3] * lam**3


def _reduced_matrices(cs: ConservedSet):
    w = 1.0 / cs.T
    d = cs.d
    B = w * np.array([
        [d("M", "a"), d("M", "E"), -d("M", "c")],
        [d("P", "a"), d("P", "E"), -d("P", "c")],
        [-w * d("T", "a"), -w * d("T", "E"), w * d("T", "c")],
    ])
    C = np.diag([1.0, -2.0, -w])
    return B, C


def _pencil_coeffs(B, C):
    """Coefficients of det(mu B - lam C) in mu^3, mu^2 lam, mu lam^2, lam^3."""
    # det(B - t C) is a cubic in t; sample it at four points and solve
    ts = np.array([-1.0, 0.0, 1.0, 2.0])
    vals = np.array([np.linalg.det(B - t * C) for t in ts])
    V = np.vander(ts, 4, increasing=True)
    c = np.linalg.solve(V, vals)  # c0 + c1 t + c2 t^2 + c3 t^3
    return c


def whitham_linearization(nl: Nonlinearity, params: WaveParams, cs: ConservedSet | None = None) -> WhithamLinearization:
    """Assemble B, C and the characteristic matrix from the gradient engine,
    with d/ds taken as -d/dc."""
    if cs is None:
        cs = gradients(nl, params)
    B, C = _reduced_matrices(cs)
    if abs(np.linalg.det(C)) < 1e-14 * max(1.0, np.max(np.abs(C))) ** 3:
        raise SingularC("flux Jacobian C is singular")
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularC(f"B is numerically singular (cond {cond:.3g}); the Whitham system is not evolutionary")
    A = np.linalg.solve(B, C)
    eigs = np.linalg.eigvals(A)
    return WhithamLinearization(cs.T, B, C, A, eigs, _pencil_coeffs(B, C))


def whitham_fields(nl: Nonlinearity, a: float, E: float, s: float, c0: float, bracket_hint=None, panels=None):
    """Conserved densities U = (M w, P w, w) and fluxes F = (a - s M w,
    -s P w - 2E, -s w) of the Whitham system at (a, E, s); the local wave has
    speed c0 - s."""
    wv = make_wave(nl, a, E, c0 - s, bracket_hint=bracket_hint, panels=panels, simplicity=1e-12)
    vals, _ = well_integrals(
        nl, wv.a, wv.E, wv.c, wv.uminus, wv.uplus,
        lambda u: np.vstack([np.ones_like(u), u, u * u]), panels=panels or wv.panels,
    )
    T, M, P = np.sqrt(2.0) * vals
    om = 1.0 / T
    U = np.array([M * om, P * om, om])
    F = np.array([a - s * M * om, -s * P * om - 2 * E, -s * om])
    return U, F


def whitham_jacobians_direct(nl: Nonlinearity, params: WaveParams, h: float = 1e-3):
    """Raw (unreduced) Jacobians dU/d(a,E,s), dF/d(a,E,s) at s = 0 by
    differencing the Whitham fields themselves in s (four-point stencil).

    Independent of the gradient engine; used only for verification.
    """
    hint = 0.5 * (params.uminus + params.uplus)
    panels = params.panels or None
    base = np.array([params.a, params.E, 0.0])

    def fields(x):
        return whitham_fields(nl, x[0], x[1], x[2], params.c, hint, panels)

    JU = np.empty((3, 3))
    JF = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h * (max(1.0, abs(base[j])) if j < 2 else max(1.0, abs(params.c)))
        hj = e[j]
        fp1, fm1 = fields(base + e), fields(base - e)
        fp2, fm2 = fields(base + e / 2), fields(base - e / 2)
        for k, J in enumerate((JU, JF)):
            d1 = (fp1[k] - fm1[k]) / (2 * hj)
            d2 = (fp2[k] - fm2[k]) / hj
            J[:, j] = (4 * d2 - d1) / 3
    return JU, JF


def _halving_derivative(fun, h0: float, rtol: float = 1e-9, hmin: float = 1e-9) -> np.ndarray:
    """Central-difference Richardson derivative of a vector function at 0;
    the step is halved until two successive estimates agree to ``rtol``."""
    cache = {}

    def central(h):
        if h not in cache:
            cache[h] = (fun(h) - fun(-h)) / (2 * h)
        return cache[h]

    def rich(h):
        return (4 * central(h / 2) - central(h)) / 3

    h = h0
    prev = rich(h)
    while h / 2 >= hmin:
        h /= 2
        cur = rich(h)
        if np.all(np.abs(cur - prev) <= rtol * np.max(np.abs(cur))):
            return cur
        prev = cur
    return prev


def s_derivative_residual(nl: Nonlinearity, params: WaveParams, cs: ConservedSet, h: float = 1e-3) -> float:
    """max relative gap between d_s <M, P, w> (differenced along the wave
    speed c0 - s, starting from step ``h``) and -d_c <M, P, w> from the
    gradient engine."""
    hint = 0.5 * (params.uminus + params.uplus)
    panels = params.panels or None

    def mpw(s):
        wv = make_wave(nl, params.a, params.E, params.c - s, bracket_hint=hint, panels=panels, simplicity=1e-12)
        vals, _ = well_integrals(
            nl, wv.a, wv.E, wv.c, wv.uminus, wv.uplus,
            lambda u: np.vstack([np.ones_like(u), u, u * u]),
            panels=panels or wv.panels,
        )
        T, M, P = np.sqrt(2.0) * vals
        return np.array([M, P, 1.0 / T])

    ds = _halving_derivative(mpw, h * max(1.0, abs(params.c)))
    dc = np.array([cs.d("M", "c"), cs.d("P", "c"), -cs.d("T", "c") / cs.T**2])
    # components that vanish by symmetry are judged against the largest one
    scale = np.maximum(np.maximum(np.abs(ds), np.abs(dc)), 1e-3 * np.max(np.abs(dc)))
    return float(np.max(np.abs(ds + dc) / scale))


def match_multisets(x, y) -> float:
    """Smallest max relative mismatch over pairings of two length-3 multisets."""
    x, y = np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)
    best = np.inf
    for perm in itertools.permutations(range(len(y))):
        yy = y[list(perm)]
        rel = np.abs(x - yy) / np.maximum(np.abs(yy), 1e-300)
        best = min(best, float(np.max(rel)))
    return best


@dataclass(frozen=True)
class EquivalenceReport:
    max_rel_deviation: float
    identity_residual: float  # |P_E + 2T_c - 2M_a| / scale
    eig_root_mismatch: float  # eig(A) against {-T / y_j}
    gamma0: float  # D(mu,kappa) / tilde_P(-mu,kappa) implied by the two cubics
    n_points: int


def default_equivalence_grid(n: int = 10):
    mus = np.linspace(0.1, 1.0, n)
    kappas = np.linspace(-1.0, 1.0, n)
    return mus, kappas


def check_equivalence(
    nl: Nonlinearity,
    params: WaveParams,
    cs: ConservedSet | None = None,
    wl: WhithamLinearization | None = None,
    mus=None,
    kappas=None,
) -> EquivalenceReport:
    """Compare det(mu B - (i kappa / T) C) with -(2 mu^3 / T^4) P(-i kappa / mu)
    on a (mu, kappa) grid.

    Deviation at each point is normalised by (2/T^4)(|mu|^3 |b0| +
    |mu|^2 |kappa| |b1| + |kappa|^3), the size of the individual terms, so
    points near a root of the cubic are not penalised.
    """
    if cs is None:
        cs = gradients(nl, params)
    if wl is None:
        wl = whitham_linearization(nl, params, cs)
    dc = dispersion_cubic(brackets(cs))
    T = cs.T
    if mus is None or kappas is None:
        mus, kappas = default_equivalence_grid()
    MU, K = np.meshgrid(np.asarray(mus, dtype=complex), np.asarray(kappas, dtype=float), indexing="ij")
    lhs = np.array([[np.linalg.det(m * wl.B - (1j * k / T) * wl.C) for k in row_k] for m, row_k in zip(MU[:, 0], K)])
    rhs = -(2 * MU**3 / T**4) * dc(-1j * K / MU)
    norm = (2 / T**4) * (np.abs(MU) ** 3 * abs(dc.b0) + np.abs(MU) ** 2 * np.abs(K) * abs(dc.b1) + np.abs(K) ** 3)
    dev = np.abs(lhs - rhs) / np.maximum(norm, 1e-300)
    trio = (cs.d("M", "a"), cs.d("P", "E"), cs.d("T", "c"))
    ident = abs(trio[1] + 2 * trio[2] - 2 * trio[0]) / max(abs(trio[0]), abs(trio[1]), abs(2 * trio[2]))
    ys = dc.roots
    mismatch = match_multisets(wl.eigs, -T / ys)
    return EquivalenceReport(float(np.max(dev)), float(ident), mismatch, T**4 / 2, int(dev.size))


def perturbed(cs: ConservedSet, quantity: str, param: str, delta: float) -> ConservedSet:
    """Copy of ``cs`` with one gradient entry shifted by ``delta`` (relative);
    a negative control for the identity checks."""
    from .conserved import PARAMETERS, QUANTITIES

    g = cs.grad.copy()
    i, j = QUANTITIES.index(quantity), PARAMETERS.index(param)
    g[i, j] *= 1.0 + delta
    return replace(cs, grad=g)
