"""Periodic Evans function of the linearisation about a periodic wave.

The spectral problem for the linearised operator is written as the first-order
system Y' = H(x, mu) Y with Y = (v, v', v'') and

    H = [[0, 1, 0], [0, 0, 1], [-f''(u) u_x - mu, c - f'(u), 0]].

The monodromy matrix M(mu) is the period map of this system and
D(mu, kappa) = det(M(mu) - e^{i kappa} I).  H is trace-free, so det M = 1.

Integration reuses the order-8 stage states stored by
:func:`gkdv_modstab.wave.sample_profile`: the coefficient matrix is evaluated
at exactly the profile states the profile integrator visited, which is the
same as integrating profile and linear system together.  Because the system is
linear each step is a 3x3 propagator; all propagators are built at once and
multiplied in a fixed pairwise order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rk
from .errors import FitUnstable, IntegrationFailure, ProfileResolutionTooCoarse, RootLost
from .modulation import DispersionCubic, WhithamLinearization
from .nonlinearity import Nonlinearity
from .wave import WaveProfile

__all__ = [
    "Monodromy",
    "EvansExpansion",
    "monodromy",
    "monodromy_matrices",
    "evans_value",
    "evans_values",
    "evans_function",
    "fit_expansion",
    "gamma0",
    "spectrum_near_origin",
    "large_lambda_sign",
]

DET_TOL = 1e-8


@dataclass(frozen=True)
class Monodromy:
    mu: complex
    M: np.ndarray
    det_residual: float


def _stage_coefficients(nl: Nonlinearity, profile: WaveProfile):
    """(-f''(u) u_x, c - f'(u)) at every stored stage state, shape (nsteps, N_STAGES)."""
    if profile.y_stages is None:
        raise ProfileResolutionTooCoarse("profile carries no stage states")
    u = profile.y_stages[..., 0]
    ux = profile.y_stages[..., 1]
    return -nl.d2f(u) * ux, profile.params.c - nl.df(u)


def _pairwise_product(S: np.ndarray) -> np.ndarray:
    """S[..., N-1, :, :] @ ... @ S[..., 0, :, :] by pairwise reduction."""
    while S.shape[-3] > 1:
        n = S.shape[-3]
        odd = n % 2
        head = S[..., : n - odd, :, :]
        prod = head[..., 1::2, :, :] @ head[..., 0::2, :, :]
        if odd:
            prod = np.concatenate([prod, S[..., n - 1 :, :, :]], axis=-3)
        S = prod
    return S[..., 0, :, :]


def monodromy_matrices(nl: Nonlinearity, profile: WaveProfile, mus) -> np.ndarray:
    """Monodromy matrices for an array of spectral parameters, shape (k, 3, 3)."""
    mus = np.atleast_1d(np.asarray(mus, dtype=complex))
    g, q = _stage_coefficients(nl, profile)
    nsteps = profile.nsteps
    h = profile.params.T / nsteps
    k = mus.size
    # stage-wise coefficient matrices, shape (k, nsteps, 3, 3)
    eye = np.eye(3, dtype=complex)
    Ks = []
    for i in range(rk.N_STAGES):
        Yi = np.broadcast_to(eye, (k, nsteps, 3, 3)).copy()
        for j in range(i):
            if rk.A[i, j] != 0.0:
                Yi += (h * rk.A[i, j]) * Ks[j]
        Ki = np.empty_like(Yi)
        Ki[..., 0, :] = Yi[..., 1, :]
        Ki[..., 1, :] = Yi[..., 2, :]
        Ki[..., 2, :] = (
            (g[None, :, i, None] - mus[:, None, None]) * Yi[..., 0, :]
            + q[None, :, i, None] * Yi[..., 1, :]
        )
        Ks.append(Ki)
    S = np.broadcast_to(eye, (k, nsteps, 3, 3)).copy()
    for i in range(rk.N_STAGES):
        if rk.B[i] != 0.0:
            S += (h * rk.B[i]) * Ks[i]
    M = _pairwise_product(S)
    if not np.all(np.isfinite(M)):
        raise IntegrationFailure("non-finite monodromy matrix")
    return M


def _det3(M: np.ndarray) -> np.ndarray:
    return (
        M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
        + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
    )


def monodromy(nl: Nonlinearity, profile: WaveProfile, mu: complex, det_tol: float = DET_TOL) -> Monodromy:
    """Period map at one spectral parameter.

    The determinant residual |det M - 1| doubles as the integration error
    monitor: it is raised as :class:`ProfileResolutionTooCoarse` when above
    ``det_tol``.
    """
    M = monodromy_matrices(nl, profile, [mu])[0]
    res = float(abs(_det3(M) - 1.0))
    if res > det_tol:
        raise ProfileResolutionTooCoarse(f"|det M - 1| = {res:.3g} at mu = {mu}")
    return Monodromy(complex(mu), M, res)


def _char_coeffs(M: np.ndarray):
    """(trace, sum of principal 2x2 minors, det) of a stack of 3x3 matrices."""
    tr = M[..., 0, 0] + M[..., 1, 1] + M[..., 2, 2]
    s2 = (
        M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        + M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
        + M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1]
    )
    return tr, s2, _det3(M)


def evans_values(M: np.ndarray, kappas) -> np.ndarray:
    """det(M - e^{i kappa} I) for a stack of monodromies (k, 3, 3) and an array
    of kappas; result has shape (k, len(kappas))."""
    z = np.exp(1j * np.atleast_1d(np.asarray(kappas, dtype=float)))
    tr, s2, det = _char_coeffs(np.asarray(M))
    tr, s2, det = tr[..., None], s2[..., None], det[..., None]
    return det - s2 * z + tr * z * z - z**3


def evans_value(m: Monodromy, kappa: float) -> complex:
    return complex(evans_values(m.M[None], [kappa])[0, 0])


def evans_function(nl: Nonlinearity, profile: WaveProfile, mus, kappa: float) -> np.ndarray:
    """D(mu, kappa) for an array of mu at fixed kappa."""
    return evans_values(monodromy_matrices(nl, profile, mus), [kappa])[:, 0]


# --- low-frequency expansion ------------------------------------------------------


@dataclass(frozen=True)
class EvansExpansion:
    """Cubic part of D(mu, kappa) = c30 mu^3 + c21 (i kappa) mu^2
    + c12 (i kappa^2) mu + c03 kappa^3 + O(4)."""

    c30: complex
    c21: complex
    c12: complex
    c03: complex
    residual: float
    radius: float
    mu_radius: float
    refit_shift: float

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.c30, self.c21, self.c12, self.c03])

    def spurious_ratio(self) -> float:
        """|c12| relative to the largest fitted cubic coefficient."""
        return float(abs(self.c12) / np.max(np.abs([self.c30, self.c21, self.c03])))


def _fit_points(r: float, rmu: float):
    mus = [0.0]
    for rho in (0.5, 1.0):
        for phi in np.linspace(0.0, 2 * np.pi, 7, endpoint=False) + 0.3:
            mus.append(rmu * rho * np.exp(1j * phi))
    kappas = r * np.linspace(-1.0, 1.0, 9)
    return np.array(mus, dtype=complex), kappas


def _lstsq_cubic(mus, kappas, D, r, rmu, extra_degrees=(4, 5)):
    MU, K = np.meshgrid(mus, kappas, indexing="ij")
    mu, k = MU.ravel() / rmu, K.ravel() / r
    cols = [mu**3, 1j * k * mu**2, 1j * k * k * mu, k**3]
    for deg in extra_degrees:
        cols += [mu ** (deg - j) * k**j for j in range(deg + 1)]
    X = np.stack(cols, axis=1)
    y = D.ravel()
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.linalg.norm(X @ coef - y) / max(np.linalg.norm(y), 1e-300))
    scale = np.array([rmu**3, r * rmu**2, r * r * rmu, r**3])
    return coef[:4] / scale, resid


def _mu_radius(nl, profile, r):
    # balance the mu^3 and kappa^3 terms: |D(r,0)| / r^3 estimates |c30|
    D = evans_function(nl, profile, [r], 0.0)[0]
    c30 = abs(D) / r**3
    return r / max(1.0, c30 ** (1.0 / 3.0))


def fit_expansion(
    nl: Nonlinearity,
    profile: WaveProfile,
    radius: float = 1e-2,
    refit_tol: float = 1e-3,
) -> EvansExpansion:
    """Least-squares fit of the cubic part of D near the origin.

    kappa is sampled on [-r, r] and mu on two circles of radius r_mu/2 and
    r_mu, where r_mu balances the mu^3 and kappa^3 terms.  Quartic and quintic
    monomials are fitted as nuisance terms.  A refit at half the radius must
    move no cubic coefficient by more than ``refit_tol`` relative to the
    largest one, else :class:`FitUnstable`.
    """
    rmu = _mu_radius(nl, profile, radius)
    fits = []
    for r, rm in ((radius, rmu), (radius / 2, rmu / 2)):
        mus, kappas = _fit_points(r, rm)
        D = evans_values(monodromy_matrices(nl, profile, mus), kappas)
        fits.append(_lstsq_cubic(mus, kappas, D, r, rm))
    (coef, resid), (coef2, _) = fits
    big = float(np.max(np.abs(coef)))
    shift = float(np.max(np.abs(coef - coef2)) / big)
    if not np.isfinite(shift) or shift > refit_tol:
        raise FitUnstable(f"half-radius refit moved the cubic coefficients by {shift:.3g} (relative)")
    c30, c21, c12, c03 = (complex(x) for x in coef)
    return EvansExpansion(c30, c21, c12, c03, resid, radius, rmu, shift)


def gamma0(expansion: EvansExpansion, wl: WhithamLinearization) -> tuple[complex, float]:
    """Ratio D(mu, kappa) / tilde_P(-mu, kappa) read off the fitted
    coefficients, and the relative spread of that ratio across the three
    non-vanishing monomials."""
    T = wl.T
    t = wl.tilde_coeffs
    # tilde_P(-mu, kappa) = sum_k t[k] (-mu)^(3-k) (i kappa / T)^k in the basis
    # mu^3, (i kappa) mu^2, (i kappa^2) mu, kappa^3
    pred = np.array([-t[0], t[1] / T, -1j * t[2] / T**2, -1j * t[3] / T**3], dtype=complex)
    fitted = expansion.coefficients
    use = [0, 1, 3]
    ratios = fitted[use] / pred[use]
    g = complex(np.mean(ratios))
    spread = float(np.max(np.abs(ratios - g)) / abs(g))
    return g, spread


# --- roots near the origin --------------------------------------------------------


def spectrum_near_origin(
    nl: Nonlinearity,
    profile: WaveProfile,
    kappa: float,
    cubic: DispersionCubic,
    rtol: float = 1e-9,
    max_iter: int = 40,
    stall_tol: float = 1e-6,
) -> np.ndarray:
    """The three zeros of D(., kappa) near mu = 0.

    Seeds are mu_j = i kappa / y_j from the roots of the dispersion cubic.  All
    three are refined together by Newton's method with implicit deflation
    against the other iterates (the Aberth correction), the derivative of D
    being a four-point complex difference.  A root that wanders further than
    the largest seed from its own seed raises :class:`RootLost`.

    D vanishes like mu^3 near the origin, so for small kappa roundoff in D
    caps the attainable relative accuracy above ``rtol``.  Iterates whose
    steps are below ``stall_tol`` relative and no longer contracting have hit
    that floor and are accepted.
    """
    if kappa == 0.0:
        raise ValueError("kappa must be nonzero")
    seeds = 1j * kappa / cubic.roots
    trust = float(np.max(np.abs(seeds)))
    mu = seeds.copy()
    offs = np.array([-2.0, -1.0, 1.0, 2.0])
    wts = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
    prev = np.full(3, np.inf)
    for _ in range(max_iter):
        dmu = 1e-3 * np.maximum(np.abs(mu), 1e-3 * trust)
        pts = np.concatenate([mu, (mu[:, None] + offs[None, :] * dmu[:, None]).ravel()])
        D = evans_function(nl, profile, pts, kappa)
        D0 = D[:3]
        dD = (D[3:].reshape(3, 4) @ wts) / dmu
        ratio = D0 / dD
        diff = mu[:, None] - mu[None, :]
        np.fill_diagonal(diff, np.inf)
        defl = np.sum(1.0 / diff, axis=1)
        step = ratio / (1.0 - ratio * defl)
        mu = mu - step
        if np.any(np.abs(mu - seeds) > trust) or not np.all(np.isfinite(mu)):
            raise RootLost(f"Newton left the trust region around the seeds at kappa={kappa}")
        size = np.abs(step)
        if np.all(size <= rtol * np.abs(mu)):
            break
        if np.all(size <= stall_tol * np.abs(mu)) and np.all(size > 0.5 * prev):
            break
        prev = size
    else:
        raise RootLost(f"Newton did not converge in {max_iter} iterations at kappa={kappa}")
    return mu


def large_lambda_sign(nl: Nonlinearity, profile: WaveProfile, lam: float | None = None) -> tuple[float, float]:
    """(Lambda, D(Lambda, 0)) for a large positive Lambda, default
    10 * max(1, |c|); D is expected to be negative there."""
    if lam is None:
        lam = 10.0 * max(1.0, abs(profile.params.c))
    D = evans_function(nl, profile, [lam], 0.0)[0]
    return float(lam), float(D.real)
