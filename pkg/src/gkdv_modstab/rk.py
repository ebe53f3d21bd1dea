"""Fixed-step explicit Runge-Kutta of order 8.

Uses the 12-stage order-8 propagation tableau of Dormand & Prince's DOP853,
taken from scipy.  Stepping is fixed (no error control) so results are
deterministic and stage states can be stored and reused: a linear system whose
coefficients depend on the solution of another ODE is then integrated exactly
as if both had been advanced together.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = np.array(_dop.A[:N_STAGES, :N_STAGES], dtype=float)
B = np.array(_dop.B, dtype=float)
C = np.array(_dop.C[:N_STAGES], dtype=float)
ORDER = 8


def integrate(rhs, y0, x0: float, x1: float, nsteps: int, keep_stages: bool = False):
    """Advance ``y' = rhs(x, y)`` from x0 to x1 in ``nsteps`` equal steps.

    Returns ``(ys, stages)`` where ``ys`` has shape ``(nsteps + 1, *y0.shape)``
    and ``stages`` (or None) has shape ``(nsteps, N_STAGES, *y0.shape)`` holding
    the internal stage states at which ``rhs`` was evaluated.
    """
    y = np.array(y0, dtype=float if np.isrealobj(y0) else complex)
    h = (x1 - x0) / nsteps
    ys = np.empty((nsteps + 1,) + y.shape, dtype=y.dtype)
    ys[0] = y
    stages = np.empty((nsteps, N_STAGES) + y.shape, dtype=y.dtype) if keep_stages else None
    K = np.empty((N_STAGES,) + y.shape, dtype=y.dtype)
    for n in range(nsteps):
        x = x0 + n * h
        for i in range(N_STAGES):
            yi = y + h * np.tensordot(A[i, :i], K[:i], axes=1) if i else y
            if keep_stages:
                stages[n, i] = yi
            K[i] = rhs(x + C[i] * h, yi)
        y = y + h * np.tensordot(B, K, axes=1)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at step {n}")
        ys[n + 1] = y
    return ys, stages
