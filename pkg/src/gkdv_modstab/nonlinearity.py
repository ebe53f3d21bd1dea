"""Nonlinearities f(u) for u_t = u_xxx + f(u)_x.

A :class:`Nonlinearity` bundles f with its antiderivative F (normalised so
F(0) = 0) and its first two derivatives.  Built-in instances are picklable so
they can be shipped to worker processes during scans.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

__all__ = [
    "Nonlinearity",
    "make_power_law",
    "make_mkdv",
    "make_kdv",
    "from_tag",
    "check_consistency",
]

Scalar = Callable[[float], float]


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    f: Scalar
    F: Scalar
    df: Scalar
    d2f: Scalar
    # leading coefficient and degree when f is a monomial beta*u^(p+1); lets
    # callers recover the polynomial E - V exactly (None for custom f)
    monomial: tuple[float, int] | None = None

    def __post_init__(self):
        if float(self.F(0.0)) != 0.0:
            raise ValueError(f"{self.name}: antiderivative must satisfy F(0) = 0")

    def F_divided(self, x, y):
        """(F(x) - F(y)) / (x - y) without cancellation when x is close to y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.monomial is not None:
            beta, p = self.monomial
            acc = np.zeros(np.broadcast(x, y).shape)
            for k in range(p + 2):
                acc = acc + x**k * y ** (p + 1 - k)
            return beta * acc / (p + 2)
        m, d = 0.5 * (x + y), x - y
        scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        close = np.abs(d) < 1e-3 * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = (self.F(x) - self.F(y)) / np.where(close, 1.0, d)
        # midpoint expansion; truncation error is O(d^4) times the fourth derivative of f
        taylor = self.f(m) + self.d2f(m) * d * d / 24.0
        return np.where(close, taylor, direct)


def _mono_f(u, beta, p):
    return beta * u ** (p + 1)


def _mono_F(u, beta, p):
    return beta * u ** (p + 2) / (p + 2)


def _mono_df(u, beta, p):
    return beta * (p + 1) * u**p


def _mono_d2f(u, beta, p):
    if p == 1:
        return beta * 2.0 + 0.0 * u
    return beta * (p + 1) * p * u ** (p - 1)


def _monomial(name: str, beta: float, p: int) -> Nonlinearity:
    return Nonlinearity(
        name=name,
        f=partial(_mono_f, beta=beta, p=p),
        F=partial(_mono_F, beta=beta, p=p),
        df=partial(_mono_df, beta=beta, p=p),
        d2f=partial(_mono_d2f, beta=beta, p=p),
        monomial=(float(beta), p),
    )


def make_power_law(p: int) -> Nonlinearity:
    """f(u) = u^(p+1); p = 1 is KdV."""
    if isinstance(p, bool) or int(p) != p or p < 1:
        raise ValueError(f"power-law exponent must be an integer >= 1, got {p!r}")
    p = int(p)
    return _monomial("kdv" if p == 1 else f"power:{p}", 1.0, p)


def make_kdv() -> Nonlinearity:
    return make_power_law(1)


def make_mkdv(sign: int) -> Nonlinearity:
    """f(u) = sign * u^3 with sign = +1 (focusing) or -1 (defocusing)."""
    if sign not in (1, -1):
        raise ValueError(f"mKdV sign must be +1 or -1, got {sign!r}")
    return _monomial("mkdv+" if sign == 1 else "mkdv-", float(sign), 2)


def from_tag(tag: str) -> Nonlinearity:
    """Parse the CLI/config tag: ``kdv``, ``mkdv+``, ``mkdv-`` or ``power:p``."""
    tag = tag.strip().lower()
    if tag == "kdv":
        return make_kdv()
    if tag == "mkdv+":
        return make_mkdv(1)
    if tag == "mkdv-":
        return make_mkdv(-1)
    if tag.startswith("power:"):
        try:
            p = int(tag.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power-law tag {tag!r}") from None
        return make_power_law(p)
    raise ValueError(f"unknown nonlinearity tag {tag!r}")


def _richardson_central(g, u, h):
    d1 = (g(u + h) - g(u - h)) / (2 * h)
    d2 = (g(u + h / 2) - g(u - h / 2)) / h
    return (4 * d2 - d1) / 3


def check_consistency(nl: Nonlinearity, us, h: float = 1e-3) -> float:
    """Largest relative mismatch between each evaluator and the
    Richardson-extrapolated central difference of the one above it.

    Custom nonlinearities are not auto-differentiated; this is the guard
    against an inconsistent set of evaluators.
    """
    worst = 0.0
    for u in np.atleast_1d(np.asarray(us, dtype=float)):
        hh = h * max(1.0, abs(u))
        for lower, upper in ((nl.F, nl.f), (nl.f, nl.df), (nl.df, nl.d2f)):
            est = _richardson_central(lower, u, hh)
            ref = upper(u)
            scale = max(abs(ref), abs(lower(u)), 1.0)
            worst = max(worst, abs(est - ref) / scale)
    return worst
