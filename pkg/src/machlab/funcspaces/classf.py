"""Admissible weights F, their numerical class checks, and the Osgood functional."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from machlab.errors import PreconditionError, RangeError

Array = np.ndarray


@dataclass(frozen=True)
class ClassF:
    """Weight F: [1, inf) -> [1, inf).

    ``func_of_exp(u)`` evaluates F(e^u) without overflow; every quadrature in
    this module goes through it.
    """

    name: str
    func: Callable[[Array], Array] = field(repr=False, compare=False)
    func_of_exp: Callable[[Array], Array] = field(repr=False, compare=False)
    params: tuple = ()
    C: float = 1.0
    is_class_F: bool | None = None
    is_class_F_prime: bool | None = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def verified(self, sample_budget: int = 8) -> "ClassF":
        rep = verify_class_f(self, sample_budget)
        return replace(self, C=rep.submult_constant, is_class_F=rep.is_class_F,
                       is_class_F_prime=rep.is_class_F_prime)

    def require_class_f(self):
        if self.is_class_F is not True:
            raise PreconditionError(f"weight {self.name!r} is not verified to be in class F")


def one_plus_log_alpha(alpha: float = 1.0) -> ClassF:
    """F(x) = 1 + ln^alpha x."""
    if not 0 < alpha:
        raise ValueError("alpha must be positive")
    return ClassF(
        name="one_plus_log_alpha",
        func=lambda x: 1.0 + np.log(np.maximum(x, 1.0)) ** alpha,
        func_of_exp=lambda u: 1.0 + np.maximum(u, 0.0) ** alpha,
        params=(("alpha", float(alpha)),),
    )


def one_plus_log() -> ClassF:
    f = one_plus_log_alpha(1.0)
    return replace(f, name="one_plus_log")


def one_plus_loglog_log() -> ClassF:
    """F(x) = 1 + ln ln(e + x) * ln x."""

    def fexp(u):
        u = np.maximum(u, 0.0)
        return 1.0 + np.log(np.logaddexp(1.0, u)) * u

    return ClassF(
        name="one_plus_loglog_log",
        func=lambda x: 1.0 + np.log(np.log(np.e + x)) * np.log(np.maximum(x, 1.0)),
        func_of_exp=fexp,
    )


def power(beta: float) -> ClassF:
    """F(x) = x^beta."""
    if beta <= 0:
        raise ValueError("beta must be positive")

    def fexp(u):
        with np.errstate(over="ignore"):
            return np.exp(beta * np.maximum(u, 0.0))

    return ClassF(name="power", func=lambda x: np.maximum(x, 1.0) ** beta, func_of_exp=fexp,
                  params=(("beta", float(beta)),))


def from_selector(selector: str) -> ClassF:
    """Parse 'one_plus_log', 'one_plus_log_alpha:0.5', 'power:0.5', 'one_plus_loglog_log'."""
    name, _, arg = selector.partition(":")
    name = name.strip()
    if name == "one_plus_log":
        return one_plus_log()
    if name == "one_plus_log_alpha":
        return one_plus_log_alpha(float(arg or 1.0))
    if name == "one_plus_loglog_log":
        return one_plus_loglog_log()
    if name == "power":
        return power(float(arg or 1.0))
    raise ValueError(f"unknown weight selector {selector!r}")


@dataclass(frozen=True)
class ClassFReport:
    monotone: bool
    at_least_one: bool
    blows_up: bool
    asym_constant: float
    asym_witness: tuple[float, float]
    submult_constant: float
    submult_witness: tuple[float, float]
    osgood_increments: tuple[float, ...]
    is_class_F: bool
    is_class_F_prime: bool


CONSTANT_CAP = 1e3
OSGOOD_RATIO = 0.75


def _fexp_scalar(F: ClassF, u: float) -> float:
    return float(F.func_of_exp(np.asarray(u, dtype=float)))


def verify_class_f(F: ClassF, sample_budget: int = 8) -> ClassFReport:
    """Numerical tests of the class conditions on fixed lattices.

    Every test is a finite sample, so a positive flag means "no violation
    found", with the worst-case witness recorded.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return _verify(F, sample_budget)


def _verify(F: ClassF, budget: int) -> ClassFReport:
    u = np.linspace(0.0, 300.0 * math.log(10.0), 301)
    vals = F.func_of_exp(u)
    finite = np.isfinite(vals)
    monotone = bool(np.all(np.diff(vals[finite]) >= 0))
    at_least_one = bool(np.all(vals[finite] >= 1.0 - 1e-15))
    # strictly increasing on the decade lattice, overflow counts as growth
    blows_up = bool(np.all(np.diff(vals[finite]) > 0) and vals[0] < vals[-1])

    # (b): int_0^inf e^{-s} F(x + lam s) ds / F(x) after y = x + lam s
    worst_b, wit_b = 0.0, (1.0, 1.0)
    lams = [1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4]
    for lam in lams[: max(3, budget)]:
        for mult in (1.0, 2.0, 5.0, 10.0, 100.0):
            x = lam * mult
            fx = _fexp_scalar(F, math.log(x))

            def integrand(s, x=x, lam=lam, fx=fx):
                return math.exp(-s) * _fexp_scalar(F, math.log(x + lam * s)) / fx

            val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
            if val > worst_b:
                worst_b, wit_b = val, (lam, x)

    # (c): F(xy) <= C F(x) F(y) in log variables
    logs = np.log(np.array([1.0, 2.0, math.e, 10.0, 1e2, 1e4, 1e8, 1e12, 1e50]))
    worst_c, wit_c = 0.0, (1.0, 1.0)
    for a in logs:
        for b in logs:
            r = _fexp_scalar(F, a + b) / (_fexp_scalar(F, a) * _fexp_scalar(F, b))
            if r > worst_c:
                worst_c, wit_c = r, (math.exp(a), math.exp(b))

    # Osgood: int_1^X dx/(x F(x)) = int_0^{ln X} du / F(e^u), over squaring X
    def piece(u0, u1):
        # substitute u = e^w to handle the huge ranges
        f = lambda w: math.exp(w) / _fexp_scalar(F, math.exp(w))
        val, _ = integrate.quad(f, math.log(u0), math.log(u1), limit=200)
        return val

    edges = [10.0 * 2.0**j for j in range(max(budget, 4) + 1)]
    head, _ = integrate.quad(lambda s: 1.0 / _fexp_scalar(F, s), 0.0, edges[0])
    incs = [head] + [piece(edges[j], edges[j + 1]) for j in range(len(edges) - 1)]
    tail = incs[-3:]
    osgood = all(b >= OSGOOD_RATIO * a for a, b in zip(tail, tail[1:]))

    is_f = monotone and at_least_one and blows_up and worst_b <= CONSTANT_CAP and worst_c <= CONSTANT_CAP
    return ClassFReport(monotone, at_least_one, blows_up, float(worst_b), wit_b, float(worst_c), wit_c,
                        tuple(float(x) for x in incs), bool(is_f), bool(is_f and osgood))


def _m_integrand(F: ClassF, C: float):
    return lambda y: 1.0 / _fexp_scalar(F, C * y)


def osgood_M(F: ClassF, C: float, x: float) -> float:
    """M(x) = int_0^x dy / F(e^{C y})."""
    if x < 0:
        raise RangeError("M is defined for x >= 0")
    if x == 0:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = integrate.quad(_m_integrand(F, C), 0.0, x, epsabs=0.0, epsrel=1e-13, limit=400)
    return float(val)


@lru_cache(maxsize=64)
def _m_limit(F: ClassF, C: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = integrate.quad(_m_integrand(F, C), 0.0, np.inf, limit=400)
    return float(val)


X_CEILING = 1e12


def osgood_M_inverse(F: ClassF, C: float, t: float) -> float:
    if t < 0:
        raise RangeError("M^-1 is defined for t >= 0")
    if t == 0:
        return 0.0
    hi = 1.0
    while osgood_M(F, C, hi) < t:
        hi *= 2.0
        if hi > X_CEILING:
            raise RangeError(f"M^-1({t}) exceeds the computed range (M saturates near {_m_limit(F, C):.6g})")
    return float(optimize.brentq(lambda x: osgood_M(F, C, x) - t, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=400))


def osgood_solve(F: ClassF, C: float, x_or_t: float, direction: str = "M") -> float:
    F.require_class_f()
    if direction == "M":
        return osgood_M(F, C, x_or_t)
    if direction == "M_inverse":
        return osgood_M_inverse(F, C, x_or_t)
    if direction == "M_inverse_derivative":
        return _fexp_scalar(F, C * osgood_M_inverse(F, C, x_or_t))
    raise ValueError(f"unknown direction {direction!r}")


def _integrate_series(times, values, t: float) -> float:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if t < times[0] - 1e-15:
        raise RangeError("t precedes the gamma series")
    if t > times[-1] + 1e-12:
        raise RangeError("t lies beyond the gamma series")
    keep = times < t
    ts = np.append(times[keep], t)
    vs = np.append(values[keep], np.interp(t, times, values))
    return float(np.trapezoid(vs, ts)) if len(ts) > 1 else 0.0


def osgood_bound(C: float, gamma_series, mu_evaluator: Callable[[float], float], t: float,
                 a: float | None = None) -> float:
    """Upper bound rho(t) <= M^{-1}(M(C) + int gamma) with M(y) = int_a^y dx/mu(x).

    ``gamma_series`` is a pair (times, values). ``a`` defaults to ``C`` so that
    M(C) = 0.
    """
    a = C if a is None else a
    g = _integrate_series(gamma_series[0], gamma_series[1], t)
    if g < 0:
        raise PreconditionError("gamma must be nonnegative")

    def M(y):
        val, _ = integrate.quad(lambda x: 1.0 / mu_evaluator(x), a, y, epsabs=0.0, epsrel=1e-13, limit=400)
        return val

    target = M(C) + g
    if target == M(C):
        return float(C)
    lo, hi = C, max(2.0 * C, C + 1.0)
    while M(hi) < target:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise RangeError("Osgood bound exceeds the range of M")
    return float(optimize.brentq(lambda y: M(y) - target, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500))
