"""Equilibrium target laws: CDF evaluation, densities, quantiles and sampling.

Every equilibrium in this package is an atom-free distribution on [0, right]
with mean equal to the common starting value x0.  The joint law of the
stopped value and the relevant running maximum is represented on top of the
marginal, with a mode-specific conditional.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad


class Mode(str, Enum):
    """Which maximum defines the regret penalty."""

    NO_REGRET = "none"
    FUTURE_REGRET = "future"
    PAST_REGRET = "past"
    ALL_REGRET = "all"


def match_shape(x_in, out):
    """Return a Python float for scalar input, the array otherwise."""
    out = np.asarray(out)
    if np.ndim(x_in) == 0:
        return float(out.reshape(-1)[0])
    return out


def gauss_legendre(f, a: float, b: float, nodes: int = 200) -> float:
    """Integrate ``f`` (vectorized) over [a, b] with a Gauss-Legendre rule."""
    if b <= a:
        return 0.0
    xg, wg = leggauss(nodes)
    xs = 0.5 * (a + b) + 0.5 * (b - a) * xg
    return 0.5 * (b - a) * float(np.sum(wg * f(xs)))


class EquilibriumCdf:
    """Atom-free law on [0, right] with known CDF, density and quantile."""

    def __init__(
        self,
        cdf: Callable[[np.ndarray], np.ndarray],
        pdf: Callable[[np.ndarray], np.ndarray],
        quantile: Callable[[np.ndarray], np.ndarray],
        right: float,
        x0: float,
        mean_fn: Optional[Callable[[], float]] = None,
        tail_fn: Optional[Callable[[float, float], float]] = None,
        label: str = "",
    ):
        self._cdf = cdf
        self._pdf = pdf
        self._quantile = quantile
        self.right = float(right)
        self.x0 = float(x0)
        self._mean_fn = mean_fn
        self._tail_fn = tail_fn
        self.label = label

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, self.right)

    def cdf(self, x):
        return match_shape(x, self._cdf(np.atleast_1d(np.asarray(x, dtype=float))))

    def pdf(self, x):
        return match_shape(x, self._pdf(np.atleast_1d(np.asarray(x, dtype=float))))

    def quantile(self, p):
        parr = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any((parr < 0) | (parr > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        return match_shape(p, self._quantile(parr))

    def mean(self) -> float:
        """Mean by quadrature (or the builder's exact evaluation)."""
        if self._mean_fn is not None:
            return float(self._mean_fn())
        val, _ = quad(lambda p: float(self.quantile(p)), 0.0, 1.0, limit=200)
        return val

    def tail_over_square(self, x: float, power: float) -> float:
        """Return ``int_x^inf F(y)^power / y^2 dy`` for this CDF ``F``."""
        if self._tail_fn is not None:
            return self._tail_fn(x, power)
        b = self.right
        tail = 1.0 / max(x, b)
        if x < b:
            val, _ = quad(
                lambda y: float(self.cdf(y)) ** power / y**2, x, b, limit=200
            )
            tail = val + 1.0 / b
        return tail

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(rng.random(count))


def power_law_cdf(n_eff: float, x0: float, label: str = "") -> EquilibriumCdf:
    """The standard-contest law ``F(x) = min{(x/(n_eff x0))^(1/(n_eff-1)), 1}``.

    ``n_eff`` may be fractional (the future-regret case uses N = n + K(n-1)).
    """
    if n_eff < 2:
        raise ValueError("effective player count must be at least 2")
    if x0 <= 0:
        raise ValueError("starting value must be positive")
    b = n_eff * x0
    e = 1.0 / (n_eff - 1.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.where(x <= 0, 0.0, np.minimum((np.maximum(x, 0.0) / b) ** e, 1.0))
        return out

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > 0) & (x < b)
        out[inside] = (e / b) * (x[inside] / b) ** (e - 1.0)
        at_zero = x == 0
        # density blows up at the origin when the exponent is below one
        out[at_zero] = np.inf if e < 1.0 else (e / b if e == 1.0 else 0.0)
        return out

    def quantile(p):
        return b * np.asarray(p, dtype=float) ** (n_eff - 1.0)

    def tail_fn(x: float, power: float) -> float:
        beta = power * e
        if x >= b:
            return 1.0 / x
        x = max(x, 0.0)
        if abs(beta - 1.0) < 1e-14:
            if x == 0.0:
                return np.inf
            return (np.log(b / x) + 1.0) / b
        return b ** (-beta) * (x ** (beta - 1.0) - b ** (beta - 1.0)) / (1.0 - beta) + 1.0 / b

    return EquilibriumCdf(
        cdf, pdf, quantile, right=b, x0=x0, mean_fn=lambda: x0, tail_fn=tail_fn,
        label=label or f"power-law(N={n_eff:g}, x0={x0:g})",
    )


@dataclass
class JointLaw:
    """Law of (stopped value X, mode-relevant maximum M).

    For the past-regret mode the conditional is the deterministic map
    ``m_map``; for the future-regret mode it is the martingale hitting kernel
    P(M >= y | X = z) = z / y.  The all-regret joint is kept abstract: its
    penalty term does not depend on the stopping rule, so it is exercised
    through path simulation only.
    """

    marginal: EquilibriumCdf
    mode: Mode
    m_map: Optional[Callable[[np.ndarray], np.ndarray]] = None
    phi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    solution: object = field(default=None, repr=False)

    def sample(self, count: int, rng: np.random.Generator):
        x = self.marginal.sample(count, rng)
        if self.mode == Mode.NO_REGRET:
            m = x.copy()
        elif self.mode == Mode.PAST_REGRET:
            if self.m_map is None:
                raise ValueError("past-regret joint law requires an M map")
            m = self.m_map(x)
        elif self.mode == Mode.FUTURE_REGRET:
            m = x / rng.random(count)
        else:
            raise NotImplementedError(
                "the all-regret joint law is only exercised via path simulation"
            )
        return x, m

    def on_support(self, x, m, eps: float):
        """Indicator of the optimal-support set A for the past-regret joint."""
        if self.mode != Mode.PAST_REGRET or self.phi is None:
            raise ValueError("support predicate defined for the past-regret joint")
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        on_diag = np.abs(m - x) <= eps
        on_curve = np.abs(x - self.phi(np.minimum(m, self.marginal.right))) <= eps
        return on_diag | (on_curve & (m >= self.marginal.x0 - eps))


def sample_joint(law: JointLaw, count: int, seed: int):
    """Draw ``count`` reproducible (x, m) pairs from a joint law."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    return law.sample(count, rng)


def perkins_xi_survival(g: EquilibriumCdf, phi, s: float) -> float:
    """Survival P(xi >= s) of the randomized threshold in the Perkins rule.

    ``phi`` is the reflection boundary of the M-minimal embedding of ``g``.
    """
    x0 = g.x0
    if s < x0:
        raise ValueError("survival defined for s >= x0")
    if s == x0:
        return 1.0
    s = min(s, g.right)

    def integrand(u):
        denom = 1.0 - float(g.cdf(u)) + float(g.cdf(float(phi(u))))
        return float(g.pdf(u)) / denom

    val, _ = quad(integrand, x0, s, limit=400)
    return float(np.exp(-val))
