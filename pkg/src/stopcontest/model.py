"""Contest parameters, the realized payoff, and payoff functionals.

The payoff of a player stopping at X with relevant maximum M, against
opponents whose best stopped value is W, is

    1/k   if X is the (k-way tied) overall maximum,
    -K    if X < W < M   (a winning alternative existed and was missed),
    -K2   if X < W = M   (the missed alternative would only have tied),
    0     otherwise.

Also houses the scale-function transforms that reduce transient
time-homogeneous diffusions to the absorbed-Brownian-motion case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .laws import EquilibriumCdf, JointLaw, Mode, gauss_legendre


@dataclass(frozen=True)
class ContestSpec:
    """Parameters of an n-player stopping contest with regret penalty K."""

    n: int
    x0: float
    K: float = 0.0
    K2: Optional[float] = None
    mode: Mode = Mode.NO_REGRET

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a contest needs at least two players")
        if self.x0 <= 0:
            raise ValueError("starting value x0 must be positive")
        if self.K < 0:
            raise ValueError("penalty K must be nonnegative")
        if self.K2 is None:
            # any value in [0, K] is admissible and never matters in
            # atom-free equilibria; K/2 keeps it visibly distinct from K
            object.__setattr__(self, "K2", self.K / 2.0)
        if not 0.0 <= self.K2 <= self.K:
            raise ValueError("tie penalty K2 must lie in [0, K]")
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def effective_k(self) -> float:
        """Penalty actually charged; the no-regret mode forces K = 0."""
        return 0.0 if self.mode == Mode.NO_REGRET else self.K

    @property
    def effective_k2(self) -> float:
        return 0.0 if self.mode == Mode.NO_REGRET else self.K2


@dataclass(frozen=True)
class PayoffOutcome:
    """A single contest realization from one player's point of view."""

    own_stop: float
    own_max: float
    opponents_stop: Sequence[float]

    def __post_init__(self):
        if self.own_stop < 0 or self.own_max < self.own_stop:
            raise ValueError("need 0 <= own_stop <= own_max")
        if len(self.opponents_stop) == 0:
            raise ValueError("at least one opponent required")
        if any(v < 0 for v in self.opponents_stop):
            raise ValueError("stopped values are nonnegative")


def realized_payoff(
    spec: ContestSpec,
    outcome: PayoffOutcome,
    tie_rank: int = 0,
    tie_count: int = 1,
) -> float:
    """Payoff of one realization; ties at the top split the unit reward 1/k."""
    if tie_count < 1:
        raise ValueError("tie_count must be at least 1")
    del tie_rank  # the 1/k split does not depend on the rank within the tie
    best_opp = max(outcome.opponents_stop)
    if outcome.own_stop >= best_opp:
        if outcome.own_stop > best_opp:
            return 1.0
        return 1.0 / tie_count
    if best_opp < outcome.own_max:
        return -spec.effective_k
    if best_opp == outcome.own_max:
        return -spec.effective_k2
    return 0.0


# ---------------------------------------------------------------------------
# scale functions


@dataclass(frozen=True)
class IdentityScale:
    """Brownian motion absorbed at zero; no transform needed."""

    def forward(self, y):
        return np.asarray(y, dtype=float)

    def inverse(self, x):
        return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ExponentialBMScale:
    """dY = aY dB + bY dt; scale s(y) = y^kappa with kappa = 1 - 2b/a^2 > 0."""

    a: float
    b: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(
                "exponential Brownian motion needs kappa = 1 - 2b/a^2 > 0 "
                "(transience to zero)"
            )

    @property
    def kappa(self) -> float:
        return 1.0 - 2.0 * self.b / self.a**2

    def forward(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise ValueError("state space is the positive half line")
        return y**self.kappa

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("martingale scale values are nonnegative")
        return x ** (1.0 / self.kappa)


@dataclass(frozen=True)
class DriftingBMScale:
    """dY = a dB + b dt with b < 0; scale s(y) = e^(-eta y), eta = 2b/a^2."""

    a: float
    b: float

    def __post_init__(self):
        if self.b >= 0:
            raise ValueError("drifting Brownian motion needs negative drift")

    @property
    def eta(self) -> float:
        return 2.0 * self.b / self.a**2

    def forward(self, y):
        return np.exp(-self.eta * np.asarray(y, dtype=float))

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("martingale scale values must be positive")
        return -np.log(x) / self.eta


class TableScale:
    """Monotone tabulated scale function, shape-preserving cubic in between."""

    def __init__(self, y_values, s_values):
        y = np.asarray(y_values, dtype=float)
        s = np.asarray(s_values, dtype=float)
        if y.ndim != 1 or y.shape != s.shape or y.size < 3:
            raise ValueError("need matching 1-d tables with at least 3 points")
        if np.any(np.diff(y) <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("scale tables must be strictly increasing")
        self._fwd = PchipInterpolator(y, s)
        self._inv = PchipInterpolator(s, y)
        self.domain = (float(y[0]), float(y[-1]))

    def forward(self, y):
        return self._fwd(np.asarray(y, dtype=float))

    def inverse(self, x):
        return self._inv(np.asarray(x, dtype=float))


def scale_transform(sf, y):
    """Map diffusion values to martingale scale."""
    return sf.forward(y)


def scale_inverse(sf, x):
    """Map martingale-scale values back to diffusion coordinates."""
    return sf.inverse(x)


# ---------------------------------------------------------------------------
# expected payoff against a fixed opponent distribution


def _graded_gauss(f, a: float, b: float, nodes: int, depth: int = 12) -> float:
    """Composite Gauss rule with geometric grading toward both endpoints."""
    if b <= a:
        return 0.0
    width = b - a
    cuts = np.concatenate([
        [a],
        a + width * 0.5 * 10.0 ** np.arange(-float(depth), 0.0),
        b - width * 0.5 * 10.0 ** np.arange(-1.0, -float(depth) - 1.0, -1.0),
        [b],
    ])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += gauss_legendre(f, lo, hi, nodes)
    return total


def _split_levels(own: EquilibriumCdf, knots) -> list[float]:
    """Probability levels at which the integrand may lose smoothness."""
    levels = {0.0, 1.0}
    lo, hi = own.support
    for x in knots:
        if x is None or not (lo < x < hi):
            continue
        levels.add(float(own.cdf(x)))
    return sorted(levels)


def _m_map_crossings(own: EquilibriumCdf, m_map, targets) -> list[float]:
    """Levels p where the deviation's maximum map crosses a kink of F."""
    from scipy.optimize import brentq

    out = []
    eps = 1e-12
    for target in targets:
        def g(p):
            return float(m_map(np.atleast_1d(own.quantile(p)))[0]) - target

        a, b = g(eps), g(1.0 - eps)
        if a * b < 0:
            out.append(brentq(g, eps, 1.0 - eps, xtol=1e-14))
    return out


def expected_payoff(
    spec: ContestSpec,
    own_law: JointLaw,
    opponent_cdf: EquilibriumCdf,
    nodes: int = 200,
) -> float:
    """Expected payoff E[(1+K) F(X)^(n-1) - K F(M)^(n-1)] by quadrature.

    ``own_law`` is the candidate joint law of (X, M); ``opponent_cdf`` is the
    common target distribution F of the other n-1 players.
    """
    F = opponent_cdf
    n = spec.n
    K = spec.effective_k
    own = own_law.marginal
    if own.right <= 0:
        raise ValueError("degenerate own law")

    # a solver-backed past-regret equilibrium played against itself admits an
    # exact smooth-parametrization integral; use it when applicable
    sol = own_law.solution
    if (
        spec.mode == Mode.PAST_REGRET
        and sol is not None
        and F is own
    ):
        return sol.expected_payoff_self()

    def f_pow(x):
        return F.cdf(x) ** (n - 1)

    knots = [F.right, F.x0, spec.x0, own.x0]
    levels = _split_levels(own, knots)

    def integrate(fn, pieces=levels):
        # quantile maps often behave like p^gamma at the piece endpoints
        # (beta-shaped deviations), so each piece is subdivided geometrically
        # toward both ends before applying the Gauss rule
        total = 0.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            total += _graded_gauss(fn, a, b, nodes)
        return total

    base = integrate(lambda p: f_pow(own.quantile(p)))

    if K == 0.0 or spec.mode == Mode.NO_REGRET:
        return base

    if spec.mode == Mode.PAST_REGRET:
        if own_law.m_map is None:
            raise ValueError("past-regret law needs a deterministic M map")
        m_levels = sorted(set(levels) | set(
            _m_map_crossings(own, own_law.m_map, [F.x0, F.right])))
        m_term = integrate(lambda p: f_pow(own_law.m_map(own.quantile(p))),
                           pieces=m_levels)
    elif spec.mode == Mode.FUTURE_REGRET:
        def kernel(p):
            x = np.atleast_1d(own.quantile(p))
            return np.array([xi * F.tail_over_square(float(xi), n - 1) for xi in x])

        m_term = integrate(kernel)
    elif spec.mode == Mode.ALL_REGRET:
        # the whole-path maximum from x0 has survival x0/y regardless of the
        # stopping rule
        m_term = spec.x0 * F.tail_over_square(spec.x0, n - 1)
    else:
        raise ValueError(f"unknown mode {spec.mode}")

    return (1.0 + K) * base - K * m_term
