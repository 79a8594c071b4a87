"""Path-level Monte Carlo for the stopping contest.

Brownian paths start at x0 and are absorbed at zero.  Every stopping rule
used here reduces to a pair of barriers driven by the running maximum M:

  * an upper threshold on M (the randomized Perkins level xi, or the upper
    level of a plain two-sided rule), hit when the maximum creeps up to it,
    in which case the stop value equals the threshold;
  * a lower boundary ell(M) (the reflection curve phi for the Perkins rule,
    the inverse barycenter for the Azema-Yor rule, a constant for two-sided
    rules, zero for pure absorption), hit when the path falls to it.

Steps are simulated in blocks with optional Brownian-bridge corrections for
both the within-step maximum and the crossing of the lower boundary, which
removes most of the O(sqrt(dt)) bias of naive discretization.

After the stop, the post-stop maximum is drawn exactly from its hitting law
P(M_future >= y | X_tau = x) = x/y rather than by stepping the path to
absorption; the absorption time has a heavy tail that makes pathwise
continuation both slow and truncation-prone, while the hitting law of a
Brownian motion absorbed at zero is exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .laws import EquilibriumCdf, JointLaw, Mode
from .model import ContestSpec


@dataclass
class PathConfig:
    dt: float = 1e-4
    max_steps: int = 10_000_000
    seed: int = 0
    scheme: str = "gaussian"  # or "walk" (scaled +-sqrt(dt) random walk)
    bridge: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.scheme not in ("gaussian", "walk"):
            raise ValueError("scheme must be 'gaussian' or 'walk'")


# ---------------------------------------------------------------------------
# stopping rules


class HitLevelPair:
    """Stop when the path reaches low or high; low=0, high=inf runs to absorption."""

    def __init__(self, low: float = 0.0, high: float = np.inf):
        if low < 0 or high < low:
            raise ValueError("need 0 <= low <= high")
        self.low = low
        self.high = high

    def upper_thresholds(self, count, rng):
        return np.full(count, self.high)

    def lower_boundary(self, m):
        return np.full_like(np.asarray(m, dtype=float), self.low)


class AzemaYor:
    """Stop when the running maximum reaches the barycenter of the current value.

    Equivalently: stop when the path falls to binv(M), the inverse barycenter
    of the target law.  Embeds the target as the law of the stopped value.
    """

    def __init__(self, target: EquilibriumCdf, points: int = 4096):
        self.target = target
        xq, bary = barycenter_table(target, points)
        keep = np.concatenate([[True], np.diff(bary) > 0])
        self._binv = PchipInterpolator(bary[keep], xq[keep])
        self._b_lo, self._b_hi = float(bary[keep][0]), float(bary[keep][-1])

    def upper_thresholds(self, count, rng):
        return np.full(count, np.inf)

    def lower_boundary(self, m):
        m = np.clip(np.asarray(m, dtype=float), self._b_lo, self._b_hi)
        return np.clip(self._binv(m), 0.0, None)


class Perkins:
    """tau_xi and tau_phi combined: stop when M >= xi or the path falls to phi(M)."""

    def __init__(self, xi_sampler: Callable, phi_of_max: Callable):
        self.xi_sampler = xi_sampler
        self.phi_of_max = phi_of_max

    @classmethod
    def from_solution(cls, solution):
        return cls(solution.sample_xi, solution.phi_of_max)

    def upper_thresholds(self, count, rng):
        return self.xi_sampler(count, rng)

    def lower_boundary(self, m):
        return self.phi_of_max(m)


class QuantileOracle:
    """No path simulation: draw (x, m) directly from the constructed joint law."""

    def __init__(self, law: JointLaw):
        self.law = law


def barycenter_table(cdf: EquilibriumCdf, points: int = 4096):
    """Tabulate b(x) = E[X | X >= x] on the quantile grid of the law."""
    p = np.linspace(0.0, 1.0, points)
    xq = np.asarray(cdf.quantile(p), dtype=float)
    # cumulative E[X; X < x(p)] by trapezoid in probability space
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (xq[1:] + xq[:-1]) * np.diff(p))])
    mean = cum[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        bary = (mean - cum) / (1.0 - p)
    bary[-1] = xq[-1]
    keep = np.concatenate([[True], np.diff(xq) > 0])
    return xq[keep], bary[keep]


def azema_yor_rule(target: EquilibriumCdf) -> AzemaYor:
    return AzemaYor(target)


def perkins_rule(solution) -> Perkins:
    return Perkins.from_solution(solution)


# ---------------------------------------------------------------------------
# path engine


@dataclass
class PathSample:
    x_tau: np.ndarray
    m_past: np.ndarray
    m_future: np.ndarray
    m_all: np.ndarray
    truncated: np.ndarray

    @property
    def truncation_rate(self) -> float:
        return float(np.mean(self.truncated))


def _player_rng(seed: int, player: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(player),))
    return np.random.Generator(np.random.Philox(ss))


def simulate_paths(rule, config: PathConfig, x0: float, count: int,
                   player: int = 0) -> PathSample:
    """Simulate ``count`` independent stopped paths under one rule."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = _player_rng(config.seed, player)

    if isinstance(rule, QuantileOracle):
        x, m = rule.law.sample(count, rng)
        m_future = _draw_future_max(x, rng)
        return PathSample(x, m, m_future, np.maximum(m, m_future),
                          np.zeros(count, dtype=bool))

    dt = config.dt
    sq = math.sqrt(dt)
    x = np.full(count, float(x0))
    m = np.full(count, float(x0))
    xi = np.asarray(rule.upper_thresholds(count, rng), dtype=float)
    steps = np.zeros(count, dtype=np.int64)

    out_x = np.empty(count)
    out_m = np.empty(count)
    out_trunc = np.zeros(count, dtype=bool)
    alive = np.arange(count)

    # instant stops: the threshold may already be at or below x0
    hit0 = m >= xi
    low0 = np.asarray(rule.lower_boundary(m), dtype=float)
    hit_low0 = x <= low0
    done0 = hit0 | hit_low0
    if np.any(done0):
        idx = alive[done0]
        out_x[idx] = np.where(hit0[done0], np.minimum(xi[done0], x[done0]),
                              low0[done0])
        out_m[idx] = m[done0]
        keep = ~done0
        alive, x, m, xi, steps = alive[keep], x[keep], m[keep], xi[keep], steps[keep]

    while alive.size:
        A = alive.size
        S = int(np.clip(2_000_000 // A, 8, 1024))
        S = int(min(S, max(1, config.max_steps - steps.min())))
        if config.scheme == "gaussian":
            W = rng.standard_normal((A, S)) * sq
        else:
            W = (rng.integers(0, 2, size=(A, S)) * 2 - 1).astype(float) * sq
        X = x[:, None] + np.cumsum(W, axis=1)
        Xp = np.concatenate([x[:, None], X[:, :-1]], axis=1)

        if config.bridge and config.scheme == "gaussian":
            U2 = rng.random((A, S))
            disc = (X - Xp) ** 2 - 2.0 * dt * np.log(U2)
            mstep = 0.5 * (X + Xp + np.sqrt(disc))
        else:
            mstep = np.maximum(X, Xp)
        M = np.maximum(m[:, None], np.maximum.accumulate(mstep, axis=1))

        ell = np.asarray(rule.lower_boundary(M), dtype=float)
        below = X <= ell
        if config.bridge and config.scheme == "gaussian":
            U1 = rng.random((A, S))
            a_gap = Xp - ell
            b_gap = X - ell
            with np.errstate(over="ignore"):
                p_cross = np.exp(np.clip(-2.0 * a_gap * b_gap / dt, None, 0.0))
            below |= (a_gap > 0) & (b_gap > 0) & (U1 < p_cross)
        hit_up = M >= xi[:, None]
        trig = below | hit_up

        any_trig = trig.any(axis=1)
        k = np.argmax(trig, axis=1)
        if np.any(any_trig):
            rows = np.nonzero(any_trig)[0]
            kk = k[rows]
            up_first = hit_up[rows, kk]
            m_hit = M[rows, kk]
            stop_val = np.where(up_first,
                                np.minimum(xi[rows], m_hit),
                                ell[rows, kk])
            m_stop = np.where(up_first, np.minimum(xi[rows], m_hit), m_hit)
            idx = alive[rows]
            out_x[idx] = np.clip(stop_val, 0.0, None)
            out_m[idx] = m_stop

        steps = steps + S
        cont = ~any_trig
        expired = cont & (steps >= config.max_steps)
        if np.any(expired):
            idx = alive[expired]
            out_x[idx] = X[expired, -1]
            out_m[idx] = M[expired, -1]
            out_trunc[idx] = True
            cont &= ~expired
        alive = alive[cont]
        x = X[cont, -1]
        m = M[cont, -1]
        xi = xi[cont]
        steps = steps[cont]

    m_future = _draw_future_max(out_x, rng)
    return PathSample(out_x, out_m, m_future, np.maximum(out_m, m_future),
                      out_trunc)


def _draw_future_max(x_tau: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact post-stop maximum: survival x/y for an absorbed Brownian path."""
    u = rng.random(x_tau.shape[0])
    with np.errstate(divide="ignore"):
        return np.where(x_tau > 0, x_tau / u, 0.0)


# ---------------------------------------------------------------------------
# contests


@dataclass
class SimulationReport:
    spec: ContestSpec
    contests: int
    win_prob: list
    win_se: list
    mean_payoff: list
    payoff_se: list
    mean_stopped: list
    stopped_se: list
    truncation_rate: float
    ks_distance: Optional[float] = None
    off_support_rate: Optional[float] = None

    def to_dict(self) -> dict:
        d = {
            "n": self.spec.n, "x0": self.spec.x0, "K": self.spec.K,
            "K2": self.spec.K2, "mode": self.spec.mode.value,
            "contests": self.contests,
            "win_prob": self.win_prob, "win_se": self.win_se,
            "mean_payoff": self.mean_payoff, "payoff_se": self.payoff_se,
            "mean_stopped": self.mean_stopped, "stopped_se": self.stopped_se,
            "truncation_rate": self.truncation_rate,
        }
        if self.ks_distance is not None:
            d["ks_distance"] = self.ks_distance
        if self.off_support_rate is not None:
            d["off_support_rate"] = self.off_support_rate
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _mode_maximum(mode: Mode, sample: PathSample) -> np.ndarray:
    if mode == Mode.PAST_REGRET:
        return sample.m_past
    if mode == Mode.FUTURE_REGRET:
        return sample.m_future
    if mode == Mode.ALL_REGRET:
        return sample.m_all
    return sample.x_tau


def run_contest(spec: ContestSpec, rules: Sequence, contests: int,
                config: PathConfig,
                target_cdf: Optional[EquilibriumCdf] = None,
                joint_law: Optional[JointLaw] = None) -> SimulationReport:
    """Play ``contests`` independent rounds between n players.

    Optionally reports the KS distance of player 0's stopped values against
    ``target_cdf`` and, for the past mode, the off-support rate of (x, m)
    against ``joint_law`` at tolerance 0.01 * r.
    """
    n = spec.n
    if len(rules) != n:
        raise ValueError(f"need {n} rules, got {len(rules)}")
    samples = [simulate_paths(rules[i], config, spec.x0, contests, player=i)
               for i in range(n)]
    stopped = np.stack([s.x_tau for s in samples])
    maxima = np.stack([_mode_maximum(spec.mode, s) for s in samples])

    vmax = stopped.max(axis=0)
    is_top = stopped == vmax[None, :]
    ties = is_top.sum(axis=0)
    win_share = is_top / ties[None, :]

    # best opposing stop for each player: overall max, or the runner-up when
    # the player alone holds the top value
    order = np.sort(stopped, axis=0)
    second = order[-2, :]
    best_opp = np.where(is_top & (ties == 1), second, vmax)

    K, K2 = spec.effective_k, spec.effective_k2
    lost = ~is_top | (ties > 1)
    missed = lost & (best_opp < maxima) & (stopped < best_opp)
    tied_miss = lost & (best_opp == maxima) & (stopped < best_opp)
    payoff = win_share - K * missed - K2 * tied_miss

    win_prob = win_share.mean(axis=1)
    win_se = win_share.std(axis=1, ddof=1) / math.sqrt(contests)
    mean_payoff = payoff.mean(axis=1)
    payoff_se = payoff.std(axis=1, ddof=1) / math.sqrt(contests)
    mean_stopped = stopped.mean(axis=1)
    stopped_se = stopped.std(axis=1, ddof=1) / math.sqrt(contests)
    trunc = float(np.mean([s.truncation_rate for s in samples]))

    ks = None
    if target_cdf is not None:
        ks = ks_distance(samples[0].x_tau, target_cdf)
    off = None
    if joint_law is not None and spec.mode == Mode.PAST_REGRET:
        eps = 0.01 * joint_law.marginal.right
        ok = joint_law.on_support(samples[0].x_tau, samples[0].m_past, eps)
        off = float(1.0 - np.mean(ok))

    return SimulationReport(
        spec=spec, contests=contests,
        win_prob=[float(v) for v in win_prob],
        win_se=[float(v) for v in win_se],
        mean_payoff=[float(v) for v in mean_payoff],
        payoff_se=[float(v) for v in payoff_se],
        mean_stopped=[float(v) for v in mean_stopped],
        stopped_se=[float(v) for v in stopped_se],
        truncation_rate=trunc, ks_distance=ks, off_support_rate=off,
    )


def ks_distance(samples: np.ndarray, cdf: EquilibriumCdf) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and a CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    m = xs.size
    F = np.asarray(cdf.cdf(xs), dtype=float)
    emp_hi = np.arange(1, m + 1) / m
    emp_lo = np.arange(0, m) / m
    return float(max(np.max(np.abs(emp_hi - F)), np.max(np.abs(F - emp_lo))))


def equilibrium_rule(spec: ContestSpec, law: JointLaw):
    """The natural embedding of each mode's equilibrium law as a stopping rule."""
    if spec.mode == Mode.PAST_REGRET and law.solution is not None:
        return perkins_rule(law.solution)
    return azema_yor_rule(law.marginal)
