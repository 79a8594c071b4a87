"""Closed-form equilibrium laws for the no-regret, future-regret and
all-regret contests.

The future-regret penalty acts exactly like extra opponents: the equilibrium
is the standard law with the player count replaced by N = n + K(n-1).  The
all-regret penalty is strategy-independent and leaves the standard
equilibrium unchanged.
"""
from __future__ import annotations

import numpy as np

from .laws import EquilibriumCdf, JointLaw, Mode
from .model import ContestSpec


def effective_player_count(spec: ContestSpec) -> float:
    """N = n + K(n-1); kept as a real number, K need not make it integral."""
    return spec.n + spec.K * (spec.n - 1)


def _standard_cdf(n_eff: float, x0: float) -> EquilibriumCdf:
    from .laws import power_law_cdf

    return power_law_cdf(n_eff, x0)


def no_regret_cdf(spec: ContestSpec) -> EquilibriumCdf:
    """Equilibrium F(x) = min{(x/(n x0))^(1/(n-1)), 1} of the standard contest."""
    if spec.mode != Mode.NO_REGRET:
        raise ValueError("no_regret_cdf expects mode 'none'")
    return _standard_cdf(spec.n, spec.x0)


def future_regret_cdf(spec: ContestSpec) -> EquilibriumCdf:
    """Equilibrium of the stop-too-soon contest: standard law with N players."""
    if spec.mode != Mode.FUTURE_REGRET:
        raise ValueError("future_regret_cdf expects mode 'future'")
    return _standard_cdf(effective_player_count(spec), spec.x0)


def all_regret_cdf(spec: ContestSpec) -> EquilibriumCdf:
    """Equilibrium of the whole-path-regret contest: the K = 0 standard law."""
    if spec.mode != Mode.ALL_REGRET:
        raise ValueError("all_regret_cdf expects mode 'all'")
    return _standard_cdf(spec.n, spec.x0)


def closed_form_law(spec: ContestSpec) -> JointLaw:
    """Equilibrium joint law of (X, M) for the three closed-form modes."""
    if spec.mode == Mode.NO_REGRET:
        marginal = no_regret_cdf(spec)
    elif spec.mode == Mode.FUTURE_REGRET:
        marginal = future_regret_cdf(spec)
    elif spec.mode == Mode.ALL_REGRET:
        marginal = all_regret_cdf(spec)
    else:
        raise ValueError("the past-regret equilibrium has no closed form")
    return JointLaw(marginal=marginal, mode=spec.mode)
