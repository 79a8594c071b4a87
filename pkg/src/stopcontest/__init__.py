"""Equilibria of Brownian stopping contests with regret penalties.

n players privately stop a Brownian motion absorbed at zero; the highest
stopped value wins.  A player whose path's relevant maximum would have won
while her stopped value lost is penalised K.  Depending on which maximum is
relevant (none, the post-stop maximum, the pre-stop running maximum, or the
whole-path maximum), the symmetric atom-free equilibrium is a closed-form
power law or the solution of a singular ODE system.  This package computes
those equilibria, certifies them via Lagrangian duality, and validates them
by Monte Carlo path simulation.
"""

__version__ = "0.1.0"

from .laws import EquilibriumCdf, JointLaw, Mode, power_law_cdf, sample_joint
from .model import (ContestSpec, PayoffOutcome, realized_payoff,
                    expected_payoff, IdentityScale, ExponentialBMScale,
                    DriftingBMScale, TableScale, scale_transform,
                    scale_inverse)
from .closed_form import (no_regret_cdf, future_regret_cdf, all_regret_cdf,
                          closed_form_law, effective_player_count)
from .past_regret import (PastRegretSolution, SolverError, solve_past_regret,
                          past_regret_law, two_player_r,
                          two_player_phi_residual)
from .verify import (LagrangianCertificate, certify, best_response_gap,
                     deviation_family, claimed_value, scaled_beta_deviation,
                     beta_barycenter, compare_candidate_table)
from .simulate import (PathConfig, PathSample, SimulationReport, HitLevelPair,
                       AzemaYor, Perkins, QuantileOracle, simulate_paths,
                       run_contest, ks_distance, azema_yor_rule, perkins_rule,
                       equilibrium_rule, barycenter_table)

__all__ = [
    "EquilibriumCdf", "JointLaw", "Mode", "power_law_cdf", "sample_joint",
    "ContestSpec", "PayoffOutcome", "realized_payoff", "expected_payoff",
    "IdentityScale", "ExponentialBMScale", "DriftingBMScale", "TableScale",
    "scale_transform", "scale_inverse",
    "no_regret_cdf", "future_regret_cdf", "all_regret_cdf",
    "closed_form_law", "effective_player_count",
    "PastRegretSolution", "SolverError", "solve_past_regret",
    "past_regret_law", "two_player_r", "two_player_phi_residual",
    "LagrangianCertificate", "certify", "best_response_gap",
    "deviation_family", "claimed_value", "scaled_beta_deviation",
    "beta_barycenter", "compare_candidate_table",
    "PathConfig", "PathSample", "SimulationReport", "HitLevelPair",
    "AzemaYor", "Perkins", "QuantileOracle", "simulate_paths", "run_contest",
    "ks_distance", "azema_yor_rule", "perkins_rule", "equilibrium_rule",
    "barycenter_table",
]
