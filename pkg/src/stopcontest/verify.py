"""Lagrangian certificates and best-response checks for candidate equilibria.

A candidate law is certified by exhibiting multipliers under which the
pointwise Lagrangian integrand never exceeds its value on the candidate's
support.  For the closed-form modes the integrand is one-dimensional in the
stopped value x; for the past-regret mode it is the two-argument function

    L*(x, y) = (1+K)(psi_e(x) - psi(y)) + (y - x) psi'(y),  x <= y, y in [x0, r],
    L*(x, y) = (1+K)(psi_e(x) - x/r),                        y > r,  x <= r,
    L*(x, y) = (1+K)(r - x)/r,                               y > r,  x in (r, y],

with psi_e the extension of psi below x0 along the reflection boundary.
L* must be <= 0 everywhere and vanish on the active set {(y, y)} and
{(phi(y), y)}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import betainc, betaincinv
from scipy.stats import beta as beta_dist

from .laws import EquilibriumCdf, JointLaw, Mode, gauss_legendre
from .model import ContestSpec, expected_payoff
from .closed_form import effective_player_count


@dataclass
class LagrangianCertificate:
    mode: str
    multipliers: dict
    value: float
    max_violation: float
    active_set_residual: float
    grid_points: int
    worst_point: tuple
    tol_violation: float
    tol_active: float
    passed: bool

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["worst_point"] = list(self.worst_point)
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _edge_dense_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Grid on (lo, hi] crowded toward both endpoints (log refinement)."""
    width = hi - lo
    m = points // 4
    left = lo + width * np.geomspace(1e-10, 0.25, m)
    right = hi - width * np.geomspace(1e-10, 0.25, m)[::-1]
    mid = np.linspace(lo + 0.25 * width, hi - 0.25 * width, points - 2 * m)
    return np.unique(np.concatenate([left, mid, right, [hi]]))


def claimed_value(spec: ContestSpec, law: JointLaw) -> float:
    """The equilibrium payoff asserted by theory for each mode."""
    if spec.mode == Mode.NO_REGRET:
        return 1.0 / spec.n
    if spec.mode == Mode.FUTURE_REGRET:
        return 1.0 / effective_player_count(spec)
    if spec.mode == Mode.ALL_REGRET:
        c = law.marginal.tail_over_square(spec.x0, spec.n - 1)
        return (1.0 + spec.K) / spec.n - spec.K * spec.x0 * c
    if law.solution is None:
        raise ValueError("past-regret value needs a solver-backed law")
    return float(law.solution.z_star)


def certify(
    spec: ContestSpec,
    law: JointLaw,
    x_points: int = 4000,
    y_points: int = 400,
    tol: float = 1e-8,
    active_tol: float = 1e-6,
    r_scale: float = 1.0,
) -> LagrangianCertificate:
    """Evaluate the Lagrangian integrand on a dense grid and certify.

    ``r_scale`` inflates the claimed support endpoint; any value other than 1
    corrupts the certificate on purpose (negative control).
    """
    if spec.mode == Mode.PAST_REGRET:
        return _certify_past(spec, law, x_points, y_points, tol, active_tol, r_scale)
    return _certify_closed(spec, law, x_points, tol, active_tol, r_scale)


def _certify_closed(spec, law, x_points, tol, active_tol, r_scale):
    F = law.marginal
    n, K, x0 = spec.n, spec.effective_k, spec.x0
    b = F.right
    xs = _edge_dense_grid(0.0, 3.0 * b, x_points)
    fpow = F.cdf(xs) ** (n - 1)

    if spec.mode == Mode.NO_REGRET:
        lam = 1.0 / (n * x0 * r_scale)
        value = 1.0 / n
        L = fpow - lam * (xs - x0)
        mult = {"lambda": lam, "gamma": 0.0}
    elif spec.mode == Mode.FUTURE_REGRET:
        N = effective_player_count(spec)
        lam = 1.0 / (N * x0 * r_scale)
        value = 1.0 / N
        tails = np.array([F.tail_over_square(float(x), n - 1) for x in xs])
        L = (1.0 + K) * fpow - K * xs * tails - lam * (xs - x0)
        mult = {"lambda": lam, "gamma": 0.0}
    elif spec.mode == Mode.ALL_REGRET:
        lam = (1.0 + K) / (n * x0 * r_scale)
        c = F.tail_over_square(x0, n - 1)
        value = (1.0 + K) / n - K * x0 * c
        L = (1.0 + K) * fpow - K * x0 * c - lam * (xs - x0)
        mult = {"lambda": lam, "gamma": 0.0}
    else:
        raise ValueError(f"unsupported mode {spec.mode}")

    excess = L - value
    i = int(np.argmax(excess))
    on = xs <= b
    active = float(np.max(np.abs(excess[on])))
    max_violation = float(excess[i])
    passed = max_violation <= tol and active <= active_tol
    return LagrangianCertificate(
        mode=spec.mode.value, multipliers=mult, value=value,
        max_violation=max_violation, active_set_residual=active,
        grid_points=xs.size, worst_point=(float(xs[i]),),
        tol_violation=tol, tol_active=active_tol, passed=passed,
    )


def _certify_past(spec, law, x_points, y_points, tol, active_tol, r_scale):
    sol = law.solution
    if sol is None:
        raise ValueError("past-regret certification needs a solver-backed law")
    K, x0, r = sol.K, sol.x0, sol.r
    r_claim = r_scale * r
    value = float(sol.z_star)

    xs = _edge_dense_grid(0.0, r, x_points)
    psie = np.asarray(sol.psi_extended(xs))
    ys = np.linspace(x0, r, y_points)
    psi_y = np.asarray(sol.psi(ys))
    psip_y = np.asarray(sol.psi_prime(ys))

    # interior branch y in [x0, r], x <= y
    L = ((1.0 + K) * (psie[None, :] - psi_y[:, None])
         + (ys[:, None] - xs[None, :]) * psip_y[:, None])
    L = np.where(xs[None, :] <= ys[:, None] + 1e-15, L, -np.inf)
    iy, ix = np.unravel_index(int(np.argmax(L)), L.shape)
    max_violation = float(L[iy, ix])
    worst = (float(xs[ix]), float(ys[iy]))

    # y > r branch: for x <= r the integrand is (1+K)(psi_e(x) - x/r)
    Lr = (1.0 + K) * (psie - xs / r_claim)
    j = int(np.argmax(Lr))
    if Lr[j] > max_violation:
        max_violation = float(Lr[j])
        worst = (float(xs[j]), float("inf"))
    # ... and for x in (r, y] it is (1+K)(r - x)/r, negative by inspection
    x_over = np.linspace(r * (1 + 1e-9), 3.0 * r, 64)
    L_over = (1.0 + K) * (r - x_over) / r_claim
    jo = int(np.argmax(L_over))
    if L_over[jo] > max_violation:
        max_violation = float(L_over[jo])
        worst = (float(x_over[jo]), float("inf"))

    # active set: the diagonal and the reflection curve (phi(y), y); the two
    # sides go through independent inversions, so the residual is informative
    yi = ys[1:-1]
    phi_y = np.asarray(sol.phi(yi))
    psie_phi = np.asarray(sol.psi_extended(phi_y))
    psi_yi = np.asarray(sol.psi(yi))
    psip_yi = np.asarray(sol.psi_prime(yi))
    act_curve = np.abs((1.0 + K) * (psie_phi - psi_yi) + (yi - phi_y) * psip_yi)
    act_diag = np.abs((1.0 + K) * (np.asarray(sol.psi_extended(yi)) - psi_yi))
    active = float(max(np.max(act_curve), np.max(act_diag)))

    lam = float(1.0 / sol.Psi_prime_of_t(0.0)[0])
    gamma = value - x0 * lam
    mult = {"lambda": lam, "gamma": gamma, "eta": "psi'' on (x0, r), 0 beyond"}
    passed = max_violation <= tol and active <= active_tol
    return LagrangianCertificate(
        mode=spec.mode.value, multipliers=mult, value=value,
        max_violation=max_violation, active_set_residual=active,
        grid_points=int(xs.size * ys.size), worst_point=worst,
        tol_violation=tol, tol_active=active_tol, passed=passed,
    )


# ---------------------------------------------------------------------------
# feasible deviation families


def scaled_beta_deviation(a: float, b: float, x0: float) -> EquilibriumCdf:
    """Beta(a, b) law rescaled to mean x0: support [0, c] with c = x0(a+b)/a."""
    if a <= 0 or b <= 0:
        raise ValueError("beta shape parameters must be positive")
    c = x0 * (a + b) / a

    def cdf(x):
        q = np.clip(np.asarray(x, dtype=float) / c, 0.0, 1.0)
        return betainc(a, b, q)

    def pdf(x):
        return beta_dist.pdf(np.asarray(x, dtype=float) / c, a, b) / c

    def quantile(p):
        return c * betaincinv(a, b, np.asarray(p, dtype=float))

    return EquilibriumCdf(cdf, pdf, quantile, right=c, x0=x0,
                          mean_fn=lambda: x0,
                          label=f"scaled-beta(a={a:g}, b={b:g}, mean={x0:g})")


def beta_barycenter(a: float, b: float, x0: float) -> Callable:
    """b(x) = E[X | X >= x] for the scaled beta law; b(0) = x0, b(c) = c."""
    c = x0 * (a + b) / a

    def bary(x):
        q = np.clip(np.asarray(x, dtype=float) / c, 0.0, 1.0)
        denom = 1.0 - betainc(a, b, q)
        numer = 1.0 - betainc(a + 1.0, b, q)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x0 * numer / denom
        return np.where(denom < 1e-13, c * q, out)

    return bary


_BETA_SHAPES = [(aa, bb) for aa in (0.6, 1.0, 1.5, 2.5, 4.0)
                for bb in (0.6, 1.0, 2.0, 4.0)]


def deviation_family(spec: ContestSpec, count: int = 20) -> list[JointLaw]:
    """Feasible deviation joint laws with mean x0.

    For the past-regret mode each marginal is paired with its barycenter map
    M = b(X), the joint law produced by the Azema-Yor embedding; it satisfies
    the martingale (Doob) constraint exactly, so it lies in the feasible set.
    """
    if count > len(_BETA_SHAPES):
        raise ValueError(f"at most {len(_BETA_SHAPES)} deviations available")
    out = []
    for a, b in _BETA_SHAPES[:count]:
        marginal = scaled_beta_deviation(a, b, spec.x0)
        m_map = None
        if spec.mode == Mode.PAST_REGRET:
            bary = beta_barycenter(a, b, spec.x0)
            m_map = lambda x, _b=bary: np.maximum(_b(x), spec.x0)
        out.append(JointLaw(marginal=marginal, mode=spec.mode, m_map=m_map))
    return out


def best_response_gap(
    spec: ContestSpec,
    eq_law: JointLaw,
    deviations: Sequence[JointLaw],
    opponent_cdf: Optional[EquilibriumCdf] = None,
    nodes: int = 300,
    mean_tol: float = 1e-8,
):
    """Max payoff advantage of any deviation over the equilibrium.

    Returns (gap, equilibrium_value, deviation_payoffs); a certified
    equilibrium must give gap <= numerical tolerance.
    """
    F = opponent_cdf if opponent_cdf is not None else eq_law.marginal
    for d in deviations:
        if abs(d.marginal.mean() - spec.x0) > mean_tol:
            raise ValueError(
                f"infeasible deviation {d.marginal.label!r}: mean != x0")
    eq_value = expected_payoff(spec, eq_law, F, nodes=nodes)
    payoffs = [expected_payoff(spec, d, F, nodes=nodes) for d in deviations]
    gap = max(payoffs) - eq_value
    return gap, eq_value, payoffs


def compare_candidate_table(xs, Gs, reference: EquilibriumCdf, tol: float = 1e-6):
    """Check a tabulated candidate CDF against a freshly solved reference."""
    xs = np.asarray(xs, dtype=float)
    Gs = np.asarray(Gs, dtype=float)
    err = float(np.max(np.abs(reference.cdf(xs) - Gs)))
    return err, err <= tol
