"""Numerical construction of the past-regret equilibrium.

The equilibrium CDF above the starting value x0 is G(x) = psi(x)^(1/(n-1))
where psi inverts a function Psi built from an auxiliary initial value
problem: J'(u) = (J + 1 - (1-u)^(1/(n-1))) / ((K+1)(1 - u - J^(n-1))),
J(0) = 0, which blows up at u* where the denominator E = 1 - u - J^(n-1)
vanishes.  Below x0 the CDF follows the reflection boundary phi.

The integration runs in three phases to get through the blow-up cleanly:

  1. J as a function of u until the slope reaches 1,
  2. u as a function of J until E = 0, locating (J*, u*),
  3. everything as a function of t = sqrt(u* - u), where the solution is
     smooth; the state is (J, E, A, B) with A = int H dz along the path and
     B = int exp(-A), so that the endpoint gives the constant
     I = exp(A(T)) B(T) and hence the support endpoint
     r = x0 (K+1) / (K+1 - I).

Near t = 0 the slope E/t tends to C_E = sqrt(2(n-1) J*^(n-2) / (K+1)); a
first-order series seeds the phase-3 integration at a small t0.
"""
from __future__ import annotations

import io
import json
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .laws import EquilibriumCdf, JointLaw, Mode, gauss_legendre, match_shape
from .model import ContestSpec


class SolverError(RuntimeError):
    """The ODE pipeline failed to locate its events or to converge."""


def two_player_r(K: float, x0: float = 1.0) -> float:
    """Closed-form support endpoint for n = 2: r = x0 K^2 / ((K+1)(K - log(1+K)))."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    if K == 0.0:
        return 2.0 * x0
    return x0 * K * K / ((K + 1.0) * (K - np.log1p(K)))


def two_player_phi_residual(K: float, x0: float = 1.0):
    """Residual of the implicit 2-player relation between y and phibar = y - phi(y).

    Returns a function res(y, phibar) that vanishes along the reflection
    boundary; res(x0, 0) = 0 and res(r, r) = 0.
    """
    if K <= 0:
        raise ValueError("the implicit relation needs K > 0")
    c = K - np.log1p(K)

    def res(y: float, phibar: float) -> float:
        arg = 1.0 - phibar * c / (K * x0)
        if arg <= 0:
            return np.inf
        return y - (x0 - phibar / K - (x0 / c) * np.log(arg))

    return res


def solve_past_regret(spec: ContestSpec, rtol: float = 1e-12, t0: float = 1e-8):
    """Run the three-phase integration and return a PastRegretSolution."""
    if spec.mode != Mode.PAST_REGRET:
        raise ValueError("solve_past_regret expects mode 'past'")
    n, K, x0 = spec.n, float(spec.K), float(spec.x0)
    if K == 0.0:
        raise ValueError("K = 0 is the standard contest; use past_regret_law")
    p = 1.0 / (n - 1)

    def num(u, J):
        return J + 1.0 - max(1.0 - u, 0.0) ** p

    def gap(u, J):
        return 1.0 - u - J ** (n - 1)

    # phase 1: J(u) from u = 0 until J' = 1
    def f1(u, y):
        J = y[0]
        return [num(u, J) / ((K + 1.0) * gap(u, J))]

    def ev1(u, y):
        J = y[0]
        return num(u, J) - (K + 1.0) * gap(u, J)

    ev1.terminal = True
    ev1.direction = 1
    s1 = solve_ivp(f1, (0.0, 1.0), [0.0], events=ev1, rtol=rtol, atol=1e-14,
                   dense_output=True, method="DOP853")
    if s1.status != 1:
        raise SolverError(f"phase 1 did not reach the unit-slope event: {s1.message}")
    u_s = float(s1.t_events[0][0])
    J_s = float(s1.y_events[0][0][0])

    # phase 2: u(J) until E = 0, locating (J*, u*)
    def f2(J, y):
        u = y[0]
        return [(K + 1.0) * gap(u, J) / num(u, J)]

    def ev2(J, y):
        return gap(y[0], J)

    ev2.terminal = True
    ev2.direction = -1
    s2 = solve_ivp(f2, (J_s, 2.0), [u_s], events=ev2, rtol=rtol, atol=1e-14,
                   dense_output=True, method="DOP853")
    if s2.status != 1:
        raise SolverError(f"phase 2 did not reach the blow-up event: {s2.message}")
    J_star = float(s2.t_events[0][0])
    u_star = float(s2.y_events[0][0][0])
    if not 0.0 < u_star < 1.0:
        raise SolverError(f"blow-up point u* = {u_star} outside (0, 1)")
    CE = np.sqrt(2.0 * (n - 1) * J_star ** (n - 2) / (K + 1.0))
    T = np.sqrt(u_star)

    # phase 3: state (J, E, A, B) in t = sqrt(u* - u)
    def f3(t, y):
        J, E, A, B = y
        u = u_star - t * t
        nm = num(u, J)
        Jp = nm / ((K + 1.0) * E)
        return [-2.0 * t * Jp,
                2.0 * t * (1.0 + (n - 1) * J ** (n - 2) * Jp),
                2.0 * t * K / ((K + 1.0) * E),
                2.0 * t * np.exp(-A)]

    y0 = [J_star - 2.0 * t0 / ((K + 1.0) * CE),
          CE * t0,
          2.0 * K * t0 / ((K + 1.0) * CE),
          t0 * t0]
    s3 = solve_ivp(f3, (t0, T), y0, rtol=rtol, atol=[1e-14, 1e-18, 1e-14, 1e-14],
                   dense_output=True, method="DOP853")
    if s3.status != 0:
        raise SolverError(f"phase 3 failed: {s3.message}")
    JT, ET, AT, BT = (float(v) for v in s3.y[:, -1])
    if abs(JT) > 1e-6 or abs(ET - 1.0) > 1e-6:
        raise SolverError(
            f"phase 3 endpoint off the known boundary: J(T)={JT:.3e}, E(T)-1={ET - 1.0:.3e}"
        )
    I = np.exp(AT) * BT
    if not I < K + 1.0:
        raise SolverError(f"integral I = {I} is not below K+1 = {K + 1.0}")
    r = x0 * (K + 1.0) / (K + 1.0 - I)
    return PastRegretSolution(spec, u_star, J_star, r, I, s3, T, t0, CE, AT, BT)


class PastRegretSolution:
    """Dense solution of the past-regret system with derived maps.

    The natural parameter is t = sqrt(u* - u) = sqrt(z - z*) running over
    [0, T]; t = 0 is the starting value x0, t = T the support endpoint r.
    All maps (Psi, phi, theta, the CDF branches) are smooth in t.
    """

    def __init__(self, spec, u_star, J_star, r, I, sol, T, t0, CE, AT, BT):
        self.spec = spec
        self.n = spec.n
        self.K = float(spec.K)
        self.x0 = float(spec.x0)
        self.u_star = u_star
        self.z_star = 1.0 - u_star
        self.J_star = J_star
        self.r = r
        self.I = I
        self.T = T
        self._sol = sol
        self._t0 = t0
        self._CE = CE
        self._AT = AT
        self._BT = BT
        self._xi_table: Optional[tuple] = None
        self._phi_of_max: Optional[PchipInterpolator] = None

    # -- state evaluation ---------------------------------------------------

    def states(self, t):
        """(J, E, A, B) at parameter values t; series below the seed t0."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t = np.clip(t, 0.0, self.T)
        out = np.empty((4,) + t.shape)
        inner = t >= self._t0
        if np.any(inner):
            out[:, inner] = self._sol.sol(t[inner]).reshape(4, -1)
        if np.any(~inner):
            ts = t[~inner]
            K, CE = self.K, self._CE
            out[0, ~inner] = self.J_star - 2.0 * ts / ((K + 1.0) * CE)
            out[1, ~inner] = CE * ts
            out[2, ~inner] = 2.0 * K * ts / ((K + 1.0) * CE)
            out[3, ~inner] = ts * ts
        return out

    def z_of_t(self, t):
        t = np.asarray(t, dtype=float)
        return self.z_star + t * t

    def Psi_of_t(self, t):
        _, _, A, B = self.states(t)
        return self.r - (self.r / (self.K + 1.0)) * np.exp(self._AT) * (self._BT - B)

    def Psi_prime_of_t(self, t):
        _, _, A, _ = self.states(t)
        return (self.r / (self.K + 1.0)) * np.exp(self._AT - A)

    def phi_of_t(self, t):
        J, E, A, B = self.states(t)
        Psi = self.r - (self.r / (self.K + 1.0)) * np.exp(self._AT) * (self._BT - B)
        Pp = (self.r / (self.K + 1.0)) * np.exp(self._AT - A)
        return Psi - (self.K + 1.0) * E * Pp

    def theta_of_t(self, t):
        J = self.states(t)[0]
        return J ** (self.n - 1)

    def dJdt(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        J, E, _, _ = self.states(t)
        u = self.u_star - t * t
        nm = J + 1.0 - np.clip(1.0 - u, 0.0, None) ** (1.0 / (self.n - 1))
        return -2.0 * t * nm / ((self.K + 1.0) * E)

    def dEdt(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        J, E, _, _ = self.states(t)
        u = self.u_star - t * t
        nm = J + 1.0 - np.clip(1.0 - u, 0.0, None) ** (1.0 / (self.n - 1))
        Jp = nm / ((self.K + 1.0) * E)
        return 2.0 * t * (1.0 + (self.n - 1) * J ** (self.n - 2) * Jp)

    def dphidt(self, t):
        return (self.K + 1.0) * self.Psi_prime_of_t(t) * (2.0 * np.atleast_1d(t) - self.dEdt(t))

    # -- inversions ----------------------------------------------------------

    def _bisect(self, f, target, increasing: bool, iters: int = 60):
        """Vectorized bisection for f(t) = target on [0, T]."""
        target = np.atleast_1d(np.asarray(target, dtype=float))
        lo = np.zeros_like(target)
        hi = np.full_like(target, self.T)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            val = f(mid)
            go_up = (val < target) if increasing else (val > target)
            lo = np.where(go_up, mid, lo)
            hi = np.where(go_up, hi, mid)
        return 0.5 * (lo + hi)

    def t_of_y(self, y):
        """Invert y = Psi(z(t)) for y in [x0, r]."""
        y = np.clip(np.atleast_1d(np.asarray(y, dtype=float)), self.x0, self.r)
        return self._bisect(self.Psi_of_t, y, increasing=True)

    def t_of_phi(self, x):
        """Invert x = phi(t) for x in [0, x0]."""
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), 0.0, self.x0)
        return self._bisect(self.phi_of_t, x, increasing=False)

    # -- maps on [x0, r] -----------------------------------------------------

    def psi(self, y):
        return match_shape(y, self.z_of_t(self.t_of_y(y)))

    def psi_prime(self, y):
        return match_shape(y, 1.0 / self.Psi_prime_of_t(self.t_of_y(y)))

    def psi_second(self, y):
        t = self.t_of_y(y)
        E = self.states(t)[1]
        H = self.K / ((self.K + 1.0) * E)
        return match_shape(y, H / self.Psi_prime_of_t(t) ** 2)

    def phi(self, y):
        return match_shape(y, self.phi_of_t(self.t_of_y(y)))

    def theta(self, y):
        return match_shape(y, self.theta_of_t(self.t_of_y(y)))

    def phi_inverse(self, x):
        """The reflection boundary inverted: maps x in [0, x0] to y in [x0, r]."""
        return match_shape(x, self.Psi_of_t(self.t_of_phi(x)))

    def psi_extended(self, x_in):
        """psi on [x0, r], extended below x0 by theta along the boundary."""
        x = np.atleast_1d(np.asarray(x_in, dtype=float))
        out = np.empty_like(x)
        lower = x < self.x0
        if np.any(~lower):
            out[~lower] = self.psi(x[~lower])
        if np.any(lower):
            xs = np.clip(x[lower], 0.0, None)
            out[lower] = self.theta_of_t(self.t_of_phi(xs))
        return match_shape(x_in, out)

    def H(self, z):
        """H(z) = K / ((K+1)(z - J(1-z)^(n-1))) on (z*, 1]; diverges at z*."""
        zarr = np.asarray(z, dtype=float)
        if np.any(zarr <= self.z_star) or np.any(zarr > 1.0 + 1e-12):
            raise ValueError("H is defined on (z*, 1]")
        t = np.sqrt(zarr - self.z_star)
        E = self.states(t)[1]
        return match_shape(z, self.K / ((self.K + 1.0) * E))

    def J_of_u(self, u):
        """The auxiliary function J on [0, u*]."""
        uarr = np.asarray(u, dtype=float)
        if np.any(uarr < 0) or np.any(uarr > self.u_star + 1e-12):
            raise ValueError("J is tabulated on [0, u*]")
        return match_shape(
            u, self.states(np.sqrt(np.clip(self.u_star - uarr, 0.0, None)))[0])

    # -- distribution --------------------------------------------------------

    def cdf(self, x_in):
        x = np.atleast_1d(np.asarray(x_in, dtype=float))
        out = np.empty_like(x)
        out[x <= 0] = 0.0
        out[x >= self.r] = 1.0
        hi = (x >= self.x0) & (x < self.r)
        lo = (x > 0) & (x < self.x0)
        if np.any(hi):
            out[hi] = self.psi(x[hi]) ** (1.0 / (self.n - 1))
        if np.any(lo):
            out[lo] = self.states(self.t_of_phi(x[lo]))[0]
        return match_shape(x_in, out)

    def pdf(self, x_in):
        x = np.atleast_1d(np.asarray(x_in, dtype=float))
        out = np.zeros_like(x)
        hi = (x >= self.x0) & (x < self.r)
        lo = (x > 0) & (x < self.x0)
        if np.any(hi):
            t = self.t_of_y(x[hi])
            z = self.z_of_t(t)
            out[hi] = z ** ((2.0 - self.n) / (self.n - 1)) / (
                (self.n - 1) * self.Psi_prime_of_t(t))
        if np.any(lo):
            t = self.t_of_phi(x[lo])
            out[lo] = self.dJdt(t) / self.dphidt(t)
        return match_shape(x_in, out)

    def quantile(self, pr_in):
        pr = np.atleast_1d(np.asarray(pr_in, dtype=float))
        if np.any((pr < 0) | (pr > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        out = np.empty_like(pr)
        hi = pr >= self.J_star
        if np.any(hi):
            # upper branch: G = z^(1/(n-1)) and y = Psi(z)
            z = pr[hi] ** (self.n - 1)
            out[hi] = self.Psi_of_t(np.sqrt(np.clip(z - self.z_star, 0.0, None)))
        if np.any(~hi):
            # lower branch: G = J(t), y = phi(t); J decreases in t
            t = self._bisect(lambda t: self.states(t)[0], pr[~hi], increasing=False)
            out[~hi] = self.phi_of_t(t)
        return match_shape(pr_in, out)

    def m_map(self, x_in):
        """Running maximum given the stopped value: x above x0, phi^-1 below."""
        x = np.atleast_1d(np.asarray(x_in, dtype=float))
        out = np.array(x, dtype=float, copy=True)
        lower = x < self.x0
        if np.any(lower):
            out[lower] = self.phi_inverse(x[lower])
        return match_shape(x_in, out)

    # -- functionals ---------------------------------------------------------

    def mean(self, nodes: int = 400) -> float:
        """Mean of the stopped-value law, via smooth t-space quadratures."""
        up = gauss_legendre(
            lambda t: self.z_of_t(t) ** (1.0 / (self.n - 1))
            * self.Psi_prime_of_t(t) * 2.0 * t, 0.0, self.T, nodes)
        low = gauss_legendre(
            lambda t: self.states(t)[0] * (-self.dphidt(t)), 0.0, self.T, nodes)
        return self.r - (up + low)

    def expected_payoff_self(self, nodes: int = 400) -> float:
        """Exact equilibrium payoff (1+K) E[G^(n-1)(X)] - K E[G^(n-1)(M)].

        Evaluates to psi(x0) = z*; kept as an independent quadrature so the
        identity can be tested rather than assumed.
        """
        n, K = self.n, self.K
        int_z_dJ = gauss_legendre(
            lambda t: self.z_of_t(t) * (-self.dJdt(t)), 0.0, self.T, nodes)
        return ((1.0 - self.z_star ** (n / (n - 1.0))) / n
                + (1.0 + K) * self.J_star ** n / n - K * int_z_dJ)

    def doob_residual(self, m, nodes: int = 400) -> float:
        """Residual of E[(X - m); M >= m] = 0 for m in (x0, r)."""
        m = float(m)
        if not self.x0 < m < self.r:
            raise ValueError("the constraint is checked on (x0, r)")
        pm = float(self.phi(m))
        tm = float(self.t_of_y(m)[0])
        int_low = gauss_legendre(
            lambda t: self.states(t)[0] * (-self.dphidt(t)), 0.0, tm, nodes)
        int_up = gauss_legendre(
            lambda t: self.z_of_t(t) ** (1.0 / (self.n - 1))
            * self.Psi_prime_of_t(t) * 2.0 * t, 0.0, tm, nodes)
        return m - self.x0 + (m - pm) * float(self.cdf(pm)) - (int_low + int_up)

    # -- packaging -----------------------------------------------------------

    def equilibrium_cdf(self) -> EquilibriumCdf:
        return EquilibriumCdf(
            self.cdf, self.pdf, self.quantile, right=self.r, x0=self.x0,
            mean_fn=self.mean,
            label=f"past-regret(n={self.n}, K={self.K:g}, x0={self.x0:g})",
        )

    def joint_law(self) -> JointLaw:
        return JointLaw(
            marginal=self.equilibrium_cdf(), mode=Mode.PAST_REGRET,
            m_map=self.m_map, phi=lambda y: self.phi(y), solution=self,
        )

    # -- stopping-rule tables -------------------------------------------------

    def phi_of_max(self, m):
        """phi as a function of the running maximum, interpolated for stepping."""
        if self._phi_of_max is None:
            t = np.linspace(0.0, self.T, 4096)
            y = np.asarray(self.Psi_of_t(t))
            ph = np.asarray(self.phi_of_t(t))
            keep = np.concatenate([[True], np.diff(y) > 0])
            self._phi_of_max = PchipInterpolator(y[keep], ph[keep])
        m = np.clip(np.asarray(m, dtype=float), self.x0, self.r)
        return np.clip(self._phi_of_max(m), 0.0, self.x0)

    def _build_xi_table(self):
        # cumulative hazard of the randomized threshold xi in t-space; the
        # integrand has a log divergence at t = T, so the grid is geometric
        # in u = u* - t^2 near the endpoint
        v = np.concatenate([np.linspace(1.0, 0.1, 2500),
                            np.geomspace(0.1, 1e-14, 2500)[1:]])
        u = self.u_star * v
        t = np.sqrt(self.u_star - u)
        z = self.z_of_t(t)
        J = self.states(t)[0]
        e = 1.0 / (self.n - 1)
        denom = 1.0 - z ** e + J
        integrand = e * z ** (e - 1.0) * 2.0 * t / denom
        lam = np.concatenate([[0.0], np.cumsum(
            0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t))])
        s = np.asarray(self.Psi_of_t(t))
        keep = np.concatenate([[True], np.diff(lam) > 0])
        self._xi_table = (lam[keep], s[keep])

    def xi_survival(self, s) -> float:
        """P(xi >= s): survival of the randomized Perkins threshold."""
        if self._xi_table is None:
            self._build_xi_table()
        lam, sv = self._xi_table
        s = float(s)
        if s < self.x0:
            raise ValueError("survival defined for s >= x0")
        if s >= self.r:
            return 0.0
        return float(np.exp(-np.interp(s, sv, lam)))

    def sample_xi(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw thresholds xi by inverting the cumulative hazard."""
        if self._xi_table is None:
            self._build_xi_table()
        lam, sv = self._xi_table
        eps = rng.exponential(size=count)
        return np.interp(eps, lam, sv, right=self.r)

    # -- export ----------------------------------------------------------------

    def header(self) -> dict:
        return {
            "n": self.n, "x0": self.x0, "K": self.K, "r": self.r,
            "z_star": self.z_star, "u_star": self.u_star,
            "psi_x0": self.z_star,
        }

    def export_table(self, points: int = 512):
        """Grid of (x, G, g, M_of_x) over (0, r) for CSV export."""
        x = np.linspace(0.0, self.r, points + 1)[1:]
        return x, self.cdf(x), self.pdf(x), self.m_map(x)


def past_regret_law(spec: ContestSpec, rtol: float = 1e-12) -> JointLaw:
    """Equilibrium joint law for the past-regret mode; K = 0 is the standard law."""
    if spec.mode != Mode.PAST_REGRET:
        raise ValueError("past_regret_law expects mode 'past'")
    if spec.K == 0.0:
        from .laws import power_law_cdf

        marginal = power_law_cdf(spec.n, spec.x0)
        # without a penalty the running maximum never matters; report it as
        # the stopped value capped below at x0 so joint invariants still hold
        return JointLaw(marginal=marginal, mode=Mode.PAST_REGRET,
                        m_map=lambda x: np.maximum(x, spec.x0),
                        phi=lambda y: np.full_like(np.asarray(y, float), 0.0))
    return solve_past_regret(spec, rtol=rtol).joint_law()
