"""Relativistic stellar structure: steady states indexed by central redshift.

The structure equations are integrated in the enthalpy potential y(r)
(log specific enthalpy measured from the surface) and mass function m(r):

    y'(r) = -(m/r^2 + 4 pi r p) / (1 - 2m/r),     y(0) = kappa,
    m'(r) = 4 pi r^2 rho,                          m(0) = 0,

with rho = g(y) the enthalpy inverse of the equation of state and p = p(rho).
The parameter kappa > 0 fixes the central redshift z = e^kappa - 1.  y is
strictly decreasing and hits zero at the stellar surface R; outside, the
metric is vacuum Schwarzschild.  Metric reconstruction:

    e^{-2 lambda} = 1 - 2m/r,    mu(r) = mu_R - y(r),
    mu_R = (1/2) ln(1 - 2M/R),

which makes e^{2 mu(R)} = 1 - 2M/R an identity of the representation.

Integration uses an adaptive embedded Runge-Kutta pair started from the
series y = kappa - 2 pi (rho_c/3 + p_c) r^2, m = (4 pi/3) rho_c r^3 on
[0, r_min], with the surface located by event root-finding on y = 0.  The
output grid keeps the solver's accepted steps and densifies near R with
algebraic clustering matching the boundary-layer exponent 1/(gamma-1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ._grids import graded_nodes, merge_nodes
from .errors import (ConsistencyError, DomainError, HorizonError,
                     IntegrationError)

FOURPI = 4.0 * np.pi
SCHEMA_VERSION = 1


@dataclass
class SolverConfig:
    """Adaptive-integrator knobs for solve_steady_state."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12       # floor, scaled by the state magnitudes
    r_min_factor: float = 1e-3   # series start-off ends at this fraction of r_scale
    r_max_factor: float = 200.0  # first-attempt span multiple (extends x256)
    max_step_factor: float = 0.25
    surface_tol: float = 1e-9    # bound on |y(R)| after event refinement
    tail_fraction: float = 0.12  # width of the surface-clustered output band
    tail_nodes: int = 48
    horizon_guard: float = 0.95  # abort when 2m/r crosses this


@dataclass
class SteadyState:
    """One equilibrium star: profiles on a radial grid plus scalars.

    Arrays share the grid; grid[0] = 0 and grid[-1] = R exactly, with
    rho = p = 0 snapped at the surface node.  `lam` and `mu` are the metric
    exponentials' logarithms (e^{-2 lam} = 1 - 2m/r).
    """

    kappa: float
    z: float
    grid: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    m: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    R: float
    M: float
    Nbar: float
    mu_R: float
    eos: object
    solver_diag: dict = field(default_factory=dict)
    newtonian: bool = False

    # --- profile accessors -------------------------------------------------
    # C^1 Hermite interpolation with the exact ODE slopes at the nodes; all
    # accessors are vectorized and valid on [0, inf), switching to the
    # vacuum closed forms beyond R.

    def _hermites(self):
        try:
            return self._pp
        except AttributeError:
            pass
        r = self.grid
        safe = np.where(r > 0, r, 1.0)
        if self.newtonian:
            dy = -self.m / safe**2
        else:
            one_minus = 1.0 - 2.0 * self.m / safe
            dy = -(self.m / safe**2 + FOURPI * r * self.p) / one_minus
        dy[0] = 0.0
        dm = FOURPI * r**2 * self.rho
        self._pp = (CubicHermiteSpline(r, self.y, dy),
                    CubicHermiteSpline(r, self.m, dm))
        return self._pp

    def y_at(self, r):
        r = np.asarray(r, dtype=float)
        yin, _ = self._hermites()
        inside = r < self.R
        out = np.empty(r.shape)
        out[inside] = yin(r[inside])
        rout = np.where(~inside, r, self.R)
        if self.newtonian:
            out[~inside] = (self.M / rout - self.M / self.R)[~inside]
        else:
            out[~inside] = (self.mu_R
                            - 0.5 * np.log1p(-2.0 * self.M / rout))[~inside]
        return out

    def dy_at(self, r):
        """y'(r), exact ODE slopes at nodes, vacuum closed form beyond R."""
        r = np.asarray(r, dtype=float)
        yin, _ = self._hermites()
        inside = r < self.R
        out = np.empty(r.shape)
        out[inside] = yin(r[inside], 1)
        rout = np.where(~inside, r, self.R)
        if self.newtonian:
            out[~inside] = (-self.M / rout**2)[~inside]
        else:
            out[~inside] = (-self.M / (rout * (rout - 2.0 * self.M)))[~inside]
        return out

    def m_at(self, r):
        r = np.asarray(r, dtype=float)
        _, mpp = self._hermites()
        return np.where(r < self.R, mpp(np.minimum(r, self.R)), self.M)

    def rho_at(self, r):
        return self.eos.density_of_enthalpy(np.maximum(self.y_at(r), 0.0))

    def p_at(self, r):
        rho = np.asarray(self.rho_at(r))
        out = np.zeros_like(rho)
        pos = rho > 0
        out[pos] = self.eos.pressure(rho[pos])
        return out

    def lam_at(self, r):
        if self.newtonian:
            return np.zeros(np.shape(np.asarray(r, dtype=float)))
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        return -0.5 * np.log1p(-2.0 * self.m_at(r) / safe)

    def mu_at(self, r):
        if self.newtonian:
            return np.zeros(np.shape(np.asarray(r, dtype=float)))
        return self.mu_R - self.y_at(r)

    def dmu_at(self, r):
        """mu'(r) = -y'(r), from the structure equation (no numerical diff)."""
        if self.newtonian:
            return np.zeros(np.shape(np.asarray(r, dtype=float)))
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        m = self.m_at(r)
        num = m / safe**2 + FOURPI * r * self.p_at(r)
        return np.where(r > 0, num / (1.0 - 2.0 * m / safe), 0.0)

    def metric_slope_sum_at(self, r):
        """mu' + lambda' = 4 pi r e^{2 lambda} (rho + p); zero in vacuum."""
        if self.newtonian:
            return np.zeros(np.shape(np.asarray(r, dtype=float)))
        r = np.asarray(r, dtype=float)
        rho = np.asarray(self.rho_at(r))
        p = np.asarray(self.p_at(r))
        safe = np.where(r > 0, r, 1.0)
        e2lam = 1.0 / (1.0 - 2.0 * self.m_at(r) / safe)
        return FOURPI * r * e2lam * (rho + p)

    # --- serialization -----------------------------------------------------

    def to_json(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "kappa": self.kappa, "z": self.z, "R": self.R, "M": self.M,
            "Nbar": self.Nbar, "mu_R": self.mu_R,
            "eos": self.eos.descriptor() if self.eos is not None else None,
            "solver_diag": self.solver_diag,
            "newtonian": self.newtonian,
        }
        for name in ("grid", "y", "rho", "p", "m", "lam", "mu"):
            d[name] = np.asarray(getattr(self, name)).tolist()
        return json.dumps(d, sort_keys=True)

    def to_csv_rows(self):
        """Yield 'r,y,rho,p,m,lambda,mu' lines (header first)."""
        yield "r,y,rho,p,m,lambda,mu"
        for i in range(self.grid.size):
            yield ",".join(repr(float(v)) for v in (
                self.grid[i], self.y[i], self.rho[i], self.p[i],
                self.m[i], self.lam[i], self.mu[i]))


def _integrate(eos, kappa, cfg, newtonian=False):
    """Shared adaptive integration core for the two structure systems.

    With `newtonian` the relativistic corrections are switched off: the
    1/(1 - 2m/r) factor and the 4 pi r p forcing drop from y', and the
    series curvature loses its pressure term.  Everything else -- start-off,
    event-located surface, output grid, consistency checks -- is identical.
    """
    rho_c = float(eos.density_of_enthalpy(kappa))
    p_c = eos.pressure_scalar(rho_c)
    curv = (2.0 * np.pi * rho_c / 3.0 if newtonian
            else 2.0 * np.pi * (rho_c / 3.0 + p_c))
    r_scale = np.sqrt(kappa / curv)
    r0 = cfg.r_min_factor * r_scale
    y0 = kappa - curv * r0**2
    m0 = FOURPI / 3.0 * rho_c * r0**3

    g_fast = eos._g_fast
    p_scalar = eos.pressure_scalar
    guard = cfg.horizon_guard

    if newtonian:
        def rhs(r, s):
            y, m = s
            rho = g_fast(y if y < kappa else kappa)
            return -m / (r * r), FOURPI * r * r * rho
    else:
        def rhs(r, s):
            y, m = s
            rho = g_fast(y if y < kappa else kappa)
            p = p_scalar(rho) if rho > 0.0 else 0.0
            # floor the metric factor so speculative trial steps stay
            # finite; real crossings terminate through the horizon event
            one_minus = max(1.0 - 2.0 * m / r, 1e-12)
            return (-(m / (r * r) + FOURPI * r * p) / one_minus,
                    FOURPI * r * r * rho)

    def surface(r, s):
        return s[0]
    surface.terminal = True
    surface.direction = -1.0

    def horizon(r, s):
        return guard - 2.0 * s[1] / r
    horizon.terminal = True
    horizon.direction = -1.0
    events = [surface] if newtonian else [surface, horizon]

    # The span estimate tracks the central curvature scale, which collapses
    # for very condensed cores while the envelope stays wide; double the
    # span a few times before declaring the configuration unbounded.
    for attempt in range(5):
        r_end = cfg.r_max_factor * r_scale * 4.0**attempt
        sol = solve_ivp(
            rhs, (r0, r_end), [y0, m0], method="RK45",
            rtol=cfg.rel_tol,
            atol=[cfg.abs_tol * max(kappa, 1e-30), cfg.abs_tol * m0 / cfg.r_min_factor**3],
            events=events, dense_output=True,
            max_step=cfg.max_step_factor * r_scale * 4.0**attempt)
        if sol.status < 0:
            raise IntegrationError(f"integrator failed: {sol.message}")
        if not newtonian and sol.t_events[1].size:
            r_h = float(sol.t_events[1][0])
            m_h = float(sol.y_events[1][0][1])
            raise HorizonError(
                f"2m/r reached {2.0 * m_h / r_h:.4f} at r = {r_h:.6g}")
        if sol.status == 1 and sol.t_events[0].size:
            break
    else:
        raise IntegrationError(
            f"no surface found before r = {r_end:.6g} (kappa = {kappa})")

    R = float(sol.t_events[0][0])
    y_R, M = (float(v) for v in sol.y_events[0][0])
    if abs(y_R) > cfg.surface_tol * max(kappa, 1.0):
        raise ConsistencyError(
            f"surface event left |y(R)| = {abs(y_R):.3g} above tolerance")

    # output grid: series region, accepted steps, surface-clustered tail
    alpha = 1.0 / (eos.gamma_low - 1.0)
    W = min(cfg.tail_fraction * R, R - r0)
    inner = sol.t[sol.t < R - W]
    tail = graded_nodes(R - W, R, cfg.tail_nodes, power=alpha, cluster_at="right")
    grid = merge_nodes(np.array([0.0, 0.35 * r0, 0.7 * r0]), inner, tail)
    grid[-1] = R

    y = np.empty_like(grid)
    m = np.empty_like(grid)
    series = grid < r0
    y[series] = kappa - curv * grid[series] ** 2
    m[series] = FOURPI / 3.0 * rho_c * grid[series] ** 3
    mid = ~series
    ym = sol.sol(grid[mid])
    y[mid], m[mid] = ym[0], ym[1]
    y[-1], m[-1] = y_R, M

    rho = np.asarray(eos.density_of_enthalpy(np.maximum(y, 0.0)))
    p = np.zeros_like(rho)
    p[rho > 0] = eos.pressure(rho[rho > 0])
    rho[-1] = p[-1] = 0.0

    if np.any(np.diff(y) >= 0.0):
        raise ConsistencyError("enthalpy potential is not strictly decreasing")
    # dense-output wiggle in flat tails sits at the integration tolerance
    if np.any(np.diff(m) < -cfg.rel_tol * M):
        raise ConsistencyError("mass function decreased")
    compact = 2.0 * m[1:] / grid[1:]
    if not newtonian and np.max(compact) > 8.0 / 9.0 + 1e-10:
        raise ConsistencyError(
            f"compactness bound violated: max 2m/r = {np.max(compact):.6f}")

    diag = {
        "rhs_evaluations": int(sol.nfev),
        "accepted_steps": int(sol.t.size - 1),
        "surface_residual": abs(y_R),
        "r_scale": float(r_scale),
        "rel_tol": cfg.rel_tol,
        "max_compactness": float(np.max(compact)),
    }
    return grid, y, m, rho, p, R, M, diag


def solve_steady_state(eos, kappa, cfg=None):
    """Integrate one equilibrium at central enthalpy potential kappa.

    Raises DomainError for kappa outside (0, Q(rho_cap)], HorizonError if
    2m/r approaches 1 (impossible under the structural EOS assumptions), and
    IntegrationError when no surface is found before r_max.
    """
    cfg = cfg or SolverConfig()
    kappa = float(kappa)
    q_cap = float(eos._Q_nodes[-1])
    if not 0.0 < kappa <= q_cap:
        raise DomainError(
            f"kappa = {kappa} outside (0, Q(rho_cap) = {q_cap:.6g}]")

    grid, y, m, rho, p, R, M, diag = _integrate(eos, kappa, cfg)

    safe = np.where(grid > 0, grid, 1.0)
    lam = -0.5 * np.log1p(-2.0 * m / safe)
    lam[0] = 0.0
    mu_R = 0.5 * np.log1p(-2.0 * M / R)
    mu = mu_R - y

    try:
        nb = np.zeros_like(rho)
        nb[rho > 0] = eos.baryon_density(rho[rho > 0])
        Nbar = float(FOURPI * simpson(np.exp(lam) * nb * grid**2, x=grid))
    except DomainError:
        Nbar = float("nan")

    return SteadyState(
        kappa=kappa, z=float(np.expm1(kappa)), grid=grid, y=y, rho=rho, p=p,
        m=m, lam=lam, mu=mu, R=R, M=M, Nbar=Nbar, mu_R=float(mu_R), eos=eos,
        solver_diag=diag)


def extend_exterior(state, r):
    """Vacuum continuation (y, mu, lam) for r >= R; continuous at the surface."""
    r = np.asarray(r, dtype=float)
    if np.any(r < state.R * (1.0 - 1e-12)):
        raise DomainError("extend_exterior: need r >= R")
    y = state.y_at(r)
    return y, state.mu_at(r), state.lam_at(r)


def compressibility_weights(state, r):
    """Pointwise stiffness weights entering the stability forms.

    Returns (psi, psi_inv, drho_dy) where psi = e^{-mu} p'/(rho + p) on the
    star's interior and psi_inv = e^{mu} (rho + p)/p' its reciprocal,
    extended continuously by zero outside (psi is +inf there).  The identity
    e^{-mu} psi_inv = drho_dy(y(r)) ties the weight to the enthalpy inverse.
    """
    r = np.asarray(r, dtype=float)
    y = state.y_at(r)
    rho = np.asarray(state.eos.density_of_enthalpy(np.maximum(y, 0.0)))
    inside = rho > 0.0
    psi = np.full(r.shape, np.inf)
    psi_inv = np.zeros(r.shape)
    drho = np.zeros(r.shape)
    if np.any(inside):
        p = state.eos.pressure(rho[inside])
        dp = state.eos.sound_speed_sq(rho[inside])
        emu = np.exp(state.mu_at(r[inside]))
        psi[inside] = dp / ((rho[inside] + p) * emu)
        psi_inv[inside] = emu * (rho[inside] + p) / dp
        drho[inside] = (rho[inside] + p) / dp
    return psi, psi_inv, drho
