"""Lane-Emden limit system and the kappa-rescaling that connects to it.

In the zero-pressure-support limit the structure equations reduce to

    y'(s) = -m(s)/s^2,    m'(s) = 4 pi s^2 g0(y),    y(0) = 1,

with the limiting enthalpy inverse of a polytrope P = k rho^gamma:

    g0(y) = k^{-alpha} ((gamma-1)/gamma)^alpha y_+^alpha,  alpha = 1/(gamma-1).

A relativistic state at small central parameter kappa approaches the
Lane-Emden profile under the rescaling

    s = kappa^a r,  a = (alpha-1)/2,
    ybar = y/kappa,  mbar = kappa^{(alpha-3)/2} m,
    rhobar = rho/kappa^alpha,  pbar = p/kappa^{alpha+1},

which turns the structure system into an exact identity

    ybar'(s) = -(mbar/s^2 + 4 pi kappa s pbar) / (1 - 2 kappa mbar/s),

so the only model error is rhobar vs g0(ybar).  The C^1 distance
E(kappa) = max |ybar - y0| + max |ybar' - y0'| decays linearly in kappa;
`newtonian_limit_check` measures the realized rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tov
from .errors import DomainError

FOURPI = 4.0 * np.pi


class LimitEos:
    """Zero-pressure-support closure of a k rho^gamma polytrope.

    Implements just enough of the equation-of-state API for the shared
    structure integrator and the stability forms: the limiting enthalpy
    inverse g0 and its companions, all closed-form.
    """

    def __init__(self, k, gamma):
        if not 1.0 < gamma <= 2.0:
            raise DomainError(f"limit system needs 1 < gamma <= 2, got {gamma}")
        if k <= 0.0:
            raise DomainError(f"k must be positive, got {k}")
        self.k = float(k)
        self.gamma = float(gamma)
        self.alpha = 1.0 / (self.gamma - 1.0)
        self.gamma_low = self.gamma
        self.k_low = self.k
        self._amp = (((self.gamma - 1.0) / self.gamma) ** self.alpha
                     * self.k ** -self.alpha)

    def density_of_enthalpy(self, y):
        y = np.asarray(y, dtype=float)
        out = self._amp * np.where(y > 0.0, y, 0.0) ** self.alpha
        return out if out.ndim else float(out)

    def _g_fast(self, y):
        return self._amp * y**self.alpha if y > 0.0 else 0.0

    def drho_dy(self, y):
        """g0'(y) = alpha g0(y)/y, continuously zero where y <= 0."""
        y = np.asarray(y, dtype=float)
        return (self.alpha * self._amp
                * np.where(y > 0.0, y, 0.0) ** (self.alpha - 1.0))

    def enthalpy(self, rho):
        rho = np.asarray(rho, dtype=float)
        return (self.k * self.gamma / (self.gamma - 1.0)
                * rho ** (self.gamma - 1.0))

    def pressure(self, rho):
        return self.k * np.asarray(rho, dtype=float) ** self.gamma

    def pressure_scalar(self, rho):
        return self.k * rho**self.gamma

    def sound_speed_sq(self, rho):
        return self.k * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def baryon_density(self, rho):
        return np.asarray(rho, dtype=float)

    def descriptor(self):
        return {"kind": "newtonian_limit", "k": self.k, "gamma": self.gamma}


@dataclass
class LaneEmdenState(tov.SteadyState):
    """Lane-Emden profile in the SteadyState container (metric trivial).

    Aliases: s = grid, y0 = y, rho0 = rho, m0 = m, S0 = R, M0 = M; the
    class keyword y0(0) = 1 so kappa = 1 identically.
    """

    gamma: float = 0.0
    k: float = 0.0
    alpha: float = 0.0

    @property
    def s(self):
        return self.grid

    @property
    def y0(self):
        return self.y

    @property
    def rho0(self):
        return self.rho

    @property
    def m0(self):
        return self.m

    @property
    def S0(self):
        return self.R

    @property
    def M0(self):
        return self.M


def solve_lane_emden(gamma, k=1.0, cfg=None):
    """Integrate the limit system for a k rho^gamma polytrope; y(0) = 1.

    Shares the adaptive integrator, surface event handling, and output-grid
    construction with the relativistic solver; only the right-hand side
    switches.  gamma = 2 is the linear borderline case with the closed-form
    profile sin(omega s)/(omega s), omega^2 = 2 pi g0'(0+) -- kept inside the
    admissible range for test anchoring.
    """
    cfg = cfg or tov.SolverConfig()
    limit = LimitEos(k, gamma)
    grid, y, m, rho, p, S, M, diag = tov._integrate(limit, 1.0, cfg,
                                                    newtonian=True)
    zeros = np.zeros_like(grid)
    return LaneEmdenState(
        kappa=1.0, z=float(np.expm1(1.0)), grid=grid, y=y, rho=rho, p=p, m=m,
        lam=zeros, mu=zeros.copy(), R=S, M=M, Nbar=M, mu_R=0.0, eos=limit,
        solver_diag=diag, newtonian=True,
        gamma=limit.gamma, k=limit.k, alpha=limit.alpha)


@dataclass
class RescaledState:
    """A relativistic state in Lane-Emden variables, on a reference grid."""

    kappa: float
    a: float
    alpha: float
    s: np.ndarray
    ybar: np.ndarray
    dybar: np.ndarray
    mbar: np.ndarray
    rhobar: np.ndarray
    pbar: np.ndarray

    def ivp_residual(self):
        """ybar' + (mbar/s^2 + 4 pi kappa s pbar)/(1 - 2 kappa mbar/s).

        Exactly zero in the continuum for any state -- the rescaling is a
        change of variables -- so the return measures interpolation error.
        Skips s = 0 where both terms vanish.
        """
        s = self.s[1:]
        drag = 1.0 - 2.0 * self.kappa * self.mbar[1:] / s
        forcing = (self.mbar[1:] / s**2
                   + FOURPI * self.kappa * s * self.pbar[1:]) / drag
        return self.dybar[1:] + forcing


def rescale_state(state, grid=None):
    """Map a relativistic state to Lane-Emden variables.

    Resamples onto `grid` in the rescaled radius s (default: the state's own
    grid mapped to s = kappa^a r), using the state's monotone interpolants
    and the vacuum continuation beyond the surface, so any reference grid is
    acceptable.
    """
    alpha = 1.0 / (state.eos.gamma_low - 1.0)
    a = (alpha - 1.0) / 2.0
    kappa = state.kappa
    scale = kappa**a
    if grid is None:
        grid = state.grid * scale
    s = np.asarray(grid, dtype=float)
    r = s / scale
    return RescaledState(
        kappa=kappa, a=a, alpha=alpha, s=s,
        ybar=state.y_at(r) / kappa,
        dybar=state.dy_at(r) * kappa ** (-1.0 - a),
        mbar=state.m_at(r) * kappa ** ((alpha - 3.0) / 2.0),
        rhobar=state.rho_at(r) / kappa**alpha,
        pbar=state.p_at(r) / kappa ** (alpha + 1.0),
    )


@dataclass
class NewtonianLimitReport:
    """C^1 convergence table toward the Lane-Emden profile."""

    gamma: float
    k: float
    kappas: np.ndarray
    err_c0: np.ndarray
    err_c1: np.ndarray
    rate: float
    prefactor: float

    @property
    def err(self):
        return self.err_c0 + self.err_c1

    def to_csv_rows(self):
        yield "kappa,err_c0,err_c1"
        for i in range(self.kappas.size):
            yield ",".join(repr(float(v)) for v in (
                self.kappas[i], self.err_c0[i], self.err_c1[i]))

    def as_dict(self):
        return {
            "gamma": self.gamma, "k": self.k,
            "kappa": self.kappas.tolist(),
            "err_c0": self.err_c0.tolist(), "err_c1": self.err_c1.tolist(),
            "rate": self.rate, "prefactor": self.prefactor,
        }


def newtonian_limit_check(eos, kappa_list, cfg=None, reference=None):
    """Rescaled-profile error table E(kappa) and its fitted decay rate.

    For each kappa the relativistic solution is rescaled onto the
    Lane-Emden grid and the C^1 distance is taken in the potential:
    err_c0 = max |ybar - y0|, err_c1 = max |ybar' - y0'|.  A log-log fit of
    err_c0 + err_c1 gives (prefactor, rate); the expected rate is 1.
    """
    kappas = np.asarray(sorted(float(v) for v in kappa_list))
    if kappas.size < 2:
        raise DomainError("need at least two kappa values for a rate fit")
    if kappas[0] <= 0.0 or kappas[-1] > 0.2:
        raise DomainError("kappa_list must lie in (0, 0.2] (small-kappa regime)")
    ref = reference or solve_lane_emden(eos.gamma_low, eos.k_low, cfg)
    dy0 = np.zeros_like(ref.s)
    dy0[1:] = -ref.m0[1:] / ref.s[1:] ** 2

    e0 = np.empty_like(kappas)
    e1 = np.empty_like(kappas)
    for i, kap in enumerate(kappas):
        st = tov.solve_steady_state(eos, kap, cfg)
        rs = rescale_state(st, grid=ref.s)
        e0[i] = np.max(np.abs(rs.ybar - ref.y0))
        e1[i] = np.max(np.abs(rs.dybar - dy0))

    slope, intercept = np.polyfit(np.log(kappas), np.log(e0 + e1), 1)
    return NewtonianLimitReport(
        gamma=eos.gamma_low, k=eos.k_low, kappas=kappas,
        err_c0=e0, err_c1=e1,
        rate=float(slope), prefactor=float(np.exp(intercept)))
