"""Barotropic equations of state for relativistic stellar structure.

Geometrized units G = c = 1 throughout; ``rho`` is total energy density and
``p`` pressure, both in the same (arbitrary) unit fixed by the stiffness
coefficient k.  The structural assumptions the rest of the package relies on:

* p(rho) is C^1 with p(0) = 0 and dp/drho > 0;
* polytropic low-density behavior p ~ k rho^gamma with 4/3 < gamma < 2;
* asymptotically linear high-density branch, |p - cs2*rho| <= c2*sqrt(p);
* causal sound speed dp/drho <= 1 everywhere.

``validate`` probes the four assumptions numerically and reports per-item
verdicts instead of raising, since deliberately non-compliant models (a pure
polytrope at high density, say) are still useful away from the bad region.

The central derived quantity is the log specific enthalpy

    Q(rho) = integral_0^rho p'(s) / (s + p(s)) ds,

whose inverse g = Q^{-1} (extended by zero for non-positive argument) converts
the enthalpy potential integrated by the structure equations back to density.
The integrand has an integrable power-law singularity at s = 0 which is
removed exactly by the substitution u = s^(gamma-1); all quadrature below is
done either in that variable or in log-density, where the integrands are
analytic, so fixed-order Gauss panels anchored to a cached node table give
near machine accuracy at enthalpy-inversion speeds usable inside ODE
right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from ._grids import _leggauss, merge_nodes
from .errors import DomainError, EosModelError, QuadratureError

_GAMMA_WINDOW = (4.0 / 3.0, 2.0)


def _as_array(x):
    a = np.asarray(x, dtype=float)
    return a, a.ndim == 0


def _cubic_eval(breaks, coeffs, x):
    """Scalar piecewise-cubic evaluation (scipy PPoly layout, no overhead)."""
    i = np.searchsorted(breaks, x) - 1
    if i < 0:
        i = 0
    elif i > breaks.size - 2:
        i = breaks.size - 2
    dx = x - breaks[i]
    return ((coeffs[0, i] * dx + coeffs[1, i]) * dx + coeffs[2, i]) * dx \
        + coeffs[3, i]


class EquationOfState:
    """Base class: subclasses supply pressure(rho) and sound_speed_sq(rho).

    The constructor precomputes a log-spaced node table of cumulative
    enthalpy and baryon-log integrals; all public thermodynamic maps are
    vectorized over numpy arrays and accept/return scalars transparently.
    """

    kind = "base"

    def __init__(self, rho_cap=1e30, rho_lo=1e-18, table_size=3000):
        if not (0.0 < rho_lo < rho_cap):
            raise DomainError("need 0 < rho_lo < rho_cap")
        self.rho_cap = float(rho_cap)
        self.rho_lo = float(rho_lo)
        self._table_size = int(table_size)
        self._build_tables()

    # --- subclass surface ------------------------------------------------

    def pressure(self, rho):
        raise NotImplementedError

    def sound_speed_sq(self, rho):
        """dp/drho; equals the squared sound speed in these units."""
        raise NotImplementedError

    def pressure_scalar(self, rho):
        """Scalar pressure without array dispatch; overridden in hot subclasses."""
        return float(self.pressure(rho))

    def _special_densities(self):
        """Densities where p'' may jump; pinned as table nodes."""
        return ()

    def descriptor(self):
        """JSON-serializable summary of the model (kind + parameters)."""
        return {"kind": self.kind, "rho_cap": self.rho_cap}

    # --- cached tables ----------------------------------------------------

    def _build_tables(self):
        t_lo, t_hi = np.log(self.rho_lo), np.log(self.rho_cap)
        base = np.linspace(t_lo, t_hi, self._table_size + 1)
        special = [np.log(s) for s in self._special_densities()
                   if self.rho_lo < s < self.rho_cap]
        if self.rho_lo < 1.0 < self.rho_cap:
            special.append(0.0)
        t = merge_nodes(base, np.asarray(special)) if special else base
        nodes = np.exp(t)
        # pin special values exactly (exp(log(x)) drifts in the last ulp)
        for s in list(self._special_densities()) + [1.0]:
            if self.rho_lo < s < self.rho_cap:
                nodes[np.argmin(np.abs(nodes - s))] = s
        nodes[0], nodes[-1] = self.rho_lo, self.rho_cap
        tn = np.log(nodes)

        xg, wg = _leggauss(15)
        mid = 0.5 * (tn[:-1, None] + tn[1:, None])
        half = 0.5 * (tn[1:, None] - tn[:-1, None])
        ts = mid + half * xg[None, :]
        s = np.exp(ts)
        p = self.pressure(s)
        dp = self.sound_speed_sq(s)
        if np.any(dp <= 0.0):
            raise EosModelError("dp/drho must be positive on the whole table")
        # dQ = p'/(s+p) ds = p'*s/(s+p) dt;  d(log n) correction = p/(s+p) dt
        q_seg = np.sum(dp * s / (s + p) * half * wg[None, :], axis=1)
        b_seg = np.sum(p / (s + p) * half * wg[None, :], axis=1)

        self._rho_nodes = nodes
        self._t_nodes = tn
        self._Q_nodes = self._q_from_zero(self.rho_lo) + np.concatenate(
            ([0.0], np.cumsum(q_seg)))
        self._B_nodes = np.concatenate(([0.0], np.cumsum(b_seg)))
        self._logQ = np.log(self._Q_nodes)
        self._logrho = tn
        i_one = np.searchsorted(nodes, 1.0)
        self._b_at_one = (self._B_nodes[i_one]
                          if i_one < nodes.size and nodes[i_one] == 1.0 else None)
        # cubic Hermite of log rho vs log Q with the exact analytic slope
        # d log rho / d log Q = Q (rho + p) / (rho p'): the certified fast
        # inverse used inside ODE right-hand sides.  Exact slopes keep the
        # fit O(h^4) accurate across nodes where p'' jumps (the curvature
        # jump sits at a breakpoint, and each side is interpolated exactly).
        pr = self.pressure(nodes)
        slope = self._Q_nodes * (nodes + pr) / (nodes * self.sound_speed_sq(nodes))
        inv = CubicHermiteSpline(self._logQ, self._logrho, slope,
                                 extrapolate=False)
        self._inv_breaks = inv.x
        self._inv_coeffs = inv.c

    def _g_fast(self, y):
        """Scalar enthalpy inverse via the cached monotone cubic, ~5 us."""
        if y <= 0.0:
            return 0.0
        if y <= self._Q_nodes[0]:
            a = self.gamma_low - 1.0
            return (a * y / (self.k_low * self.gamma_low)) ** (1.0 / a)
        if y > self._Q_nodes[-1] * (1.0 + 1e-10):
            raise DomainError("enthalpy potential above Q(rho_cap)")
        return np.exp(_cubic_eval(self._inv_breaks, self._inv_coeffs,
                                  np.log(y)))

    def _q_from_zero(self, rho):
        """Q(rho) by adaptive quadrature in the regularized variable u = s^(gamma-1)."""
        a = self.gamma_low - 1.0
        alpha = 1.0 / a
        glim = alpha * self.k_low * self.gamma_low

        def f(u):
            s = u**alpha
            if s == 0.0:
                return glim
            p = self.pressure(s)
            return alpha * self.sound_speed_sq(s) * s / ((s + p) * u)

        val, err = integrate.quad(f, 0.0, rho**a, epsabs=1e-15, epsrel=1e-13,
                                  limit=200)
        if not np.isfinite(val) or err > 1e-10 * max(abs(val), 1e-30):
            raise QuadratureError("enthalpy anchor integral did not converge")
        return val

    def _q_below_lo(self, rho):
        """Vectorized Q(rho) for rho <= rho_lo via a fixed panel in u = s^(gamma-1)."""
        a = self.gamma_low - 1.0
        alpha = 1.0 / a
        xg, wg = _leggauss(30)
        u1 = rho**a
        un = 0.5 * u1[:, None] * (1.0 + xg[None, :])
        uw = 0.5 * u1[:, None] * wg[None, :]
        s = un**alpha
        p = self.pressure(s)
        fl = alpha * self.sound_speed_sq(s) * s / ((s + p) * un)
        fl = np.where(s > 0.0, fl, alpha * self.k_low * self.gamma_low)
        return np.sum(fl * uw, axis=1)

    def _panel_from_node(self, rho, vals, kind):
        """vals[idx] + Gauss panel from the nearest node below rho (log variable)."""
        idx = np.clip(np.searchsorted(self._rho_nodes, rho, side="right") - 1,
                      0, self._rho_nodes.size - 1)
        t0 = self._t_nodes[idx]
        t1 = np.log(rho)
        xg, wg = _leggauss(15)
        mid = 0.5 * (t0 + t1)[:, None]
        half = 0.5 * (t1 - t0)[:, None]
        ts = mid + half * xg[None, :]
        s = np.exp(ts)
        p = self.pressure(s)
        if kind == "q":
            f = self.sound_speed_sq(s) * s / (s + p)
        else:
            f = p / (s + p)
        return vals[idx] + np.sum(f * half * wg[None, :], axis=1)

    # --- public thermodynamic maps ---------------------------------------

    def enthalpy(self, rho):
        """Log specific enthalpy Q(rho); strictly increasing, Q(0+) = 0."""
        r, scalar = _as_array(rho)
        r = np.atleast_1d(r)
        if np.any(r <= 0.0) or np.any(r > self.rho_cap * (1 + 1e-12)):
            raise DomainError("enthalpy: need 0 < rho <= rho_cap")
        out = np.empty_like(r)
        lo = r < self.rho_lo
        if np.any(lo):
            out[lo] = self._q_below_lo(r[lo])
        if np.any(~lo):
            out[~lo] = self._panel_from_node(r[~lo], self._Q_nodes, "q")
        return out[0] if scalar else out

    def density_of_enthalpy(self, y):
        """Inverse of enthalpy, extended by zero: g(y) = 0 for y <= 0.

        Bracketed table lookup plus Newton polish with the analytic slope
        drho/dQ = (rho + p)/p'; falls back to bisection on the rare elements
        whose polished residual exceeds 1e-11*(1 + y).
        """
        ya, scalar = _as_array(y)
        ya = np.atleast_1d(ya).astype(float)
        qmax = self._Q_nodes[-1]
        if np.any(ya > qmax * (1 + 1e-10)):
            raise DomainError("density_of_enthalpy: y above Q(rho_cap)")
        out = np.zeros_like(ya)
        pos = ya > 0.0
        asym = pos & (ya <= self._Q_nodes[0])
        mid = pos & ~asym

        if np.any(asym):
            yv = ya[asym]
            a = self.gamma_low - 1.0
            rho = (a * yv / (self.k_low * self.gamma_low)) ** (1.0 / a)
            for _ in range(2):
                q = self._q_below_lo(rho)
                rho = rho + (yv - q) * (rho + self.pressure(rho)) \
                    / self.sound_speed_sq(rho)
            out[asym] = rho
        if np.any(mid):
            yv = ya[mid]
            rho = np.exp(np.interp(np.log(yv), self._logQ, self._logrho))
            for _ in range(2):
                q = self._panel_from_node(rho, self._Q_nodes, "q")
                step = (yv - q) * (rho + self.pressure(rho)) \
                    / self.sound_speed_sq(rho)
                rho = np.clip(rho + step, 0.25 * rho, 4.0 * rho)
            resid = np.abs(self._panel_from_node(rho, self._Q_nodes, "q") - yv)
            bad = resid > 1e-11 * (1.0 + yv)
            if np.any(bad):
                rho[bad] = [self._g_bisect(v) for v in yv[bad]]
            out[mid] = rho
        out = np.minimum(out, self.rho_cap)
        return out[0] if scalar else out

    def _g_bisect(self, y):
        i = np.searchsorted(self._Q_nodes, y)
        lo = self._rho_nodes[max(i - 1, 0)]
        hi = self._rho_nodes[min(i, self._rho_nodes.size - 1)]
        if lo == hi:
            return lo
        return brentq(
            lambda r: self._panel_from_node(np.array([r]), self._Q_nodes, "q")[0] - y,
            lo, hi, xtol=1e-300, rtol=1e-15)

    def drho_dy(self, y):
        """Slope of the enthalpy inverse, (rho + p)/p' at rho = g(y); 0 for y <= 0."""
        ya, scalar = _as_array(y)
        ya = np.atleast_1d(ya)
        rho = np.atleast_1d(self.density_of_enthalpy(ya))
        out = np.zeros_like(rho)
        pos = rho > 0.0
        if np.any(pos):
            r = rho[pos]
            out[pos] = (r + self.pressure(r)) / self.sound_speed_sq(r)
        return out[0] if scalar else out

    def baryon_density(self, rho):
        """Baryon density n(rho) = rho * exp(int_rho^1 p/(s(s+p)) ds), n(1) = 1."""
        if self._b_at_one is None:
            raise DomainError(
                "baryon normalization point rho = 1 lies outside the table")
        r, scalar = _as_array(rho)
        r = np.atleast_1d(r)
        if np.any(r <= 0.0) or np.any(r > self.rho_cap * (1 + 1e-12)):
            raise DomainError("baryon_density: need 0 < rho <= rho_cap")
        b = np.empty_like(r)
        lo = r < self.rho_lo
        if np.any(lo):
            b[lo] = -self._b_below_lo(r[lo])
        if np.any(~lo):
            b[~lo] = self._panel_from_node(r[~lo], self._B_nodes, "b")
        n = r * np.exp(self._b_at_one - b)
        return n[0] if scalar else n

    def _b_below_lo(self, rho):
        """int_rho^rho_lo p/(s(s+p)) ds, regular in u = s^(gamma-1)."""
        a = self.gamma_low - 1.0
        alpha = 1.0 / a
        xg, wg = _leggauss(30)
        u0 = rho**a
        u1 = self.rho_lo**a
        mid = 0.5 * (u0 + u1)[:, None]
        half = 0.5 * (u1 - u0)[:, None]
        un = mid + half * xg[None, :]
        s = un**alpha
        p = self.pressure(s)
        f = alpha * p / (un * (s + p))
        f = np.where(s > 0.0, f, 0.0)
        return np.sum(f * half * wg[None, :], axis=1)

    # --- structural validation -------------------------------------------

    def validate(self, rho_min=1e-8, rho_max=1e3, samples=400):
        """Probe the four structural assumptions on a log grid; never raises.

        Returns an EosValidationReport with one verdict per assumption plus
        the fitted low-density exponent, fitted asymptotic slope, and the
        smallest sampled density where causality fails (refined by a root
        solve when the model crosses dp/drho = 1 smoothly).
        """
        rho_max = min(rho_max, self.rho_cap)
        r = np.geomspace(rho_min, rho_max, samples)
        p = self.pressure(r)
        cs2 = self.sound_speed_sq(r)
        diag = {}

        increasing = bool(np.all(p > 0.0) and np.all(np.diff(p) > 0.0)
                          and np.all(cs2 > 0.0))

        # low-density exponent from a log-log fit over the bottom two decades
        low = r <= rho_min * 100.0
        coeff = np.polyfit(np.log(r[low]), np.log(p[low]), 1)
        fitted_gamma = float(coeff[0])
        resid_low = float(np.max(np.abs(
            np.log(p[low]) - np.polyval(coeff, np.log(r[low])))))
        diag["low_fit_max_residual"] = resid_low
        low_ok = bool(increasing and _GAMMA_WINDOW[0] < fitted_gamma
                      < _GAMMA_WINDOW[1] and resid_low < 0.05)
        positivity_ok = bool(increasing and fitted_gamma > 1.0)

        # asymptotic slope from a linear fit over the top decade, then the
        # deviation growth rate beta in |p - cs2*rho| ~ C p^beta; the bound
        # |p - cs2*rho| <= c2 sqrt(p) needs beta <= 1/2
        top = r >= rho_max / 10.0
        slope, intercept = np.polyfit(r[top], p[top], 1)
        fitted_cs2 = float(slope)
        dev = np.abs(p - slope * r)
        upper = r >= rho_max / 1e3
        mask = upper & (dev > 1e-12 * p)
        if np.count_nonzero(mask) >= 8:
            beta = float(np.polyfit(np.log(p[mask]), np.log(dev[mask]), 1)[0])
        else:
            beta = 0.0  # deviation at rounding level: linear to machine precision
        diag["deviation_exponent"] = beta
        diag["linear_fit_intercept"] = float(intercept)
        high_ok = bool(0.0 < fitted_cs2 <= 1.0 + 1e-9 and beta <= 0.55)

        causal = cs2 <= 1.0 + 1e-12
        causal_ok = bool(np.all(causal))
        violation = None
        if not causal_ok:
            i = int(np.argmax(~causal))
            if i > 0:
                violation = float(brentq(
                    lambda x: float(self.sound_speed_sq(x)) - 1.0,
                    r[i - 1], r[i], rtol=1e-13))
            else:
                violation = float(r[0])
        diag["p_le_rho"] = bool(np.all(p <= r * (1 + 1e-12)))

        return EosValidationReport(
            kind=self.kind,
            positivity_ok=positivity_ok,
            low_density_ok=low_ok,
            high_density_ok=high_ok,
            causal_ok=causal_ok,
            fitted_gamma=fitted_gamma,
            fitted_cs2=fitted_cs2,
            p4_violation_density=violation,
            diagnostics=diag,
        )


@dataclass
class EosValidationReport:
    """Per-assumption verdicts from EquationOfState.validate."""

    kind: str
    positivity_ok: bool      # C^1, p(0)=0, p' > 0
    low_density_ok: bool     # polytropic window 4/3 < gamma < 2 near 0
    high_density_ok: bool    # asymptotically linear with slope in (0, 1]
    causal_ok: bool          # dp/drho <= 1 everywhere sampled
    fitted_gamma: float
    fitted_cs2: float
    p4_violation_density: float | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self):
        return (self.positivity_ok and self.low_density_ok
                and self.high_density_ok and self.causal_ok)

    def as_dict(self):
        d = {k: getattr(self, k) for k in (
            "kind", "positivity_ok", "low_density_ok", "high_density_ok",
            "causal_ok", "fitted_gamma", "fitted_cs2",
            "p4_violation_density")}
        d["ok"] = self.ok
        d["diagnostics"] = self.diagnostics
        return d


class Polytrope(EquationOfState):
    """p = k rho^gamma. Violates causality above rho = (1/(k gamma))^(1/(gamma-1))."""

    kind = "polytrope"

    def __init__(self, k=1.0, gamma=5.0 / 3.0, **kw):
        if not k > 0.0:
            raise EosModelError("need k > 0")
        if not 1.0 < gamma < 3.0:
            raise EosModelError("polytrope exponent out of supported range")
        self.k = float(k)
        self.gamma = float(gamma)
        self.gamma_low = self.gamma
        self.k_low = self.k
        super().__init__(**kw)

    def pressure(self, rho):
        return self.k * np.asarray(rho, dtype=float) ** self.gamma

    def sound_speed_sq(self, rho):
        return self.k * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def pressure_scalar(self, rho):
        return self.k * rho**self.gamma

    def descriptor(self):
        return {"kind": self.kind, "k": self.k, "gamma": self.gamma,
                "rho_cap": self.rho_cap}


class HybridEos(EquationOfState):
    """Polytropic core continued C^1 into a linear high-density branch.

    Below rho_t: p = k rho^gamma.  Above: p = p_t + cs2*(rho - rho_t) with
    cs2 = k gamma rho_t^(gamma-1), so p and p' are continuous at rho_t.
    By default rho_t is placed where the polytrope would turn acausal
    (cs2_target = 1), which makes the model causal everywhere.
    """

    kind = "hybrid"

    def __init__(self, k=1.0, gamma=5.0 / 3.0, rho_t=None, cs2_target=1.0, **kw):
        if not k > 0.0:
            raise EosModelError("need k > 0")
        if not 1.0 < gamma < 2.0:
            raise EosModelError("hybrid core exponent must lie in (1, 2)")
        self.k = float(k)
        self.gamma = float(gamma)
        if rho_t is None:
            if not 0.0 < cs2_target <= 1.0:
                raise EosModelError("cs2_target must lie in (0, 1]")
            rho_t = (cs2_target / (k * gamma)) ** (1.0 / (gamma - 1.0))
        self.rho_t = float(rho_t)
        self.p_t = self.k * self.rho_t**self.gamma
        self.cs2_high = self.k * self.gamma * self.rho_t ** (self.gamma - 1.0)
        self.gamma_low = self.gamma
        self.k_low = self.k
        super().__init__(**kw)

    def pressure(self, rho):
        r = np.asarray(rho, dtype=float)
        return np.where(r <= self.rho_t, self.k * r**self.gamma,
                        self.p_t + self.cs2_high * (r - self.rho_t))

    def sound_speed_sq(self, rho):
        r = np.asarray(rho, dtype=float)
        return np.where(r <= self.rho_t,
                        self.k * self.gamma * r ** (self.gamma - 1.0),
                        self.cs2_high)

    def pressure_scalar(self, rho):
        if rho <= self.rho_t:
            return self.k * rho**self.gamma
        return self.p_t + self.cs2_high * (rho - self.rho_t)

    def _special_densities(self):
        return (self.rho_t,)

    def descriptor(self):
        return {"kind": self.kind, "k": self.k, "gamma": self.gamma,
                "rho_t": self.rho_t, "cs2_high": self.cs2_high,
                "rho_cap": self.rho_cap}


class TabulatedEos(EquationOfState):
    """Monotone log-log piecewise-cubic interpolation of a sampled table.

    Below the first sample the model continues as the power law matching the
    interpolant's value and log-log slope at the left edge; rho_cap is pinned
    to the last sample, so no high-density extrapolation is ever trusted.
    """

    kind = "tabulated"

    def __init__(self, rho, p, **kw):
        rho = np.asarray(rho, dtype=float)
        p = np.asarray(p, dtype=float)
        if rho.ndim != 1 or rho.shape != p.shape or rho.size < 4:
            raise EosModelError("table needs matching 1-d arrays, >= 4 rows")
        if np.any(rho <= 0.0) or np.any(p <= 0.0):
            raise EosModelError("table entries must be positive")
        if np.any(np.diff(rho) <= 0.0) or np.any(np.diff(p) <= 0.0):
            raise EosModelError("table must be strictly increasing in both columns")
        self.table_rho = rho
        self.table_p = p
        self._interp = PchipInterpolator(np.log(rho), np.log(p), extrapolate=False)
        self._dinterp = self._interp.derivative()
        self.gamma_low = float(self._dinterp(np.log(rho[0])))
        if self.gamma_low <= 1.0:
            raise EosModelError("low-density slope of the table must exceed 1")
        self.k_low = float(p[0] / rho[0] ** self.gamma_low)
        kw.setdefault("rho_cap", float(rho[-1]))
        if kw["rho_cap"] > rho[-1]:
            raise EosModelError("rho_cap cannot exceed the last table sample")
        super().__init__(**kw)

    @classmethod
    def from_file(cls, path, **kw):
        tab = load_table(path)
        return cls(tab[:, 0], tab[:, 1], **kw)

    def _log_clamped(self, rho):
        # rounding guard: quadrature nodes may land an ulp past the last sample
        r = np.asarray(rho, dtype=float)
        below = r < self.table_rho[0]
        lr = np.log(np.where(below, self.table_rho[0], np.minimum(r, self.table_rho[-1])))
        return r, below, lr

    def pressure(self, rho):
        r, below, lr = self._log_clamped(rho)
        out = np.exp(self._interp(lr))
        if np.any(below):
            out = np.where(below, self.k_low * r**self.gamma_low, out)
        return out

    def sound_speed_sq(self, rho):
        r, below, lr = self._log_clamped(rho)
        out = np.exp(self._interp(lr)) * self._dinterp(lr) / np.exp(lr)
        if np.any(below):
            out = np.where(
                below,
                self.k_low * self.gamma_low * r ** (self.gamma_low - 1.0),
                out)
        return out

    def pressure_scalar(self, rho):
        if rho < self.table_rho[0]:
            return self.k_low * rho**self.gamma_low
        return np.exp(_cubic_eval(self._interp.x, self._interp.c, np.log(rho)))

    def _special_densities(self):
        return tuple(self.table_rho)

    def descriptor(self):
        return {"kind": self.kind, "rows": int(self.table_rho.size),
                "rho_range": [float(self.table_rho[0]), float(self.table_rho[-1])],
                "rho_cap": self.rho_cap}


def load_table(path):
    """Read a two-column 'rho pressure' text table ('#' comments allowed)."""
    tab = np.loadtxt(path, comments="#", dtype=float)
    if tab.ndim == 1:
        tab = tab.reshape(1, -1)
    if tab.ndim != 2 or tab.shape[1] != 2:
        raise EosModelError(f"{path}: expected exactly two columns (rho, pressure)")
    return tab


def from_config(cfg):
    """Build an EquationOfState from a config mapping (see cli.DEFAULT_CONFIG)."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", "hybrid")
    common = {k: cfg[k] for k in ("rho_cap", "rho_lo", "table_size") if k in cfg}
    if kind == "polytrope":
        return Polytrope(k=cfg.get("k", 1.0), gamma=cfg.get("gamma", 5.0 / 3.0),
                         **common)
    if kind == "hybrid":
        return HybridEos(k=cfg.get("k", 1.0), gamma=cfg.get("gamma", 5.0 / 3.0),
                         rho_t=cfg.get("rho_t"),
                         cs2_target=cfg.get("cs2_target", 1.0), **common)
    if kind == "tabulated":
        if "table" not in cfg:
            raise EosModelError("tabulated EOS needs a 'table' file path")
        return TabulatedEos.from_file(cfg["table"], **common)
    raise EosModelError(f"unknown EOS kind {kind!r}")
