"""Mass-radius families: kappa sweeps, turning points, index bookkeeping.

The one-parameter family is traced by re-solving the structure problem on a
kappa grid.  Slopes in kappa come from centered differences: cheap stencil
estimates on the grid everywhere, upgraded near suspected sign changes (and
wherever a slope sits inside its own noise) to fresh re-solves at
kappa(1 +/- h) and half step, so those points carry a Richardson-extrapolated
derivative with a per-point error estimate.  Ten times the estimate is the
noise floor deciding when a derivative counts as zero -- the classification
clauses are exact-zero conditions in the underlying theory, and the floor is
what makes them decidable numerically.

Turning points are bracketed sign changes of dM/dkappa (mass) or
d(M/R)/dkappa (ratio), refined by bisection with fresh solves.  The winding
index per point follows the two-clause sign rule; the turning-point report
then joins three independently computed integers for every kappa: the
reduced operator's Morse index, the winding index, and the direct growing
mode count, which must satisfy n_u = n_minus - i wherever the kernel gap
says the classification is trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (ConsistencyError, DegenerateCurveError, DomainError,
                     TovlabError)
from .modes import unstable_modes
from .spectral import assemble_reduced_form, build_mesh, kernel_gap
from .spectral import morse_index as _sigma_morse
from .tov import SolverConfig, solve_steady_state

NOISE_MULT = 10.0  # noise floor = this times the Richardson error estimate


def _solve_annotated(eos, kappa, cfg):
    """One equilibrium, with failures annotated by the offending kappa."""
    try:
        return solve_steady_state(eos, kappa, cfg)
    except TovlabError as exc:
        raise type(exc)(f"at kappa={kappa:.10g}: {exc}") from exc


def _scalars(state):
    return np.array([state.M, state.R, state.M / state.R])


def derivative_by_resolve(eos, kappa, cfg=None, h_rel=1e-3, h_abs=1e-4):
    """Centered re-solve derivatives of (M, R, M/R) with error estimates.

    Two passes at steps dk and dk/2 give a Richardson-extrapolated slope and
    the standard |D_h - D_h/2|/3 estimate of what remains.  The absolute
    floor on dk keeps the difference above solver noise for small kappa.
    """
    dk = max(h_abs, h_rel * kappa)
    if kappa - dk <= 0.0:
        dk = 0.5 * kappa
    slopes = []
    for step in (dk, 0.5 * dk):
        hi = _scalars(_solve_annotated(eos, kappa + step, cfg))
        lo = _scalars(_solve_annotated(eos, kappa - step, cfg))
        slopes.append((hi - lo) / (2.0 * step))
    d_h, d_h2 = slopes
    extrap = (4.0 * d_h2 - d_h) / 3.0
    err = np.abs(d_h2 - d_h) / 3.0
    return extrap, err


@dataclass
class FamilyPoint:
    """One star on the curve with its kappa-slopes and their noise floors.

    Slopes are NaN at sweep endpoints, where no centered stencil exists;
    deriv_noise holds the error estimates keyed 'dM', 'dR', 'dMR', plus a
    'refined' flag saying whether the slopes came from dedicated re-solves.
    """

    kappa: float
    M: float
    R: float
    MR: float
    dM: float = np.nan
    dR: float = np.nan
    dMR: float = np.nan
    deriv_noise: dict = field(default_factory=dict)

    def noise_floor(self, name):
        return NOISE_MULT * self.deriv_noise.get(name, np.inf)


@dataclass
class ExtremumEvent:
    """A refined critical point of M or M/R along the family."""

    kappa_star: float
    which: str          # "mass" | "ratio"
    kind: str           # "max" | "min" | "inflection"
    orientation: str    # "counterclockwise" | "clockwise" | "none"
    confident: bool = True
    bracket: tuple = None
    other_slope: float = np.nan   # the complementary derivative at kappa_star
    other_floor: float = np.nan

    def as_dict(self):
        return {
            "kappa_star": self.kappa_star, "which": self.which,
            "kind": self.kind, "orientation": self.orientation,
            "confident": self.confident,
            "other_slope": float(self.other_slope),
            "other_floor": float(self.other_floor),
        }


@dataclass
class FamilyCurve:
    """kappa-ordered family points plus the classification layers on top."""

    points: list
    eos: object = None
    cfg: object = None
    states: list = None
    extrema_M: list = field(default_factory=list)
    extrema_MR: list = field(default_factory=list)
    i_kappa: np.ndarray = None

    @property
    def kappas(self):
        return np.array([p.kappa for p in self.points])

    @property
    def masses(self):
        return np.array([p.M for p in self.points])

    @property
    def radii(self):
        return np.array([p.R for p in self.points])

    @property
    def ratios(self):
        return np.array([p.MR for p in self.points])

    def index_at(self, kappa):
        """Index of the nearest grid point; kappa must lie in the range."""
        kap = self.kappas
        if not kap[0] <= kappa <= kap[-1]:
            raise DomainError(f"kappa={kappa:.6g} outside the swept range "
                              f"[{kap[0]:.6g}, {kap[-1]:.6g}]")
        return int(np.argmin(np.abs(kap - kappa)))


def _stencil_slopes(kap, vals):
    """Non-uniform 3-point centered first derivatives (exact on parabolas).

    Returns (slopes, err) with NaN at the endpoints; err compares against
    the double-width stencil where one exists, the coarse-to-fine gap over 3
    being the usual second-order extrapolation remainder.
    """
    n = kap.size
    slopes = np.full((n,) + vals.shape[1:], np.nan)
    err = np.full_like(slopes, np.nan)

    def centered(i, j, k):
        hl = kap[j] - kap[i]
        hr = kap[k] - kap[j]
        return (hl**2 * vals[k] - hr**2 * vals[i]
                + (hr**2 - hl**2) * vals[j]) / (hl * hr * (hl + hr))

    for j in range(1, n - 1):
        slopes[j] = centered(j - 1, j, j + 1)
    for j in range(2, n - 2):
        err[j] = np.abs(slopes[j] - centered(j - 2, j, j + 2)) / 3.0
    if n >= 5:
        err[1] = err[2]
        err[n - 2] = err[n - 3]
    return slopes, err


def sweep_family(eos, kappa_grid, cfg=None, refine=True):
    """Trace the mass-radius curve on a strictly increasing kappa grid.

    Every interior point gets stencil slopes; points where dM or d(M/R)
    changes sign against a neighbor, or where a slope sits inside its own
    noise floor, are re-derived from dedicated re-solves (Richardson pair)
    when `refine` is on.  The two endpoints are always re-derived that way,
    since they have no stencil.  The returned curve keeps the solved states
    and a winding-index value per point.
    """
    kap = np.asarray(kappa_grid, dtype=float)
    if kap.ndim != 1 or kap.size < 1:
        raise DomainError("kappa grid must be a nonempty 1-d array")
    if np.any(np.diff(kap) <= 0.0):
        raise DomainError("kappa grid must be strictly increasing "
                          "(duplicates rejected)")
    if kap[0] <= 0.0:
        raise DomainError("kappa values must be positive")
    states = [_solve_annotated(eos, k, cfg) for k in kap]
    vals = np.array([_scalars(st) for st in states])     # (n, 3)
    slopes, err = _stencil_slopes(kap, vals)

    points = []
    for i, st in enumerate(states):
        if not (st.M > 0.0 and st.R > 0.0):
            raise ConsistencyError(f"non-physical scalars at kappa={kap[i]}")
        if not st.newtonian and 2.0 * st.M / st.R >= 8.0 / 9.0:
            raise ConsistencyError(
                f"compactness bound violated at kappa={kap[i]}")
        points.append(FamilyPoint(
            kappa=float(kap[i]), M=st.M, R=st.R, MR=st.M / st.R,
            dM=slopes[i, 0], dR=slopes[i, 1], dMR=slopes[i, 2],
            deriv_noise={"dM": err[i, 0], "dR": err[i, 1],
                         "dMR": err[i, 2], "refined": False}))

    if refine:
        # endpoints always: stencils leave them slope-less, and copying a
        # neighbor misclassifies when an extremum sits in the last interval
        todo = set(_suspect_points(points)) | {0, len(points) - 1}
        for i in sorted(todo):
            d, e = derivative_by_resolve(eos, points[i].kappa, cfg)
            points[i].dM, points[i].dR, points[i].dMR = d
            points[i].deriv_noise = {"dM": e[0], "dR": e[1], "dMR": e[2],
                                     "refined": True}

    curve = FamilyCurve(points=points, eos=eos, cfg=cfg, states=states)
    curve.i_kappa = np.array([_winding_of_point(curve, i)
                              for i in range(len(points))])
    return curve


def _suspect_points(points):
    """Interior points whose slopes need the re-solve treatment."""
    out = set()
    interior = [i for i, p in enumerate(points) if np.isfinite(p.dM)]
    for a, b in zip(interior[:-1], interior[1:]):
        for name in ("dM", "dMR"):
            if getattr(points[a], name) * getattr(points[b], name) < 0.0:
                out.update((a, b))
    for i in interior:
        p = points[i]
        if (abs(p.dM) <= p.noise_floor("dM")
                or abs(p.dMR) <= p.noise_floor("dMR")):
            out.add(i)
    return sorted(out)


def _winding_of_point(curve, i):
    """Two-clause winding index of one point (endpoints copy their
    neighbor: the index is locally constant away from turning points)."""
    points = curve.points
    if not np.isfinite(points[i].dM):
        j = i + 1 if i == 0 else i - 1
        if not 0 <= j < len(points) or not np.isfinite(points[j].dM):
            return -1   # unclassifiable (grid too short)
        i = j
    p = points[i]
    zero_m = abs(p.dM) <= p.noise_floor("dM")
    zero_r = abs(p.dMR) <= p.noise_floor("dMR")
    if zero_m and zero_r:
        raise DegenerateCurveError(
            f"coexistence detected at kappa={p.kappa:.10g}: dM and d(M/R) "
            "both inside their noise floors (numerics bug, not physics)")
    if zero_m:
        return 1
    if zero_r:
        return 0
    return 1 if p.dM * p.dMR > 0.0 else 0


def winding_index(curve, kappa):
    """Winding index at the grid point nearest kappa.

    1 when dM and d(M/R) slope the same way or dM vanishes (inside its
    noise floor); 0 when they oppose or d(M/R) vanishes.  Both vanishing is
    a hard error -- the theory forbids coexisting critical points.
    """
    return int(_winding_of_point(curve, curve.index_at(kappa)))


_SEL = {"mass": 0, "ratio": 2}
_NAME = {"mass": "dM", "ratio": "dMR"}
_OTHER = {"mass": "dMR", "ratio": "dM"}


def find_extrema(curve, which="mass", rel_tol=1e-6, max_iter=80):
    """Locate and refine the critical points of M (or M/R) along the curve.

    Sign changes of the selected slope between consecutive classified points
    are bisected with fresh re-solve derivatives until the bracket shrinks
    below kappa * rel_tol; an event that exhausts max_iter first is flagged
    confident=False rather than dropped.  Slope dips to zero without a sign
    change are reported as kind="inflection".  Each refined event also
    checks that the complementary derivative stays clear of its noise floor
    (isolated critical points cannot coexist).
    """
    if which not in _SEL:
        raise DomainError(f"which must be 'mass' or 'ratio', got {which!r}")
    if len(curve.points) < 5:
        raise DomainError("extremum search needs at least 5 points")
    if curve.eos is None:
        raise DomainError("curve carries no EOS; re-run sweep_family")
    col = _SEL[which]
    name = _NAME[which]
    pts = curve.points
    d = np.array([getattr(p, name) for p in pts])
    ok = np.isfinite(d)
    idx = np.flatnonzero(ok)
    events = []
    for a, b in zip(idx[:-1], idx[1:]):
        if d[a] * d[b] >= 0.0:
            continue
        lo, hi = pts[a].kappa, pts[b].kappa
        sign_lo = np.sign(d[a])
        slope_mid = err_mid = None
        confident = False
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            slope_mid, err_mid = derivative_by_resolve(eos=curve.eos,
                                                       kappa=mid,
                                                       cfg=curve.cfg)
            if np.sign(slope_mid[col]) == sign_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo <= rel_tol * mid:
                confident = True
                break
        kappa_star = 0.5 * (lo + hi)
        other_col = _SEL["ratio" if which == "mass" else "mass"]
        oname = _OTHER[which]
        other = slope_mid[other_col]
        # a coinciding critical point would collapse the other slope by the
        # same bracket-shrink factor; clear both that scale and plain noise
        other_scale = max(abs(getattr(pts[a], oname)),
                          abs(getattr(pts[b], oname)))
        other_floor = max(NOISE_MULT * err_mid[other_col],
                          1e-3 * other_scale)
        if abs(other) <= other_floor:
            raise DegenerateCurveError(
                f"{which} extremum at kappa={kappa_star:.10g} coincides "
                f"with a critical point of the other scalar within noise")
        events.append(ExtremumEvent(
            kappa_star=kappa_star, which=which,
            kind="max" if sign_lo > 0 else "min",
            orientation=_orientation(pts[a], pts[b]),
            confident=confident, bracket=(pts[a].kappa, pts[b].kappa),
            other_slope=other, other_floor=other_floor))
    for j in idx:
        p = pts[j]
        if abs(d[j]) > p.noise_floor(name):
            continue
        neighbors = [d[k] for k in (j - 1, j + 1) if k in idx]
        if len(neighbors) == 2 and neighbors[0] * neighbors[1] > 0.0:
            events.append(ExtremumEvent(
                kappa_star=p.kappa, which=which, kind="inflection",
                orientation="none", confident=False,
                bracket=(p.kappa, p.kappa),
                other_slope=getattr(p, _OTHER[which]),
                other_floor=p.noise_floor(_OTHER[which])))
    events.sort(key=lambda e: e.kappa_star)
    if which == "mass":
        curve.extrema_M = events
    else:
        curve.extrema_MR = events
    return events


def _orientation(before, after):
    """Bend direction in the (R, M) plane from the sign change of dM * dR."""
    prod_a = before.dM * before.dR
    prod_b = after.dM * after.dR
    if prod_a < 0.0 < prod_b:
        return "counterclockwise"
    if prod_b < 0.0 < prod_a:
        return "clockwise"
    return "none"


# --- turning-point report ---------------------------------------------------

@dataclass
class SweepConfig:
    """Grid and refinement knobs for the report sweep."""

    kappa_min: float = 0.05
    kappa_max: float = 4.0
    points: int = 60
    spacing: str = "log"          # or "linear"
    solver: SolverConfig = None

    def grid(self):
        if not 0.0 < self.kappa_min < self.kappa_max:
            raise DomainError("need 0 < kappa_min < kappa_max")
        if self.points < 5:
            raise DomainError("report sweep needs at least 5 points")
        if self.spacing == "log":
            return np.geomspace(self.kappa_min, self.kappa_max, self.points)
        if self.spacing == "linear":
            return np.linspace(self.kappa_min, self.kappa_max, self.points)
        raise DomainError(f"unknown spacing {self.spacing!r}")


@dataclass
class IndexConfig:
    """Discretization knobs for the per-point index computations."""

    elements: int = 256
    out_factor: float = 25.0
    cells: int = 400
    weight: str = "baryon"


@dataclass
class TppRow:
    """One kappa of the report: scalars, slopes, and the three indices."""

    kappa: float
    M: float
    R: float
    MR: float
    dM: float
    dMR: float
    i_kappa: int
    n_minus_sigma: int
    n_u_formula: int
    n_u_direct: int
    n_minus_constrained: int
    kernel_gap: float
    gap_resolution: float
    near_degenerate: bool
    consistent: bool

    @property
    def flag(self):
        return "near-degenerate" if self.near_degenerate else "ok"


@dataclass
class TppReport:
    """Joined per-kappa index table plus the extremum event log."""

    rows: list
    events: list
    curve: FamilyCurve
    deepest_kappa: float
    eos_descriptor: dict = None

    CSV_HEADER = ("kappa,M,R,M_over_R,dM,dMR,i,nminus,"
                  "nu_formula,nu_direct,flag")

    def csv_rows(self):
        yield self.CSV_HEADER
        for r in self.rows:
            nums = (r.kappa, r.M, r.R, r.MR, r.dM, r.dMR)
            ints = (r.i_kappa, r.n_minus_sigma, r.n_u_formula, r.n_u_direct)
            yield ",".join([format(x, ".17g") for x in nums]
                           + [str(i) for i in ints] + [r.flag])

    def as_dict(self):
        return {
            "deepest_kappa": self.deepest_kappa,
            "eos": self.eos_descriptor,
            "events": [e for e in self.events],
            "rows": [{
                "kappa": r.kappa, "M": r.M, "R": r.R, "M_over_R": r.MR,
                "dM": r.dM, "dMR": r.dMR, "i": r.i_kappa,
                "nminus": r.n_minus_sigma, "nu_formula": r.n_u_formula,
                "nu_direct": r.n_u_direct,
                "nu_constrained": r.n_minus_constrained,
                "kernel_gap": r.kernel_gap,
                "flag": r.flag} for r in self.rows],
        }

    def verify(self):
        """Check the structural laws row-by-row; returns violation strings.

        The growing-mode count must be nonnegative and change only across
        mass events; the operator index must be constant between ratio
        events and jump there by exactly the winding-index jump.  Rows
        flagged near-degenerate are exempt (their classification straddles
        a genuine kernel).
        """
        bad = []
        rows = [r for r in self.rows if not r.near_degenerate
                and r.i_kappa >= 0]
        mass_k = [e["kappa_star"] for e in self.events
                  if e["which"] == "mass"]
        ratio_k = [e["kappa_star"] for e in self.events
                   if e["which"] == "ratio"]
        for r in rows:
            if r.n_u_formula < 0:
                bad.append(f"negative mode count at kappa={r.kappa:.6g}")
        for a, b in zip(rows[:-1], rows[1:]):
            crosses_mass = any(a.kappa < k < b.kappa for k in mass_k)
            crosses_ratio = any(a.kappa < k < b.kappa for k in ratio_k)
            if a.n_u_formula != b.n_u_formula and not crosses_mass:
                bad.append(f"mode count moved without a mass extremum in "
                           f"({a.kappa:.6g}, {b.kappa:.6g})")
            if a.n_minus_sigma != b.n_minus_sigma and not crosses_ratio:
                bad.append(f"operator index moved without a ratio extremum "
                           f"in ({a.kappa:.6g}, {b.kappa:.6g})")
            if crosses_ratio and not crosses_mass:
                if (b.n_minus_sigma - a.n_minus_sigma
                        != b.i_kappa - a.i_kappa):
                    bad.append(f"index jump != winding jump across the "
                               f"ratio extremum in ({a.kappa:.6g}, "
                               f"{b.kappa:.6g})")
        return bad


def tpp_report(eos, sweep_cfg=None, spectral_cfg=None):
    """Run the full turning-point pipeline and join the three index routes.

    For every kappa on the sweep: Morse index of the reduced operator (with
    a refined-mesh kernel gap setting the trust window), winding index from
    the curve slopes, their difference as the predicted growing-mode count,
    and the direct count from the velocity problem.  A confidently
    classified row where prediction and direct count disagree raises; rows
    inside the kernel-gap window are flagged and exempted.  The event log
    records the mode-count jumps across mass extrema with the curve's bend
    orientation, and the report states the deepest kappa reached.
    """
    sweep_cfg = sweep_cfg or SweepConfig()
    spectral_cfg = spectral_cfg or IndexConfig()
    curve = sweep_family(eos, sweep_cfg.grid(), sweep_cfg.solver)
    find_extrema(curve, "mass")
    find_extrema(curve, "ratio")

    rows = []
    failures = []
    for i, (p, st) in enumerate(zip(curve.points, curve.states)):
        mesh = build_mesh(st, elements=spectral_cfg.elements,
                          out_factor=spectral_cfg.out_factor)
        pair = assemble_reduced_form(st, mesh)
        count = _sigma_morse(pair)
        gap = kernel_gap(pair)
        gap_ref = kernel_gap(assemble_reduced_form(st, mesh.refined()))
        resolution = abs(gap.theta - gap_ref.theta)
        near = (gap.gap <= 5.0 * max(resolution, 1e-10)
                or not count.converged)
        direct = unstable_modes(st, cells=spectral_cfg.cells,
                                weight=spectral_cfg.weight)
        i_k = int(curve.i_kappa[i])
        formula = count.n_minus - i_k if i_k >= 0 else -1
        consistent = (i_k >= 0 and formula == direct.n_u_direct
                      and formula >= 0)
        rows.append(TppRow(
            kappa=p.kappa, M=p.M, R=p.R, MR=p.MR, dM=p.dM, dMR=p.dMR,
            i_kappa=i_k, n_minus_sigma=count.n_minus, n_u_formula=formula,
            n_u_direct=direct.n_u_direct,
            n_minus_constrained=direct.n_minus_constrained,
            kernel_gap=gap.gap,
            gap_resolution=resolution, near_degenerate=near,
            consistent=consistent))
        if not near and i_k >= 0 and not consistent:
            failures.append(
                f"kappa={p.kappa:.10g}: n_minus={count.n_minus} i={i_k} "
                f"formula={formula} direct={direct.n_u_direct}")
    if failures:
        raise ConsistencyError(
            "confident rows violate the mode-count identity:\n  "
            + "\n  ".join(failures))

    events = []
    all_events = sorted(curve.extrema_M + curve.extrema_MR,
                        key=lambda e: e.kappa_star)
    clean = [r for r in rows if not r.near_degenerate and r.i_kappa >= 0]
    for ev in all_events:
        before = [r for r in clean if r.kappa < ev.kappa_star]
        after = [r for r in clean if r.kappa > ev.kappa_star]
        entry = ev.as_dict()
        if before and after:
            entry["n_u_before"] = before[-1].n_u_formula
            entry["n_u_after"] = after[0].n_u_formula
            entry["n_minus_before"] = before[-1].n_minus_sigma
            entry["n_minus_after"] = after[0].n_minus_sigma
            entry["i_before"] = before[-1].i_kappa
            entry["i_after"] = after[0].i_kappa
        events.append(entry)

    return TppReport(rows=rows, events=events, curve=curve,
                     deepest_kappa=float(curve.kappas[-1]),
                     eos_descriptor=eos.descriptor())
