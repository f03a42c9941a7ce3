"""Reduced stability operator: assembly, Morse index, kernel gap.

The quadratic form under study, on radial functions phi with finite
Dirichlet energy, is

    Q[phi] = int_0^inf  [e^{-mu-3 lam}/(2 r mu' + 1)] (d/dr(e^{mu+lam} phi))^2 r^2 dr
           - 4 pi int_0^R  e^{mu+lam} g'(y) phi^2 r^2 dr,

with g' the slope of the enthalpy inverse (supported in the star).  The
substitution w = e^{mu+lam} phi turns the first term into a plain weighted
stiffness integral with coefficient

    c(r) = e^{-mu-3 lam} / (2 r mu' + 1),

equal to (1 - 2M/r)^2 in the exterior, and the potential term into
-4 pi int e^{-mu-lam} g'(y) w^2 r^2 dr.  The reference Gram is the energy
norm of phi expressed in w:

    B[w] = int e^{-2(mu+lam)} (w' - a w)^2 r^2 dr,    a = mu' + lam',

(a = 0 and e^{mu+lam} = 1 in vacuum, so w = phi there).  For a state with
trivial metric (the limit system) every factor collapses to one and Q
becomes int phi'^2 r^2 dr - 4 pi int g0'(y0) phi^2 r^2 dr.

Discretization: continuous piecewise-linear elements on a mesh clustered at
the stellar surface, truncated at R_out = out_factor * R.  Truncation
closures model the 1/r decay of energy-space functions: a Robin term
c(R_out) w(R_out)^2 R_out on the form and the exact exterior energy
w(R_out)^2 R_out of the 1/r continuation on the Gram (which also makes B
positive definite).  Both matrices are tridiagonal, so eigenvalue counts of
the pencil (S, B) come from Sturm pivot sequences -- exact integer
arithmetic on signs, no dense solver involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from ._grids import gauss_panels, graded_nodes, geometric_nodes, merge_nodes
from .errors import ConsistencyError, DomainError
from .tov import solve_steady_state

FOURPI = 4.0 * np.pi


# --- mesh ----------------------------------------------------------------

@dataclass
class RadialMesh:
    """P1 element mesh on [0, R_out] with the stellar surface as a node."""

    nodes: np.ndarray
    r_star: float
    out_factor: float
    clustering: float
    robin_coeff: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes[0] != 0.0 or np.any(np.diff(self.nodes) <= 0.0):
            raise DomainError("mesh nodes must increase strictly from 0")
        if self.n_elements < 64:
            raise DomainError(f"need >= 64 elements, got {self.n_elements}")
        if not np.any(np.abs(self.nodes - self.r_star) <= 1e-12 * self.r_star):
            raise DomainError("stellar surface is not a mesh node")

    @property
    def n_elements(self):
        return self.nodes.size - 1

    @property
    def r_out(self):
        return float(self.nodes[-1])

    def refined(self):
        """Insert cell midpoints; same span, surface stays a node."""
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return RadialMesh(merge_nodes(self.nodes, mids), self.r_star,
                          self.out_factor, self.clustering, self.robin_coeff)


def build_mesh(state, elements=256, out_factor=25.0, clustering=None):
    """Surface-clustered interior + geometric exterior mesh for a state.

    The interior grading exponent defaults to 1/(gamma-1) of the low-density
    branch, matching the boundary-layer power of the coefficient profiles.
    """
    if out_factor < 10.0:
        raise DomainError("out_factor must be >= 10")
    if clustering is None:
        clustering = 1.0 / (state.eos.gamma_low - 1.0)
    n_int = max(48, int(round(0.6 * elements)))
    n_ext = max(16, elements - n_int)
    R = state.R
    interior = graded_nodes(0.0, R, n_int, power=clustering,
                            cluster_at="right")
    exterior = geometric_nodes(R, out_factor * R, n_ext)
    nodes = merge_nodes(interior, exterior)
    r_out = nodes[-1]
    if state.newtonian:
        robin = 1.0
    else:
        robin = (1.0 - 2.0 * state.M / r_out) ** 2
    return RadialMesh(nodes, r_star=R, out_factor=out_factor,
                      clustering=float(clustering), robin_coeff=float(robin))


# --- assembly ------------------------------------------------------------

@dataclass
class FormPair:
    """Tridiagonal discretization of (form, Gram) in the w-variable.

    S_diag/S_off hold the form, B_diag/B_off the energy Gram; `parts` keeps
    the separately assembled pieces (stiffness, potential, closures) for
    diagnostics, and `state` allows reassembly on refined meshes.
    """

    S_diag: np.ndarray
    S_off: np.ndarray
    B_diag: np.ndarray
    B_off: np.ndarray
    mesh: RadialMesh
    kappa: float
    state: object = None
    parts: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.S_diag.size

    def s_quad(self, v):
        """v^T S v for a node-coefficient vector in the w-variable."""
        v = np.asarray(v, dtype=float)
        return float(v @ (self.S_diag * v)
                     + 2.0 * v[:-1] @ (self.S_off * v[1:]))

    def b_quad(self, v):
        v = np.asarray(v, dtype=float)
        return float(v @ (self.B_diag * v)
                     + 2.0 * v[:-1] @ (self.B_off * v[1:]))

    def s_apply(self, v):
        v = np.asarray(v, dtype=float)
        out = self.S_diag * v
        out[:-1] += self.S_off * v[1:]
        out[1:] += self.S_off * v[:-1]
        return out

    def b_solve(self, rhs):
        n = self.dim
        ab = np.zeros((3, n))
        ab[0, 1:] = self.B_off
        ab[1] = self.B_diag
        ab[2, :-1] = self.B_off
        return solve_banded((1, 1), ab, rhs)

    def phi_to_w(self, phi_nodes):
        """Convert a phi-space node vector to the assembled w-variable."""
        if self.state.newtonian:
            return np.asarray(phi_nodes, dtype=float)
        r = self.mesh.nodes
        conv = np.exp(self.state.mu_at(r) + self.state.lam_at(r))
        return np.asarray(phi_nodes, dtype=float) * conv


def _coefficients(state, r):
    """(c, E, a, V) at radii r: stiffness weight, Gram weight e^{-2(mu+lam)},
    conjugation slope mu'+lam', and potential density 4 pi e^{-mu-lam} g'."""
    mu = state.mu_at(r)
    lam = state.lam_at(r)
    dmu = state.dmu_at(r)
    c = np.exp(-mu - 3.0 * lam) / (2.0 * r * dmu + 1.0)
    E = np.exp(-2.0 * (mu + lam))
    a = state.metric_slope_sum_at(r)
    gp = state.eos.drho_dy(state.y_at(r))
    V = FOURPI * np.exp(-mu - lam) * gp
    return c, E, a, V


def assemble_reduced_form(state, mesh):
    """Assemble the (S, B) pencil for a state on a prepared mesh.

    Two-point Gauss quadrature per cell; the interior uses the state's
    profile interpolants and the exterior their exact vacuum continuations,
    through the same accessors.  Truncation closures per the module
    docstring.
    """
    if abs(mesh.r_star - state.R) > 0.05 * state.R:
        raise DomainError(
            f"mesh surface {mesh.r_star:.6g} does not match state R = "
            f"{state.R:.6g}")
    x = mesh.nodes
    h = np.diff(x)
    rq, wq = gauss_panels(x, 2)          # (n_cells, 2) nodes and weights
    c, E, a, V = _coefficients(state, rq.ravel())
    for name, arr in (("stiffness", c), ("gram", E)):
        if np.any(arr <= 0.0):
            raise ConsistencyError(f"non-positive {name} coefficient "
                                   "(profile corruption?)")
    shape = rq.shape
    c = c.reshape(shape)
    E = E.reshape(shape)
    a = a.reshape(shape)
    V = V.reshape(shape)
    r2w = rq**2 * wq

    n = x.size
    Sd = np.zeros(n)
    So = np.zeros(n - 1)
    Bd = np.zeros(n)
    Bo = np.zeros(n - 1)
    pot_d = np.zeros(n)
    pot_o = np.zeros(n - 1)

    # hat values/slopes on each cell at the 2 Gauss points
    t = (rq - x[:-1, None]) / h[:, None]       # local coordinate in [0, 1]
    NL, NR = 1.0 - t, t
    dL, dR = -1.0 / h[:, None], 1.0 / h[:, None]

    k = np.sum(c * r2w, axis=1)
    Sd[:-1] += k / h**2
    Sd[1:] += k / h**2
    So -= k / h**2

    p_LL = np.sum(V * NL * NL * r2w, axis=1)
    p_LR = np.sum(V * NL * NR * r2w, axis=1)
    p_RR = np.sum(V * NR * NR * r2w, axis=1)
    pot_d[:-1] += p_LL
    pot_d[1:] += p_RR
    pot_o += p_LR
    Sd -= pot_d
    So -= pot_o

    gL = dL - a * NL
    gR = dR - a * NR
    Bd[:-1] += np.sum(E * gL * gL * r2w, axis=1)
    Bd[1:] += np.sum(E * gR * gR * r2w, axis=1)
    Bo += np.sum(E * gL * gR * r2w, axis=1)

    # truncation closures at R_out: Robin on the form, exact 1/r tail energy
    # on the Gram
    r_out = mesh.r_out
    Sd[-1] += mesh.robin_coeff * r_out
    Bd[-1] += r_out

    return FormPair(
        S_diag=Sd, S_off=So, B_diag=Bd, B_off=Bo, mesh=mesh,
        kappa=getattr(state, "kappa", float("nan")), state=state,
        parts={"potential_diag": pot_d, "potential_off": pot_o,
               "robin": mesh.robin_coeff * r_out})


# --- pencil eigenvalue counting -------------------------------------------

def _count_below(pair, theta):
    """Number of pencil eigenvalues of (S, B) strictly below theta.

    Sturm pivot recurrence on S - theta B; zero pivots are nudged by a tiny
    amount, which cannot change the count by Sylvester stability.
    """
    d = pair.S_diag - theta * pair.B_diag
    e = pair.S_off - theta * pair.B_off
    scale = np.max(np.abs(d)) + np.max(np.abs(e)) + 1e-300
    tiny = 1e-300 + 1e-18 * scale
    count = 0
    prev = d[0]
    if prev == 0.0:
        prev = tiny
    if prev < 0.0:
        count += 1
    for i in range(1, d.size):
        piv = d[i] - e[i - 1] ** 2 / prev
        if piv == 0.0:
            piv = tiny
        if piv < 0.0:
            count += 1
        prev = piv
    return count


@dataclass
class MorseCount:
    n_minus: int
    converged: bool
    refined_n_minus: int


def morse_index(pair):
    """Negative eigenvalue count of the pencil, with refinement cross-check.

    The count at theta = 0 is the inertia of S (Sylvester), independent of
    the element basis.  A second assembly on the midpoint-refined mesh sets
    the converged flag when the counts agree.
    """
    n0 = _count_below(pair, 0.0)
    refined = assemble_reduced_form(pair.state, pair.mesh.refined())
    n1 = _count_below(refined, 0.0)
    return MorseCount(n_minus=n0, converged=(n0 == n1), refined_n_minus=n1)


def _eigenvalue_by_count(pair, k, lo=None, hi=None, rtol=1e-13, max_iter=200):
    """k-th smallest pencil eigenvalue via bisection on the count function."""
    if lo is None:
        lo = -1.0
        while _count_below(pair, lo) >= k:
            lo *= 4.0
            if lo < -1e60:
                raise ConsistencyError("eigenvalue search underflow")
    if hi is None:
        hi = 1.0
        while _count_below(pair, hi) < k:
            hi *= 4.0
            if hi > 1e60:
                raise ConsistencyError("eigenvalue search overflow")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _count_below(pair, mid) >= k:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def _inverse_iteration(pair, theta, n_iter=8):
    """B-normalized eigenvector for the pencil eigenvalue nearest theta."""
    n = pair.dim
    shift = theta
    ab = np.zeros((3, n))
    rng = np.random.default_rng(7)
    v = rng.standard_normal(n)
    v /= np.sqrt(pair.b_quad(v))
    bump = 0.0
    for attempt in range(4):
        ab[0, 1:] = pair.S_off - (shift + bump) * pair.B_off
        ab[1] = pair.S_diag - (shift + bump) * pair.B_diag
        ab[2, :-1] = pair.S_off - (shift + bump) * pair.B_off
        try:
            for _ in range(n_iter):
                rhs = pair.B_diag * v
                rhs[:-1] += pair.B_off * v[1:]
                rhs[1:] += pair.B_off * v[:-1]
                v = solve_banded((1, 1), ab, rhs)
                v /= np.sqrt(pair.b_quad(v))
            return v, True
        except np.linalg.LinAlgError:
            bump = (bump + 1e-12) * 10.0
    return v, False


@dataclass
class GapResult:
    gap: float
    theta: float
    vector: np.ndarray
    confident: bool


def kernel_gap(pair):
    """Pencil eigenvalue nearest zero: |theta|, theta, and its eigenvector."""
    n0 = _count_below(pair, 0.0)
    candidates = []
    if n0 >= 1:
        candidates.append(_eigenvalue_by_count(pair, n0, hi=0.0))
    candidates.append(_eigenvalue_by_count(pair, n0 + 1, lo=0.0))
    theta = min(candidates, key=abs)
    # offset the shift off the eigenvalue so the solve stays well-posed
    span = abs(candidates[-1] - candidates[0]) if len(candidates) > 1 else 1.0
    off = 1e-8 * max(abs(theta), span, 1e-12)
    vec, ok = _inverse_iteration(pair, theta + off)
    return GapResult(gap=abs(theta), theta=float(theta), vector=vec,
                     confident=ok)


def lowest_eigenpairs(pair, k=3):
    """First k pencil eigenvalues (ascending) with B-normalized vectors."""
    out = []
    for j in range(1, k + 1):
        theta = _eigenvalue_by_count(pair, j)
        vec, ok = _inverse_iteration(pair, theta + 1e-8 * max(1.0, abs(theta)))
        out.append((float(theta), vec, ok))
    return out


# --- null direction -------------------------------------------------------

def null_direction_residual(family_solver, eos, kappa, delta,
                            elements=256, out_factor=25.0, cfg=None):
    """Weak residual of the analytic null direction v = dy/dkappa.

    Builds v by central difference of two re-solves, interpolates to the
    mesh of the center state (profiles inside, vacuum continuation outside),
    and returns ||S v||_{B^{-1}} / ||v||_B over interior test functions.
    The row of the truncation node is excluded: v tends to the constant
    d(mu(R))/dkappa at infinity, which lies outside the decaying closure
    model, while the operator identity itself holds on all of [0, R_out).
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    st = family_solver(eos, kappa, cfg) if cfg else family_solver(eos, kappa)
    if cfg:
        plus = family_solver(eos, kappa + delta, cfg)
        minus = family_solver(eos, kappa - delta, cfg)
    else:
        plus = family_solver(eos, kappa + delta)
        minus = family_solver(eos, kappa - delta)
    mesh = build_mesh(st, elements=elements, out_factor=out_factor)
    pair = assemble_reduced_form(st, mesh)
    r = mesh.nodes
    v = (plus.y_at(r) - minus.y_at(r)) / (2.0 * delta)
    w = pair.phi_to_w(v)
    rvec = pair.s_apply(w)
    rvec[-1] = 0.0
    num = float(np.sqrt(rvec @ pair.b_solve(rvec)))
    den = float(np.sqrt(pair.b_quad(w)))
    return num / den, v


# --- report ----------------------------------------------------------------

@dataclass
class SpectralReport:
    kappa: float
    n_minus: int
    converged: bool
    kernel_gap: float
    kernel_theta: float
    lowest: list
    mesh_convergence: tuple
    elements: int
    out_factor: float

    def as_dict(self):
        return {
            "kappa": self.kappa, "n_minus": self.n_minus,
            "converged": self.converged, "kernel_gap": self.kernel_gap,
            "kernel_theta": self.kernel_theta,
            "lowest_thetas": [t for t, _, _ in self.lowest],
            "mesh_convergence": list(self.mesh_convergence),
            "elements": self.elements, "out_factor": self.out_factor,
        }


def spectral_report(state_or_eos, kappa=None, elements=256, out_factor=25.0,
                    n_pairs=3, cfg=None, clustering=None):
    """Full spectral summary for one state (or eos + kappa)."""
    if kappa is None:
        state = state_or_eos
    else:
        state = solve_steady_state(state_or_eos, kappa, cfg)
    mesh = build_mesh(state, elements=elements, out_factor=out_factor,
                      clustering=clustering)
    pair = assemble_reduced_form(state, mesh)
    mc = morse_index(pair)
    gap = kernel_gap(pair)
    low = lowest_eigenpairs(pair, k=n_pairs)
    return SpectralReport(
        kappa=float(getattr(state, "kappa", float("nan"))),
        n_minus=mc.n_minus, converged=mc.converged,
        kernel_gap=gap.gap, kernel_theta=gap.theta, lowest=low,
        mesh_convergence=(mc.n_minus, mc.refined_n_minus),
        elements=mesh.n_elements, out_factor=out_factor)
