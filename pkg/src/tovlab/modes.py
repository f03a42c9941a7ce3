"""Direct growing-mode counts from the full linearized quadratic forms.

Two assemblies on one star.  The density form puts piecewise-constant cells
on [0, R] and builds the matrix of

    <L rho, rho'> = 4 pi int (e^{2mu+lam} Psi rho + e^{mu+lam} mubar_rho)
                    rho' r^2 dr,

a local compressibility term plus the nonlocal induced potential mubar_rho
(the metric response to the density perturbation).  The velocity form puts
piecewise-linear hats on the cell edges and conjugates the same matrix by
the generator

    A v = -(1/r^2) d/dr(r^2 W v),     W = e^{-3 lam/2} n^{1/2},

whose discrete version maps node values to cell averages exactly, so every
column has zero total mass -- the dynamically accessible constraint is
built in rather than imposed.  Growing modes of the second-order problem
v_tt + A' L A v = 0 are the negative eigenvalues theta of (S, Y) with
S = <L A v, A v> and Y the plain L^2 Gram; their rates are sqrt(-theta).

The count of negative (S, Y) eigenvalues and the Morse index of the density
form restricted to mean-zero cells measure the same physical integer two
ways, and both are compared against the reduced-operator route in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.linalg import eigh, null_space

from ._grids import gauss_panels, graded_nodes
from .errors import ConsistencyError, DomainError
from .tov import compressibility_weights

FOURPI = 4.0 * np.pi


def density_cells(state, n=400, clustering=None):
    """Cell edges on [0, R]: n cells graded toward the stellar surface.

    The grading exponent defaults to 1/(gamma-1) of the low-density branch,
    where the compressibility weight behaves like (R-r)^{-(2-gamma)/(gamma-1)}.
    """
    if not 16 <= n <= 2000:
        raise DomainError("cell count must lie in [16, 2000] "
                          "(dense eigensolves)")
    if clustering is None:
        clustering = 1.0 / (state.eos.gamma_low - 1.0)
    return graded_nodes(0.0, state.R, n, power=clustering, cluster_at="right")


def _cell_volumes(edges):
    """int r^2 dr over each cell."""
    return np.diff(edges**3) / 3.0


class _PotentialKernel:
    """Evaluator of the induced potential on a fixed (edges, r_eval) pair.

    mubar_rho(r) = -e^{-mu-lam}(r) int_r^inf (1/s) e^{mu+lam} (2 s mu' + 1)
    lam_rho(s) ds with lam_rho(s) = 4 pi (e^{2 lam}/s) int_0^s t^2 rho dt.
    The inner integrand collapses to q(s) * Vol_rho(s) with the shared
    profile q = 4 pi e^{mu+3 lam} (2 s mu' + 1)/s^2 and Vol_rho the running
    volume integral of rho (piecewise cubic), so one panel quadrature of q
    serves every density.  Panels are the union of cell edges and interior
    evaluation radii; cumulative sums from the right give the integral at
    every evaluation point without partial panels.  Beyond the star the
    integrand is exactly DeltaM/(s - 2M)^2 (DeltaM/s^2 for a trivial
    metric), so the tail integrates in closed form and vanishes identically
    for mean-zero densities.
    """

    def __init__(self, state, edges, r_eval):
        edges = np.asarray(edges, dtype=float)
        if edges[0] != 0.0 or np.any(np.diff(edges) <= 0.0):
            raise DomainError("cell edges must increase strictly from 0")
        if abs(edges[-1] - state.R) > 1e-12 * state.R:
            raise DomainError("last cell edge must sit at the surface")
        self.state = state
        self.edges = edges
        self.r_eval = np.asarray(r_eval, dtype=float)
        if np.any(self.r_eval < 0.0):
            raise DomainError("evaluation radii must be nonnegative")
        R = state.R
        inner = self.r_eval[self.r_eval < R]
        panel_edges = np.unique(np.concatenate((edges, inner)))
        sq, wq = gauss_panels(panel_edges, 4)
        s = sq.ravel()
        mu = state.mu_at(s)
        lam = state.lam_at(s)
        dmu = state.dmu_at(s)
        q = FOURPI * np.exp(mu + 3.0 * lam) * (2.0 * s * dmu + 1.0) / s**2
        self._panel_edges = panel_edges
        self._s = sq
        self._qw = (q.reshape(sq.shape) * wq)
        # running volume integral of each indicator cell at the quadrature
        # points: (n_points, n_cells)
        lo = edges[:-1]
        hi = edges[1:]
        svol = np.minimum(np.clip(s[:, None], lo, hi), hi)
        self._volmat = (svol**3 - lo**3) / 3.0
        self._vol_full = _cell_volumes(edges)
        emulam = np.exp(state.mu_at(self.r_eval) + state.lam_at(self.r_eval))
        self._conj = emulam
        if state.newtonian:
            self._tail_den = np.maximum(self.r_eval, R)
            self._tail_den_R = R
        else:
            self._tail_den = np.maximum(self.r_eval, R) - 2.0 * state.M
            self._tail_den_R = R - 2.0 * state.M
        # index of each evaluation radius in the panel-edge array
        idx = np.searchsorted(panel_edges, self.r_eval)
        self._edge_idx = np.clip(idx, 0, panel_edges.size - 1)

    def apply(self, rho):
        """mubar at the evaluation radii; rho is (n_cells,) or (n_cells, k)."""
        rho = np.asarray(rho, dtype=float)
        one = rho.ndim == 1
        cols = rho.reshape(rho.shape[0], -1)
        if cols.shape[0] != self._vol_full.size:
            raise DomainError("density vector does not match the cells")
        # f(s) per column at quadrature points, integrated per panel
        vol_rho = self._volmat @ cols                    # (n_pts, k)
        shape = self._s.shape
        per_panel = np.einsum("pq,pqk->pk",
                              self._qw, vol_rho.reshape(shape + cols.shape[1:]))
        # suffix sums: integral from each panel edge to R
        suffix = np.zeros((self._panel_edges.size, cols.shape[1]))
        suffix[:-1] = np.cumsum(per_panel[::-1], axis=0)[::-1]
        dM = FOURPI * (self._vol_full @ cols)            # (k,)
        inner = self.r_eval < self.state.R
        grand = np.empty((self.r_eval.size, cols.shape[1]))
        grand[inner] = (suffix[self._edge_idx[inner]]
                        + dM[None, :] / self._tail_den_R)
        grand[~inner] = dM[None, :] / self._tail_den[~inner, None]
        out = -grand / self._conj[:, None]
        return out[:, 0] if one else out


def induced_potential(state, edges, rho, r_eval):
    """Induced potential mubar_rho of a cell density, at radii r_eval."""
    return _PotentialKernel(state, edges, r_eval).apply(rho)


@dataclass
class DensityForm:
    """Dense matrix of the density quadratic form and its Gram data.

    Lmat is symmetric (symmetrized after assembly; the raw asymmetry of the
    nonlocal block is kept as a diagnostic), Xgram holds the diagonal of the
    weighted-L^2 Gram on the same cells, and mean_vec the cell masses
    4 pi int r^2 dr, so mean_vec @ rho is the total mass of a perturbation.
    """

    Lmat: np.ndarray
    Xgram: np.ndarray
    mean_vec: np.ndarray
    edges: np.ndarray
    kappa: float
    state: object = None
    asymmetry: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return self.mean_vec.size


def assemble_L(state, cells=400, clustering=None):
    """Assemble the density form on piecewise-constant cells.

    Column j applies the operator to the j-th indicator density: the local
    term is diagonal by locality and equals the X Gram, the nonlocal term
    pairs the induced potential against every cell.  Self-duality makes the
    result symmetric; an asymmetry above 1e-8 relative signals inconsistent
    quadrature and raises.  4-point Gauss per cell handles the fractional
    power of the compressibility weight at the surface.
    """
    edges = (density_cells(state, cells, clustering)
             if np.isscalar(cells) else np.asarray(cells, dtype=float))
    xq, wq = gauss_panels(edges, 4)
    x = xq.ravel()
    mu = state.mu_at(x)
    lam = state.lam_at(x)
    psi, _, _ = compressibility_weights(state, x)
    if not np.all(np.isfinite(psi)):
        raise ConsistencyError("compressibility weight not finite inside "
                               "the star")
    shape = xq.shape
    r2w = (xq**2 * wq)
    xdiag = FOURPI * np.sum(
        (np.exp(2.0 * mu + lam) * psi).reshape(shape) * r2w, axis=1)
    if np.any(xdiag <= 0.0):
        raise ConsistencyError("non-positive Gram weight on a cell")

    kernel = _PotentialKernel(state, edges, x)
    mubar = kernel.apply(np.eye(edges.size - 1))         # (n_pts, n_cells)
    pair_w = (np.exp(mu + lam).reshape(shape) * r2w)
    N = FOURPI * np.einsum("pq,pqj->pj", pair_w,
                           mubar.reshape(shape + (edges.size - 1,)))
    asym = float(np.max(np.abs(N - N.T)))
    scale = float(np.max(np.abs(N)) + np.max(xdiag))
    if asym > 1e-8 * scale:
        raise ConsistencyError(
            f"nonlocal block asymmetry {asym:.3e} exceeds 1e-8 relative "
            "(quadrature inconsistency)")
    Lmat = 0.5 * (N + N.T)
    Lmat[np.diag_indices_from(Lmat)] += xdiag
    return DensityForm(
        Lmat=Lmat, Xgram=xdiag, mean_vec=FOURPI * _cell_volumes(edges),
        edges=edges, kappa=float(getattr(state, "kappa", float("nan"))),
        state=state, asymmetry=asym / scale,
        diagnostics={"asymmetry_abs": asym, "scale": scale})


def density_morse_index(form):
    """Negative eigenvalue count of (Lmat, Xgram) on all densities."""
    evals = eigh(form.Lmat, np.diag(form.Xgram), eigvals_only=True)
    return int(np.sum(evals < 0.0))


def _constrained_pencil(form):
    """Eigen-decomposition of the form restricted to mean-zero densities.

    Returns (evals ascending, vectors as columns in the full cell basis).
    """
    Q = null_space(form.mean_vec[None, :])
    Lc = Q.T @ form.Lmat @ Q
    Xc = (Q.T * form.Xgram) @ Q
    evals, vecs = eigh(Lc, Xc)
    return evals, Q @ vecs


def constrained_morse_index(form):
    """Morse index of the density form on the mean-zero subspace."""
    evals, _ = _constrained_pencil(form)
    return int(np.sum(evals < 0.0))


def mode_weight(state, r, kind="baryon"):
    """Generator weight W(r): e^{-3 lam/2} n^{1/2}, or the enthalpy variant
    e^{(mu-3 lam)/2} (rho+p)^{1/2}; both vanish with the density at R."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(state.rho_at(r))
    lam = state.lam_at(r)
    out = np.zeros(r.shape)
    pos = rho > 0.0
    if kind == "baryon":
        out[pos] = (np.exp(-1.5 * lam[pos])
                    * np.sqrt(state.eos.baryon_density(rho[pos])))
    elif kind == "enthalpy":
        mu = state.mu_at(r)
        p = np.asarray(state.p_at(r))
        out[pos] = (np.exp(0.5 * mu[pos] - 1.5 * lam[pos])
                    * np.sqrt(rho[pos] + p[pos]))
    else:
        raise DomainError(f"unknown weight kind {kind!r}")
    return out


def generator_matrix(state, edges, weight="baryon"):
    """Discrete A: node values of v to cell densities, exactly mass-free.

    The weighted field u = r^2 W v is sampled at the nodes and its exact
    per-cell decrement fixes the cell average of -(1/r^2) u'; each interior
    node contributes a two-cell dipole of zero total mass.  The center and
    surface nodes carry no dynamics (u vanishes there identically), so the
    velocity basis is the interior nodes and the matrix has shape
    (n_cells, n_cells - 1).
    """
    edges = np.asarray(edges, dtype=float)
    W = mode_weight(state, edges, kind=weight)
    wmax = float(np.max(W))
    if W[-1] > 1e-8 * wmax:
        raise ConsistencyError(
            "generator weight does not vanish at the surface (the EOS "
            "density must vanish there)")
    vol = _cell_volumes(edges)
    n = vol.size
    A = np.zeros((n, n - 1))
    u = edges**2 * W
    cols = np.arange(1, n)
    A[cols - 1, cols - 1] = -u[cols] / vol[cols - 1]
    A[cols, cols - 1] = u[cols] / vol[cols]
    return A


def _l2_gram_interior(edges):
    """4 pi int hat_i hat_j r^2 dr on the interior nodes (dense)."""
    a = edges[:-1]
    b = edges[1:]
    h = b - a
    # exact moments of t^i (1-t)^j r^2 on each cell, r = a + t h
    def mom(i, j):
        # int_0^1 t^i (1-t)^j (a + t h)^2 dt, expanded in t-monomials;
        # int t^m (1-t)^j dt = 1/((m+j+1) C(m+j, m))
        out = 0.0
        for p_, c in ((0, a**2), (1, 2 * a * h), (2, h**2)):
            ii = i + p_
            out = out + c / ((ii + j + 1) * comb(ii + j, ii))
        return h * out
    m_ll = mom(0, 2)
    m_lr = mom(1, 1)
    m_rr = mom(2, 0)
    n = edges.size
    G = np.zeros((n, n))
    idx = np.arange(n - 1)
    G[idx, idx] += m_ll
    G[idx + 1, idx + 1] += m_rr
    G[idx, idx + 1] += m_lr
    G[idx + 1, idx] += m_lr
    return FOURPI * G[1:-1, 1:-1]


@dataclass
class ModeReport:
    """Direct mode count with its density-form cross-check and diagnostics."""

    kappa: float
    n_u_direct: int
    growth_rates: list
    n_minus_constrained: int
    eigenvalue_gaps: list
    least_theta: float
    cells: int
    weight: str
    asymmetry: float
    edges: np.ndarray = None
    lowest_velocity: np.ndarray = None
    lowest_density: np.ndarray = None

    def as_dict(self):
        return {
            "kappa": self.kappa, "n_u_direct": self.n_u_direct,
            "growth_rates": [float(g) for g in self.growth_rates],
            "n_minus_constrained": self.n_minus_constrained,
            "eigenvalue_gaps": [float(g) for g in self.eigenvalue_gaps],
            "least_theta": self.least_theta, "cells": self.cells,
            "weight": self.weight, "asymmetry": self.asymmetry,
        }

    def profile_rows(self):
        """Yield 'r,v,rho_of_v' lines for the lowest velocity mode."""
        yield "r,v,rho_of_v"
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        v = self.lowest_velocity
        for i in range(mids.size):
            vm = 0.5 * (v[i] + v[i + 1])
            yield ",".join(repr(float(x))
                           for x in (mids[i], vm, self.lowest_density[i]))


def unstable_modes(state, cells=400, weight="baryon", clustering=None):
    """Count growing modes of the second-order velocity problem directly.

    Assembles S = <L A v, A v> through the density form's kernel and the
    L^2 Gram Y on interior velocity nodes; negative pencil eigenvalues
    theta give growth rates sqrt(-theta).  The report carries the mean-zero
    Morse index of the same density form for the internal cross-check, the
    spacing of the lowest eigenvalues as a discreteness diagnostic, and the
    lowest mode's profile.
    """
    form = assemble_L(state, cells, clustering)
    A = generator_matrix(state, form.edges, weight=weight)
    S = A.T @ form.Lmat @ A
    S = 0.5 * (S + S.T)
    Y = _l2_gram_interior(form.edges)
    evals, vecs = eigh(S, Y)
    neg = evals < 0.0
    n_u = int(np.sum(neg))
    head = evals[:max(8, n_u + 2)]
    v_full = np.zeros(form.edges.size)
    v_full[1:-1] = vecs[:, 0]
    return ModeReport(
        kappa=form.kappa, n_u_direct=n_u,
        growth_rates=list(np.sqrt(-evals[neg])),
        n_minus_constrained=constrained_morse_index(form),
        eigenvalue_gaps=list(np.diff(head)),
        least_theta=float(evals[0]), cells=form.n_cells, weight=weight,
        asymmetry=form.asymmetry, edges=form.edges,
        lowest_velocity=v_full, lowest_density=A @ vecs[:, 0])
