"""Tests for the direct mode-count machinery.

The nonlocal block is checked against an independent symmetric-kernel
quadrature (swapping the order of the double integral collapses the
column-wise cumulative construction to int q Vol_i Vol_j ds plus an exact
tail), the induced potential against the weak field identity paired with
the reduced-form stiffness, and the mode counts against the reduced
operator's Morse index, the family-derivative identities, and the
mean-zero stability criterion.
"""

import numpy as np
import pytest

from tovlab._grids import gauss_panels
from tovlab.errors import ConsistencyError, DomainError
from tovlab.modes import (
    _cell_volumes,
    _l2_gram_interior,
    assemble_L,
    constrained_morse_index,
    density_cells,
    density_morse_index,
    generator_matrix,
    induced_potential,
    mode_weight,
    unstable_modes,
)
from tovlab.newtonian import solve_lane_emden
from tovlab.spectral import assemble_reduced_form, build_mesh, morse_index
from tovlab.tov import solve_steady_state

FOURPI = 4.0 * np.pi


@pytest.fixture(scope="module")
def star_08(hybrid):
    return solve_steady_state(hybrid, 0.8)


@pytest.fixture(scope="module")
def form_08(star_08):
    return assemble_L(star_08, cells=400)


def test_nonlocal_block_matches_symmetric_kernel(star_08, form_08):
    # Fubini on the double integral: N_ij = -4 pi [ int q Vol_i Vol_j ds
    # + 4 pi V_i V_j / (R - 2M) ], one 12-point quadrature, no cumulative
    # sums -- an independent route to the same matrix
    st = star_08
    edges = form_08.edges
    V = _cell_volumes(edges)
    sq, wq = gauss_panels(edges, 12)
    s = sq.ravel()
    q = (FOURPI * np.exp(st.mu_at(s) + 3.0 * st.lam_at(s))
         * (2.0 * s * st.dmu_at(s) + 1.0) / s**2)
    lo, hi = edges[:-1], edges[1:]
    volm = (np.minimum(np.clip(s[:, None], lo, hi), hi) ** 3 - lo**3) / 3.0
    qw = q * wq.ravel()
    N_oracle = -FOURPI * (volm.T @ (qw[:, None] * volm)
                          + FOURPI * np.outer(V, V) / (st.R - 2.0 * st.M))
    N_col = form_08.Lmat.copy()
    N_col[np.diag_indices_from(N_col)] -= form_08.Xgram
    err = np.max(np.abs(N_col - N_oracle)) / np.max(np.abs(N_oracle))
    assert err <= 1e-10


def test_induced_potential_weak_field_identity(hybrid, star_08, form_08):
    # pairing the potential of a random cell density against smooth test
    # functions through the reduced-form stiffness must reproduce
    # -4 pi int rho psi r^2 dr (the field equation in weak form); the
    # mismatch is P1 interpolation error of the potential on the mesh
    st = star_08
    edges = form_08.edges
    n = edges.size - 1
    mesh = build_mesh(st, elements=256)
    pair = assemble_reduced_form(st, mesh)
    Sd = pair.S_diag + pair.parts["potential_diag"]
    So = pair.S_off + pair.parts["potential_off"]
    un = np.unique(np.concatenate(
        (mesh.nodes[mesh.nodes <= st.R * (1.0 + 1e-12)], edges)))
    pq, pwq = gauss_panels(un, 12)
    s = pq.ravel()
    cell_idx = np.clip(np.searchsorted(edges, s) - 1, 0, n - 1)
    tests = (lambda r: np.exp(-r / st.R) * np.sin(np.pi * r / (3 * st.R)),
             lambda r: (r / st.R) ** 2 * np.exp(-2.0 * r / st.R))
    rng = np.random.default_rng(5)
    for _ in range(2):
        rho = rng.standard_normal(n)
        mubar = induced_potential(st, edges, rho, mesh.nodes)
        w = np.exp(st.mu_at(mesh.nodes) + st.lam_at(mesh.nodes)) * mubar
        rho_s = np.where(s <= edges[-1], rho[cell_idx], 0.0)
        for fn in tests:
            psi = fn(mesh.nodes)
            psi[-1] = 0.0
            lhs = (w @ (Sd * psi) + w[:-1] @ (So * psi[1:])
                   + w[1:] @ (So * psi[:-1])
                   - pair.parts["robin"] * w[-1] * psi[-1])
            rhs = -FOURPI * np.sum(rho_s * fn(s) * s**2 * pwq.ravel())
            assert abs(lhs - rhs) <= 2e-3 * (abs(lhs) + abs(rhs))


def test_induced_potential_structure(star_08, form_08):
    st = star_08
    edges = form_08.edges
    n = edges.size - 1
    r_eval = np.linspace(0.0, 3.0 * st.R, 57)
    zero = induced_potential(st, edges, np.zeros(n), r_eval)
    assert np.all(zero == 0.0)
    rng = np.random.default_rng(2)
    r1, r2 = rng.standard_normal(n), rng.standard_normal(n)
    lin = induced_potential(st, edges, 2.0 * r1 - 3.0 * r2, r_eval)
    sep = (2.0 * induced_potential(st, edges, r1, r_eval)
           - 3.0 * induced_potential(st, edges, r2, r_eval))
    assert np.max(np.abs(lin - sep)) <= 1e-12 * np.max(np.abs(sep))
    # a density with zero total mass induces nothing outside the star
    V = _cell_volumes(edges)
    r0 = r1 - V * (V @ r1) / (V @ V)
    outside = np.array([1.5, 3.0, 10.0]) * st.R
    assert np.max(np.abs(induced_potential(st, edges, r0, outside))) \
        <= 1e-14 * np.max(np.abs(r0))
    # monotone attraction: positive density, negative potential
    mb = induced_potential(st, edges, np.ones(n), r_eval)
    assert np.all(mb < 0.0)
    with pytest.raises(DomainError):
        induced_potential(st, edges[:-1], np.ones(n - 1), r_eval)
    with pytest.raises(DomainError):
        induced_potential(st, edges, np.ones(n - 2), r_eval)
    with pytest.raises(DomainError):
        induced_potential(st, edges, np.ones(n), np.array([-1.0]))


def test_index_agrees_with_reduced_operator(hybrid):
    # the strongest cross-module check: the density form's inertia equals
    # the reduced operator's Morse index at every sampled kappa
    for kap, expect_sigma, expect_u in ((0.1, 1, 0), (0.8, 1, 1), (2.0, 2, 1)):
        st = solve_steady_state(hybrid, kap)
        form = assemble_L(st, cells=400)
        n_l = density_morse_index(form)
        n_sigma = morse_index(
            assemble_reduced_form(st, build_mesh(st, elements=256))).n_minus
        assert n_l == n_sigma == expect_sigma
        rep = unstable_modes(st, cells=400)
        assert rep.n_minus_constrained == rep.n_u_direct == expect_u
        assert n_l - rep.n_minus_constrained in (0, 1)
        assert len(rep.growth_rates) == rep.n_u_direct
        assert form.asymmetry <= 1e-12


def test_stability_flips_across_mass_maximum(hybrid):
    stable = unstable_modes(solve_steady_state(hybrid, 0.3), cells=400)
    assert stable.n_u_direct == 0 and stable.least_theta > 0.0
    unstable = unstable_modes(solve_steady_state(hybrid, 0.8), cells=400)
    assert unstable.n_u_direct == 1
    assert unstable.growth_rates[0] > 0.0


def test_family_derivative_identities(hybrid, star_08, form_08):
    # drho/dkappa by central difference of the family, cell-averaged
    st = star_08
    kap, d = st.kappa, 1e-3
    plus = solve_steady_state(hybrid, kap * (1.0 + d))
    minus = solve_steady_state(hybrid, kap * (1.0 - d))
    xq, wq = gauss_panels(form_08.edges, 4)
    r2w = xq**2 * wq

    def cell_avg(s):
        rr = s.rho_at(xq.ravel()).reshape(xq.shape)
        return np.sum(rr * r2w, axis=1) / np.sum(r2w, axis=1)

    drho = (cell_avg(plus) - cell_avg(minus)) / (2.0 * kap * d)
    dmu_R = (plus.mu_R - minus.mu_R) / (2.0 * kap * d)
    # the operator sends the family derivative to a constant function; the
    # finite difference is unreliable only in the thin shell the moving
    # surface sweeps, so compare away from the last cells
    avg = (form_08.Lmat @ drho) / form_08.mean_vec
    k90 = int(0.9 * avg.size)
    assert np.max(np.abs(avg[:k90] - dmu_R)) <= 1e-3 * abs(dmu_R)
    # quadratic-form value against the mass and compactness derivatives
    dM = (plus.M - minus.M) / (2.0 * kap * d)
    dMR = (plus.M / plus.R - minus.M / minus.R) / (2.0 * kap * d)
    lhs = drho @ form_08.Lmat @ drho
    rhs = -dMR * dM / (1.0 - 2.0 * st.M / st.R)
    assert abs(lhs - rhs) <= 2e-3 * abs(rhs)
    assert lhs > 0.0  # dM and d(M/R) have opposite signs here


def test_mean_zero_stability_criterion(hybrid, form_08):
    # a state is unstable iff some mean-zero density makes the form
    # negative; exhibit the witness on the unstable side
    from tovlab.modes import _constrained_pencil
    evals, vecs = _constrained_pencil(form_08)
    assert evals[0] < 0.0
    witness = vecs[:, 0]
    mass = form_08.mean_vec @ witness
    scale = np.abs(form_08.mean_vec) @ np.abs(witness)
    assert abs(mass) <= 1e-10 * scale
    assert witness @ form_08.Lmat @ witness < 0.0
    # and on the stable side every mean-zero direction is positive
    stable_form = assemble_L(solve_steady_state(hybrid, 0.3), cells=400)
    evals, _ = _constrained_pencil(stable_form)
    assert evals[0] > 0.0
    assert constrained_morse_index(stable_form) == 0


def test_count_stable_under_cell_doubling(star_08):
    r1 = unstable_modes(star_08, cells=400)
    r2 = unstable_modes(star_08, cells=800)
    assert r1.n_u_direct == r2.n_u_direct
    drift = abs(r1.growth_rates[0] - r2.growth_rates[0]) / r2.growth_rates[0]
    assert drift <= 0.01


def test_count_invariant_under_weight_choice(hybrid, star_08):
    # the generator weight changes the velocity parametrization, not the
    # accessible density subspace, so the count must not move
    for st in (solve_steady_state(hybrid, 0.3), star_08):
        a = unstable_modes(st, cells=400, weight="baryon")
        b = unstable_modes(st, cells=400, weight="enthalpy")
        assert a.n_u_direct == b.n_u_direct
    with pytest.raises(DomainError):
        mode_weight(star_08, np.array([0.1]), kind="isothermal")


def test_generator_columns_are_mass_free(star_08, form_08):
    A = generator_matrix(star_08, form_08.edges)
    n = form_08.n_cells
    assert A.shape == (n, n - 1)
    resid = np.abs(form_08.mean_vec @ A)
    col_scale = np.max(np.abs(form_08.mean_vec)[:, None] * np.abs(A), axis=0)
    assert np.all(resid <= 1e-12 * col_scale)
    W = mode_weight(star_08, form_08.edges)
    assert W[0] > 0.0 and W[-1] <= 1e-12 * W.max()


def test_l2_gram_matches_quadrature(star_08, form_08):
    edges = form_08.edges[:20]  # small block is enough
    G = _l2_gram_interior(edges)
    sq, wq = gauss_panels(edges, 12)
    n = edges.size
    hats = np.zeros((n, sq.size))
    t = ((sq - edges[:-1, None]) / np.diff(edges)[:, None]).ravel()
    for i in range(n - 1):
        sl = slice(i * 12, (i + 1) * 12)
        hats[i, sl] += 1.0 - t[sl]
        hats[i + 1, sl] += t[sl]
    Gq = FOURPI * (hats * (sq.ravel()**2 * wq.ravel())) @ hats.T
    assert np.max(np.abs(G - Gq[1:-1, 1:-1])) <= 1e-13 * np.max(np.abs(G))


def test_lane_emden_polytrope_is_stable():
    # classical criterion: trivial-metric polytropes above gamma = 4/3 hold
    # themselves up; the direct count must see no growing mode
    le = solve_lane_emden(5.0 / 3.0, 1.0)
    rep = unstable_modes(le, cells=200)
    assert rep.n_u_direct == 0
    assert rep.least_theta > 0.0
    form = assemble_L(le, cells=200)
    assert density_morse_index(form) == 1
    assert constrained_morse_index(form) == 0


def test_report_serialization_and_profiles(star_08):
    rep = unstable_modes(star_08, cells=200)
    d = rep.as_dict()
    assert d["n_u_direct"] == 1 and d["n_minus_constrained"] == 1
    assert len(d["growth_rates"]) == 1
    assert all(isinstance(g, float) for g in d["growth_rates"])
    assert len(d["eigenvalue_gaps"]) >= 7
    assert all(g > 0.0 for g in d["eigenvalue_gaps"])  # simple, discrete
    rows = list(rep.profile_rows())
    assert rows[0] == "r,v,rho_of_v"
    assert len(rows) == rep.cells + 1
    vals = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    assert np.all(np.diff(vals[:, 0]) > 0.0)
    # the ground mode's density perturbation carries no net mass
    V = _cell_volumes(rep.edges)
    assert abs(FOURPI * V @ vals[:, 2]) <= 1e-10 * np.abs(
        FOURPI * V) @ np.abs(vals[:, 2])


def test_partition_validation(star_08):
    with pytest.raises(DomainError):
        density_cells(star_08, n=8)
    with pytest.raises(DomainError):
        density_cells(star_08, n=4000)
    edges = density_cells(star_08, 64)
    assert edges[0] == 0.0 and edges[-1] == star_08.R
    assert np.all(np.diff(edges) > 0.0)
    # clustering: the last cell is the thinnest
    widths = np.diff(edges)
    assert widths[-1] == widths.min()
