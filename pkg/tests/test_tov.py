"""Structure solver: independent fixed-step oracle, metric identities, weights."""

import numpy as np
import pytest

from tovlab.errors import ConsistencyError, DomainError, IntegrationError
from tovlab.tov import (SolverConfig, compressibility_weights, extend_exterior,
                        solve_steady_state)

FOURPI = 4.0 * np.pi


def rk4_surface(eos, kappa, n_steps):
    """Independent classical RK4 integration of the structure equations.

    Fixed steps from the same series start-off, surface located by bisection
    on single partial steps.  Shares only the EOS maps with the production
    solver, not the integrator.
    """
    rho_c = float(eos.density_of_enthalpy(kappa))
    p_c = float(eos.pressure(rho_c))
    curv = 2.0 * np.pi * (rho_c / 3.0 + p_c)
    r_scale = np.sqrt(kappa / curv)
    r = 1e-3 * r_scale
    y = kappa - curv * r**2
    m = FOURPI / 3.0 * rho_c * r**3

    def deriv(r, y, m):
        rho = float(eos.density_of_enthalpy(max(y, 0.0)))
        p = float(eos.pressure(rho)) if rho > 0 else 0.0
        dy = -(m / r**2 + FOURPI * r * p) / (1.0 - 2.0 * m / r)
        return dy, FOURPI * r**2 * rho

    def step(r, y, m, h):
        k1y, k1m = deriv(r, y, m)
        k2y, k2m = deriv(r + h / 2, y + h / 2 * k1y, m + h / 2 * k1m)
        k3y, k3m = deriv(r + h / 2, y + h / 2 * k2y, m + h / 2 * k2m)
        k4y, k4m = deriv(r + h, y + h * k3y, m + h * k3m)
        return (y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y),
                m + h / 6 * (k1m + 2 * k2m + 2 * k3m + k4m))

    h = 6.0 * r_scale / n_steps
    for _ in range(10 * n_steps):
        y2, m2 = step(r, y, m, h)
        if y2 <= 0.0:
            break
        r, y, m = r + h, y2, m2
    else:
        raise RuntimeError("oracle found no surface")

    lo, hi = 0.0, h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ymid, _ = step(r, y, m, mid)
        if ymid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * h:
            break
    h_star = 0.5 * (lo + hi)
    y_star, m_star = step(r, y, m, h_star)
    return r + h_star, m_star


def rk4_extrapolated(eos, kappa, n_steps):
    """Oracle values extrapolated at the empirically measured order.

    The y^{1/(gamma-1)} density profile at the surface caps fixed-step RK4 at
    order ~3.5, so the order is estimated from three runs rather than assumed.
    """
    v1 = rk4_surface(eos, kappa, n_steps)
    v2 = rk4_surface(eos, kappa, 2 * n_steps)
    v4 = rk4_surface(eos, kappa, 4 * n_steps)
    out = []
    for a, b, c in zip(v1, v2, v4):
        p = np.log2(abs(b - a) / abs(c - b))
        assert 2.0 < p < 6.0
        out.append(c + (c - b) / (2.0**p - 1.0))
    return tuple(out)


@pytest.mark.parametrize("kappa", [0.3, 1.0])
def test_solution_matches_fixed_step_oracle(hybrid, kappa):
    st = solve_steady_state(hybrid, kappa, SolverConfig(rel_tol=1e-10))
    n = 10 * st.solver_diag["accepted_steps"]
    R_oracle, M_oracle = rk4_extrapolated(hybrid, kappa, n)
    np.testing.assert_allclose(st.R, R_oracle, rtol=1e-8)
    np.testing.assert_allclose(st.M, M_oracle, rtol=1e-8)


def test_polytrope_low_kappa_against_oracle(soft_polytrope):
    st = solve_steady_state(soft_polytrope, 0.05, SolverConfig(rel_tol=1e-10))
    R_oracle, M_oracle = rk4_extrapolated(soft_polytrope, 0.05,
                                          10 * st.solver_diag["accepted_steps"])
    np.testing.assert_allclose(st.R, R_oracle, rtol=1e-8)
    np.testing.assert_allclose(st.M, M_oracle, rtol=1e-8)


def test_profile_invariants(star_half):
    st = star_half
    assert st.grid[0] == 0.0 and st.grid[-1] == st.R
    assert np.all(np.diff(st.grid) > 0)
    assert np.all(np.diff(st.y) < 0)
    assert st.rho[-1] == 0.0 and st.p[-1] == 0.0
    assert np.all(np.diff(st.m) >= 0)
    assert st.solver_diag["max_compactness"] <= 8.0 / 9.0
    # metric identity holds exactly by construction
    assert np.exp(2 * st.mu[-1]) == pytest.approx(1 - 2 * st.M / st.R, abs=1e-15)
    # central values tie back to the EOS
    np.testing.assert_allclose(st.rho[0],
                               st.eos.density_of_enthalpy(st.kappa), rtol=1e-12)
    assert st.z == pytest.approx(np.expm1(st.kappa))
    assert np.isfinite(st.Nbar) and st.Nbar > 0


def test_surface_residual_small(star_half):
    assert star_half.solver_diag["surface_residual"] < 1e-12


def test_exterior_extension(star_half):
    st = star_half
    r = np.array([st.R, 1.3 * st.R, 5 * st.R, 40 * st.R])
    y, mu, lam = extend_exterior(st, r)
    # vacuum Schwarzschild: e^{2 mu} = 1 - 2M/r = e^{-2 lambda}
    np.testing.assert_allclose(np.exp(2 * mu), 1 - 2 * st.M / r, rtol=1e-13)
    np.testing.assert_allclose(lam, -mu, atol=1e-13)
    # continuity at the surface
    assert abs(y[0]) < 1e-10
    np.testing.assert_allclose(mu[0], st.mu_R, atol=1e-12)
    # mu' + lambda' vanishes in vacuum
    np.testing.assert_allclose(st.metric_slope_sum_at(r[1:]), 0.0, atol=1e-14)
    with pytest.raises(DomainError):
        extend_exterior(st, np.array([0.5 * st.R]))


def test_interpolants_reproduce_grid(star_half):
    st = star_half
    sub = st.grid[1:-1:7]
    np.testing.assert_allclose(st.y_at(sub), st.y[1:-1:7], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(st.m_at(sub), st.m[1:-1:7], rtol=1e-12)
    # between nodes the interpolant stays monotone in y
    fine = np.linspace(0, st.R, 4000)
    yf = st.y_at(fine)
    assert np.all(np.diff(yf) < 0)


def test_compressibility_weights(star_half):
    st = star_half
    r = np.linspace(0.0, 1.6 * st.R, 220)
    psi, psi_inv, drho = compressibility_weights(st, r)
    inside = r < st.R
    assert np.all(np.isinf(psi[~inside]))
    assert np.all(psi_inv[~inside] == 0.0)
    # reciprocal identity and the tie to the enthalpy slope
    np.testing.assert_allclose(psi[inside] * psi_inv[inside], 1.0, rtol=1e-12)
    emu = np.exp(st.mu_at(r[inside]))
    np.testing.assert_allclose(psi_inv[inside] / emu, drho[inside], rtol=1e-12)
    # continuous vanishing at the surface
    near = st.R * (1.0 - np.geomspace(1e-6, 1e-2, 12))
    _, pi_near, _ = compressibility_weights(st, near)
    assert np.all(pi_near > 0)
    assert pi_near[0] < pi_near[-1] * 1e-1


def test_boundary_layer_exponent(hybrid, star_half):
    # psi_inv ~ (R - r)^((2-gamma)/(gamma-1)) near the surface
    st = star_half
    d = np.geomspace(1e-7, 1e-3, 40) * st.R
    _, psi_inv, _ = compressibility_weights(st, st.R - d)
    slope = np.polyfit(np.log(d), np.log(psi_inv), 1)[0]
    expected = (2 - hybrid.gamma) / (hybrid.gamma - 1.0)
    assert abs(slope - expected) < 0.05 * expected


def test_tolerance_refinement_converges(hybrid):
    vals = {}
    for rt in (1e-6, 1e-9, 1e-12):
        st = solve_steady_state(hybrid, 0.8, SolverConfig(rel_tol=rt))
        vals[rt] = (st.R, st.M)
    ref = np.array(vals[1e-12])
    err6 = np.abs(np.array(vals[1e-6]) - ref) / ref
    err9 = np.abs(np.array(vals[1e-9]) - ref) / ref
    assert np.all(err9 <= err6 + 1e-14)
    assert np.all(err9 < 1e-7)


def test_kappa_domain_checks(hybrid):
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            solve_steady_state(hybrid, bad)
    with pytest.raises(DomainError):
        solve_steady_state(hybrid, float(hybrid._Q_nodes[-1]) * 1.01)


def test_no_surface_is_an_error(hybrid):
    # cap small enough that the span retries cannot reach the surface
    with pytest.raises(IntegrationError):
        solve_steady_state(hybrid, 0.5, SolverConfig(r_max_factor=0.002))


def test_json_and_csv_serialization(star_half):
    import json

    d = json.loads(star_half.to_json())
    assert d["schema_version"] == 1
    assert d["kappa"] == star_half.kappa
    assert len(d["grid"]) == star_half.grid.size
    rows = list(star_half.to_csv_rows())
    assert rows[0] == "r,y,rho,p,m,lambda,mu"
    first = [float(v) for v in rows[1].split(",")]
    assert first[0] == 0.0 and first[1] == star_half.kappa
    last = [float(v) for v in rows[-1].split(",")]
    assert last[0] == star_half.R and last[2] == 0.0
