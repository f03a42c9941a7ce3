"""Equation-of-state layer: closed-form oracles, round trips, validation."""

import numpy as np
import pytest

from tovlab import eos as eos_mod
from tovlab.eos import EquationOfState, HybridEos, Polytrope, TabulatedEos
from tovlab.errors import DomainError, EosModelError


def polytrope_enthalpy_closed(k, gamma, rho):
    # antiderivative of k*gamma*s^(gamma-2)/(1 + k*s^(gamma-1))
    return gamma / (gamma - 1.0) * np.log1p(k * rho ** (gamma - 1.0))


def test_enthalpy_matches_polytrope_closed_form():
    for k, gamma in [(1.0, 1.5), (0.7, 5.0 / 3.0), (2.5, 1.8)]:
        p = Polytrope(k=k, gamma=gamma)
        rho = np.geomspace(1e-14, 1e22, 400)
        q = p.enthalpy(rho)
        closed = polytrope_enthalpy_closed(k, gamma, rho)
        np.testing.assert_allclose(q, closed, rtol=1e-12)


def test_enthalpy_spot_value():
    # k=1, gamma=3/2, rho=4: Q = 3 ln 3
    p = Polytrope(k=1.0, gamma=1.5)
    assert abs(p.enthalpy(4.0) - 3.0 * np.log(3.0)) < 1e-12


def test_enthalpy_inverse_round_trip():
    rng = np.random.default_rng(42)
    for model in (Polytrope(k=1.0, gamma=1.5), HybridEos(),
                  HybridEos(k=0.8, gamma=1.45)):
        rho = np.exp(rng.uniform(np.log(1e-13), np.log(1e20), 600))
        back = model.density_of_enthalpy(model.enthalpy(rho))
        np.testing.assert_allclose(back, rho, rtol=1e-10)
        # inverse is zero at and below zero argument
        assert model.density_of_enthalpy(0.0) == 0.0
        assert model.density_of_enthalpy(-2.0) == 0.0


def test_enthalpy_monotone_and_slope(hybrid):
    y = np.geomspace(1e-8, 5.0, 200)
    rho = hybrid.density_of_enthalpy(y)
    assert np.all(np.diff(rho) > 0)
    # drho_dy against central differences of the inverse
    ymid = np.geomspace(1e-4, 3.0, 40)
    h = 1e-6 * ymid
    fd = (hybrid.density_of_enthalpy(ymid + h)
          - hybrid.density_of_enthalpy(ymid - h)) / (2 * h)
    np.testing.assert_allclose(hybrid.drho_dy(ymid), fd, rtol=1e-6)
    exact = (rho + hybrid.pressure(rho)) / hybrid.sound_speed_sq(rho)
    np.testing.assert_allclose(hybrid.drho_dy(y), exact, rtol=1e-9)


def test_drho_dy_spot_value():
    # k=1, gamma=3/2, y=Q(4): slope = (rho+p)/p' = (4+8)/3 = 4
    p = Polytrope(k=1.0, gamma=1.5)
    assert abs(p.drho_dy(p.enthalpy(4.0)) - 4.0) < 1e-9


def test_fast_inverse_tracks_polished_inverse(hybrid):
    rng = np.random.default_rng(3)
    y = np.exp(rng.uniform(np.log(1e-10), np.log(hybrid.enthalpy(1e24)), 800))
    y = np.concatenate([y, hybrid.enthalpy(hybrid.rho_t)
                        * np.exp(rng.uniform(-0.1, 0.1, 400))])
    fast = np.array([hybrid._g_fast(v) for v in y])
    slow = hybrid.density_of_enthalpy(y)
    np.testing.assert_allclose(fast, slow, rtol=5e-9)


def test_hybrid_c1_matching():
    h = HybridEos(k=1.0, gamma=5.0 / 3.0)
    eps = 1e-9 * h.rho_t
    below, above = h.rho_t - eps, h.rho_t + eps
    assert abs(h.pressure(above) - h.pressure(below)) < 1e-8 * h.pressure(h.rho_t)
    assert abs(h.sound_speed_sq(above) - h.sound_speed_sq(below)) < 1e-8
    # transition placed exactly where the polytrope turns acausal
    assert abs(h.cs2_high - 1.0) < 1e-14
    assert abs(h.rho_t - (3.0 / 5.0) ** 1.5) < 1e-14


def test_pressure_below_density_for_causal_model(hybrid):
    rho = np.geomspace(1e-12, 1e25, 300)
    assert np.all(hybrid.pressure(rho) <= rho * (1 + 1e-12))


def test_baryon_density_normalization_and_slope(hybrid):
    assert hybrid.baryon_density(1.0) == 1.0
    rho = np.geomspace(1e-10, 1e8, 200)
    n = hybrid.baryon_density(rho)
    assert np.all(np.diff(n) > 0)
    # dn/drho = n/(rho+p)
    mid = np.geomspace(1e-6, 1e4, 30)
    h = 1e-6 * mid
    fd = (hybrid.baryon_density(mid + h) - hybrid.baryon_density(mid - h)) / (2 * h)
    np.testing.assert_allclose(
        fd, hybrid.baryon_density(mid) / (mid + hybrid.pressure(mid)), rtol=1e-6)
    # n ~ const * rho at low density
    lo = hybrid.baryon_density(np.array([1e-13, 1e-14]))
    np.testing.assert_allclose(lo[0] / 1e-13, lo[1] / 1e-14, rtol=1e-8)


def test_validator_hybrid_all_ok(hybrid):
    rep = hybrid.validate()
    assert rep.ok
    assert abs(rep.fitted_gamma - 5.0 / 3.0) < 1e-3
    assert abs(rep.fitted_cs2 - 1.0) < 1e-6
    assert rep.p4_violation_density is None
    assert rep.diagnostics["p_le_rho"]


def test_validator_polytrope_flags_high_density():
    p = Polytrope(k=1.0, gamma=5.0 / 3.0)
    rep = p.validate(rho_min=1e-8, rho_max=1e3)
    assert rep.positivity_ok and rep.low_density_ok
    assert not rep.high_density_ok
    assert not rep.causal_ok
    # causality loss at k*gamma*rho^(gamma-1) = 1
    closed = (1.0 / (p.k * p.gamma)) ** (1.0 / (p.gamma - 1.0))
    np.testing.assert_allclose(rep.p4_violation_density, closed, rtol=1e-6)
    assert not rep.ok


def test_validator_out_of_window_exponent():
    rep = Polytrope(k=1.0, gamma=1.25).validate()
    assert not rep.low_density_ok  # below the 4/3 window edge
    rep = Polytrope(k=1.0, gamma=2.2).validate()
    assert not rep.low_density_ok


def test_tabulated_matches_source_model(tmp_path):
    src = HybridEos(k=1.0, gamma=5.0 / 3.0, cs2_target=0.9)
    rho = np.geomspace(1e-10, 1e3, 384)
    lines = ["# synthetic table: rho pressure"]
    lines += [f"{r:.17e} {p:.17e}" for r, p in zip(rho, src.pressure(rho))]
    path = tmp_path / "table.txt"
    path.write_text("\n".join(lines) + "\n")

    tab = TabulatedEos.from_file(path)
    assert abs(tab.gamma_low - 5.0 / 3.0) < 1e-3
    # interpolation is exact on the log-log-linear branch and O(h^2) only in
    # the cells straddling the curvature jump at rho_t
    probe = np.geomspace(2e-10, 9e2, 64)
    near_kink = np.abs(np.log(probe / src.rho_t)) < np.log(3.0)
    np.testing.assert_allclose(tab.pressure(probe[~near_kink]),
                               src.pressure(probe[~near_kink]), rtol=1e-5)
    np.testing.assert_allclose(tab.pressure(probe[near_kink]),
                               src.pressure(probe[near_kink]), rtol=2e-3)
    # below-table power-law continuation
    np.testing.assert_allclose(tab.pressure(1e-12),
                               tab.k_low * 1e-12**tab.gamma_low, rtol=1e-12)
    rep = tab.validate(rho_min=1e-8, rho_max=1e3)
    assert rep.ok
    back = tab.density_of_enthalpy(tab.enthalpy(probe))
    np.testing.assert_allclose(back, probe, rtol=1e-9)


def test_tabulated_causal_limit_overshoot_is_flagged(tmp_path, hybrid):
    # a table sampled from a model sitting exactly at P' = 1 interpolates to
    # slightly acausal slopes near the curvature jump; the validator reports it
    rho = np.geomspace(1e-10, 1e3, 384)
    lines = [f"{r:.17e} {p:.17e}" for r, p in zip(rho, hybrid.pressure(rho))]
    path = tmp_path / "limit.txt"
    path.write_text("\n".join(lines) + "\n")
    rep = TabulatedEos.from_file(path).validate(rho_min=1e-8, rho_max=1e3)
    assert not rep.causal_ok
    assert abs(np.log(rep.p4_violation_density / hybrid.rho_t)) < np.log(1.5)


def test_tabulated_rejects_bad_tables():
    r = np.geomspace(1e-8, 1.0, 10)
    with pytest.raises(EosModelError):
        TabulatedEos(r, np.linspace(1.0, 0.1, 10))  # decreasing pressure
    with pytest.raises(EosModelError):
        TabulatedEos(r[:3], r[:3])  # too short
    bad = r.copy()
    bad[4] = bad[3]
    with pytest.raises(EosModelError):
        TabulatedEos(bad, r**2)


def test_domain_errors(hybrid):
    with pytest.raises(DomainError):
        hybrid.enthalpy(0.0)
    with pytest.raises(DomainError):
        hybrid.enthalpy(hybrid.rho_cap * 10)
    with pytest.raises(DomainError):
        hybrid.density_of_enthalpy(hybrid.enthalpy(hybrid.rho_cap) * 1.5)
    with pytest.raises(DomainError):
        hybrid.baryon_density(-1.0)


def test_from_config(tmp_path):
    m = eos_mod.from_config({"kind": "polytrope", "k": 2.0, "gamma": 1.5})
    assert isinstance(m, Polytrope) and m.k == 2.0
    m = eos_mod.from_config({"kind": "hybrid", "cs2_target": 0.5})
    assert isinstance(m, HybridEos) and abs(m.cs2_high - 0.5) < 1e-12
    with pytest.raises(EosModelError):
        eos_mod.from_config({"kind": "nope"})
    with pytest.raises(EosModelError):
        eos_mod.from_config({"kind": "tabulated"})


def test_load_table_rejects_wrong_shape(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1.0 2.0 3.0\n4.0 5.0 6.0\n")
    with pytest.raises(EosModelError):
        eos_mod.load_table(path)
