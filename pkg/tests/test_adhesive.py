"""Adhesive constitutive model: energies, dissipation, criteria, toughness."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delabem.adhesive import (AdhesiveParams, adhesive_energy, damage_activation,
                              dissipation_increment, element_energy_density,
                              err_with_plasticity, gc_curve, mode_mixity_angles,
                              plastic_activation, plastic_mixity_bound)
from delabem.mesh import DIRICHLET, NEUMANN, build_rectangle, pair_rigid_obstacle

PARAMS = AdhesiveParams(kappa_n=18000.0, kappa_t=4500.0, kappa_h=500.0,
                        g1c=10.0, yield_stress=168.0)


def unit_interface(n_elements=1, length=1.0):
    """Straight contact strip of the given length with n elements."""
    total = length + 2.0
    mesh = build_rectangle(total, 1.0, (n_elements + 2, 1, n_elements + 2, 1),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0,
                                         length * n_elements / n_elements))
    return pair_rigid_obstacle(mesh)


def strip_pairing():
    mesh = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))
    return pair_rigid_obstacle(mesh)


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def test_critical_stresses():
    assert PARAMS.sigma_n_crit == pytest.approx(600.0, abs=1e-12)
    assert PARAMS.sigma_t_crit == pytest.approx(300.0, abs=1e-12)


def test_yield_window_is_satisfied_silently():
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        AdhesiveParams(18000.0, 4500.0, 500.0, 10.0, 168.0)   # 150 < 168 <= 300


def test_yield_window_violation_warns_but_constructs():
    with pytest.warns(UserWarning, match="window"):
        p = AdhesiveParams(18000.0, 4500.0, 500.0, 10.0, 100.0)
    assert p.yield_stress == 100.0
    with pytest.warns(UserWarning, match="window"):
        AdhesiveParams(18000.0, 4500.0, 500.0, 10.0, 301.0)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        AdhesiveParams(-1.0, 4500.0, 500.0, 10.0, 168.0)
    with pytest.raises(ValueError):
        AdhesiveParams(18000.0, 4500.0, 500.0, 10.0, 168.0, grad_exponent=3.0)


# ---------------------------------------------------------------------------
# stored energy
# ---------------------------------------------------------------------------

def test_zero_state_zero_energy():
    pairing = strip_pairing()
    m = pairing.n_entries
    e = adhesive_energy(PARAMS, pairing, np.ones(27), np.zeros(m), np.zeros(2 * m))
    assert e == 0.0


def test_uniform_opening_on_unit_element_reaches_g1c():
    pairing = unit_interface(n_elements=1, length=1.0)
    # single glued element of unit length; uniform normal jump
    assert pairing.elements.shape[0] == 1
    assert pairing.element_lengths[0] == pytest.approx(1.0)
    m = pairing.n_entries
    jumps = np.zeros(2 * m)
    jn = PARAMS.sigma_n_crit / PARAMS.kappa_n          # 600/18000 = 1/30 mm
    jumps[0::2] = jn
    e = adhesive_energy(PARAMS, pairing, np.ones(1), np.zeros(m), jumps)
    assert e == pytest.approx(0.5 * 18000.0 * jn ** 2, rel=1e-12)
    assert e == pytest.approx(PARAMS.g1c, rel=1e-12)


def test_hardening_term_survives_total_damage():
    pairing = strip_pairing()
    m = pairing.n_entries
    pi = np.full(m, 0.1)
    e = adhesive_energy(PARAMS, pairing, np.zeros(27), pi, np.zeros(2 * m))
    assert e == pytest.approx(0.5 * PARAMS.kappa_h * 0.1 ** 2 * 225.0, rel=1e-12)


def test_interpenetration_returns_sentinel():
    pairing = strip_pairing()
    m = pairing.n_entries
    jumps = np.zeros(2 * m)
    jumps[0] = -1.0
    assert adhesive_energy(PARAMS, pairing, np.ones(27), np.zeros(m), jumps) == np.inf
    assert adhesive_energy(PARAMS, pairing, np.full(27, 1.5), np.zeros(m),
                           np.abs(jumps)) == np.inf


def test_damage_gradient_term():
    pairing = strip_pairing()
    m = pairing.n_entries
    params = AdhesiveParams(18000.0, 4500.0, 500.0, 10.0, 168.0, kappa_grad=2.0)
    zeta = np.ones(27)
    zeta[10:] = 0.0
    e = adhesive_energy(params, pairing, zeta, np.zeros(m), np.zeros(2 * m))
    d = 225.0 / 27          # inter-centroid distance on the uniform strip
    assert e == pytest.approx(0.5 * 2.0 * 1.0 / d, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_energy_midpoint_convexity(seed):
    pairing = strip_pairing()
    m = pairing.n_entries
    rng = np.random.default_rng(seed)
    zeta = rng.random(27)
    j1 = np.abs(rng.standard_normal(2 * m)) * 0.01
    j2 = np.abs(rng.standard_normal(2 * m)) * 0.01
    p1 = rng.standard_normal(m) * 0.01
    p2 = rng.standard_normal(m) * 0.01
    mid = adhesive_energy(PARAMS, pairing, zeta, 0.5 * (p1 + p2), 0.5 * (j1 + j2))
    avg = 0.5 * (adhesive_energy(PARAMS, pairing, zeta, p1, j1)
                 + adhesive_energy(PARAMS, pairing, zeta, p2, j2))
    assert mid <= avg + 1e-12 * max(abs(avg), 1.0)
    # linear (hence convex) in damage at fixed kinematics
    z1, z2 = rng.random(27), rng.random(27)
    mid_z = adhesive_energy(PARAMS, pairing, 0.5 * (z1 + z2), p1, j1)
    avg_z = 0.5 * (adhesive_energy(PARAMS, pairing, z1, p1, j1)
                   + adhesive_energy(PARAMS, pairing, z2, p1, j1))
    assert mid_z == pytest.approx(avg_z, rel=1e-9)


# ---------------------------------------------------------------------------
# dissipation
# ---------------------------------------------------------------------------

def test_no_change_no_dissipation():
    pairing = strip_pairing()
    m = pairing.n_entries
    z = np.random.default_rng(0).random(27)
    p = np.random.default_rng(1).standard_normal(m)
    assert dissipation_increment(PARAMS, pairing, z, z, p, p) == 0.0


def test_full_debond_dissipates_g1c_times_length():
    pairing = strip_pairing()
    m = pairing.n_entries
    r = dissipation_increment(PARAMS, pairing, np.zeros(27), np.ones(27),
                              np.zeros(m), np.zeros(m))
    assert r == pytest.approx(10.0 * 225.0, rel=1e-12)     # 2250 N = 2250 J/m


def test_healing_returns_sentinel():
    pairing = strip_pairing()
    m = pairing.n_entries
    z_new = np.full(27, 0.5)
    z_old = np.full(27, 0.5)
    z_new[3] += 0.1
    assert dissipation_increment(PARAMS, pairing, z_new, z_old,
                                 np.zeros(m), np.zeros(m)) == np.inf


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.01, 100.0))
def test_dissipation_positive_homogeneity(seed, lam):
    pairing = strip_pairing()
    m = pairing.n_entries
    rng = np.random.default_rng(seed)
    z_old = np.ones(27)
    dz = -rng.random(27) * 0.5
    dp = rng.standard_normal(m) * 0.1
    r1 = dissipation_increment(PARAMS, pairing, z_old + dz, z_old, dp, np.zeros(m))
    r2 = dissipation_increment(PARAMS, pairing, z_old + lam * dz, z_old,
                               lam * dp, np.zeros(m))
    assert r2 == pytest.approx(lam * r1, rel=1e-9)


def test_slip_dissipation_is_nodal_rule():
    pairing = strip_pairing()
    m = pairing.n_entries
    dp = np.linspace(0.0, 0.1, m)          # single sign: nodal rule is exact
    r = dissipation_increment(PARAMS, pairing, np.ones(27), np.ones(27),
                              dp, np.zeros(m))
    exact = 0.0
    for (a, b), L in zip(pairing.elements, pairing.element_lengths):
        exact += PARAMS.yield_stress * 0.5 * L * (abs(dp[a]) + abs(dp[b]))
    assert r == pytest.approx(exact, rel=1e-12)


# ---------------------------------------------------------------------------
# activation criteria
# ---------------------------------------------------------------------------

def test_damage_activation_pure_opening():
    e, trig = damage_activation(PARAMS, 600.0 / 18000.0, 0.0, 0.0)
    assert e == pytest.approx(PARAMS.g1c, rel=1e-12)
    assert trig


def test_damage_activation_pure_shear():
    e, trig = damage_activation(PARAMS, 0.0, 300.0 / 4500.0, 0.0)
    assert e == pytest.approx(PARAMS.g1c, rel=1e-12)
    assert trig


def test_damage_activation_zero_state():
    e, trig = damage_activation(PARAMS, 0.0, 0.0, 0.0)
    assert e == 0.0 and not trig


def test_plastic_activation_threshold():
    s, trig = plastic_activation(PARAMS, 1.0, 168.0 / 4500.0, 0.0)
    assert s == pytest.approx(168.0, rel=1e-12)
    assert trig


def test_plastic_activation_dead_interface():
    s, trig = plastic_activation(PARAMS, 0.0, 1.0, 0.0)
    assert s == 0.0 and not trig


# ---------------------------------------------------------------------------
# energy release rate with slip
# ---------------------------------------------------------------------------

def test_err_reduces_to_elastic_when_slip_vanishes():
    jn, jt = 0.01, 0.02
    g = err_with_plasticity(PARAMS, jn, jt, 0.0)
    assert g == pytest.approx(0.5 * 18000 * jn ** 2 + 0.5 * 4500 * jt ** 2,
                              rel=1e-14)


def test_err_pure_normal():
    assert err_with_plasticity(PARAMS, 0.02, 0.0, 0.0) == \
        pytest.approx(0.5 * 18000 * 0.02 ** 2, rel=1e-14)


def test_err_at_minimizing_slip_matches_elimination_formula():
    """For monotone shear past yield the minimizing slip has the closed
    form kappa_t/(kappa_t+kappa_h) (jump - yield/kappa_t); check it by
    scalar minimization, then evaluate the augmented release rate."""
    from scipy.optimize import minimize_scalar
    jt = 0.08                # beyond yield/kappa_t = 0.0373
    def incremental(pi):
        return (0.5 * PARAMS.kappa_t * (jt - pi) ** 2
                + 0.5 * PARAMS.kappa_h * pi ** 2
                + PARAMS.yield_stress * abs(pi))
    res = minimize_scalar(incremental, bounds=(0.0, jt), method="bounded",
                          options={"xatol": 1e-14})
    pi_formula = PARAMS.kappa_t / (PARAMS.kappa_t + PARAMS.kappa_h) \
        * (jt - PARAMS.yield_stress / PARAMS.kappa_t)
    assert res.x == pytest.approx(pi_formula, rel=1e-5)
    assert incremental(pi_formula) <= res.fun + 1e-12 * abs(res.fun)
    g = err_with_plasticity(PARAMS, 0.0, jt, pi_formula)
    explicit = (0.5 * PARAMS.kappa_t * (jt - pi_formula) ** 2
                + PARAMS.yield_stress * pi_formula
                + 0.5 * PARAMS.kappa_h * pi_formula ** 2)
    assert g == pytest.approx(explicit, rel=1e-14)


# ---------------------------------------------------------------------------
# mixed-mode toughness curve
# ---------------------------------------------------------------------------

def test_gc_pure_opening():
    c = gc_curve(PARAMS, 0.0)
    assert c["g_c"] == PARAMS.g1c
    assert c["jump_t"] == 0.0
    assert c["psi_u"] == 0.0


def test_gc_continuous_at_plastic_bound():
    phi_star = plastic_mixity_bound(PARAMS)
    below = gc_curve(PARAMS, phi_star * (1 - 1e-12))
    above = gc_curve(PARAMS, min(phi_star * (1 + 1e-12), np.pi / 2))
    assert abs(below["g_c"] - above["g_c"]) < 1e-10
    assert abs(below["jump_t"] - above["jump_t"]) < 1e-10


def test_gc_pure_shear_value():
    c = gc_curve(PARAMS, np.pi / 2)
    assert c["g_c"] == pytest.approx(10.0 * (1 + 9.0) - 168.0 ** 2 / 1000.0,
                                     rel=1e-12)
    assert c["g_c"] == pytest.approx(71.776, rel=1e-9)


def test_gc_monotone_beyond_plastic_bound():
    phi_star = plastic_mixity_bound(PARAMS)
    phis = np.linspace(phi_star, np.pi / 2, 64)
    vals = [gc_curve(PARAMS, p)["g_c"] for p in phis]
    assert np.all(np.diff(vals) >= -1e-12)


def test_gc_plastic_branch_needs_hardening():
    soft = AdhesiveParams(18000.0, 4500.0, 0.0, 10.0, 168.0)
    with pytest.raises(ValueError, match="kappa_h"):
        gc_curve(soft, np.pi / 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 0.1), st.floats(1e-4, 0.1))
def test_mixity_angle_conversions(jn, jt):
    psi_u, psi_g, psi_sigma = mode_mixity_angles(PARAMS, jn, jt)
    ratio = np.sqrt(PARAMS.kappa_t / PARAMS.kappa_n)
    assert abs(np.tan(psi_sigma)) == pytest.approx(ratio * np.tan(psi_g), rel=1e-9)
    assert abs(np.tan(psi_u)) == pytest.approx(np.tan(psi_g) / ratio, rel=1e-9)


# ---------------------------------------------------------------------------
# element energy density
# ---------------------------------------------------------------------------

def test_element_density_matches_spring_energy_per_length():
    # the density is the damage driving force: the spring terms only,
    # without the hardening contribution
    no_hardening = AdhesiveParams(18000.0, 4500.0, 0.0, 10.0, 168.0)
    pairing = strip_pairing()
    m = pairing.n_entries
    rng = np.random.default_rng(2)
    jumps = np.abs(rng.standard_normal(2 * m)) * 0.01
    pi = rng.standard_normal(m) * 0.005
    dens = element_energy_density(no_hardening, pairing, pi, jumps)
    total = float(dens @ pairing.element_lengths)
    stored = adhesive_energy(no_hardening, pairing, np.ones(27), pi, jumps)
    assert total == pytest.approx(stored, rel=1e-12)
