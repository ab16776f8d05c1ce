"""Worldline integration against closed-form references.

The numerical bounds here were measured once at the pinned steps and
then frozen with headroom of two to four orders of magnitude; a
regression that moves an error by less than that is invisible, anything
structural fails loudly.
"""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasetransport import oracles
from phasetransport.connection import (
    Particle,
    electromagnetic_connection,
    gravitational_connection,
    superpose,
    zero_connection,
)
from phasetransport.errors import NonMonotoneTime, OutsideDomain, StepRejected
from phasetransport.fields import (
    axial_magnetic_potential_spherical,
    coulomb_potential,
    uniform_faraday,
    uniform_field_potential,
    zero_potential,
)
from phasetransport.metrics import minkowski, schwarzschild, weak_field
from phasetransport.tensor import FourVector, SpacetimeEvent, Variance
from phasetransport.transport import (
    IntegratorConfig,
    PhaseState,
    TrajectorySample,
    coordinate_force,
    geodesic_integrate,
    integrate,
    minimal_substitution_trajectory,
    step,
)


def state(coords, u):
    return PhaseState(0.0, SpacetimeEvent(coords), FourVector(u, Variance.UP))


def rest_state(coords=(0.0, 0.0, 0.0, 0.0)):
    return state(list(coords), [1.0, 0.0, 0.0, 0.0])


def circular_orbit_state(mass, radius):
    ut = oracles.circular_orbit_time_component(mass, radius)
    rate = oracles.circular_orbit_coordinate_rate(mass, radius)
    return state([0.0, radius, math.pi / 2, 0.0], [ut, 0.0, 0.0, rate * ut])


def bound_orbit_state(mass, rp, ra):
    energy, ell = oracles.bound_orbit_constants(mass, rp, ra)
    ut = energy / (1.0 - 2.0 * mass / rp)
    return state([0.0, rp, math.pi / 2, 0.0], [ut, 0.0, 0.0, ell / rp**2])


# ---------------------------------------------------------------------------
# configuration and state validation


def test_integrator_config_rejects_bad_values():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(step=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=-1e-9)
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0.0, atol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(tau_max=-1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_phase_state_requires_future_directed_contravariant_velocity():
    x = SpacetimeEvent([0, 0, 0, 0])
    with pytest.raises(ValueError):
        PhaseState(0.0, x, FourVector([1, 0, 0, 0], Variance.DOWN))
    with pytest.raises(ValueError):
        PhaseState(0.0, x, FourVector([-1.0, 0, 0, 0], Variance.UP))


# ---------------------------------------------------------------------------
# flat-space motion


def test_free_particle_is_linear():
    cfg = IntegratorConfig(step=0.1, tau_max=1.0)
    initial = state([0, 0, 0, 0], [math.sqrt(2.0), 1.0, 0.0, 0.0])
    traj = integrate(zero_connection(), Particle(1.0), initial, cfg)
    assert traj.status == "completed"
    assert len(traj) == 11
    for sample in traj:
        tau = sample.state.tau
        np.testing.assert_allclose(sample.state.x.coords[1], tau, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(
            sample.state.u.components, initial.u.components
        )


def test_cyclotron_endpoint_matches_exact_solution():
    m = e = b = 1.0
    u_perp = 0.1
    tau_end = oracles.proper_period(m, e, b)
    cfg = IntegratorConfig(step=1e-3, tau_max=tau_end)
    conn = electromagnetic_connection(uniform_faraday(b_field=[0, 0, b]), e)
    initial = state([0, 0, 0, 0], [oracles.gamma_from_u([u_perp, 0, 0]), u_perp, 0, 0])
    traj = integrate(conn, Particle(m, e), initial, cfg)
    x_exact, u_exact = oracles.cyclotron_state(m, e, b, u_perp, tau_end)
    last = traj[-1].state
    np.testing.assert_allclose(last.x.coords, x_exact, rtol=0, atol=1e-12)
    np.testing.assert_allclose(last.u.components, u_exact, rtol=0, atol=1e-12)
    assert max(abs(s.norm_residual) for s in traj) < 1e-14


def test_exb_drift_velocity():
    e_vec, b_vec = [0.1, 0.0, 0.0], [0.0, 0.0, 1.0]
    window = oracles.drift_window(1.0, 1.0, e_vec, b_vec, cycles=10)
    cfg = IntegratorConfig(step=1e-2, tau_max=window)
    conn = electromagnetic_connection(uniform_faraday(e_vec, b_vec), 1.0)
    traj = integrate(conn, Particle(1.0, 1.0), rest_state(), cfg)
    first, last = traj[0].state, traj[-1].state
    elapsed = last.x.coords[0] - first.x.coords[0]
    drift = (last.x.coords[1:] - first.x.coords[1:]) / elapsed
    expected = oracles.drift_velocity(e_vec, b_vec)
    assert np.linalg.norm(drift - expected) < 1e-10


# ---------------------------------------------------------------------------
# curved-space motion


def test_schwarzschild_circular_orbit_rate_and_radius():
    mass, radius = 1.0, 10.0
    rate = oracles.circular_orbit_coordinate_rate(mass, radius)
    ut = oracles.circular_orbit_time_component(mass, radius)
    tau_orbit = 2.0 * math.pi / (rate * ut)
    cfg = IntegratorConfig(step=5e-2, tau_max=tau_orbit)
    traj = geodesic_integrate(
        schwarzschild(mass), Particle(1.0), circular_orbit_state(mass, radius), cfg
    )
    last = traj[-1].state
    measured_rate = last.x.coords[3] / last.x.coords[0]
    np.testing.assert_allclose(measured_rate, rate, rtol=1e-12)
    radii = np.array([s.state.x.coords[1] for s in traj])
    assert np.max(np.abs(radii - radius)) < 1e-12
    np.testing.assert_allclose(last.x.coords[3], 2.0 * math.pi, rtol=1e-12)


def test_energy_diagnostic_is_conserved_on_geodesics():
    traj = geodesic_integrate(
        schwarzschild(1.0),
        Particle(1.0),
        bound_orbit_state(1.0, 18.0, 22.0),
        IntegratorConfig(step=5e-2, tau_max=50.0),
    )
    energies = np.array([s.diagnostics["energy"] for s in traj])
    expected, _ = oracles.bound_orbit_constants(1.0, 18.0, 22.0)
    np.testing.assert_allclose(energies, expected, rtol=1e-12)


def test_adaptive_and_fixed_step_agree_on_eccentric_orbit():
    initial = bound_orbit_state(1.0, 18.0, 22.0)
    g = schwarzschild(1.0)
    fixed = geodesic_integrate(
        g, Particle(1.0), initial, IntegratorConfig(step=1e-2, tau_max=100.0)
    )
    adaptive = geodesic_integrate(
        g,
        Particle(1.0),
        initial,
        IntegratorConfig(method="rk45-adaptive", rtol=1e-11, atol=1e-13, tau_max=100.0),
    )
    assert adaptive.status == "completed"
    np.testing.assert_allclose(adaptive[-1].state.tau, 100.0, rtol=0, atol=0)
    gap = np.max(np.abs(adaptive[-1].state.x.coords - fixed[-1].state.x.coords))
    assert gap < 1e-7
    # the adaptive run should need far fewer steps
    assert len(adaptive) < len(fixed) / 5


def test_weak_field_release_reproduces_inverse_square_force():
    mass = 1.0
    g = weak_field(mass)
    traj = geodesic_integrate(
        g,
        Particle(1.0),
        rest_state((0.0, 1e4, 0.0, 0.0)),
        IntegratorConfig(step=1e-2, tau_max=10.0),
    )
    forces = coordinate_force(list(traj), Particle(1.0))
    worst = 0.0
    for t, f in forces[len(forces) // 10 : -len(forces) // 10]:
        expected = oracles.newtonian_acceleration(mass, [1e4, 0.0, 0.0])
        worst = max(worst, abs(np.linalg.norm(f) - np.linalg.norm(expected)))
    assert worst / abs(oracles.newtonian_acceleration(mass, [1e4, 0, 0])[0]) < 2e-4


# ---------------------------------------------------------------------------
# invariance properties


def test_geodesics_bit_identical_under_mass_rescaling():
    initial = bound_orbit_state(1.0, 18.0, 22.0)
    cfg = IntegratorConfig(step=5e-2, tau_max=30.0)
    g = schwarzschild(1.0)
    light = geodesic_integrate(g, Particle(1.0), initial, cfg)
    heavy = geodesic_integrate(g, Particle(17.0), initial, cfg)
    for a, b in zip(light, heavy):
        np.testing.assert_array_equal(a.state.x.coords, b.state.x.coords)
        np.testing.assert_array_equal(a.state.u.components, b.state.u.components)


def test_gravity_retraces_under_spatial_velocity_flip():
    # static metric: reversing the spatial velocity at the endpoint and
    # integrating the same span again returns to the start
    g = schwarzschild(1.0)
    initial = bound_orbit_state(1.0, 18.0, 22.0)
    cfg = IntegratorConfig(step=1e-2, tau_max=40.0)
    forward = geodesic_integrate(g, Particle(1.0), initial, cfg)
    end = forward[-1].state
    u_back = end.u.components * np.array([1.0, -1.0, -1.0, -1.0])
    back = geodesic_integrate(
        g, Particle(1.0), PhaseState(0.0, end.x, FourVector(u_back, Variance.UP)), cfg
    )
    final = back[-1].state
    np.testing.assert_allclose(
        final.x.coords[1:], initial.x.coords[1:], rtol=0, atol=1e-10
    )
    flipped = final.u.components * np.array([1.0, -1.0, -1.0, -1.0])
    np.testing.assert_allclose(flipped, initial.u.components, rtol=0, atol=1e-11)


def test_magnetic_motion_retraces_under_field_reversal():
    # velocity flip alone reverses gravity but not the Lorentz term; the
    # return leg additionally needs B -> -B (an E field would keep its sign)
    u_perp = 0.3
    cfg = IntegratorConfig(step=1e-3, tau_max=2.0)
    initial = state([0, 0, 0, 0], [oracles.gamma_from_u([u_perp, 0, 0]), u_perp, 0, 0])
    forward_conn = electromagnetic_connection(uniform_faraday(b_field=[0, 0, 1.0]), 1.0)
    reverse_conn = electromagnetic_connection(uniform_faraday(b_field=[0, 0, -1.0]), 1.0)
    forward = integrate(forward_conn, Particle(1.0, 1.0), initial, cfg)
    end = forward[-1].state
    u_back = end.u.components * np.array([1.0, -1.0, -1.0, -1.0])
    back = integrate(
        reverse_conn,
        Particle(1.0, 1.0),
        PhaseState(0.0, end.x, FourVector(u_back, Variance.UP)),
        cfg,
    )
    np.testing.assert_allclose(
        back[-1].state.x.coords[1:], initial.x.coords[1:], rtol=0, atol=1e-12
    )


@settings(max_examples=15, deadline=None)
@given(
    u_phi=st.floats(0.01, 0.035),
    r0=st.floats(8.0, 30.0),
    step_size=st.floats(1e-2, 5e-2),
)
def test_norm_residual_stays_small_on_random_orbits(u_phi, r0, step_size):
    g = schwarzschild(1.0)
    gmat = g.matrix_raw(np.array([0.0, r0, math.pi / 2, 0.0]))
    u0 = math.sqrt((1.0 + gmat[3, 3] * u_phi**2) / -gmat[0, 0])
    initial = state([0.0, r0, math.pi / 2, 0.0], [u0, 0.0, 0.0, u_phi])
    traj = geodesic_integrate(
        g, Particle(1.0), initial, IntegratorConfig(step=step_size, tau_max=20.0)
    )
    assert abs(traj[0].norm_residual) < 1e-14
    if traj.status == "completed":
        assert max(abs(s.norm_residual) for s in traj) < 1e-9


def test_renormalization_restores_unit_norm_each_step():
    cfg = IntegratorConfig(step=5e-2, tau_max=50.0, renormalize=True)
    traj = geodesic_integrate(
        schwarzschild(1.0), Particle(1.0), bound_orbit_state(1.0, 18.0, 22.0), cfg
    )
    assert max(abs(s.norm_residual) for s in traj) < 1e-13


# ---------------------------------------------------------------------------
# two-route checks


def test_minimal_substitution_matches_lorentz_route_for_uniform_field():
    u_perp = 0.1
    tau_end = oracles.proper_period(1.0, 1.0, 1.0)
    cfg = IntegratorConfig(step=1e-3, tau_max=tau_end)
    particle = Particle(1.0, 1.0)
    initial = state([0, 0, 0, 0], [oracles.gamma_from_u([u_perp, 0, 0]), u_perp, 0, 0])
    pot = uniform_field_potential(b_field=[0, 0, 1.0])
    lorentz = integrate(
        electromagnetic_connection(uniform_faraday(b_field=[0, 0, 1.0]), 1.0),
        particle,
        initial,
        cfg,
    )
    canonical = minimal_substitution_trajectory(pot, minkowski(), particle, initial, cfg)
    gap = np.max(np.abs(lorentz[-1].state.x.coords - canonical[-1].state.x.coords))
    assert gap < 1e-12


def test_minimal_substitution_with_zero_potential_reduces_to_geodesic():
    g = schwarzschild(1.0)
    particle = Particle(1.0, 1.0)
    initial = circular_orbit_state(1.0, 10.0)
    cfg = IntegratorConfig(step=5e-2, tau_max=20.0)
    geo = geodesic_integrate(g, particle, initial, cfg)
    canonical = minimal_substitution_trajectory(zero_potential(), g, particle, initial, cfg)
    gap = np.max(np.abs(geo[-1].state.x.coords - canonical[-1].state.x.coords))
    assert gap < 1e-9


# ---------------------------------------------------------------------------
# terminal statuses and error paths


def test_plunge_exits_domain_instead_of_crashing():
    g = schwarzschild(1.0)
    gmat = g.matrix_raw(np.array([0.0, 6.0, math.pi / 2, 0.0]))
    initial = state([0.0, 6.0, math.pi / 2, 0.0], [math.sqrt(-1.0 / gmat[0, 0]), 0, 0, 0])
    traj = geodesic_integrate(
        g, Particle(1.0), initial, IntegratorConfig(step=1e-2, tau_max=40.0)
    )
    assert traj.status == "domain-exit"
    assert traj.reason is not None
    # every retained sample is still outside the horizon
    assert all(s.state.x.coords[1] > 2.0 for s in traj)


def test_max_steps_status():
    cfg = IntegratorConfig(step=0.1, tau_max=10.0, max_steps=5)
    traj = integrate(zero_connection(), Particle(1.0), rest_state(), cfg)
    assert traj.status == "max-steps"
    assert len(traj) == 6  # initial sample plus five steps


def test_adaptive_rejects_impossible_tolerance():
    conn = electromagnetic_connection(uniform_faraday(b_field=[0, 0, 1.0]), 1.0)
    cfg = IntegratorConfig(
        method="rk45-adaptive", rtol=0.0, atol=1e-300, tau_max=10.0
    )
    initial = state([0, 0, 0, 0], [oracles.gamma_from_u([0.5, 0, 0]), 0.5, 0, 0])
    with pytest.raises(StepRejected):
        integrate(conn, Particle(1.0, 1.0), initial, cfg)


def test_initial_point_outside_domain_raises():
    g = schwarzschild(1.0)
    bad = state([0.0, 1.5, math.pi / 2, 0.0], [1.0, 0, 0, 0])
    with pytest.raises(OutsideDomain):
        geodesic_integrate(g, Particle(1.0), bad, IntegratorConfig())


def test_single_step_matches_first_integrate_sample():
    g = schwarzschild(1.0)
    initial = circular_orbit_state(1.0, 10.0)
    cfg = IntegratorConfig(step=1e-2, tau_max=1.0)
    conn = gravitational_connection(g)
    one = step(conn, Particle(1.0), initial, cfg)
    traj = integrate(conn, Particle(1.0), initial, cfg)
    np.testing.assert_array_equal(one.x.coords, traj[1].state.x.coords)
    np.testing.assert_array_equal(one.u.components, traj[1].state.u.components)
    assert one.tau == traj[1].state.tau


def test_coordinate_force_input_validation():
    with pytest.raises(ValueError):
        coordinate_force([], Particle(1.0))
    # strictly decreasing coordinate time must be rejected
    samples = []
    for i, t in enumerate([0.0, 1.0, 0.5, 2.0]):
        st_i = state([t, float(i), 0.0, 0.0], [1.0, 0, 0, 0])
        samples.append(TrajectorySample(dataclasses.replace(st_i, tau=float(i)), 0.0))
    with pytest.raises(NonMonotoneTime):
        coordinate_force(samples, Particle(1.0))


def test_rk4_error_shrinks_sixteen_fold_per_halving():
    m = e = b = 1.0
    u_perp = 0.1
    tau_end = oracles.proper_period(m, e, b)
    conn = electromagnetic_connection(uniform_faraday(b_field=[0, 0, b]), e)
    initial = state([0, 0, 0, 0], [oracles.gamma_from_u([u_perp, 0, 0]), u_perp, 0, 0])
    x_exact, _ = oracles.cyclotron_state(m, e, b, u_perp, tau_end)
    errors = []
    for h in (2e-2, 1e-2, 5e-3):
        traj = integrate(
            conn, Particle(m, e), initial, IntegratorConfig(step=h, tau_max=tau_end)
        )
        errors.append(np.max(np.abs(traj[-1].state.x.coords - x_exact)))
    for coarse, fine in zip(errors, errors[1:]):
        assert 16 * 0.8 < coarse / fine < 16 * 1.2
