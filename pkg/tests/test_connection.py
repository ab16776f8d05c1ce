"""Transport-kernel coefficient blocks and their builders.

Reference values below come from the closed-form connection
coefficients of the unit-mass vacuum metric at r = 10, theta = pi/2:
Gamma^r_tt = (M/r^2)(1 - 2M/r) = 0.008, Gamma^theta_{r theta} = 1/r = 0.1,
and the all-covariant (first slot lowered) Gamma_rtt = M/r^2 = 0.01.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasetransport.connection import (
    NonLinearConnection,
    Particle,
    electromagnetic_connection,
    eval_connection,
    gravitational_connection,
    superpose,
    zero_connection,
)
from phasetransport.errors import MalformedFaraday, OutsideDomain
from phasetransport.fields import FaradayField, matrix_from_eb, uniform_faraday
from phasetransport.metrics import minkowski, schwarzschild
from phasetransport.tensor import FourVector, SpacetimeEvent, Variance
from phasetransport.transport import acceleration_terms

X_REF = SpacetimeEvent([0.0, 10.0, np.pi / 2, 0.0])


def test_particle_validation():
    Particle(1.0, -2.0)
    with pytest.raises(ValueError):
        Particle(0.0)
    with pytest.raises(ValueError):
        Particle(-1.0)
    with pytest.raises(ValueError):
        Particle(1.0, np.nan)


def test_gravitational_block_reference_values():
    c = gravitational_connection(schwarzschild(1.0))
    contra = -c.order1_contra_raw(X_REF.coords)  # Gamma^m_{n a}
    np.testing.assert_allclose(contra[1, 0, 0], 0.008, rtol=1e-13)
    np.testing.assert_allclose(contra[2, 1, 2], 0.1, rtol=1e-13)
    lowered = c.order1(X_REF).values
    np.testing.assert_allclose(lowered[1, 0, 0], -0.01, rtol=1e-13)
    assert c.order0_raw is None


def test_gravitational_block_symmetric_in_trailing_slots():
    c = gravitational_connection(schwarzschild(1.0))
    block = c.order1(SpacetimeEvent([0.0, 7.0, 1.2, 0.4])).values
    np.testing.assert_allclose(block, np.swapaxes(block, 1, 2), rtol=0, atol=1e-12)


def test_em_block_is_charge_times_field():
    e, b = [0.1, 0.0, 0.2], [0.0, 1.0, 0.0]
    c = electromagnetic_connection(uniform_faraday(e, b), charge=3.0)
    x = SpacetimeEvent([0, 0, 0, 0])
    np.testing.assert_array_equal(c.order0(x).values, 3.0 * matrix_from_eb(e, b))
    assert c.order1_raw is None


def test_em_antisymmetry_gate_fires_on_evaluation():
    broken = FaradayField(lambda coords: np.eye(4), name="broken")
    c = electromagnetic_connection(broken, charge=1.0)
    with pytest.raises(MalformedFaraday):
        c.order0(SpacetimeEvent([0, 0, 0, 0]))


def test_eval_connection_is_affine_in_momentum():
    g = schwarzschild(1.0)
    c = gravitational_connection(g)
    p = FourVector([1.2, 0.3, 0.0, 0.01], Variance.UP)
    q = FourVector([0.5, -0.2, 0.1, 0.0], Variance.UP)
    f_p = eval_connection(c, X_REF, p).values
    f_q = eval_connection(c, X_REF, q).values
    f_sum = eval_connection(c, X_REF, p + q).values
    np.testing.assert_allclose(f_sum, f_p + f_q, rtol=0, atol=1e-14)


def test_eval_connection_requires_contravariant_momentum():
    c = zero_connection()
    with pytest.raises(ValueError):
        eval_connection(
            c, SpacetimeEvent([0, 0, 0, 0]), FourVector([1, 0, 0, 0], Variance.DOWN)
        )


def test_zero_connection_blocks_vanish():
    c = zero_connection()
    x = SpacetimeEvent([1, 2, 3, 4])
    assert np.all(c.order0(x).values == 0.0)
    assert np.all(c.order1(x).values == 0.0)


def test_superpose_adds_blocks_and_intersects_guards():
    g = schwarzschild(1.0)
    grav = gravitational_connection(g)
    em = electromagnetic_connection(uniform_faraday(b_field=[0, 0, 1.0]), charge=2.0)
    both = superpose(grav, em)
    np.testing.assert_array_equal(both.order0(X_REF).values, em.order0(X_REF).values)
    np.testing.assert_array_equal(both.order1(X_REF).values, grav.order1(X_REF).values)
    assert both.metric is g
    with pytest.raises(OutsideDomain):
        both.order0(SpacetimeEvent([0, 1.0, 1.0, 0.0]))  # inside the horizon guard


def test_superpose_rejects_two_curved_charts():
    a = gravitational_connection(schwarzschild(1.0))
    b = gravitational_connection(schwarzschild(2.0))
    with pytest.raises(ValueError):
        superpose(a, b)


def test_superpose_same_curved_chart_doubles_coefficients():
    g = schwarzschild(1.0)
    c = gravitational_connection(g)
    doubled = superpose(c, c)
    np.testing.assert_allclose(
        doubled.order1(X_REF).values, 2.0 * c.order1(X_REF).values, rtol=0, atol=0
    )


@settings(max_examples=40, deadline=None)
@given(
    mass=st.floats(0.5, 8.0),
    charge=st.floats(-3.0, 3.0),
    factor=st.floats(1.5, 4.0),
)
def test_em_acceleration_scales_inverse_mass_and_linear_charge(mass, charge, factor):
    field = uniform_faraday([0.1, 0.0, 0.0], [0.0, 0.0, 1.0])
    x = SpacetimeEvent([0, 0, 0, 0])
    u = FourVector([np.sqrt(1.26), 0.5, 0.0, -0.1], Variance.UP)

    base = electromagnetic_connection(field, charge)
    zeroth, first = acceleration_terms(base, Particle(mass, charge), x, u)
    assert np.all(first.components == 0.0)

    heavier = acceleration_terms(base, Particle(mass * factor, charge), x, u)[0]
    np.testing.assert_allclose(
        heavier.components * factor, zeroth.components, rtol=1e-14, atol=1e-300
    )

    scaled_conn = electromagnetic_connection(field, charge * factor)
    scaled, _ = acceleration_terms(scaled_conn, Particle(mass, charge * factor), x, u)
    np.testing.assert_allclose(
        scaled.components, factor * zeroth.components, rtol=1e-14, atol=1e-300
    )


@settings(max_examples=30, deadline=None)
@given(mass=st.floats(0.5, 8.0), factor=st.floats(1.5, 16.0))
def test_geodesic_block_ignores_particle_mass(mass, factor):
    c = gravitational_connection(schwarzschild(1.0))
    u = FourVector([1.2, 0.01, 0.0, 0.03], Variance.UP)
    _, first_a = acceleration_terms(c, Particle(mass), X_REF, u)
    _, first_b = acceleration_terms(c, Particle(mass * factor), X_REF, u)
    np.testing.assert_array_equal(first_a.components, first_b.components)
