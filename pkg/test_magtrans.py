#!/usr/bin/env python3
"""
Magnetic translation tests: the composition law, loop phases, phi_P and the
brute-force path-ordered product.
"""

import math

import numpy as np
import pytest
from scipy.stats import linregress

from errors import ConfigError
from geometry import DisplacementCurve, FieldPath, FrameFlow, displacement
from magtrans import (
    FluxConstants, MagneticTranslationElement as M, chord_closed_area, compose,
    compose_all, loop_phase, path_ordered_oracle, phi_P, phi_P_curve, shoelace_area,
)

UNIT = FluxConstants(1.0)


@pytest.fixture(scope="module")
def loop60():
    path = FieldPath.latitude(math.pi / 3, 1)
    flow = FrameFlow(path)
    return path, flow, displacement(path, 1.0, 1.0, flow=flow)


# ----------------------------------------------------------------------
# Group law
# ----------------------------------------------------------------------

def test_orthogonal_steps_pick_up_half_square_phase():
    delta = 0.3
    k = FluxConstants(2.5)
    m = compose(M.of([0.0, delta]), M.of([delta, 0.0]), k)
    assert m.d == (delta, delta)
    assert math.isclose(m.phase, -0.5 * 2.5 * delta * delta, rel_tol=1e-15)


def test_parallel_steps_add_without_phase():
    m = compose(M.of([0.2, -0.4]), M.of([0.5, -1.0]), UNIT)
    assert m.phase == 0.0
    assert np.allclose(m.vector, [0.7, -1.4])


def test_inverse_gives_identity():
    m = M.of([0.3, -0.7], phase=0.25)
    assert compose(m.inverse(), m, UNIT).is_identity()
    assert compose(m, m.inverse(), UNIT).is_identity()


def test_composition_is_associative():
    rng = np.random.default_rng(7)
    k = FluxConstants(1.7)
    for _ in range(10000):
        m1, m2, m3 = (M.of(rng.normal(size=2), rng.normal()) for _ in range(3))
        left = compose(m3, compose(m2, m1, k), k)
        right = compose(compose(m3, m2, k), m1, k)
        assert np.allclose(left.vector, right.vector, atol=1e-12)
        assert abs(left.phase - right.phase) < 1e-12


def test_commutator_phase():
    k = FluxConstants(0.8)
    d1, d2 = np.array([0.4, 1.1]), np.array([-0.9, 0.3])
    m1, m2 = M.of(d1), M.of(d2)
    gap = compose(m2, m1, k).phase - compose(m1, m2, k).phase
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    assert math.isclose(gap, -k.kappa * cross, rel_tol=1e-14)


def test_compose_all_is_path_ordered():
    elems = [M.of([1, 0]), M.of([0, 1]), M.of([-1, 0])]
    total = compose_all(elems, UNIT)
    manual = compose(elems[2], compose(elems[1], elems[0], UNIT), UNIT)
    assert total == manual
    assert compose_all([], UNIT).is_identity()


# ----------------------------------------------------------------------
# Loops
# ----------------------------------------------------------------------

def test_unit_square_loop_phase():
    square = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    assert math.isclose(loop_phase(square, UNIT), -1.0, rel_tol=1e-15)
    assert math.isclose(loop_phase(square[::-1], UNIT), 1.0, rel_tol=1e-15)
    assert math.isclose(shoelace_area(square[:-1]), 1.0)


def test_out_and_back_loop_has_zero_phase():
    assert loop_phase([[0, 0], [2, 1], [0, 0]], FluxConstants(3.0)) == 0.0


def test_loop_phase_scales_with_kappa():
    tri = [[0, 0], [2, 0], [0, 3], [0, 0]]
    assert math.isclose(loop_phase(tri, FluxConstants(0.5)), -0.5 * 3.0, rel_tol=1e-14)


def test_open_polygon_refused():
    with pytest.raises(ConfigError):
        loop_phase([[0, 0], [1, 0], [1, 1]], UNIT)


# ----------------------------------------------------------------------
# phi_P
# ----------------------------------------------------------------------

def test_phi_P_vanishes_without_motion_or_offset(loop60):
    path, flow, _ = loop60
    assert phi_P(FieldPath.constant(), 1.0, UNIT) == 0.0
    assert phi_P(path, 0.0, UNIT, flow=flow) == 0.0


def test_phi_P_latitude_closed_form(loop60):
    """Arc of radius (a/2) tan(theta0) over angle 2 pi cos(theta0); at 60 degrees -3 pi / 8."""
    path, flow, _ = loop60
    assert abs(phi_P(path, 1.0, UNIT, flow=flow) + 3 * math.pi / 8) < 1e-8


@pytest.mark.parametrize("theta0", [0.5, 0.9, 1.2])
def test_phi_P_latitude_general(theta0):
    path = FieldPath.latitude(theta0, 1)
    r = 0.5 * math.tan(theta0)
    sweep = 2 * math.pi * math.cos(theta0)
    expected = -(r * r / 2) * (sweep - math.sin(sweep))
    assert abs(phi_P(path, 1.0, UNIT) - expected) < 1e-8


def test_phi_P_scales_with_a_squared_and_kappa(loop60):
    path, flow, _ = loop60
    base = phi_P(path, 1.0, UNIT, flow=flow)
    assert math.isclose(phi_P(path, 2.0, UNIT, flow=flow), 4 * base, rel_tol=1e-12)
    assert math.isclose(phi_P(path, 1.0, FluxConstants(2.7), flow=flow), 2.7 * base, rel_tol=1e-12)


def test_phi_P_reparametrization_invariant():
    plain = phi_P(FieldPath.latitude(1.0, 1), 1.0, UNIT)
    warped = phi_P(FieldPath.latitude(1.0, 1, warp=0.4), 1.0, UNIT)
    assert abs(plain - warped) < 1e-8


def test_phi_P_is_minus_kappa_times_chord_closed_area(loop60):
    path, flow, curve = loop60
    k = FluxConstants(1.3)
    assert abs(phi_P(path, 1.0, k, flow=flow) + k.kappa * chord_closed_area(curve)) < 1e-6
    running = phi_P_curve(curve, k)
    assert running[0] == 0.0
    assert abs(running[-1] - phi_P(path, 1.0, k, flow=flow)) < 1e-6


def test_phi_P_across_slerp_breakpoints():
    path = FieldPath.slerp([[0, 0, 1], [1, 0, 1], [1, 1, 1]], closed=True)
    curve = displacement(path, 1.0, 1.0)
    assert abs(phi_P(path, 1.0, UNIT) + chord_closed_area(curve)) < 1e-6


# ----------------------------------------------------------------------
# Oracle
# ----------------------------------------------------------------------

def test_oracle_matches_phi_P(loop60):
    path, flow, curve = loop60
    oracle = path_ordered_oracle(curve, UNIT, 10000)
    assert abs(oracle.phase - phi_P(path, 1.0, UNIT, flow=flow)) < 1e-6
    assert np.allclose(oracle.vector, curve.end, atol=1e-12)


def test_oracle_converges_at_second_order(loop60):
    path, flow, curve = loop60
    target = phi_P(path, 1.0, UNIT, flow=flow)
    N = np.array([100, 200, 400, 800])
    errors = [abs(path_ordered_oracle(curve, UNIT, n).phase - target) for n in N]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    slope = linregress(np.log(N), np.log(errors)).slope
    assert abs(slope + 2.0) < 0.2


def test_oracle_straight_line_has_no_phase():
    s = np.linspace(0, 1, 51)
    curve = DisplacementCurve(s, np.outer(s, [1.0, 2.0]), 1.0)
    assert abs(path_ordered_oracle(curve, FluxConstants(4.0), 64).phase) < 1e-12


def test_oracle_needs_two_segments(loop60):
    with pytest.raises(ConfigError):
        path_ordered_oracle(loop60[2], UNIT, 1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
