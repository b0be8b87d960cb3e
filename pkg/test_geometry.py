#!/usr/bin/env python3
"""
Geometry tests: parallel transport, the frame matrix, sigma, the
displacement integral and the solid angle.
"""

import math
import os

import numpy as np
import pytest

from errors import PathError
from geometry import (
    FieldPath, FrameFlow, displacement, frame_matrix, holonomy_angle, initial_frame,
    path_from_spec, path_ordered_frame_matrix, rotation_axis_angle, sigma, solid_angle,
    transport_frame, wrap_angle,
)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")

THIRD = math.pi / 3
QUARTER = math.pi / 4


def cap_area(theta0):
    return 2 * math.pi * (1 - math.cos(theta0))


@pytest.fixture(scope="module")
def loop60():
    path = FieldPath.latitude(THIRD, 1)
    return path, FrameFlow(path)


@pytest.fixture(scope="module")
def loop45():
    path = FieldPath.latitude(QUARTER, 1)
    return path, FrameFlow(path)


# ----------------------------------------------------------------------
# Paths
# ----------------------------------------------------------------------

def test_path_kinds_are_unit_and_closed_flag():
    lat = FieldPath.latitude(0.7, 2)
    s = np.linspace(0, 1, 101)
    assert np.allclose(np.linalg.norm(lat.n(s), axis=1), 1.0, atol=1e-12)
    assert lat.closed

    arc = FieldPath.slerp([[0, 0, 1], [1, 0, 1], [1, 1, 0.5]])
    assert np.allclose(np.linalg.norm(arc.n(s), axis=1), 1.0, atol=1e-12)
    assert not arc.closed
    assert len(arc.breakpoints) == 1


def test_latitude_derivatives_match_finite_differences():
    path = FieldPath.latitude(0.9, 1, warp=0.25)
    s, h = 0.37, 1e-5
    dn_fd = (path.n(s + h) - path.n(s - h)) / (2 * h)
    d2n_fd = (path.dn(s + h) - path.dn(s - h)) / (2 * h)
    assert np.allclose(path.dn(s), dn_fd, atol=1e-7)
    assert np.allclose(path.d2n(s), d2n_fd, atol=1e-6)


def test_path_from_spec_errors(tmp_path):
    with pytest.raises(PathError):
        path_from_spec({"kind": "spiral"})
    with pytest.raises(PathError):
        path_from_spec({"kind": "latitude"})
    with pytest.raises(PathError):
        path_from_spec({"kind": "latitude", "theta0": 1.0, "turns": 1.5})
    with pytest.raises(PathError):
        path_from_spec({"kind": "slerp", "waypoints": [[0, 0, 1], [0, 0, -1]]})
    with pytest.raises(PathError):
        path_from_spec({"kind": "table", "file": str(tmp_path / "missing.csv")})
    with pytest.raises(PathError):
        path_from_spec({"kind": "latitude", "theta0": 1.0, "warp": 1.5})


def test_initial_frame_fallback_near_x():
    F = initial_frame(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(F[:, 0], [0.0, 1.0, 0.0])
    assert np.allclose(F[:, 2], [1.0, 0.0, 0.0])
    assert math.isclose(np.linalg.det(F), 1.0, abs_tol=1e-12)


# ----------------------------------------------------------------------
# transport_frame / frame_matrix
# ----------------------------------------------------------------------

def test_constant_path_frames_are_fixed():
    path = FieldPath.constant([0.0, 0.0, 1.0])
    frames = transport_frame(path, np.linspace(0, 1, 11))
    F0 = frames[0].matrix()
    for fr in frames:
        assert np.allclose(fr.matrix(), F0, atol=1e-14)
    assert np.allclose(sigma(path, 0.5), 0.0)


@pytest.mark.parametrize("path", [
    FieldPath.latitude(1.2, 1, phi0=0.4),
    FieldPath.slerp([[0.2, 0.1, 1.0], [1.0, -0.3, 0.4], [-0.2, 1.0, 0.3]], closed=True),
    FieldPath.latitude(0.5, -2, warp=-0.4),
])
def test_frames_orthonormal_and_right_handed(path):
    s = np.linspace(0, 1, 257)
    for fr in transport_frame(path, s):
        assert abs(fr.e1 @ fr.e2) < 1e-9
        assert abs(np.linalg.norm(fr.e1) - 1) < 1e-9
        assert np.linalg.norm(np.cross(fr.e1, fr.e2) - fr.e3) < 1e-9
        assert np.linalg.norm(fr.e3 - path.n(fr.s)) < 1e-9


def test_frames_are_twist_free(loop45):
    path, flow = loop45
    h = 1e-4
    for s in (0.1, 0.45, 0.8):
        F = flow.frame(np.array([s - h, s, s + h]))
        de1 = (F[2, :, 0] - F[0, :, 0]) / (2 * h)
        de2 = (F[2, :, 1] - F[0, :, 1]) / (2 * h)
        assert abs(de1 @ F[1, :, 1]) < 1e-5
        assert abs(de2 @ F[1, :, 0]) < 1e-5


def test_frame_matrix_identity_at_start(loop60):
    path, flow = loop60
    fm = frame_matrix(path, 0.0, flow=flow)
    assert np.allclose(fm.E, np.eye(3), atol=1e-12)


def test_latitude_holonomy_magnitude_pi(loop60):
    path, flow = loop60
    fm = frame_matrix(path, 1.0, flow=flow)
    assert fm.orthogonality_error() < 1e-9
    assert abs(fm.determinant() - 1) < 1e-9
    assert abs(fm.E[2, 2] - 1) < 1e-9
    assert abs(abs(holonomy_angle(fm)) - math.pi) < 1e-6
    axis, angle = rotation_axis_angle(fm, flow.F0)
    assert abs(angle - math.pi) < 1e-6
    assert abs(abs(axis @ path.n(0.0)) - 1) < 1e-6


def test_holonomy_sign_follows_orientation(loop45):
    """Counter-clockwise about n: E(1) turns e1(0) by +Omega; reversing flips it."""
    path, flow = loop45
    omega = cap_area(QUARTER)
    E = frame_matrix(path, 1.0, flow=flow).E
    assert abs(wrap_angle(holonomy_angle(E) - omega)) < 1e-6

    back = FieldPath.latitude(QUARTER, -1)
    E_back = frame_matrix(back, 1.0).E
    assert abs(wrap_angle(holonomy_angle(E_back) + omega)) < 1e-6


def test_frame_matrix_equals_ordered_exponential(loop45):
    path, flow = loop45
    E = frame_matrix(path, 0.6, flow=flow).E
    E_prod = path_ordered_frame_matrix(path, 0.6, steps=2000)
    assert np.allclose(E, E_prod, atol=1e-5)


# ----------------------------------------------------------------------
# sigma
# ----------------------------------------------------------------------

def test_sigma_crosscheck_and_latitude_speed(loop60):
    path, flow = loop60
    s = np.linspace(0, 1, 101)
    sig = flow.sigma(s)
    F = flow.frame(s)
    proj = np.einsum("kim,ki->km", F[:, :, :2], path.dn(s))
    assert np.max(np.abs(sig + proj)) < 1e-9
    speed = np.linalg.norm(sig, axis=1)
    assert np.allclose(speed, 2 * math.pi * math.sin(THIRD), atol=1e-8)


def test_sigma_rate_analytic_matches_differences(loop45):
    path, flow = loop45
    s, h = 0.3, 1e-4
    fd = (flow.sigma(s + h) - flow.sigma(s - h)) / (2 * h)
    assert np.allclose(flow.sigma_rate(s), fd, atol=1e-5)


# ----------------------------------------------------------------------
# displacement
# ----------------------------------------------------------------------

def test_displacement_trivial_cases(loop60):
    path, flow = loop60
    assert np.allclose(displacement(FieldPath.constant(), 1.0, 1.0).end, 0.0)
    assert np.allclose(displacement(path, 1.0, 0.0, flow=flow).end, 0.0)


def test_latitude_displacement_matches_arc_oracle(loop60):
    path, flow = loop60
    curve = displacement(path, 1.0, 1.0, flow=flow)
    # arc of radius (a/2) tan(theta0) subtending 2 pi cos(theta0): chord sqrt(3)
    assert abs(np.linalg.norm(curve.end) - math.sqrt(3)) < 1e-8
    radius = 0.5 * math.tan(THIRD)
    assert np.linalg.norm(curve.d[0]) == 0.0
    assert np.max(np.linalg.norm(curve.d, axis=1)) <= 2 * radius + 1e-8


@pytest.mark.parametrize("theta0", [0.4, 1.0, 1.3])
def test_latitude_displacement_general_colatitude(theta0):
    path = FieldPath.latitude(theta0, 1)
    d = displacement(path, 1.0, 2.0).end
    expected = 2.0 * math.sin(theta0) * abs(math.sin(math.pi * math.cos(theta0))) / math.cos(theta0)
    assert abs(np.linalg.norm(d) - expected) < 1e-8


def test_displacement_reparametrization_invariant():
    plain = displacement(FieldPath.latitude(0.9, 1), 1.0, 1.0).end
    warped = displacement(FieldPath.latitude(0.9, 1, warp=0.3), 1.0, 1.0).end
    assert np.allclose(plain, warped, atol=1e-8)


def test_displacement_scales_linearly_in_a(loop45):
    path, flow = loop45
    d1 = displacement(path, 1.0, 1.0, flow=flow).end
    d3 = displacement(path, 1.0, 3.0, flow=flow).end
    assert np.allclose(d3, 3 * d1, atol=1e-12)


# ----------------------------------------------------------------------
# solid_angle
# ----------------------------------------------------------------------

def test_solid_angle_latitude(loop60):
    path, _ = loop60
    assert abs(solid_angle(path) - math.pi) < 1e-6
    assert abs(solid_angle(FieldPath.latitude(THIRD, -1)) + math.pi) < 1e-6


def test_holonomy_equals_solid_angle_for_geodesic_triangle():
    path = FieldPath.slerp([[1, 0, 0], [0, 1, 0], [0, 0, 1]], closed=True)
    omega = solid_angle(path)
    assert abs(omega - math.pi / 2) < 1e-9
    E = frame_matrix(path, 1.0).E
    assert abs(wrap_angle(holonomy_angle(E) - omega)) < 1e-6


def test_out_and_back_loop_has_no_area():
    path = FieldPath.slerp([[0, 0, 1], [1, 0.2, 0.3]], closed=True)
    assert path.closed
    assert abs(solid_angle(path)) < 1e-12
    E = frame_matrix(path, 1.0).E
    assert np.allclose(E, np.eye(3), atol=1e-9)


def test_solid_angle_refuses_open_path():
    with pytest.raises(PathError):
        solid_angle(FieldPath.slerp([[0, 0, 1], [1, 0, 0]]))


def test_table_path_tilted_loop():
    path = path_from_spec({"kind": "table", "file": "tilted_loop.csv"}, CONFIG_DIR)
    assert path.closed
    omega = cap_area(0.8)
    assert abs(solid_angle(path) - omega) < 1e-4
    E = frame_matrix(path, 1.0).E
    assert abs(E[2, 2] - 1) < 1e-6
    assert abs(wrap_angle(holonomy_angle(E) - omega)) < 1e-4


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
