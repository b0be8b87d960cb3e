#!/usr/bin/env python3
"""
End-to-end checks on the 60-degree latitude loop (omega = 1, omega_c = 2.7,
a = 1): holonomy, group law, phi_P against its oracle, and the T sweep
behind the convergence claims. The sweep is computed once per module.
"""

import math

import numpy as np
import pytest

from adiabatic import InitialMoments, berry_alpha, build_factorized
from config import ODE_TOL
from dynamics import SystemParams, integrate_propagator, static_propagator
from experiments import evolve_point, fit_order, run_geometry
from geometry import FieldPath, FrameFlow, displacement, frame_matrix, rotation_axis_angle
from magtrans import FluxConstants, MagneticTranslationElement, compose, loop_phase
from magtrans import path_ordered_oracle, phi_P
from run_config import parse_config

SWEEP = [200.0, 400.0, 800.0, 1600.0]
LOOP = {"kind": "latitude", "theta0": math.pi / 3, "turns": 1}
PARAMS = {"omega_c": 2.7, "omega": 1.0, "a": 1.0, "T": 200.0}


@pytest.fixture(scope="module")
def cfg():
    return parse_config({"params": PARAMS, "path": LOOP, "sweep": SWEEP, "seed": 0})


@pytest.fixture(scope="module")
def sweep(cfg):
    path = cfg.build_path()
    flow = FrameFlow(path)
    return [evolve_point(cfg, p, path, flow, wavepacket=True) for p in cfg.sweep_params()]


def test_holonomy_is_solid_angle():
    path = FieldPath.latitude(math.pi / 3, 1)
    flow = FrameFlow(path)
    axis, angle = rotation_axis_angle(frame_matrix(path, 1.0, flow=flow), flow.F0)
    assert abs(angle - math.pi) < 1e-6
    assert abs(abs(axis @ path.n(0.0)) - 1.0) < 1e-6


def test_group_law():
    k = FluxConstants(1.0)
    rng = np.random.default_rng(0)
    for _ in range(10000):
        m1, m2, m3 = (MagneticTranslationElement.of(rng.uniform(-2, 2, 2)) for _ in range(3))
        left = compose(m3, compose(m2, m1, k), k)
        right = compose(compose(m3, m2, k), m1, k)
        assert abs(left.phase - right.phase) < 1e-12
    square = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    assert abs(loop_phase(square, k) + 1.0) < 1e-12


def test_phi_P_oracle():
    path = FieldPath.latitude(math.pi / 3, 1)
    flow = FrameFlow(path)
    k = FluxConstants(1.0)
    curve = displacement(path, 1.0, 1.0, flow=flow)
    target = phi_P(path, 1.0, k, flow=flow)
    assert abs(target + 3 * math.pi / 8) < 1e-8
    assert abs(path_ordered_oracle(curve, k, 10000).phase - target) < 1e-6


def test_geometry_run_summary(cfg):
    result = run_geometry(cfg)
    summary = result.summary
    assert abs(summary["displacement_norm"] - math.sqrt(3)) < 1e-8
    assert abs(summary["solid_angle"] - math.pi) < 1e-6
    assert summary["holonomy_minus_solid_angle"] < 1e-6
    assert summary["oracle_error"] < 1e-6
    assert summary["max_orthonormality_error"] < 1e-9
    assert result.rows.shape == (cfg.trajectory_samples, len(result.columns))


@pytest.mark.slow
def test_factorization_error_is_first_order(sweep):
    errors = [pt["map_error"] for pt in sweep]
    fit = fit_order(SWEEP, errors)
    assert fit["monotone"]
    assert 0.8 <= fit["order"] <= 1.2
    assert all(pt["direct_symplectic_error"] < 1e-7 for pt in sweep)
    assert all(pt["factorized_symplectic_error"] < 1e-7 for pt in sweep)


@pytest.mark.slow
def test_alpha_approaches_phi_P(sweep):
    relative = [pt["alpha_relative_error"] for pt in sweep]
    assert all(b < a for a, b in zip(relative, relative[1:]))
    assert relative[-1] < 0.05
    assert abs(sweep[-1]["phi_P"] + 2.7 * 3 * math.pi / 8) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("metric", ["displacement_error", "simplified_displacement_error"])
def test_drift_approaches_displacement(sweep, metric):
    fit = fit_order(SWEEP, [pt[metric] for pt in sweep])
    assert not fit["skipped"]
    assert fit["monotone"]
    assert 0.8 <= fit["order"] <= 1.2


def test_alpha_is_state_independent(cfg):
    p = cfg.params.with_T(400.0)
    path = cfg.build_path()
    flow = FrameFlow(path)
    ends = [berry_alpha(p, path, InitialMoments(c), "adiabatic", flow=flow).end
            for c in ([0.0, 0.0, 1.0], [0.5, 0.5, 1.0], [-0.8, 0.2, 1.0], [0.0, -1.5, 1.0])]
    assert max(ends) - min(ends) < 1e-8


def test_displacement_independent_of_field_strength(cfg):
    path = cfg.build_path()
    flow = FrameFlow(path)
    p = cfg.params.with_T(20.0)
    d1 = build_factorized(p, path, flow=flow).d
    d2 = build_factorized(SystemParams(2 * p.omega_c, p.omega, p.a, p.T), path, flow=flow).d
    assert np.linalg.norm(d1 - d2) < 1e-12


@pytest.mark.slow
def test_wavepacket_matches_factorization(sweep):
    last, previous = sweep[-1], sweep[-2]
    assert last["wavepacket_overlap_abs"] > 0.99
    assert last["wavepacket_phase_error"] < 0.05
    assert last["wavepacket_overlap_abs"] > previous["wavepacket_overlap_abs"]
    assert last["wavepacket_phase_error"] < previous["wavepacket_phase_error"]
    # global integration error grows linearly in T
    assert all(pt["wavepacket_center_error"] < 10 * ODE_TOL * pt["T"] for pt in sweep)


def test_static_monodromy_and_frame_consistency(cfg):
    p = cfg.params.with_T(2 * math.pi / 2.7 * 3)
    static = FieldPath.constant()
    numeric = integrate_propagator(p, static)
    exact = static_propagator(p, p.T)
    assert np.allclose(numeric.S, exact.S, atol=1e-6)
    assert np.allclose(numeric.b, exact.b, atol=1e-6)

    path = cfg.build_path()
    q = cfg.params.with_T(10.0)
    lab = integrate_propagator(q, path, "lab", ODE_TOL)
    rot = integrate_propagator(q, path, "rotating", ODE_TOL)
    assert np.allclose(lab.S, rot.S, rtol=0, atol=10 * ODE_TOL)
    assert np.allclose(lab.b, rot.b, rtol=0, atol=10 * ODE_TOL)
    assert lab.symplectic_error() < 1e-7
    assert rot.symplectic_error() < 1e-7


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
