#!/usr/bin/env python3
"""
Experiments
Single runs, convergence sweeps and oracle cross-checks behind the three
commands. Each run_* function returns plain data (dicts and arrays); the
command-line layer decides where it is written.
"""

import logging
import math
import multiprocessing
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

import config
from adiabatic import InitialMoments, berry_alpha, build_factorized, compare
from dynamics import (
    integrate_propagator, integrate_trajectory, simplified_solution, static_solution,
)
from errors import ConfigError
from geometry import (
    FrameFlow, displacement, holonomy_angle, rotation_axis_angle, solid_angle, wrap_angle,
)
from magtrans import FluxConstants, path_ordered_oracle, phi_P
from run_config import RunConfig
from wavepacket import apply_factorized, ground_state, overlap, propagate

log = logging.getLogger(__name__)

FRAME_COLUMNS = (["s"] + [f"e{i}{c}" for i in (1, 2, 3) for c in "xyz"]
                 + [f"E{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
                 + ["sigma1", "sigma2", "d1", "d2"])
TRAJECTORY_COLUMNS = ["t", "x1", "x2", "x3", "P1", "P2", "P3", "xt1", "xt2", "xt3", "energy"]
SWEEP_METRICS = ("map_error", "offset_error", "alpha_error", "displacement_error",
                 "simplified_displacement_error", "wavepacket_phase_error")
CONSISTENCY_STATES = 4
AXIAL_KICK = 0.25


@dataclass
class RunResult:
    """Summary dict plus the dense table that goes with it."""
    summary: dict
    columns: list = None
    rows: np.ndarray = None


# =====================================================================
# geometry
# =====================================================================

def run_geometry(cfg: RunConfig) -> RunResult:
    """Frames, E(s), sigma(s), d(s), phi_P, its oracle and the solid angle."""
    path = cfg.build_path()
    flow = FrameFlow(path)
    a = cfg.params.a
    kappa = FluxConstants(cfg.params.kappa)

    s = np.linspace(0.0, 1.0, cfg.trajectory_samples)
    F = flow.frame(s)
    E = np.einsum("ji,kjl->kil", flow.F0, F)
    sig = flow.sigma(s)
    curve = displacement(path, 1.0, a, flow=flow, points=cfg.grid)
    d = curve.at(s)
    rows = np.column_stack([s, np.swapaxes(F, 1, 2).reshape(len(s), 9), E.reshape(len(s), 9), sig, d])

    ortho = float(np.max(np.linalg.norm(np.einsum("kji,kjl->kil", F, F) - np.eye(3), axis=(1, 2))))
    dn = path.dn(s)
    crosscheck = float(np.max(np.abs(sig + np.einsum("kim,ki->km", F[:, :, :2], dn))))
    phase = phi_P(path, a, kappa, 1.0, flow=flow, points=cfg.grid)
    oracle = path_ordered_oracle(curve, kappa, cfg.oracle_segments)
    axis, angle = rotation_axis_angle(E[-1], flow.F0)

    summary = {
        "command": "geometry",
        "path": path.spec,
        "closed": path.closed,
        "a": a,
        "displacement": curve.end,
        "displacement_norm": float(np.linalg.norm(curve.end)),
        "phi_P": phase,
        "oracle_phase": oracle.phase,
        "oracle_segments": cfg.oracle_segments,
        "oracle_error": abs(phase - oracle.phase),
        "E": E[-1],
        "holonomy_angle": holonomy_angle(E[-1]),
        "rotation_axis": axis,
        "rotation_angle": angle,
        "max_orthonormality_error": ortho,
        "max_sigma_crosscheck": crosscheck,
        "transport_evaluations": flow.nfev,
    }
    if path.closed:
        omega = solid_angle(path)
        summary["solid_angle"] = omega
        summary["holonomy_minus_solid_angle"] = abs(wrap_angle(holonomy_angle(E[-1]) - omega))
    log.info("geometry: |d(1)| = %.12g, phi_P = %.12g", summary["displacement_norm"], phase)
    return RunResult(summary, list(FRAME_COLUMNS), rows)


# =====================================================================
# evolve
# =====================================================================

def _frame_consistency(cfg, p, path, flow, direct):
    """Largest lab/rotating disagreement on seeded random initial conditions."""
    rotating = integrate_propagator(p, path, "rotating", cfg.ode_tol, flow=flow)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(CONSISTENCY_STATES):
        z0 = rng.normal(size=6)
        z0[2] += p.a
        gap = np.linalg.norm(direct.apply(z0) - rotating.apply(z0)) / (1.0 + np.linalg.norm(z0))
        worst = max(worst, float(gap))
    return worst, rotating.symplectic_error()


def _alpha_spread(cfg, p, path, flow, curve):
    """Spread of the adiabatic alpha(1) over seeded initial centers with <x3> = a."""
    rng = np.random.default_rng(cfg.seed)
    ends = []
    for _ in range(CONSISTENCY_STATES):
        center = np.append(rng.normal(size=2), p.a)
        ends.append(berry_alpha(p, path, InitialMoments(center), "adiabatic", flow=flow, curve=curve).end)
    return float(max(ends) - min(ends))


def evolve_point(cfg: RunConfig, p, path=None, flow=None, wavepacket=True, consistency=False):
    """Direct vs factorized evolution for one parameter set."""
    path = path or cfg.build_path()
    flow = flow or FrameFlow(path)
    F0 = flow.F0
    n0 = F0[:, 2]

    curve = displacement(path, 1.0, p.a, flow=flow, points=cfg.grid)
    direct = integrate_propagator(p, path, "lab", cfg.ode_tol)
    fact = build_factorized(p, path, 1.0, cfg.ode_tol, flow=flow, curve=curve)
    report = compare(direct, fact)

    center = InitialMoments(np.array([0.0, 0.0, p.a]))
    alpha_direct = berry_alpha(p, path, center, "direct", flow=flow, tol=cfg.ode_tol, curve=curve)
    alpha_adiabatic = berry_alpha(p, path, center, "adiabatic", flow=flow, curve=curve)
    alpha_error = abs(alpha_direct.end - fact.phi_P)
    alpha_spread = _alpha_spread(cfg, p, path, flow, curve)
    if alpha_spread > cfg.quad_tol:
        log.warning("alpha spread %.2e over initial states exceeds quad_tol %.0e", alpha_spread, cfg.quad_tol)

    # drift of the direct solution, read on (e1(1), e2(1))
    z_T = direct.apply(center.lab_state(p, F0))
    drift = (flow.frame(1.0).T @ z_T[:3])[:2]

    # reduced system with an axial excitation proportional to a
    z0_rot = center.rotating_state(p)
    z0_rot[2] += AXIAL_KICK * p.a
    X_T = simplified_solution(p, path, z0_rot, p.T, flow=flow)
    shift = X_T[:2] - static_solution(p, z0_rot, p.T)[:2]

    point = {
        "T": p.T,
        "epsilon": p.epsilon,
        "map_error": report.map_error,
        "offset_error": report.offset_error,
        "relative_map_error": report.relative_map_error,
        "relative_offset_error": report.relative_offset_error,
        "direct_symplectic_error": report.direct_symplectic_error,
        "factorized_symplectic_error": report.factorized_symplectic_error,
        "phi_P": fact.phi_P,
        "alpha": alpha_direct.end,
        "alpha_adiabatic": alpha_adiabatic.end,
        "alpha_error": alpha_error,
        "alpha_relative_error": alpha_error / abs(fact.phi_P) if fact.phi_P != 0 else alpha_error,
        "alpha_state_spread": alpha_spread,
        "quad_tol": cfg.quad_tol,
        "alpha_state_independent": alpha_spread <= cfg.quad_tol,
        "displacement": fact.d,
        "displacement_error": float(np.linalg.norm(drift - fact.d)),
        "simplified_displacement_error": float(np.linalg.norm(shift - fact.d)),
        "holonomy_angle": fact.holonomy_angle,
    }
    if path.closed:
        point["solid_angle"] = solid_angle(path)

    if wavepacket:
        psi0 = ground_state(p, n0)
        exact = propagate(psi0, p, path, cfg.ode_tol)
        factored = apply_factorized(fact, psi0, p, path, cfg.ode_tol)
        ov = overlap(factored, exact)
        point["wavepacket_overlap_abs"] = abs(ov)
        point["wavepacket_overlap_arg"] = math.atan2(ov.imag, ov.real)
        point["wavepacket_phase_error"] = abs(point["wavepacket_overlap_arg"])
        point["wavepacket_center_error"] = float(np.linalg.norm(exact.center - direct.apply(psi0.center)))
        point["wavepacket_norm_drift"] = abs(exact.log_norm() - psi0.log_norm())

    if consistency:
        gap, rot_err = _frame_consistency(cfg, p, path, flow, direct)
        point["frame_consistency_error"] = gap
        point["rotating_symplectic_error"] = rot_err

    log.info("T=%g: map_error %.3e, phi_P %.10g, alpha %.10g", p.T, report.map_error,
             fact.phi_P, alpha_direct.end)
    return point


def run_evolve(cfg: RunConfig) -> RunResult:
    """One run at the config's T, plus the trajectory of the ground-state center."""
    p = cfg.params
    path = cfg.build_path()
    flow = FrameFlow(path)
    summary = {"command": "evolve", "params": p.to_dict(), "path": path.spec, "seed": cfg.seed}
    summary.update(evolve_point(cfg, p, path, flow, wavepacket=True, consistency=True))

    z0 = InitialMoments(np.array([0.0, 0.0, p.a])).lab_state(p, flow.F0)
    traj = integrate_trajectory(p, path, z0, samples=cfg.trajectory_samples, tol=cfg.ode_tol, flow=flow)
    summary["energy_drift"] = traj.energy_drift()
    rows = np.column_stack([traj.t, traj.z, traj.rotating[:, :3], traj.energy])
    return RunResult(summary, list(TRAJECTORY_COLUMNS), rows)


# =====================================================================
# converge
# =====================================================================

def _sweep_entry(args):
    cfg, T = args
    return evolve_point(cfg, cfg.params.with_T(T))


def fit_order(T_values, errors):
    """
    Least-squares slope of log(error) against log(T); the observed order
    in epsilon is minus the slope. Metrics below the error floor are skipped.
    """
    errors = np.asarray(errors, dtype=float)
    if np.all(errors < config.ERROR_FLOOR):
        return {"skipped": True, "reason": "identically zero"}
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        return {"skipped": True, "reason": "non-positive or non-finite errors"}
    fit = linregress(np.log(T_values), np.log(errors))
    order = -fit.slope
    lo, hi = config.ORDER_WINDOW
    return {
        "skipped": False,
        "slope": float(fit.slope),
        "order": float(order),
        "r_value": float(fit.rvalue),
        "monotone": bool(np.all(np.diff(errors) < 0)),
        "passed": bool(lo <= order <= hi),
    }


def run_converge(cfg: RunConfig) -> RunResult:
    """Evolve at every sweep T (in parallel when workers > 1) and fit the orders."""
    if not cfg.sweep or len(cfg.sweep) < config.MIN_SWEEP_POINTS:
        raise ConfigError(f"converge needs at least {config.MIN_SWEEP_POINTS} distinct T values")
    T_values = sorted(cfg.sweep)
    args = [(cfg, T) for T in T_values]
    if cfg.workers > 1:
        with multiprocessing.Pool(min(cfg.workers, len(args))) as pool:
            points = pool.map(_sweep_entry, args)
    else:
        points = [_sweep_entry(a) for a in args]

    fits = {}
    for metric in SWEEP_METRICS:
        values = [pt[metric] for pt in points if metric in pt]
        if len(values) == len(points):
            fits[metric] = fit_order(T_values, values)
    summary = {
        "command": "converge",
        "params": cfg.params.to_dict(),
        "path": cfg.build_path().spec,
        "T": T_values,
        "fits": fits,
        "order_window": list(config.ORDER_WINDOW),
        "passed": bool(fits["map_error"].get("passed", False)),
    }
    for metric, fit in fits.items():
        if fit["skipped"]:
            log.info("%s: slope test skipped (%s)", metric, fit["reason"])
        else:
            log.info("%s: observed order %.3f (%s)", metric, fit["order"],
                     "✓" if fit["passed"] else "✗")
    return RunResult(summary, None, points)
