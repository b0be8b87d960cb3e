#!/usr/bin/env python3
"""
Adiabatic Module
The factorized propagator U = R . M_P . D as phase-space maps:

    D   static flow of H(0) over [0, T]           (dynamics, field frozen at n(0))
    M_P magnetic translation by d with phase phi_P (magtrans)
    R   rotation e_i(0) -> e_i(s) of the transported frame (geometry)

plus the comparison against direct integration and the phase alpha
obtained from the two Berry-connection integrands.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from config import ODE_TOL
from dynamics import (
    AffinePropagator, SystemParams, integrate_propagator, integrate_trajectory,
    sample_count, static_solution,
)
from errors import StateError
from geometry import (
    DisplacementCurve, FieldPath, FrameFlow, displacement, frame_rotation, holonomy_angle,
)
from magtrans import FluxConstants, phi_P

log = logging.getLogger(__name__)

MOMENT_TOL = 1e-9


def block_rotation(Q):
    """blockdiag(Q, Q): rotation of positions and momenta."""
    Q = np.asarray(Q, dtype=float)
    out = np.zeros((6, 6))
    out[:3, :3] = Q
    out[3:, 3:] = Q
    return out


def translation_map(p: SystemParams, n0, d_vec, phase=0.0) -> AffinePropagator:
    """
    Classical action of the magnetic translation generated by
    K = P + (m omega_c/2) n0 x x:  x -> x + d,  P -> P + (m omega_c/2) n0 x d.
    Leaves the velocity P/m - (omega_c/2) n0 x x unchanged.
    """
    d_vec = np.asarray(d_vec, dtype=float)
    b = np.concatenate([d_vec, p.c_B * np.cross(n0, d_vec)])
    return AffinePropagator(np.eye(6), b, phase)


@dataclass
class FactorizedPropagator:
    """R o M_P o D with its ingredients; rightmost acts first."""
    R_part: np.ndarray
    M_part: AffinePropagator
    D_part: AffinePropagator
    phi_P: float
    d: np.ndarray                 # displacement on (e1(0), e2(0))
    E: np.ndarray                 # frame matrix at s
    s: float = 1.0

    def total(self) -> AffinePropagator:
        D = AffinePropagator(self.D_part.S, self.D_part.b, 0.0)
        R = AffinePropagator(self.R_part, np.zeros(6), 0.0)
        return D.then(self.M_part).then(R)

    def reversed_order(self) -> AffinePropagator:
        """M o R o D, the wrong order; differs from total() whenever d and the holonomy are non-zero."""
        D = AffinePropagator(self.D_part.S, self.D_part.b, 0.0)
        R = AffinePropagator(self.R_part, np.zeros(6), 0.0)
        return D.then(R).then(self.M_part)

    @property
    def holonomy_angle(self):
        return holonomy_angle(self.E)


def build_factorized(p: SystemParams, path: FieldPath, s: float = 1.0, tol: float = ODE_TOL,
                     flow: Optional[FrameFlow] = None,
                     curve: Optional[DisplacementCurve] = None) -> FactorizedPropagator:
    """Assemble R, M_P and D for the process stopped at parameter s (time sT)."""
    flow = flow or FrameFlow(path)
    F0 = flow.F0
    n0 = F0[:, 2]

    D = integrate_propagator(p.with_T(s * p.T), path.frozen_at(0.0), "lab", tol)
    curve = curve or displacement(path, s, p.a, flow=flow)
    d = curve.at(s) if curve.s[-1] > s else curve.end
    d_vec = F0[:, :2] @ d
    phase = phi_P(path, p.a, FluxConstants(p.kappa), s, flow=flow)
    M = translation_map(p, n0, d_vec, phase)
    Q = frame_rotation(flow, s)
    E = F0.T @ flow.frame(s)
    log.debug("factorized s=%g: |d|=%.6g phi_P=%.10g holonomy=%.10g",
              s, np.linalg.norm(d), phase, holonomy_angle(E))
    return FactorizedPropagator(block_rotation(Q), M, D, phase, np.asarray(d), E, s)


@dataclass
class ErrorReport:
    """Distance between a direct propagator and a factorized one."""
    map_error: float
    offset_error: float
    relative_map_error: float
    relative_offset_error: float
    direct_symplectic_error: float
    factorized_symplectic_error: float

    def to_dict(self):
        return dict(self.__dict__)


def compare(direct: AffinePropagator, fact) -> ErrorReport:
    """Frobenius distance of the maps and Euclidean distance of the offsets."""
    other = fact.total() if isinstance(fact, FactorizedPropagator) else fact
    map_error = float(np.linalg.norm(direct.S - other.S))
    offset_error = float(np.linalg.norm(direct.b - other.b))
    s_norm = float(np.linalg.norm(direct.S))
    b_norm = float(np.linalg.norm(direct.b))
    return ErrorReport(
        map_error=map_error,
        offset_error=offset_error,
        relative_map_error=map_error / s_norm if s_norm > 0 else map_error,
        relative_offset_error=offset_error / b_norm if b_norm > 0 else offset_error,
        direct_symplectic_error=direct.symplectic_error(),
        factorized_symplectic_error=other.symplectic_error(),
    )


# =====================================================================
# alpha
# =====================================================================

@dataclass
class InitialMoments:
    """First moments of a state at t = 0 in e(0) components."""
    center: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)

    def validate(self, p: SystemParams):
        """
        Raises:
            StateError: <x3(0)> != a or a non-zero mean velocity
        """
        if abs(self.center[2] - p.a) > MOMENT_TOL * max(1.0, abs(p.a)):
            raise StateError(f"<x3(0)> = {self.center[2]} differs from a = {p.a}")
        if np.linalg.norm(self.velocity) > MOMENT_TOL:
            raise StateError(f"mean velocity {self.velocity} is not zero")

    def rotating_state(self, p: SystemParams):
        """(X, P-tilde) in e(0) components: P = m v + (m omega_c/2) z-hat x X."""
        X, v = self.center, self.velocity
        P = p.m * v + p.c_B * np.array([-X[1], X[0], 0.0])
        return np.concatenate([X, P])

    def lab_state(self, p: SystemParams, F0):
        z = self.rotating_state(p)
        return np.concatenate([F0 @ z[:3], F0 @ z[3:]])


@dataclass
class AlphaCurve:
    """alpha(s) and its two parts, cumulative from s = 0."""
    t: np.ndarray
    s: np.ndarray
    rotation_term: np.ndarray
    translation_term: np.ndarray
    method: str

    @property
    def alpha(self):
        return self.rotation_term + self.translation_term

    @property
    def end(self):
        return float(self.alpha[-1])


def berry_alpha(p: SystemParams, path: FieldPath, moments: InitialMoments,
                method: str = "adiabatic", flow: Optional[FrameFlow] = None,
                samples: Optional[int] = None, tol: float = ODE_TOL,
                curve: Optional[DisplacementCurve] = None) -> AlphaCurve:
    """
    alpha(t) = int_0^t [ w . <X x P~> + d'(t) . <K~> - (m omega_c/2) d x d' ] dt'

    with w = epsilon (sigma2, -sigma1, 0) the frame's angular velocity,
    K~ = P~ + (m omega_c/2) z-hat x X the in-plane magnetic-translation
    generator, d' = epsilon (a/2) sigma and everything in rotating
    components. The first term is the rotation integrand, the other two the
    translation integrand.

    Args:
        method: "adiabatic" takes the moments <d + X^(0)(t)> of the static
            motion shifted by the displacement; "direct" takes the first
            moments of the finite-epsilon classical solution

    Raises:
        StateError: moments violate <x3(0)> = a or zero mean velocity
    """
    if method not in ("adiabatic", "direct"):
        raise ValueError(f"method must be 'adiabatic' or 'direct', got {method!r}")
    moments.validate(p)
    flow = flow or FrameFlow(path)
    samples = samples or sample_count(p)
    t = np.linspace(0.0, p.T, samples)
    s = t / p.T if p.T > 0 else np.zeros_like(t)
    eps = p.epsilon if p.T > 0 else 0.0

    curve = curve or displacement(path, 1.0, p.a, flow=flow)
    d = curve.at(s)
    sig = flow.sigma(s)
    d_dot = eps * 0.5 * p.a * sig
    w = eps * np.column_stack([sig[:, 1], -sig[:, 0], np.zeros_like(s)])

    z0 = moments.rotating_state(p)
    if method == "adiabatic":
        base = np.atleast_2d(static_solution(p, z0, t))
        X = base[:, :3].copy()
        Pt = base[:, 3:].copy()
        X[:, :2] += d
        Pt[:, 0] += -p.c_B * d[:, 1]
        Pt[:, 1] += p.c_B * d[:, 0]
    else:
        traj = integrate_trajectory(p, path, moments.lab_state(p, flow.F0), samples=samples,
                                    tol=tol, flow=flow)
        X, Pt = traj.rotating[:, :3], traj.rotating[:, 3:]

    rotation = np.einsum("ki,ki->k", w, np.cross(X, Pt))
    K = Pt[:, :2] + p.c_B * np.column_stack([-X[:, 1], X[:, 0]])
    translation = (np.einsum("ki,ki->k", d_dot, K)
                   - p.c_B * (d[:, 0] * d_dot[:, 1] - d[:, 1] * d_dot[:, 0]))

    if p.T == 0:
        zeros = np.zeros_like(t)
        return AlphaCurve(t, s, zeros, zeros.copy(), method)
    rot_cum = cumulative_simpson(rotation, x=t, initial=0)
    tr_cum = cumulative_simpson(translation, x=t, initial=0)
    log.debug("alpha(%s) T=%g: rotation %.10g translation %.10g",
              method, p.T, rot_cum[-1], tr_cum[-1])
    return AlphaCurve(t, s, rot_cum, tr_cum, method)


def rotation_integrand_shorthand(p: SystemParams, sigma_t, X, symmetric=True):
    """
    Closed form of the rotation integrand for adiabatic moments X = <d + X^(0)>:
        (kappa a/2) (sigma1 <X2> - sigma2 <X1>)            symmetric=True
        (kappa a/2) (sigma1 <X2> - sigma2 <X2>)            symmetric=False
    with sigma in time units. Only the symmetric form equals w . <X x P~>.
    """
    sigma_t = np.atleast_2d(sigma_t)
    X = np.atleast_2d(X)
    second = X[:, 0] if symmetric else X[:, 1]
    return 0.5 * p.kappa * p.a * (sigma_t[:, 0] * X[:, 1] - sigma_t[:, 1] * second)
