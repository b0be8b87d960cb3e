#!/usr/bin/env python3
"""
Wavepacket Module
Gaussian states

    psi(x) = exp( i [ (x-q).A.(x-q)/2 + p.(x-q) + gamma ] ),   Im A > 0

propagated exactly under the quadratic Hamiltonian (center on the classical
flow, A on the matrix Riccati flow, gamma on the action plus the half-trace
correction), with the exact actions of magnetic translations and rotations
and the closed-form overlap. hbar = 1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from adiabatic import FactorizedPropagator
from config import HBAR, MAX_RHS_EVALS, ODE_METHOD, ODE_TOL
from dynamics import SystemParams, quadratic_form
from errors import NumericalError, StateError
from geometry import FieldPath

log = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-7
AXISYMMETRY_TOL = 1e-9


@dataclass
class GaussianState:
    """Center (q, p), complex symmetric width A and complex gamma."""
    q: np.ndarray
    p: np.ndarray
    A: np.ndarray
    gamma: complex

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(3)
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        A = np.asarray(self.A, dtype=complex).reshape(3, 3)
        self.A = 0.5 * (A + A.T)
        self.gamma = complex(self.gamma)

    @property
    def center(self):
        return np.concatenate([self.q, self.p])

    @property
    def width(self):
        return self.A

    def validate(self):
        """
        Raises:
            StateError: Im A is not positive definite
        """
        eig = np.linalg.eigvalsh(self.A.imag)
        if eig.min() <= 0 or not np.all(np.isfinite(self.A)):
            raise StateError(f"Gaussian is not normalizable: eigenvalues of Im A {eig}")
        return self

    def log_norm(self):
        """log of the L2 norm."""
        det = np.linalg.det(self.A.imag)
        return -self.gamma.imag + 0.75 * math.log(math.pi) - 0.25 * math.log(det)

    def moments(self):
        """(cov_x, cov_xp, cov_pp) with cov_xp[i, j] = <(x_i - q_i)(P_j - p_j)>_sym."""
        B = self.A.imag
        R = self.A.real
        Binv = np.linalg.inv(B)
        cov_x = 0.5 * Binv
        cov_xp = cov_x @ R
        cov_pp = 0.5 * (B + R @ Binv @ R)
        return cov_x, cov_xp, cov_pp


def norm(state: GaussianState) -> float:
    return math.exp(state.validate().log_norm())


def ground_state(p: SystemParams, n0=(0.0, 0.0, 1.0)) -> GaussianState:
    """
    Lowest Landau level (zero angular momentum about the axis) times the
    oscillator ground state: centered at a n0 with zero mean velocity,
    magnetic-length width across n0 and oscillator-length width along it.
    """
    n0 = np.asarray(n0, dtype=float)
    n0 = n0 / np.linalg.norm(n0)
    q = p.a * n0
    P = p.c_B * np.cross(n0, q)
    perp = np.eye(3) - np.outer(n0, n0)
    B = (0.5 * p.m * abs(p.omega_c) * perp + p.m * p.omega * np.outer(n0, n0)) / HBAR
    gamma = -0.25j * math.log(np.linalg.det(B) / math.pi ** 3)
    return GaussianState(q, P, 1j * B, gamma)


def energy(state: GaussianState, p: SystemParams, n) -> float:
    """<H> with the field along n."""
    H = quadratic_form(p, n)
    q, P = state.q, state.p
    classical = (0.5 * P @ H.Hpp @ P + P @ H.Hpx @ q + 0.5 * q @ H.Hxx @ q + H.hx @ q + H.const)
    cov_x, cov_xp, cov_pp = state.moments()
    spread = (0.5 * np.trace(H.Hpp @ cov_pp) + np.trace(H.Hpx @ cov_xp)
              + 0.5 * np.trace(H.Hxx @ cov_x))
    return float(classical + spread)


# ---------------------------------------------------------------------
# Exact propagation
# ---------------------------------------------------------------------

def _pack(state):
    return np.concatenate([state.q, state.p, state.A.real.ravel(), state.A.imag.ravel(),
                           [state.gamma.real, state.gamma.imag]])


def _unpack(y):
    A = y[6:15].reshape(3, 3) + 1j * y[15:24].reshape(3, 3)
    return GaussianState(y[:3], y[3:6], A, y[24] + 1j * y[25])


def propagate(state: GaussianState, p: SystemParams, path: FieldPath,
              tol: float = ODE_TOL) -> GaussianState:
    """
    Exact Gaussian evolution over [0, T]:
        dq/dt = Hpp p + Hpx q
        dp/dt = -Hpx^T p - Hxx q - hx
        dA/dt = -Hxx - Hpx^T A - A Hpx - A Hpp A
        dgamma/dt = p.dq/dt - H(q, p) + (i/2) [tr(Hpp A) + tr(Hpx)]

    Raises:
        NumericalError: integrator failure or step budget exhausted
    """
    state.validate()
    if p.T == 0:
        return GaussianState(state.q, state.p, state.A, state.gamma)

    def rhs(t, y):
        n = path.n(min(max(t / p.T, 0.0), 1.0))
        H = quadratic_form(p, n)
        q, P = y[:3], y[3:6]
        A = y[6:15].reshape(3, 3) + 1j * y[15:24].reshape(3, 3)
        qdot = H.Hpp @ P + H.Hpx @ q
        Pdot = -H.Hpx.T @ P - H.Hxx @ q - H.hx
        Adot = -H.Hxx - H.Hpx.T @ A - A @ H.Hpx - A @ H.Hpp @ A
        energy_cl = 0.5 * P @ H.Hpp @ P + P @ H.Hpx @ q + 0.5 * q @ H.Hxx @ q + H.hx @ q + H.const
        gdot = P @ qdot - energy_cl + 0.5j * (np.trace(H.Hpp @ A) + np.trace(H.Hpx))
        return np.concatenate([qdot, Pdot, Adot.real.ravel(), Adot.imag.ravel(),
                               [gdot.real, gdot.imag]])

    sol = solve_ivp(rhs, (0.0, p.T), _pack(state), method=ODE_METHOD, rtol=tol, atol=tol)
    if not sol.success:
        raise NumericalError(f"Gaussian propagation failed: {sol.message}")
    if sol.nfev > MAX_RHS_EVALS:
        raise NumericalError(f"Gaussian propagation exceeded {MAX_RHS_EVALS} evaluations")
    out = _unpack(sol.y[:, -1]).validate()
    drift = abs(out.log_norm() - state.log_norm())
    if drift > NORM_DRIFT_TOL:
        log.warning("Gaussian log-norm drifted by %.2e over T=%g", drift, p.T)
    log.debug("Gaussian propagation T=%g: %d evaluations, log-norm drift %.2e", p.T, sol.nfev, drift)
    return out


# ---------------------------------------------------------------------
# Group actions
# ---------------------------------------------------------------------

def magnetic_translate(state: GaussianState, p: SystemParams, n0, d_vec,
                       phase: float = 0.0) -> GaussianState:
    """
    exp(i phase) exp(-i d.(P + (m omega_c/2) n0 x x)) applied to the state:
    psi(x) -> exp(i phase) exp(i k.x) psi(x - d) with k = (m omega_c/2) n0 x d,
    so q -> q + d, p -> p + k, gamma -> gamma + k.(q + d) + phase.
    """
    d_vec = np.asarray(d_vec, dtype=float)
    k = p.c_B * np.cross(np.asarray(n0, dtype=float), d_vec) / HBAR
    q = state.q + d_vec
    return GaussianState(q, state.p + k, state.A, state.gamma + k @ q + phase)


def rotate(state: GaussianState, Q) -> GaussianState:
    """psi(x) -> psi(Q^T x); no phase."""
    Q = np.asarray(Q, dtype=float)
    return GaussianState(Q @ state.q, Q @ state.p, Q @ state.A @ Q.T, state.gamma)


def is_axisymmetric(state: GaussianState, n0, tol: float = AXISYMMETRY_TOL) -> bool:
    """Centered on the n0 axis, at rest, with a width invariant under rotations about n0."""
    n0 = np.asarray(n0, dtype=float)
    perp = np.eye(3) - np.outer(n0, n0)
    scale = max(1.0, np.abs(state.A).max())
    A_sym = 0.5 * np.trace(perp @ state.A) * perp + (n0 @ state.A @ n0) * np.outer(n0, n0)
    return (np.linalg.norm(np.cross(n0, state.q)) <= tol * max(1.0, np.linalg.norm(state.q))
            and np.linalg.norm(state.p) <= tol * scale
            and np.linalg.norm(state.A - A_sym) <= tol * scale)


def apply_factorized(fact: FactorizedPropagator, state: GaussianState, p: SystemParams,
                     path: FieldPath, tol: float = ODE_TOL) -> GaussianState:
    """
    D, then M_P, then R on an axisymmetric state:
        D   exact propagation under the static field along n(0) for s T
        M_P magnetic translation by d with phase phi_P
        R   rotation Q = F(s) F(0)^T

    Raises:
        StateError: the state is not axisymmetric about n(0)
    """
    n0 = path.n(0.0)
    if not is_axisymmetric(state, n0):
        raise StateError("apply_factorized needs a state axisymmetric about n(0)")
    evolved = propagate(state, p.with_T(fact.s * p.T), path.frozen_at(0.0), tol)
    Q = fact.R_part[:3, :3]
    d_vec = fact.M_part.b[:3]
    translated = magnetic_translate(evolved, p, n0, d_vec, fact.phi_P)
    return rotate(translated, Q)


def overlap(s1: GaussianState, s2: GaussianState) -> complex:
    """
    <s1|s2> in closed form: with M = -i (A2 - conj A1) the integral of
    exp(-x.M.x/2 + b.x + c0) is (2 pi)^{3/2} det(M)^{-1/2} exp(b.M^-1.b/2 + c0),
    det^{-1/2} taken branch-continuously as the product of principal square
    roots of the eigenvalues (all in the right half plane).

    Raises:
        StateError: either state is not normalizable
    """
    s1.validate()
    s2.validate()
    A1c = np.conj(s1.A)
    M = -1j * (s2.A - A1c)
    b = 1j * (-s2.A @ s2.q + A1c @ s1.q + s2.p - s1.p)
    c0 = 1j * (0.5 * s2.q @ s2.A @ s2.q - 0.5 * s1.q @ A1c @ s1.q
               - s2.p @ s2.q + s1.p @ s1.q + s2.gamma - np.conj(s1.gamma))
    lam = np.linalg.eigvals(M)
    inv_sqrt_det = np.prod(1.0 / np.sqrt(lam))
    return complex((2 * math.pi) ** 1.5 * inv_sqrt_det * np.exp(0.5 * b @ np.linalg.solve(M, b) + c0))
