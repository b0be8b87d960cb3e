#!/usr/bin/env python3
"""
Dynamics Module
Finite-epsilon motion of the charged particle in the lab frame and in the
parallel-transported frame, integrated as an affine symplectic propagator
z(T) = S z(0) + b on phase space z = (x1, x2, x3, P1, P2, P3).

Conventions (natural units hbar = c = 1, mass m kept explicit):
    H = |P - (m omega_c / 2) n x x|^2 / 2m + m omega^2 (n.x - a)^2 / 2
    s = t / T (epsilon = 1/T), n = n(s)
Rotating components of a vector are its components on (e1, e2, e3)(s).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline

from config import (
    DEFAULT_MASS, HBAR, MAX_RHS_EVALS, ODE_METHOD, ODE_TOL, RESONANCE_GUARD,
    SAMPLES_PER_PERIOD, SYMPLECTIC_TOL, TRAJECTORY_SAMPLES,
)
from errors import ConfigError, NumericalError
from geometry import FieldPath, FrameFlow, cross_matrix, initial_frame

log = logging.getLogger(__name__)

Z3 = np.zeros((3, 3))
I3 = np.eye(3)
J6 = np.block([[Z3, I3], [-I3, Z3]])


# =====================================================================
# Types
# =====================================================================

@dataclass(frozen=True)
class SystemParams:
    """Particle, field and trap constants in natural units."""
    omega_c: float
    omega: float
    a: float
    T: float
    m: float = DEFAULT_MASS

    def __post_init__(self):
        for name in ("omega_c", "omega", "a", "T", "m"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.omega_c == 0:
            raise ConfigError("omega_c must be non-zero")
        if self.m <= 0:
            raise ConfigError(f"mass must be positive, got {self.m}")
        if self.T < 0:
            raise ConfigError(f"T must be non-negative, got {self.T}")
        detuning = abs(self.omega - self.omega_c) / self.omega
        if detuning <= RESONANCE_GUARD:
            raise ConfigError(
                f"omega = {self.omega} is resonant with omega_c = {self.omega_c} "
                f"(relative detuning {detuning:.2e} <= {RESONANCE_GUARD})")

    @property
    def epsilon(self):
        return math.inf if self.T == 0 else 1.0 / self.T

    @property
    def kappa(self):
        """Flux constant q B / (hbar c) = m omega_c / hbar."""
        return self.m * self.omega_c / HBAR

    @property
    def c_B(self):
        """m omega_c / 2, the vector-potential prefactor: (q/c) A = c_B n x x."""
        return 0.5 * self.m * self.omega_c

    @property
    def magnetic_length(self):
        return math.sqrt(HBAR / (self.m * abs(self.omega_c)))

    @property
    def oscillator_length(self):
        return math.sqrt(HBAR / (self.m * self.omega))

    @property
    def ground_energy(self):
        """hbar (|omega_c| + omega) / 2: lowest Landau level times oscillator ground state."""
        return 0.5 * HBAR * (abs(self.omega_c) + self.omega)

    def with_T(self, T):
        return replace(self, T=float(T))

    def to_dict(self):
        return {"omega_c": self.omega_c, "omega": self.omega, "a": self.a, "T": self.T, "m": self.m}


@dataclass
class PhaseSpaceState:
    """z = (x, P), lab components unless stated otherwise."""
    z: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float).reshape(6)
        if not np.all(np.isfinite(self.z)):
            raise NumericalError(f"phase-space state has non-finite entries: {self.z}")

    @property
    def x(self):
        return self.z[:3]

    @property
    def P(self):
        return self.z[3:]


@dataclass
class AffinePropagator:
    """z(t) = S z(0) + b, plus the scalar phase of the evolution when known."""
    S: np.ndarray
    b: np.ndarray
    phase: Optional[float] = None

    @classmethod
    def identity(cls, phase=None):
        return cls(np.eye(6), np.zeros(6), phase)

    def apply(self, z):
        z = z.z if isinstance(z, PhaseSpaceState) else np.asarray(z, dtype=float)
        return self.S @ z + self.b

    def then(self, other: "AffinePropagator") -> "AffinePropagator":
        """*self* first, then *other*: other o self."""
        phase = None
        if self.phase is not None and other.phase is not None:
            phase = self.phase + other.phase
        return AffinePropagator(other.S @ self.S, other.S @ self.b + other.b, phase)

    def symplectic_error(self):
        return symplectic_error(self.S)


def symplectic_error(S) -> float:
    """||S^T J S - J||_F for the canonical form on (x, P)."""
    S = np.asarray(S)
    return float(np.linalg.norm(S.T @ J6 @ S - J6))


class QuadraticForm(NamedTuple):
    """H = P.Hpp.P/2 + P.Hpx.x + x.Hxx.x/2 + hx.x + const."""
    Hpp: np.ndarray
    Hpx: np.ndarray
    Hxx: np.ndarray
    hx: np.ndarray
    const: float


def quadratic_form(p: SystemParams, n) -> QuadraticForm:
    """Coefficients of the Hamiltonian with the field along the unit vector n."""
    n = np.asarray(n, dtype=float)
    N = cross_matrix(n)
    m, cB, w2 = p.m, p.c_B, p.omega ** 2
    return QuadraticForm(
        Hpp=I3 / m,
        Hpx=-(cB / m) * N,
        Hxx=(cB * cB / m) * (N.T @ N) + m * w2 * np.outer(n, n),
        hx=-m * w2 * p.a * n,
        const=0.5 * m * w2 * p.a * p.a,
    )


def generator(p: SystemParams, n):
    """(A, f) with dz/dt = A z + f for the field frozen along n."""
    q = quadratic_form(p, n)
    A = np.block([[q.Hpx, q.Hpp], [-q.Hxx, -q.Hpx.T]])
    f = np.concatenate([np.zeros(3), -q.hx])
    return A, f


def energy(z, p: SystemParams, n):
    """Instantaneous H(x, P; n); vectorized over leading axes of z and n."""
    z = np.asarray(z, dtype=float)
    n = np.broadcast_to(np.asarray(n, dtype=float), z[..., :3].shape)
    x, P = z[..., :3], z[..., 3:]
    v = P / p.m - 0.5 * p.omega_c * np.cross(n, x)
    axial = np.einsum("...i,...i->...", n, x) - p.a
    return 0.5 * p.m * np.einsum("...i,...i->...", v, v) + 0.5 * p.m * p.omega ** 2 * axial ** 2


def _s_of(t, p):
    return 0.0 if p.T == 0 else min(max(t / p.T, 0.0), 1.0)


# =====================================================================
# Right-hand sides
# =====================================================================

def lab_rhs(z, t, p: SystemParams, path: FieldPath):
    """
    dx/dt = P/m - (omega_c/2) n x x
    dP/dt = -m omega^2 n (n.x - a) - (omega_c/2) n x (P - (m omega_c/2) n x x)
    """
    z = np.asarray(z, dtype=float)
    n = path.n(_s_of(t, p))
    x, P = z[:3], z[3:]
    half = 0.5 * p.omega_c
    kin = P - p.c_B * np.cross(n, x)
    xdot = P / p.m - half * np.cross(n, x)
    Pdot = -p.m * p.omega ** 2 * n * (np.dot(n, x) - p.a) - half * np.cross(n, kin)
    return np.concatenate([xdot, Pdot])


def rotating_coefficients(t, p: SystemParams, flow: FrameFlow, simplified=False, s=None):
    """
    (K, G, c) of  d2X/dt2 = K X + G dX/dt + c  in rotating components.
    sigma in time units is epsilon sigma(s); sigma-dot is epsilon^2 sigma'(s).
    The simplified system keeps only the (omega_c/2) sigma X3 couplings.
    """
    if s is None:
        s = _s_of(t, p)
    eps = 0.0 if p.T == 0 else p.epsilon
    s1, s2 = eps * flow.sigma(s)
    wc, w2 = p.omega_c, p.omega ** 2
    c = np.array([0.0, 0.0, w2 * p.a])
    if simplified:
        K = np.array([[0.0, 0.0, -0.5 * wc * s2],
                      [0.0, 0.0, 0.5 * wc * s1],
                      [0.0, 0.0, -w2]])
        G = np.array([[0.0, wc, 0.0], [-wc, 0.0, 0.0], [0.0, 0.0, 0.0]])
        return K, G, c
    r1, r2 = eps * eps * flow.sigma_rate(s)
    K = np.array([
        [s1 * s1, s1 * s2, -0.5 * wc * s2 + r1],
        [s1 * s2, s2 * s2, 0.5 * wc * s1 + r2],
        [-0.5 * wc * s2 - r1, 0.5 * wc * s1 - r2, -w2 + s1 * s1 + s2 * s2],
    ])
    G = np.array([[0.0, wc, 2.0 * s1], [-wc, 0.0, 2.0 * s2], [-2.0 * s1, -2.0 * s2, 0.0]])
    return K, G, c


def rotating_rhs(X, V, t, p: SystemParams, path: FieldPath, flow: Optional[FrameFlow] = None,
                 simplified=False, s=None):
    """
    Second derivatives of the rotating components X = (x.e1, x.e2, x.e3)
    given X and dX/dt. Includes every sigma term, the sigma-dot terms and
    the |de3/dt|^2 X3 term unless *simplified*.
    """
    flow = flow or FrameFlow(path)
    K, G, c = rotating_coefficients(t, p, flow, simplified, s)
    return K @ np.asarray(X, dtype=float) + G @ np.asarray(V, dtype=float) + c


def rotating_to_lab(p: SystemParams, flow: FrameFlow, t, s=None):
    """
    C with (x, P) = C (X, V), V = dX/dt in rotating components:
        x = F X
        P = m F (V + w x X) + (m omega_c/2) n x (F X)
    where w = epsilon (sigma2, -sigma1, 0) is the frame's angular velocity.
    """
    if s is None:
        s = _s_of(t, p)
    F = flow.frame(s)
    n = F[:, 2]
    eps = 0.0 if p.T == 0 else p.epsilon
    s1, s2 = eps * flow.sigma(s)
    W = cross_matrix(np.array([s2, -s1, 0.0]))
    lower_left = p.m * F @ W + p.c_B * cross_matrix(n) @ F
    return np.block([[F, Z3], [lower_left, p.m * F]])


def lab_to_rotating(p: SystemParams, flow: FrameFlow, t, s=None):
    """Inverse of rotating_to_lab."""
    C = rotating_to_lab(p, flow, t, s)
    F = C[:3, :3]
    L = C[3:, :3]
    return np.block([[F.T, Z3], [-(F.T @ L @ F.T) / p.m, F.T / p.m]])


# =====================================================================
# Integration
# =====================================================================

def _check(sol, what, nfev_total=0):
    if not sol.success:
        raise NumericalError(f"{what}: integrator failed: {sol.message}")
    if sol.nfev + nfev_total > MAX_RHS_EVALS:
        raise NumericalError(f"{what}: step budget of {MAX_RHS_EVALS} evaluations exhausted")
    return sol.nfev + nfev_total


def _augmented_solve(rhs_matrix, t0, t1, tol, what):
    """
    Integrate dY/dt = A(t) Y + [0 | f(t)] for Y = [S | b] (6 x 7), Y(t0) = [I | 0].
    *rhs_matrix(t)* returns (A, f).
    """
    def rhs(t, y):
        A, f = rhs_matrix(t)
        Y = y.reshape(6, 7)
        dY = A @ Y
        dY[:, 6] += f
        return dY.reshape(42)

    y0 = np.hstack([np.eye(6), np.zeros((6, 1))]).reshape(42)
    sol = solve_ivp(rhs, (t0, t1), y0, method=ODE_METHOD, rtol=tol, atol=tol)
    nfev = _check(sol, what)
    Y = sol.y[:, -1].reshape(6, 7)
    return AffinePropagator(Y[:, :6].copy(), Y[:, 6].copy()), nfev


def integrate_propagator(p: SystemParams, path: FieldPath, frame: str = "lab",
                         tol: float = ODE_TOL, flow: Optional[FrameFlow] = None,
                         simplified: bool = False) -> AffinePropagator:
    """
    Fundamental matrix plus inhomogeneous solution of the linear system
    over [0, T]; returns S, b with z(T) = S z(0) + b (phase unset).

    Args:
        frame: "lab" integrates the lab equations; "rotating" integrates the
            rotating-frame second-order system piece by piece and maps the
            result back to lab (x, P)
        simplified: rotating frame only, keep just the reduced couplings
    """
    if frame not in ("lab", "rotating"):
        raise ConfigError(f"frame must be 'lab' or 'rotating', got {frame!r}")
    if p.T == 0:
        return AffinePropagator.identity()

    if frame == "lab":
        def lab_matrix(t):
            return generator(p, path.n(_s_of(t, p)))

        prop, nfev = _augmented_solve(lab_matrix, 0.0, p.T, tol, "lab propagator")
        log.debug("lab propagator T=%g: %d evaluations, symplectic error %.2e",
                  p.T, nfev, prop.symplectic_error())
    else:
        flow = flow or FrameFlow(path)
        prop, nfev = AffinePropagator.identity(), 0
        for s0, s1 in path.pieces():
            lo = s0 + 1e-12 * (s1 - s0)
            hi = s1 - 1e-12 * (s1 - s0)

            def rot_matrix(t, lo=lo, hi=hi):
                s = min(max(t / p.T, lo), hi)
                K, G, c = rotating_coefficients(t, p, flow, simplified, s=s)
                return np.block([[Z3, I3], [K, G]]), np.concatenate([np.zeros(3), c])

            piece, k = _augmented_solve(rot_matrix, s0 * p.T, s1 * p.T, tol, "rotating propagator")
            nfev += k
            enter = lab_to_rotating(p, flow, s0 * p.T, s=lo)
            leave = rotating_to_lab(p, flow, s1 * p.T, s=hi)
            lab_piece = AffinePropagator(leave @ piece.S @ enter, leave @ piece.b)
            prop = prop.then(lab_piece)
            if nfev > MAX_RHS_EVALS:
                raise NumericalError("rotating propagator: step budget exhausted")
        log.debug("rotating propagator T=%g: %d evaluations", p.T, nfev)

    err = prop.symplectic_error()
    if err > SYMPLECTIC_TOL:
        raise NumericalError(f"{frame} propagator symplectic error {err:.2e} exceeds {SYMPLECTIC_TOL:.0e}; "
                             "tighten ode_tol")
    return prop


@dataclass
class Trajectory:
    """Direct lab-frame solution sampled on t."""
    t: np.ndarray
    z: np.ndarray                       # (len(t), 6) lab (x, P)
    rotating: np.ndarray = field(repr=False, default=None)   # (len(t), 6) (F^T x, F^T P)
    energy: np.ndarray = field(repr=False, default=None)

    @property
    def s(self):
        return self.t / self.t[-1] if self.t[-1] > 0 else np.zeros_like(self.t)

    def energy_drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0])))


def sample_count(p: SystemParams, minimum: int = TRAJECTORY_SAMPLES) -> int:
    """Odd number of uniform samples resolving the fastest period SAMPLES_PER_PERIOD times."""
    fastest = max(abs(p.omega_c), p.omega)
    k = max(minimum, int(math.ceil(SAMPLES_PER_PERIOD * p.T * fastest / (2 * math.pi))) + 1)
    return k + (k + 1) % 2


def integrate_trajectory(p: SystemParams, path: FieldPath, z0, samples: Optional[int] = None,
                         tol: float = ODE_TOL, flow: Optional[FrameFlow] = None) -> Trajectory:
    """Direct integration of one initial condition with dense sampling."""
    z0 = PhaseSpaceState(z0 if not isinstance(z0, PhaseSpaceState) else z0.z).z
    samples = samples or sample_count(p)
    t = np.linspace(0.0, p.T, samples)
    if p.T == 0:
        z = np.tile(z0, (samples, 1))
    else:
        sol = solve_ivp(lambda tt, y: lab_rhs(y, tt, p, path), (0.0, p.T), z0,
                        method=ODE_METHOD, rtol=tol, atol=tol, t_eval=t)
        nfev = _check(sol, "trajectory")
        log.debug("trajectory T=%g: %d evaluations", p.T, nfev)
        z = sol.y.T
    flow = flow or FrameFlow(path)
    s = t / p.T if p.T > 0 else np.zeros_like(t)
    F = flow.frame(s)
    rot = np.concatenate([np.einsum("kji,kj->ki", F, z[:, :3]),
                          np.einsum("kji,kj->ki", F, z[:, 3:])], axis=1)
    return Trajectory(t, z, rot, energy(z, p, F[:, :, 2]))


# =====================================================================
# Closed forms
# =====================================================================

def static_solution(p: SystemParams, z0, t, n=(0.0, 0.0, 1.0)):
    """
    Analytic flow of the static field along n: cyclotron motion in the plane
    perpendicular to n plus harmonic motion along n.
    In components with n = z-hat and u = v1 + i v2, w = x1 + i x2:
        u(t) = u0 exp(-i omega_c t)
        w(t) = w0 + u0 (1 - exp(-i omega_c t)) / (i omega_c)
        x3(t) = a + (x3(0) - a) cos(omega t) + (v3(0)/omega) sin(omega t)
    Returns z(t), shape (6,) or (len(t), 6).
    """
    z0 = np.asarray(z0.z if isinstance(z0, PhaseSpaceState) else z0, dtype=float)
    F = initial_frame(np.asarray(n, dtype=float) / np.linalg.norm(n))
    x, P = F.T @ z0[:3], F.T @ z0[3:]
    m, wc, w, cB = p.m, p.omega_c, p.omega, p.c_B
    v = P / m - 0.5 * wc * np.array([-x[1], x[0], 0.0])

    t = np.asarray(t, dtype=float)
    rot = np.exp(-1j * wc * t)
    u0 = v[0] + 1j * v[1]
    u = u0 * rot
    wpos = (x[0] + 1j * x[1]) + u0 * (1.0 - rot) / (1j * wc)
    x3 = p.a + (x[2] - p.a) * np.cos(w * t) + (v[2] / w) * np.sin(w * t)
    v3 = -(x[2] - p.a) * w * np.sin(w * t) + v[2] * np.cos(w * t)

    Pp = m * u + 1j * cB * wpos
    comps = np.stack([wpos.real, wpos.imag, x3, Pp.real, Pp.imag, m * v3], axis=-1)
    return np.concatenate([comps[..., :3] @ F.T, comps[..., 3:] @ F.T], axis=-1)


def static_propagator(p: SystemParams, t, n=(0.0, 0.0, 1.0)) -> AffinePropagator:
    """Analytic S, b of the static flow over time t."""
    b = static_solution(p, np.zeros(6), t, n)
    cols = [static_solution(p, e, t, n) - b for e in np.eye(6)]
    return AffinePropagator(np.column_stack(cols), b)


def simplified_solution(p: SystemParams, path: FieldPath, z0, t,
                        flow: Optional[FrameFlow] = None):
    """
    Closed-form solution of the reduced rotating system, z0 and the result
    in rotating components (X, P-tilde):
        X_mu(t) = X_mu^(0)(t) + 1/2 int_0^t sigma_mu X3^(0) dt'
    with X^(0) the static cyclotron + oscillator motion. The momentum takes
    the shift (m omega_c/2) z-hat x y that leaves the velocity unchanged.
    Returns shape (6,) for scalar t, else (len(t), 6).
    """
    z0 = np.asarray(z0.z if isinstance(z0, PhaseSpaceState) else z0, dtype=float)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    base = np.atleast_2d(static_solution(p, z0, t))
    t_max = float(t.max()) if len(t) else 0.0
    if t_max <= 0.0 or p.T == 0:
        return base[0] if scalar else base

    flow = flow or FrameFlow(path)
    k = max(sample_count(replace(p, T=t_max)), 4001)
    grid = np.linspace(0.0, t_max, k)
    x3 = static_solution(p, z0, grid)[:, 2]
    sig = p.epsilon * flow.sigma(np.clip(grid / p.T, 0.0, 1.0))
    integral = cumulative_simpson(0.5 * sig * x3[:, None], x=grid, axis=0, initial=0)
    y = CubicSpline(grid, integral, axis=0)(t)

    out = base.copy()
    out[:, :2] += y
    out[:, 3] += -p.c_B * y[:, 1]
    out[:, 4] += p.c_B * y[:, 0]
    return out[0] if scalar else out
