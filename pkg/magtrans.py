#!/usr/bin/env python3
"""
Magnetic Translation Module
Elements M(d) of the magnetic-translation group (planar displacement plus an
unwrapped flux phase), their composition law, loop phases, the path-ordered
phase phi_P of the adiabatic displacement curve and a brute-force
path-ordered product used as its oracle.

All vectors are components on (e1(0), e2(0)); the 2D cross product
u x v = u1 v2 - u2 v1 is taken about n(0).
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from config import FRAME_TOL, GRID_POINTS, ORACLE_SEGMENTS
from errors import ConfigError, PathError
from geometry import DisplacementCurve, FieldPath, FrameFlow

log = logging.getLogger(__name__)

LOOP_CLOSURE_TOL = 1e-12


def cross2(u, v):
    """Scalar 2D cross product (vectorized over leading axes)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass(frozen=True)
class FluxConstants:
    """kappa = qB/(hbar c) = m omega_c / hbar; the sign follows the charge."""
    kappa: float

    def __post_init__(self):
        if not np.isfinite(self.kappa):
            raise ConfigError(f"kappa must be finite, got {self.kappa}")

    @classmethod
    def from_cyclotron(cls, omega_c, m=1.0, hbar=1.0):
        return cls(m * omega_c / hbar)


@dataclass(frozen=True)
class MagneticTranslationElement:
    """Displacement d on (e1(0), e2(0)) and a phase kept unwrapped."""
    d: tuple = (0.0, 0.0)
    phase: float = 0.0

    @classmethod
    def of(cls, d, phase=0.0):
        d = np.asarray(d, dtype=float).reshape(2)
        return cls((float(d[0]), float(d[1])), float(phase))

    @classmethod
    def identity(cls):
        return cls()

    @property
    def vector(self):
        return np.array(self.d)

    def inverse(self):
        return MagneticTranslationElement((-self.d[0], -self.d[1]), -self.phase)

    def is_identity(self, tol=0.0):
        return abs(self.d[0]) <= tol and abs(self.d[1]) <= tol and abs(self.phase) <= tol


def compose(m2: MagneticTranslationElement, m1: MagneticTranslationElement,
            k: FluxConstants) -> MagneticTranslationElement:
    """
    M(d2) M(d1): m1 acts first.
        d     = d1 + d2
        phase = phase1 + phase2 - (kappa/2) (d1 x d2)
    """
    d1, d2 = m1.d, m2.d
    correction = -0.5 * k.kappa * (d1[0] * d2[1] - d1[1] * d2[0])
    return MagneticTranslationElement((d1[0] + d2[0], d1[1] + d2[1]),
                                      m1.phase + m2.phase + correction)


def compose_all(elements: Iterable[MagneticTranslationElement],
                k: FluxConstants) -> MagneticTranslationElement:
    """Ordered product; the first element of *elements* acts first."""
    total = MagneticTranslationElement.identity()
    for m in elements:
        total = compose(m, total, k)
    return total


def shoelace_area(vertices) -> float:
    """Signed area of the polygon through *vertices* (closed implicitly)."""
    v = np.asarray(vertices, dtype=float)
    return 0.5 * float(np.sum(cross2(v, np.roll(v, -1, axis=0))))


def loop_phase(vertices, k: FluxConstants) -> float:
    """
    Phase of the ordered product of edge translations around a closed
    polygon (first vertex == last vertex). The displacements telescope to
    zero and the phase is -kappa times the signed enclosed area.

    Raises:
        ConfigError: the polygon is not closed
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
        raise ConfigError("loop_phase needs a sequence of 2-vectors")
    if np.linalg.norm(v[-1] - v[0]) > LOOP_CLOSURE_TOL * max(1.0, np.abs(v).max()):
        raise ConfigError("loop_phase needs a closed polygon (first vertex == last vertex)")
    edges = (MagneticTranslationElement.of(e) for e in np.diff(v, axis=0))
    total = compose_all(edges, k)
    log.debug("loop of %d edges: residual displacement %s", len(v) - 1, total.d)
    return total.phase


def chord_closed_area(d_curve) -> float:
    """
    Signed area between a curve starting at the origin and the straight
    chord from its end point back to the origin.
    """
    pts = d_curve.d if isinstance(d_curve, DisplacementCurve) else np.asarray(d_curve, dtype=float)
    return shoelace_area(pts)


# ---------------------------------------------------------------------
# phi_P
# ---------------------------------------------------------------------

def phi_P(path: FieldPath, a: float, k: FluxConstants, s: float = 1.0,
          flow: Optional[FrameFlow] = None, points: int = GRID_POINTS,
          tol: float = FRAME_TOL) -> float:
    """
    phi_P(s) = -kappa (a^2/4) [ int_0^s sigma2(s') Sigma1(s') ds'
                                - 1/2 Sigma1(s) Sigma2(s) ]
    with Sigma_mu(s) = int_0^s sigma_mu. In s rather than t the epsilon
    Jacobians of the two nested integrals cancel.
    """
    if a == 0.0 or s <= 0.0:
        return 0.0
    flow = flow or FrameFlow(path, tol)
    inner, total = 0.0, np.zeros(2)
    for grid, inside in flow.piece_grids(s, points):
        sg = flow.sigma(inside)
        Sg = cumulative_simpson(sg, x=grid, axis=0, initial=0) + total
        inner += simpson(sg[:, 1] * Sg[:, 0], x=grid)
        total = Sg[-1]
    bracket = inner - 0.5 * total[0] * total[1]
    return float(-k.kappa * 0.25 * a * a * bracket)


def phi_P_curve(d_curve: DisplacementCurve, k: FluxConstants) -> np.ndarray:
    """phi_P(s) along the sampled curve: -kappa times the running chord-closed area."""
    d = d_curve.d
    steps = cross2(d[:-1], d[1:])
    return -k.kappa * 0.5 * np.concatenate([[0.0], np.cumsum(steps)])


def path_ordered_oracle(d_curve: DisplacementCurve, k: FluxConstants,
                        N: int = ORACLE_SEGMENTS) -> MagneticTranslationElement:
    """
    Split the displacement curve into N chords at uniform s and compose the
    elementary translations in path order.

    Raises:
        ConfigError: N < 2
    """
    if N < 2:
        raise ConfigError(f"path-ordered product needs N >= 2 segments, got {N}")
    if len(d_curve.s) < 2:
        raise PathError("displacement curve has a single sample")
    s = np.linspace(d_curve.s[0], d_curve.s[-1], N + 1)
    pts = CubicSpline(d_curve.s, d_curve.d, axis=0)(s)
    pts[0] = d_curve.d[0]
    pts[-1] = d_curve.d[-1]
    chords = (MagneticTranslationElement.of(c) for c in np.diff(pts, axis=0))
    return compose_all(chords, k)
