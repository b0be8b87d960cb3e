#!/usr/bin/env python3
"""
Geometry Module: field-direction paths on the unit sphere, the parallel
transported frame {e1, e2, e3 = n}, the frame matrix E, the rates sigma,
the adiabatic displacement d(s) and the solid angle of closed loops.

Everything here is written in the path parameter s in [0, 1] (t = s T),
so nothing depends on the process duration T.
"""

import logging
import os
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import polar
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from config import (
    CLOSURE_TOL, FRAME_TOL, GRAM_SCHMIDT_FALLBACK, GRID_POINTS, MAX_RHS_EVALS,
    ODE_METHOD, SIGMA_FD_STEP, SOLID_ANGLE_SAMPLES, UNIT_TOL,
)
from errors import NumericalError, PathError

log = logging.getLogger(__name__)

PATH_KINDS = ("latitude", "slerp", "table", "constant")


def cross_matrix(v):
    """Matrix [v]x with [v]x u = v x u."""
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


# =====================================================================
# FieldPath
# =====================================================================

class FieldPath:
    """
    Smooth (or piecewise smooth) unit-vector path n(s), s in [0, 1].

    Built through the classmethods below. Every kind supplies n and dn/ds;
    d2n/ds2 is analytic for latitude, slerp and constant paths and absent
    (None) for tables. An optional warp s -> s + beta sin(2 pi s)/(2 pi)
    re-times the same geometric curve.
    """

    def __init__(self, kind, base, breakpoints=(), warp=0.0, spec=None):
        """
        Args:
            kind: one of PATH_KINDS
            base: callable u -> (n, dn/du, d2n/du2 or None), vectorized over u
            breakpoints: interior u values where dn/du may jump
            warp: reparametrization strength beta, |beta| < 1
            spec: the JSON block the path was built from (for reports)
        """
        if kind not in PATH_KINDS:
            raise PathError(f"unknown path kind {kind!r}")
        if not -1.0 < warp < 1.0:
            raise PathError(f"warp must lie in (-1, 1), got {warp}")
        self.kind = kind
        self.warp = float(warp)
        self.spec = dict(spec or {"kind": kind})
        self._base = base
        self._u_breaks = tuple(sorted(float(u) for u in breakpoints if 0.0 < u < 1.0))
        self.breakpoints = tuple(self._u_to_s(u) for u in self._u_breaks)

        n0, n1 = self.n(0.0), self.n(1.0)
        for s, v in ((0.0, n0), (1.0, n1)):
            if not np.all(np.isfinite(v)) or abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
                raise PathError(f"n({s}) is not a unit vector: {v}")
        self.closed = bool(np.linalg.norm(n1 - n0) < CLOSURE_TOL)

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, direction=(0.0, 0.0, 1.0)):
        """Static field along *direction*."""
        v = _unit(direction, "direction")

        def base(u):
            u = np.asarray(u, dtype=float)
            shape = u.shape + (3,)
            zeros = np.zeros(shape)
            return np.broadcast_to(v, shape).copy(), zeros, zeros

        return cls("constant", base, spec={"kind": "constant", "direction": v.tolist()})

    @classmethod
    def latitude(cls, theta0, turns=1, phi0=0.0, warp=0.0):
        """
        Circle of colatitude *theta0* about z, traversed *turns* times
        (negative turns run clockwise about z).
        """
        if turns == 0:
            raise PathError("latitude path needs a non-zero number of turns")
        st, ct = math.sin(theta0), math.cos(theta0)
        rate = 2.0 * math.pi * turns

        def base(u):
            phi = phi0 + rate * np.asarray(u, dtype=float)
            c, s = np.cos(phi), np.sin(phi)
            n = np.stack([st * c, st * s, np.full_like(phi, ct)], axis=-1)
            dn = rate * st * np.stack([-s, c, np.zeros_like(phi)], axis=-1)
            d2n = -rate * rate * st * np.stack([c, s, np.zeros_like(phi)], axis=-1)
            return n, dn, d2n

        spec = {"kind": "latitude", "theta0": float(theta0), "turns": turns,
                "phi0": float(phi0), "warp": float(warp)}
        return cls("latitude", base, warp=warp, spec=spec)

    @classmethod
    def slerp(cls, waypoints, closed=False, warp=0.0):
        """
        Great-circle arcs through *waypoints* at constant angular speed.
        With *closed* the last arc returns to the first waypoint.
        """
        pts = [_unit(w, "waypoint") for w in waypoints]
        if closed:
            pts.append(pts[0])
        # drop repeated waypoints; they carry no arc
        verts = [pts[0]]
        for p in pts[1:]:
            if np.linalg.norm(p - verts[-1]) > UNIT_TOL:
                verts.append(p)
        spec = {"kind": "slerp", "waypoints": [p.tolist() for p in pts[:len(waypoints)]],
                "closed": bool(closed), "warp": float(warp)}
        if len(verts) == 1:
            path = cls.constant(verts[0])
            path.spec = spec
            return path

        arcs = []
        for a, b in zip(verts[:-1], verts[1:]):
            ang = math.acos(float(np.clip(np.dot(a, b), -1.0, 1.0)))
            if math.pi - ang < 1e-9:
                raise PathError("slerp between antipodal waypoints is undefined")
            arcs.append(ang)
        arcs = np.array(arcs)
        knots = np.concatenate([[0.0], np.cumsum(arcs) / arcs.sum()])
        A = np.array(verts[:-1])
        B = np.array(verts[1:])

        def base(u):
            u = np.asarray(u, dtype=float)
            k = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, len(arcs) - 1)
            width = knots[k + 1] - knots[k]
            tau = (u - knots[k]) / width
            th = arcs[k]
            sn = np.sin(th)
            ca = np.sin((1.0 - tau) * th) / sn
            cb = np.sin(tau * th) / sn
            n = ca[..., None] * A[k] + cb[..., None] * B[k]
            da = -th * np.cos((1.0 - tau) * th) / sn
            db = th * np.cos(tau * th) / sn
            rate = 1.0 / width
            dn = rate[..., None] * (da[..., None] * A[k] + db[..., None] * B[k])
            d2n = -(th * rate)[..., None] ** 2 * n
            return n, dn, d2n

        return cls("slerp", base, breakpoints=knots[1:-1], warp=warp, spec=spec)

    @classmethod
    def table(cls, s_values, vectors, warp=0.0, source=None):
        """Cubic-spline path through tabulated (s, n) samples."""
        s_values = np.asarray(s_values, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != 3 or len(s_values) != len(vectors):
            raise PathError("table needs rows of s, nx, ny, nz")
        if len(s_values) < 4:
            raise PathError("table needs at least 4 rows")
        if abs(s_values[0]) > 1e-12 or abs(s_values[-1] - 1.0) > 1e-12:
            raise PathError("table s column must run from 0 to 1")
        if np.any(np.diff(s_values) <= 0):
            raise PathError("table s column must be strictly increasing")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms < 1e-6):
            raise PathError("table contains a zero vector")
        spline = CubicSpline(s_values, vectors / norms[:, None], axis=0)
        dspline = spline.derivative()

        def base(u):
            v = spline(u)
            dv = dspline(u)
            r = np.linalg.norm(v, axis=-1, keepdims=True)
            n = v / r
            dn = (dv - n * np.sum(n * dv, axis=-1, keepdims=True)) / r
            return n, dn, None

        spec = {"kind": "table", "file": source, "warp": float(warp)}
        return cls("table", base, warp=warp, spec=spec)

    @classmethod
    def from_csv(cls, filename, warp=0.0):
        """Load a table path from a CSV of s, nx, ny, nz (header optional)."""
        try:
            data = np.loadtxt(filename, delimiter=",", ndmin=2)
        except ValueError:
            data = np.loadtxt(filename, delimiter=",", ndmin=2, skiprows=1)
        except OSError as e:
            raise PathError(f"cannot read path table {filename}: {e}") from e
        if data.shape[1] != 4:
            raise PathError(f"{filename}: expected 4 columns s,nx,ny,nz")
        return cls.table(data[:, 0], data[:, 1:], warp=warp, source=str(filename))

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def _g(self, s):
        b = self.warp
        s = np.asarray(s, dtype=float)
        two_pi = 2.0 * math.pi
        g = s + b * np.sin(two_pi * s) / two_pi
        dg = 1.0 + b * np.cos(two_pi * s)
        d2g = -two_pi * b * np.sin(two_pi * s)
        return g, dg, d2g

    def _u_to_s(self, u):
        if self.warp == 0.0:
            return u
        return brentq(lambda s: self._g(s)[0] - u, 0.0, 1.0, xtol=1e-15)

    def evaluate(self, s):
        """Return (n, dn/ds, d2n/ds2 or None) at *s* (scalar or array)."""
        g, dg, d2g = self._g(s)
        n, dn, d2n = self._base(g)
        dg = np.asarray(dg)[..., None]
        d2g = np.asarray(d2g)[..., None]
        dn_s = dn * dg
        d2n_s = None if d2n is None else d2n * dg * dg + dn * d2g
        return n, dn_s, d2n_s

    def n(self, s):
        return self.evaluate(s)[0]

    def dn(self, s):
        return self.evaluate(s)[1]

    def d2n(self, s):
        return self.evaluate(s)[2]

    def pieces(self):
        """Smooth pieces [(s_start, s_end), ...] between declared breakpoints."""
        edges = (0.0,) + self.breakpoints + (1.0,)
        return list(zip(edges[:-1], edges[1:]))

    def frozen_at(self, s=0.0):
        """Constant path pinned at n(s), the static field of H(s)."""
        return FieldPath.constant(self.n(s))

    def __repr__(self):
        return f"FieldPath({self.spec})"


def _unit(v, what):
    v = np.asarray(v, dtype=float).reshape(3)
    r = np.linalg.norm(v)
    if not np.isfinite(r) or r < 1e-12:
        raise PathError(f"{what} {v} cannot be normalized")
    return v / r


def path_from_spec(block, base_dir=None):
    """
    Build a FieldPath from the config's path block:
        {"kind": "latitude", "theta0": <rad>, "turns": <int>}
        {"kind": "slerp", "waypoints": [[x,y,z], ...], "closed": bool}
        {"kind": "table", "file": <csv of s,nx,ny,nz>}
        {"kind": "constant", "direction": [x,y,z]}
    Every kind accepts an optional "warp".
    """

    if not isinstance(block, dict) or "kind" not in block:
        raise PathError("path block must be an object with a 'kind'")
    kind = block["kind"]
    warp = float(block.get("warp", 0.0))
    try:
        if kind == "latitude":
            turns = block.get("turns", 1)
            if int(turns) != turns:
                raise PathError("latitude 'turns' must be an integer")
            return FieldPath.latitude(float(block["theta0"]), int(turns),
                                      float(block.get("phi0", 0.0)), warp=warp)
        if kind == "slerp":
            return FieldPath.slerp(block["waypoints"], bool(block.get("closed", False)), warp=warp)
        if kind == "table":
            fname = block["file"]
            if base_dir and not os.path.isabs(fname):
                fname = os.path.join(base_dir, fname)
            return FieldPath.from_csv(fname, warp=warp)
        if kind == "constant":
            return FieldPath.constant(block.get("direction", (0.0, 0.0, 1.0)))
    except KeyError as e:
        raise PathError(f"path block of kind {kind!r} is missing {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, PathError):
            raise
        raise PathError(f"bad path block {block}: {e}") from e
    raise PathError(f"unknown path kind {kind!r}")


# =====================================================================
# Parallel transport
# =====================================================================

@dataclass
class TransportedFrame:
    """Orthonormal triad at parameter s; e3 = n(s)."""
    s: float
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    def matrix(self):
        """Columns e1, e2, e3."""
        return np.column_stack([self.e1, self.e2, self.e3])


@dataclass
class FrameMatrix:
    """E_ij = e_i(0) . e_j(s)."""
    s: float
    E: np.ndarray

    def orthogonality_error(self):
        return float(np.linalg.norm(self.E.T @ self.E - np.eye(3)))

    def determinant(self):
        return float(np.linalg.det(self.E))


def initial_frame(n0):
    """
    Right-handed triad with e3 = n0: e1 is x-hat Gram-Schmidt'ed against
    n0 (y-hat when n0 is too close to x-hat), e2 = n0 x e1.
    """
    n0 = np.asarray(n0, dtype=float)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(n0, ref)) > GRAM_SCHMIDT_FALLBACK:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = ref - np.dot(ref, n0) * n0
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n0, e1)
    return np.column_stack([e1, e2, n0])


def nearest_rotation(F):
    """Orthonormal polar factor of F (single 3x3 or a stack of them)."""
    F = np.asarray(F)
    if F.ndim == 2:
        return polar(F)[0]
    U, _, Vt = np.linalg.svd(F)
    return U @ Vt


class FrameFlow:
    """
    Continuous solution of the transport law de_i/ds = (n x n') x e_i
    with dense output, integrated piece by piece between the path's
    breakpoints and re-orthonormalized at every restart and every sample.
    """

    def __init__(self, path: FieldPath, tol: float = FRAME_TOL):
        self.path = path
        self.tol = tol
        self.F0 = initial_frame(path.n(0.0))
        self._pieces = []
        self.nfev = 0

        F = self.F0
        for s0, s1 in path.pieces():
            sol = solve_ivp(self._rhs, (s0, s1), F.reshape(9), method=ODE_METHOD,
                            rtol=tol, atol=tol, dense_output=True)
            self.nfev += sol.nfev
            if not sol.success:
                raise NumericalError(f"parallel transport failed on [{s0}, {s1}]: {sol.message}")
            if self.nfev > MAX_RHS_EVALS:
                raise NumericalError(f"parallel transport exceeded {MAX_RHS_EVALS} evaluations")
            self._pieces.append((s0, s1, sol.sol))
            F = nearest_rotation(sol.y[:, -1].reshape(3, 3))
        self._ends = np.array([p[1] for p in self._pieces])
        log.debug("frame transport: %d pieces, %d rhs evaluations", len(self._pieces), self.nfev)

    def _rhs(self, s, y):
        n, dn, _ = self.path.evaluate(s)
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(dn))):
            raise PathError(f"dn/ds is not finite at s={s}")
        if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
            raise PathError(f"n(s={s}) is not a unit vector")
        w = np.cross(n, dn)
        return (cross_matrix(w) @ y.reshape(3, 3)).reshape(9)

    # ------------------------------------------------------------------
    # Frame evaluation
    # ------------------------------------------------------------------

    def frame(self, s):
        """Frame columns (e1, e2, e3) at s; shape (3, 3) or (len(s), 3, 3)."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise PathError("frame requested outside s in [0, 1]")
        idx = np.minimum(np.searchsorted(self._ends, s, side="left"), len(self._pieces) - 1)
        out = np.empty((len(s), 3, 3))
        for k in np.unique(idx):
            mask = idx == k
            raw = self._pieces[k][2](s[mask])            # (9, m)
            out[mask] = raw.T.reshape(-1, 3, 3)
        out = nearest_rotation(out)
        return out[0] if scalar else out

    def sigma(self, s):
        """
        (sigma1, sigma2) = (de_mu/ds) . n from the transport law; shape (2,)
        or (len(s), 2).
        """
        F = self.frame(s)
        n, dn, _ = self.path.evaluate(s)
        w = np.cross(n, dn)
        e = F[..., :, :2]                                  # (..., 3, 2)
        de = np.cross(w[..., None, :], np.swapaxes(e, -1, -2))  # (..., 2, 3)
        return np.einsum("...ki,...i->...k", de, n)

    def sigma_rate(self, s):
        """
        d sigma_mu / ds. Analytic (-e_mu . n'') where the path provides n'',
        centered differences of sigma otherwise.
        """
        n, dn, d2n = self.path.evaluate(s)
        if d2n is not None:
            F = self.frame(s)
            return -np.einsum("...im,...i->...m", F[..., :, :2], d2n)
        h = SIGMA_FD_STEP
        s = np.asarray(s, dtype=float)
        lo = np.clip(s - h, 0.0, 1.0)
        hi = np.clip(s + h, 0.0, 1.0)
        return (self.sigma(hi) - self.sigma(lo)) / np.asarray(hi - lo)[..., None]

    def piece_grids(self, s_end=1.0, points=GRID_POINTS):
        """
        Uniform sub-grids over the smooth pieces of [0, s_end], with points
        spread in proportion to piece length (odd counts, Simpson-ready).
        Returns [(grid, evaluation_points)] where the evaluation points sit
        a hair inside the piece so one-sided limits are used at breakpoints.
        """
        out = []
        for s0, s1 in self.path.pieces():
            if s0 >= s_end:
                break
            s1 = min(s1, s_end)
            if s1 - s0 <= 0.0:
                continue
            m = max(5, int(round(points * (s1 - s0) / max(s_end, 1e-300))))
            m += (m + 1) % 2
            grid = np.linspace(s0, s1, m)
            delta = 1e-12 * (s1 - s0)
            out.append((grid, np.clip(grid, s0 + delta, s1 - delta)))
        if not out:
            grid = np.zeros(5)
            out.append((grid, grid))
        return out


def transport_frame(path: FieldPath, s_grid: Sequence[float], tol: float = FRAME_TOL,
                    flow: Optional[FrameFlow] = None) -> List[TransportedFrame]:
    """Parallel-transported frames sampled at *s_grid*."""
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(np.diff(s_grid) < 0):
        raise PathError("s_grid must be ordered")
    flow = flow or FrameFlow(path, tol)
    F = flow.frame(s_grid)
    return [TransportedFrame(float(s), f[:, 0], f[:, 1], f[:, 2]) for s, f in zip(s_grid, F)]


def frame_matrix(path: FieldPath, s: float, tol: float = FRAME_TOL,
                 flow: Optional[FrameFlow] = None) -> FrameMatrix:
    """E(s) with E_ij = e_i(0) . e_j(s)."""
    flow = flow or FrameFlow(path, tol)
    return FrameMatrix(float(s), flow.F0.T @ flow.frame(s))


def frame_rotation(flow: FrameFlow, s: float):
    """Lab-frame rotation Q(s) = F(s) F(0)^T taking e_i(0) to e_i(s)."""
    return flow.frame(s) @ flow.F0.T


def sigma(path: FieldPath, s, tol: float = FRAME_TOL, flow: Optional[FrameFlow] = None):
    """(sigma1, sigma2) at s, per unit of path parameter."""
    flow = flow or FrameFlow(path, tol)
    return flow.sigma(s)


def path_ordered_frame_matrix(path: FieldPath, s: float, steps: int = 2000):
    """
    E(s) as an ordered product of exponentials of (J_m) generators,
    (J_m)_ik = -eps_mik, midpoint rule; independent check of frame_matrix.
    """
    from scipy.linalg import expm

    F0 = initial_frame(path.n(0.0))
    edges = np.linspace(0.0, s, steps + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    h = s / steps
    n, dn, _ = path.evaluate(mids)
    E = np.eye(3)
    for k in range(steps):
        w = F0.T @ np.cross(n[k], dn[k])           # components on e(0)
        # sum_m w_m J_m = [w]x
        E = expm(h * cross_matrix(w)) @ E
    return E


# =====================================================================
# Displacement and solid angle
# =====================================================================

@dataclass
class DisplacementCurve:
    """d(s) on (e1(0), e2(0)) sampled on [0, s_end]."""
    s: np.ndarray
    d: np.ndarray             # shape (len(s), 2)
    a: float
    sigma: np.ndarray = field(default=None, repr=False)

    @property
    def end(self):
        return self.d[-1].copy()

    def at(self, s):
        """Spline interpolation of the curve at s."""
        return CubicSpline(self.s, self.d, axis=0)(s)


def _piecewise_cumulative(values_per_piece, grids):
    """Cumulative Simpson integrals chained across pieces."""
    out, offset = [], 0.0
    for vals, grid in zip(values_per_piece, grids):
        cum = cumulative_simpson(vals, x=grid, axis=0, initial=0) + offset
        out.append(cum)
        offset = cum[-1]
    return out


def sampled_sigma(flow: FrameFlow, s_end=1.0, points=GRID_POINTS):
    """
    sigma and its running integral Sigma(s) = int_0^s sigma on the piece
    grids. Returns (s, sigma, Sigma) with breakpoint duplicates removed.
    """
    if s_end <= 0.0:
        return np.zeros(1), flow.sigma(np.zeros(1)), np.zeros((1, 2))
    pieces = flow.piece_grids(s_end, points)
    grids = [g for g, _ in pieces]
    sig = [flow.sigma(ev) for _, ev in pieces]
    cum = _piecewise_cumulative(sig, grids)
    keep = [slice(None)] + [slice(1, None)] * (len(grids) - 1)
    s = np.concatenate([g[k] for g, k in zip(grids, keep)])
    sg = np.concatenate([v[k] for v, k in zip(sig, keep)])
    Sg = np.concatenate([c[k] for c, k in zip(cum, keep)])
    return s, sg, Sg


def displacement(path: FieldPath, s: float, a: float, tol: float = FRAME_TOL,
                 flow: Optional[FrameFlow] = None, points: int = GRID_POINTS) -> DisplacementCurve:
    """
    d(s) = sum_mu ( -(a/2) int_0^s e_mu . dn ) e_mu(0) as components on
    (e1(0), e2(0)); note -(e_mu . dn/ds) = sigma_mu.
    """
    flow = flow or FrameFlow(path, tol)
    grid, sg, Sg = sampled_sigma(flow, s, points)
    return DisplacementCurve(grid, 0.5 * a * Sg, float(a), sg)


def solid_angle(path: FieldPath, samples: int = SOLID_ANGLE_SAMPLES) -> float:
    """
    Oriented spherical area enclosed by a closed loop of n (right-hand
    rule about the loop), as a sum of signed geodesic triangles fanned
    from the normalized mean direction of the loop.
    """
    if not path.closed:
        raise PathError("solid angle is only defined for closed paths")
    grids = []
    for s0, s1 in path.pieces():
        m = max(3, int(round(samples * (s1 - s0))))
        grids.append(np.linspace(s0, s1, m, endpoint=False))
    s = np.concatenate(grids + [np.array([1.0])])
    p = path.n(s)
    p[-1] = p[0]
    c = p.mean(axis=0)
    if np.linalg.norm(c) < 1e-6:
        c = p[0]
    c = c / np.linalg.norm(c)
    a, b = p[:-1], p[1:]
    num = np.einsum("ij,ij->i", np.broadcast_to(c, a.shape), np.cross(a, b))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + b @ c + a @ c
    return float(2.0 * np.sum(np.arctan2(num, den)))


def holonomy_angle(E) -> float:
    """Signed rotation angle of E about the third axis of the e(0) basis (n(0))."""
    E = np.asarray(E.E if isinstance(E, FrameMatrix) else E)
    return float(math.atan2(E[1, 0] - E[0, 1], E[0, 0] + E[1, 1]))


def rotation_axis_angle(E, F0=None) -> Tuple[np.ndarray, float]:
    """
    Axis (lab coordinates when F0 is given, e(0) components otherwise)
    and angle in [0, pi] of the rotation E.
    """
    E = np.asarray(E.E if isinstance(E, FrameMatrix) else E)
    rotvec = Rotation.from_matrix(E).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    axis = rotvec / angle if angle > 1e-15 else np.array([0.0, 0.0, 1.0])
    if F0 is not None:
        axis = np.asarray(F0) @ axis
    return axis, angle


def wrap_angle(x):
    """Map an angle to (-pi, pi]."""
    return float(math.pi - (math.pi - x) % (2.0 * math.pi))
