"""Spatial discretization of R^N: radial (log-spaced or uniform) and 3-D box grids.

All grids use a finite-volume layout: every node owns a cell, the quadrature
weight of a node is the exact volume of its cell, and the Dirichlet energy is
the face sum ``sum_f c_f (u_i - u_j)^2``.  The discrete Laplacian is defined
as minus the weighted-L2 gradient of half that sum, so energies and their
gradients are consistent to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from . import kernels

__all__ = [
    "flux_polish",
    "roundoff_floor",
    "Domain",
    "DomainError",
    "Kind",
    "build_domain",
    "integrate",
    "grad_norm_sq",
    "lp_norm",
    "dilate",
    "laplacian",
    "x_dot_grad",
    "sphere_area",
    "ball_volume",
]


class DomainError(ValueError):
    """Invalid domain parameters or a field that does not live on the domain."""


class Kind(str, Enum):
    RADIAL_LOG = "radial-log-spaced"
    RADIAL_UNIFORM = "radial-uniform"
    BOX_UNIFORM = "box-uniform"


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere S^{N-1}."""
    return 2.0 * np.pi ** (N / 2) / gamma(N / 2)


def ball_volume(N: int, R: float) -> float:
    return sphere_area(N) * R**N / N


@dataclass(frozen=True, eq=False)
class Domain:
    """Immutable discretization of a truncated R^N.

    For radial kinds ``nodes`` holds the radii and the last node sits on the
    truncation sphere |x| = R_max (solver fields keep it at zero).  For the box
    kind ``nodes`` has shape (n^3, 3) and the Dirichlet condition is imposed on
    the box faces through ``bnd_coef``.
    """

    N: int
    kind: Kind
    R_max: float
    n: int
    nodes: np.ndarray
    radius: np.ndarray
    weights: np.ndarray
    face_i: np.ndarray
    face_j: np.ndarray
    face_coef: np.ndarray
    bnd_coef: np.ndarray
    ratio: float | None = None
    spacing: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def radial(self) -> bool:
        return self.kind is not Kind.BOX_UNIFORM

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def interior(self) -> np.ndarray:
        """Mask of nodes carrying unknowns (the radial boundary node is fixed at 0)."""
        mask = np.ones(self.size, dtype=bool)
        if self.radial:
            mask[-1] = False
        return mask

    @property
    def stiffness(self) -> sp.csr_matrix:
        """Symmetric matrix K with u^T K u = sum_f c_f (u_i - u_j)^2 (+ box boundary terms)."""
        K = self._cache.get("stiffness")
        if K is None:
            i, j, c = self.face_i, self.face_j, self.face_coef
            rows = np.concatenate([i, j, i, j])
            cols = np.concatenate([i, j, j, i])
            vals = np.concatenate([c, c, -c, -c])
            K = sp.coo_matrix((vals, (rows, cols)), shape=(self.size, self.size)).tocsr()
            K = K + sp.diags(self.bnd_coef)
            K = K.tocsr()
            self._cache["stiffness"] = K
        return K

    def metadata(self) -> dict:
        meta = {
            "N": self.N,
            "kind": self.kind.value,
            "R_max": float(self.R_max),
            "n": self.n,
            "nodes": self.size,
        }
        if self.ratio is not None:
            meta["ratio"] = float(self.ratio)
        if self.spacing is not None:
            meta["spacing"] = float(self.spacing)
        return meta

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise DomainError(f"field of shape {u.shape} does not live on a domain with {self.size} nodes")
        return u


def build_domain(N: int, kind: str | Kind, R_max: float, n: int, r_min: float | None = None) -> Domain:
    """Build a domain.

    Parameters
    ----------
    N : int
        Dimension, 3 <= N <= 5 (the box kind only for N = 3).
    kind : str
        ``radial-log-spaced``, ``radial-uniform`` or ``box-uniform``.
    R_max : float
        Truncation radius (half side length for the box).
    n : int
        Number of radial nodes (nodes per axis for the box).
    r_min : float, optional
        Innermost radius of the log-spaced grid; defaults to ``1e-6 * R_max``.
    """
    try:
        kind = Kind(kind)
    except ValueError as exc:
        raise DomainError(f"unknown domain kind {kind!r}") from exc
    if N not in (3, 4, 5):
        raise DomainError(f"dimension N={N} not supported (3, 4 or 5)")
    if kind is Kind.BOX_UNIFORM and N != 3:
        raise DomainError("box-uniform domains exist only for N=3")
    if not R_max > 0:
        raise DomainError("R_max must be positive")
    if n < 16:
        raise DomainError("need at least 16 nodes")

    if kind is Kind.BOX_UNIFORM:
        return _build_box(R_max, n)

    area = sphere_area(N)
    if kind is Kind.RADIAL_UNIFORM:
        r = np.linspace(0.0, R_max, n)
        faces = 0.5 * (r[1:] + r[:-1])
        ratio = None
        spacing = r[1] - r[0]
    else:
        if r_min is None:
            r_min = 1e-6 * R_max
        if not 0 < r_min < R_max:
            raise DomainError("need 0 < r_min < R_max")
        ratio = (R_max / r_min) ** (1.0 / (n - 1))
        r = R_max * ratio ** (np.arange(n) - (n - 1.0))
        r[-1] = R_max
        faces = np.sqrt(r[1:] * r[:-1])
        spacing = None
    edges = np.concatenate([[0.0], faces, [R_max]])
    weights = area / N * (edges[1:] ** N - edges[:-1] ** N)
    coef = area * faces ** (N - 1) / np.diff(r)
    idx = np.arange(n - 1)
    return Domain(
        N=N,
        kind=kind,
        R_max=float(R_max),
        n=n,
        nodes=r,
        radius=r,
        weights=weights,
        face_i=idx,
        face_j=idx + 1,
        face_coef=coef,
        bnd_coef=np.zeros(n),
        ratio=ratio,
        spacing=spacing,
    )


def _build_box(R_max: float, n: int) -> Domain:
    h = 2.0 * R_max / n
    x = -R_max + h * (np.arange(n) + 0.5)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    idx = np.arange(n**3).reshape(n, n, n)
    fi, fj = [], []
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        fi.append(idx[tuple(lo)].ravel())
        fj.append(idx[tuple(hi)].ravel())
    fi = np.concatenate(fi)
    fj = np.concatenate(fj)
    # face area h^2 over spacing h; boundary faces sit h/2 from the node
    coef = np.full(fi.size, h)
    ncount = np.zeros((n, n, n))
    for axis in range(3):
        sl = [slice(None)] * 3
        sl[axis] = 0
        ncount[tuple(sl)] += 1
        sl[axis] = n - 1
        ncount[tuple(sl)] += 1
    bnd = 2.0 * h * ncount.ravel()
    return Domain(
        N=3,
        kind=Kind.BOX_UNIFORM,
        R_max=float(R_max),
        n=n,
        nodes=nodes,
        radius=np.linalg.norm(nodes, axis=1),
        weights=np.full(n**3, h**3),
        face_i=fi,
        face_j=fj,
        face_coef=coef,
        bnd_coef=bnd,
        spacing=h,
    )


def integrate(d: Domain, f: np.ndarray) -> float:
    """Quadrature sum of ``f`` over the domain."""
    return float(np.dot(d.weights, d.check(f)))


def grad_norm_sq(d: Domain, u: np.ndarray) -> float:
    """Discrete Dirichlet energy ``int |grad u|^2``."""
    u = d.check(u)
    if d.radial:
        return kernels.dirichlet_energy(u, d.face_coef)
    diff = u[d.face_i] - u[d.face_j]
    return float(np.dot(d.face_coef, diff * diff) + np.dot(d.bnd_coef, u * u))


def lp_norm(d: Domain, f: np.ndarray, p: float) -> float:
    """Quadrature L^p norm; ``p = inf`` gives the max over nodes."""
    f = d.check(f)
    if p == np.inf:
        return float(np.max(np.abs(f))) if f.size else 0.0
    if p < 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    return float(np.dot(d.weights, np.abs(f) ** p) ** (1.0 / p))


def laplacian(d: Domain, u: np.ndarray) -> np.ndarray:
    """Discrete Laplacian ``-(K u) / w``; rows of fixed boundary nodes are zero."""
    u = d.check(u)
    if d.radial:
        out = -kernels.stiffness_apply(u, d.face_coef) / d.weights
        out[-1] = 0.0
        return out
    return -(d.stiffness @ u) / d.weights


def roundoff_floor(d: Domain, u: np.ndarray, factor: float = 1e3) -> float:
    """Weighted norm of the Laplacian residual that round-off in ``u`` alone can produce."""
    big = d.stiffness.diagonal() / d.weights * d.check(u)
    return factor * float(np.finfo(float).eps) * math.sqrt(float(np.dot(d.weights, big * big)))


def flux_polish(d: Domain, u: np.ndarray, source: np.ndarray, rel_weight: float = 1e-8) -> np.ndarray:
    """Rebuild ``u`` in the tiny cells near the origin from the flux balance.

    On radial grids ``-Lap u = source`` reads ``c_i (u_i - u_{i+1}) = sum_{j<=i} w_j f_j``.
    A banded solve leaves round-off of order ``eps |u|`` in the differences,
    which the small cell weights blow up in the strong-form residual; here
    the differences are computed directly.  Cells with weight above
    ``rel_weight * max(w)`` are left untouched.
    """
    u = np.array(d.check(u), dtype=float)
    if not d.radial:
        return u
    w = d.weights[:-1]
    small = np.flatnonzero(w < rel_weight * w.max())
    if small.size == 0:
        return u
    k = int(small[-1])
    flux = np.cumsum(w[: k + 1] * source[: k + 1])
    c = d.face_coef
    for i in range(k, -1, -1):
        u[i] = u[i + 1] + flux[i] / c[i]
    return u


def x_dot_grad(d: Domain, u: np.ndarray) -> np.ndarray:
    """Nodal values of ``x . grad u`` by centered differences.

    Radial grids use the three-point formula on the nonuniform mesh with the
    symmetric extension u'(0) = 0; box grids use zero ghost values.
    """
    u = d.check(u)
    if d.radial:
        r = d.radius
        du = np.empty_like(u)
        hm = np.diff(r)[:-1]
        hp = np.diff(r)[1:]
        du[1:-1] = (
            -hp / (hm * (hm + hp)) * u[:-2]
            + (hp - hm) / (hm * hp) * u[1:-1]
            + hm / (hp * (hm + hp)) * u[2:]
        )
        if r[0] == 0.0:
            du[0] = 0.0
        else:
            # mirror node at -r[0] with the same value
            h0, h1 = 2 * r[0], r[1] - r[0]
            du[0] = (-h1 / (h0 * (h0 + h1)) + (h1 - h0) / (h0 * h1)) * u[0] + h0 / (h1 * (h0 + h1)) * u[1]
        du[-1] = (u[-1] - u[-2]) / (r[-1] - r[-2])
        return r * du
    n = d.n
    h = d.spacing
    U = u.reshape(n, n, n)
    P = np.pad(U, 1)
    out = np.zeros_like(U)
    for axis in range(3):
        fwd = [slice(1, -1)] * 3
        bwd = [slice(1, -1)] * 3
        fwd[axis] = slice(2, None)
        bwd[axis] = slice(0, -2)
        grad = (P[tuple(fwd)] - P[tuple(bwd)]) / (2 * h)
        out += d.nodes[:, axis].reshape(n, n, n) * grad
    return out.ravel()


def dilate(d: Domain, u: np.ndarray, h: float) -> np.ndarray:
    """Mass-preserving dilation ``h^{N/2} u(h x)``.

    On log-spaced grids a power of the grid ratio is an exact index shift.
    Other factors interpolate with a cubic spline in log r (radial) or
    trilinearly (box).  Values pulled from beyond R_max are zero; values
    pulled from inside the innermost node use u'(0) = 0.
    """
    u = d.check(u)
    if not h > 0:
        raise DomainError("dilation factor must be positive")
    if h == 1.0:
        return u.copy()
    scale = h ** (d.N / 2)
    if d.kind is Kind.RADIAL_LOG:
        k = np.log(h) / np.log(d.ratio)
        kr = round(k)
        if abs(k - kr) < 1e-9:
            return scale * _shift(u, int(kr))
    if d.radial:
        r = d.radius
        target = h * r
        out = np.zeros_like(u)
        inside = target < r[-1]
        if d.kind is Kind.RADIAL_LOG:
            spline = CubicSpline(np.log(r), u)
            t = target[inside]
            vals = np.where(t <= r[0], u[0], spline(np.log(np.maximum(t, r[0]))))
        else:
            # even extension keeps u'(0) = 0
            rr = np.concatenate([-r[:0:-1], r])
            uu = np.concatenate([u[:0:-1], u])
            vals = CubicSpline(rr, uu)(target[inside])
        out[inside] = vals
        out[-1] = 0.0
        return scale * out
    from scipy.interpolate import RegularGridInterpolator

    n = d.n
    axis = d.nodes[:n * n * n:n * n, 0]
    interp = RegularGridInterpolator((axis, axis, axis), u.reshape(n, n, n), bounds_error=False, fill_value=0.0)
    return scale * interp(h * d.nodes)


def _shift(u: np.ndarray, k: int) -> np.ndarray:
    """out[i] = u[i + k] with zero beyond the boundary node and u[0] below the first node."""
    n = u.size
    out = np.zeros_like(u)
    if k >= 0:
        if k < n - 1:
            out[: n - 1 - k] = u[k : n - 1]
    else:
        m = -k
        if m < n:
            out[m:] = u[: n - m]
            out[:m] = u[0]
        else:
            out[:] = u[0]
    out[-1] = 0.0
    return out
