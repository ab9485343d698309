"""Constrained critical points of the energy on the unit L2 sphere.

``find_local_minimizer`` runs preconditioned projected-gradient descent from
the principal eigenfunction and polishes with Newton on the bordered system
``(-Lap + V - lambda) u - mu |u|^{p-2} u = 0, |u|_2 = 1``.
``find_mountain_pass`` deforms a discretized path between the two endpoints of
the dilation fiber, relaxing the path maximum in the dilation variable, and
finishes with the same Newton polish.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .domain import Domain, Kind, dilate, flux_polish, grad_norm_sq, laplacian, lp_norm, roundoff_floor
from .functional import (
    EnergyReport,
    augmented_energy_ds,
    ball_radius,
    critical_exponent,
    energy,
    energy_gradient,
    energy_report,
    estar_bound,
    level_threshold,
    sobolev_constant,
    tangential_gradient,
)
from .potentials import Decomposition
from .spectrum import EigenResult, principal_eigenpair

__all__ = [
    "SolverConfig",
    "SolutionBundle",
    "SolverError",
    "NonConvergence",
    "NoLocalMinimizer",
    "PathCollapse",
    "find_local_minimizer",
    "ground_state_gate",
    "mountain_pass_endpoints",
    "find_mountain_pass",
    "pde_residual",
    "newton_polish",
    "minimizer_certificate",
    "saddle_certificate",
]


class SolverError(RuntimeError):
    def __init__(self, msg: str, evidence: dict | None = None):
        super().__init__(msg)
        self.evidence = evidence or {}


class NonConvergence(SolverError):
    pass


class NoLocalMinimizer(SolverError):
    """Descent keeps leaving the gradient ball or never reaches negative energy."""


class PathCollapse(SolverError):
    pass


@dataclass
class SolverConfig:
    mu: float
    step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-8
    residual_tol: float = 1e-6
    mass_tol: float = 1e-10
    max_iter: int = 4000
    newton_iter: int = 40
    switch_tol: float = 1e-5
    path_nodes: int = 33
    max_sweeps: int = 400
    eps: float = 0.1
    seed: int = 0
    max_escapes: int = 25
    saddle_tol: float = 1e-3
    pohozaev_tol: float = 1e-5
    seed_R: float | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        for name in ("step", "grad_tol", "residual_tol", "mass_tol", "switch_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.path_nodes < 8:
            raise ValueError("path needs at least 8 nodes")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolutionBundle:
    u: np.ndarray
    lam: float
    kind: str
    report: EnergyReport
    residual: float
    neg_part: float
    log: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def energy(self) -> float:
        return self.report.energy

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "multiplier": self.lam,
            "energy": self.report.energy,
            "pde_residual": self.residual,
            "neg_part_norm": self.neg_part,
            "mass": self.report.mass,
            "report": self.report.to_dict(),
            **self.extra,
        }


# ----------------------------------------------------------------------------
# linear algebra on the unknowns (all nodes but the radial boundary node)


class _Linear:
    """Solves ``(K + W diag(s)) x = b`` restricted to the unknowns."""

    def __init__(self, d: Domain):
        self.d = d
        self.m = d.size - 1 if d.radial else d.size
        if d.radial:
            c = d.face_coef
            m = self.m
            dk = np.zeros(m)
            dk += c[:m]
            dk[1:] += c[: m - 1]
            self.diag_K = dk
            self.off = -c[: m - 1]
        else:
            self.K = d.stiffness

    def solve(self, shift: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        d, m = self.d, self.m
        w = d.weights[:m]
        if d.radial:
            ab = np.zeros((3, m))
            ab[0, 1:] = self.off
            ab[1] = self.diag_K + w * shift[:m]
            ab[2, :-1] = self.off
            x = np.zeros(d.size)
            x[:m] = solve_banded((1, 1), ab, rhs[:m], check_finite=False)
            return x
        A = (self.K + sp.diags(w * shift)).tocsc()
        return splu(A).solve(rhs)


def _wdot(d: Domain, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(d.weights, a * b))


def _normalize(d: Domain, u: np.ndarray) -> np.ndarray:
    return u / math.sqrt(_wdot(d, u, u))


def pde_residual(d: Domain, u: np.ndarray, lam: float, V: np.ndarray, mu: float) -> float:
    """Weighted L2 norm of ``-Lap u + V u - lam u - mu |u|^{p-2} u`` over the unknowns."""
    u = d.check(u)
    p = critical_exponent(d.N)
    r = -laplacian(d, u) + V * u - lam * u - mu * np.abs(u) ** (p - 2) * u
    if d.radial:
        r[-1] = 0.0
    return math.sqrt(_wdot(d, r, r))


def _multiplier(d: Domain, u: np.ndarray, V: np.ndarray, mu: float) -> float:
    """Multiplier formula, equal to the least-squares fit of the residual against u."""
    g = energy_gradient(d, u, V, mu)
    return _wdot(d, g, u) / _wdot(d, u, u)


def newton_polish(d: Domain, u: np.ndarray, lam: float, V: np.ndarray, mu: float, *, tol: float = 1e-11,
                  max_iter: int = 40, lin: _Linear | None = None, log: list | None = None):
    """Newton on the bordered system for (u, lambda); returns (u, lambda, residual).

    Steps are damped until the residual decreases; the iteration stops when
    the residual stalls at round-off.
    """
    lin = lin or _Linear(d)
    p = critical_exponent(d.N)
    w = d.weights
    res = pde_residual(d, u, lam, V, mu)
    for it in range(max_iter):
        if res < tol:
            break
        F1 = w * energy_gradient(d, u, V, mu) - lam * w * u
        if d.radial:
            F1[-1] = 0.0
        F2 = 0.5 * (_wdot(d, u, u) - 1.0)
        shift = V - lam - mu * (p - 1) * np.abs(u) ** (p - 2)
        a = lin.solve(shift, -F1)
        b = lin.solve(shift, w * u)
        dlam = (-F2 - _wdot(d, u, a)) / _wdot(d, u, b)
        du = a + dlam * b
        t = 1.0
        while t > 1e-4:
            un = u + t * du
            ln = lam + t * dlam
            rn = pde_residual(d, un, ln, V, mu)
            if rn < res:
                break
            t *= 0.5
        else:
            break
        u, lam, res = un, ln, rn
        if log is not None:
            log.append({"phase": "newton", "iter": it, "residual": res, "multiplier": lam})
    if d.radial:
        polished = flux_polish(d, u, (lam - V) * u + mu * np.abs(u) ** (p - 2) * u)
        if pde_residual(d, polished, lam, V, mu) < res:
            u = polished
    u = _normalize(d, u)
    lam = _multiplier(d, u, V, mu)
    return u, lam, pde_residual(d, u, lam, V, mu)


def _bundle(d: Domain, u: np.ndarray, V: np.ndarray, mu: float, kind: str, log: list, extra: dict) -> SolutionBundle:
    u = _normalize(d, u)
    lam = _multiplier(d, u, V, mu)
    rep = energy_report(d, u, V, mu)
    neg = lp_norm(d, np.minimum(u, 0.0), 2)
    return SolutionBundle(u, lam, kind, rep, pde_residual(d, u, lam, V, mu), neg, log, extra)


def _descent(d: Domain, u: np.ndarray, V: np.ndarray, mu: float, cfg: SolverConfig, lin: _Linear,
             shift: np.ndarray, Rbar: float | None, log: list, tol: float, phase: str = "descent"):
    """Preconditioned projected-gradient descent with Armijo backtracking.

    Steps leaving the gradient ball of radius ``Rbar`` are rejected like
    non-decreasing ones; ``escapes`` counts consecutive iterations that
    could not move because of it.
    """
    E = energy(d, u, V, mu)
    alpha = cfg.step
    escapes = 0
    gnorm = np.inf
    for it in range(cfg.max_iter):
        g = tangential_gradient(d, u, V, mu)
        gnorm = math.sqrt(_wdot(d, g, g))
        kin = grad_norm_sq(d, u)
        if it % 10 == 0 or gnorm < tol * max(1.0, math.sqrt(kin)):
            log.append({"phase": phase, "iter": it, "energy": E, "grad_norm": gnorm, "kinetic": kin})
        if gnorm < tol * max(1.0, math.sqrt(kin)):
            return u, E, gnorm, it, escapes
        z = lin.solve(shift, d.weights * g)
        z -= (_wdot(d, z, u) / _wdot(d, u, u)) * u
        slope = -_wdot(d, g, z)
        alpha = min(cfg.step, alpha / cfg.backtrack)
        hit_ball = False
        while alpha > 1e-12:
            un = _normalize(d, np.abs(u - alpha * z))
            if Rbar is not None and grad_norm_sq(d, un) > Rbar**2:
                hit_ball = True
                alpha *= cfg.backtrack
                continue
            En = energy(d, un, V, mu)
            if En <= E + cfg.armijo * alpha * slope:
                break
            alpha *= cfg.backtrack
        else:
            escapes = escapes + 1 if hit_ball else escapes
            if escapes >= cfg.max_escapes or not hit_ball:
                return u, E, gnorm, it, escapes
            continue
        escapes = 0
        u, E = un, En
    return u, E, gnorm, cfg.max_iter, escapes


def find_local_minimizer(d: Domain, V: np.ndarray, cfg: SolverConfig, eig: EigenResult | None = None) -> SolutionBundle:
    """Local minimizer of the energy on the sphere inside the ball ``|grad u|_2 <= Rbar``."""
    mu = cfg.mu
    eig = eig or principal_eigenpair(d, V)
    Rbar = ball_radius(d.N, mu)
    log: list = []
    evidence = {"lambda_1": eig.eigenvalue, "Rbar": Rbar}
    if eig.eigenvalue >= 0:
        raise NoLocalMinimizer("operator is not weakly attractive (lambda_1 >= 0)", evidence)
    u = eig.psi.copy()
    kin = grad_norm_sq(d, u)
    if kin > (0.9 * Rbar) ** 2:
        u = _normalize(d, dilate(d, u, 0.9 * Rbar / math.sqrt(kin)))
    lin = _Linear(d)
    shift = V - eig.eigenvalue + 1.0
    u, E, gnorm, iters, escapes = _descent(d, u, V, mu, cfg, lin, shift, Rbar, log, cfg.switch_tol)
    evidence.update(energy=E, grad_norm=gnorm, iterations=iters, escapes=escapes)
    if escapes >= cfg.max_escapes:
        raise NoLocalMinimizer("descent keeps leaving the gradient ball", evidence)
    if gnorm >= cfg.switch_tol * max(1.0, math.sqrt(grad_norm_sq(d, u))) and iters >= cfg.max_iter:
        raise NonConvergence("projected-gradient descent did not converge", evidence)
    lam = _multiplier(d, u, V, mu)
    u, lam, res = newton_polish(d, u, lam, V, mu, max_iter=cfg.newton_iter, lin=lin, log=log)
    b = _bundle(d, u, V, mu, "local-min", log, {"lambda_1": eig.eigenvalue, "Rbar": Rbar, "descent_iterations": iters})
    g = tangential_gradient(d, b.u, V, mu)
    gn = math.sqrt(_wdot(d, g, g))
    floor = roundoff_floor(d, b.u)
    b.extra.update(grad_norm=gn, roundoff_floor=floor, kinetic_ok=b.report.kinetic < Rbar**2)
    if b.report.kinetic >= Rbar**2:
        raise NoLocalMinimizer("critical point found outside the gradient ball", {**evidence, "kinetic": b.report.kinetic})
    if b.energy >= 0:
        raise NoLocalMinimizer("no negative-energy critical point inside the ball", {**evidence, "energy": b.energy})
    if b.residual > cfg.residual_tol or gn > max(cfg.grad_tol * max(1.0, math.sqrt(b.report.kinetic)), floor):
        raise NonConvergence("Newton polish did not reach the residual tolerance",
                             {**evidence, "residual": b.residual, "grad_norm": gn})
    return b


def ground_state_gate(d: Domain, bundle: SolutionBundle, dec: Decomposition | None, mu: float) -> tuple[bool, dict]:
    """Numerical version of the a-priori gradient bound for negative-energy solutions.

    With ``delta_1 = 1 - A S^-1 |V1*|_{N/2} - B S^-1/2 |W1|_N`` every
    negative-energy solution obeys
    ``|grad u| < max(sqrt(2 A |V2*|_inf / delta_1), 2 B |W2|_inf / delta_1)``;
    the gate passes when that bound lies below Rbar.
    """
    if dec is None:
        raise SolverError("ground-state gate needs a decomposition")
    if bundle.energy >= 0:
        raise SolverError("ground-state gate applies to negative-energy solutions")
    N = d.N
    S = sobolev_constant(N)
    A, B = N / 4, (N - 2) / 2
    V1s = np.maximum((N - 4) * dec.V1, 0.0)
    V2s = np.maximum((N - 4) * dec.V2, 0.0)
    delta1 = 1 - A / S * lp_norm(d, V1s, N / 2) - B / math.sqrt(S) * lp_norm(d, dec.W1, N)
    Rbar = ball_radius(N, mu, S)
    margins = {"delta1": delta1, "Rbar": Rbar, "grad_norm": math.sqrt(bundle.report.kinetic)}
    if delta1 <= 0:
        margins["bound"] = math.inf
        return False, margins
    bound = max(math.sqrt(2 * A * lp_norm(d, V2s, np.inf) / delta1), 2 * B * lp_norm(d, dec.W2, np.inf) / delta1)
    margins["bound"] = bound
    margins["margin"] = Rbar - bound
    return bound < Rbar, margins


# ----------------------------------------------------------------------------
# mountain pass


def _fiber(d: Domain, w: np.ndarray, h: float) -> np.ndarray:
    return _normalize(d, dilate(d, w, h))


def mountain_pass_endpoints(d: Domain, w: np.ndarray, V: np.ndarray, mu: float, E_star: float,
                            h_range: tuple[float, float] = (1e-3, 1e3)):
    """Dilations ``w_h0``, ``w_h1`` with the four endpoint inequalities.

    h0 < 1 is the largest factor (bisection in log h) with ``E(w_h0) < E_star``;
    h1 > 1 the smallest with ``E(w_h1) < 0``.  On log-spaced grids the search
    runs over integer index shifts, so both endpoints are exact dilations.
    """
    Rbar = ball_radius(d.N, mu)
    lo, hi = h_range
    if d.kind is Kind.RADIAL_LOG:
        q = d.ratio
        snap = lambda h: q ** round(math.log(h) / math.log(q))  # noqa: E731
    else:
        snap = lambda h: h  # noqa: E731

    def ok0(h):
        u = _fiber(d, w, h)
        return grad_norm_sq(d, u) < Rbar**2 and energy(d, u, V, mu) < E_star

    def ok1(h):
        u = _fiber(d, w, h)
        return grad_norm_sq(d, u) > Rbar**2 and energy(d, u, V, mu) < 0

    def search(pred, a, b, want_large):
        # pred(a) holds (or pred(b)); shrink the bracket in log h
        a, b = snap(a), snap(b)
        while True:
            m = snap(math.sqrt(a * b))
            if m in (a, b):
                break
            if pred(m) == want_large:
                a = m
            else:
                b = m
        return a if want_large else b

    if not ok0(snap(lo)):
        raise SolverError("no admissible h0 in the dilation range", {"h": lo})
    h0 = search(ok0, lo, 1.0, True)
    if not ok1(snap(hi)):
        raise SolverError("no admissible h1 in the dilation range", {"h": hi})
    h1 = search(lambda h: not ok1(h), 1.0, hi, True)
    h1 = snap(h1)
    if not ok1(h1):
        # bisection stopped one shift short
        h1 = snap(h1 * (d.ratio if d.ratio else 1.0001))
    u0, u1 = _fiber(d, w, h0), _fiber(d, w, h1)
    if not (ok0(h0) and ok1(h1) and h0 < 1 < h1):
        raise SolverError("endpoint inequalities not met", {"h0": h0, "h1": h1})
    return (h0, u0), (h1, u1)


def _shifter(d: Domain):
    """Exact dilation by ``q**k`` on log grids; spline dilation by ``1.005**k`` elsewhere."""
    if d.kind is Kind.RADIAL_LOG:
        from .domain import _shift

        q = d.ratio
        return q, lambda u, k: q ** (d.N / 2 * k) * _shift(u, k)
    base = 1.005
    return base, lambda u, k: _normalize(d, dilate(d, u, base**k))


def _fiber_argmax(d: Domain, u: np.ndarray, V: np.ndarray, mu: float, width: float = 3.0, coarse: float = 0.05):
    """Global maximum of the energy along the dilation fiber of ``u``.

    Scans ``|ln h| <= width`` at spacing ``coarse`` in ``ln h``, widening the
    window while the maximum sits on its edge, then refines to single shifts.
    """
    base, sh = _shifter(d)
    stride = max(1, math.ceil(coarse / math.log(base)))
    span = math.ceil(width / math.log(base))
    limit = math.ceil(math.log(1e6) / math.log(base))
    lo, hi = -span, span
    vals: dict[int, float] = {}

    def E(k):
        if k not in vals:
            vals[k] = energy(d, sh(u, k), V, mu)
        return vals[k]

    while True:
        ks = range(lo, hi + 1, stride)
        k0 = max(ks, key=E)
        if k0 - lo < stride and lo > -limit:
            lo -= span
        elif hi - k0 < stride and hi < limit:
            hi += span
        else:
            break
    best = max(range(k0 - stride + 1, k0 + stride), key=E)
    return vals[best], _normalize(d, sh(u, best)), best


def _seed_field(d: Domain, u_min: np.ndarray, V: np.ndarray, mu: float, R: float | None) -> np.ndarray:
    """Minimizer plus a cutoff bubble, tilde-normalized, at the maximizing amplitude."""
    from .bubbles import BubbleParams, aubin_talenti_field, tilde_normalize

    R = d.R_max / 4 if R is None else R
    U = aubin_talenti_field(BubbleParams(R / 80, R), d)
    best, best_E = None, -math.inf
    for t in np.geomspace(0.05, 50, 121):
        w = tilde_normalize(d, u_min + t * U)
        e = energy(d, w, V, mu)
        if e > best_E:
            best, best_E = w, e
    return best


def _respline(d: Domain, path: list[np.ndarray], keep: int) -> list[np.ndarray]:
    """Equal L2 arc length on each side of node ``keep``; endpoints and ``keep`` stay put."""
    out = list(path)
    for lo, hi in ((0, keep), (keep, len(path) - 1)):
        if hi - lo < 2:
            continue
        seg = path[lo : hi + 1]
        gaps = [math.sqrt(_wdot(d, b - a, b - a)) for a, b in zip(seg[:-1], seg[1:])]
        arc = np.concatenate([[0.0], np.cumsum(gaps)])
        if arc[-1] == 0:
            continue
        for j in range(1, hi - lo):
            target = arc[-1] * j / (hi - lo)
            i = min(int(np.searchsorted(arc, target, side="right")) - 1, len(gaps) - 1)
            theta = (target - arc[i]) / gaps[i] if gaps[i] > 0 else 0.0
            out[lo + j] = _normalize(d, np.abs((1 - theta) * seg[i] + theta * seg[i + 1]))
    return out


def _saddle_checks(d: Domain, u: np.ndarray, lam: float, res: float, V: np.ndarray, mu: float, cfg: SolverConfig,
                   minimizer: SolutionBundle) -> bool:
    if res > cfg.residual_tol or lp_norm(d, np.minimum(u, 0.0), 2) > 1e-8:
        return False
    if math.sqrt(_wdot(d, u - minimizer.u, u - minimizer.u)) <= 1e-3:
        return False
    K = grad_norm_sq(d, u)
    return abs(augmented_energy_ds(d, u, V, mu)) < cfg.pohozaev_tol * max(1.0, K)


def find_mountain_pass(d: Domain, V: np.ndarray, cfg: SolverConfig, minimizer: SolutionBundle | None = None,
                       w: np.ndarray | None = None, E_star: float | None = None) -> SolutionBundle:
    """Mountain-pass critical point by deformation of a discretized dilation path.

    The path starts as ``cfg.path_nodes`` dilations of ``w`` between the
    endpoints of :func:`mountain_pass_endpoints`.  Each sweep moves every
    interior node one preconditioned descent step.  The highest node instead
    descends on its fiber maximum ``F(u) = max_s E(s * u)``, so it stays
    Pohozaev-stationary and the path maximum never increases.  The path is
    re-splined to equal arc length on both sides of the highest node whenever
    that does not raise the maximum.  Newton on the bordered system is tried
    from the highest node after each sweep and the first candidate passing
    the saddle checks is returned.
    """
    mu = cfg.mu
    N = d.N
    minimizer = minimizer or find_local_minimizer(d, V, cfg)
    m_mu = minimizer.energy
    threshold = level_threshold(N, mu, m_mu)
    if E_star is None:
        E_star = estar_bound(N, mu, 0.0, float(np.max(np.maximum(-V, 0.0))), cfg.eps)
    if w is None:
        w = _seed_field(d, minimizer.u, V, mu, cfg.seed_R)
    (h0, _), (h1, _) = mountain_pass_endpoints(d, w, V, mu, E_star)
    base, sh = _shifter(d)
    ks = np.rint(np.linspace(math.log(h0), math.log(h1), cfg.path_nodes) / math.log(base)).astype(int)
    path = [_normalize(d, sh(w, int(k))) for k in ks]
    energies = np.array([energy(d, u, V, mu) for u in path])
    lin = _Linear(d)
    ones = np.ones(d.size)
    alpha = np.full(len(path), cfg.step)
    log: list = []

    def direction(u, g):
        z = lin.solve(ones, d.weights * g)
        z -= _wdot(d, z, u) * u
        return z, -_wdot(d, g, z)

    def descend(u, E, a):
        z, slope = direction(u, tangential_gradient(d, u, V, mu))
        while a > 1e-10:
            un = _normalize(d, np.abs(u - a * z))
            En = energy(d, un, V, mu)
            if En <= E + cfg.armijo * a * slope:
                return un, En, min(8 * cfg.step, a / cfg.backtrack)
            a *= cfg.backtrack
        return u, E, a

    def climb(u, F, a, g):
        z, slope = direction(u, g)
        while a > 1e-10:
            Fn, un, _ = _fiber_argmax(d, _normalize(d, np.abs(u - a * z)), V, mu)
            if Fn <= F + cfg.armijo * a * slope:
                return un, Fn, min(8 * cfg.step, a / cfg.backtrack)
            a *= cfg.backtrack
        return u, F, a

    top = int(np.argmax(energies[1:-1])) + 1
    energies[top], path[top], _ = _fiber_argmax(d, path[top], V, mu)
    found = None
    crit = math.inf
    sweep = 0
    for sweep in range(cfg.max_sweeps):
        top = int(np.argmax(energies[1:-1])) + 1
        u = path[top]
        # a node that overtook the previous top is relaxed in s first
        F, u_top, k = _fiber_argmax(d, u, V, mu)
        if k != 0:
            path[top], energies[top], u = u_top, F, u_top
        max_E = float(energies[1:-1].max())
        g = tangential_gradient(d, u, V, mu)
        gn = math.sqrt(_wdot(d, g, g))
        ds = augmented_energy_ds(d, u, V, mu)
        crit = gn / max(1.0, math.sqrt(grad_norm_sq(d, u))) + abs(ds)
        log.append({"phase": "path", "sweep": sweep, "max_energy": max_E, "node": top, "grad_norm": gn, "ds": ds})
        un, lam, res = newton_polish(d, u, _multiplier(d, u, V, mu), V, mu, max_iter=cfg.newton_iter, lin=lin)
        if _saddle_checks(d, un, lam, res, V, mu, cfg, minimizer):
            found = un
            break
        if crit < cfg.saddle_tol:
            break
        new, new_E = list(path), energies.copy()
        for j in range(1, len(path) - 1):
            if j == top:
                new[j], new_E[j], alpha[j] = climb(path[j], energies[j], alpha[j], g)
            else:
                new[j], new_E[j], alpha[j] = descend(path[j], energies[j], alpha[j])
        moved = sum(not np.array_equal(a, b) for a, b in zip(new, path))
        if moved == 0:
            break
        spl = _respline(d, new, top)
        spl_E = np.array([energy(d, v, V, mu) for v in spl])
        if spl_E[1:-1].max() <= new_E[1:-1].max():
            new, new_E = spl, spl_E
        path, energies = new, new_E

    u = found if found is not None else path[int(np.argmax(energies[1:-1])) + 1]
    u, lam, res = newton_polish(d, u, _multiplier(d, u, V, mu), V, mu, max_iter=cfg.newton_iter, lin=lin, log=log)
    b = _bundle(d, u, V, mu, "mountain-pass", log, {})
    cert = saddle_certificate(d, b.u, V, cfg, minimizer.u, E_star)
    cert.update(path_max=float(energies[1:-1].max()), sweeps=sweep + 1, path_criterion=crit)
    b.extra.update(cert)
    dist = cert["distance_to_minimizer"]
    evidence = {k: v for k, v in cert.items() if not isinstance(v, bool)}
    if b.residual > cfg.residual_tol:
        raise NonConvergence("mountain-pass Newton polish did not reach the residual tolerance",
                             {**evidence, "residual": b.residual})
    if dist <= 1e-3 or b.energy <= m_mu + 1e-8 * max(1.0, abs(m_mu)):
        raise PathCollapse("path collapsed onto the local minimizer", evidence)
    return b


# ----------------------------------------------------------------------------
# certificates recomputed from a stored field


def minimizer_certificate(d: Domain, u: np.ndarray, V: np.ndarray, cfg: SolverConfig) -> dict:
    """Checks a local minimizer has to pass, computed from ``u`` alone."""
    mu = cfg.mu
    u = d.check(u)
    lam = _multiplier(d, u, V, mu)
    rep = energy_report(d, u, V, mu)
    Rbar = ball_radius(d.N, mu)
    g = tangential_gradient(d, u, V, mu)
    gn = math.sqrt(_wdot(d, g, g))
    floor = roundoff_floor(d, u)
    res = pde_residual(d, u, lam, V, mu)
    cert = {
        "energy": rep.energy,
        "multiplier": lam,
        "kinetic": rep.kinetic,
        "mass": rep.mass,
        "Rbar": Rbar,
        "residual": res,
        "grad_norm": gn,
        "roundoff_floor": floor,
        "negative_part": lp_norm(d, np.minimum(u, 0.0), 2),
        "kinetic_ok": bool(rep.kinetic < Rbar**2),
        "energy_negative": bool(rep.energy < 0),
        "residual_ok": bool(res <= cfg.residual_tol),
        "grad_ok": bool(gn <= max(cfg.grad_tol * max(1.0, math.sqrt(rep.kinetic)), floor)),
    }
    cert["ok"] = all(cert[k] for k in ("kinetic_ok", "energy_negative", "residual_ok", "grad_ok"))
    return cert


def saddle_certificate(d: Domain, u: np.ndarray, V: np.ndarray, cfg: SolverConfig, u_min: np.ndarray,
                       E_star: float) -> dict:
    """Level window, sign, Pohozaev and distinctness checks for a mountain-pass field."""
    mu = cfg.mu
    u = d.check(u)
    m_mu = energy(d, u_min, V, mu)
    threshold = level_threshold(d.N, mu, m_mu)
    lam = _multiplier(d, u, V, mu)
    rep = energy_report(d, u, V, mu)
    res = pde_residual(d, u, lam, V, mu)
    dist = math.sqrt(_wdot(d, u - u_min, u - u_min))
    ds = augmented_energy_ds(d, u, V, mu)
    g = tangential_gradient(d, u, V, mu)
    cert = {
        "energy": rep.energy,
        "multiplier": lam,
        "kinetic": rep.kinetic,
        "residual": res,
        "E_star": E_star,
        "threshold": threshold,
        "m_mu": m_mu,
        "distance_to_minimizer": dist,
        "pohozaev_ds": ds,
        "pohozaev": rep.pohozaev,
        "grad_norm": math.sqrt(_wdot(d, g, g)),
        "negative_part": lp_norm(d, np.minimum(u, 0.0), 2),
        "residual_ok": bool(res <= cfg.residual_tol),
        "window_ok": bool(E_star <= rep.energy < threshold),
        "multiplier_negative": bool(lam < 0),
        "pohozaev_ok": bool(abs(ds) < cfg.pohozaev_tol * max(1.0, rep.kinetic)),
        "distinct": bool(dist > 1e-3),
    }
    cert["ok"] = all(cert[k] for k in ("window_ok", "multiplier_negative", "pohozaev_ok", "distinct"))
    return cert
