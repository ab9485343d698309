"""Potentials V, their weighted companion W = V|x|, norms and the shell decomposition.

The builtin families are radial profiles ``V(|x|)``; the box domain samples
them at |x| as well.  Splitting ``V = V1 + V2`` with ``V1`` small in
``L^{N/2}`` and ``V2`` bounded and vanishing at infinity follows a
shell-by-shell thresholding construction; the tail beyond the truncation
radius is accounted for with a power-law envelope ``C |x|^{-beta}``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .domain import Domain, DomainError, lp_norm, sphere_area

__all__ = [
    "PotentialSpec",
    "PotentialError",
    "TailEnvelope",
    "Decomposition",
    "DecompositionCertificate",
    "well",
    "lorentzian",
    "coulomb_cut",
    "zero",
    "from_table",
    "make_potential",
    "sample_potential",
    "decompose_shells",
    "decompose_potential",
    "inequality_audit",
    "scaling_continuity",
    "local_integrability_gate",
]


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class TailEnvelope:
    """Analytic bound ``|V(x)| <= C |x|^{-beta}`` for |x| beyond the grid."""

    C: float
    beta: float

    def mass_beyond(self, N: int, R: float, r: float) -> float:
        """Bound on ``int_{|x|>R} |V|^r`` (infinite when the power is not integrable)."""
        if self.C == 0:
            return 0.0
        expo = self.beta * r - N
        if expo <= 0:
            return np.inf
        return sphere_area(N) * self.C**r * R ** (-expo) / expo

    def sup_beyond(self, R: float) -> float:
        return self.C * R ** (-self.beta)


@dataclass(frozen=True)
class PotentialSpec:
    """A radial potential profile with the metadata the certificates need.

    ``support`` is the radius outside which V vanishes (None if not compactly
    supported); ``local_exponent`` is the declared L^r_loc exponent near the
    origin (``inf`` for locally bounded potentials).
    """

    name: str
    profile: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    tail: TailEnvelope | None = None
    support: float | None = None
    local_exponent: float = np.inf

    def __call__(self, r):
        return self.profile(np.asarray(r, dtype=float))

    def describe(self) -> dict:
        out = {"family": self.name, **{k: float(v) for k, v in self.params.items()}}
        if self.tail is not None:
            out["tail_C"] = float(self.tail.C)
            out["tail_beta"] = float(self.tail.beta)
        return out


def well(depth: float, radius: float = 1.0) -> PotentialSpec:
    """Square well ``-depth * chi_{|x| <= radius}``."""

    def profile(r):
        return np.where(r <= radius, -float(depth), 0.0)

    return PotentialSpec(
        "well", profile, {"depth": depth, "radius": radius}, tail=TailEnvelope(0.0, 1.0), support=radius
    )


def lorentzian(amplitude: float, scale: float = 1.0) -> PotentialSpec:
    """``amplitude / (1 + |x|^2 / scale^2)``."""

    def profile(r):
        return amplitude / (1.0 + (r / scale) ** 2)

    return PotentialSpec(
        "lorentzian",
        profile,
        {"amplitude": amplitude, "scale": scale},
        tail=TailEnvelope(abs(amplitude) * scale**2, 2.0),
    )


def coulomb_cut(amplitude: float, core: float) -> PotentialSpec:
    """``amplitude / max(|x|, core)``; negative amplitude is attractive."""

    def profile(r):
        return amplitude / np.maximum(r, core)

    return PotentialSpec(
        "coulomb-cut", profile, {"amplitude": amplitude, "core": core}, tail=TailEnvelope(abs(amplitude), 1.0)
    )


def zero() -> PotentialSpec:
    return PotentialSpec("zero", lambda r: np.zeros_like(r), {}, tail=TailEnvelope(0.0, 1.0), support=0.0)


def from_table(path: str | Path, tail: TailEnvelope | None = None, local_exponent: float = np.inf) -> PotentialSpec:
    """Radial table read from CSV with columns ``r,V`` (header optional); linear in r, zero beyond."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                continue  # header
    if len(rows) < 2:
        raise PotentialError(f"{path}: need at least two (r, V) rows")
    table = np.array(sorted(rows))
    rt, vt = table[:, 0], table[:, 1]
    support = float(rt[-1]) if vt[-1] == 0 else None

    def profile(r):
        return np.interp(r, rt, vt, right=0.0)

    if tail is None:
        tail = TailEnvelope(0.0, 1.0)
    return PotentialSpec("table", profile, {"rows": len(rows)}, tail=tail, support=support, local_exponent=local_exponent)


def make_potential(block: dict, base: Path | None = None) -> PotentialSpec:
    """Build a potential from a config block (``family`` plus parameters)."""
    fam = block.get("family")
    tail = None
    if "tail" in block:
        tail = TailEnvelope(float(block["tail"]["C"]), float(block["tail"]["beta"]))
    if fam == "well":
        spec = well(float(block["depth"]), float(block.get("radius", 1.0)))
    elif fam == "lorentzian":
        spec = lorentzian(float(block["amplitude"]), float(block.get("scale", 1.0)))
    elif fam == "coulomb-cut":
        spec = coulomb_cut(float(block["amplitude"]), float(block["core"]))
    elif fam == "zero":
        spec = zero()
    elif fam == "table":
        path = Path(block["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        return from_table(path, tail, float(block.get("local_exponent", np.inf)))
    else:
        raise PotentialError(f"unknown potential family {fam!r}")
    if tail is not None:
        spec = PotentialSpec(spec.name, spec.profile, spec.params, tail, spec.support, spec.local_exponent)
    return spec


def sample_potential(spec: PotentialSpec, d: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Nodal values of V and of W = V |x|."""
    V = np.asarray(spec(d.radius), dtype=float)
    if V.shape != (d.size,):
        V = np.broadcast_to(V, (d.size,)).astype(float)
    if not np.all(np.isfinite(V)):
        raise PotentialError(f"potential {spec.name!r} is not finite on every node")
    return V, V * d.radius


# ----------------------------------------------------------------------------
# shell decomposition


@dataclass
class DecompositionCertificate:
    delta: float
    exponent: float
    target: float
    achieved: float
    bound_ok: bool
    cases: dict
    radii: dict
    thresholds: dict
    annulus_sup: list
    annulus_radii: list
    oversized_shells: int = 0

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "exponent": self.exponent,
            "target_exponent": self.target,
            "achieved": self.achieved,
            "bound": 3 * self.delta,
            "bound_ok": self.bound_ok,
            "cases": self.cases,
            "radii": self.radii,
            "thresholds": self.thresholds,
            "annulus_sup": self.annulus_sup,
            "annulus_radii": self.annulus_radii,
            "oversized_shells": self.oversized_shells,
        }


@dataclass
class Decomposition:
    """V = V1 + V2 with W_i = V_i |x|."""

    V1: np.ndarray
    V2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    certificate: DecompositionCertificate | None = None


def _threshold(values: np.ndarray, mass: np.ndarray, budget: float) -> float:
    """Smallest threshold eta with sum(mass[values >= eta]) <= budget.

    Ties are never split; if even the largest value group exceeds the
    budget, eta is placed just above max(values) so the set is empty.
    """
    top = float(values.max()) if values.size else 0.0
    empty = np.nextafter(top, np.inf) if top > 0 else np.inf
    pos = values > 0
    if not np.any(pos):
        return empty
    v, m = values[pos], mass[pos]
    order = np.argsort(-v, kind="stable")
    v, m = v[order], m[order]
    cum = np.cumsum(m)
    last = np.r_[v[1:] != v[:-1], True]  # end of each group of equal values
    ok = last & (cum <= budget)
    if not np.any(ok):
        return empty
    return float(v[np.nonzero(ok)[0][-1]])


def _decompose_part(d: Domain, f: np.ndarray, r: float, q: float, budget: float, tail: TailEnvelope | None,
                    compact: bool):
    """Split a nonnegative field f into (f1, f2) following the shell construction."""
    w = d.weights
    rad = d.radius
    f1 = np.zeros_like(f)
    info = {"case": None, "radii": [], "thresholds": [], "shell_of_node": np.zeros(f.size, dtype=int), "oversized": 0}
    if not np.any(f > 0):
        info["case"] = "empty"
        return f1, f.copy(), info
    if compact:
        eta = _threshold(f, w * f**q, budget)
        sel = f >= eta
        f1[sel] = f[sel]
        info["case"] = 1
        info["thresholds"] = [eta]
        return f1, f - f1, info

    if tail is None:
        raise PotentialError("non-compactly supported potential needs a tail envelope")
    R_edge = d.R_max
    tail_mass = tail.mass_beyond(d.N, R_edge, r)
    if not np.isfinite(tail_mass):
        raise PotentialError(f"tail envelope is not in L^{r}: need beta*r > N")
    order = np.argsort(rad, kind="stable")
    mr = (w * f**r)[order]
    # mass outside the ball that ends at node k: grid cells after k plus the analytic tail
    outside = np.r_[np.cumsum(mr[::-1])[::-1][1:], 0.0] + tail_mass
    ok = np.nonzero(outside <= budget)[0]
    if ok.size == 0:
        raise PotentialError("delta too small for the sampled region: enlarge R_max")
    k0 = int(ok[0])
    shell = np.zeros(f.size, dtype=int)
    radii = [float(rad[order[k0]])]
    start = k0 + 1
    k = 1
    while start < f.size:
        target = budget / 2**k
        cum = np.cumsum(mr[start:])
        stop = int(np.searchsorted(cum, target, side="right"))
        if stop == 0:
            stop = 1
            info["oversized"] += 1
        shell[order[start : start + stop]] = k
        start += stop
        radii.append(float(rad[order[start - 1]]))
        k += 1
    nshell = k
    etas = []
    in0 = shell == 0
    eta0 = _threshold(np.where(in0, f, 0.0), w * f**q, budget)
    etas.append(eta0)
    for kk in range(1, nshell):
        etas.append(kk ** (-1.0 / (r - q)) if r > q else 2.0**-kk)
    eta_node = np.asarray(etas)[shell]
    sel = f >= eta_node
    f1[sel] = f[sel]
    info.update(case=2, radii=radii, thresholds=etas, shell_of_node=shell)
    return f1, f - f1, info


def decompose_shells(d: Domain, f: np.ndarray, r: float, delta: float, *, target: float | None = None,
                     tail: TailEnvelope | None = None, compact: bool = False):
    """Split a sampled potential into ``f1 + f2`` with ``||f1||_target^target <= 3 delta``.

    Parameters
    ----------
    f : ndarray
        Sampled potential (V, or W with ``target = N``).
    r : float
        Integrability exponent of f (``r >= target``).
    delta : float
        Budget; the positive and negative parts each get ``delta / 2``.
    target : float, optional
        Exponent of the small piece, ``N/2`` by default.
    tail : TailEnvelope
        Required unless ``compact``.
    compact : bool
        f vanishes outside a ball inside the grid (single-threshold case).

    Returns
    -------
    f1, f2, DecompositionCertificate
    """
    f = d.check(f)
    q = d.N / 2 if target is None else target
    if r < q:
        raise PotentialError(f"need r >= {q}, got {r}")
    if not delta > 0:
        raise PotentialError("delta must be positive")
    if not compact and tail is None:
        raise PotentialError("non-compactly supported potential needs a tail envelope")
    budget = delta / 2
    pieces = {}
    f1 = np.zeros_like(f)
    for sign, part in (("plus", np.maximum(f, 0.0)), ("minus", np.maximum(-f, 0.0))):
        p1, _, info = _decompose_part(d, part, r, q, budget, tail, compact)
        f1 += p1 if sign == "plus" else -p1
        pieces[sign] = info
    f2 = f - f1
    achieved = float(np.dot(d.weights, np.abs(f1) ** q))

    # annulus sups of f2 over the shells of the (larger) tail-carrying part
    ref = max(pieces.values(), key=lambda inf: len(inf["radii"]))
    if ref["case"] == 2:
        shell = ref["shell_of_node"]
        sups = [float(np.max(np.abs(f2[shell == k]), initial=0.0)) for k in range(shell.max() + 1)]
        annuli = ref["radii"]
    else:
        sups = [float(np.max(np.abs(f2), initial=0.0))]
        annuli = [float(d.R_max)]
    cert = DecompositionCertificate(
        delta=float(delta),
        exponent=float(r),
        target=float(q),
        achieved=achieved,
        bound_ok=achieved <= 3 * delta,
        cases={k: v["case"] for k, v in pieces.items()},
        radii={k: v["radii"] for k, v in pieces.items()},
        thresholds={k: [float(t) for t in v["thresholds"]] for k, v in pieces.items()},
        annulus_sup=sups,
        annulus_radii=annuli,
        oversized_shells=sum(v["oversized"] for v in pieces.values()),
    )
    return f1, f2, cert


def decompose_potential(spec: PotentialSpec, d: Domain, delta: float | None = None, r: float | None = None) -> Decomposition:
    """Decomposition used by the certificates.

    Potentials bounded near the origin that vanish outside a ball inside the
    grid, or any potential when ``delta`` is None, get the trivial split
    ``V1 = 0``.  Otherwise the shell construction runs with exponent ``r``.
    """
    V, W = sample_potential(spec, d)
    if delta is None:
        zero_ = np.zeros_like(V)
        return Decomposition(zero_, V.copy(), zero_.copy(), W.copy())
    compact = spec.support is not None and spec.support < d.R_max
    if r is None:
        r = d.N / 2 if compact else _default_exponent(spec, d.N)
    V1, V2, cert = decompose_shells(d, V, r, delta, tail=spec.tail, compact=compact)
    return Decomposition(V1, V2, V1 * d.radius, V2 * d.radius, cert)


def _default_exponent(spec: PotentialSpec, N: int) -> float:
    beta = spec.tail.beta if spec.tail is not None else 2.0
    # smallest comfortable exponent with an integrable tail
    return max(N / 2, N / beta + 1.0)


# ----------------------------------------------------------------------------
# audits


def inequality_audit(d: Domain, u: np.ndarray, dec: Decomposition, S: float, slack: float = 1e-8) -> dict:
    """Both sides of the four Holder/Sobolev bounds on the V1, V2, W1, W2 pieces.

    The right-hand sides use the exact Sobolev constant S and the discrete
    norms; ``slack`` is a relative tolerance for the violation flag.
    """
    from .domain import grad_norm_sq, x_dot_grad

    if dec is None:
        raise PotentialError("inequality audit needs a decomposition")
    u = d.check(u)
    w = d.weights
    N = d.N
    grad = np.sqrt(max(grad_norm_sq(d, u), 0.0))
    l2 = np.sqrt(np.dot(w, u * u))
    xg = x_dot_grad(d, u)
    lhs = [
        abs(np.dot(w, dec.V1 * u * u)),
        abs(np.dot(w, dec.V1 * u * xg)),
        abs(np.dot(w, dec.V2 * u * u)),
        abs(np.dot(w, dec.V2 * u * xg)),
    ]
    rhs = [
        lp_norm(d, dec.V1, N / 2) * grad**2 / S,
        lp_norm(d, dec.W1, N) * grad**2 / np.sqrt(S),
        lp_norm(d, dec.V2, np.inf) * l2**2,
        lp_norm(d, dec.W2, np.inf) * l2 * grad,
    ]
    ok = [lh <= rh * (1 + slack) + slack * 1e-300 for lh, rh in zip(lhs, rhs)]
    return {
        "lhs": [float(x) for x in lhs],
        "rhs": [float(x) for x in rhs],
        "ok": ok,
        "all_ok": all(ok),
    }


def scaling_continuity(d: Domain, spec: PotentialSpec, alpha: float, p: float, s_list) -> np.ndarray:
    """``|| s^alpha V(x/s) - V(x) ||_p`` for each s, V evaluated exactly at x/s."""
    if p == np.inf or not np.isfinite(p):
        raise PotentialError("scaling continuity holds only for finite p")
    if p < 1:
        raise PotentialError("need p >= 1")
    V = np.asarray(spec(d.radius), dtype=float)
    out = []
    for s in s_list:
        s = float(s)
        if not s > 0:
            raise PotentialError("scales must be positive")
        if s == 1.0:
            out.append(0.0)
            continue
        diff = s**alpha * spec(d.radius / s) - V
        out.append(lp_norm(d, diff, p))
    return np.asarray(out)


LOCAL_EXPONENT_BAR = {3: 2.0, 4: 4.0, 5: 10.0}


def local_integrability_gate(spec: PotentialSpec, N: int) -> bool:
    """True when the declared local exponent clears the dimension-dependent bar (bounded always does)."""
    r = spec.local_exponent
    if r == np.inf:
        return True
    bar = LOCAL_EXPONENT_BAR.get(N)
    if bar is None:
        return False
    return r > bar
