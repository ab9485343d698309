"""Time the compiled radial kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--sizes 1024 4096 16384] [--repeat 7]

Prints one row per (kernel, size): best-of-repeat time per call for each
backend, the speedup, and the largest relative disagreement between them.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from critnls import _kernels_py
from critnls.domain import build_domain

try:
    from critnls import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _inputs(n: int):
    d = build_domain(3, "radial-log-spaced", 40.0, n)
    r = d.radius
    u = np.exp(-r) * (1 + 0.1 * np.sin(3 * r))
    u[-1] = 0.0
    V = np.where(r < 1.0, -7.0, 0.0)
    return u, d.face_coef, d.weights, V, 6.0, 0.05


def _calls(u, c, w, V, p, mu):
    return {
        "dirichlet_energy": lambda m: m.dirichlet_energy(u, c),
        "stiffness_apply": lambda m: m.stiffness_apply(u, c),
        "energy_terms": lambda m: m.energy_terms(u, c, w, V, p),
        "energy_gradient": lambda m: m.energy_gradient(u, c, w, V, mu, p),
    }


def _best(fn, mod, repeat: int) -> float:
    timer = timeit.Timer(lambda: fn(mod))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def _rel_diff(a, b) -> float:
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384, 65536])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return
    print(f"{'kernel':<18}{'n':>8}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}{'rel diff':>12}")
    for n in args.sizes:
        for name, fn in _calls(*_inputs(n)).items():
            tp = _best(fn, _kernels_py, args.repeat)
            tc = _best(fn, _compiled, args.repeat)
            diff = _rel_diff(fn(_kernels_py), fn(_compiled))
            print(f"{name:<18}{n:>8}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.2f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
