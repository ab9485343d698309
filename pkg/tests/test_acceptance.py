"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Lines are collected and shown in the "acceptance criteria" section of the
pytest summary; run ``pytest tests/test_acceptance.py -v`` to see them.
"""
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, SOLVE_SECONDS
from oracles import well_ground_energy

from critnls.bubbles import bubble_norm_report, default_eps_list, mp_upper_bound_sweep
from critnls.cli import main
from critnls.domain import build_domain
from critnls.functional import (
    augmented_energy_ds,
    ball_radius,
    energy,
    energy_gradient,
    energy_report,
    level_threshold,
    sobolev_constant,
    sobolev_constant_closed_form,
)
from critnls.mfg import two_solution_pipeline
from critnls.potentials import coulomb_cut, decompose_potential, lorentzian, sample_potential, well
from critnls.spectrum import principal_eigenpair

MU_LIST = (0.01, 0.05, 0.1)


def _record(n: int, ok: bool, detail: str, elapsed: float) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _l2(d, f):
    return math.sqrt(float(np.dot(d.weights, f * f)))


def _smooth_field(d, rng, signed=False):
    r = d.radius
    u = np.zeros_like(r)
    for _ in range(3):
        a = rng.uniform(-1, 1) if signed else rng.uniform(0.2, 1.0)
        s = rng.uniform(0.5, 3.0)
        u += a * (1 + rng.uniform(0, 1) * r) * np.exp(-r * r / (2 * s * s))
    u[-1] = 0.0
    return u


def test_criterion_01_gradient_consistency(rng):
    t0 = time.perf_counter()
    d = build_domain(3, "radial-log-spaced", 20.0, 2048)
    V, _ = sample_potential(well(7.0), d)
    mu, h = 0.05, 1e-4
    worst = 0.0
    for _ in range(20):
        u = _smooth_field(d, rng)
        u /= _l2(d, u)
        v = _smooth_field(d, rng, signed=True)
        exact = float(np.dot(d.weights, energy_gradient(d, u, V, mu) * v))
        fd = (energy(d, u + h * v, V, mu) - energy(d, u - h * v, V, mu)) / (2 * h)
        worst = max(worst, abs(exact - fd) / max(abs(exact), 1e-12))
    ok = worst <= 1e-5
    _record(1, ok, f"worst relative mismatch {worst:.2e} (limit 1e-5)", time.perf_counter() - t0)
    assert ok


def test_criterion_02_pohozaev_dilation_order():
    t0 = time.perf_counter()
    mu = 0.05
    shapes = [(1.0, 1.0), (0.7, 1.3), (1.5, 0.8), (1.0, 2.0), (0.5, 1.0)]
    orders = []
    for a, s in shapes:
        errs = []
        for n in (512, 1024, 2048, 4096):
            d = build_domain(3, "radial-log-spaced", 20.0, n)
            r = d.radius
            V, _ = sample_potential(lorentzian(-3.0, 1.0), d)
            u = np.exp(-((r / s) ** 2) / 2) * (1 + a * r * r / (1 + r * r))
            u[-1] = 0.0
            u /= _l2(d, u)
            errs.append(abs(augmented_energy_ds(d, u, V, mu) - energy_report(d, u, V, mu).pohozaev))
        orders.append(min(math.log2(errs[i] / errs[i + 1]) for i in range(3)))
    ok = min(orders) >= 1.8
    _record(2, ok, f"smallest observed order {min(orders):.3f} (need >= 1.8)", time.perf_counter() - t0)
    assert ok


def test_criterion_03_sobolev_constant():
    t0 = time.perf_counter()
    rel = {N: abs(sobolev_constant(N) / sobolev_constant_closed_form(N) - 1) for N in (3, 4, 5)}
    s3 = sobolev_constant(3)
    ok = max(rel.values()) <= 1e-4 and round(s3, 3) == 5.478
    detail = ", ".join(f"N={N}: {v:.1e}" for N, v in rel.items())
    _record(3, ok, f"relative gaps {detail}; S(3) = {s3:.6f}", time.perf_counter() - t0)
    assert ok


def test_criterion_04_eigenvalue_oracle():
    t0 = time.perf_counter()
    d = build_domain(3, "radial-uniform", 12.0, 120007)
    errs = {}
    negative = True
    for eta in (7.0, 10.0, 20.0):
        V, _ = sample_potential(well(eta), d)
        lam = principal_eigenpair(d, V).eigenvalue
        errs[eta] = lam - well_ground_energy(eta, R=12.0)
        negative &= lam < 0
    ok = negative and max(abs(e) for e in errs.values()) <= 1e-6
    detail = ", ".join(f"eta={k:g}: {v:+.1e}" for k, v in errs.items())
    _record(4, ok, f"errors vs shooting {detail}; all negative: {negative}", time.perf_counter() - t0)
    assert ok


def test_criterion_05_local_minimizer(well_setup, minimizers):
    t0 = time.perf_counter()
    d, V = well_setup
    eig = principal_eigenpair(d, V)
    fails, dist = [], []
    for mu in MU_LIST:
        b = minimizers[mu]
        Rbar = ball_radius(3, mu)
        checks = {
            "E<0": b.energy < 0,
            "lam<lam1<0": b.lam < eig.eigenvalue < 0,
            "grad<Rbar": math.sqrt(b.report.kinetic) < Rbar,
            "residual": b.residual <= 1e-6,
            "u-": b.neg_part <= 1e-8,
        }
        fails += [f"mu={mu}:{k}" for k, v in checks.items() if not v]
        dist.append(_l2(d, b.u - eig.psi))
    monotone = all(a < b for a, b in zip(dist, dist[1:]))
    ok = not fails and monotone
    detail = f"distance to psi_1 {', '.join(f'{x:.1e}' for x in dist)}; failed checks: {fails or 'none'}"
    _record(5, ok, detail, time.perf_counter() - t0 + SOLVE_SECONDS.get("minimizers", 0.0))
    assert ok


def test_criterion_06_level_ordering(well_setup, minimizers, saddles):
    t0 = time.perf_counter()
    d, V = well_setup
    parts, ok = [], True
    for mu in MU_LIST:
        m, s = minimizers[mu], saddles[mu]
        estar, c = s.extra["E_star"], s.energy
        thr = level_threshold(3, mu, m.energy)
        dist = _l2(d, s.u - m.u)
        good = m.energy < 0 < estar <= c < thr and dist > 1e-3
        ok &= good
        parts.append(f"mu={mu}: {m.energy:.3f} < 0 < {estar:.3f} <= {c:.3f} < {thr:.3f}, dist {dist:.2f}")
    solve = SOLVE_SECONDS.get("minimizers", 0.0) + SOLVE_SECONDS.get("saddles", 0.0)
    _record(6, ok, "; ".join(parts), time.perf_counter() - t0 + solve)
    assert ok


def test_criterion_07_bubble_asymptotics(well_setup, minimizers):
    t0 = time.perf_counter()
    d, _ = well_setup
    eps = list(np.geomspace(0.1, 0.01, 5))
    failed, slopes = [], {}
    for N in (3, 4, 5):
        kw = {"u_mu": minimizers[0.05].u, "d": d} if N == 3 else {}
        rep = bubble_norm_report(N, eps, 1.0, **kw)
        failed += [f"N={N}:{k}" for k, v in rep.checks.items() if not v]
        slopes[N] = {k: round(v["slope"], 3) for k, v in rep.slopes.items()}
    expected = {3: {"mass", "interaction", "grad_deficit", "crit_deficit"},
                4: {"grad_deficit", "crit_deficit", "mass_log"}, 5: {"mass", "grad_deficit", "crit_deficit"}}
    missing = [f"N={N}:{k}" for N, keys in expected.items() for k in keys if k not in slopes[N]]
    ok = not failed and not missing
    _record(7, ok, f"slopes {slopes}; failed: {failed or 'none'}", time.perf_counter() - t0)
    assert ok


def _independent_v1_mass(spec, d, V1, q):
    """Quadrature of |V|^q over the cells where V1 is nonzero, from the analytic profile."""
    from scipy.integrate import quad

    r = d.radius
    edges = np.concatenate([[0.0], np.sqrt(r[1:] * r[:-1]), [d.R_max]])
    total = 0.0
    for i in np.flatnonzero(V1 != 0):
        f = lambda x: abs(float(spec(np.array([x]))[0])) ** q * 4 * math.pi * x * x  # noqa: E731
        total += quad(f, edges[i], edges[i + 1], limit=200)[0]
    return total


def test_criterion_08_decomposition_certificate():
    t0 = time.perf_counter()
    d = build_domain(3, "radial-log-spaced", 1e4, 4096)
    delta = 0.1
    ok, parts = True, []
    for spec in (lorentzian(-5.0, 1.0), coulomb_cut(-2.0, 0.01)):
        dec = decompose_potential(spec, d, delta)
        cert = dec.certificate
        mass = _independent_v1_mass(spec, d, dec.V1, 1.5)
        sups = cert.annulus_sup
        decreasing = all(b <= a for a, b in zip(sups, sups[1:]))
        small = sups[-1] < 1e-3 * sups[0]
        good = mass <= 3 * delta and cert.achieved <= 3 * delta and decreasing and small
        ok &= good
        parts.append(f"{spec.name}: |V1|^(3/2) = {mass:.4f} (grid {cert.achieved:.4f}) <= {3 * delta:g}, "
                     f"annulus sup {sups[0]:.3g} -> {sups[-1]:.2e}")
    _record(8, ok, "; ".join(parts), time.perf_counter() - t0)
    assert ok


def test_criterion_09_upper_bound_sweep(well_setup, minimizers):
    t0 = time.perf_counter()
    d, V = well_setup
    mu, R = 0.05, 12.0
    b = minimizers[mu]
    sweep = mp_upper_bound_sweep(d, b.u, b.energy, V, mu, default_eps_list(R), np.geomspace(0.05, 50, 121), R)
    rows = sorted(sweep["rows"], key=lambda r: r["eps"])[:2]
    margins = ", ".join(f"eps={r['eps']:g}: M={r['max_energy']:.4f} interior={r['interior']}" for r in rows)
    ok = sweep["two_smallest_pass"]
    _record(9, ok, f"threshold {sweep['threshold']:.4f}; {margins}", time.perf_counter() - t0)
    assert ok


def test_criterion_10_mfg_end_to_end(well_setup, minimizers, saddles):
    t0 = time.perf_counter()
    d, V = well_setup
    s1, s2 = two_solution_pipeline(d, V, 0.1)
    bundles = (minimizers[0.05], saddles[0.05])
    parts, ok = [], True
    for s, b in zip((s1, s2), bundles):
        good = (abs(s.mass - 1) <= 1e-10 and s.hjb_residual <= 1e-5 and s.kfp_residual <= 1e-8
                and s.lam_mfg == 2 * b.lam)
        ok &= good
        parts.append(f"{s.extra['kind']}: mass-1 {s.mass - 1:+.1e}, hjb {s.hjb_residual:.1e}, "
                     f"kfp {s.kfp_residual:.1e}, lam_mfg {s.lam_mfg:.6f}")
    ok &= s1.extra["distinct"]
    _record(10, ok, "; ".join(parts) + f"; m-distance {s1.extra['m_distance']:.3f}", time.perf_counter() - t0)
    assert ok


@pytest.fixture(scope="module")
def artifact_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("replay")
    cfg = out / "run.yaml"
    cfg.write_text(
        "domain: {N: 3, kind: radial-log-spaced, R_max: 40, n: 4096}\n"
        "potential: {family: well, depth: 7, radius: 1}\n"
        "problem: {mu: 0.05}\n"
        "bubbles: {interaction: true}\n"
        f"outputs: {{directory: {out / 'out'}}}\n"
    )
    codes = {sub: main([sub, "--config", str(cfg)]) for sub in ("eig", "decompose", "minimize", "bubbles", "mfg")}
    return out / "out", codes


def test_criterion_11_replay_determinism(artifact_dir):
    out, codes = artifact_dir
    before = {p.name: p.read_bytes() for p in out.glob("*.json")}
    t0 = time.perf_counter()
    code = main(["verify", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    from critnls.serialize import read_json

    entries = read_json(out / "verify.json")["reports"]
    same = all(e["identical"] for e in entries.values())
    untouched = all((out / name).read_bytes() == data for name, data in before.items())
    ok = code == 0 and same and untouched and len(entries) == 5 and elapsed < 30 and set(codes.values()) == {0}
    _record(11, ok, f"{len(entries)} reports replayed, identical: {same}, verify exit {code}", elapsed)
    assert ok
