"""Command-line front end.

    critnls <subcommand> --config run.yaml [--out DIR] [--seed INT] [--threads INT]
    critnls verify --out DIR

Every solving subcommand writes ``<sub>_fields.csv`` and ``<sub>.log``, then
builds ``<sub>.json`` from the resolved config and the fields as read back
from the CSV.  ``verify`` repeats that last step for every report in a
directory and compares bytes, so a report is reproducible from its own
artifacts.  Timings and iteration counts go to the log, never the report.

Exit codes: 0 all certificates pass, 2 config error, 3 solver failure,
4 certificate failure (artifacts are still written).
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bubbles import BubbleError, bubble_norm_report, default_eps_list, mp_upper_bound_sweep
from .config import ConfigError, RunConfig, config_from_dict, ensure_writable, load_config
from .domain import Domain, DomainError, build_domain, lp_norm
from .functional import FunctionalError, energy, energy_report, level_certificate, sobolev_constant
from .mfg import MfgError, MfgGateError, hopf_cole_forward, mfg_certificate, mfg_from_fields, mfg_gate
from .potentials import PotentialError, decompose_potential, inequality_audit, make_potential, sample_potential
from .serialize import SCHEMA_VERSION, config_hash, dumps, read_field_csv, read_json, write_field_csv, write_rows_csv
from .solvers import (
    SolutionBundle,
    SolverError,
    find_local_minimizer,
    find_mountain_pass,
    ground_state_gate,
    minimizer_certificate,
    pde_residual,
    saddle_certificate,
)
from .spectrum import SpectrumError, eigen_certificate, principal_eigenpair

__all__ = ["main", "run", "build_report", "EXIT_OK", "EXIT_CONFIG", "EXIT_SOLVER", "EXIT_CERTIFICATE"]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CERTIFICATE = 0, 2, 3, 4
SOLVE_COMMANDS = ("eig", "decompose", "minimize", "saddle", "bubbles", "mfg")
_COORDS = {"r", "x", "y", "z"}

log = logging.getLogger("critnls")


class _Setup:
    """Grid, potential and decomposition for one config; deterministic in the config."""

    def __init__(self, cfg: RunConfig):
        dom = cfg.domain
        try:
            self.d = build_domain(dom["N"], dom["kind"], dom["R_max"], dom["n"], dom.get("r_min"))
            self.spec = make_potential(cfg.potential, cfg.base)
            self.V, _ = sample_potential(self.spec, self.d)
        except (DomainError, PotentialError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot build grid or potential: {exc}") from None
        self.cfg = cfg
        self._dec = None

    @property
    def dec(self):
        if self._dec is None:
            pot = self.cfg.potential
            try:
                self._dec = decompose_potential(self.spec, self.d, pot.get("delta"), pot.get("r"))
            except PotentialError as exc:
                raise ConfigError(f"decomposition: {exc}") from None
        return self._dec

    def minus_norms(self) -> tuple[float, float]:
        """(|V1^-|_{N/2}, sup V2^-) for the smallness gates."""
        d, dec = self.d, self.dec
        return (lp_norm(d, np.maximum(-dec.V1, 0.0), d.N / 2), float(np.max(np.maximum(-dec.V2, 0.0))))

    def level(self, mu: float):
        v1, v2 = self.minus_norms()
        return level_certificate(self.d.N, mu, v1, v2, eps=float(self.cfg.problem.get("eps", 0.1)))


# ----------------------------------------------------------------------------
# report builders: config + fields -> dict, nothing else


def _bundle_from(s: _Setup, u: np.ndarray, mu: float, kind: str) -> SolutionBundle:
    d, V = s.d, s.V
    rep = energy_report(d, u, V, mu)
    lam = rep.multiplier if rep.multiplier is not None else math.nan
    return SolutionBundle(u, lam, kind, rep, pde_residual(d, u, lam, V, mu), lp_norm(d, np.minimum(u, 0.0), 2))


def _report_eig(s: _Setup, f: dict) -> tuple[dict, dict]:
    cert = eigen_certificate(s.d, f["psi"], s.V)
    return {"eigenpair": cert}, {"eigenpair": cert["ok"]}


def _report_decompose(s: _Setup, f: dict) -> tuple[dict, dict]:
    d, N = s.d, s.d.N
    V, V1, V2, W1, W2 = (f[k] for k in ("V", "V1", "V2", "W1", "W2"))
    scale = max(1.0, float(np.abs(V).max()))
    recon = float(np.abs(V1 + V2 - V).max())
    out = {
        "norms": {
            "V1_L_N/2": lp_norm(d, V1, N / 2),
            "W1_L_N": lp_norm(d, W1, N),
            "V2_sup": lp_norm(d, V2, np.inf),
            "W2_sup": lp_norm(d, W2, np.inf),
        },
        "reconstruction_error": recon,
        "shells": s.dec.certificate.to_dict() if s.dec.certificate is not None else None,
    }
    checks = {"reconstruction": recon <= 1e-12 * scale}
    if s.dec.certificate is not None:
        checks["shell_bound"] = bool(s.dec.certificate.bound_ok)
    return out, checks


def _report_minimize(s: _Setup, f: dict) -> tuple[dict, dict]:
    cfg = s.cfg.solver_config()
    u = f["u"]
    cert = minimizer_certificate(s.d, u, s.V, cfg)
    eig = eigen_certificate(s.d, f["psi"], s.V)
    out = {"minimizer": cert, "eigenpair": eig}
    checks = {"minimizer": cert["ok"], "attractive": eig["attractive"]}
    if cert["energy_negative"]:
        ok, margins = ground_state_gate(s.d, _bundle_from(s, u, cfg.mu, "local-min"), s.dec, cfg.mu)
        out["ground_state_gate"] = {**margins, "ok": bool(ok)}
        checks["ground_state_gate"] = bool(ok)
    audit = inequality_audit(s.d, u, s.dec, sobolev_constant(s.d.N))
    out["inequality_audit"] = audit
    checks["inequality_audit"] = audit["all_ok"]
    return out, checks


def _gate_block(s: _Setup, mu: float) -> tuple[dict, bool]:
    lc = s.level(mu).to_dict()
    return lc, bool(lc["C0_margin"] > 0 and lc["E_star"] > 0)


def _sweep_settings(cfg: RunConfig) -> tuple[float, list, np.ndarray]:
    b = cfg.bubbles
    R = float(b.get("sweep_R", 12.0))
    eps_list = [float(e) for e in b.get("sweep_eps_list", default_eps_list(R))]
    t = np.geomspace(float(b.get("t_min", 0.05)), float(b.get("t_max", 50.0)), int(b.get("t_count", 121)))
    return R, eps_list, t


def _report_saddle(s: _Setup, f: dict, sweep_csv=None) -> tuple[dict, dict]:
    mu = s.cfg.mu
    gate, gate_ok = _gate_block(s, mu)
    out = {"smallness_gate": gate}
    checks = {"smallness_gate": gate_ok}
    if not gate_ok:
        return out, checks
    cfg = s.cfg.solver_config()
    u_min, u = f["u_min"], f["u_saddle"]
    cert = saddle_certificate(s.d, u, s.V, cfg, u_min, gate["E_star"])
    R, eps_list, t = _sweep_settings(s.cfg)
    sweep = mp_upper_bound_sweep(s.d, u_min, cert["m_mu"], s.V, mu, eps_list, t, R, sweep_csv)
    sweep["R"] = R
    out.update(saddle=cert, upper_bound_sweep=sweep)
    checks.update(
        saddle=cert["ok"] and cert["residual_ok"],
        sweep_smallest_eps=sweep["smallest_eps_pass"],
        sweep_two_smallest_eps=sweep["two_smallest_pass"],
    )
    return out, checks


def _report_bubbles(s: _Setup, f: dict) -> tuple[dict, dict]:
    b = s.cfg.bubbles
    R = float(b.get("R", 1.0))
    eps_list = [float(e) for e in b.get("eps_list", default_eps_list(R))]
    p_list = [float(p) for p in b.get("p_list", [])]
    N_list = [int(n) for n in b.get("N_list", [s.d.N])]
    reports, checks = {}, {}
    for N in N_list:
        u_mu = f.get("u_mu") if N == s.d.N else None
        rep = bubble_norm_report(N, eps_list, R, p_list, u_mu=u_mu, d=s.d if u_mu is not None else None)
        reports[f"N{N}"] = rep.to_dict()
        checks.update({f"N{N}_{k}": bool(v) for k, v in rep.checks.items()})
    return {"bubbles": reports}, checks


def _mfg_alpha(cfg: RunConfig) -> float:
    return float(cfg.mfg.get("alpha", 2.0 * cfg.mu))


def _report_mfg(s: _Setup, f: dict) -> tuple[dict, dict]:
    alpha = _mfg_alpha(s.cfg)
    v1, v2 = s.minus_norms()
    ok, margins = mfg_gate(s.d, s.V, alpha, v1, v2, float(s.cfg.problem.get("eps", 0.1)))
    out = {"gate": margins}
    checks = {"gate": ok}
    if not ok:
        return out, checks
    tol = s.cfg.solver_config(alpha / 2).residual_tol
    sols = [mfg_from_fields(s.d, f[f"m{k}"], f[f"u{k}"], alpha, s.V) for k in (1, 2)]
    certs = [mfg_certificate(sol, hjb_tol=tol) for sol in sols]
    dist = math.sqrt(float(np.dot(s.d.weights, (sols[0].m - sols[1].m) ** 2)))
    out.update(minimizer=certs[0], mountain_pass=certs[1], m_distance=dist)
    checks.update(minimizer=certs[0]["ok"], mountain_pass=certs[1]["ok"],
                  distinct=bool(dist > 10 * max(tol, certs[0]["hjb_residual"], certs[1]["hjb_residual"])))
    return out, checks


_BUILDERS = {
    "eig": _report_eig,
    "decompose": _report_decompose,
    "minimize": _report_minimize,
    "saddle": _report_saddle,
    "bubbles": _report_bubbles,
    "mfg": _report_mfg,
}


def build_report(sub: str, cfg: RunConfig, fields: dict, setup: _Setup | None = None, **kw) -> dict:
    """Report dict for ``sub``; a pure function of the config and the stored fields."""
    s = setup or _Setup(cfg)
    results, checks = _BUILDERS[sub](s, fields, **kw)
    resolved = cfg.resolved()
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": sub,
        "config": resolved,
        "config_hash": config_hash(resolved),
        "grid": s.d.metadata(),
        "field_file": f"{sub}_fields.csv" if fields else None,
        "results": results,
        "certificates": checks,
        "pass": all(checks.values()),
    }


# ----------------------------------------------------------------------------
# solvers: config -> fields


def _minimizer(s: _Setup, mu: float | None = None):
    cfg = s.cfg.solver_config(mu)
    eig = principal_eigenpair(s.d, s.V)
    log.info("lambda_1 = %.17g (residual %.3e)", eig.eigenvalue, eig.residual)
    t0 = time.perf_counter()
    b = find_local_minimizer(s.d, s.V, cfg, eig)
    log.info("minimizer: E = %.17g, residual %.3e, %.2fs", b.energy, b.residual, time.perf_counter() - t0)
    return b, eig


def _solve_eig(s: _Setup) -> dict:
    eig = principal_eigenpair(s.d, s.V)
    log.info("lambda_1 = %.17g", eig.eigenvalue)
    return {"psi": eig.psi}


def _solve_decompose(s: _Setup) -> dict:
    dec = s.dec
    return {"V": s.V, "V1": dec.V1, "V2": dec.V2, "W1": dec.W1, "W2": dec.W2}


def _solve_minimize(s: _Setup) -> dict:
    b, eig = _minimizer(s)
    return {"u": b.u, "psi": eig.psi}


def _solve_saddle(s: _Setup) -> dict:
    gate, ok = _gate_block(s, s.cfg.mu)
    if not ok:
        log.warning("smallness gate fails: C0 margin %.6g, E* %.6g", gate["C0_margin"], gate["E_star"])
        return {}
    low, _ = _minimizer(s)
    t0 = time.perf_counter()
    high = find_mountain_pass(s.d, s.V, s.cfg.solver_config(), minimizer=low, E_star=gate["E_star"])
    log.info("mountain pass: E = %.17g, %d sweeps, %.2fs", high.energy, high.extra["sweeps"], time.perf_counter() - t0)
    for row in high.log:
        log.debug("%s", row)
    return {"u_min": low.u, "u_saddle": high.u}


def _solve_bubbles(s: _Setup) -> dict:
    if not s.cfg.bubbles.get("interaction", False):
        return {}
    b, _ = _minimizer(s)
    return {"u_mu": b.u}


def _solve_mfg(s: _Setup) -> dict:
    alpha = _mfg_alpha(s.cfg)
    v1, v2 = s.minus_norms()
    ok, margins = mfg_gate(s.d, s.V, alpha, v1, v2, float(s.cfg.problem.get("eps", 0.1)))
    if not ok:
        log.warning("MFG gate fails at alpha = %g: %s", alpha, margins)
        return {}
    mu = alpha / 2
    low, _ = _minimizer(s, mu)
    high = find_mountain_pass(s.d, s.V, s.cfg.solver_config(mu), minimizer=low, E_star=margins["E_star"])
    fields = {}
    for k, b in ((1, low), (2, high)):
        sol = hopf_cole_forward(s.d, b, s.V, mu)
        fields[f"m{k}"], fields[f"u{k}"] = sol.m, sol.u
    return fields


_SOLVERS = {
    "eig": _solve_eig,
    "decompose": _solve_decompose,
    "minimize": _solve_minimize,
    "saddle": _solve_saddle,
    "bubbles": _solve_bubbles,
    "mfg": _solve_mfg,
}


def _read_fields(path: Path) -> dict:
    return {k: v for k, v in read_field_csv(path).items() if k not in _COORDS}


def _attach_log(path: Path) -> logging.Handler:
    h = logging.FileHandler(path, mode="w", encoding="utf-8")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(h)
    log.setLevel(logging.DEBUG)
    return h


def run(sub: str, cfg: RunConfig, threads: int | None = None) -> int:
    out = cfg.out_dir
    ensure_writable(out)
    handler = _attach_log(out / f"{sub}.log")
    try:
        log.info("critnls %s %s, threads=%s", __version__, sub, threads)
        setup = _Setup(cfg)
        t0 = time.perf_counter()
        try:
            fields = _SOLVERS[sub](setup)
        except (SolverError, SpectrumError, MfgError, BubbleError, FunctionalError) as exc:
            evidence = getattr(exc, "evidence", {})
            log.error("solver failure: %s %s", exc, evidence)
            print(f"critnls {sub}: solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        log.info("solve finished in %.2fs", time.perf_counter() - t0)
        if fields:
            path = out / f"{sub}_fields.csv"
            write_field_csv(path, setup.d, fields)
            fields = _read_fields(path)
        kw = {"sweep_csv": out / "saddle_sweep.csv"} if sub == "saddle" else {}
        report = build_report(sub, cfg, fields, setup, **kw)
        text = dumps(report)
        (out / f"{sub}.json").write_text(text, encoding="utf-8")
        _summary(report)
        return EXIT_OK if report["pass"] else EXIT_CERTIFICATE
    finally:
        log.removeHandler(handler)
        handler.close()


def verify(out: Path) -> int:
    """Rebuild every report in ``out`` from its embedded config and field CSV; compare bytes."""
    if not out.is_dir():
        raise ConfigError(f"{out} is not a directory")
    entries, rows = {}, []
    for path in sorted(out.glob("*.json")):
        if path.name == "verify.json":
            continue
        try:
            stored = read_json(path)
        except ValueError:
            continue
        sub = stored.get("subcommand") if isinstance(stored, dict) else None
        if sub not in _BUILDERS:
            continue
        cfg = config_from_dict(stored["config"], out)
        fields = _read_fields(out / stored["field_file"]) if stored.get("field_file") else {}
        rebuilt = dumps(build_report(sub, cfg, fields))
        same = rebuilt == path.read_text(encoding="utf-8")
        entries[path.name] = {"identical": same, "pass": bool(stored["pass"]), "certificates": stored["certificates"]}
        rows.append({"report": path.name, "identical": same, "pass": bool(stored["pass"])})
    if not entries:
        raise ConfigError(f"no reports found in {out}")
    ok = all(e["identical"] and e["pass"] for e in entries.values())
    (out / "verify.json").write_text(dumps({"schema_version": SCHEMA_VERSION, "reports": entries, "pass": ok}),
                                     encoding="utf-8")
    write_rows_csv(out / "verify.csv", rows)
    for r in rows:
        print(f"{r['report']}: {'identical' if r['identical'] else 'DIFFERS'}, {'pass' if r['pass'] else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CERTIFICATE


def _summary(report: dict) -> None:
    for name, ok in report["certificates"].items():
        print(f"{report['subcommand']}.{name}: {'pass' if ok else 'FAIL'}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critnls", description="Normalized critical NLS solver and certificates.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SOLVE_COMMANDS + ("verify",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "verify")
        sp.add_argument("--out", type=Path)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help="recorded in the log; BLAS threading is left to the environment")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            if args.out is None:
                if args.config is None:
                    raise ConfigError("verify needs --out (or --config naming the run)")
                args.out = load_config(args.config).out_dir
            return verify(args.out)
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.outputs["directory"] = str(args.out.resolve())
        if args.seed is not None:
            cfg.problem["seed"] = args.seed
        return run(args.command, cfg, args.threads)
    except ConfigError as exc:
        print(f"critnls: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
