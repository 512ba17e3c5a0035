"""Command-line front end: ``csdnls {evolve,spectrum,verify}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 identity check failure (``verify`` only).
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import diagnose, lipschitz_probe, sharp_gap
from .hardy import l2_norm, random_state, toeplitz_conj_apply
from .io import (ConfigError, initial_state, load_config, resolved_lambda_shift,
                 sample_times, write_json, write_trajectory)
from .lax import (EquationSign, assemble_B, assemble_L, commutator_checks, lax_residual,
                  reformulation_residual, spectrum)
from .propagator import (FlowConfig, NumericalBlowup, evolve_direct, explicit_trajectory,
                         outside_theorem)

log = logging.getLogger("csdnls")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IDENTITY = 0, 1, 2, 3

# verify thresholds
COMMUTATOR_L_TOL = 1e-10
COMMUTATOR_B_TOL = 1e-9
LAX_TOL = 1e-6
REFORMULATION_TOL = 1e-6
GAP_TOL = 1e-12
SPECTRAL_TOL = 1e-10
HERMITIAN_TOL = 1e-12


def _header(command: str, cfg: dict) -> dict:
    return {"tool": "csdnls", "version": __version__, "command": command, "config": cfg}


def _tags(cfg, u0) -> list:
    return ["outside-theorem"] if outside_theorem(u0, cfg["equation"]["sign"]) else []


def cmd_evolve(cfg: dict, out: Path) -> int:
    sign = EquationSign.parse(cfg["equation"]["sign"])
    N = cfg["equation"]["N"]
    u0 = initial_state(cfg)
    times = sample_times(cfg)
    method = cfg["method"]
    lam = resolved_lambda_shift(cfg, u0)
    diag = cfg["diagnostics"]
    flow = FlowConfig(sign=sign, N=N, t_samples=times, dt=cfg["time"]["dt"], method=method,
                      dealias=cfg["dealias"], lambda_shift=lam)
    trajs = {}
    if method in ("explicit", "both"):
        trajs["explicit"] = explicit_trajectory(u0, times, sign)
    if method in ("direct", "both"):
        trajs["direct"] = evolve_direct(u0, flow)
    for name, tr in trajs.items():
        if not all(np.all(np.isfinite(s.coeffs)) for s in tr.states):
            raise NumericalBlowup(f"{name} trajectory contains non-finite values")
        write_trajectory(out / f"trajectory_{name}.tsv", tr, cfg)
    primary = trajs.get("direct", trajs.get("explicit"))
    report = diagnose(primary, u0, sign, hs=diag["H_s"], lambda_shift=lam,
                      n_track=diag["n_track"], birkhoff=diag["birkhoff"])
    if diag["identity_checks"]:
        dt = cfg["time"]["dt"]
        short = evolve_direct(u0, FlowConfig(sign=sign, N=N, t_samples=[0.0, dt, 2 * dt], dt=dt,
                                             dealias=cfg["dealias"]))
        report.identity_residuals["lax_residual"] = lax_residual(short.states, dt, sign)
        report.identity_residuals["reformulation"] = reformulation_residual(*short.states, dt, sign)
    doc = _header("evolve", cfg)
    doc["lambda_shift"] = lam
    doc["primary_method"] = primary.method
    doc["report"] = report.to_dict()
    if len(trajs) == 2:
        doc["method_disagreement"] = [
            l2_norm(a - b) for a, b in zip(trajs["explicit"].states, trajs["direct"].states)]
    write_json(out / "report.json", doc)
    log.info("evolve: wrote %s", ", ".join(sorted(p.name for p in out.iterdir())))
    return EXIT_OK


def cmd_spectrum(cfg: dict, out: Path) -> int:
    u0 = initial_state(cfg)
    sign = cfg["equation"]["sign"]
    spec = spectrum(assemble_L(u0, sign))
    doc = _header("spectrum", cfg)
    doc["eigenvalues"] = [float(x) for x in spec.eigenvalues]
    doc["phase_convention"] = spec.phase_convention
    doc["tags"] = _tags(cfg, u0)
    if cfg["output"]["eigenvectors"]:
        doc["eigenvectors"] = [[{"re": float(z.real), "im": float(z.imag)} for z in col]
                               for col in spec.eigenvectors.T]
    write_json(out / "spectrum.json", doc)
    return EXIT_OK


def _check(value: float, threshold: float, *, upper: bool = True) -> dict:
    ok = value <= threshold if upper else value >= threshold
    return {"value": float(value), "threshold": float(threshold), "pass": bool(ok)}


def run_verify(cfg: dict) -> dict:
    """All identity checks for one config; returns the report document."""
    sign = EquationSign.parse(cfg["equation"]["sign"])
    N = cfg["equation"]["N"]
    vcfg = cfg["verify"]
    rng = np.random.default_rng(cfg["seed"])
    u0 = initial_state(cfg)
    if cfg["test_hooks"]["corrupt_b_sign"]:
        other = EquationSign.DEFOCUSING if sign is EquationSign.FOCUSING else EquationSign.FOCUSING

        def b_asm(u, _s):
            return assemble_B(u, other)
    else:
        b_asm = assemble_B

    checks = {}
    worst_L = worst_B = 0.0
    for _ in range(vcfg["n_random"]):
        u = random_state(rng, N, support=N // 2, norm=rng.uniform(0.1, 1.5))
        rep = commutator_checks(u, sign, b_assembler=b_asm)
        worst_L = max(worst_L, rep.L_residual)
        worst_B = max(worst_B, rep.B_residual)
    checks["commutator_L"] = _check(worst_L, COMMUTATOR_L_TOL)
    checks["commutator_B"] = _check(worst_B, COMMUTATOR_B_TOL)

    dt = min(cfg["time"]["dt"], 1e-4)
    short = evolve_direct(u0, FlowConfig(sign=sign, N=N, t_samples=[0.0, dt, 2 * dt], dt=dt,
                                         dealias=cfg["dealias"]))
    checks["lax_residual"] = _check(lax_residual(short.states, dt, sign, b_assembler=b_asm), LAX_TOL)
    checks["reformulation"] = _check(reformulation_residual(*short.states, dt, sign),
                                     REFORMULATION_TOL)

    L0 = assemble_L(u0, sign)
    B0 = b_asm(u0, sign)
    checks["L_hermitian"] = _check(np.abs(L0 - L0.conj().T).max(),
                                   HERMITIAN_TOL * (1 + np.abs(L0).max()))
    checks["B_skew"] = _check(np.abs(B0 + B0.conj().T).max(), HERMITIAN_TOL * (1 + np.abs(B0).max()))

    worst_gap = np.inf
    for _ in range(vcfg["gap_pairs"]):
        u = random_state(rng, N)
        h = random_state(rng, N)
        rhs = sharp_gap(u, h) + l2_norm(toeplitz_conj_apply(u, h)) ** 2
        worst_gap = min(worst_gap, sharp_gap(u, h) / max(rhs, 1e-300))
    checks["sharp_gap_min"] = _check(worst_gap, -GAP_TOL, upper=False)

    excess = 0.0
    n = np.arange(N + 1)
    for _ in range(vcfg["spectral_states"]):
        u = random_state(rng, N, norm=rng.uniform(0.05, 0.99))
        lam_f = np.linalg.eigvalsh(assemble_L(u, EquationSign.FOCUSING))
        lam_d = np.linalg.eigvalsh(assemble_L(u, EquationSign.DEFOCUSING))
        excess = max(excess, (lam_f - n).max(), (n - lam_d).max(), -l2_norm(u) ** 2 - lam_f[0])
    checks["spectral_bounds"] = _check(excess, SPECTRAL_TOL)

    probe = lipschitz_probe(u0, vcfg["lipschitz_directions"], [1e-2, 1e-3, 1e-4],
                            max(1, min(N // 2, 8)), sign, rng)
    checks["lipschitz_bounded"] = {"value": float(probe.max_quotient[-1].max()),
                                   "threshold": None, "pass": probe.bounded}

    doc = _header("verify", cfg)
    doc["checks"] = checks
    doc["all_pass"] = all(c["pass"] for c in checks.values())
    doc["tags"] = _tags(cfg, u0)
    return doc


def cmd_verify(cfg: dict, out: Path) -> int:
    doc = run_verify(cfg)
    write_json(out / "verify.json", doc)
    for name, c in doc["checks"].items():
        log.info("%-20s %s value=%.3e", name, "PASS" if c["pass"] else "FAIL", c["value"])
    return EXIT_OK if doc["all_pass"] else EXIT_IDENTITY


COMMANDS = {"evolve": cmd_evolve, "spectrum": cmd_spectrum, "verify": cmd_verify}


def run_one(command: str, config_path: str, out: str, seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        cfg["seed"] = seed
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[command](cfg, outdir)
    except (NumericalBlowup, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # bad parameter combinations caught downstream, e.g. a lambda_shift too small
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csdnls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"csdnls {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", action="append", required=True,
                        help="experiment config (JSON); repeat for several experiments")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers across configs")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    configs = args.config
    if len(configs) == 1:
        return run_one(args.command, configs[0], args.out, args.seed)
    stems = [Path(c).stem for c in configs]
    if len(set(stems)) != len(stems):
        print("error: configs must have distinct file names (they name the output directories)",
              file=sys.stderr)
        return EXIT_CONFIG
    outs = [str(Path(args.out) / s) for s in stems]
    jobs = [(args.command, c, o, args.seed) for c, o in zip(configs, outs)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = list(ex.map(_run_star, jobs))
    else:
        codes = [run_one(*j) for j in jobs]
    return max(codes)


def _run_star(job):
    return run_one(*job)


if __name__ == "__main__":
    sys.exit(main())
