"""Conserved quantities and integrability diagnostics along trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hardy import HardyState, derivative, inner_product, l2_norm, toeplitz_conj_apply
from .lax import EquationSign, assemble_L, spectrum
from .propagator import (ExplicitSolver, TrajectoryRecord, default_lambda_shift,
                         outside_theorem)

__all__ = [
    "DiagnosticsReport",
    "conserved_Hs",
    "conserved_Hs_matrix",
    "gram_residual",
    "birkhoff_coordinates",
    "birkhoff_phase_residual",
    "sharp_gap",
    "eigenvalue_drift",
    "LipschitzTable",
    "lipschitz_probe",
    "diagnose",
]


@dataclass
class DiagnosticsReport:
    times: np.ndarray
    l2_norm: np.ndarray
    mean: np.ndarray
    H_s: dict
    eigenvalue_drift: np.ndarray
    birkhoff_moduli: np.ndarray | None = None
    birkhoff_phase_residual: np.ndarray | None = None
    identity_residuals: dict = field(default_factory=dict)
    tags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def c(z):
            return {"re": float(z.real), "im": float(z.imag)}

        out = {
            "times": [float(t) for t in self.times],
            "l2_norm": [float(x) for x in self.l2_norm],
            "mean": [c(z) for z in self.mean],
            "H_s": {str(s): [float(x) for x in v] for s, v in self.H_s.items()},
            "eigenvalue_drift": [float(x) for x in self.eigenvalue_drift],
            "identity_residuals": {k: float(v) for k, v in self.identity_residuals.items()},
            "tags": list(self.tags),
        }
        if self.birkhoff_moduli is not None:
            out["birkhoff_moduli"] = [[float(x) for x in row] for row in self.birkhoff_moduli]
            out["birkhoff_phase_residual"] = [float(x) for x in self.birkhoff_phase_residual]
        return out


def conserved_Hs(u: HardyState, s: float, lambda_shift: float,
                 sign=EquationSign.FOCUSING) -> float:
    """``<(L_u + lambda)^s u | u>`` through the spectral decomposition."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    spec = spectrum(assemble_L(u, sign))
    shifted = spec.eigenvalues + lambda_shift
    if shifted[0] <= 0:
        raise ValueError(
            f"lambda_shift={lambda_shift} does not make L + lambda positive "
            f"(lowest eigenvalue {spec.eigenvalues[0]:.6g})")
    weights = np.abs(spec.eigenvectors.conj().T @ u.coeffs) ** 2
    return float(np.sum(shifted ** s * weights))


def conserved_Hs_matrix(u: HardyState, s: int, lambda_shift: float,
                        sign=EquationSign.FOCUSING) -> complex:
    """Integer-``s`` variant by matrix power; used to cross-check :func:`conserved_Hs`."""
    A = assemble_L(u, sign) + lambda_shift * np.eye(u.trunc + 1)
    return complex(np.vdot(u.coeffs, np.linalg.matrix_power(A, int(s)) @ u.coeffs))


def gram_residual(basis: Sequence[HardyState]) -> float:
    F = np.column_stack([f.coeffs for f in basis])
    return float(np.abs(F.conj().T @ F - np.eye(F.shape[1])).max())


def birkhoff_coordinates(u_t: HardyState, f_t: Sequence[HardyState], tol: float = 1e-6) -> np.ndarray:
    """``beta_n = <u(t) | f_n^t>``; the basis must be orthonormal to ``tol``."""
    g = gram_residual(f_t)
    if g > tol:
        raise ValueError(f"basis is not orthonormal (Gram residual {g:.3g})")
    return np.array([inner_product(u_t, f) for f in f_t])


def birkhoff_phase_residual(beta_t: np.ndarray, beta_0: np.ndarray,
                            eigenvalues: np.ndarray, t: float) -> float:
    """``max_n |beta_n(t) - beta_n(0) e^{-it lambda_n^2}|``."""
    lam = np.asarray(eigenvalues)[:len(beta_0)]
    return float(np.abs(np.asarray(beta_t) - np.asarray(beta_0) * np.exp(-1j * t * lam ** 2)).max())


def sharp_gap(u: HardyState, h: HardyState) -> float:
    """``(<Dh|h> + |h|^2)|u|^2 - |T_{conj u} h|^2``, never negative."""
    dh = inner_product(derivative(h), h).real
    return (dh + l2_norm(h) ** 2) * l2_norm(u) ** 2 - l2_norm(toeplitz_conj_apply(u, h)) ** 2


def eigenvalue_drift(traj: TrajectoryRecord, sign=EquationSign.FOCUSING,
                     n_track: int | None = None) -> np.ndarray:
    n_track = max(1, traj.trunc // 8) if n_track is None else n_track
    lam = [np.linalg.eigvalsh(assemble_L(s, sign))[:n_track] for s in traj.states]
    return np.array([np.abs(x - lam[0]).max() for x in lam])


@dataclass
class LipschitzTable:
    deltas: np.ndarray
    quotients: np.ndarray  # (direction, delta, n)
    bounded: bool

    @property
    def max_quotient(self) -> np.ndarray:
        """Max over directions, shape (delta, n)."""
        return self.quotients.max(axis=0)


def lipschitz_probe(u: HardyState, directions: int, deltas: Sequence[float], n_track: int,
                    sign=EquationSign.FOCUSING, rng: np.random.Generator | None = None,
                    growth: float = 2.0) -> LipschitzTable:
    """Difference quotients ``|lambda_n(u + delta w) - lambda_n(u)| / delta``.

    ``bounded`` is False if any quotient at the smallest delta exceeds
    ``growth`` times the largest quotient seen at the first delta (plus a
    unit floor, which covers quotients that decay to zero).
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be positive and strictly decreasing")
    rng = np.random.default_rng(0) if rng is None else rng
    N = u.trunc
    base = np.linalg.eigvalsh(assemble_L(u, sign))[:n_track]
    Q = np.empty((directions, deltas.size, n_track))
    for i in range(directions):
        w = rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)
        w /= np.linalg.norm(w)
        for j, d in enumerate(deltas):
            lam = np.linalg.eigvalsh(assemble_L(HardyState(u.coeffs + d * w), sign))[:n_track]
            Q[i, j] = np.abs(lam - base) / d
    bounded = bool(np.all(np.isfinite(Q)) and
                   Q[:, -1].max() <= growth * (Q[:, 0].max() + 1.0))
    return LipschitzTable(deltas, Q, bounded)


def diagnose(traj: TrajectoryRecord, u0: HardyState, sign=EquationSign.FOCUSING, *,
             hs: Sequence[float] = (0.5, 1.0, 2.0), lambda_shift: float | None = None,
             n_track: int | None = None, birkhoff: bool = True) -> DiagnosticsReport:
    """Conserved quantities and Birkhoff checks at every sample of ``traj``."""
    sign = EquationSign.parse(sign)
    lam_shift = default_lambda_shift(u0, sign) if lambda_shift is None else lambda_shift
    n_track = max(1, traj.trunc // 8) if n_track is None else n_track
    states = traj.states
    report = DiagnosticsReport(
        times=traj.times,
        l2_norm=np.array([l2_norm(s) for s in states]),
        mean=np.array([s.coeffs[0] for s in states]),
        H_s={float(s): np.array([conserved_Hs(st, s, lam_shift, sign) for st in states])
             for s in hs},
        eigenvalue_drift=eigenvalue_drift(traj, sign, n_track),
    )
    if outside_theorem(u0, sign):
        report.tags.append("outside-theorem")
    report.identity_residuals["max_truncation_loss"] = float(traj.truncation_loss.max())
    if report.identity_residuals["max_truncation_loss"] > 1e-10 * l2_norm(u0) ** 2:
        report.tags.append("truncation-invalid")
    if birkhoff:
        solver = ExplicitSolver(u0, sign)
        idx = list(range(n_track))
        lam = solver.spec.eigenvalues
        beta0 = solver.spec.eigenvectors[:, idx].conj().T @ u0.coeffs
        mod, phase, gram, eig = [], [], 0.0, 0.0
        for t, st in zip(traj.times, states):
            f_t = solver.eigenfunctions(t, idx)
            gram = max(gram, gram_residual(f_t))
            beta = np.array([inner_product(st, f) for f in f_t])
            mod.append(np.abs(beta))
            phase.append(birkhoff_phase_residual(beta, beta0, lam, t))
            Lt = assemble_L(st, sign)
            F = np.column_stack([f.coeffs for f in f_t])
            eig = max(eig, float(np.abs(Lt @ F - F * lam[idx]).max()))
        report.birkhoff_moduli = np.array(mod).T
        report.birkhoff_phase_residual = np.array(phase)
        report.identity_residuals["eigenbasis_gram"] = gram
        report.identity_residuals["eigenrelation"] = eig
        report.identity_residuals["birkhoff_modulus_drift"] = float(
            np.abs(report.birkhoff_moduli - report.birkhoff_moduli[:, :1]).max())
    return report
