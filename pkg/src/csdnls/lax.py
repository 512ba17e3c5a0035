"""Lax pair matrices for the focusing and defocusing equations.

``L = D -+ T_u T_{conj u}`` and ``B = +-(T_u T_{conj u_x} - T_{u_x} T_{conj u})
+ i (T_u T_{conj u})^2`` (upper signs focusing), assembled as dense
compressions to the band ``0..N``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hardy import (HardyState, _same_trunc, d_dx, derivative, inner_product,
                    l2_norm, toeplitz_apply, toeplitz_conj_apply, toeplitz_matrix)

__all__ = [
    "EquationSign",
    "LaxMatrices",
    "Spectrum",
    "NonHermitianError",
    "assemble_L",
    "assemble_B",
    "assemble_L_columnwise",
    "assemble_B_columnwise",
    "lax_matrices",
    "spectrum",
    "cluster_projector",
    "quadratic_form",
    "shift_adjoint_matrix",
    "CommutatorReport",
    "commutator_checks",
    "lax_residual",
    "reformulation_residual",
    "hermitian_tol",
]


class EquationSign(enum.Enum):
    FOCUSING = "focusing"
    DEFOCUSING = "defocusing"

    @property
    def factor(self) -> int:
        """+1 focusing, -1 defocusing (sign of the nonlinearity)."""
        return 1 if self is EquationSign.FOCUSING else -1

    @classmethod
    def parse(cls, value) -> "EquationSign":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"sign must be 'focusing' or 'defocusing', got {value!r}") from None


class NonHermitianError(ValueError):
    pass


def hermitian_tol(A: np.ndarray) -> float:
    return 1e-12 * (1.0 + np.abs(A).max())


@dataclass(frozen=True, eq=False)
class LaxMatrices:
    L: np.ndarray
    B: np.ndarray
    sign: EquationSign
    source_norm: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues; column ``n`` of ``eigenvectors`` is ``f_n``.

    Phase convention: the largest-modulus entry of each column is real and
    positive, ties going to the lowest index.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    phase_convention: str = "max-entry-real-positive"

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def vector(self, n: int) -> HardyState:
        return HardyState(self.eigenvectors[:, n])

    def apply_function(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Dense matrix ``func(L)`` by functional calculus."""
        V = self.eigenvectors
        return (V * func(self.eigenvalues)) @ V.conj().T


def _kernel(u: HardyState) -> tuple[np.ndarray, np.ndarray]:
    Tu = toeplitz_matrix(u)
    K = Tu @ Tu.conj().T
    return Tu, 0.5 * (K + K.conj().T)


def assemble_L(u: HardyState, sign=EquationSign.FOCUSING) -> np.ndarray:
    """``L[j,k] = j delta_jk -+ sum_m u(j-m) conj(u(k-m))``."""
    sign = EquationSign.parse(sign)
    _, K = _kernel(u)
    return np.diag(np.arange(u.trunc + 1, dtype=complex)) - sign.factor * K


def assemble_B(u: HardyState, sign=EquationSign.FOCUSING) -> np.ndarray:
    sign = EquationSign.parse(sign)
    Tu, K = _kernel(u)
    Tdu = toeplitz_matrix(d_dx(u))
    # (T_u T_{conj du})^H = T_du T_{conj u}, so the first bracket is skew by construction
    X = Tu @ Tdu.conj().T
    return sign.factor * (X - X.conj().T) + 1j * (K @ K)


def _basis(N: int, k: int) -> HardyState:
    e = np.zeros(N + 1, dtype=complex)
    e[k] = 1.0
    return HardyState(e)


def _T(u: HardyState, g: HardyState) -> HardyState:
    return toeplitz_apply(u, g, method="fft")


def assemble_L_columnwise(u: HardyState, sign=EquationSign.FOCUSING) -> np.ndarray:
    """Reference assembly by applying operators to each basis vector."""
    sign = EquationSign.parse(sign)
    N = u.trunc
    cols = []
    for k in range(N + 1):
        e = _basis(N, k)
        col = derivative(e) - sign.factor * _T(u, toeplitz_conj_apply(u, e))
        cols.append(col.coeffs)
    return np.column_stack(cols)


def assemble_B_columnwise(u: HardyState, sign=EquationSign.FOCUSING) -> np.ndarray:
    """Reference assembly of ``B`` through operator applications."""
    sign = EquationSign.parse(sign)
    N = u.trunc
    du = d_dx(u)

    def K(h):
        return _T(u, toeplitz_conj_apply(u, h))

    cols = []
    for k in range(N + 1):
        e = _basis(N, k)
        col = sign.factor * (_T(u, toeplitz_conj_apply(du, e)) - _T(du, toeplitz_conj_apply(u, e)))
        col = col + 1j * K(K(e))
        cols.append(col.coeffs)
    return np.column_stack(cols)


def lax_matrices(u: HardyState, sign=EquationSign.FOCUSING) -> LaxMatrices:
    sign = EquationSign.parse(sign)
    return LaxMatrices(assemble_L(u, sign), assemble_B(u, sign), sign, l2_norm(u))


def spectrum(L: np.ndarray) -> Spectrum:
    L = np.asarray(L, dtype=complex)
    if np.abs(L - L.conj().T).max() > hermitian_tol(L):
        raise NonHermitianError("matrix is not Hermitian within tolerance")
    lam, V = np.linalg.eigh(0.5 * (L + L.conj().T))
    mod = np.abs(V)
    # lowest index among entries within round-off of the column maximum
    idx = np.argmax(mod >= mod.max(axis=0) * (1 - 1e-12), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    V = V * (np.abs(piv) / piv)
    return Spectrum(lam, V)


def cluster_projector(spec: Spectrum, n: int, gap: float = 1e-8) -> np.ndarray:
    """Orthogonal projector onto the eigenvalue cluster containing ``lambda_n``.

    Clusters are maximal runs of consecutive eigenvalues closer than ``gap``.
    """
    lam = spec.eigenvalues
    lo = n
    while lo > 0 and lam[lo] - lam[lo - 1] < gap:
        lo -= 1
    hi = n
    while hi < lam.size - 1 and lam[hi + 1] - lam[hi] < gap:
        hi += 1
    W = spec.eigenvectors[:, lo:hi + 1]
    return W @ W.conj().T


def quadratic_form(u: HardyState, f: HardyState, g: HardyState,
                   sign=EquationSign.FOCUSING) -> complex:
    """``<D^{1/2} f|D^{1/2} g> -+ <T_{conj u} f|T_{conj u} g>``."""
    sign = EquationSign.parse(sign)
    _same_trunc(u, f, g)
    n = np.arange(u.trunc + 1)
    dterm = complex(np.vdot(g.coeffs, n * f.coeffs))
    return dterm - sign.factor * inner_product(toeplitz_conj_apply(u, f),
                                               toeplitz_conj_apply(u, g))


def shift_adjoint_matrix(N: int) -> np.ndarray:
    return np.eye(N + 1, k=1, dtype=complex)


@dataclass
class CommutatorReport:
    """Max-entry residuals of the two shift commutator identities."""

    L_residual: float
    B_residual: float
    block: int
    residual_L_matrix: np.ndarray = field(repr=False)
    residual_B_matrix: np.ndarray = field(repr=False)


def commutator_checks(u: HardyState, sign=EquationSign.FOCUSING, *, block: int | None = None,
                      b_assembler: Callable = assemble_B) -> CommutatorReport:
    """Residuals of ``[S*, L] = S* -+ <.|u> S*u`` and
    ``[S*, B] = i(S* L^2 - (L + 1)^2 S*)``.

    Both are measured on rows/columns ``0..block-1`` (default ``N-1``), which
    drops the edge row where ``S*`` loses the top mode.
    """
    sign = EquationSign.parse(sign)
    N = u.trunc
    block = N - 1 if block is None else block
    S = shift_adjoint_matrix(N)
    I = np.eye(N + 1)
    L = assemble_L(u, sign)
    B = b_assembler(u, sign)
    Su = S @ u.coeffs
    rhs_L = S - sign.factor * np.outer(Su, u.coeffs.conj())
    RL = S @ L - L @ S - rhs_L
    LI = L + I
    RB = S @ B - B @ S - 1j * (S @ L @ L - LI @ LI @ S)
    RL = RL[:block, :block]
    RB = RB[:block, :block]
    return CommutatorReport(float(np.abs(RL).max()), float(np.abs(RB).max()), block, RL, RB)


def _embedded(states: Sequence[HardyState]) -> list[HardyState]:
    N = _same_trunc(*states)
    return [s.embed(2 * N + 1) for s in states]


def lax_residual(u_traj: Sequence[HardyState], dt: float, sign=EquationSign.FOCUSING,
                 *, b_assembler: Callable = assemble_B) -> float:
    """Max over samples and interior entries of ``|dL/dt - [B, L]|``.

    ``dL/dt`` is the centered difference of consecutive samples spaced
    ``dt`` apart.  Band-``N`` states are embedded into operators of size
    ``2N+2`` so that every product on the original band is exact; the
    residual is read on rows/columns ``0..N-2``.
    """
    sign = EquationSign.parse(sign)
    if len(u_traj) < 3:
        raise ValueError("lax_residual needs at least 3 samples")
    N = u_traj[0].trunc
    big = _embedded(u_traj)
    Ls = [assemble_L(s, sign) for s in big]
    worst = 0.0
    for i in range(1, len(big) - 1):
        L = Ls[i]
        B = b_assembler(big[i], sign)
        R = (Ls[i + 1] - Ls[i - 1]) / (2 * dt) - (B @ L - L @ B)
        worst = max(worst, float(np.abs(R[:N - 1, :N - 1]).max()))
    return worst


def reformulation_residual(u_prev: HardyState, u: HardyState, u_next: HardyState,
                           dt: float, sign=EquationSign.FOCUSING) -> float:
    """``|du/dt - (B u - i L^2 u)|_inf`` on modes ``0..N-2``, centered difference."""
    sign = EquationSign.parse(sign)
    N = u.trunc
    pm, pc, pp = _embedded([u_prev, u, u_next])
    L = assemble_L(pc, sign)
    B = assemble_B(pc, sign)
    v = pc.coeffs
    R = (pp.coeffs - pm.coeffs) / (2 * dt) - (B @ v - 1j * (L @ (L @ v)))
    return float(np.abs(R[:N - 1]).max())
