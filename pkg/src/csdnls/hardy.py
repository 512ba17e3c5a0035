"""Finite-band model of the Hardy space on the torus.

A function ``u = sum_{n>=0} u_n e^{inx}`` is stored as the coefficient
vector ``(u_0, ..., u_N)``.  Every operator here is the compression of its
infinite-dimensional counterpart to the band ``0..N``.  Inner products use the
normalized measure ``dx/2pi``, so they reduce to plain coefficient sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

__all__ = [
    "TruncationMismatch",
    "HardyState",
    "FullSymbol",
    "szego_project",
    "abs_square",
    "inner_product",
    "l2_norm",
    "sobolev_norm",
    "dot_sobolev_norm",
    "derivative",
    "d_dx",
    "shift_apply",
    "shift_adjoint_apply",
    "toeplitz_matrix",
    "toeplitz_apply",
    "toeplitz_conj_apply",
    "convolve_direct",
    "pointwise_product",
    "product_grid_size",
    "rational_profile",
    "single_mode",
    "random_state",
]


class TruncationMismatch(ValueError):
    """Raised when two states with different truncations are combined."""


@dataclass(frozen=True, eq=False)
class HardyState:
    """Coefficients ``u_0..u_N`` of a nonnegative-frequency function."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True).reshape(-1)
        if c.size == 0:
            raise ValueError("a HardyState needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def trunc(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zeros(cls, N: int) -> "HardyState":
        return cls(np.zeros(N + 1, dtype=complex))

    @classmethod
    def from_dict(cls, modes: dict, N: int) -> "HardyState":
        c = np.zeros(N + 1, dtype=complex)
        for n, a in modes.items():
            if not 0 <= n <= N:
                raise ValueError(f"mode {n} outside band 0..{N}")
            c[n] = a
        return cls(c)

    def embed(self, N: int) -> "HardyState":
        """Zero-pad (or cut) to truncation ``N``."""
        c = np.zeros(N + 1, dtype=complex)
        m = min(N, self.trunc) + 1
        c[:m] = self.coeffs[:m]
        return HardyState(c)

    def _check(self, other: "HardyState"):
        if not isinstance(other, HardyState):
            return NotImplemented
        if other.trunc != self.trunc:
            raise TruncationMismatch(
                f"truncation mismatch: {self.trunc} vs {other.trunc}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return HardyState(self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return HardyState(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, HardyState):
            return NotImplemented
        return HardyState(complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return HardyState(-self.coeffs)

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"HardyState(N={self.trunc}, l2={l2_norm(self):.6g})"


@dataclass(frozen=True, eq=False)
class FullSymbol:
    """Fourier coefficients ``f_{-M}..f_M`` of a general function on the torus.

    ``coeffs[k]`` holds the coefficient of ``e^{i(k-M)x}``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True).reshape(-1)
        if c.size % 2 != 1:
            raise ValueError("FullSymbol needs an odd number of coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def M(self) -> int:
        return (self.coeffs.size - 1) // 2

    @classmethod
    def from_dict(cls, modes: dict) -> "FullSymbol":
        M = max((abs(n) for n in modes), default=0)
        c = np.zeros(2 * M + 1, dtype=complex)
        for n, a in modes.items():
            c[n + M] = a
        return cls(c)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.M:
            return 0j
        return complex(self.coeffs[n + self.M])

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        return bool(np.all(np.abs(c - np.conj(c[::-1])) <= tol * (1 + np.abs(c).max())))


def _same_trunc(*states: HardyState) -> int:
    N = states[0].trunc
    for s in states[1:]:
        if s.trunc != N:
            raise TruncationMismatch(f"truncation mismatch: {N} vs {s.trunc}")
    return N


def szego_project(f: FullSymbol, N: int) -> HardyState:
    """Keep the frequencies ``0..N`` of ``f``; negative ones are discarded."""
    out = np.zeros(N + 1, dtype=complex)
    m = min(N, f.M) + 1
    out[:m] = f.coeffs[f.M:f.M + m]
    return HardyState(out)


def abs_square(u: HardyState) -> FullSymbol:
    """Exact coefficients of ``|u|^2`` on ``-N..N``."""
    c = u.coeffs
    # |u|^2 (k) = sum_m u(m+k) conj(u(m)); correlate gives lags -N..N
    return FullSymbol(np.correlate(c, c, mode="full"))


def inner_product(u: HardyState, v: HardyState) -> complex:
    """``<u|v> = int u conj(v) dx/2pi``."""
    _same_trunc(u, v)
    return complex(np.vdot(v.coeffs, u.coeffs))


def l2_norm(u: HardyState) -> float:
    # scaled norm: squares of tiny coefficients would underflow
    return float(scipy.linalg.norm(u.coeffs))


def sobolev_norm(u: HardyState, s: float) -> float:
    if s < 0:
        raise ValueError("Sobolev index must be nonnegative")
    n = np.arange(u.trunc + 1)
    return float(np.sqrt(np.sum((1.0 + n**2) ** s * np.abs(u.coeffs) ** 2)))


def dot_sobolev_norm(u: HardyState, s: float) -> float:
    """Homogeneous norm; the mean is ignored."""
    if s < 0:
        raise ValueError("Sobolev index must be nonnegative")
    n = np.arange(1, u.trunc + 1, dtype=float)
    return float(np.sqrt(np.sum(n ** (2 * s) * np.abs(u.coeffs[1:]) ** 2)))


def derivative(u: HardyState) -> HardyState:
    """``D u = -i du/dx``, i.e. ``n u_n``."""
    return HardyState(np.arange(u.trunc + 1) * u.coeffs)


def d_dx(u: HardyState) -> HardyState:
    return HardyState(1j * np.arange(u.trunc + 1) * u.coeffs)


def shift_apply(u: HardyState, return_loss: bool = False):
    """Multiply by ``e^{ix}``.

    The top coefficient falls off the band; with ``return_loss`` its modulus
    is returned alongside the shifted state.
    """
    c = np.zeros_like(u.coeffs)
    c[1:] = u.coeffs[:-1]
    out = HardyState(c)
    if return_loss:
        return out, float(abs(u.coeffs[-1]))
    return out


def shift_adjoint_apply(u: HardyState) -> HardyState:
    c = np.zeros_like(u.coeffs)
    c[:-1] = u.coeffs[1:]
    return HardyState(c)


def toeplitz_matrix(u: HardyState) -> np.ndarray:
    """Compression of ``T_u`` to the band: lower-triangular, entries ``u(j-k)``.

    Its adjoint ``.conj().T`` is the compression of ``T_{conj u}``.
    """
    c = u.coeffs
    return scipy.linalg.toeplitz(c, np.zeros_like(c))


def convolve_direct(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """O(N^2) Cauchy product of two coefficient vectors, full length."""
    return np.convolve(f, g)


def product_grid_size(N: int) -> int:
    """Grid size for alias-free products of two band-``N`` signals.

    One-sided spectra produce modes ``0..2N``; anything short of ``2N+1``
    points folds modes ``N+1..2N`` back onto the retained band.
    """
    return scipy.fft.next_fast_len(2 * N + 2)


def pointwise_product(f: HardyState, g: HardyState, dealias: bool = True) -> HardyState:
    """``Pi(f g)`` truncated back to the band.

    ``dealias=True`` uses a zero-padded FFT; ``dealias=False`` the direct
    convolution.  Both agree on modes ``0..N`` to round-off.
    """
    N = _same_trunc(f, g)
    if not dealias:
        return HardyState(convolve_direct(f.coeffs, g.coeffs)[:N + 1])
    M = product_grid_size(N)
    fx = scipy.fft.ifft(f.coeffs, n=M) * M
    gx = scipy.fft.ifft(g.coeffs, n=M) * M
    prod = scipy.fft.fft(fx * gx) / M
    return HardyState(prod[:N + 1])


def toeplitz_apply(u: HardyState, g: HardyState, method: str = "direct") -> HardyState:
    """``T_u g = Pi(u g)`` on the band.

    ``method`` is ``"direct"`` (lower-triangular Toeplitz product) or
    ``"fft"`` (dealiased transform product).
    """
    N = _same_trunc(u, g)
    if method == "fft":
        return pointwise_product(u, g, dealias=True)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    return HardyState(convolve_direct(u.coeffs, g.coeffs)[:N + 1])


def toeplitz_conj_apply(u: HardyState, h: HardyState) -> HardyState:
    """``T_{conj u} h``, coefficients ``sum_{p=0}^{N-n} h(n+p) conj(u(p))``."""
    N = _same_trunc(u, h)
    full = np.correlate(h.coeffs, u.coeffs, mode="full")
    # lag n sits at index n + N
    return HardyState(full[N:])


def rational_profile(q: complex, c: complex | None = None, N: int = 64) -> HardyState:
    """Coefficients ``c q^n`` of ``c/(1 - q e^{ix})``.

    With ``c`` omitted the traveling-wave normalization ``sqrt(1-|q|^2)`` is
    used, giving unit L2 norm in the untruncated limit.
    """
    q = complex(q)
    if abs(q) >= 1:
        raise ValueError(f"|q| must be < 1, got {abs(q)}")
    if c is None:
        c = np.sqrt(1.0 - abs(q) ** 2)
    return HardyState(complex(c) * q ** np.arange(N + 1))


def single_mode(n: int, amplitude: complex, N: int) -> HardyState:
    return HardyState.from_dict({n: amplitude}, N)


def random_state(rng: np.random.Generator, N: int, *, support: int | None = None,
                 norm: float | None = None, decay: float | None = None) -> HardyState:
    """Random complex Gaussian coefficients.

    ``support`` limits the nonzero modes to ``0..support``; ``decay`` multiplies
    mode ``n`` by ``decay**n``; ``norm`` rescales to the given L2 norm.
    """
    K = N if support is None else min(support, N)
    c = np.zeros(N + 1, dtype=complex)
    c[:K + 1] = rng.standard_normal(K + 1) + 1j * rng.standard_normal(K + 1)
    if decay is not None:
        c[:K + 1] *= decay ** np.arange(K + 1)
    if norm is not None:
        nrm = np.linalg.norm(c)
        if nrm > 0:
            c *= norm / nrm
    return HardyState(c)
