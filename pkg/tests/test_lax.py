import numpy as np
import pytest

from csdnls.hardy import HardyState, derivative, inner_product, l2_norm, random_state, single_mode
from csdnls.lax import (EquationSign, NonHermitianError, assemble_B, assemble_B_columnwise,
                        assemble_L, assemble_L_columnwise, cluster_projector, commutator_checks,
                        lax_matrices, lax_residual, quadratic_form, reformulation_residual,
                        spectrum)
from csdnls.propagator import FlowConfig, evolve_direct

SIGNS = list(EquationSign)


def entry_formula_L(u, sign):
    """L[j,k] = j delta_jk -+ sum_{m <= min(j,k)} u(j-m) conj(u(k-m))."""
    N = u.trunc
    c = u.coeffs
    L = np.zeros((N + 1, N + 1), complex)
    for j in range(N + 1):
        for k in range(N + 1):
            s = sum(c[j - m] * np.conj(c[k - m]) for m in range(min(j, k) + 1))
            L[j, k] = (j if j == k else 0) - sign.factor * s
    return L


class TestSign:
    def test_parse(self):
        assert EquationSign.parse("Focusing") is EquationSign.FOCUSING
        assert EquationSign.DEFOCUSING.factor == -1
        with pytest.raises(ValueError):
            EquationSign.parse("sideways")


class TestAssembleL:
    @pytest.mark.parametrize("sign", SIGNS)
    def test_entry_formula_and_columnwise(self, rng, sign):
        u = random_state(rng, 10)
        L = assemble_L(u, sign)
        assert np.allclose(L, entry_formula_L(u, sign), atol=1e-13)
        assert np.allclose(L, assemble_L_columnwise(u, sign), atol=1e-12)

    def test_constant(self):
        c = 0.6 - 0.3j
        u = single_mode(0, c, 6)
        L = assemble_L(u, "focusing")
        assert np.allclose(L, np.diag(np.arange(7) - abs(c) ** 2))
        assert np.allclose(assemble_L_columnwise(u), L)

    @pytest.mark.parametrize("sign", SIGNS)
    def test_zero(self, sign):
        assert np.array_equal(assemble_L(HardyState(np.zeros(5)), sign), np.diag(np.arange(5)))

    def test_action_on_one(self, rng):
        u = random_state(rng, 8)
        L = assemble_L(u)
        assert np.allclose(L[:, 0], -np.conj(u.coeffs[0]) * u.coeffs, atol=1e-14)

    @pytest.mark.parametrize("N", [8, 16, 32])
    def test_hermitian_and_skew(self, rng, N):
        for _ in range(100):
            u = random_state(rng, N, norm=rng.uniform(0.1, 2))
            for sign in SIGNS:
                m = lax_matrices(u, sign)
                assert np.abs(m.L - m.L.conj().T).max() <= 1e-12 * (1 + np.abs(m.L).max())
                assert np.abs(m.B + m.B.conj().T).max() <= 1e-12 * (1 + np.abs(m.B).max())
                assert m.source_norm == pytest.approx(l2_norm(u))


class TestAssembleB:
    def test_zero(self):
        assert np.array_equal(assemble_B(HardyState(np.zeros(5))), np.zeros((5, 5)))

    @pytest.mark.parametrize("sign", SIGNS)
    def test_constant(self, sign):
        c = 0.7j
        u = single_mode(0, c, 5)
        assert np.allclose(assemble_B(u, sign), 1j * abs(c) ** 4 * np.eye(6))
        assert np.allclose(assemble_B_columnwise(u, sign), 1j * abs(c) ** 4 * np.eye(6))

    @pytest.mark.parametrize("sign", SIGNS)
    def test_columnwise(self, rng, sign):
        u = random_state(rng, 12)
        assert np.allclose(assemble_B(u, sign), assemble_B_columnwise(u, sign), atol=1e-11)

    def test_skew_interior_n16(self, rng):
        u = random_state(rng, 16)
        B = assemble_B_columnwise(u)
        assert np.abs((B + B.conj().T)[:15, :15]).max() <= 1e-10

    def test_signs_flip_first_bracket(self, rng):
        u = random_state(rng, 9)
        Bf, Bd = assemble_B(u, "focusing"), assemble_B(u, "defocusing")
        K = assemble_L(u, "defocusing") - np.diag(np.arange(10))
        assert np.allclose(Bf + Bd, 2j * K @ K)


class TestSpectrum:
    def test_diagonal(self):
        s = spectrum(np.diag([0.0, 1, 2]))
        assert np.allclose(s.eigenvalues, [0, 1, 2])
        assert np.allclose(s.eigenvectors, np.eye(3))
        assert s.phase_convention == "max-entry-real-positive"

    def test_constant(self):
        u = single_mode(0, 0.5, 8)
        assert np.allclose(spectrum(assemble_L(u)).eigenvalues, np.arange(9) - 0.25)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianError):
            spectrum(np.array([[0, 1], [0, 0]], complex))

    def test_invariants(self, rng):
        u = random_state(rng, 20)
        L = assemble_L(u)
        s = spectrum(L)
        V, lam = s.eigenvectors, s.eigenvalues
        assert np.all(np.diff(lam) >= 0)
        res = np.linalg.norm(L @ V - V * lam, axis=0)
        assert np.all(res <= 1e-10 * (1 + np.abs(lam)))
        assert np.abs(V.conj().T @ V - np.eye(21)).max() <= 1e-12
        idx = np.argmax(np.abs(V), axis=0)
        piv = V[idx, np.arange(21)]
        assert np.all(np.abs(piv.imag) <= 1e-15) and np.all(piv.real > 0)

    def test_phase_tie_goes_to_lowest_index(self):
        L = np.array([[0, 1], [1, 0]], complex)
        V = spectrum(L).eigenvectors
        assert np.all(V[0].real > 0) and np.all(V[0].imag == 0)

    def test_weyl_bound(self):
        u = single_mode(1, 0.2, 32)
        lam = spectrum(assemble_L(u)).eigenvalues
        assert np.all(lam <= np.arange(33) + 1e-12)

    def test_degenerate_cluster_projector(self):
        L = np.diag([0.0, 1.0, 1.0, 2.0])
        s = spectrum(L)
        P = cluster_projector(s, 1)
        assert np.allclose(P, np.diag([0, 1, 1, 0]))
        assert np.allclose(cluster_projector(s, 0), np.diag([1, 0, 0, 0]))


class TestQuadraticForm:
    def test_zero_u(self, rng):
        f = random_state(rng, 6)
        assert quadratic_form(HardyState(np.zeros(7)), f, f) == pytest.approx(
            inner_product(derivative(f), f))

    def test_on_one(self, rng):
        u = random_state(rng, 6)
        one = single_mode(0, 1, 6)
        assert quadratic_form(u, one, one) == pytest.approx(-abs(u.coeffs[0]) ** 2)

    @pytest.mark.parametrize("sign", SIGNS)
    def test_matches_matrix(self, rng, sign):
        N = 12
        u = random_state(rng, N)
        f, g = random_state(rng, N, support=N - 1), random_state(rng, N, support=N - 1)
        L = assemble_L(u, sign)
        assert quadratic_form(u, f, g, sign) == pytest.approx(np.vdot(g.coeffs, L @ f.coeffs),
                                                            abs=1e-10)

    def test_lower_bound(self, rng):
        for _ in range(200):
            N = int(rng.integers(4, 30))
            u = random_state(rng, N, norm=rng.uniform(0, 0.99))
            f = random_state(rng, N)
            nu = l2_norm(u) ** 2
            dff = inner_product(derivative(f), f).real
            assert quadratic_form(u, f, f).real >= (1 - nu) * dff - nu * l2_norm(f) ** 2 - 1e-10


class TestCommutators:
    def test_zero(self):
        rep = commutator_checks(HardyState(np.zeros(9)))
        assert rep.L_residual == 0.0 and rep.B_residual == 0.0

    @pytest.mark.parametrize("sign", SIGNS)
    def test_random(self, rng, sign):
        for _ in range(20):
            u = random_state(rng, 24, support=12)
            rep = commutator_checks(u, sign)
            assert rep.L_residual <= 1e-10
            assert rep.B_residual <= 1e-9

    def test_wrong_sign_detected(self, rng):
        u = random_state(rng, 24, support=12, norm=0.8)
        rep = commutator_checks(u, "focusing", b_assembler=lambda v, s: assemble_B(v, "defocusing"))
        assert rep.B_residual > 1e-3


class TestLaxResidual:
    def test_zero_trajectory(self):
        z = HardyState(np.zeros(9))
        assert lax_residual([z, z, z], 1e-3) == 0.0

    def test_constant_trajectory(self):
        u = single_mode(0, 0.4 + 0.1j, 16)
        assert lax_residual([u, u, u], 1e-3) <= 1e-12

    def test_needs_three(self):
        u = single_mode(0, 1, 4)
        with pytest.raises(ValueError):
            lax_residual([u, u], 1e-3)

    def test_reformulation_small(self):
        u0 = HardyState.from_dict({0: 0.2, 1: 0.3}, 32)
        dt = 1e-4
        tr = evolve_direct(u0, FlowConfig(N=32, t_samples=[0, dt, 2 * dt], dt=dt))
        assert reformulation_residual(*tr.states, dt) <= 1e-6
