"""Tests for the l_2a phase-point samplers.

Every specialized sampler is checked against the exact enumeration law
p(a) proportional to |c_a|^(2 alpha), both for the dense distribution()
(total variation) and for per-point coefficients.
"""

import time

import numpy as np
import pytest

from fidest import samplers, states
from fidest.errors import CapExceededError, NumericalHealthError
from fidest.f2 import PauliPoint, pauli_coefficients


def exact_law(psi, alpha):
    c = np.abs(pauli_coefficients(psi).values) ** (2.0 * alpha)
    c[np.abs(c) < 1e-300] = 0.0
    return c / c.sum()


def tv(p, q):
    return 0.5 * np.abs(p - q).sum()


def empirical(sampler, shots, seed):
    rng = np.random.default_rng(seed)
    counts = np.zeros(1 << (2 * sampler.n))
    for _ in range(shots):
        counts[sampler.draw(rng).index] += 1
    return counts / shots


class TestExactSampler:
    def test_distribution_matches_law(self):
        psi = states.haar_random(3, np.random.default_rng(0))
        for alpha in (0.5, 1.0):
            s = samplers.ExactSampler(pauli_coefficients(psi), alpha)
            assert tv(s.distribution(), exact_law(psi, alpha)) < 1e-12

    def test_norm_sum_half_is_l1(self):
        psi = states.haar_random(3, np.random.default_rng(1))
        c = pauli_coefficients(psi)
        s = samplers.ExactSampler(c, 0.5)
        assert s.norm_sum == pytest.approx(np.abs(c.values).sum())

    def test_draw_statistics(self):
        psi = states.dicke_state(4, 1)
        s = samplers.ExactSampler(pauli_coefficients(psi), 0.5)
        emp = empirical(s, 4000, seed=2)
        assert tv(emp, s.distribution()) < 0.05


class TestUniformXSampler:
    def test_matches_phase_state_law(self):
        phase = states.PhaseFunction.from_table(
            3, np.random.default_rng(3).uniform(0, 2 * np.pi, 8))
        psi = states.phase_state(phase)
        s = samplers.UniformXSampler(3, alpha=0.5)
        # A phase state's stripped part is |+>^n whose only nonzero
        # coefficients are the X-type ones, all equal to 2^-n.
        stripped, _ = states.phase_strip(psi)
        assert tv(s.distribution(), exact_law(stripped, 0.5)) < 1e-12

    def test_coefficient(self):
        s = samplers.UniformXSampler(2)
        assert s.coefficient(PauliPoint(2, 0b11, 0)) == 0.25
        assert s.coefficient(PauliPoint(2, 0b11, 0b01)) == 0.0

    def test_norm_sum(self):
        s = samplers.UniformXSampler(4, alpha=0.5)
        assert s.norm_sum == pytest.approx(1.0)


class TestDickeSampler:
    @pytest.mark.parametrize("n,k", [(2, 1), (4, 2), (5, 2), (6, 3)])
    def test_distribution_matches_enumeration(self, n, k):
        s = samplers.DickeSampler(n, k)
        want = exact_law(states.dicke_state(n, k), 0.5)
        assert tv(s.distribution(), want) < 1e-9

    @pytest.mark.parametrize("n,k", [(4, 2), (6, 3)])
    def test_coefficients_match_enumeration(self, n, k):
        s = samplers.DickeSampler(n, k)
        c = pauli_coefficients(states.dicke_state(n, k))
        for idx in range(1 << (2 * n)):
            a = PauliPoint.from_index(n, idx)
            assert s.coefficient(a) == pytest.approx(c.value(a), abs=1e-12)

    def test_norm_sum_is_l1(self):
        for n, k in [(4, 2), (6, 2), (8, 4)]:
            s = samplers.DickeSampler(n, k)
            want = np.abs(pauli_coefficients(states.dicke_state(n, k))
                          .values).sum()
            assert s.norm_sum == pytest.approx(want, abs=1e-9)

    def test_draw_statistics(self):
        s = samplers.DickeSampler(3, 1)
        emp = empirical(s, 6000, seed=4)
        assert tv(emp, s.distribution()) < 0.05

    def test_scales_past_dense_cap(self):
        # Class-table construction works far beyond the dense 2^2n regime.
        s = samplers.DickeSampler(40, 10)
        a = s.draw(np.random.default_rng(5))
        assert a.n == 40
        assert abs(s.coefficient(a)) > 0

    def test_polynomial_scaling(self):
        # Setup time should grow polynomially: going n -> 2n must not
        # blow up by anything near the 16x of a dense 4^n table.
        samplers.DickeSampler(20, 5)  # warm the caches' code paths
        t0 = time.perf_counter()
        samplers.DickeSampler(30, 7)
        t1 = time.perf_counter()
        samplers.DickeSampler(60, 14)
        t2 = time.perf_counter()
        assert (t2 - t1) < 200 * max(t1 - t0, 1e-4)


class TestBellCircuitSampler:
    def test_distribution_matches_l2_law(self):
        rng = np.random.default_rng(6)
        psi = states.haar_random(3, rng)
        stripped, _ = states.phase_strip(psi)
        s = samplers.BellCircuitSampler(stripped)
        assert tv(s.distribution(), exact_law(stripped, 1.0)) < 1e-9

    def test_hypergraph_state(self):
        psi, _ = states.hypergraph_state(
            4, states.complete_3_hypergraph_edges(4))
        s = samplers.BellCircuitSampler(psi)
        assert tv(s.distribution(), exact_law(psi, 1.0)) < 1e-9

    def test_rejects_complex_state(self):
        t = states.StateVector.normalized([1, np.exp(1j * np.pi / 4)])
        with pytest.raises(NumericalHealthError):
            samplers.BellCircuitSampler(t)

    def test_cap(self):
        big = states.StateVector(13, np.eye(1 << 13, dtype=complex)[0])
        with pytest.raises(CapExceededError):
            samplers.BellCircuitSampler(big)

    def test_draw_statistics(self):
        stripped, _ = states.phase_strip(
            states.haar_random(2, np.random.default_rng(7)))
        s = samplers.BellCircuitSampler(stripped)
        emp = empirical(s, 6000, seed=8)
        assert tv(emp, s.distribution()) < 0.06


class TestFWHTRows:
    def test_matches_per_row_transform(self):
        from fidest.f2 import fwht
        rng = np.random.default_rng(9)
        mat = rng.standard_normal((8, 5))
        got = samplers.fwht_rows(mat)
        for col in range(5):
            assert np.allclose(got[:, col], fwht(mat[:, col]))


class TestMPSL2Sampler:
    @pytest.mark.parametrize("n,chi", [(3, 2), (4, 3), (5, 4)])
    def test_distribution_matches_dense(self, n, chi):
        mps = states.random_real_mps(n, chi, np.random.default_rng(10))
        psi = states.mps_to_statevector(mps)
        s = samplers.MPSL2Sampler(mps)
        assert tv(s.distribution(), exact_law(psi, 1.0)) < 1e-9

    def test_coefficients_match_dense(self):
        n, chi = 4, 3
        mps = states.random_real_mps(n, chi, np.random.default_rng(11))
        c = pauli_coefficients(states.mps_to_statevector(mps))
        s = samplers.MPSL2Sampler(mps)
        for idx in range(1 << (2 * n)):
            a = PauliPoint.from_index(n, idx)
            assert s.coefficient(a) == pytest.approx(c.value(a), abs=1e-9)

    def test_draw_statistics(self):
        mps = states.random_real_mps(3, 2, np.random.default_rng(12))
        s = samplers.MPSL2Sampler(mps)
        emp = empirical(s, 4000, seed=13)
        assert tv(emp, s.distribution()) < 0.07

    def test_point_probability_telescopes(self):
        mps = states.random_real_mps(4, 2, np.random.default_rng(14))
        s = samplers.MPSL2Sampler(mps)
        dist = s.distribution()
        for idx in (0, 17, 100, 255):
            a = PauliPoint.from_index(4, idx)
            assert s.point_probability(a) == pytest.approx(
                dist[idx], abs=1e-9)

    def test_large_instance_runs(self):
        mps = states.random_real_mps(12, 8, np.random.default_rng(15))
        s = samplers.MPSL2Sampler(mps)
        a = s.draw(np.random.default_rng(16))
        assert a.n == 12
        # probability of the drawn point should be positive
        assert s.point_probability(a) > 0
