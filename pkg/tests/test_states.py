"""Tests for state construction, noise, phase handling, and MPS utilities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidest import f2, states
from fidest.errors import CapExceededError, DimensionError


class TestStateVector:
    def test_norm_check(self):
        from fidest.errors import NumericalHealthError
        with pytest.raises(NumericalHealthError):
            states.StateVector(1, np.array([1.0, 1.0], dtype=complex))

    def test_normalized_constructor(self):
        psi = states.StateVector.normalized([3, 4])
        assert np.allclose(psi.amplitudes, [0.6, 0.8])

    def test_projector_is_rank_one(self):
        psi = states.haar_random(2, np.random.default_rng(0))
        rho = psi.projector()
        assert np.allclose(rho, rho.conj().T)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.allclose(rho @ rho, rho)


class TestPhaseFunction:
    def test_table_roundtrip(self):
        rng = np.random.default_rng(1)
        table = rng.uniform(0, 2 * np.pi, 8)
        phase = states.PhaseFunction.from_table(3, table)
        assert np.allclose(phase.table(), table)

    def test_monomials_single_edge(self):
        # One cubic monomial {1,2,3}: phase pi exactly when x1=x2=x3=1.
        phase = states.PhaseFunction.from_polynomial(3, [(1, 2, 3)])
        table = phase.table()
        want = np.zeros(8)
        want[0b111] = np.pi
        assert np.allclose(table, want)

    def test_is_real(self):
        real = states.PhaseFunction.from_polynomial(2, [(1, 2)])
        assert real.is_real()
        generic = states.PhaseFunction.from_table(1, np.array([0.0, 1.3]))
        assert not generic.is_real()

    def test_callable_source(self):
        phase = states.PhaseFunction.from_callable(
            2, lambda x: (0.5 * x) % (2 * np.pi))
        assert phase.evaluate(3) == pytest.approx(1.5)


class TestPhaseStates:
    def test_phase_state_amplitudes(self):
        phase = states.PhaseFunction.from_polynomial(2, [(1, 2)])
        psi = states.phase_state(phase)
        assert np.allclose(psi.amplitudes, np.array([1, 1, 1, -1]) / 2)

    def test_apply_phase_matches_diagonal_unitary(self):
        rng = np.random.default_rng(2)
        table = rng.uniform(0, 2 * np.pi, 8)
        phase = states.PhaseFunction.from_table(3, table)
        psi = states.haar_random(3, rng)
        out = states.apply_phase(phase, psi)
        assert np.allclose(out.amplitudes, np.exp(1j * table) * psi.amplitudes)

    def test_phase_strip(self):
        rng = np.random.default_rng(3)
        psi = states.haar_random(3, rng)
        stripped, phi = states.phase_strip(psi)
        assert np.allclose(stripped.amplitudes, np.abs(psi.amplitudes))
        rebuilt = states.apply_phase(phi, stripped)
        assert np.allclose(rebuilt.amplitudes, psi.amplitudes)

    def test_phase_strip_preserves_coefficient_magnitude_distribution(self):
        # Stripping phases cannot change |amplitudes|, hence the stripped
        # state is again normalized.
        psi = states.haar_random(4, np.random.default_rng(4))
        stripped, _ = states.phase_strip(psi)
        assert np.linalg.norm(stripped.amplitudes) == pytest.approx(1.0)


class TestHypergraphState:
    def test_complete3_small(self):
        n = 4
        edges = states.complete_3_hypergraph_edges(n)
        assert len(edges) == 4  # C(4,3)
        psi, phase = states.hypergraph_state(n, edges)
        # Amplitudes are +-2^{-n/2}; sign flips iff x has an odd number of
        # all-ones triples among its support.
        for x in range(1 << n):
            w = bin(x).count("1")
            parity = (w * (w - 1) * (w - 2) // 6) & 1
            want = (-1) ** parity / 4.0
            assert psi.amplitudes[x] == pytest.approx(want)

    def test_phase_is_real(self):
        psi, phase = states.hypergraph_state(3, [(1, 2, 3), (1, 2)])
        assert phase.is_real()
        assert np.allclose(np.abs(psi.amplitudes), 2 ** -1.5)


class TestDicke:
    def test_n2_k1_is_bell_like(self):
        psi = states.dicke_state(2, 1)
        assert np.allclose(psi.amplitudes,
                           np.array([0, 1, 1, 0]) / np.sqrt(2))

    def test_support_weights(self):
        psi = states.dicke_state(6, 2)
        for x in range(64):
            amp = psi.amplitudes[x]
            if bin(x).count("1") == 2:
                assert amp == pytest.approx(1 / np.sqrt(15))
            else:
                assert amp == 0.0


class TestDepolarize:
    def test_mixture_weights(self):
        psi = states.haar_random(2, np.random.default_rng(5))
        mix = states.depolarize(psi, 0.2)
        assert mix.components[0][0] == pytest.approx(0.8)
        assert sum(w for w, _ in mix.components) == pytest.approx(1.0)

    def test_to_dense_matches_channel(self):
        rng = np.random.default_rng(6)
        psi = states.haar_random(2, rng)
        p = 0.3
        rho = states.depolarize(psi, p).to_dense().matrix
        want = (1 - p) * psi.projector() + p * np.eye(4) / 4
        assert np.allclose(rho, want)

    def test_fidelity_inversion(self):
        n, fid = 7, 0.8955
        p = states.depolarizing_p_for_fidelity(n, fid)
        assert (1 - p) + p / (1 << n) == pytest.approx(fid)

    def test_exact_fidelity_of_depolarized(self):
        rng = np.random.default_rng(7)
        psi = states.haar_random(3, rng)
        mix = states.depolarize(psi, 0.25)
        want = 0.75 + 0.25 / 8
        assert states.exact_fidelity(mix, psi) == pytest.approx(want)
        assert states.exact_fidelity(mix.to_dense(), psi) == pytest.approx(want)


class TestMPS:
    def test_product_state_chi1(self):
        rng = np.random.default_rng(8)
        mps = states.random_real_mps(4, 1, rng)
        psi = states.mps_to_statevector(mps)
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-9)

    def test_amplitude_matches_dense(self):
        rng = np.random.default_rng(9)
        mps = states.random_real_mps(5, 3, rng)
        psi = states.mps_to_statevector(mps)
        for x in (0, 7, 19, 31):
            assert mps.amplitude(x) == pytest.approx(
                psi.amplitudes[x].real, abs=1e-12)

    def test_norm_squared(self):
        rng = np.random.default_rng(10)
        mps = states.random_real_mps(6, 4, rng)
        assert mps.norm_squared() == pytest.approx(1.0, abs=1e-9)

    def test_dense_cap(self):
        rng = np.random.default_rng(11)
        mps = states.random_real_mps(13, 2, rng)
        with pytest.raises(CapExceededError):
            states.mps_to_statevector(mps)


class TestFrames:
    def test_frame_gates_unitary(self):
        for label in ("Z", "X", "Y"):
            g = states._FRAME_GATES[label]
            assert np.allclose(g @ g.conj().T, np.eye(2))

    def test_x_frame_diagonalizes_x(self):
        # Rotating into the X frame maps X eigenstates onto computational ones.
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        g = states._FRAME_GATES["X"]
        assert np.allclose(g @ X @ g.conj().T, np.diag([1, -1]))

    def test_y_frame_diagonalizes_y(self):
        Y = np.array([[0, -1j], [1j, 0]])
        g = states._FRAME_GATES["Y"]
        assert np.allclose(g @ Y @ g.conj().T, np.diag([1, -1]))

    def test_rotate_to_frame_matches_kron(self):
        rng = np.random.default_rng(12)
        psi = states.haar_random(3, rng)
        labels = ("X", "Y", "Z")
        u = np.eye(1, dtype=complex)
        for lab in labels:
            u = np.kron(u, states._FRAME_GATES[lab])
        assert np.allclose(states.rotate_to_frame(psi.amplitudes, labels),
                           u @ psi.amplitudes)


class TestMeasurement:
    def test_born_probabilities_sum(self):
        psi = states.haar_random(3, np.random.default_rng(13))
        probs = states.born_probabilities(psi, ("Z", "X", "Y"))
        assert probs.sum() == pytest.approx(1.0)
        assert (probs >= 0).all()

    def test_measure_statistics(self):
        psi = states.StateVector.normalized([1, 0, 0, 1])
        rng = np.random.default_rng(14)
        outcomes = [states.measure_computational(psi, ("Z", "Z"), rng) for _ in range(2000)]
        counts = np.bincount(outcomes, minlength=4)
        assert counts[1] == 0 and counts[2] == 0
        assert abs(counts[0] - 1000) < 120

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_mixture_sampling_traces_out(self, seed):
        rng = np.random.default_rng(seed)
        psi = states.haar_random(2, rng)
        mix = states.depolarize(psi, 0.5)
        comp = states.sample_component(mix, rng)
        assert np.linalg.norm(comp.amplitudes) == pytest.approx(1.0)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        psi = states.haar_random(3, np.random.default_rng(15))
        path = tmp_path / "state.json"
        states.save_state(psi, path)
        back = states.load_state(path)
        assert back.n == psi.n
        assert np.allclose(back.amplitudes, psi.amplitudes)
