import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqml.statevector import (
    CapacityError,
    InvalidGateError,
    PauliAxis,
    PauliString,
    ShapeError,
    StateVector,
    apply_cnot,
    apply_rotation,
    expectation,
    init_zero_state,
)

from oracles import cnot_full, pauli_full, rotation, rotation_full


def basis_state(bits: str) -> StateVector:
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1
    return StateVector(len(bits), amps)


def random_state(n, rng):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return StateVector(n, v / np.linalg.norm(v))


class TestInitZeroState:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_zero_state(self, n):
        s = init_zero_state(n)
        expected = np.zeros(2**n)
        expected[0] = 1
        np.testing.assert_array_equal(s.amplitudes, expected)

    @pytest.mark.parametrize("n", [0, 25, -1])
    def test_capacity(self, n):
        with pytest.raises(CapacityError):
            init_zero_state(n)


class TestRotation:
    @pytest.mark.parametrize("angle", [0.0, 0.3, math.pi, -2.1])
    def test_z_rotation_keeps_z_expectation(self, angle):
        s = apply_rotation(init_zero_state(1), 0, "Z", angle)
        assert expectation(s, "Z") == pytest.approx(1.0, abs=1e-15)

    def test_y_pi_flips(self):
        s = apply_rotation(init_zero_state(1), 0, PauliAxis.Y, math.pi)
        np.testing.assert_allclose(s.amplitudes, rotation("Y", math.pi) @ [1, 0], atol=1e-15)
        assert expectation(s, "Z") == pytest.approx(-1.0, abs=1e-15)

    @pytest.mark.parametrize("axis", ["X", "Y", "Z"])
    def test_zero_angle_is_identity(self, axis):
        s = random_state(3, np.random.default_rng(1))
        out = apply_rotation(s, 1, axis, 0.0)
        np.testing.assert_array_equal(out.amplitudes, s.amplitudes)

    def test_identity_axis_rejected(self):
        with pytest.raises(InvalidGateError):
            apply_rotation(init_zero_state(2), 0, "I", 0.1)

    def test_qubit_out_of_range(self):
        with pytest.raises(IndexError):
            apply_rotation(init_zero_state(2), 2, "X", 0.1)

    def test_qubit_zero_is_most_significant(self):
        s = apply_rotation(init_zero_state(2), 0, "Y", math.pi)
        assert abs(s.amplitudes[2]) == pytest.approx(1.0)


class TestCNOT:
    def test_control_zero_no_op(self):
        s = apply_cnot(basis_state("00"), 0, 1)
        np.testing.assert_array_equal(s.amplitudes, basis_state("00").amplitudes)

    def test_involution(self):
        s = random_state(3, np.random.default_rng(2))
        twice = apply_cnot(apply_cnot(s, 2, 0), 2, 0)
        np.testing.assert_array_equal(twice.amplitudes, s.amplitudes)

    def test_bell_pair(self):
        v = np.array([1, 0, 1, 0], dtype=complex) / math.sqrt(2)
        out = apply_cnot(StateVector(2, v), 0, 1)
        oracle = cnot_full(0, 1, 2) @ v
        np.testing.assert_allclose(out.amplitudes, oracle, atol=1e-15)
        np.testing.assert_allclose(out.amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-15)

    def test_same_qubit_rejected(self):
        with pytest.raises(InvalidGateError):
            apply_cnot(init_zero_state(2), 1, 1)


class TestExpectation:
    def test_all_z_on_zero(self):
        assert expectation(init_zero_state(4), "ZZZZ") == 1.0

    def test_all_z_one_flipped(self):
        assert expectation(basis_state("0001"), "ZZZZ") == -1.0

    def test_bell_zz(self):
        v = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        oracle = np.real(v.conj() @ pauli_full("ZZ") @ v)
        assert expectation(StateVector(2, v), "ZZ") == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            expectation(init_zero_state(3), "ZZ")

    @pytest.mark.parametrize("obs", ["XYZ", "YYI", "IXI", "III", "ZXY"])
    def test_general_pauli_strings_match_dense(self, obs):
        s = random_state(3, np.random.default_rng(3))
        oracle = np.real(s.amplitudes.conj() @ pauli_full(obs) @ s.amplitudes)
        assert expectation(s, obs) == pytest.approx(oracle, abs=1e-12)

    def test_pauli_string_norm(self):
        for obs in ["ZZZZ", "IIII", "XYZI"]:
            p = PauliString.parse(obs)
            assert p.spectral_norm == 1.0
            assert np.linalg.norm(p.matrix(), 2) == pytest.approx(1.0)


gate_strategy = st.one_of(
    st.tuples(st.just("rot"), st.integers(0, 5), st.sampled_from("XYZ"), st.floats(-10, 10)),
    st.tuples(st.just("cnot"), st.integers(0, 5), st.integers(0, 5)),
)


def _apply(state, gate, n):
    if gate[0] == "rot":
        return apply_rotation(state, gate[1] % n, gate[2], gate[3])
    c, t = gate[1] % n, gate[2] % n
    if c == t:
        return state
    return apply_cnot(state, c, t)


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.lists(gate_strategy, max_size=200))
    def test_norm_preserved(self, n, gates):
        s = init_zero_state(n)
        for g in gates:
            s = _apply(s, g, n)
        assert abs(s.norm_squared() - 1) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2), st.sampled_from("XYZ"), st.floats(-7, 7), st.floats(-7, 7), st.integers(0, 10**6))
    def test_rotation_composition(self, q, axis, a, b, seed):
        s = random_state(3, np.random.default_rng(seed))
        two = apply_rotation(apply_rotation(s, q, axis, a), q, axis, b)
        one = apply_rotation(s, q, axis, a + b)
        np.testing.assert_allclose(two.amplitudes, one.amplitudes, atol=1e-12, rtol=0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.text("IXYZ", min_size=4, max_size=4), st.integers(0, 10**6))
    def test_expectation_bounded(self, n, obs, seed):
        s = random_state(n, np.random.default_rng(seed))
        val = expectation(s, obs[:n])
        assert -1 - 1e-12 <= val <= 1 + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.lists(gate_strategy, min_size=1, max_size=20), st.integers(0, 10**6))
    def test_matches_dense_matrices(self, n, gates, seed):
        s = random_state(n, np.random.default_rng(seed))
        v = s.amplitudes.copy()
        for g in gates:
            s = _apply(s, g, n)
            if g[0] == "rot":
                v = rotation_full(g[2], g[3], g[1] % n, n) @ v
            elif g[1] % n != g[2] % n:
                v = cnot_full(g[1] % n, g[2] % n, n) @ v
            np.testing.assert_allclose(s.amplitudes, v, atol=1e-12, rtol=0)
