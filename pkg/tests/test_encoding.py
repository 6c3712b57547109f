import types

import numpy as np
import pytest

import qwavesim as q
from qwavesim.encoding import next_power_of_two
from qwavesim.errors import EncodingError, NumericalError

from conftest import build_acoustic_1d, build_maxwell


def _toy_system(a_dense, b_diag):
    diag = np.asarray(b_diag, dtype=float)
    return types.SimpleNamespace(
        A=q.SparseOperator.from_dense(a_dense),
        B=q.SparseOperator.diagonal(diag),
        b_diagonal=lambda: diag,
    )


def test_unit_rotation_maps_to_pauli_y_form():
    sys2 = _toy_system([[0.0, 1.0], [-1.0, 0.0]], [1.0, 1.0])
    h = q.build_hamiltonian(sys2).matrix.toarray()
    np.testing.assert_array_equal(h, [[0.0, 1.0j], [-1.0j, 0.0]])


def test_energy_weight_rescales_coupling():
    # B = diag(4, 1) halves the off-diagonal through B^{-1/2} on both sides
    sys2 = _toy_system([[0.0, 1.0], [-1.0, 0.0]], [4.0, 1.0])
    h = q.build_hamiltonian(sys2).matrix.toarray()
    np.testing.assert_allclose(h, [[0.0, 0.5j], [-0.5j, 0.0]], atol=1e-15)


def test_encode_three_four_gives_unit_amplitudes_scale_five():
    state = q.encode(np.array([3.0, 4.0]), np.array([1.0, 1.0]))
    assert state.scale == 5.0
    np.testing.assert_array_equal(state.amplitudes, [0.6, 0.8])


def test_encode_applies_weight_before_normalizing():
    state = q.encode(np.array([1.0, 1.0]), np.array([9.0, 1.0]))
    assert state.scale == pytest.approx(np.sqrt(10.0), abs=1e-15)
    np.testing.assert_allclose(
        state.amplitudes, np.array([3.0, 1.0]) / np.sqrt(10.0), atol=1e-15
    )


def test_scale_squared_is_the_energy_quadrature(rng):
    pair = build_acoustic_1d(n=16, rho=1.8, c=0.6)
    b_diag = pair.b_diagonal()
    for _ in range(20):
        w = rng.normal(size=pair.n_total)
        state = q.encode(w, pair)
        assert q.energy(state) == pytest.approx(w @ (b_diag * w), rel=1e-12)


def test_zero_field_is_the_null_state():
    state = q.encode(np.zeros(5), np.ones(5))
    assert state.is_null
    assert q.energy(state) == 0.0
    with pytest.raises(EncodingError):
        q.decode(state, np.ones(5))


def test_padding_is_exact_zero_up_to_power_of_two():
    pair = build_acoustic_1d(n=16)  # 31 unknowns -> 32-dim register
    state = q.encode(np.ones(pair.n_total), pair)
    assert state.layout.block_dim == 32
    assert state.layout.num_physical == 31
    assert np.all(state.amplitudes[31:] == 0.0)
    assert state.n_qubits == 5


def test_decode_round_trip(rng):
    pair = build_acoustic_1d(n=16, rho=2.4, c=0.9)
    for _ in range(10):
        w = rng.normal(size=pair.n_total)
        back = q.decode(q.encode(w, pair), pair)
        np.testing.assert_allclose(back, w, rtol=1e-12, atol=1e-14)


def test_decode_refuses_nonzero_padding():
    layout = q.StateLayout(num_physical=3, block_dim=4)
    amps = np.array([0.5, 0.5, 0.5, 0.5], dtype=complex)
    state = q.QuantumRegisterState(amplitudes=amps, scale=1.0, layout=layout)
    with pytest.raises(EncodingError):
        q.decode(state, np.ones(3))


def test_decode_refuses_genuinely_complex_states():
    layout = q.StateLayout(num_physical=2, block_dim=2)
    amps = np.array([1.0, 1.0j]) / np.sqrt(2.0)
    state = q.QuantumRegisterState(amplitudes=amps, scale=1.0, layout=layout)
    with pytest.raises(EncodingError):
        q.decode(state, np.ones(2))


def test_spectrum_is_symmetric_about_zero():
    for pair in (build_acoustic_1d(n=12, rho=1.3, c=0.8), build_maxwell(n=12)):
        evals, _ = q.build_hamiltonian(pair).eigendecomposition()
        np.testing.assert_allclose(np.sort(evals), -np.sort(-evals)[::-1], atol=1e-10)


def test_homogeneous_metadata_values():
    pair = build_acoustic_1d(n=16, rho=1.0, c=1.0)  # dx = 1/15, B = I
    ham = q.build_hamiltonian(pair)
    assert ham.maxnorm == pytest.approx(15.0, rel=1e-14)
    assert ham.sparsity == 2
    assert ham.hermiticity_defect() == 0.0
    assert ham.dim == pair.n_total


def test_non_antisymmetric_generator_is_refused():
    sys2 = _toy_system([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0])
    with pytest.raises(NumericalError):
        q.build_hamiltonian(sys2)


def test_layout_validation():
    with pytest.raises(EncodingError):
        q.StateLayout(num_physical=5, block_dim=4)
    with pytest.raises(EncodingError):
        q.StateLayout(num_physical=3, block_dim=3)
    with pytest.raises(EncodingError):
        q.StateLayout(num_physical=3, block_dim=4, arity=3)


def test_augmented_layout_doubles_the_register():
    layout = q.StateLayout(num_physical=3, block_dim=4, arity=2, augmented=True)
    assert layout.total_dim == 16
    assert layout.n_qubits == 4
    assert layout.n_data_qubits == 2
    assert layout.n_substate_qubits == 1


def test_block_extracts_sub_states():
    layout = q.StateLayout(num_physical=4, block_dim=4, arity=2)
    amps = np.zeros(8, dtype=complex)
    amps[1] = 1.0 / np.sqrt(2.0)
    amps[6] = 1.0 / np.sqrt(2.0)
    state = q.QuantumRegisterState(amplitudes=amps, scale=2.0, layout=layout)
    np.testing.assert_array_equal(state.block(0), amps[:4])
    np.testing.assert_array_equal(state.block(1), amps[4:])
    with pytest.raises(EncodingError):
        state.block(2)


def test_state_norm_is_validated():
    layout = q.StateLayout(num_physical=2, block_dim=2)
    with pytest.raises(EncodingError):
        q.QuantumRegisterState(
            amplitudes=np.array([1.0, 1.0]), scale=1.0, layout=layout
        )
    with pytest.raises(EncodingError):
        q.QuantumRegisterState(
            amplitudes=np.array([1.0, 0.0]), scale=0.0, layout=layout
        )


def test_next_power_of_two():
    assert [next_power_of_two(k) for k in (1, 2, 3, 31, 32, 33)] == [
        1,
        2,
        4,
        32,
        32,
        64,
    ]
