import numpy as np
import pytest

import qwavesim as q
from qwavesim.errors import GridError, MaterialError

from conftest import build_acoustic_1d, build_acoustic_2d, build_maxwell


def test_1d_grid_counts_and_spacing():
    grid = q.build_grid([(0.0, 3.0)], [4])
    assert grid.spacing == (1.0,)
    assert grid.n_scalar == 4
    assert grid.n_flux == (3,)


def test_2d_grid_counts():
    grid = q.build_grid([(0.0, 1.0), (0.0, 1.0)], [4, 4])
    assert grid.n_scalar == 16
    assert grid.n_flux == (12, 12)


def test_2d_linearization_is_x_fastest():
    grid = q.build_grid([(0.0, 1.0), (0.0, 2.0)], [2, 3])
    seen = set()
    for j in range(3):
        for i in range(2):
            k = grid.scalar_index(i, j)
            assert k == i + j * 2
            assert grid.scalar_multi_index(k) == (i, j)
            seen.add(k)
    assert seen == set(range(6))


def test_flux_points_sit_at_midpoints():
    grid = q.build_grid([(0.0, 3.0)], [4])
    np.testing.assert_allclose(grid.flux_coords[0][:, 0], [0.5, 1.5, 2.5])


def test_degenerate_grid_refused():
    with pytest.raises(GridError):
        q.build_grid([(0.0, 0.0)], [4])
    with pytest.raises(GridError):
        q.build_grid([(0.0, 1.0)], [1])


def test_gradient_of_constant_field_is_zero():
    grid = q.build_grid([(0.0, 2.0)], [3])
    grad, _ = q.build_gradient_divergence(grid)
    np.testing.assert_array_equal(grad.apply(np.array([5.0, 5.0, 5.0])), [0.0, 0.0])


def test_gradient_stencil_by_hand():
    # (u_{i+1} - u_i) / dx with dx = 1
    grid = q.build_grid([(0.0, 2.0)], [3])
    grad, _ = q.build_gradient_divergence(grid)
    np.testing.assert_array_equal(grad.apply(np.array([0.0, 1.0, 2.0])), [1.0, 1.0])


def test_gradient_exact_on_linear_functions_2d():
    grid = q.build_grid([(0.0, 1.0), (0.0, 1.0)], [5, 7])
    grad, _ = q.build_gradient_divergence(grid)
    u = 2.0 * grid.scalar_coords[:, 0] - 3.0 * grid.scalar_coords[:, 1] + 0.25
    out = grad.apply(u)
    nx_mid = grid.n_flux[0]
    np.testing.assert_allclose(out[:nx_mid], 2.0, atol=1e-13)
    np.testing.assert_allclose(out[nx_mid:], -3.0, atol=1e-13)


def test_gradient_is_anti_transpose_of_divergence():
    for grid in (
        q.build_grid([(0.0, 1.0)], [9]),
        q.build_grid([(0.0, 1.0), (0.0, 2.0)], [4, 5]),
    ):
        grad, div = q.build_gradient_divergence(grid)
        diff = grad.to_dense() + div.to_dense().T
        assert np.abs(diff).max() == 0.0


def test_gradient_rows_have_two_entries_of_plus_minus_inverse_spacing():
    grid = q.build_grid([(0.0, 1.0)], [6])
    grad, _ = q.build_gradient_divergence(grid)
    dense = grad.to_dense()
    inv_dx = 1.0 / grid.spacing[0]
    for row in dense:
        nonzero = row[row != 0.0]
        assert sorted(nonzero) == [-inv_dx, inv_dx]


def test_acoustic_weight_entries():
    # rho = 2, c = 3: scalar weight 1/(rho c^2) = 1/18, flux weight rho = 2
    pair = build_acoustic_1d(n=4, rho=2.0, c=3.0)
    diag = pair.b_diagonal()
    np.testing.assert_allclose(diag[pair.scalar_slice], 1.0 / 18.0)
    np.testing.assert_allclose(diag[pair.flux_slice], 2.0)


def test_assembled_generator_is_exactly_antisymmetric():
    for pair in (
        build_acoustic_1d(n=8),
        build_acoustic_1d(n=64, rho=1.7, c=0.4),
        build_acoustic_2d(nx=5, ny=6, rho=2.2, c=1.3),
        build_maxwell(n=32, eps=2.0, mu=0.5),
    ):
        assert q.antisymmetry_defect(pair.A) == 0.0


def test_generator_row_sparsity_bound():
    # at most 2 D + 1 nonzeros per row
    for pair, dim in ((build_acoustic_1d(n=16), 1), (build_acoustic_2d(), 2)):
        assert pair.A.max_row_nnz() <= 2 * dim + 1


def test_maxwell_generator_has_purely_imaginary_modes():
    pair = build_maxwell(n=24, eps=1.0, mu=1.0)
    b_inv = 1.0 / pair.b_diagonal()
    modes = np.linalg.eigvals(b_inv[:, None] * pair.A.to_dense())
    assert np.abs(modes.real).max() < 1e-12


def test_nonpositive_material_refused():
    grid = q.build_grid([(0.0, 1.0)], [8])
    with pytest.raises(MaterialError):
        q.MaterialModel.acoustic(grid, rho=-1.0, c=1.0)
    with pytest.raises(MaterialError):
        q.MaterialModel.maxwell1d(grid, eps=0.0, mu=1.0)


def test_heterogeneous_material_sampled_pointwise():
    grid = q.build_grid([(0.0, 1.0)], [5])
    material = q.MaterialModel.acoustic(grid, rho=lambda x: 1.0 + x[0], c=1.0)
    pair = q.assemble_operator_pair(grid, material)
    flux_x = grid.flux_coords[0][:, 0]
    np.testing.assert_allclose(pair.b_diagonal()[pair.flux_slice], 1.0 + flux_x)


def test_sparse_operator_round_trips_through_triplets(rng):
    dense = np.zeros((5, 4))
    dense[rng.integers(0, 5, size=6), rng.integers(0, 4, size=6)] = rng.normal(size=6)
    op = q.SparseOperator.from_dense(dense)
    np.testing.assert_array_equal(op.to_dense(), dense)
    rows, cols, vals = op.rows, op.cols, op.vals
    again = q.SparseOperator.from_triplets(op.shape, rows, cols, vals)
    np.testing.assert_array_equal(again.to_dense(), dense)


def test_sparse_operator_rejects_duplicate_triplets():
    with pytest.raises(GridError):
        q.SparseOperator.from_triplets((2, 2), [0, 0], [1, 1], [1.0, 2.0])


def test_maxwell_rejects_2d_grid():
    grid = q.build_grid([(0.0, 1.0), (0.0, 1.0)], [4, 4])
    with pytest.raises(MaterialError):
        q.MaterialModel.maxwell1d(grid, eps=1.0, mu=1.0)
