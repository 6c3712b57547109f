"""Linear-constraint elimination for the first-order system B dw/dt = A w.

Constraints take the partitioned form

    R_f w_f + R_c w_c = b(t),

where w_c collects the constrained unknowns and R_c is invertible, so
w_c = R_c^{-1}(b - R_f w_f). Substituting back yields a smaller system of the
same shape,

    B' dw_f/dt = A' w_f + s(t),
    B' = B_ff - B_fc R_c^{-1} R_f,
    A' = A_ff - A_fc R_c^{-1} R_f,
    s(t) = A_fc R_c^{-1} b(t) - B_fc R_c^{-1} db/dt,

and the elimination is only admissible when it preserves the structure that
the rest of the toolchain relies on: B' must stay symmetric positive definite
and A' antisymmetric. Neither is assumed; both are re-validated on the reduced
operators, and a violation of the antisymmetry bound raises
IncompatibleConstraintError. The common case R_f = 0 (pinned unknowns, e.g.
Dirichlet walls) reduces to deleting rows and columns, which preserves both
properties trivially.

b(t) arrives as time samples; db/dt is formed by central differences on that
sample grid (one-sided at the ends) and both are linearly interpolated when
the induced source is evaluated between samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .discretize import OperatorPair, SparseOperator, StaggeredGrid
from .errors import ConstraintError, IncompatibleConstraintError

REDUCED_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ConstraintSet:
    """Affine constraints R_f w_f + R_c w_c = b(t) on a subset of unknowns.

    constrained: strictly increasing unknown indices (the c-partition).
    r_f: coupling to the free unknowns, shape (n_c, n_free); None means 0.
    r_c: invertible square part, shape (n_c, n_c).
    b_times/b_values: samples of b(t), shape (n_t,) and (n_t, n_c); None means
    a homogeneous constraint b = 0.
    """

    constrained: np.ndarray
    r_f: SparseOperator | None
    r_c: SparseOperator
    b_times: np.ndarray | None = None
    b_values: np.ndarray | None = None

    @property
    def n_constrained(self) -> int:
        return int(self.constrained.size)

    def __post_init__(self):
        c = np.asarray(self.constrained, dtype=np.int64)
        if c.ndim != 1:
            raise ConstraintError("constrained index list must be 1-D")
        if np.any(np.diff(c) <= 0):
            raise ConstraintError("constrained indices must be strictly increasing")
        if self.r_c.shape != (c.size, c.size):
            raise ConstraintError("r_c must be square over the constrained unknowns")
        if self.r_f is not None and self.r_f.shape[0] != c.size:
            raise ConstraintError("r_f row count must match constrained unknowns")
        if (self.b_times is None) != (self.b_values is None):
            raise ConstraintError("b samples need both times and values")
        if self.b_values is not None:
            if self.b_values.shape != (self.b_times.size, c.size):
                raise ConstraintError("b_values must be (n_times, n_constrained)")
            if self.b_times.size < 2:
                raise ConstraintError("need at least 2 time samples for db/dt")
            if np.any(np.diff(self.b_times) <= 0):
                raise ConstraintError("b sample times must be strictly increasing")


def boundary_scalar_indices(grid: StaggeredGrid, sides: list[str]) -> np.ndarray:
    """Scalar-block unknown indices on named walls of the box.

    Sides are "left"/"right" (x extremes) and, in 2D, "bottom"/"top"
    (y extremes). Returned indices are sorted and unique.
    """
    valid = {"left", "right"} | ({"bottom", "top"} if grid.dimension == 2 else set())
    bad = set(sides) - valid
    if bad:
        raise ConstraintError(f"unknown boundary side(s) {sorted(bad)} for this grid")
    picked = []
    if grid.dimension == 1:
        (nx,) = grid.shape
        if "left" in sides:
            picked.append(grid.scalar_index(0))
        if "right" in sides:
            picked.append(grid.scalar_index(nx - 1))
    else:
        nx, ny = grid.shape
        for j in range(ny):
            if "left" in sides:
                picked.append(grid.scalar_index(0, j))
            if "right" in sides:
                picked.append(grid.scalar_index(nx - 1, j))
        for i in range(nx):
            if "bottom" in sides:
                picked.append(grid.scalar_index(i, 0))
            if "top" in sides:
                picked.append(grid.scalar_index(i, ny - 1))
    return np.unique(np.asarray(picked, dtype=np.int64))


def dirichlet_constraints(
    grid: StaggeredGrid,
    indices: np.ndarray,
    b_times: np.ndarray | None = None,
    b_values: np.ndarray | None = None,
) -> ConstraintSet:
    """Pin the listed scalar unknowns: w_c = b(t) (zero when no samples given).

    An empty index list is the no-op constraint set: reduce_system returns
    the pair unchanged.
    """
    idx = np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx.min() < 0 or idx.max() >= grid.n_scalar):
        raise ConstraintError("Dirichlet indices must address scalar-block unknowns")
    n_c = idx.size
    eye = SparseOperator.diagonal(np.ones(n_c))
    bt = None if b_times is None else np.asarray(b_times, dtype=np.float64)
    bv = None if b_values is None else np.asarray(b_values, dtype=np.float64)
    if bv is not None and bv.ndim == 1:
        bv = bv[:, None] * np.ones((1, n_c))
    return ConstraintSet(constrained=idx, r_f=None, r_c=eye, b_times=bt, b_values=bv)


@dataclass(frozen=True)
class ReducedSystem:
    """Constraint-eliminated pair plus the bookkeeping to go back and forth.

    A and B are the reduced generator and energy weight over the free
    unknowns; free_indices maps reduced positions to full-system unknowns;
    source(t) samples the induced forcing (all zeros for homogeneous
    constraints). parent grid/material ride along for solver metadata.
    """

    A: SparseOperator
    B: SparseOperator
    free_indices: np.ndarray
    constrained_indices: np.ndarray
    source: Callable[[float], np.ndarray]
    parent: OperatorPair
    has_inhomogeneous_data: bool

    @property
    def n_total(self) -> int:
        return int(self.free_indices.size)

    @property
    def grid(self) -> StaggeredGrid:
        return self.parent.grid

    @property
    def material(self):
        return self.parent.material

    @property
    def scalar_slice(self) -> slice:
        n_sc = int(np.searchsorted(self.free_indices, self.parent.grid.n_scalar))
        return slice(0, n_sc)

    @property
    def flux_slice(self) -> slice:
        return slice(self.scalar_slice.stop, self.n_total)

    def b_diagonal(self) -> np.ndarray:
        return self.B.diagonal_values()

    def embed(self, w_free: np.ndarray) -> np.ndarray:
        """Scatter a free-unknown vector into a full-system vector (w_c = 0)."""
        out = np.zeros(self.parent.n_total, dtype=w_free.dtype)
        out[self.free_indices] = w_free
        return out

    def restrict(self, w_full: np.ndarray) -> np.ndarray:
        return np.asarray(w_full)[self.free_indices]


def _solve_rc(r_c: SparseOperator, rhs: np.ndarray) -> np.ndarray:
    """R_c^{-1} rhs with a fast path for (scaled) permutation structure."""
    n = r_c.shape[0]
    csr = r_c.to_csr()
    row_counts = np.diff(csr.indptr)
    if np.all(row_counts == 1):
        coo = csr.tocoo()
        perm = np.zeros(n, dtype=np.int64)
        scale = np.zeros(n)
        perm[coo.row] = coo.col
        scale[coo.row] = coo.data
        if np.unique(perm).size == n and np.all(scale != 0.0):
            # row i states scale[i] * x[perm[i]] = rhs[i]
            x = np.empty(rhs.shape, dtype=np.float64)
            x[perm] = rhs / (scale[:, None] if rhs.ndim == 2 else scale)
            return x
    dense = csr.toarray()
    try:
        return np.linalg.solve(dense, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstraintError("r_c is singular; constraints are not solvable") from exc


def reduce_system(pair: OperatorPair, constraints: ConstraintSet) -> ReducedSystem:
    """Eliminate the constrained unknowns from an operator pair.

    Returns the reduced system over the free unknowns, with the induced
    source sampler. Raises IncompatibleConstraintError when the reduced
    generator loses antisymmetry beyond 1e-12, and ConstraintError for
    singular R_c, index problems, or an indefinite reduced weight.
    """
    n = pair.n_total
    c_idx = constraints.constrained
    if c_idx.size == 0:
        zero = np.zeros(n)
        return ReducedSystem(
            A=pair.A, B=pair.B, free_indices=np.arange(n, dtype=np.int64),
            constrained_indices=c_idx.copy(), source=lambda _t: zero,
            parent=pair, has_inhomogeneous_data=False,
        )
    if c_idx.max() >= n:
        raise ConstraintError("constrained index out of range for this system")
    mask = np.ones(n, dtype=bool)
    mask[c_idx] = False
    f_idx = np.nonzero(mask)[0]
    if f_idx.size == 0:
        raise ConstraintError("constraints eliminate every unknown")
    if constraints.r_f is not None and constraints.r_f.shape[1] != f_idx.size:
        raise ConstraintError("r_f column count must match free unknowns")

    a_csr = pair.A.to_csr()
    b_csr = pair.B.to_csr()
    a_ff = a_csr[f_idx][:, f_idx]
    a_fc = a_csr[f_idx][:, c_idx]
    b_ff = b_csr[f_idx][:, f_idx]
    b_fc = b_csr[f_idx][:, c_idx]

    pure_deletion = constraints.r_f is None or constraints.r_f.nnz == 0
    if pure_deletion:
        a_red = a_ff
        b_red = b_ff
    else:
        x = _solve_rc(constraints.r_c, constraints.r_f.to_dense())
        a_red = sp.csr_matrix(a_ff - sp.csr_matrix(a_fc @ x))
        b_red = sp.csr_matrix(b_ff - sp.csr_matrix(b_fc @ x))
        a_red.eliminate_zeros()
        b_red.eliminate_zeros()

    sym_defect = abs(b_red - b_red.T)
    if sym_defect.nnz and sym_defect.max() > REDUCED_SYMMETRY_TOL:
        raise ConstraintError("reduced energy weight is not symmetric")
    anti_defect = abs(a_red + a_red.T)
    if anti_defect.nnz and anti_defect.max() > REDUCED_SYMMETRY_TOL:
        raise IncompatibleConstraintError(
            "constraints break the antisymmetry of the reduced generator "
            f"(max defect {anti_defect.max():.3e}); the eliminated system is "
            "no longer energy conserving"
        )
    # definiteness of the reduced weight, checked not assumed
    b_dense_diag_ok = False
    if b_red.nnz == np.count_nonzero(b_red.diagonal()):
        diag = b_red.diagonal()
        b_dense_diag_ok = bool(np.all(diag > 0.0))
    if not b_dense_diag_ok:
        eigmin = float(np.linalg.eigvalsh(b_red.toarray()).min())
        if eigmin <= 0.0:
            raise ConstraintError(
                f"reduced energy weight is not positive definite (min eig {eigmin:.3e})"
            )

    n_free = f_idx.size
    if constraints.b_values is None:
        zero = np.zeros(n_free)

        def source(_t: float) -> np.ndarray:
            return zero

        inhomogeneous = False
    else:
        times = constraints.b_times
        b_vals = constraints.b_values
        db_vals = np.gradient(b_vals, times, axis=0)  # central differences
        rc_b = _solve_rc(constraints.r_c, b_vals.T).T
        rc_db = _solve_rc(constraints.r_c, db_vals.T).T
        a_fc_csr = sp.csr_matrix(a_fc)
        b_fc_csr = sp.csr_matrix(b_fc)

        def source(t: float) -> np.ndarray:
            bt = _interp_rows(times, rc_b, t)
            dbt = _interp_rows(times, rc_db, t)
            return a_fc_csr @ bt - b_fc_csr @ dbt

        inhomogeneous = True

    return ReducedSystem(
        A=SparseOperator.from_scipy(a_red),
        B=SparseOperator.from_scipy(b_red),
        free_indices=f_idx,
        constrained_indices=c_idx.copy(),
        source=source,
        parent=pair,
        has_inhomogeneous_data=inhomogeneous,
    )


def _interp_rows(times: np.ndarray, values: np.ndarray, t: float) -> np.ndarray:
    """Linear interpolation of (n_t, n_c) samples at scalar t, clamped outside."""
    out = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        out[j] = np.interp(t, times, values[:, j])
    return out
