"""Hermitian encoding of energy-conserving systems onto a qubit register.

A real system B dw/dt = A w with B diagonal positive and A antisymmetric is
mapped to Schrodinger form by the similarity y = B^{1/2} w:

    dy/dt = -i H y,    H = i B^{-1/2} A B^{-1/2}.

H is Hermitian (it is i times a real antisymmetric matrix), so the evolution
is unitary and the squared encoded norm is conserved. That norm carries the
physics: |y|^2 = <w|B|w> is twice the total energy of the field, potential
plus kinetic, and it is stored separately as a scale factor so the register
amplitudes can stay unit norm. Amplitudes are padded with exact zeros up to
the next power of two; the pad coordinates never couple to anything.

A register state may stack several sub-states (block dimension times arity)
and may carry one auxiliary qubit in front (the measurement layout); the
layout bookkeeping lives here so every module talks about the same ordering:
index = aux * (arity * block_dim) + substate * block_dim + coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .discretize import OperatorPair, SparseOperator
from .errors import EncodingError, NumericalError

HERMITICITY_TOL = 1e-12
DECODE_IMAG_TOL = 1e-9


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise EncodingError("dimension must be positive")
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class StateLayout:
    """Register layout: arity sub-states of block_dim with num_physical live coords."""

    num_physical: int
    block_dim: int
    arity: int = 1
    augmented: bool = False

    def __post_init__(self):
        if self.num_physical < 1 or self.num_physical > self.block_dim:
            raise EncodingError("physical dimension must fit the padded block")
        if self.block_dim != next_power_of_two(self.block_dim):
            raise EncodingError("block dimension must be a power of two")
        if self.arity != next_power_of_two(self.arity):
            raise EncodingError("arity must be a power of two")

    @property
    def total_dim(self) -> int:
        return self.block_dim * self.arity * (2 if self.augmented else 1)

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.total_dim)))

    @property
    def n_data_qubits(self) -> int:
        return int(round(np.log2(self.block_dim)))

    @property
    def n_substate_qubits(self) -> int:
        return int(round(np.log2(self.arity)))


@dataclass(frozen=True)
class QuantumRegisterState:
    """Unit-norm complex amplitudes plus the physical scale they stand for.

    scale is the encoded norm |B^{1/2} w| (or of the stacked vector); the
    special null state has scale 0 and all-zero amplitudes and cannot be
    decoded. Amplitudes are immutable.
    """

    amplitudes: np.ndarray
    scale: float
    layout: StateLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.layout.total_dim,):
            raise EncodingError(
                f"amplitude vector has dim {amps.shape}, layout wants {self.layout.total_dim}"
            )
        if self.scale < 0.0 or not np.isfinite(self.scale):
            raise EncodingError("scale must be finite and nonnegative")
        if self.scale == 0.0:
            if np.any(amps != 0):
                raise EncodingError("null state must have zero amplitudes")
        else:
            norm = float(np.linalg.norm(amps))
            if abs(norm - 1.0) > 1e-12:
                raise EncodingError(f"amplitudes must be unit norm, got {norm!r}")
        object.__setattr__(self, "amplitudes", amps)
        amps.setflags(write=False)

    @property
    def is_null(self) -> bool:
        return self.scale == 0.0

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def block(self, s: int) -> np.ndarray:
        """Amplitudes of sub-state s (top half only, for augmented states)."""
        if not 0 <= s < self.layout.arity:
            raise EncodingError("sub-state index out of range")
        d = self.layout.block_dim
        return self.amplitudes[s * d : (s + 1) * d]

    def with_amplitudes(self, amps: np.ndarray) -> "QuantumRegisterState":
        return QuantumRegisterState(amplitudes=amps, scale=self.scale, layout=self.layout)


@dataclass
class Hamiltonian:
    """Hermitian generator with the metadata the cost model reports.

    matrix is sparse complex (purely imaginary entries for real systems);
    maxnorm is max|H_jk| and sparsity the largest row population. A dense
    eigendecomposition is memoized on first use by the evolution module.
    """

    matrix: sp.csr_matrix
    maxnorm: float
    sparsity: int
    _eig: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(next_power_of_two(self.dim))))

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conjugate().T
        return float(np.abs(d.data).max()) if d.nnz else 0.0

    def eigendecomposition(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            evals, evecs = np.linalg.eigh(self.matrix.toarray())
            self._eig = (evals, evecs)
        return self._eig


def _as_b_diagonal(b) -> np.ndarray:
    """Accept an OperatorPair/ReducedSystem, SparseOperator, or plain diagonal."""
    if hasattr(b, "b_diagonal"):
        diag = b.b_diagonal()
    elif isinstance(b, SparseOperator):
        if not b.is_diagonal():
            raise EncodingError("energy weight must be diagonal")
        diag = b.diagonal_values()
    else:
        diag = np.asarray(b, dtype=np.float64)
    if diag.ndim != 1 or np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
        raise EncodingError("energy weight diagonal must be positive and finite")
    return diag


def build_hamiltonian(system) -> Hamiltonian:
    """H = i B^{-1/2} A B^{-1/2} from an operator pair or reduced system.

    Accepts anything exposing .A and .B sparse operators with B diagonal.
    Hermiticity is verified to 1e-12 in the max-entry norm; the input
    antisymmetry guarantees it, and this is the line of defense against an
    operator assembled some other way.
    """
    a_op: SparseOperator = system.A
    diag = _as_b_diagonal(system)
    if a_op.shape[0] != diag.size:
        raise EncodingError("generator and energy weight dimensions differ")
    inv_sqrt = 1.0 / np.sqrt(diag)
    scaled = sp.csr_matrix(a_op.to_csr(), dtype=np.complex128)
    scaled = sp.diags(inv_sqrt) @ scaled @ sp.diags(inv_sqrt)
    h = sp.csr_matrix(1j * scaled)
    ham = Hamiltonian(
        matrix=h,
        maxnorm=float(np.abs(h.data).max()) if h.nnz else 0.0,
        sparsity=int(np.diff(h.indptr).max()) if h.nnz else 0,
    )
    defect = ham.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise NumericalError(f"encoded generator is not Hermitian: defect {defect:.3e}")
    return ham


def encode(w: np.ndarray, b) -> QuantumRegisterState:
    """Encode a real field vector: amplitudes = B^{1/2} w / scale, padded.

    The scale is the encoded norm, whose square equals the energy quadrature
    <w|B|w> term by term (same arithmetic as the energy report). The zero
    field maps to the null state.
    """
    diag = _as_b_diagonal(b)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != diag.shape:
        raise EncodingError("field vector and energy weight dimensions differ")
    y = np.sqrt(diag) * w
    scale = float(np.linalg.norm(y))
    n = diag.size
    dim = next_power_of_two(n)
    layout = StateLayout(num_physical=n, block_dim=dim)
    amps = np.zeros(dim, dtype=np.complex128)
    if scale == 0.0:
        return QuantumRegisterState(amplitudes=amps, scale=0.0, layout=layout)
    amps[:n] = y / scale
    return QuantumRegisterState(amplitudes=amps, scale=scale, layout=layout)


def decode(state: QuantumRegisterState, b) -> np.ndarray:
    """Invert the encoding: w = B^{-1/2} (scale * amplitudes), real part.

    Requires a single-substate, unaugmented, non-null state whose pad
    coordinates are numerically zero. Real systems stay real under the
    encoded evolution; a residual imaginary part above 1e-9 of the scale
    means the state was produced some other way and decoding refuses.
    """
    if state.is_null:
        raise EncodingError("cannot decode the null state")
    if state.layout.arity != 1 or state.layout.augmented:
        raise EncodingError("decode expects a single unaugmented sub-state")
    diag = _as_b_diagonal(b)
    n = diag.size
    if n != state.layout.num_physical:
        raise EncodingError("energy weight does not match the encoded layout")
    pads = state.amplitudes[n:]
    if pads.size and np.abs(pads).max() > 1e-12:
        raise EncodingError("pad coordinates are not zero; layout mismatch")
    y = state.scale * state.amplitudes[:n]
    imag_max = float(np.abs(y.imag).max()) if n else 0.0
    if imag_max > DECODE_IMAG_TOL * max(state.scale, 1.0):
        raise EncodingError(
            f"state is not a real-field encoding (imaginary residual {imag_max:.3e})"
        )
    return y.real / np.sqrt(diag)


def energy(state: QuantumRegisterState) -> float:
    """Total conserved quadrature scale^2 = <w|B|w> (twice the field energy)."""
    return float(state.scale**2)
