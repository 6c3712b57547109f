"""State preparation for rotationally covariant planar fields on a polar grid.

A two-component field w(x) on a polar grid (radii r_a, angles theta_k) is
rotationally covariant when w(x at angle theta) = R(theta) w(x at angle 0)
with R the planar rotation acting on the components. Loading such a field
naively costs one field evaluation per grid point; covariance collapses that
to a single ray. The register is |component>|radial>|angular> (component most
significant) and the circuit is

  1. load the reference ray, the field along theta = 0, into the component
     and radial qubits (exactly A classical evaluations, one per radius),
  2. Hadamard every angular qubit,
  3. for angular bit m (most significant first), rotate the component pair
     by pi/2^m controlled on that bit.

The controlled rotations add up the binary expansion of the angle: angular
index k receives exactly theta_k = pi k / Theta, which is also the angle
convention used when the target state is constructed directly. The prepared
amplitudes are the grid samples of w divided by their norm N, and the norm
identity N = N' sqrt(Theta) ties the circuit normalization N' (the ray norm)
to the full-grid one; both are recorded. Amplitudes here are raw field
samples: the energy weighting of the rectangular pipeline is a separate
concern and does not enter the polar loader.

Fields that are not covariant cannot be prepared this way; the module
measures a covariance defect instead of guessing, and the fidelity between
the circuit output and the direct construction is the acceptance metric.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .encoding import QuantumRegisterState, StateLayout, next_power_of_two
from .errors import InitCircuitError


@dataclass(frozen=True)
class PolarGridSpec:
    """Polar sampling grid: two components, A radii, Theta = A angles."""

    components: int
    radial_divisions: int
    center: tuple[float, float]
    radii: tuple[float, ...]

    def __post_init__(self):
        if self.components != 2:
            raise InitCircuitError("planar rotation loading needs exactly 2 components")
        a = self.radial_divisions
        if a < 2 or a != next_power_of_two(a):
            raise InitCircuitError("radial divisions must be a power of two >= 2")
        if len(self.radii) != a:
            raise InitCircuitError("need one radius per radial division")
        r = np.asarray(self.radii, dtype=np.float64)
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise InitCircuitError("radii must be positive and strictly increasing")

    @classmethod
    def uniform(
        cls, radial_divisions: int, extent: float, center: tuple[float, float] = (0.0, 0.0)
    ) -> "PolarGridSpec":
        if extent <= 0:
            raise InitCircuitError("radial extent must be positive")
        radii = tuple(
            extent * (a + 1) / radial_divisions for a in range(radial_divisions)
        )
        return cls(
            components=2, radial_divisions=radial_divisions,
            center=(float(center[0]), float(center[1])), radii=radii,
        )

    @property
    def angular_divisions(self) -> int:
        return self.radial_divisions

    @property
    def n_points(self) -> int:
        return self.radial_divisions * self.angular_divisions

    def angle(self, k: int) -> float:
        return np.pi * k / self.angular_divisions

    def point(self, a: int, k: int) -> np.ndarray:
        th = self.angle(k)
        r = self.radii[a]
        return np.array(
            [self.center[0] + r * np.cos(th), self.center[1] + r * np.sin(th)]
        )


@dataclass(frozen=True)
class ReferenceRay:
    """Field samples along theta = 0: values[c, a], their norm, and the call count."""

    values: np.ndarray
    norm: float
    eval_count: int

    def statevector(self) -> np.ndarray:
        return (self.values / self.norm).ravel()


def sample_reference_ray(
    field: Callable[[np.ndarray], Sequence[float]], spec: PolarGridSpec
) -> ReferenceRay:
    """Evaluate the field once per radius along theta = 0.

    The classical budget of the whole preparation is exactly these
    radial_divisions evaluations; a zero ray cannot be normalized and is
    refused.
    """
    a_n = spec.radial_divisions
    values = np.zeros((spec.components, a_n))
    count = 0
    for a in range(a_n):
        w = np.asarray(field(spec.point(a, 0)), dtype=np.float64)
        count += 1
        if w.shape != (spec.components,):
            raise InitCircuitError(
                f"field must return {spec.components} components, got shape {w.shape}"
            )
        values[:, a] = w
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise InitCircuitError("reference ray is identically zero; nothing to prepare")
    values.setflags(write=False)
    return ReferenceRay(values=values, norm=norm, eval_count=count)


@dataclass(frozen=True)
class Gate:
    """One circuit element; qubit ids count from 0 at the most significant."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("prep", "h", "crot"):
            raise InitCircuitError(f"unknown gate kind {self.kind!r}")
        if self.kind == "crot" and (self.angle is None or len(self.qubits) != 2):
            raise InitCircuitError("crot needs (control, target) qubits and an angle")


@dataclass(frozen=True)
class GateCircuit:
    """Preparation circuit over |component>|radial>|angular>."""

    n_component_qubits: int
    n_radial_qubits: int
    n_angular_qubits: int
    gates: tuple[Gate, ...]

    @property
    def n_qubits(self) -> int:
        return self.n_component_qubits + self.n_radial_qubits + self.n_angular_qubits

    @property
    def min_rotation_angle(self) -> float:
        angles = [abs(g.angle) for g in self.gates if g.kind == "crot"]
        return min(angles) if angles else 0.0


def build_circuit(spec: PolarGridSpec) -> GateCircuit:
    """Hadamards on the angular register plus binary-weighted controlled rotations.

    Angular bit m (1-based from the most significant) controls a component
    rotation by pi/2^m; together the bits of index k rotate by pi k / Theta.
    The reported minimum angle pi/Theta is the hardware-facing caveat of
    deep angular registers.
    """
    n_c = 1
    n_a = int(round(np.log2(spec.radial_divisions)))
    n_t = int(round(np.log2(spec.angular_divisions)))
    gates = [Gate(kind="prep", qubits=tuple(range(n_c + n_a)))]
    first_angular = n_c + n_a
    for q in range(first_angular, first_angular + n_t):
        gates.append(Gate(kind="h", qubits=(q,)))
    for m in range(1, n_t + 1):
        control = first_angular + (m - 1)  # m-th most significant angular bit
        gates.append(Gate(kind="crot", qubits=(control, 0), angle=np.pi / 2**m))
    return GateCircuit(
        n_component_qubits=n_c, n_radial_qubits=n_a, n_angular_qubits=n_t,
        gates=tuple(gates),
    )


def _place_value(circuit: GateCircuit, qubit_id: int) -> int:
    return 1 << (circuit.n_qubits - 1 - qubit_id)


def simulate_circuit(circuit: GateCircuit, ray: ReferenceRay) -> QuantumRegisterState:
    """Run the preparation on a statevector and return the register state.

    The scale is the full-grid norm N' sqrt(Theta), so scale times the
    amplitudes reproduces the field samples for covariant inputs.
    """
    theta = 1 << circuit.n_angular_qubits
    dim = 1 << circuit.n_qubits
    psi = np.zeros(dim, dtype=np.complex128)
    idx = np.arange(dim)

    for gate in circuit.gates:
        if gate.kind == "prep":
            loaded = ray.statevector()
            if loaded.size * theta != dim:
                raise InitCircuitError("reference ray does not match the circuit register")
            psi[:] = 0.0
            psi[idx % theta == 0] = loaded  # angular register in |0>
        elif gate.kind == "h":
            p = _place_value(circuit, gate.qubits[0])
            lo = idx[(idx // p) % 2 == 0]
            hi = lo + p
            a, b = psi[lo].copy(), psi[hi].copy()
            psi[lo] = (a + b) / np.sqrt(2.0)
            psi[hi] = (a - b) / np.sqrt(2.0)
        else:  # crot
            pc = _place_value(circuit, gate.qubits[0])
            pt = _place_value(circuit, gate.qubits[1])
            on = ((idx // pc) % 2 == 1) & ((idx // pt) % 2 == 0)
            i0 = idx[on]
            i1 = i0 + pt
            a, b = psi[i0].copy(), psi[i1].copy()
            cos_t, sin_t = np.cos(gate.angle), np.sin(gate.angle)
            psi[i0] = cos_t * a - sin_t * b
            psi[i1] = sin_t * a + cos_t * b

    layout = StateLayout(num_physical=dim, block_dim=dim)
    return QuantumRegisterState(
        amplitudes=psi, scale=ray.norm * np.sqrt(theta), layout=layout
    )


def direct_polar_state(
    field: Callable[[np.ndarray], Sequence[float]], spec: PolarGridSpec
) -> tuple[QuantumRegisterState, int]:
    """Construct the target state by brute force, one evaluation per grid point.

    The oracle the circuit is judged against; returns the state and the
    evaluation count (radial times angular divisions).
    """
    a_n, t_n = spec.radial_divisions, spec.angular_divisions
    values = np.zeros((spec.components, a_n, t_n))
    count = 0
    for a in range(a_n):
        for k in range(t_n):
            w = np.asarray(field(spec.point(a, k)), dtype=np.float64)
            count += 1
            values[:, a, k] = w
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise InitCircuitError("field is identically zero on the polar grid")
    dim = values.size
    layout = StateLayout(num_physical=dim, block_dim=next_power_of_two(dim))
    amps = np.zeros(layout.block_dim, dtype=np.complex128)
    amps[:dim] = values.ravel() / norm
    return QuantumRegisterState(amplitudes=amps, scale=norm, layout=layout), count


def fidelity(a: QuantumRegisterState, b: QuantumRegisterState) -> float:
    """|<a|b>|^2 of two register states of equal dimension."""
    if a.layout.total_dim != b.layout.total_dim:
        raise InitCircuitError("states live on different registers")
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def covariance_defect(
    field: Callable[[np.ndarray], Sequence[float]], spec: PolarGridSpec
) -> float:
    """Largest relative mismatch between the field and its rotated reference ray.

    Zero (to rounding) for rotationally covariant fields; a substantial value
    means the single-ray preparation cannot represent the input and the
    caller should fall back to direct construction.
    """
    ray = sample_reference_ray(field, spec)
    worst = 0.0
    peak = float(np.abs(ray.values).max())
    for a in range(spec.radial_divisions):
        w0 = ray.values[:, a]
        for k in range(spec.angular_divisions):
            th = spec.angle(k)
            rot = np.array(
                [
                    [np.cos(th), -np.sin(th)],
                    [np.sin(th), np.cos(th)],
                ]
            )
            w = np.asarray(field(spec.point(a, k)), dtype=np.float64)
            worst = max(worst, float(np.linalg.norm(w - rot @ w0)))
    return worst / peak if peak else 0.0
