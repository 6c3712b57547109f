"""Classical reference integrators for B dw/dt = A w + s(t).

The workhorse is the staggered leapfrog scheme. With the unknowns split into
the scalar block u and the flux block v (so that A couples only across the
blocks), the updates

    u^{n+1}   = u^n       + dt M_u (A_uv v^{n+1/2} + s_u(t_n + dt/2))
    v^{n+3/2} = v^{n+1/2} + dt M_v (A_vu u^{n+1}   + s_v(t_{n+1}))

with M = B^{-1} conserve the staggered quadrature

    E^n = <u^n|B_u|u^n> + <v^{n-1/2}|B_v|v^{n+1/2}>

exactly in exact arithmetic when s = 0: the telescoped increment is
dt (u^{n+1}+u^n)^T (A_uv + A_vu^T) v^{n+1/2}, which vanishes because
A_vu = -A_uv^T. That quadrature, not the collocated one (whose oscillation is
O(dt^2)), is the energy series a Trajectory reports. Input and output are
collocated: integration starts with a half kick v^{1/2} = v^0 + (dt/2)(...)
and every emitted snapshot undoes half a kick, which makes the scheme an
exact-to-rounding time-symmetric map of (u, v) pairs and second-order
accurate at the snapshots.

Stability requires dt <= safety * dx_min / (c_max sqrt(D)); violations are
refused with the admissible bound in the message.

For forced problems needing far more accuracy than O(dt^2), the module also
provides the eigenbasis quadrature solution: diagonalize the encoded
generator and evaluate the resulting oscillatory Duhamel integrals by
composite Gauss-Legendre panels sized against both the largest eigenfrequency
and the smoothness scale of the forcing. Its error is at rounding level and
it serves as the oracle that order-of-accuracy and pipeline-equality checks
compare against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .encoding import build_hamiltonian
from .errors import EvolutionError, ValidationError

CFL_SAFETY = 0.9
GL_NODES = 12


@dataclass(frozen=True)
class Trajectory:
    """Recorded leapfrog run: collocated snapshots plus the conserved energy.

    fields[k] is the stacked unknown vector at times[k]; energy[k] is the
    staggered discrete quadrature at the same step (exactly conserved for
    source-free runs). times and energy always have equal length.
    """

    times: np.ndarray
    fields: np.ndarray
    energy: np.ndarray
    dt: float

    def __post_init__(self):
        if not (len(self.times) == len(self.fields) == len(self.energy)):
            raise ValidationError("trajectory series lengths differ")

    @property
    def final(self) -> np.ndarray:
        return self.fields[-1]


def cfl_limit(system) -> float:
    """Largest admissible leapfrog step for this discretization."""
    grid = system.grid
    c_max = system.material.max_speed
    dx_min = min(grid.spacing)
    return CFL_SAFETY * dx_min / (c_max * np.sqrt(grid.dimension))


def _split_blocks(system):
    """Scalar/flux slices and the cross blocks of A; refuse non-staggered systems."""
    su, sv = system.scalar_slice, system.flux_slice
    a = system.A.to_csr()
    a_uu = a[su, su]
    a_vv = a[sv, sv]
    for blk, name in ((a_uu, "scalar-scalar"), (a_vv, "flux-flux")):
        if blk.nnz and np.abs(blk.data).max() > 0.0:
            raise ValidationError(
                f"leapfrog needs the two-block staggered structure; {name} coupling present"
            )
    return su, sv, a[su, sv].tocsr(), a[sv, su].tocsr()


def leapfrog_evolve(
    system,
    w0: np.ndarray,
    dt: float,
    t_final: float,
    source: Callable[[float], np.ndarray] | None = None,
    record_every: int = 1,
    t_start: float = 0.0,
) -> Trajectory:
    """Integrate the system by staggered leapfrog from collocated data.

    Args:
        system: OperatorPair or ReducedSystem (anything with A, B, slices,
            grid and material). A reduced system's induced constraint forcing
            is applied automatically on top of ``source``.
        w0: collocated initial unknowns at t_start.
        dt: time step; must satisfy the CFL bound.
        t_final: end time; the step count is rounded to cover it.
        source: optional sampler t -> forcing vector (same length as w0).
        record_every: snapshot stride in steps (first and last always kept).

    Returns:
        Trajectory of collocated snapshots and the staggered energy series.
    """
    limit = cfl_limit(system)
    if dt <= 0.0:
        raise ValidationError("time step must be positive")
    if dt > limit * (1.0 + 1e-12):
        raise ValidationError(
            f"time step {dt} violates the stability bound; use dt <= {limit:.6e}"
        )
    if t_final < t_start:
        raise ValidationError("t_final precedes t_start")

    su, sv, a_uv, a_vu = _split_blocks(system)
    b_diag = system.b_diagonal()
    bu, bv = b_diag[su], b_diag[sv]
    mu, mv = 1.0 / bu, 1.0 / bv

    samplers = []
    induced = getattr(system, "source", None)
    if callable(induced):
        samplers.append(induced)
    if source is not None:
        samplers.append(source)

    def forcing(t: float) -> tuple[np.ndarray, np.ndarray]:
        if not samplers:
            return 0.0, 0.0
        s = samplers[0](t)
        for extra in samplers[1:]:
            s = s + extra(t)
        return s[su], s[sv]

    w0 = np.asarray(w0, dtype=np.float64)
    if w0.shape != (system.n_total,):
        raise ValidationError("initial vector does not match the system size")
    n_steps = max(1, int(np.ceil((t_final - t_start) / dt - 1e-12))) if t_final > t_start else 0

    u = w0[su].copy()
    v = w0[sv].copy()

    times, fields, energies = [], [], []

    def record(step: int, u_n, v_colloc, e_n):
        times.append(t_start + step * dt)
        fields.append(np.concatenate([u_n, v_colloc]))
        energies.append(e_n)

    su_t0, sv_t0 = forcing(t_start)
    kick0 = mv * (a_vu @ u + sv_t0)
    v_stream = v + 0.5 * dt * kick0       # v^{1/2}
    v_prev_stream = v - 0.5 * dt * kick0  # v^{-1/2}
    record(0, u, v, float(u @ (bu * u) + v_prev_stream @ (bv * v_stream)))

    for n in range(n_steps):
        t_mid = t_start + (n + 0.5) * dt
        t_next = t_start + (n + 1) * dt
        su_mid, _ = forcing(t_mid)
        u = u + dt * mu * (a_uv @ v_stream + su_mid)
        _, sv_next = forcing(t_next)
        kick = mv * (a_vu @ u + sv_next)
        v_prev_stream = v_stream
        v_stream = v_stream + dt * kick
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            v_colloc = v_stream - 0.5 * dt * kick
            e_n = float(u @ (bu * u) + v_prev_stream @ (bv * v_stream))
            record(n + 1, u, v_colloc, e_n)

    return Trajectory(
        times=np.asarray(times),
        fields=np.asarray(fields),
        energy=np.asarray(energies),
        dt=dt,
    )


def spectral_forced_solution(
    system,
    chi: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    w0: np.ndarray | None = None,
    smoothness: float | None = None,
) -> np.ndarray:
    """Rounding-level solution of B dw/dt = A w + chi f(t) at t1.

    Diagonalizes the encoded generator once and evaluates the Duhamel
    integral per eigenmode with composite Gauss-Legendre panels; the panel
    width resolves both the fastest eigenfrequency and the forcing smoothness
    scale (taken from ``smoothness`` or an f.dt_hint attribute when present).
    """
    if t1 < t0:
        raise ValidationError("t1 precedes t0")
    ham = build_hamiltonian(system)
    lam, vecs = ham.eigendecomposition()
    diag = system.b_diagonal()
    chi = np.asarray(chi, dtype=np.float64)
    if chi.shape != diag.shape:
        raise ValidationError("forcing pattern does not match the system size")
    sqrt_b = np.sqrt(diag)
    g = vecs.conj().T @ (chi / sqrt_b)

    y_hat = np.zeros(lam.size, dtype=np.complex128)
    if w0 is not None:
        y_hat = np.exp(-1j * lam * (t1 - t0)) * (vecs.conj().T @ (sqrt_b * np.asarray(w0)))

    if t1 > t0:
        lam_max = float(np.abs(lam).max()) if lam.size else 0.0
        hint = smoothness if smoothness is not None else getattr(f, "dt_hint", None)
        h = t1 - t0
        if lam_max > 0.0:
            h = min(h, 2.5 / lam_max)
        if hint:
            h = min(h, float(hint))
        n_panels = int(np.ceil((t1 - t0) / h))
        nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
        edges = np.linspace(t0, t1, n_panels + 1)
        acc = np.zeros(lam.size, dtype=np.complex128)
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            s_q = 0.5 * (a + b) + half * nodes
            f_q = np.asarray(f(s_q), dtype=np.float64) * (half * weights)
            acc += np.exp(-1j * np.outer(lam, t1 - s_q)) @ f_q
        y_hat = y_hat + acc * g

    y1 = vecs @ y_hat
    w1 = y1 / sqrt_b
    imag_max = float(np.abs(w1.imag).max()) if w1.size else 0.0
    ref = float(np.abs(w1.real).max()) or 1.0
    if imag_max > 1e-8 * ref:
        raise EvolutionError(
            f"forced solution developed an imaginary part ({imag_max:.3e}); "
            "inputs are not a real system"
        )
    return w1.real
