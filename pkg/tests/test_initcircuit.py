import numpy as np
import pytest

import qwavesim as q
from qwavesim.errors import InitCircuitError


def _radial_field(profile):
    """Covariant planar field: magnitude profile(r) pointing radially outward."""

    def field(x):
        r = float(np.hypot(x[0], x[1]))
        if r == 0.0:
            return (0.0, 0.0)
        mag = profile(r)
        return (mag * x[0] / r, mag * x[1] / r)

    return field


def test_uniform_spec_radii_and_angles():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    assert spec.radii == (0.25, 0.5, 0.75, 1.0)
    assert spec.angular_divisions == 4
    assert spec.n_points == 16
    assert spec.angle(0) == 0.0
    assert spec.angle(2) == pytest.approx(np.pi / 2)
    np.testing.assert_allclose(spec.point(3, 2), [0.0, 1.0], atol=1e-15)


def test_spec_validation():
    with pytest.raises(InitCircuitError):
        q.PolarGridSpec.uniform(3, extent=1.0)
    with pytest.raises(InitCircuitError):
        q.PolarGridSpec.uniform(4, extent=-1.0)
    with pytest.raises(InitCircuitError):
        q.PolarGridSpec(
            components=2, radial_divisions=2, center=(0.0, 0.0), radii=(0.5, 0.25)
        )
    with pytest.raises(InitCircuitError):
        q.PolarGridSpec(
            components=3, radial_divisions=2, center=(0.0, 0.0), radii=(0.5, 1.0)
        )


def test_reference_ray_samples_theta_zero_once_per_radius():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    ray = q.sample_reference_ray(_radial_field(lambda r: 4.0 * r), spec)
    assert ray.eval_count == 4
    np.testing.assert_allclose(ray.values[0], [1.0, 2.0, 3.0, 4.0], atol=1e-14)
    np.testing.assert_allclose(ray.values[1], 0.0, atol=1e-14)
    assert ray.norm == pytest.approx(np.sqrt(30.0))


def test_constant_magnitude_ray_statevector():
    spec = q.PolarGridSpec.uniform(2, extent=1.0)
    ray = q.sample_reference_ray(_radial_field(lambda r: 1.0), spec)
    np.testing.assert_allclose(
        ray.statevector(), [1.0, 1.0, 0.0, 0.0] / np.sqrt(2.0), atol=1e-15
    )


def test_zero_ray_is_refused():
    spec = q.PolarGridSpec.uniform(2, extent=1.0)
    with pytest.raises(InitCircuitError):
        q.sample_reference_ray(lambda x: (0.0, 0.0), spec)
    with pytest.raises(InitCircuitError):
        q.direct_polar_state(lambda x: (0.0, 0.0), spec)


def test_circuit_gate_inventory():
    spec = q.PolarGridSpec.uniform(8, extent=1.0)
    circ = q.build_circuit(spec)
    kinds = [g.kind for g in circ.gates]
    assert kinds == ["prep", "h", "h", "h", "crot", "crot", "crot"]
    angles = [g.angle for g in circ.gates if g.kind == "crot"]
    np.testing.assert_allclose(angles, [np.pi / 2, np.pi / 4, np.pi / 8])
    assert circ.n_qubits == 1 + 3 + 3
    assert circ.min_rotation_angle == pytest.approx(np.pi / 8)


def test_two_division_circuit_is_minimal():
    circ = q.build_circuit(q.PolarGridSpec.uniform(2, extent=1.0))
    assert [g.kind for g in circ.gates] == ["prep", "h", "crot"]
    assert circ.gates[-1].angle == pytest.approx(np.pi / 2)
    assert circ.min_rotation_angle == pytest.approx(np.pi / 2)


def test_gate_validation():
    with pytest.raises(InitCircuitError):
        q.Gate(kind="swap", qubits=(0, 1))
    with pytest.raises(InitCircuitError):
        q.Gate(kind="crot", qubits=(0,), angle=0.5)
    with pytest.raises(InitCircuitError):
        q.Gate(kind="crot", qubits=(0, 1))


def test_angular_blocks_carry_binary_cumulative_rotations():
    # Angular index k must see the ray rotated by exactly pi k / Theta.
    spec = q.PolarGridSpec.uniform(8, extent=1.0)
    field = _radial_field(lambda r: np.exp(-3.0 * r))
    ray = q.sample_reference_ray(field, spec)
    state = q.simulate_circuit(q.build_circuit(spec), ray)
    theta_n = spec.angular_divisions
    grid = (state.amplitudes * state.scale).reshape(2, 8, theta_n).real
    for k in range(theta_n):
        th = spec.angle(k)
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        np.testing.assert_allclose(grid[:, :, k], rot @ ray.values, atol=1e-12)


def test_angular_index_zero_reproduces_the_ray():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    field = _radial_field(lambda r: 1.0 + r**2)
    ray = q.sample_reference_ray(field, spec)
    state = q.simulate_circuit(q.build_circuit(spec), ray)
    grid = (state.amplitudes * state.scale).reshape(2, 4, 4).real
    np.testing.assert_allclose(grid[:, :, 0], ray.values, atol=1e-12)


def test_quarter_turn_block_swaps_components():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    field = _radial_field(lambda r: r)
    ray = q.sample_reference_ray(field, spec)
    state = q.simulate_circuit(q.build_circuit(spec), ray)
    grid = (state.amplitudes * state.scale).reshape(2, 4, 4).real
    # k = 2 is theta = pi/2: (f(r), 0) becomes (0, f(r))
    np.testing.assert_allclose(grid[0, :, 2], 0.0, atol=1e-12)
    np.testing.assert_allclose(grid[1, :, 2], ray.values[0], atol=1e-12)


def test_amplitude_magnitude_is_uniform_over_angles():
    spec = q.PolarGridSpec.uniform(8, extent=1.0)
    field = _radial_field(lambda r: np.sin(5.0 * r) + 1.5)
    ray = q.sample_reference_ray(field, spec)
    state = q.simulate_circuit(q.build_circuit(spec), ray)
    mags = np.abs(state.amplitudes.reshape(2, 8, 8)) ** 2
    per_angle = mags.sum(axis=0)  # (radial, angular)
    for a in range(8):
        np.testing.assert_allclose(per_angle[a], per_angle[a, 0], atol=1e-13)


def test_circuit_matches_direct_construction(rng):
    for a_n in (2, 4, 8):
        spec = q.PolarGridSpec.uniform(a_n, extent=1.0)
        for _ in range(3):
            coeffs = rng.normal(size=3)

            def profile(r):
                return coeffs[0] + coeffs[1] * r + coeffs[2] * r**2

            field = _radial_field(profile)
            ray = q.sample_reference_ray(field, spec)
            assert ray.eval_count == a_n
            prepared = q.simulate_circuit(q.build_circuit(spec), ray)
            direct, count = q.direct_polar_state(field, spec)
            assert count == a_n * a_n
            assert q.fidelity(prepared, direct) >= 1.0 - 1e-10
            assert prepared.scale == pytest.approx(direct.scale, rel=1e-10)


def test_scale_ties_ray_norm_to_grid_norm():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    field = _radial_field(lambda r: r)
    ray = q.sample_reference_ray(field, spec)
    state = q.simulate_circuit(q.build_circuit(spec), ray)
    assert state.scale == pytest.approx(ray.norm * 2.0, rel=1e-14)


def test_covariant_field_has_negligible_defect():
    spec = q.PolarGridSpec.uniform(8, extent=1.0)
    field = _radial_field(lambda r: np.cos(2.0 * r))
    assert q.covariance_defect(field, spec) < 1e-12


def test_non_covariant_field_is_detected():
    spec = q.PolarGridSpec.uniform(4, extent=1.0)
    defect = q.covariance_defect(lambda x: (1.0, 0.0), spec)
    assert defect > 0.5


def test_fidelity_requires_matching_registers():
    spec2 = q.PolarGridSpec.uniform(2, extent=1.0)
    spec4 = q.PolarGridSpec.uniform(4, extent=1.0)
    field = _radial_field(lambda r: r)
    a = q.simulate_circuit(q.build_circuit(spec2), q.sample_reference_ray(field, spec2))
    b = q.simulate_circuit(q.build_circuit(spec4), q.sample_reference_ray(field, spec4))
    with pytest.raises(InitCircuitError):
        q.fidelity(a, b)
