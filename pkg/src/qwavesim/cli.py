"""Command-line front door: scenario-driven batch runs.

Subcommands:
    simulate     integrate a scenario and write snapshots, energies, the
                 final encoded state, measurement results, and a manifest
    measure      apply a scenario's measurement requests to a stored state
    presim       convert each scenario source into compact initial data
                 (whole-pulse pre-simulation or windowed slicing)
    initcircuit  emit the preparation circuit for a covariant field and a
                 fidelity report against brute-force construction
    verify       run a named property suite and print a tolerance table

Exit codes: 0 success, 1 validation failure (bad scenario, bad usage),
2 numerical failure (a computation or verify check did not meet its
tolerance). Nothing is written unless the requested computation finished,
so a failing run leaves no partial output files. Outputs are deterministic:
rerunning with the same scenario and seeds reproduces every file byte for
byte. The default output directory comes from --out, then the scenario,
then the QWAVESIM_OUTPUT_DIR environment variable.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .constraints import ReducedSystem
from .discretize import MaterialModel, antisymmetry_defect, assemble_operator_pair, build_grid
from .encoding import build_hamiltonian, encode
from .errors import NumericalError, ScenarioError, ValidationError
from .evolution import build_mult_hamiltonian, build_sync_hamiltonian, evolve
from .initcircuit import (
    PolarGridSpec,
    build_circuit,
    covariance_defect,
    direct_polar_state,
    fidelity,
    sample_reference_ray,
    simulate_circuit,
)
from .measurement import (
    EstimatorConfig,
    SubspaceProjector,
    estimate,
    multi_state_observable,
    two_state_observable,
)
from .reference import cfl_limit, leapfrog_evolve, spectral_forced_solution
from .scenario import Scenario, load_scenario
from .sources import (
    PointSource,
    assemble_multisource_state,
    chi_pattern,
    default_steepness,
    gaussian_pulse,
    greens_decompose,
    make_windows,
    presimulate_pulse,
)

_DEFAULT_OUT = "qwavesim-output"


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"qwavesim: validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"qwavesim: numerical failure: {exc}", file=sys.stderr)
        return 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation failures
        self.print_usage(sys.stderr)
        print(f"qwavesim: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qwavesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output directory (overrides the scenario)")
        p.add_argument("--seed", type=int, help="estimator seed override")
        p.add_argument("--shots", type=int, help="shot count override (switches to shot mode)")
        p.set_defaults(handler=handler)
        return p

    scenario_command("simulate", _run_simulate, "integrate a scenario end to end")
    p_measure = scenario_command(
        "measure", _run_measure, "measure a stored state with a scenario's requests"
    )
    p_measure.add_argument("--state", required=True, help="state CSV written by simulate")
    scenario_command("presim", _run_presim, "pre-simulate or slice the scenario sources")
    scenario_command("initcircuit", _run_initcircuit, "build the covariant preparation circuit")

    p_verify = sub.add_parser("verify", help="run a property suite")
    p_verify.add_argument(
        "suite", choices=sorted(_SUITES), help="which property suite to run"
    )
    p_verify.set_defaults(handler=_run_verify)
    return parser


def _load(args) -> Scenario:
    return load_scenario(
        args.scenario,
        out_override=args.out,
        seed_override=args.seed,
        shots_override=args.shots,
    )


def _out_dir(scenario: Scenario) -> Path:
    out = scenario.output_dir or os.environ.get("QWAVESIM_OUTPUT_DIR") or _DEFAULT_OUT
    return Path(out)


# ---------------------------------------------------------------------------
# simulate


def _run_simulate(args) -> int:
    scenario = _load(args)
    if scenario.t_final is None:
        raise ScenarioError(f"{scenario.path}: simulate needs an 'evolution' section")
    system = scenario.system
    dt = scenario.dt if scenario.dt is not None else 0.5 * cfl_limit(system)

    traj = leapfrog_evolve(
        system,
        scenario.initial,
        dt,
        scenario.t_final,
        source=scenario.external_forcing(),
        record_every=scenario.record_every,
        t_start=scenario.t_start,
    )
    state = encode(traj.final, system)
    ham = build_hamiltonian(system)
    results = [
        (req, estimate(state, req.projector, config=scenario.estimator))
        for req in scenario.measurements
    ]
    manifest = _manifest(scenario, ham, dt, traj)

    out = _out_dir(scenario)
    out.mkdir(parents=True, exist_ok=True)
    io.write_field_csv(out / "snapshots.csv", traj.times, traj.fields)
    io.write_energy_csv(out / "energy.csv", traj.times, traj.energy)
    io.write_state(out / "state.csv", state)
    for req, result in results:
        io.write_measurement_json(
            out / f"measurement_{req.name}.json",
            result,
            extra={"name": req.name, "subspace": req.description},
        )
    io.write_json(out / "manifest.json", manifest)
    print(f"simulate: wrote {5 + len(results)} files to {out}")
    return 0


def _manifest(scenario: Scenario, ham, dt: float, traj) -> dict:
    system = scenario.system
    n_sys = scenario.n_unknowns
    pinned = (
        int(system.constrained_indices.size) if isinstance(system, ReducedSystem) else 0
    )
    t_span = float(traj.times[-1]) - scenario.t_start
    steps = int(round(t_span / dt))
    maxnorm = ham.maxnorm
    qubits = ham.n_qubits
    return {
        "scenario": Path(scenario.path).name,
        "grid": {
            "bounds": [list(b) for b in scenario.grid.bounds],
            "shape": list(scenario.grid.shape),
            "spacing": list(scenario.grid.spacing),
        },
        "material_family": scenario.material.family,
        "unknowns": {
            "assembled": scenario.pair.n_total,
            "simulated": n_sys,
            "pinned": pinned,
        },
        "hamiltonian": {
            "maxnorm": maxnorm,
            "sparsity": ham.sparsity,
            "dimension": ham.dim,
            "qubits": qubits,
        },
        "evolution": {
            "t_start": scenario.t_start,
            "t_final": float(traj.times[-1]),
            "dt": dt,
            "steps": steps,
            "cfl_limit": cfl_limit(system),
            "record_every": scenario.record_every,
            "snapshots": len(traj.times),
        },
        "sources": [
            {
                "location": list(s.source.location),
                "polarization": list(s.source.polarization),
                "kind": s.source.time_function.kind,
            }
            for s in scenario.sources
        ],
        "measurements": [req.name for req in scenario.measurements],
        "estimator": {
            "mode": scenario.estimator.mode,
            "shots": scenario.estimator.shots,
            "seed": scenario.estimator.seed,
        },
        "scaling": {
            "classical_cell_updates": steps * n_sys,
            "quantum_query_proxy": maxnorm * t_span * ham.sparsity * qubits,
            "note": (
                "the stability bound ties the classical step count to the grid "
                "spacing, so 1D classical work grows with the square of the "
                "resolution while the Hamiltonian query proxy grows near "
                "linearly with it"
            ),
        },
    }


# ---------------------------------------------------------------------------
# measure


def _run_measure(args) -> int:
    scenario = _load(args)
    state = io.read_state(args.state)
    if state.layout.num_physical != scenario.n_unknowns:
        raise ScenarioError(
            f"{args.state}: state holds {state.layout.num_physical} physical "
            f"unknowns but the scenario simulates {scenario.n_unknowns}"
        )
    if not scenario.measurements:
        raise ScenarioError(f"{scenario.path}: no measurements requested")
    results = [
        (req, estimate(state, req.projector, config=scenario.estimator))
        for req in scenario.measurements
    ]
    out = _out_dir(scenario)
    out.mkdir(parents=True, exist_ok=True)
    for req, result in results:
        io.write_measurement_json(
            out / f"measurement_{req.name}.json",
            result,
            extra={"name": req.name, "subspace": req.description},
        )
    print(f"measure: wrote {len(results)} files to {out}")
    return 0


# ---------------------------------------------------------------------------
# presim


def _run_presim(args) -> int:
    scenario = _load(args)
    if not scenario.sources:
        raise ScenarioError(f"{scenario.path}: no sources to pre-simulate")
    system = scenario.system

    entries = []
    fields = []
    for k, spec in enumerate(scenario.sources):
        if spec.decompose is not None:
            dec = spec.decompose
            slices = greens_decompose(
                spec.source,
                float(dec["c"]),
                float(dec["rho"]),
                float(dec["radius"]),
                system,
                mode=dec.get("mode"),
                steepness=dec.get("steepness"),
            )
        else:
            slices = [presimulate_pulse(spec.source, system, dt=scenario.dt)]
        parts = []
        for j, result in enumerate(slices):
            name = f"presim{k}_slice{j}.csv"
            fields.append((name, result))
            parts.append(
                {
                    "file": name,
                    "t_end": result.t_end,
                    "support_radius": result.support_radius,
                    "nonzero_count": result.nonzero_count,
                }
            )
        entries.append(
            {
                "source": k,
                "mode": "decompose" if spec.decompose is not None else "presimulate",
                "slices": parts,
            }
        )

    out = _out_dir(scenario)
    out.mkdir(parents=True, exist_ok=True)
    for name, result in fields:
        io.write_field_csv(out / name, [result.t_end], [result.field])
    io.write_json(out / "presim.json", {"sources": entries})
    print(f"presim: wrote {len(fields) + 1} files to {out}")
    return 0


# ---------------------------------------------------------------------------
# initcircuit


def _run_initcircuit(args) -> int:
    scenario = _load(args)
    if scenario.initcircuit is None:
        raise ScenarioError(f"{scenario.path}: no 'initcircuit' section")
    polar = scenario.initcircuit.spec
    field = scenario.initcircuit.field

    ray = sample_reference_ray(field, polar)
    circuit = build_circuit(polar)
    prepared = simulate_circuit(circuit, ray)
    direct, direct_evals = direct_polar_state(field, polar)
    report = {
        "profile": scenario.initcircuit.profile,
        "radial_divisions": polar.radial_divisions,
        "angular_divisions": polar.angular_divisions,
        "fidelity": fidelity(prepared, direct),
        "ray_evaluations": ray.eval_count,
        "direct_evaluations": direct_evals,
        "scale": prepared.scale,
        "min_rotation_angle": circuit.min_rotation_angle,
        "covariance_defect": covariance_defect(field, polar),
    }

    out = _out_dir(scenario)
    out.mkdir(parents=True, exist_ok=True)
    io.write_circuit_json(out / "circuit.json", circuit)
    io.write_json(out / "initcircuit_report.json", report)
    print(f"initcircuit: wrote 2 files to {out}")
    return 0


# ---------------------------------------------------------------------------
# verify suites


def _suite_symmetry():
    rows = []
    for n in (8, 64, 256):
        grid = build_grid([(0.0, 1.0)], [n])
        pair = assemble_operator_pair(grid, MaterialModel.acoustic(grid, rho=1.3, c=0.7))
        rows.append((f"acoustic 1D N={n} generator antisymmetry", antisymmetry_defect(pair.A), 0.0))
        rows.append(
            (f"acoustic 1D N={n} hermiticity", build_hamiltonian(pair).hermiticity_defect(), 1e-12)
        )
    grid = build_grid([(0.0, 1.0), (0.0, 2.0)], [12, 16])
    pair = assemble_operator_pair(grid, MaterialModel.acoustic(grid, rho=2.0, c=1.1))
    rows.append(("acoustic 2D 12x16 generator antisymmetry", antisymmetry_defect(pair.A), 0.0))
    rows.append(("acoustic 2D 12x16 hermiticity", build_hamiltonian(pair).hermiticity_defect(), 1e-12))
    grid = build_grid([(0.0, 1.0)], [64])
    pair = assemble_operator_pair(grid, MaterialModel.maxwell1d(grid, eps=2.0, mu=0.5))
    rows.append(("maxwell 1D N=64 generator antisymmetry", antisymmetry_defect(pair.A), 0.0))
    rows.append(("maxwell 1D N=64 hermiticity", build_hamiltonian(pair).hermiticity_defect(), 1e-12))
    return rows


def _suite_conservation():
    grid = build_grid([(0.0, 1.0)], [128])
    pair = assemble_operator_pair(grid, MaterialModel.acoustic(grid, rho=1.0, c=1.0))
    w0 = np.zeros(pair.n_total)
    x = grid.scalar_coords[:, 0]
    w0[: grid.n_scalar] = np.exp(-((x - 0.5) ** 2) / (2 * 0.05**2))
    state = encode(w0, pair)
    ham = build_hamiltonian(pair)
    t_crossing = 1.0  # domain length over wave speed
    evolved = evolve(state, ham, 5.0 * t_crossing)
    norm_drift = abs(float(np.linalg.norm(evolved.amplitudes)) - 1.0)
    energy_drift = abs(evolved.scale**2 - state.scale**2) / state.scale**2
    return [
        ("norm drift over 5 crossings", norm_drift, 1e-10),
        ("energy drift over 5 crossings", energy_drift, 1e-10),
    ]


def _suite_estimator():
    rng = np.random.default_rng(11)
    n_phys, arity = 12, 2
    states = [rng.normal(size=n_phys) for _ in range(arity)]
    mask = np.zeros(n_phys, dtype=bool)
    mask[rng.choice(n_phys, size=5, replace=False)] = True
    projector = SubspaceProjector(mask=mask)

    exact = estimate(states, projector)
    stacked = np.sum(states, axis=0)
    direct = float(np.linalg.norm(stacked[mask]) ** 2)
    rows = [("exact estimate vs dense contraction", abs(exact.value - direct) / direct, 1e-12)]

    two = two_state_observable(4)
    rows.append(("two-state decomposition string count", abs(len(two.strings) - 4), 0.0))
    coeffs = np.array([s.coeff for s in two.strings])
    rows.append(
        ("two-state coefficients", float(np.abs(coeffs - [0.5, -0.5, 0.5, -0.5]).max()), 0.0)
    )
    multi = multi_state_observable(arity, int(np.ceil(np.log2(n_phys))))
    rows.append(("multi-state string count (2M)", abs(len(multi.strings) - 2 * arity), 0.0))

    reps, lo_shots, hi_shots = 100, 10_000, 40_000
    err = {lo_shots: [], hi_shots: []}
    for shots in (lo_shots, hi_shots):
        for rep in range(reps):
            config = EstimatorConfig(mode="shots", shots=shots, seed=(101, shots, rep))
            sampled = estimate(states, projector, config=config)
            err[shots].append(sampled.value - exact.value)
    ratio = float(
        np.sqrt(np.mean(np.square(err[lo_shots])) / np.mean(np.square(err[hi_shots])))
    )
    rows.append(("shot RMS ratio for 4x shots, offset from 2", abs(ratio - 2.0), 0.6))
    return rows


def _suite_initcircuit():
    rows = []
    rng = np.random.default_rng(23)
    for divisions in (2, 4, 8):
        profile = rng.uniform(0.2, 1.0, size=divisions)
        spec = PolarGridSpec.uniform(divisions, 1.0)
        radii = np.asarray(spec.radii)

        def field(x, radii=radii, profile=profile):
            r = float(np.hypot(x[0], x[1]))
            if r == 0.0:
                return np.zeros(2)
            mag = float(np.interp(r, radii, profile))
            return mag * np.asarray(x) / r

        ray = sample_reference_ray(field, spec)
        prepared = simulate_circuit(build_circuit(spec), ray)
        direct, _ = direct_polar_state(field, spec)
        rows.append((f"A={divisions} preparation infidelity", 1.0 - fidelity(prepared, direct), 1e-10))
        rows.append((f"A={divisions} ray evaluation budget", abs(ray.eval_count - divisions), 0.0))
    return rows


def _suite_sources():
    rows = []
    breakpoints = [0.0, 0.3, 0.7, 1.0]
    t_grid = np.linspace(0.0, 1.0, 2001)
    _, deviation = make_windows(t_grid, default_steepness(breakpoints), breakpoints)
    rows.append(("window partition-of-unity deviation", deviation, 1e-3))

    samples = np.sin(np.linspace(0.0, 6.0, 500)) * np.exp(
        -((np.linspace(0.0, 6.0, 500) - 3.0) ** 2)
    )
    boxes, _ = make_windows(np.linspace(0.0, 6.0, 500), np.inf, [0.0, 2.0, 4.0, 6.0 + 1e-9])
    claimed = sum(int(np.count_nonzero(w * samples)) for w in boxes)
    rows.append(
        ("box-limit nonzero-count equality", abs(claimed - int(np.count_nonzero(samples))), 0.0)
    )

    grid = build_grid([(0.0, 1.0)], [128])
    pair = assemble_operator_pair(grid, MaterialModel.acoustic(grid, rho=1.0, c=1.0))
    stf = gaussian_pulse(center=0.08, sigma=0.01)
    source = PointSource(location=(64,), polarization=(1.0, 0.0), time_function=stf)
    slices = greens_decompose(source, 1.0, 1.0, 0.45, pair, mode="discrete")
    state, t_ends = assemble_multisource_state(slices, pair)
    ham = build_hamiltonian(pair)
    t_sync = max(t_ends)
    t_final = 0.55
    synced = evolve(
        state,
        build_sync_hamiltonian(
            ham, t_ends, t_sync, block_dim=state.layout.block_dim, arity=state.layout.arity
        ),
        1.0,
    )
    settled = evolve(
        synced,
        build_mult_hamiltonian(ham, state.layout.arity, block_dim=state.layout.block_dim),
        t_final - t_sync,
    )
    mask = np.zeros(pair.n_total, dtype=bool)
    mask[64:128] = True
    sliced_loss = estimate(settled, SubspaceProjector(mask=mask)).value
    mono = spectral_forced_solution(pair, chi_pattern(source, grid), stf, stf.t_start, t_final)
    direct_loss = float(np.linalg.norm((np.sqrt(pair.b_diagonal()) * mono)[mask]) ** 2)
    rows.append(
        (
            "sliced pipeline vs monolithic loss",
            abs(sliced_loss - direct_loss) / direct_loss,
            1e-6,
        )
    )

    pre = presimulate_pulse(source, pair)
    rows.append(("pre-simulation support certified (nonzeros)", float(pre.nonzero_count == 0), 0.0))
    return rows


_SUITES = {
    "symmetry": _suite_symmetry,
    "conservation": _suite_conservation,
    "estimator": _suite_estimator,
    "initcircuit": _suite_initcircuit,
    "sources": _suite_sources,
}


def _run_verify(args) -> int:
    rows = _SUITES[args.suite]()
    failed = 0
    print(f"suite {args.suite}: {len(rows)} checks")
    for name, value, tol in rows:
        ok = value <= tol
        failed += 0 if ok else 1
        print(f"  {name:<48} {value:12.4e}  tol {tol:9.3e}  {'PASS' if ok else 'FAIL'}")
    if failed:
        raise NumericalError(f"suite {args.suite}: {failed} of {len(rows)} checks failed")
    print(f"suite {args.suite}: all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
