"""Scenario files: the JSON contract behind the batch front door.

A scenario bundles everything one run needs: the grid, the material, the
boundary treatment, initial data, point sources, the evolution clock,
measurement requests, and the estimator configuration. load_scenario
parses and cross-validates the whole file up front, resolving regions to
index masks and reading every referenced file, so a bad scenario fails
before a single output is written.

All errors raised here are ScenarioError (a ValidationError) carrying the
scenario path for context.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .constraints import (
    ReducedSystem,
    boundary_scalar_indices,
    dirichlet_constraints,
    reduce_system,
)
from .discretize import (
    MaterialModel,
    OperatorPair,
    StaggeredGrid,
    assemble_operator_pair,
    build_grid,
)
from .errors import ScenarioError
from .initcircuit import PolarGridSpec
from .io import read_constraint_data_csv, read_json, read_source_csv
from .measurement import EstimatorConfig, SubspaceProjector
from .sources import (
    PointSource,
    SourceTimeFunction,
    chi_pattern,
    gaussian_pulse,
    ricker_wavelet,
    time_function_from_samples,
    windowed_sine,
)

_TOP_LEVEL_KEYS = {
    "grid", "material", "boundaries", "initial", "sources", "evolution",
    "measurements", "estimator", "initcircuit", "output_dir",
}
_SIDES_1D = ("left", "right")
_SIDES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class SourceSpec:
    """One point source plus its optional slicing request.

    chi is the injection pattern already restricted to the simulated
    unknowns; decompose, when present, holds the homogeneous-ball
    parameters for greens_decompose (radius, c, rho, mode, steepness).
    """

    source: PointSource
    chi: np.ndarray
    decompose: dict | None


@dataclass(frozen=True)
class MeasurementRequest:
    """A named subspace loss to report, with the mask already resolved."""

    name: str
    projector: SubspaceProjector
    description: str


@dataclass(frozen=True)
class InitCircuitSpec:
    """Rotationally covariant target field plus its polar register layout."""

    spec: PolarGridSpec
    field: Callable[[np.ndarray], np.ndarray]
    profile: str


@dataclass(frozen=True)
class Scenario:
    """A fully validated run description.

    system is the operator pair to simulate: the assembled full pair, or
    the constraint-reduced system when any wall is pinned. initial, every
    source chi, and every measurement mask are indexed over that system's
    unknowns.
    """

    path: str
    grid: StaggeredGrid
    material: MaterialModel
    pair: OperatorPair
    system: object
    initial: np.ndarray
    sources: tuple[SourceSpec, ...]
    t_start: float
    t_final: float | None
    dt: float | None
    record_every: int
    measurements: tuple[MeasurementRequest, ...]
    estimator: EstimatorConfig
    initcircuit: InitCircuitSpec | None
    output_dir: str | None

    @property
    def n_unknowns(self) -> int:
        return self.system.A.shape[0]

    def external_forcing(self) -> Callable[[float], np.ndarray] | None:
        """Sum of the point-source injections, or None when there are none."""
        if not self.sources:
            return None
        pairs = [(s.chi, s.source.time_function) for s in self.sources]

        def forcing(t: float) -> np.ndarray:
            total = pairs[0][0] * pairs[0][1](t)
            for chi, f in pairs[1:]:
                total = total + chi * f(t)
            return total

        return forcing


def load_scenario(
    path,
    out_override: str | None = None,
    seed_override: int | None = None,
    shots_override: int | None = None,
) -> Scenario:
    """Parse, cross-validate, and resolve a scenario file.

    Command-line overrides replace the corresponding scenario values:
    out_override the output directory, seed_override the estimator seed,
    and shots_override the shot count (which also switches the estimator
    into shot mode, since overriding shots in exact mode would be inert).
    """
    path = Path(path)
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError(f"{path}: unknown top-level keys {sorted(unknown)}")
    base = path.parent

    try:
        grid = _parse_grid(raw)
        material = _parse_material(raw, grid, base)
        pair = assemble_operator_pair(grid, material)
        system = _parse_boundaries(raw, grid, pair, base)
        initial = _parse_initial(raw, grid, pair, system, base)
        sources = _parse_sources(raw, grid, system, base)
        t_start, t_final, dt, record_every = _parse_evolution(raw)
        measurements = _parse_measurements(raw, grid, system)
        estimator = _parse_estimator(raw, seed_override, shots_override)
        initcircuit = _parse_initcircuit(raw, base)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc

    output_dir = out_override if out_override is not None else raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ScenarioError(f"{path}: output_dir must be a string")

    return Scenario(
        path=str(path), grid=grid, material=material, pair=pair, system=system,
        initial=initial, sources=sources, t_start=t_start, t_final=t_final,
        dt=dt, record_every=record_every, measurements=measurements,
        estimator=estimator, initcircuit=initcircuit, output_dir=output_dir,
    )


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where} is missing the required key {key!r}")
    return obj[key]


def _parse_grid(raw: dict) -> StaggeredGrid:
    spec = _require(raw, "grid", "scenario")
    bounds = _require(spec, "bounds", "grid")
    shape = _require(spec, "shape", "grid")
    extra = set(spec) - {"bounds", "shape"}
    if extra:
        raise ScenarioError(f"grid has unknown keys {sorted(extra)}")
    return build_grid([tuple(b) for b in bounds], [int(n) for n in shape])


def _coefficient(spec, grid: StaggeredGrid, base: Path, name: str):
    """A material coefficient: a constant, a piecewise table, or a file."""
    if isinstance(spec, (int, float)):
        return float(spec)
    if not isinstance(spec, dict):
        raise ScenarioError(f"material coefficient {name} must be a number or an object")
    kind = _require(spec, "kind", f"material.{name}")
    if kind == "piecewise":
        background = float(_require(spec, "background", f"material.{name}"))
        regions = _require(spec, "regions", f"material.{name}")
        boxes = []
        for region in regions:
            box = np.asarray(_require(region, "bounds", f"material.{name} region"), dtype=np.float64)
            if box.shape != (grid.dimension, 2):
                raise ScenarioError(
                    f"material.{name} region bounds must be {grid.dimension} [lo, hi] pairs"
                )
            boxes.append((box, float(_require(region, "value", f"material.{name} region"))))

        def fn(x: np.ndarray) -> float:
            for box, value in boxes:
                if np.all(x >= box[:, 0]) and np.all(x <= box[:, 1]):
                    return value
            return background

        return fn
    if kind == "file":
        if grid.dimension != 1:
            raise ScenarioError(f"material.{name}: tabulated coefficients are 1D only")
        p = base / _require(spec, "path", f"material.{name}")
        times, values = read_source_csv(p)  # same two-column layout, x instead of t
        if times.size < 2:
            raise ScenarioError(f"{p}: a tabulated coefficient needs at least 2 samples")

        def fn(x: np.ndarray) -> float:
            return float(np.interp(float(x[0]), times, values))

        return fn
    raise ScenarioError(f"material.{name}: unknown kind {kind!r}")


def _parse_material(raw: dict, grid: StaggeredGrid, base: Path) -> MaterialModel:
    spec = _require(raw, "material", "scenario")
    family = _require(spec, "family", "material")
    if family == "acoustic":
        rho = _coefficient(_require(spec, "rho", "material"), grid, base, "rho")
        c = _coefficient(_require(spec, "c", "material"), grid, base, "c")
        return MaterialModel.acoustic(grid, rho=rho, c=c)
    if family == "maxwell1d":
        eps = _coefficient(_require(spec, "eps", "material"), grid, base, "eps")
        mu = _coefficient(_require(spec, "mu", "material"), grid, base, "mu")
        return MaterialModel.maxwell1d(grid, eps=eps, mu=mu)
    raise ScenarioError(f"material: unknown family {family!r}")


def _parse_boundaries(raw: dict, grid: StaggeredGrid, pair: OperatorPair, base: Path):
    """Natural walls cost nothing; Dirichlet walls pin scalar unknowns.

    All pinned sides are merged into one constraint set. A corner node
    claimed by two sides is fine while both are homogeneous; two data
    series on one node have no single value, so that is refused.
    """
    spec = raw.get("boundaries", {})
    sides = _SIDES_1D if grid.dimension == 1 else _SIDES_2D
    extra = set(spec) - set(sides)
    if extra:
        raise ScenarioError(f"boundaries: unknown side(s) {sorted(extra)}")

    pinned: dict[int, tuple | None] = {}  # node -> (times, values) or None
    for side in sides:
        entry = spec.get(side, "natural")
        if entry in ("natural", "neumann"):
            # the staggered operators already impose a vanishing
            # perpendicular flux on every wall, so nothing to pin
            continue
        if entry == "dirichlet":
            entry = {"kind": "dirichlet"}
        if not isinstance(entry, dict) or entry.get("kind") != "dirichlet":
            raise ScenarioError(
                f"boundaries.{side}: expected 'natural'/'neumann', 'dirichlet', "
                "or a dirichlet object"
            )
        data = entry.get("data")
        series = None
        if data is not None:
            if "path" in data:
                times, values = read_source_csv(base / data["path"])
            else:
                times = np.asarray(_require(data, "times", f"boundaries.{side}.data"), dtype=np.float64)
                values = np.asarray(_require(data, "values", f"boundaries.{side}.data"), dtype=np.float64)
            series = (times, values)
        for node in boundary_scalar_indices(grid, [side]):
            node = int(node)
            if node in pinned and (pinned[node] is not None or series is not None):
                raise ScenarioError(
                    f"boundaries: node {node} is pinned by two sides whose values "
                    "disagree; a corner shared with a driven side has no single value"
                )
            if node not in pinned:
                pinned[node] = series

    if not pinned:
        return pair

    indices = np.asarray(sorted(pinned), dtype=np.int64)
    driven = [series for series in pinned.values() if series is not None]
    if not driven:
        constraints = dirichlet_constraints(grid, indices)
    else:
        t_grid = np.unique(np.concatenate([t for t, _ in driven]))
        if t_grid.size < 2:
            raise ScenarioError("boundaries: boundary data needs at least 2 samples")
        b_values = np.zeros((t_grid.size, indices.size))
        for col, node in enumerate(indices):
            series = pinned[int(node)]
            if series is not None:
                b_values[:, col] = np.interp(t_grid, series[0], series[1])
        constraints = dirichlet_constraints(grid, indices, b_times=t_grid, b_values=b_values)
    return reduce_system(pair, constraints)


def _restrict(vector: np.ndarray, system) -> np.ndarray:
    if isinstance(system, ReducedSystem):
        return system.restrict(vector)
    return vector


def _parse_initial(raw: dict, grid, pair, system, base: Path) -> np.ndarray:
    spec = raw.get("initial", {"kind": "zero"})
    kind = _require(spec, "kind", "initial")
    if kind == "zero":
        return np.zeros(system.A.shape[0])
    if kind == "scalar_gaussian":
        center = np.asarray(_require(spec, "center", "initial"), dtype=np.float64)
        if center.shape != (grid.dimension,):
            raise ScenarioError("initial.center must match the grid dimension")
        sigma = float(_require(spec, "sigma", "initial"))
        if sigma <= 0:
            raise ScenarioError("initial.sigma must be positive")
        amplitude = float(spec.get("amplitude", 1.0))
        w = np.zeros(pair.n_total)
        r2 = np.sum((grid.scalar_coords - center[None, :]) ** 2, axis=1)
        w[: grid.n_scalar] = amplitude * np.exp(-r2 / (2.0 * sigma**2))
        return _restrict(w, system)
    if kind == "file":
        p = base / _require(spec, "path", "initial")
        if not p.exists():
            raise ScenarioError(f"missing file: {p}")
        data = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ScenarioError(f"{p}: expected two columns dof,value")
        w = np.zeros(pair.n_total)
        dofs = data[:, 0].astype(np.int64)
        if dofs.size and (dofs.min() < 0 or dofs.max() >= pair.n_total):
            raise ScenarioError(f"{p}: dof index out of range")
        w[dofs] = data[:, 1]
        return _restrict(w, system)
    raise ScenarioError(f"initial: unknown kind {kind!r}")


def _parse_time_function(spec: dict, base: Path) -> SourceTimeFunction:
    kind = _require(spec, "kind", "time_function")
    if kind == "gaussian":
        return gaussian_pulse(
            center=float(_require(spec, "center", "time_function")),
            sigma=float(_require(spec, "sigma", "time_function")),
            amplitude=float(spec.get("amplitude", 1.0)),
        )
    if kind == "ricker":
        return ricker_wavelet(
            peak_frequency=float(_require(spec, "peak_frequency", "time_function")),
            delay=spec.get("delay"),
            amplitude=float(spec.get("amplitude", 1.0)),
        )
    if kind == "windowed_sine":
        return windowed_sine(
            frequency=float(_require(spec, "frequency", "time_function")),
            t_start=float(_require(spec, "t_start", "time_function")),
            duration=float(_require(spec, "duration", "time_function")),
            amplitude=float(spec.get("amplitude", 1.0)),
        )
    if kind == "file":
        times, values = read_source_csv(base / _require(spec, "path", "time_function"))
        return time_function_from_samples(times, values)
    raise ScenarioError(f"time_function: unknown kind {kind!r}")


def _parse_sources(raw: dict, grid, system, base: Path) -> tuple[SourceSpec, ...]:
    out = []
    for k, spec in enumerate(raw.get("sources", [])):
        where = f"sources[{k}]"
        location = tuple(int(i) for i in _require(spec, "location", where))
        polarization = tuple(float(v) for v in _require(spec, "polarization", where))
        f = _parse_time_function(_require(spec, "time_function", where), base)
        source = PointSource(location=location, polarization=polarization, time_function=f)
        chi = chi_pattern(source, grid)
        chi = _restrict(chi, system)
        decompose = spec.get("decompose")
        if decompose is not None:
            for key in ("radius", "c", "rho"):
                _require(decompose, key, f"{where}.decompose")
            bad = set(decompose) - {"radius", "c", "rho", "mode", "steepness"}
            if bad:
                raise ScenarioError(f"{where}.decompose has unknown keys {sorted(bad)}")
        out.append(SourceSpec(source=source, chi=chi, decompose=decompose))
    return tuple(out)


def _parse_evolution(raw: dict):
    spec = raw.get("evolution")
    if spec is None:
        return 0.0, None, None, 1
    t_start = float(spec.get("t_start", 0.0))
    t_final = float(_require(spec, "t_final", "evolution"))
    if not t_final > t_start:
        raise ScenarioError("evolution: t_final must exceed t_start")
    dt = spec.get("dt")
    if dt is not None:
        dt = float(dt)
        if dt <= 0:
            raise ScenarioError("evolution: dt must be positive")
    record_every = int(spec.get("record_every", 1))
    if record_every < 1:
        raise ScenarioError("evolution: record_every must be >= 1")
    return t_start, t_final, dt, record_every


def _parse_measurements(raw: dict, grid, system) -> tuple[MeasurementRequest, ...]:
    n_sys = system.A.shape[0]
    out = []
    seen = set()
    for k, spec in enumerate(raw.get("measurements", [])):
        where = f"measurements[{k}]"
        name = _require(spec, "name", where)
        if not isinstance(name, str) or not name or any(ch in name for ch in "/\\ "):
            raise ScenarioError(f"{where}: name must be a nonempty token without spaces or slashes")
        if name in seen:
            raise ScenarioError(f"{where}: duplicate measurement name {name!r}")
        seen.add(name)
        sub = _require(spec, "subspace", where)
        kind = _require(sub, "kind", f"{where}.subspace")
        mask = np.zeros(n_sys, dtype=bool)
        if kind == "dof_range":
            start = int(_require(sub, "start", f"{where}.subspace"))
            stop = int(_require(sub, "stop", f"{where}.subspace"))
            if not (0 <= start < stop <= n_sys):
                raise ScenarioError(
                    f"{where}.subspace: need 0 <= start < stop <= {n_sys}"
                )
            mask[start:stop] = True
            desc = f"unknowns [{start}, {stop})"
        elif kind == "scalar_region":
            box = np.asarray(_require(sub, "bounds", f"{where}.subspace"), dtype=np.float64)
            if box.shape != (grid.dimension, 2):
                raise ScenarioError(
                    f"{where}.subspace: bounds must be {grid.dimension} [lo, hi] pairs"
                )
            inside = np.all(
                (grid.scalar_coords >= box[:, 0]) & (grid.scalar_coords <= box[:, 1]),
                axis=1,
            )
            full = np.zeros(grid.n_scalar + sum(grid.n_flux), dtype=bool)
            full[: grid.n_scalar] = inside
            mask = _restrict(full, system)
            desc = f"scalar nodes in {box.tolist()}"
        elif kind == "indices":
            idx = np.asarray(_require(sub, "indices", f"{where}.subspace"), dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n_sys):
                raise ScenarioError(f"{where}.subspace: index out of range (n={n_sys})")
            mask[idx] = True
            desc = f"{idx.size} listed unknowns"
        else:
            raise ScenarioError(f"{where}.subspace: unknown kind {kind!r}")
        out.append(MeasurementRequest(name=name, projector=SubspaceProjector(mask=mask), description=desc))
    return tuple(out)


def _parse_estimator(raw: dict, seed_override, shots_override) -> EstimatorConfig:
    spec = dict(raw.get("estimator", {}))
    bad = set(spec) - {"mode", "shots", "seed"}
    if bad:
        raise ScenarioError(f"estimator has unknown keys {sorted(bad)}")
    mode = spec.get("mode", "exact")
    shots = int(spec.get("shots", 10000))
    seed = spec.get("seed")
    if shots_override is not None:
        mode, shots = "shots", int(shots_override)
    if seed_override is not None:
        seed = int(seed_override)
    if mode not in ("exact", "shots"):
        raise ScenarioError(f"estimator: unknown mode {mode!r}")
    if mode == "shots" and seed is None:
        raise ScenarioError(
            "estimator: shot mode needs a seed (scenario key or --seed) to stay reproducible"
        )
    return EstimatorConfig(mode=mode, shots=shots, seed=seed)


def _parse_initcircuit(raw: dict, base: Path) -> InitCircuitSpec | None:
    spec = raw.get("initcircuit")
    if spec is None:
        return None
    bad = set(spec) - {"radial_divisions", "extent", "center", "profile"}
    if bad:
        raise ScenarioError(f"initcircuit has unknown keys {sorted(bad)}")
    divisions = int(_require(spec, "radial_divisions", "initcircuit"))
    extent = float(_require(spec, "extent", "initcircuit"))
    center = tuple(float(v) for v in spec.get("center", (0.0, 0.0)))
    polar = PolarGridSpec.uniform(divisions, extent, center=center)

    profile = _require(spec, "profile", "initcircuit")
    kind = _require(profile, "kind", "initcircuit.profile")
    if kind == "gaussian_ring":
        r0 = float(_require(profile, "radius", "initcircuit.profile"))
        width = float(_require(profile, "width", "initcircuit.profile"))
        amplitude = float(profile.get("amplitude", 1.0))
        if width <= 0:
            raise ScenarioError("initcircuit.profile: width must be positive")

        def magnitude(r: float) -> float:
            return amplitude * float(np.exp(-((r - r0) ** 2) / (2.0 * width**2)))

        desc = f"gaussian_ring(radius={r0}, width={width})"
    elif kind == "file":
        p = base / _require(profile, "path", "initcircuit.profile")
        radii, values = read_source_csv(p)

        def magnitude(r: float) -> float:
            return float(np.interp(r, radii, values))

        desc = f"file({p.name})"
    else:
        raise ScenarioError(f"initcircuit.profile: unknown kind {kind!r}")

    c = np.asarray(center)

    def field(x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=np.float64) - c
        r = float(np.linalg.norm(d))
        if r == 0.0:
            return np.zeros(2)
        return magnitude(r) * d / r

    return InitCircuitSpec(spec=polar, field=field, profile=desc)
