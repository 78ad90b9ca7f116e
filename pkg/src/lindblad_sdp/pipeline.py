"""Sweep configuration, grid resolution, and per-point solving.

Configs are YAML (schema version 1); see configs/ for annotated examples.
Units: all energies (omega0, g, omega_c, mu) share one energy scale, betas
are inverse energies in the same scale, gammas and eps0 are dimensionless.

A grid point is one physical configuration; solving it produces one CSV
row per requested objective. Rows are emitted in lexicographic grid order
(axes in declaration order, values in listed order), independent of the
parallelism degree.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .bath import BathSpec, QuadratureConfig
from .chain import ChainSpec, build_hamiltonian, diagonalize
from .conic import solve
from .errors import LindbladSdpError, SchemaError, ValidationError
from .family import build_affine_tables, dump_candidate
from .redfield import build_dissipator, is_equilibrium, solve_ness
from .sdp import (
    build_tau_pop_problem,
    build_tau_popcoh_problem,
    make_verdict,
    reconstruct_candidate,
    verify_solution,
)

CONFIG_SCHEMA_VERSION = 1
CSV_SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "N", "N_L", "N_M", "N_R", "omega0", "eps0", "g", "beta_L", "beta_R",
    "gammas", "omega_c", "t_L", "t_R", "objective", "tau_opt", "verdict",
    "alpha", "td_bound", "status", "gap", "residual", "seconds",
    "gibbs_distance",
]

SWEEPABLE = ("beta_L", "beta_R", "g", "eps0", "geometry")

GIBBS_GATE = 1e-8


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: tuple

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValidationError(
                f"cannot sweep {self.param!r}; choose from {SWEEPABLE}"
            )
        if len(self.values) == 0:
            raise ValidationError(f"sweep axis {self.param!r} has no values")


@dataclass(frozen=True)
class SweepConfig:
    chain: ChainSpec
    beta_left: float
    beta_right: float
    gammas: tuple | float
    omega_c: float
    mu: float
    axes: tuple[SweepAxis, ...]
    objectives: tuple[str, ...]
    t_left: float
    t_right: float
    delta_tol: float
    free_trace: bool
    epsilon: float
    output_dir: str
    parallelism: int
    backend: str
    gap_threshold: float
    quadrature: QuadratureConfig
    max_qubits: int = 8

    def grid(self) -> list[dict]:
        """Resolved parameter dicts in deterministic lexicographic order."""
        axis_values = [axis.values for axis in self.axes]
        points = []
        for combo in itertools.product(*axis_values):
            overrides = dict(zip((a.param for a in self.axes), combo))
            points.append(self.resolve_point(overrides))
        return points

    def resolve_point(self, overrides: dict) -> dict:
        chain = self.chain
        point = {
            "N": chain.n_qubits,
            "N_L": chain.n_left,
            "N_M": chain.n_mid,
            "N_R": chain.n_right,
            "omega0": chain.onsite_energy,
            "eps0": chain.energy_bias,
            "g": chain.coupling,
            "beta_L": self.beta_left,
            "beta_R": self.beta_right,
            "omega_c": self.omega_c,
            "mu": self.mu,
        }
        for key, value in overrides.items():
            if key == "geometry":
                n_l, n_m, n_r = (int(v) for v in value)
                if n_l + n_m + n_r != chain.n_qubits:
                    raise ValidationError(
                        f"geometry {value} does not sum to N = {chain.n_qubits}"
                    )
                point["N_L"], point["N_M"], point["N_R"] = n_l, n_m, n_r
            elif key in ("beta_L", "beta_R", "g", "eps0"):
                point[key] = float(value)
            else:
                raise ValidationError(f"unknown sweep parameter {key!r}")
        point["axes"] = dict(overrides)
        point["gammas"] = self._gammas_for(point["N_L"], point["N_R"])
        return point

    def _gammas_for(self, n_left: int, n_right: int) -> tuple[float, ...]:
        n_attached = n_left + n_right
        if isinstance(self.gammas, (int, float)):
            return tuple(float(self.gammas) for _ in range(n_attached))
        if len(self.gammas) != n_attached:
            raise ValidationError(
                f"gammas list has {len(self.gammas)} entries but the geometry "
                f"attaches {n_attached} sites"
            )
        return tuple(float(v) for v in self.gammas)


def _axis_from_mapping(raw: dict) -> SweepAxis:
    param = raw.get("param")
    if "values" in raw:
        values = raw["values"]
        if param == "geometry":
            values = tuple(tuple(int(x) for x in v) for v in values)
        else:
            values = tuple(float(v) for v in values)
        return SweepAxis(param=param, values=tuple(values))
    if "grid" in raw:
        points = int(raw.get("points", 24))
        start, stop = float(raw["start"]), float(raw["stop"])
        if raw["grid"] == "log":
            vals = np.geomspace(start, stop, points)
        elif raw["grid"] == "linear":
            vals = np.linspace(start, stop, points)
        else:
            raise SchemaError(f"unknown grid kind {raw['grid']!r}")
        return SweepAxis(param=param, values=tuple(float(v) for v in vals))
    raise SchemaError(f"sweep axis needs 'values' or 'grid': {raw}")


def parse_config(path) -> SweepConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("config must be a mapping")
    version = raw.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise SchemaError(
            f"config schema_version {version} != supported {CONFIG_SCHEMA_VERSION}"
        )
    try:
        chain_raw = raw["chain"]
        chain = ChainSpec(
            n_qubits=int(chain_raw["n_qubits"]),
            onsite_energy=float(chain_raw.get("omega0", 1.0)),
            energy_bias=float(chain_raw.get("energy_bias", 0.0)),
            coupling=float(chain_raw.get("coupling", 0.0)),
            n_left=int(chain_raw.get("n_left", 0)),
            n_right=int(chain_raw.get("n_right", 0)),
        )
        baths = raw.get("baths", {})
        objective = raw.get("objective", {})
        run = raw.get("run", {})
        quad = raw.get("quadrature", {})
        axes = tuple(_axis_from_mapping(a) for a in raw.get("sweep", {}).get("axes", []))
        gammas = baths.get("gammas", 1.0)
        if isinstance(gammas, list):
            gammas = tuple(float(g) for g in gammas)
        objectives = tuple(objective.get("objectives", ["pop"]))
        for name in objectives:
            if name not in ("pop", "pop_coh"):
                raise SchemaError(f"unknown objective {name!r}")
        config = SweepConfig(
            chain=chain,
            beta_left=float(baths.get("beta_left", 1.0)),
            beta_right=float(baths.get("beta_right", 1.0)),
            gammas=gammas,
            omega_c=float(baths.get("omega_c", 10.0)),
            mu=float(baths.get("mu", 0.0)),
            axes=axes,
            objectives=objectives,
            t_left=float(objective.get("t_left", 1.0)),
            t_right=float(objective.get("t_right", 1.0)),
            delta_tol=float(objective.get("delta_tol", 1e-6)),
            free_trace=bool(objective.get("free_trace", False)),
            epsilon=float(objective.get("epsilon", 0.01)),
            output_dir=str(run.get("output_dir", "out")),
            parallelism=int(run.get("parallelism", 1)),
            backend=str(run.get("backend", "clarabel")),
            gap_threshold=float(run.get("gap_threshold", 1e-9)),
            quadrature=QuadratureConfig(
                upper_cutoff_multiple=float(quad.get("upper_cutoff_multiple", 6.0)),
                panels=int(quad.get("panels", 200)),
                rel_tol=float(quad.get("rel_tol", 1e-10)),
            ),
            max_qubits=int(run.get("max_qubits", 8)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed config {path}: {exc!r}") from exc
    return config


# -- physics hashing --------------------------------------------------------


def physics_key(config: SweepConfig, point: dict) -> dict:
    """Everything that determines rho0 and the optimization problem."""
    return {
        "chain": {
            "N": point["N"], "N_L": point["N_L"], "N_M": point["N_M"],
            "N_R": point["N_R"], "omega0": point["omega0"],
            "eps0": point["eps0"], "g": point["g"],
        },
        "baths": {
            "beta_L": point["beta_L"], "beta_R": point["beta_R"],
            "gammas": list(point["gammas"]), "omega_c": point["omega_c"],
            "mu": point["mu"],
        },
        "quadrature": {
            "K": config.quadrature.upper_cutoff_multiple,
            "panels": config.quadrature.panels,
            "rel_tol": config.quadrature.rel_tol,
        },
        "gap_threshold": config.gap_threshold,
        "t_left": config.t_left,
        "t_right": config.t_right,
        "free_trace": config.free_trace,
    }


def physics_hash(key: dict) -> str:
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()


# -- per-point solving -------------------------------------------------------

# coefficient tables keyed by (spectrum, bath parameters, quadrature); kept
# per process so beta sweeps over a fixed chain reuse the integrals
_TABLE_CACHE: dict = {}


def _point_chain(config: SweepConfig, point: dict) -> ChainSpec:
    return ChainSpec(
        n_qubits=point["N"],
        onsite_energy=point["omega0"],
        energy_bias=point["eps0"],
        coupling=point["g"],
        n_left=point["N_L"],
        n_right=point["N_R"],
    )


def _point_baths(chain: ChainSpec, point: dict) -> list[BathSpec]:
    baths = []
    for site, gamma in zip(chain.attached_sites(), point["gammas"]):
        beta = point["beta_L"] if site <= chain.n_left else point["beta_R"]
        baths.append(
            BathSpec(
                site=site,
                inv_temperature=beta,
                coupling=gamma,
                cutoff=point["omega_c"],
                chem_potential=point["mu"],
            )
        )
    return baths


@dataclass
class PointResult:
    rows: list
    candidates: list  # (objective, LindbladCandidate, metadata)


def solve_point(config: SweepConfig, point: dict) -> PointResult:
    """Solve all configured objectives at one grid point.

    Raises on physics-level failures (degeneracy, broken thermalization);
    run_sweep converts those into failed rows.
    """
    chain = _point_chain(config, point)
    ham = build_hamiltonian(chain, max_qubits=config.max_qubits)
    eigs = diagonalize(ham, gap_threshold=config.gap_threshold)
    baths = _point_baths(chain, point)
    dis = build_dissipator(
        chain, eigs, baths, config.quadrature, table_cache=_TABLE_CACHE
    )
    need_coherences = "pop_coh" in config.objectives
    ness = solve_ness(dis, with_coherences=False)
    gibbs_distance = ness.gibbs_distance
    if is_equilibrium(tuple(baths)) and gibbs_distance >= GIBBS_GATE:
        raise ValidationError(
            f"equilibrium sanity gate failed: distance to Gibbs "
            f"{gibbs_distance:.3e} >= {GIBBS_GATE}"
        )
    tables = build_affine_tables(chain, eigs, ness.populations)
    l2_rho0 = None
    if need_coherences:
        from .redfield import apply_dissipator

        l2_rho0 = apply_dissipator(dis, np.diag(ness.populations).astype(complex))

    key = physics_key(config, point)
    point_hash = physics_hash(key)
    rows, candidates = [], []
    for objective in config.objectives:
        start = time.perf_counter()
        if objective == "pop":
            problem = build_tau_pop_problem(tables, config.t_left, config.t_right)
        else:
            problem = build_tau_popcoh_problem(
                tables, l2_rho0, config.t_left, config.t_right,
                free_trace=config.free_trace,
            )
        solution = solve(problem, backend=config.backend)
        row = {c: "" for c in CSV_COLUMNS}
        row.update(
            {
                "N": point["N"], "N_L": point["N_L"], "N_M": point["N_M"],
                "N_R": point["N_R"], "omega0": point["omega0"],
                "eps0": point["eps0"], "g": point["g"],
                "beta_L": point["beta_L"], "beta_R": point["beta_R"],
                "gammas": ";".join(repr(g) for g in point["gammas"]),
                "omega_c": point["omega_c"], "t_L": config.t_left,
                "t_R": config.t_right, "objective": objective,
                "status": solution.status,
            }
        )
        if gibbs_distance is not None:
            row["gibbs_distance"] = gibbs_distance
        elapsed = time.perf_counter() - start
        row["seconds"] = round(elapsed, 6)
        if solution.status not in ("optimal", "near_optimal"):
            row["status"] = f"failed:{solution.status}"
            rows.append(row)
            continue
        report = verify_solution(problem, solution, tables, l2_rho0)
        if not report.passed:
            row["status"] = "failed:certification"
            rows.append(row)
            continue
        tau_opt = max(solution.objective_value, 0.0)
        verdict = make_verdict(
            tau_opt, config.delta_tol, config.t_left, config.t_right,
            chain.dim_left, chain.dim_right,
        )
        row.update(
            {
                "tau_opt": tau_opt,
                "verdict": verdict.verdict,
                "alpha": verdict.bound_alpha,
                "td_bound": verdict.trace_distance_lower_bound,
                "gap": solution.duality_gap,
                "residual": solution.residuals.get("max_relative", ""),
            }
        )
        rows.append(row)
        if tau_opt < config.delta_tol:
            metadata = {
                "schema": 1,
                "objective": objective,
                "tau_opt": tau_opt,
                "solver_status": solution.status,
                "backend": config.backend,
                "t_left": config.t_left,
                "t_right": config.t_right,
                "free_trace": config.free_trace,
                "delta_tol": config.delta_tol,
                "epsilon": config.epsilon,
                "point": {k: v for k, v in point.items() if k != "axes"},
                "axes": point["axes"],
                "physics_key": key,
                "physics_hash": point_hash,
            }
            metadata["point"]["gammas"] = list(point["gammas"])
            candidates.append(
                (objective, reconstruct_candidate(problem, solution.primal), metadata)
            )
    return PointResult(rows=rows, candidates=candidates)


def _worker(args):
    config, index, point = args
    try:
        result = solve_point(config, point)
        return index, result, None
    except LindbladSdpError as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def _failed_rows(config: SweepConfig, point: dict, message: str) -> list:
    rows = []
    for objective in config.objectives:
        row = {c: "" for c in CSV_COLUMNS}
        row.update(
            {
                "N": point["N"], "N_L": point["N_L"], "N_M": point["N_M"],
                "N_R": point["N_R"], "omega0": point["omega0"],
                "eps0": point["eps0"], "g": point["g"],
                "beta_L": point["beta_L"], "beta_R": point["beta_R"],
                "gammas": ";".join(repr(g) for g in point["gammas"]),
                "omega_c": point["omega_c"], "t_L": config.t_left,
                "t_R": config.t_right, "objective": objective,
                "status": f"failed:{message.split(':', 1)[0]}",
                "seconds": 0.0,
            }
        )
        rows.append(row)
    return rows


@dataclass
class SweepResult:
    csv_path: Path
    rows: list
    n_failed: int
    candidate_paths: list = field(default_factory=list)


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, rows: list) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(format_cell(row[c]) for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class DumpVerification:
    dump_tau: float
    recomputed_tau: float
    tau_matches: bool
    gksl_passed: bool
    conservation_passed: bool
    trace_distance: float
    lemma_bound: float
    bound_respected: bool
    passed: bool

    def describe(self) -> str:
        return (
            f"tau: stored {self.dump_tau:.9e}, recomputed {self.recomputed_tau:.9e} "
            f"({'match' if self.tau_matches else 'MISMATCH'}); "
            f"GKSL {'pass' if self.gksl_passed else 'FAIL'}; "
            f"conservation {'pass' if self.conservation_passed else 'FAIL'}; "
            f"candidate-NESS trace distance {self.trace_distance:.3e} vs "
            f"bound {self.lemma_bound:.3e} "
            f"({'ok' if self.bound_respected else 'VIOLATED'}); "
            f"overall {'PASS' if self.passed else 'FAIL'}"
        )


def _dict_diff(a, b, prefix=""):
    diffs = []
    keys = sorted(set(a) | set(b))
    for k in keys:
        pa, pb = a.get(k), b.get(k)
        path = f"{prefix}{k}"
        if isinstance(pa, dict) and isinstance(pb, dict):
            diffs.extend(_dict_diff(pa, pb, prefix=f"{path}."))
        elif pa != pb:
            diffs.append(f"{path}: dump={pa!r} config={pb!r}")
    return diffs


def verify_dump(config: SweepConfig, dump_path) -> DumpVerification:
    """Replay the oracle suite on a stored candidate.

    Refuses (with a field-level diff) when the config does not reproduce
    the physics recorded in the dump.
    """
    from .family import (
        candidate_rate_matrix,
        check_gksl,
        check_local_conservation,
        load_candidate,
        tau_pop,
        tau_pop_coh,
    )
    from .redfield import apply_dissipator, solve_zeroth_ness
    from .sdp import trace_distance, trace_distance_bound

    cand, metadata = load_candidate(dump_path)
    axes = metadata.get("axes", {})
    # only axes the given config actually sweeps may override its template;
    # anything else counts as config drift and shows up in the hash diff
    swept = {a.param for a in config.axes}
    overrides = {
        k: (tuple(v) if k == "geometry" else v)
        for k, v in axes.items()
        if k in swept
    }
    point = config.resolve_point(overrides)
    key = physics_key(config, point)
    stored_key = metadata.get("physics_key", {})
    if physics_hash(key) != metadata.get("physics_hash"):
        diffs = _dict_diff(stored_key, key)
        raise ValidationError(
            "config does not reproduce the dumped physics; differing fields:\n  "
            + "\n  ".join(diffs or ["<hash mismatch with identical keys?>"])
        )
    chain = _point_chain(config, point)
    eigs = diagonalize(build_hamiltonian(chain, max_qubits=config.max_qubits),
                       gap_threshold=config.gap_threshold)
    baths = _point_baths(chain, point)
    dis = build_dissipator(chain, eigs, baths, config.quadrature, table_cache=_TABLE_CACHE)
    ness = solve_ness(dis, with_coherences=False)
    tables = build_affine_tables(chain, eigs, ness.populations)
    objective = metadata.get("objective", "pop")
    if objective == "pop_coh":
        l2 = apply_dissipator(dis, np.diag(ness.populations).astype(complex))
        recomputed = tau_pop_coh(tables, cand, l2)
    else:
        recomputed = tau_pop(tables, cand)
    dump_tau = float(metadata.get("tau_opt", float("nan")))
    tau_matches = abs(recomputed - dump_tau) < 1e-9 * (1.0 + abs(dump_tau))
    gksl = check_gksl(cand)
    conservation = check_local_conservation(cand, chain)
    bound = trace_distance_bound(
        recomputed, config.t_left, config.t_right, chain.dim_left, chain.dim_right
    )
    try:
        rates = candidate_rate_matrix(tables, cand)
        p_cand = solve_zeroth_ness(rates).populations
        distance = trace_distance(p_cand, ness.populations)
        bound_ok = distance >= bound - 1e-9
    except LindbladSdpError:
        # a corrupted candidate may not even possess a physical steady state
        distance = float("nan")
        bound_ok = False
    passed = tau_matches and gksl.passed and conservation.passed and bound_ok
    return DumpVerification(
        dump_tau=dump_tau,
        recomputed_tau=recomputed,
        tau_matches=tau_matches,
        gksl_passed=gksl.passed,
        conservation_passed=conservation.passed,
        trace_distance=distance,
        lemma_bound=bound,
        bound_respected=bound_ok,
        passed=passed,
    )


def select_point(config: SweepConfig, selector: dict | None, index: int | None):
    """Resolve a grid-point selector to exactly one point."""
    grid = config.grid()
    if index is not None:
        if not 0 <= index < len(grid):
            raise ValidationError(
                f"point index {index} out of range; grid has {len(grid)} points"
            )
        return index, grid[index]
    matches = []
    selector = selector or {}
    for i, point in enumerate(grid):
        ok = True
        for k, v in selector.items():
            if k == "geometry":
                ok &= (point["N_L"], point["N_M"], point["N_R"]) == tuple(v)
            elif k not in point:
                raise ValidationError(f"unknown selector key {k!r}")
            else:
                ok &= bool(np.isclose(point[k], float(v), rtol=1e-9, atol=0))
            if not ok:
                break
        if ok:
            matches.append((i, point))
    if len(matches) != 1:
        listing = "\n".join(
            f"  [{i}] " + ", ".join(f"{k}={v}" for k, v in p["axes"].items())
            for i, p in enumerate(grid)
        ) or "  <empty grid>"
        raise ValidationError(
            f"selector matched {len(matches)} grid points (need exactly 1); "
            f"valid points:\n{listing}"
        )
    return matches[0]


def export_point_sdpa(config: SweepConfig, point: dict, objective: str) -> str:
    """Build the requested objective at one grid point and serialize it."""
    from .redfield import apply_dissipator
    from .sdpa import export_sdpa

    chain = _point_chain(config, point)
    eigs = diagonalize(build_hamiltonian(chain, max_qubits=config.max_qubits),
                       gap_threshold=config.gap_threshold)
    baths = _point_baths(chain, point)
    dis = build_dissipator(chain, eigs, baths, config.quadrature, table_cache=_TABLE_CACHE)
    ness = solve_ness(dis, with_coherences=False)
    tables = build_affine_tables(chain, eigs, ness.populations)
    if objective == "pop":
        problem = build_tau_pop_problem(tables, config.t_left, config.t_right)
    elif objective == "pop_coh":
        l2 = apply_dissipator(dis, np.diag(ness.populations).astype(complex))
        problem = build_tau_popcoh_problem(
            tables, l2, config.t_left, config.t_right, free_trace=config.free_trace
        )
    else:
        raise ValidationError(f"unknown objective {objective!r}")
    return export_sdpa(problem)


def run_sweep(config: SweepConfig, output_dir=None) -> SweepResult:
    """Execute every grid point, write results.csv and candidate dumps.

    Failed points are recorded as failed rows; the sweep always finishes.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.grid()
    results: dict[int, tuple] = {}
    jobs = [(config, i, point) for i, point in enumerate(grid)]
    if config.parallelism > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            for index, result, error in pool.map(_worker, jobs):
                results[index] = (result, error)
    else:
        for job in jobs:
            index, result, error = _worker(job)
            results[index] = (result, error)
    rows, candidate_paths = [], []
    n_failed = 0
    for i, point in enumerate(grid):
        result, error = results[i]
        if error is not None:
            failed = _failed_rows(config, point, error)
            n_failed += len(failed)
            rows.extend(failed)
            continue
        n_failed += sum(1 for r in result.rows if str(r["status"]).startswith("failed"))
        rows.extend(result.rows)
        for objective, cand, metadata in result.candidates:
            name = f"candidate_{objective}_point{i:04d}.json"
            dump_path = out / name
            dump_candidate(dump_path, cand, metadata)
            candidate_paths.append(dump_path)
    csv_path = out / "results.csv"
    write_csv(csv_path, rows)
    return SweepResult(
        csv_path=csv_path, rows=rows, n_failed=n_failed, candidate_paths=candidate_paths
    )
