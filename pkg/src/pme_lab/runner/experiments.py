"""Run one configured experiment and stage its artifacts."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from pme_lab.audit import (
    AuditEntry,
    EstimateReport,
    audit_compactness,
    audit_energy,
    audit_energy_family,
    audit_entropy,
    audit_interpolation,
    audit_parabolic_embedding,
    audit_speed,
    audit_wasserstein_holder,
    check_window,
    compare_refinement,
)
from pme_lab.audit.interpolation import holder_conjugate, window_r2
from pme_lab.classes.exponents import gamma_1, gamma_2, lambda_q, thresholds, tilde_q2_range
from pme_lab.classes.regions import point_cloud, region_vertices
from pme_lab.config import LabSettings
from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import ConfigError, InadmissibleWindowError
from pme_lab.keller_segel import KsSeries, KsState, ks_admissible_q, ks_trajectory
from pme_lab.measures.norms import entropy, power_integral
from pme_lab.runner.artifacts import (
    MANIFEST_NAME,
    ArtifactStore,
    DirectoryArtifactStore,
    InMemoryArtifactStore,
    build_manifest,
    csv_text,
    field_text,
    json_text,
)
from pme_lab.runner.loader import RunConfig, dump_run_config
from pme_lab.runner.presets import Setup, build_setup, initial_signal
from pme_lab.splitting import SplitRun, monolithic_solve, split_solve, splitting_refinement_study
from pme_lab.splitting.refinement import RATE_THRESHOLD
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import DriftStructure, ExperimentKind, SolverKind

__all__ = [
    "ExperimentResult",
    "audit_trajectory",
    "compute_trajectory",
    "run",
    "TIMESERIES_COLUMNS",
    "AUDIT_COLUMNS",
    "KS_COLUMNS",
]

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = ["step", "time", "mass", "max_density", "entropy", "power_integral"]
SUBINTERVAL_COLUMNS = ["subinterval", "time", "gap", "mass_drift", "clamp"]
REFINEMENT_COLUMNS = ["n", "w2_to_reference", "w2_to_next", "max_mass_drift"]
AUDIT_COLUMNS = ["audit_name", "pass", "lhs", "constant", "slack"]
REGION_POINT_COLUMNS = ["polygon", "inv_q1", "inv_q2"]
KS_COLUMNS = [
    "time",
    "lyapunov",
    "mass",
    "c_max",
    "c_min",
    "c_integral",
    "organism",
    "quartic",
    "hessian",
    "log_hessian",
    "cross",
    "fitted_n",
]

LYAPUNOV_SLACK = 1e-6
SIGNAL_SLACK = 1e-10
MASS_SLACK = 1e-9
ENERGY_CHECKS = {"energy", "energy-family"}


@dataclass
class ExperimentResult:
    """Exit code, artifact checksums and printable summary of one run."""

    kind: ExperimentKind
    exit_code: int
    artifacts: dict[str, str] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    report: EstimateReport | None = None

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


@dataclass
class _Outcome:
    exit_code: int
    summary: list[str]
    report: EstimateReport | None = None


def _exponent_q(config: RunConfig) -> float:
    # Exponent-only experiments default to q = 1 rather than q = m.
    return config.model.q if config.model.q is not None else 1.0


def compute_trajectory(
    config: RunConfig,
    setup: Setup,
    settings: LabSettings,
    measure_gaps: bool = False,
) -> tuple[TrajectoryRecord, SplitRun | None]:
    """Step the configured solver over the whole time partition."""
    m = config.model.m
    if config.model.solver is SolverKind.SPLIT:
        split = split_solve(
            setup.rho0,
            setup.drift,
            m,
            setup.partition,
            record_steps=True,
            measure_gaps=measure_gaps,
            tol=settings.newton_tol,
            max_iter=settings.max_iter,
        )
        return split.trajectory, split
    record = monolithic_solve(
        setup.rho0,
        setup.drift,
        m,
        setup.partition,
        tol=settings.newton_tol,
        max_iter=settings.max_iter,
    )
    return record, None


def _trajectory_rows(trajectory: TrajectoryRecord, q: float) -> list[dict[str, float]]:
    return [
        {
            "step": k,
            "time": rho.time,
            "mass": rho.mass,
            "max_density": float(rho.values.max()),
            "entropy": entropy(rho),
            "power_integral": power_integral(rho, q),
        }
        for k, rho in enumerate(trajectory.fields)
    ]


def _dump_indices(count: int, stride: int) -> list[int]:
    if stride <= 0:
        return sorted({0, count - 1})
    return sorted(set(range(0, count, stride)) | {count - 1})


def _dump_fields(store: ArtifactStore, trajectory: TrajectoryRecord, stride: int) -> None:
    for k in _dump_indices(len(trajectory), stride):
        store.put(f"fields/rho_{k:05d}.txt", field_text(trajectory.fields[k], "rho"))


def _structure(config: RunConfig, drift: VectorFieldSpec) -> DriftStructure:
    return config.drift.structure or drift.structure


def run_simulate(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    setup = build_setup(config)
    trajectory, split = compute_trajectory(config, setup, settings, measure_gaps=True)
    final = trajectory.final
    store.put("timeseries.csv", csv_text(_trajectory_rows(trajectory, config.q), TIMESERIES_COLUMNS))

    summary = {
        "solver": config.model.solver.value,
        "m": config.model.m,
        "q": config.q,
        "drift": setup.drift.name,
        "cells": list(setup.grid.cells),
        "steps": setup.partition.steps,
        "final_time": final.time,
        "final_mass": final.mass,
        "mass_change": final.mass - setup.rho0.mass,
    }
    if split is not None:
        rows = [
            {
                "subinterval": i,
                "time": split.times[i],
                "gap": split.gaps[i - 1] if split.gaps else None,
                "mass_drift": split.mass_drift[i - 1],
                "clamp": split.clamp[i - 1],
            }
            for i in range(1, len(split.times))
        ]
        store.put("subintervals.csv", csv_text(rows, SUBINTERVAL_COLUMNS))
        summary.update(
            {
                "subintervals": split.n,
                "transport_bound": split.transport_bound,
                "gap_bound_holds": split.gap_bound_holds(2.0 * setup.grid.max_spacing),
                "mass_drift_per_unit_time": split.drift_per_unit_time(),
            }
        )
    store.put("summary.json", json_text(summary))
    if config.output.fields:
        _dump_fields(store, trajectory, config.output.field_stride)

    return _Outcome(
        0,
        [
            f"Simulated {setup.partition.steps} steps ({config.model.solver.value}) "
            f"to t={final.time:g}, mass {final.mass:.12f}"
        ],
    )


def run_split_study(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    setup = build_setup(config)
    report = splitting_refinement_study(
        setup.rho0,
        setup.drift,
        config.model.m,
        setup.partition,
        config.time.n_values,
        reference=True,
        tol=settings.newton_tol,
        max_iter=settings.max_iter,
    )
    store.put("refinement.csv", csv_text(report.rows(), REFINEMENT_COLUMNS))
    store.put(
        "refinement.json",
        json_text(
            {
                "n_values": report.n_values,
                "rate": report.rate,
                "reference_rate": report.reference_rate,
                "successive_rate": report.successive_rate,
                "rate_threshold": RATE_THRESHOLD,
                "monotone": report.monotone,
                "passed": report.passed,
            }
        ),
    )
    verdict = "pass" if report.passed else "FAIL"
    return _Outcome(
        0 if report.passed else 1,
        [f"Splitting rate {report.rate:.3f} over n={report.n_values} (monotone {report.monotone}): {verdict}"],
    )


def _check_audit_windows(config: RunConfig) -> None:
    """Reject interpolation and Hölder exponents before any solve."""
    m, q, d = config.model.m, config.q, config.dimension
    checks = set(config.audit.checks)
    try:
        if "interpolation" in checks:
            r1 = config.audit.r1 if config.audit.r1 is not None else q
            r2 = config.audit.r2 if config.audit.r2 is not None else window_r2(m, q, d, r1)
            check_window(m, q, d, r1, r2)
        if "compactness" in checks:
            cases = []
            if q <= m + 1.0:
                cases.append((gamma_1(m, d, q), 1.0))
            if q >= max(1.0, m - 1.0):
                cases.append((gamma_2(m, d, q), q))
            for gamma, power in cases:
                holder_conjugate(gamma, config.drift.q1, power)
                holder_conjugate(gamma, config.drift.q2, power)
    except InadmissibleWindowError as e:
        raise ConfigError(f"{e} (bound {e.bound})") from e


def audit_trajectory(
    config: RunConfig,
    trajectory: TrajectoryRecord,
    drift: VectorFieldSpec,
    n: int | None = None,
    refined: TrajectoryRecord | None = None,
    refined_drift: VectorFieldSpec | None = None,
) -> EstimateReport:
    """Run every enabled audit of ``config.audit.checks`` on one trajectory.

    ``refined`` is the same run on a grid refined once in space and time;
    energy audits under a general drift fail without it.
    """
    m, q = config.model.m, config.q
    q1, q2 = config.drift.q1, config.drift.q2
    grid = trajectory.grid
    structure = _structure(config, drift)
    checks = set(config.audit.checks)
    report = EstimateReport(m=m, q=q, d=grid.dimension, drift=drift.name, cells=grid.cells, n=n)
    refinement = {"refined": refined, "refined_drift": refined_drift, "growth": config.tolerances.growth}

    if "energy" in checks:
        report.add(audit_energy(trajectory, m, q, structure, drift, q1, q2, **refinement))
    if "energy-family" in checks:
        report.extend(audit_energy_family(trajectory, m, q, structure, drift, q1, q2, **refinement))
    if "entropy" in checks:
        report.add(audit_entropy(trajectory, m, drift, q1, q2))
    if "speed" in checks:
        report.add(audit_speed(trajectory, m, q, drift, q1))
    if "holder" in checks:
        lam = lambda_q(m, q, grid.dimension)
        report.add(audit_wasserstein_holder(trajectory, lam, epsilon=config.tolerances.sinkhorn_epsilon))
    if "interpolation" in checks:
        r1 = config.audit.r1 if config.audit.r1 is not None else q
        report.add(audit_interpolation(trajectory, m, q, r1, config.audit.r2))
    if "parabolic-embedding" in checks:
        report.add(audit_parabolic_embedding(trajectory, m, q))
    if "compactness" in checks:
        report.extend(audit_compactness(trajectory, m, q, drift, q1, q2))
    return report


def _refined_run(config: RunConfig, settings: LabSettings) -> tuple[RunConfig, Setup, TrajectoryRecord]:
    """The configured run on a grid refined once in space and time."""
    fine_config = replace(
        config,
        grid=replace(config.grid, cells=tuple(2 * n for n in config.grid.cells)),
        time=replace(config.time, steps=2 * config.time.steps),
    )
    fine_setup = build_setup(fine_config)
    fine_trajectory, _ = compute_trajectory(fine_config, fine_setup, settings)
    return fine_config, fine_setup, fine_trajectory


def _refinement_entry(
    config: RunConfig,
    setup: Setup,
    trajectory: TrajectoryRecord,
    fine_config: RunConfig,
    fine_setup: Setup,
    fine_trajectory: TrajectoryRecord,
) -> AuditEntry:
    """Energy constant on the run grid against the grid refined once in space and time."""
    m, q = config.model.m, config.q
    q1, q2 = config.drift.q1, config.drift.q2
    structure = _structure(config, setup.drift)
    coarse = audit_energy(
        trajectory,
        m,
        q,
        structure,
        setup.drift,
        q1,
        q2,
        refined=fine_trajectory,
        refined_drift=fine_setup.drift,
    )
    if "refined_constant" in coarse.metadata:
        fine = coarse.metadata["refined_constant"]
    else:
        fine = audit_energy(fine_trajectory, m, q, structure, fine_setup.drift, q1, q2).constant
    check = compare_refinement(coarse, fine, config.tolerances.growth)
    return AuditEntry(
        name="energy_refinement",
        lhs=check.fine,
        rhs_terms={"coarse_constant": check.coarse},
        constant=None,
        passed=check.passed,
        slack=check.allowance - check.growth,
        metadata={
            "growth": check.growth,
            "allowance": check.allowance,
            "fine_cells": list(fine_config.grid.cells),
            "fine_steps": fine_config.time.steps,
        },
    )


def _split_entries(config: RunConfig, split: SplitRun) -> list[AuditEntry]:
    """``L^q`` growth for ``q ∈ {2, m, ∞}`` and the Hölder-in-time bound of the split run."""
    entries = []
    for q in dict.fromkeys((2.0, config.model.m, math.inf)):
        check = split.lq_growth_check(q)
        entries.append(
            AuditEntry(
                name=f"split_lq[q={q:g}]",
                lhs=check.worst_ratio,
                rhs_terms={"allowance": check.allowance},
                constant=None,
                passed=check.passed,
                slack=check.allowance - check.worst_ratio,
                metadata={"q": q, "subintervals": split.n},
            )
        )
    holder = split.holder_check(epsilon=config.tolerances.sinkhorn_epsilon)
    entries.append(
        AuditEntry(
            name="split_holder",
            lhs=holder.worst_excess,
            rhs_terms={"slack": holder.slack},
            constant=holder.constant,
            passed=holder.passed,
            slack=holder.slack - holder.worst_excess,
            metadata={"pairs": holder.pairs, "subintervals": split.n},
        )
    )
    return entries


def _audit_rows(report: EstimateReport) -> list[dict[str, object]]:
    return [
        {
            "audit_name": e.name,
            "pass": e.passed,
            "lhs": e.lhs if not isinstance(e.lhs, list) else None,
            "constant": e.constant,
            "slack": e.slack,
        }
        for e in report.entries
    ]


def _report_lines(report: EstimateReport) -> list[str]:
    lines = [f"  {e.name}: {'pass' if e.passed else 'FAIL'}" for e in report.entries]
    failed = report.failed()
    if failed:
        lines.append(f"{len(failed)} of {len(report.entries)} audits failed: {', '.join(failed)}")
    else:
        lines.append(f"All {len(report.entries)} audits passed")
    return lines


def run_audit(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    setup = build_setup(config)
    _check_audit_windows(config)
    trajectory, split = compute_trajectory(config, setup, settings)
    general_energy = _structure(config, setup.drift) is DriftStructure.GENERAL and bool(
        ENERGY_CHECKS & set(config.audit.checks)
    )
    fine = _refined_run(config, settings) if config.audit.refinement or general_energy else None
    report = audit_trajectory(
        config,
        trajectory,
        setup.drift,
        n=split.n if split is not None else None,
        refined=fine[2] if fine is not None else None,
        refined_drift=fine[1].drift if fine is not None else None,
    )
    if split is not None:
        report.extend(_split_entries(config, split))
    if config.audit.refinement:
        report.add(_refinement_entry(config, setup, trajectory, *fine))

    store.put("report.json", json_text(report.to_dict()))
    store.put("audits.csv", csv_text(_audit_rows(report), AUDIT_COLUMNS))
    store.put("timeseries.csv", csv_text(_trajectory_rows(trajectory, config.q), TIMESERIES_COLUMNS))
    if config.output.fields:
        _dump_fields(store, trajectory, config.output.field_stride)
    return _Outcome(report.exit_code, ["Audits:", *_report_lines(report)], report)


def run_regions(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    region = region_vertices(config.experiment.figure, config.model.m, config.model.d, _exponent_q(config))
    store.put("region.json", json_text({"schema_version": 1, **region.to_dict()}))
    store.put(
        "region_points.csv",
        csv_text(point_cloud(region, config.experiment.resolution), REGION_POINT_COLUMNS),
    )
    lines = [f"Figure {region.figure.value} (m={region.m:g}, d={region.d}):"]
    lines.extend(f"  {label} = ({x:.6g}, {y:.6g})" for label, (x, y) in region.vertices.items())
    return _Outcome(0, lines)


def run_thresholds(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    m, d, q = config.model.m, config.model.d, _exponent_q(config)
    values = thresholds(m, d, q)
    low, high = tilde_q2_range(m, d, q)
    store.put(
        "thresholds.json",
        json_text(
            {
                "schema_version": 1,
                "thresholds": values.to_dict(),
                "tilde_q2_range": {"low": low, "high": high, "unbounded": math.isinf(high)},
            }
        ),
    )
    lines = [f"Thresholds at m={m:g}, d={d}, q={q:g}:"]
    lines.extend(
        f"  {name} = {'none' if value is None else f'{value:.12g}'}"
        for name, value in values.to_dict().items()
        if name not in ("m", "d", "q")
    )
    return _Outcome(0, lines)


def _ks_report(config: RunConfig, series: KsSeries, c0: np.ndarray) -> EstimateReport:
    grid = series.trajectory.grid
    report = EstimateReport(
        m=config.model.m,
        q=config.q,
        d=grid.dimension,
        drift="chemotactic" if config.model.chemotaxis else "none",
        cells=grid.cells,
    )
    lyapunov = series.column("lyapunov")
    worst = float(np.max(series.lyapunov_increments(), initial=-math.inf))
    report.add(
        AuditEntry(
            name="ks_lyapunov",
            lhs=worst,
            rhs_terms={"initial": float(lyapunov[0]), "final": float(lyapunov[-1])},
            constant=None,
            passed=worst <= LYAPUNOV_SLACK,
            slack=LYAPUNOV_SLACK - worst,
        )
    )

    c_max = float(series.column("c_max").max())
    c_min = float(series.column("c_min").min())
    bound = float(c0.max()) + SIGNAL_SLACK
    report.add(
        AuditEntry(
            name="ks_signal_bounds",
            lhs=c_max,
            rhs_terms={"initial_max": float(c0.max())},
            constant=None,
            passed=c_max <= bound and c_min >= 0.0,
            slack=min(bound - c_max, c_min),
            metadata={"c_min": c_min},
        )
    )

    growth = float(np.max(np.diff(series.column("c_integral")), initial=-math.inf))
    report.add(
        AuditEntry(
            name="ks_signal_integral",
            lhs=growth,
            constant=None,
            passed=growth <= SIGNAL_SLACK,
            slack=SIGNAL_SLACK - growth,
        )
    )

    masses = series.column("mass")
    drift = float(np.max(np.abs(masses - masses[0])))
    report.add(
        AuditEntry(
            name="ks_mass",
            lhs=drift,
            constant=None,
            passed=drift <= MASS_SLACK,
            slack=MASS_SLACK - drift,
        )
    )
    return report


def run_ks(config: RunConfig, settings: LabSettings, store: ArtifactStore) -> _Outcome:
    setup = build_setup(config)
    c0 = initial_signal(config.initial, setup.grid)
    state = KsState(setup.rho0, c0)
    series = ks_trajectory(
        state,
        config.model.m,
        setup.partition.dt,
        setup.partition.steps,
        chemotaxis=config.model.chemotaxis,
        tol=settings.newton_tol,
        max_iter=settings.max_iter,
    )
    report = _ks_report(config, series, c0)
    store.put("ks_timeseries.csv", csv_text(series.rows, KS_COLUMNS))
    store.put("report.json", json_text(report.to_dict()))

    lines = ["Keller-Segel audits:", *_report_lines(report)]
    if config.model.d is not None:
        admissibility = ks_admissible_q(config.model.m, config.model.d, config.model.q)
        store.put("ks_admissibility.json", json_text(admissibility.to_dict()))
        lines.append(
            f"q_max = {admissibility.q_max:.6g} at m={config.model.m:g}, d={config.model.d} "
            f"(regime {admissibility.regime.value})"
        )
    if config.output.fields:
        final = series.final
        store.put("fields/rho_final.txt", field_text(final.rho, "rho"))
        store.put("fields/c_final.txt", field_text(final.c, "c", final.grid, final.time))
    return _Outcome(report.exit_code, lines, report)


RUNNERS: dict[ExperimentKind, Callable[[RunConfig, LabSettings, ArtifactStore], _Outcome]] = {
    ExperimentKind.SIMULATE: run_simulate,
    ExperimentKind.SPLIT_STUDY: run_split_study,
    ExperimentKind.AUDIT: run_audit,
    ExperimentKind.REGIONS: run_regions,
    ExperimentKind.THRESHOLDS: run_thresholds,
    ExperimentKind.KS: run_ks,
}


def run(
    config: RunConfig,
    settings: LabSettings | None = None,
    store: ArtifactStore | None = None,
) -> ExperimentResult:
    """Execute the experiment and write its artifacts plus ``manifest.json``.

    Artifacts are staged in memory and only written once the experiment
    has finished, so a run that raises leaves no output behind.

    Args:
        config: Validated run configuration.
        settings: Output directory and solver defaults; resolved from the
            environment and ``config`` when omitted.
        store: Destination; a directory store at ``settings.out_dir`` when
            omitted.
    """
    if settings is None:
        settings = LabSettings.from_env(config=config)
    label = f" '{config.experiment.name}'" if config.experiment.name else ""
    logger.info(f"Starting {config.kind.value} experiment{label}")

    staged = InMemoryArtifactStore()
    outcome = RUNNERS[config.kind](config, settings, staged)
    staged.put("config.yaml", dump_run_config(config))

    target = store if store is not None else DirectoryArtifactStore(settings.out_dir)
    for name, content in staged.items():
        target.put(name, content)
    artifacts = staged.list_artifacts()
    target.put(MANIFEST_NAME, build_manifest(config.to_dict(), artifacts))
    logger.info(f"Wrote {len(artifacts) + 1} artifacts to {getattr(target, 'root', 'memory')}")

    return ExperimentResult(
        kind=config.kind,
        exit_code=outcome.exit_code,
        artifacts=artifacts,
        summary=outcome.summary,
        report=outcome.report,
    )
