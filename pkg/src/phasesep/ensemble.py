"""Monte Carlo orchestration: seeded trajectory execution, aggregation,
refinement studies, and artifact persistence.

Determinism contract: a report is a pure function of its RunConfig.  Worker
processes only change scheduling, never results; per-trajectory records are
aggregated in trajectory-id order whatever order they complete in.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, RunConfig, validate_config
from .diagnostics import TrajectoryRecord, exp_moment_estimate
from .errors import ConfigError, ParameterError, SchemaVersionError
from .grids import Field, Grid, dirichlet_spectrum, l2_norm
from .noise import NoiseFamily, make_polynomial_family
from .potential import LogPotential, PotentialConstants
from .solver import SchemeConfig, run_trajectory

CSV_HEADER = "traj_id,t,delta,energy,g_mass_s0,g_mass_s0p1,l2,h1,h2_proxy,sup_u,holder_alpha"

EXP_MOMENT_ORDERS = (1, 2, 4)


def make_potential(cfg: RunConfig) -> LogPotential:
    return LogPotential(theta=cfg.theta, theta0=cfg.theta0)


def make_noise(cfg: RunConfig) -> NoiseFamily:
    return make_polynomial_family(s0=cfg.s0, K=cfg.K, sigma0=cfg.sigma0,
                                  gamma=cfg.gamma)


def make_grid(cfg: RunConfig) -> Grid:
    return Grid(d=cfg.d, n=cfg.n, L=cfg.L)


def make_scheme(cfg: RunConfig, dt: float | None = None) -> SchemeConfig:
    return SchemeConfig(dt=cfg.dt if dt is None else dt, scheme=cfg.scheme_kind,
                        lam=cfg.lam, n_modes=cfg.n_modes,
                        newton_tol=cfg.newton_tol, max_newton=cfg.max_newton)


def initial_field(cfg: RunConfig, grid: Grid | None = None) -> Field:
    """Initial state: a constant, the first eigenvector scaled to
    sup = 1 - delta0, or node values from a file."""
    grid = make_grid(cfg) if grid is None else grid
    if cfg.init_kind == "constant":
        return Field(grid, np.full(grid.shape, cfg.amplitude))
    if cfg.init_kind == "eigen_bump":
        e1 = dirichlet_spectrum(grid, 1).eigenvector(0)
        scale = (1.0 - cfg.delta0) / float(np.max(np.abs(e1.values)))
        return Field(grid, e1.values * scale)
    values = np.loadtxt(cfg.init_path, dtype=float).ravel()
    if values.size != grid.n_total:
        raise ConfigError(
            f"init file holds {values.size} values, grid needs {grid.n_total}"
        )
    if np.max(np.abs(values)) > 1.0 - cfg.delta0 + 1e-12:
        raise ConfigError("init file values violate sup|u0| <= 1 - delta0")
    return Field(grid, values.reshape(grid.shape))


def _run_one(cfg: RunConfig, traj_id: int, dt: float | None = None,
             substeps: int = 1, heat_only: bool = False,
             scheme_override: str | None = None,
             lam_override: float | None = None) -> TrajectoryRecord:
    grid = make_grid(cfg)
    potential = None if heat_only else make_potential(cfg)
    noise = None if heat_only or cfg.sigma0 == 0.0 else make_noise(cfg)
    scheme = SchemeConfig(
        dt=cfg.dt if dt is None else dt,
        scheme=cfg.scheme_kind if scheme_override is None else scheme_override,
        lam=cfg.lam if lam_override is None else lam_override,
        n_modes=cfg.n_modes, newton_tol=cfg.newton_tol,
        max_newton=cfg.max_newton,
    )
    constants = None if potential is None else PotentialConstants.for_potential(potential)
    return run_trajectory(
        initial_field(cfg, grid), cfg.T, scheme, potential, noise,
        master_seed=cfg.master_seed, traj_id=traj_id, substeps=substeps,
        stride=cfg.stride, alpha=cfg.alpha, delta0=cfg.delta0,
        constants=constants, s0=cfg.s0, fingerprint=cfg.fingerprint(),
    )


def _run_one_tagged(cfg: RunConfig, traj_id: int) -> TrajectoryRecord:
    try:
        return _run_one(cfg, traj_id)
    except Exception as exc:
        raise type(exc)(
            f"trajectory {traj_id} failed (replay with master_seed="
            f"{cfg.master_seed}, traj_id={traj_id}): {exc}"
        ) from exc


def _worker(payload):
    raw, traj_id = payload
    cfg = validate_config(raw)
    return traj_id, _run_one_tagged(cfg, traj_id)


@dataclass(eq=False)
class EnsembleReport:
    schema_version: str
    config: dict
    fingerprint: str
    per_trajectory: list
    aggregate: dict
    hypotheses_unverified: bool = False

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "config": self.config,
            "fingerprint": self.fingerprint,
            "per_trajectory": self.per_trajectory,
            "aggregate": self.aggregate,
        }
        if self.hypotheses_unverified:
            out["hypotheses_unverified"] = True
        return out


def aggregate_summaries(summaries: list, delta0: float) -> dict:
    """Ensemble statistics, recomputable from the per-trajectory summaries."""
    dmins = np.array([s["delta_min"] for s in summaries])
    integrals = np.array([s["g_mass_s0p1_time_integral"] for s in summaries])
    qs = [0.0, 0.25, 0.5, 0.75, 1.0]
    quants = np.quantile(dmins, qs)
    exp_moments = {}
    for q in EXP_MOMENT_ORDERS:
        if np.all(np.isfinite(integrals)):
            exp_moments[str(q)] = exp_moment_estimate(integrals, q).to_dict()
        else:
            exp_moments[str(q)] = {"mean": None, "stderr": None, "overflow": True}
    return {
        "n_traj": len(summaries),
        "delta_min_min": float(quants[0]),
        "delta_min_q25": float(quants[1]),
        "delta_min_median": float(quants[2]),
        "delta_min_q75": float(quants[3]),
        "delta_min_max": float(quants[4]),
        "separated_fraction": float(np.mean(dmins >= delta0 / 2.0)),
        "exp_moment": exp_moments,
        "total_clamp_events": int(sum(s["clamp_events"] for s in summaries)),
    }


def run_ensemble(cfg: RunConfig, workers: int = 1,
                 hypotheses_unverified: bool = False):
    """Run n_traj independent trajectories and aggregate.

    Returns (EnsembleReport, records).  The report is identical for any
    worker count at a fixed config.
    """
    ids = list(range(cfg.n_traj))
    records: dict[int, TrajectoryRecord] = {}
    if workers <= 1 or cfg.n_traj == 1:
        for i in ids:
            records[i] = _run_one_tagged(cfg, i)
    else:
        raw = cfg.effective_dict()
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for traj_id, rec in pool.map(_worker, [(raw, i) for i in ids]):
                records[traj_id] = rec
    ordered = [records[i] for i in ids]
    summaries = []
    for rec in ordered:
        s = rec.summary()
        s["seed"] = {"master_seed": cfg.master_seed, "spawn_key": [rec.trajectory_id]}
        summaries.append(s)
    report = EnsembleReport(
        schema_version=SCHEMA_VERSION,
        config=cfg.effective_dict(),
        fingerprint=cfg.fingerprint(),
        per_trajectory=summaries,
        aggregate=aggregate_summaries(summaries, cfg.delta0),
        hypotheses_unverified=hypotheses_unverified,
    )
    return report, ordered


def _pair_distance(a: TrajectoryRecord, b: TrajectoryRecord, grid: Grid) -> float:
    return l2_norm(Field(grid, a.final_values - b.final_values))


@dataclass(eq=False)
class StudyReport:
    schema_version: str
    kind: str
    config: dict
    fingerprint: str
    levels: list
    metrics: list
    verdicts: dict
    hypotheses_unverified: bool = False

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "fingerprint": self.fingerprint,
            "levels": self.levels,
            "metrics": self.metrics,
            "verdicts": self.verdicts,
        }
        if self.hypotheses_unverified:
            out["hypotheses_unverified"] = True
        return out


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def convergence_study(cfg: RunConfig, hypotheses_unverified: bool = False) -> StudyReport:
    """Coupled-path refinement study; the kind and levels come from the
    config's study section."""
    if cfg.study_kind is None:
        raise ConfigError("config has no study section")
    kind = cfg.study_kind
    levels = list(cfg.study_levels)
    grid = make_grid(cfg)
    metrics: list = []
    verdicts: dict = {}

    ids = list(range(cfg.n_traj))

    def rms(pairs):
        return math.sqrt(sum(_pair_distance(a, b, grid) ** 2 for a, b in pairs)
                         / len(pairs))

    if kind == "dt_refine":
        dts = sorted(levels, reverse=True)
        dt_fine = dts[-1]
        runs = []
        for dt in dts:
            ratio = dt / dt_fine
            sub = int(round(ratio))
            if abs(sub - ratio) > 1e-9:
                raise ConfigError("dt levels must be integer multiples of the finest")
            runs.append([_run_one(cfg, i, dt=dt, substeps=sub) for i in ids])
        dists = [rms(list(zip(a, b))) for a, b in zip(runs, runs[1:])]
        metrics = [{"dt": dt, "delta_min": min(r.delta_min for r in level)}
                   for dt, level in zip(dts, runs)]
        for i, dval in enumerate(dists):
            metrics[i]["l2_distance_to_next"] = dval
        verdicts["pairwise_distances_strictly_decreasing"] = _strictly_decreasing(dists)

    elif kind == "lambda_refine":
        lams = sorted(levels, reverse=True)
        reference = [_run_one(cfg, i, scheme_override="split_implicit") for i in ids]
        dists = []
        for lam in lams:
            level = [_run_one(cfg, i, scheme_override="yosida_galerkin",
                              lam_override=lam) for i in ids]
            dist = rms(list(zip(level, reference)))
            dists.append(dist)
            metrics.append({"lambda": lam, "l2_distance_to_reference": dist,
                            "excursion_max": max(r.excursion_max for r in level)})
        verdicts["distance_to_reference_strictly_decreasing"] = _strictly_decreasing(dists)

    elif kind == "grid_refine":
        # Pure heat runs: potential and noise switched off, so the first-mode
        # amplitude must follow the implicit-Euler heat decay.
        ns = sorted(int(v) for v in levels)
        errors, spatial = [], []
        lam_cont = cfg.d * (math.pi / cfg.L) ** 2
        decay_exact = math.exp(-lam_cont * cfg.T)
        decay_time_matched = (1.0 + cfg.dt * lam_cont) ** (-cfg.n_steps)
        for n_level in ns:
            level_cfg = _with_n(cfg, n_level)
            rec = _run_one(level_cfg, 0, heat_only=True)
            level_grid = make_grid(level_cfg)
            e1 = dirichlet_spectrum(level_grid, 1).eigenvector(0)
            u0 = initial_field(level_cfg, level_grid)
            c0 = _mode_coefficient(u0, e1, level_grid)
            cT = _mode_coefficient(Field(level_grid, rec.final_values), e1, level_grid)
            ratio = cT / c0
            err = abs(ratio - decay_exact)
            # same time discretization at the continuum eigenvalue isolates
            # the spatial part of the decay error, which must be O(h^2)
            sp = abs(ratio - decay_time_matched)
            errors.append(err)
            spatial.append(sp)
            metrics.append({"n": n_level, "mode1_decay": ratio,
                            "exact_decay": decay_exact, "abs_error": err,
                            "spatial_error": sp})
        verdicts["mode1_error_strictly_decreasing"] = _strictly_decreasing(errors)
        verdicts["finest_within_2pct"] = bool(
            abs(metrics[-1]["mode1_decay"] / decay_exact - 1.0) < 0.02
        )
        ratios = [a / b for a, b in zip(spatial, spatial[1:])]
        verdicts["spatial_error_second_order"] = bool(
            all(3.0 < r < 5.5 for r in ratios)
        )

    elif kind == "noise_scale":
        sigmas = sorted(levels)
        reference = _run_one(_with_sigma0(cfg, 0.0), 0)
        for s in sigmas:
            run = _run_one(_with_sigma0(cfg, s), 0)
            metrics.append({
                "sigma0": s,
                "delta_min": run.delta_min,
                "l2_distance_to_deterministic": _pair_distance(run, reference, grid),
            })
        verdicts["reported_only"] = True

    return StudyReport(
        schema_version=SCHEMA_VERSION, kind=kind, config=cfg.effective_dict(),
        fingerprint=cfg.fingerprint(), levels=levels, metrics=metrics,
        verdicts=verdicts, hypotheses_unverified=hypotheses_unverified,
    )


def _with_n(cfg: RunConfig, n: int) -> RunConfig:
    raw = cfg.effective_dict()
    raw["domain"]["n"] = n
    raw.pop("study", None)
    return validate_config(raw)


def _with_sigma0(cfg: RunConfig, sigma0: float) -> RunConfig:
    raw = cfg.effective_dict()
    raw["noise"]["sigma0"] = sigma0
    raw.pop("study", None)
    return validate_config(raw)


def _mode_coefficient(u: Field, mode: Field, grid: Grid) -> float:
    return grid.h**grid.d * float(np.sum(u.values * mode.values))


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def write_timeseries_csv(records: list, path: str | Path):
    """Delimited snapshot series, one row per (trajectory, snapshot), LF line
    endings, 17 significant digits."""
    lines = [CSV_HEADER]
    for rec in records:
        for i, t in enumerate(rec.times):
            lines.append(",".join([
                str(rec.trajectory_id), _fmt(t), _fmt(rec.delta[i]),
                _fmt(rec.energy[i]), _fmt(rec.g_mass_s0[i]),
                _fmt(rec.g_mass_s0p1[i]), _fmt(rec.l2[i]), _fmt(rec.h1[i]),
                _fmt(rec.h2_proxy[i]), _fmt(rec.sup_u[i]),
                _fmt(rec.holder_alpha[i]),
            ]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def persist(report, records: list, out_dir: str | Path) -> dict:
    """Write report.json and timeseries.csv into out_dir; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", newline="\n"
    )
    csv_path = out / "timeseries.csv"
    write_timeseries_csv(records, csv_path)
    return {"report": str(report_path), "timeseries": str(csv_path)}


def load_report(out_dir: str | Path) -> dict:
    path = Path(out_dir) / "report.json"
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read report at {path}: {exc}") from exc
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"report schema version {version!r} unsupported (expected {SCHEMA_VERSION!r})"
        )
    return data


def load_records(out_dir: str | Path) -> tuple[dict, list]:
    """Rebuild TrajectoryRecords from persisted artifacts (for audits)."""
    data = load_report(out_dir)
    csv_path = Path(out_dir) / "timeseries.csv"
    text = csv_path.read_text()
    lines = [ln for ln in text.strip().split("\n") if ln]
    if lines[0] != CSV_HEADER:
        raise ParameterError(f"unexpected CSV header in {csv_path}")
    cols = CSV_HEADER.split(",")
    by_traj: dict[int, list] = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        tid = int(parts[0])
        by_traj.setdefault(tid, []).append([float(p) for p in parts[1:]])
    cfg = data["config"]
    meta = {
        "d": cfg["domain"]["d"], "n": cfg["domain"]["n"], "L": cfg["domain"]["L"],
        "s0": cfg["noise"]["s0"], "alpha": cfg["diagnostics"]["alpha"],
        "dt": cfg["time"]["dt"], "T": cfg["time"]["T"],
        "scheme": cfg["scheme"]["kind"], "stride": cfg["time"]["stride"],
        "delta0": cfg["init"]["delta0"],
    }
    summaries = {s["trajectory_id"]: s for s in data["per_trajectory"]}
    records = []
    for tid in sorted(by_traj):
        arr = np.array(by_traj[tid])
        s = summaries[tid]
        records.append(TrajectoryRecord(
            trajectory_id=tid,
            fingerprint=data["fingerprint"],
            meta=dict(meta, traj_id=tid),
            times=arr[:, 0], delta=arr[:, 1], energy=arr[:, 2],
            g_mass_s0=arr[:, 3], g_mass_s0p1=arr[:, 4], l2=arr[:, 5],
            h1=arr[:, 6], h2_proxy=arr[:, 7], sup_u=arr[:, 8],
            holder_alpha=arr[:, 9],
            delta_min=s["delta_min"],
            g_mass_s0p1_time_integral=s["g_mass_s0p1_time_integral"],
            clamp_events=s["clamp_events"],
        ))
    return data, records
