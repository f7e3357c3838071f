"""Config-driven experiments: community detection on real layer stacks,
Monte Carlo grids over synthetic models, and scree tables."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import genmodel
from .errors import ConfigError, SumSpecError
from .estimate import estimate_B, estimate_pi
from .evaluate import alpha_lambda, gamma_n, misclassification, spectral_norm_deviation
from .netcore import aggregate_sum, load_manifest, truncate_by_degree
from .pipeline import Options, detect
from .eigensolve import scree_values

log = logging.getLogger(__name__)

CSV_VERSION = 1
CSV_COLUMNS = [
    "model", "n", "T", "seed_index", "seed", "algorithm", "status",
    "overall_error", "n_prime", "n_double_prime", "threshold", "dbar",
    "spectral_dev", "gamma_n", "alpha", "lambda", "objective", "error",
]
SCREE_COLUMNS = ["index", "abs_eigenvalue", "ratio_to_next"]


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: float = Field(1e-8, gt=0)
    restarts: int = Field(20, ge=1)
    delta: float = Field(0.25, gt=0)
    max_restarts: Optional[int] = Field(None, ge=1)

    def options(self, seed: int) -> Options:
        return Options(tol=self.tol, restarts=self.restarts, seed=seed,
                       delta=self.delta, max_restarts=self.max_restarts)


class ModelConfig(BaseModel):
    """Synthetic model. ``b`` is a single matrix reused for every layer;
    ``b_stack`` fixes T. With ``b_scale == "per_n"`` entries are divided by n."""

    model_config = ConfigDict(extra="forbid")

    name: str = "model"
    k: int = Field(ge=1)
    pi: list[float]
    b: Optional[list[list[float]]] = None
    b_stack: Optional[list[list[list[float]]]] = None
    b_scale: Literal["none", "per_n"] = "none"
    psi: Union[None, Literal["uniform"], list[float]] = None
    psi_range: tuple[float, float] = (0.2, 1.0)

    @model_validator(mode="after")
    def _one_b(self):
        if (self.b is None) == (self.b_stack is None):
            raise ValueError("give exactly one of 'b' and 'b_stack'")
        if len(self.pi) != self.k:
            raise ValueError(f"pi has {len(self.pi)} entries for k={self.k}")
        return self

    def layer_matrices(self, n: int, t: int) -> list:
        if self.b_stack is not None:
            if len(self.b_stack) != t:
                raise ConfigError(f"model {self.name!r} has {len(self.b_stack)} layers, grid asks T={t}")
            mats = [np.asarray(b, dtype=np.float64) for b in self.b_stack]
        else:
            mats = [np.asarray(self.b, dtype=np.float64)] * t
        if self.b_scale == "per_n":
            mats = [m / n for m in mats]
        return mats


def _check_model(model: ModelConfig, n: int, t: int) -> None:
    try:
        genmodel.ModelParams(model.k, model.pi, tuple(model.layer_matrices(n, t)))
    except (SumSpecError, ValueError) as exc:
        raise ValueError(f"model {model.name!r} at n={n}, T={t}: {exc}") from exc


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: list[int] = Field(min_length=1)
    T: list[int] = Field(min_length=1)
    seeds: int = Field(ge=1)

    @field_validator("n", "T")
    @classmethod
    def _positive(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("grid sizes must be >= 1")
        return v


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["detect", "simulate", "scree"]
    seed: int = 0
    k: Optional[int] = Field(None, ge=1)
    kmax: Optional[int] = Field(None, ge=1)
    algorithm: Union[Literal["alg1", "alg2"], list[Literal["alg1", "alg2"]]] = "alg1"
    manifest: Optional[str] = None
    models: list[ModelConfig] = Field(default_factory=list)
    grid: Optional[GridConfig] = None
    n: Optional[int] = Field(None, ge=1)
    T: Optional[int] = Field(None, ge=1)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    diagnostics: bool = True
    workers: int = Field(1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _single_model(cls, data):
        if isinstance(data, dict) and "model" in data:
            data = dict(data)
            if "models" in data:
                raise ValueError("use either 'model' or 'models'")
            data["models"] = [data.pop("model")]
        return data

    @model_validator(mode="after")
    def _mode_requirements(self):
        if self.mode == "detect":
            if self.manifest is None or self.k is None:
                raise ValueError("detect mode needs 'manifest' and 'k'")
        elif self.mode == "simulate":
            if not self.models or self.grid is None:
                raise ValueError("simulate mode needs 'model(s)' and 'grid'")
            for model in self.models:
                for n in self.grid.n:
                    for t in self.grid.T:
                        _check_model(model, n, t)
        else:
            if self.kmax is None:
                raise ValueError("scree mode needs 'kmax'")
            if self.manifest is None and not (self.models and self.n and self.T):
                raise ValueError("scree mode needs 'manifest', or 'model' with 'n' and 'T'")
            if self.manifest is None:
                _check_model(self.models[0], self.n, self.T)
        return self

    @property
    def algorithms(self) -> list[str]:
        return [self.algorithm] if isinstance(self.algorithm, str) else list(self.algorithm)


def load_config(path) -> tuple[ExperimentConfig, Path]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return ExperimentConfig.model_validate(doc), path.parent
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path}:\n{exc}") from exc


def cell_seed(master: int, model_index: int, n: int, t: int, seed_index: int) -> int:
    """Seed of one grid cell; shared by every algorithm run on that cell."""
    ss = np.random.SeedSequence([master, model_index, n, t, seed_index])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def draw_instance(model: ModelConfig, n: int, t: int, seed: int):
    """Ground truth, degree parameters, layer matrices and sampled stack."""
    mats = model.layer_matrices(n, t)
    gt = genmodel.sample_memberships(n, model.pi, seed)
    psi = None
    if model.psi == "uniform":
        psi = genmodel.draw_psi(gt, seed, *model.psi_range)
    elif model.psi is not None:
        psi = np.asarray(model.psi, dtype=np.float64)
        if psi.size != n:
            raise ConfigError(f"model {model.name!r}: psi has {psi.size} entries, n={n}")
    stack = genmodel.sample_stack(gt, mats, seed, psi)
    return gt, psi, mats, stack


def simulate_cell(cfg: ExperimentConfig, model_index: int, n: int, t: int,
                  seed_index: int, algorithm: str) -> tuple[dict, dict]:
    """Run one grid cell; pipeline failures are captured, never raised."""
    model = cfg.models[model_index]
    seed = cell_seed(cfg.seed, model_index, n, t, seed_index)
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(model=model.name, n=n, T=t, seed_index=seed_index, seed=seed, algorithm=algorithm)
    report = {"cell": {k: row[k] for k in ("model", "n", "T", "seed_index", "seed", "algorithm")}}
    gt, psi, mats, stack = draw_instance(model, n, t, seed)
    alpha, lam = alpha_lambda(mats)
    row.update(alpha=alpha, **{"lambda": lam})
    try:
        res = detect(stack, model.k, cfg.solver.options(seed), algorithm)
    except SumSpecError as exc:
        stage = getattr(exc, "stage", None) or "unknown"
        row.update(status=f"error:{stage}", error=f"{type(exc).__name__}: {exc}")
        report.update(status=row["status"], error=row["error"])
        return row, report
    rep = res.report
    ev = misclassification(gt, res.membership)
    row.update(
        status="ok", overall_error=ev.overall, n_prime=rep.n_prime,
        n_double_prime="" if rep.n_double_prime is None else rep.n_double_prime,
        threshold=rep.threshold, dbar=rep.dbar, objective=rep.objective,
    )
    report.update(status="ok", run=rep.to_dict(), evaluation=ev.to_dict())
    if cfg.diagnostics:
        p = genmodel.expected_sum_matrix(gt, res.embedding.kept, mats, psi)
        dev = spectral_norm_deviation(res.sub, p, seed=seed)
        gam = gamma_n(p)
        row.update(spectral_dev=dev, gamma_n=gam)
        report["diagnostics"] = {"spectral_dev": dev, "gamma_n": gam, "alpha": alpha, "lambda": lam}
    report["estimates"] = {
        "pi": estimate_pi(res.membership),
        "b_stack": estimate_B(stack, res.membership),
    }
    report["truth"] = gt.labels
    return row, report


def _cell_job(args):
    return simulate_cell(*args)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_simulation(cfg: ExperimentConfig, out_dir: Path, workers: Optional[int] = None) -> int:
    """Write one JSON report per cell plus ``results.csv``; returns the
    number of failed cells."""
    cells = []
    for mi in range(len(cfg.models)):
        for n in cfg.grid.n:
            for t in cfg.grid.T:
                for s in range(cfg.grid.seeds):
                    for alg in cfg.algorithms:
                        cells.append((cfg, mi, n, t, s, alg))
    workers = workers or cfg.workers
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    failed = 0
    with open(out_dir / "results.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(_cell_job, cells, chunksize=4)
        else:
            pool = None
            results = map(_cell_job, cells)
        try:
            # map() preserves grid order, so output never depends on scheduling
            for row, report in results:
                name = "{model}_n{n}_T{T}_s{seed_index}_{algorithm}.json".format(**row)
                write_json(runs_dir / name, report)
                writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
                if row["status"] != "ok":
                    failed += 1
        finally:
            if pool is not None:
                pool.shutdown()
    log.info("wrote %d cells to %s (%d failed)", len(cells), out_dir, failed)
    return failed


def run_detect(cfg: ExperimentConfig, base: Path, out_dir: Path) -> int:
    """Detect communities in a manifest's layer stack. Returns 0 or 1 failed runs."""
    stack = load_manifest(base / cfg.manifest)
    out_dir.mkdir(parents=True, exist_ok=True)
    failed = 0
    for alg in cfg.algorithms:
        suffix = "" if len(cfg.algorithms) == 1 else f"_{alg}"
        try:
            res = detect(stack, cfg.k, cfg.solver.options(cfg.seed), alg)
        except SumSpecError as exc:
            stage = getattr(exc, "stage", None) or "unknown"
            write_json(out_dir / f"report{suffix}.json",
                       {"status": f"error:{stage}", "error": f"{type(exc).__name__}: {exc}"})
            failed += 1
            continue
        with open(out_dir / f"labels{suffix}.txt", "w", encoding="utf-8") as fh:
            fh.writelines(f"{x}\n" for x in res.membership.labels.tolist())
        write_json(out_dir / f"report{suffix}.json", {
            "status": "ok",
            "run": res.report.to_dict(),
            "estimates": {"pi": estimate_pi(res.membership),
                          "b_stack": estimate_B(stack, res.membership)},
        })
    return failed


def scree_table(cfg: ExperimentConfig, base: Path) -> np.ndarray:
    if cfg.manifest is not None:
        stack = load_manifest(base / cfg.manifest)
    else:
        seed = cell_seed(cfg.seed, 0, cfg.n, cfg.T, 0)
        stack = draw_instance(cfg.models[0], cfg.n, cfg.T, seed)[3]
    tr = truncate_by_degree(aggregate_sum(stack), stack.T, 1.0 + cfg.solver.delta)
    return scree_values(tr.sub, cfg.kmax, tol=cfg.solver.tol, seed=cfg.seed)


def write_scree(path, values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCREE_COLUMNS)
        for i, v in enumerate(values):
            ratio = float(v / values[i + 1]) if i + 1 < len(values) and values[i + 1] > 0 else ""
            writer.writerow([i + 1, repr(float(v)), _fmt(ratio)])
