"""Declarative grid runs, constant fitting and k-sweeps.

A sweep is a set of independent cells (k, replication). Each cell simulates
every theta point of the grid, estimates the prior with the requested
estimators, fits one proportionality constant per estimator and scores the
grid with CE, AMRP and EARP. Cells are gathered in (k, replication) order, so
the output never depends on how many workers ran them.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from refprior import estimators as est
from refprior import metrics
from refprior.errors import ConfigError, InternalError, MissingReference, QuadratureError
from refprior.models import Model, get_model
from refprior.quadrature import DEFAULT_SETTINGS, QuadratureSettings
from refprior.sampling import StreamKey, sample_matrix, uniform_matrix

log = logging.getLogger(__name__)

ESTIMATORS = ("fk", "f", "fnac")
SPACINGS = ("linear", "log", "random")
GRID_STREAM = 2**32 - 1  # path slot reserved for drawing random theta grids

RECORD_COLUMNS = (
    "model", "estimator", "theta", "theta0", "k", "m", "alpha", "replication", "value",
    "mu1_hat", "mu2_hat", "sigma1_sq", "sigma2_sq", "sigma12", "half_width", "lo", "hi",
    "scaled_ref", "seed_path", "status",
)
SUMMARY_COLUMNS = ("model", "estimator", "k", "replications", "CE", "AMRP", "EARP", "a_hat", "excluded")


@dataclass(frozen=True)
class ThetaGrid:
    """Either explicit ``values`` or ``count`` points between ``low`` and ``high``."""

    values: tuple[float, ...] | None = None
    count: int = 0
    low: float = 0.0
    high: float = 0.0
    spacing: str = "linear"

    def __post_init__(self):
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            if not self.values:
                raise ConfigError("explicit theta grid is empty")
            return
        if self.spacing not in SPACINGS:
            raise ConfigError(f"theta spacing must be one of {SPACINGS}, got {self.spacing!r}")
        if self.count < 1:
            raise ConfigError("theta grid count must be >= 1")
        if not self.low < self.high and self.count > 1:
            raise ConfigError(f"theta grid needs low < high, got ({self.low}, {self.high})")
        if self.spacing == "log" and self.low <= 0:
            raise ConfigError("log spacing needs a positive lower bound")

    def resolve(self, master_seed: int, replication: int) -> np.ndarray:
        """Sorted grid; random grids are redrawn per replication from their own stream."""
        if self.values is not None:
            return np.sort(np.array(self.values))
        if self.count == 1:
            return np.array([0.5 * (self.low + self.high)])
        if self.spacing == "linear":
            return np.linspace(self.low, self.high, self.count)
        if self.spacing == "log":
            return np.geomspace(self.low, self.high, self.count)
        rng = StreamKey(master_seed, (replication, GRID_STREAM)).generator()
        return np.sort(rng.uniform(self.low, self.high, self.count))

    def bounds(self) -> tuple[float, float]:
        if self.values is not None:
            return min(self.values), max(self.values)
        return self.low, self.high


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    theta_grid: ThetaGrid
    k_values: tuple[int, ...]
    theta0: float | None = None  # None -> the model's default
    m_policy: str | int = "equal_k"
    alpha: float = 0.05
    estimators: tuple[str, ...] = ("fk", "f")
    replications: int = 1
    master_seed: int = 0
    quad: QuadratureSettings = DEFAULT_SETTINGS
    output_path: str | None = None
    workers: int = 1
    timestamp: bool = True

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        self.validate()

    @property
    def model_obj(self) -> Model:
        return get_model(self.model)

    @property
    def theta0_value(self) -> float:
        return self.model_obj.default_theta0 if self.theta0 is None else float(self.theta0)

    def m_for(self, k: int) -> int:
        return k if self.m_policy == "equal_k" else int(self.m_policy)

    def validate(self) -> None:
        try:
            model = get_model(self.model)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
        if not self.estimators:
            raise ConfigError("estimators must be a non-empty subset of {fk, f, fnac}")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or len(set(self.estimators)) != len(self.estimators):
            raise ConfigError(f"unknown or repeated estimators: {list(self.estimators)}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.k_values:
            raise ConfigError("k_values is empty")
        lowest_k = max(2, model.min_k)
        if min(self.k_values) < lowest_k:
            raise ConfigError(f"k_values must all be >= {lowest_k} for model {model.id.value}")
        if self.m_policy != "equal_k":
            try:
                m = int(self.m_policy)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"m must be 'equal_k' or an integer, got {self.m_policy!r}") from exc
            if m < 2:
                raise ConfigError("m must be >= 2")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        lo, hi = self.theta_grid.bounds()
        if not (model.in_domain(lo) and model.in_domain(hi)):
            raise ConfigError(f"theta grid [{lo}, {hi}] leaves the domain {model.theta_domain}")
        if not model.in_domain(self.theta0_value):
            raise ConfigError(f"theta0={self.theta0_value} is outside the domain {model.theta_domain}")


@dataclass(frozen=True)
class EstimateRecord:
    model: str
    estimator: str
    theta: float
    theta0: float | None
    k: int
    m: int
    alpha: float
    replication: int
    value: float
    mu1_hat: float
    mu2_hat: float | None
    sigma1_sq: float
    sigma2_sq: float | None
    sigma12: float | None
    half_width: float
    lo: float
    hi: float
    scaled_ref: float | None
    seed_path: str
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in RECORD_COLUMNS]


@dataclass(frozen=True)
class CellScore:
    """Fit and metrics for one estimator in one (k, replication) cell."""

    estimator: str
    k: int
    replication: int
    fit: est.EarpFit | None
    CE: float
    AMRP: float
    EARP: float
    excluded: int


@dataclass(frozen=True)
class SummaryRow:
    model: str
    estimator: str
    k: int
    replications: int
    CE: float
    AMRP: float
    EARP: float
    a_hat: float
    excluded: int

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in SUMMARY_COLUMNS]


@dataclass
class SweepSummary:
    rows: list[SummaryRow]
    records: list[EstimateRecord] = field(repr=False, default_factory=list)
    cells: list[CellScore] = field(repr=False, default_factory=list)

    def get(self, estimator: str, k: int) -> SummaryRow:
        for r in self.rows:
            if r.estimator == estimator and r.k == k:
                return r
        raise KeyError((estimator, k))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)  # shortest string that round-trips
    return str(v)


def _error_record(config, name, theta, k, m, rep, path, exc) -> EstimateRecord:
    nan = float("nan")
    return EstimateRecord(
        config.model_obj.id.value, name, float(theta), config.theta0_value if name != "fk" else None,
        k, m, config.alpha, rep, nan, nan, None, nan, None, None, nan, nan, nan, None, path,
        f"error: {type(exc).__name__}: {exc}".replace("\n", " "),
    )


def _log_c_blocks(model: Model, blocks: Sequence[np.ndarray], quad) -> list[np.ndarray | Exception]:
    """log c_j for every block; one batched call, falling back per block on failure."""
    try:
        stacked = model.log_marginal_rows(np.concatenate(blocks), quad)
        return list(np.split(stacked, np.cumsum([b.shape[0] for b in blocks])[:-1]))
    except QuadratureError:
        out: list[np.ndarray | Exception] = []
        for b in blocks:
            try:
                out.append(model.log_marginal_rows(b, quad))
            except QuadratureError as exc:
                out.append(exc)
        return out


def run_grid(config: ExperimentConfig, k: int, replication: int) -> list[EstimateRecord]:
    """Estimate every requested estimator at every grid point for one (k, replication) cell."""
    model = config.model_obj
    theta0 = config.theta0_value
    m = config.m_for(k)
    thetas = config.theta_grid.resolve(config.master_seed, replication)
    want = set(config.estimators)
    base = StreamKey(config.master_seed, (replication,))

    x_theta, x_side1, x_crn = [], [], []
    for i, th in enumerate(thetas):
        xs = sample_matrix(model, uniform_matrix(base.child(i, 0), m, k), th)
        x_theta.append(xs)
        if "f" in want:
            x_side1.append(sample_matrix(model, uniform_matrix(base.child(i, 1), m, k), theta0))
        if "fnac" in want:
            x_crn.append(np.asarray(model.crn_transform(xs, th, theta0), dtype=float).reshape(xs.shape))

    def r_blocks(blocks, at):
        logc = _log_c_blocks(model, blocks, config.quad)
        out = []
        for x, lc, th in zip(blocks, logc, at):
            out.append(lc if isinstance(lc, Exception) else model.log_joint_rows(x, th) - lc)
        return out

    r_theta = r_blocks(x_theta, thetas)
    r_side1 = r_blocks(x_side1, [theta0] * len(x_side1)) if x_side1 else []
    r_crn = r_blocks(x_crn, [theta0] * len(x_crn)) if x_crn else []

    mid = model.id.value
    records: list[EstimateRecord] = []
    for i, th in enumerate(thetas):
        p0, p1 = base.child(i, 0).label(), base.child(i, 1).label()
        for name in config.estimators:
            if name == "fk":
                parts, path = (r_theta[i],), p0
            elif name == "f":
                parts, path = (r_theta[i], r_side1[i]), f"{p0}+{p1}"
            else:
                parts, path = (r_theta[i], r_crn[i]), p0
            failure = next((p for p in parts if isinstance(p, Exception)), None)
            if failure is not None:
                records.append(_error_record(config, name, th, k, m, replication, path, failure))
                continue
            for p in parts:
                if not np.all(np.isfinite(p)):
                    raise InternalError(f"non-finite r_j at theta={th} ({name})")
            if name == "fk":
                e = est.fk_from_r(th, parts[0], k)
                iv = est.half_width_fk(e, config.alpha)
                records.append(EstimateRecord(
                    mid, name, float(th), None, k, m, config.alpha, replication, e.value,
                    e.mu1_hat, None, e.sigma1_hat**2, None, None, iv.half_width, iv.lo, iv.hi, None, path,
                ))
            else:
                e = est.ratio_from_r(th, theta0, parts[0], parts[1], k, crn=(name == "fnac"))
                iv = est.half_width_f(e, config.alpha)
                records.append(EstimateRecord(
                    mid, name, float(th), theta0, k, m, config.alpha, replication, e.value,
                    e.mu1_hat, e.mu2_hat, e.sigma1_sq, e.sigma2_sq, e.sigma12,
                    iv.half_width, iv.lo, iv.hi, None, path,
                ))
    records.sort(key=lambda r: (r.theta, ESTIMATORS.index(r.estimator)))
    return records


def fit_and_score(records: Iterable[EstimateRecord], reference) -> tuple[list[EstimateRecord], list[CellScore]]:
    """Fit one constant per estimator and score the grid.

    ``reference`` is a Model or a callable prior. Returns the records with
    ``scaled_ref`` filled in (error rows untouched) and one CellScore per
    estimator present. Records must come from a single (k, replication) cell.
    """
    if isinstance(reference, Model):
        ref = reference.prior
    elif callable(reference):
        ref = reference
    else:
        raise MissingReference(f"no known prior for {reference!r}")
    records = list(records)
    cells = {(r.k, r.replication) for r in records}
    if len(cells) > 1:
        raise ConfigError(f"fit_and_score needs records from one (k, replication) cell, got {sorted(cells)}")
    out = list(records)
    scores = []
    names = [n for n in ESTIMATORS if any(r.estimator == n for r in records)]
    for name in names:
        idx = [i for i, r in enumerate(records) if r.estimator == name and r.ok]
        excluded = sum(1 for r in records if r.estimator == name and not r.ok)
        k, rep = records[0].k, records[0].replication
        if not idx:
            nan = float("nan")
            scores.append(CellScore(name, k, rep, None, nan, nan, nan, excluded))
            continue
        sel = [records[i] for i in idx]
        fit = est.fit_constant_earp(((r.theta, r.value) for r in sel), ref)
        theta = np.array([r.theta for r in sel])
        grid = metrics.grid_from_records(
            theta, [r.value for r in sel], [r.half_width for r in sel], fit.a_hat,
            lambda t: np.array([float(ref(x)) for x in t]),
        )
        for i, entry in zip(idx, grid.entries):
            out[i] = replace(records[i], scaled_ref=entry.scaled_ref)
        s = metrics.summarize(grid)
        scores.append(CellScore(name, k, rep, fit, s["CE"], s["AMRP"], s["EARP"], excluded))
    return out, scores


def run_cell(config: ExperimentConfig, k: int, replication: int) -> tuple[list[EstimateRecord], list[CellScore]]:
    return fit_and_score(run_grid(config, k, replication), config.model_obj)


def _run_cell_args(args):
    return run_cell(*args)


def k_sweep(config: ExperimentConfig) -> SweepSummary:
    """Run every (k, replication) cell, average the metrics and optionally write CSVs."""
    model = config.model_obj
    if model.prior_is_conjecture:
        log.warning("model %s is scored against a conjectured reference prior", model.id.value)
    tasks = [(config, k, rep) for k in config.k_values for rep in range(config.replications)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell_args, tasks))  # map keeps submission order
    else:
        results = [_run_cell_args(t) for t in tasks]

    records = [r for recs, _ in results for r in recs]
    cells = [c for _, cs in results for c in cs]
    rows = []
    for k in config.k_values:
        for name in config.estimators:
            cs = [c for c in cells if c.k == k and c.estimator == name]
            good = [c for c in cs if c.fit is not None]

            def avg(attr):
                return float(np.mean([getattr(c, attr) for c in good])) if good else float("nan")

            a_hat = float(np.mean([c.fit.a_hat for c in good])) if good else float("nan")
            rows.append(SummaryRow(
                model.id.value, name, k, config.replications, avg("CE"), avg("AMRP"), avg("EARP"),
                a_hat, sum(c.excluded for c in cs),
            ))
    summary = SweepSummary(rows, records, cells)
    if config.output_path:
        write_outputs(summary, config.output_path, config.timestamp)
    return summary


def _csv_text(header: Sequence[str], rows: Iterable[list[str]], timestamp: bool) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def records_csv(records: Iterable[EstimateRecord], timestamp: bool = False) -> str:
    return _csv_text(RECORD_COLUMNS, (r.row() for r in records), timestamp)


def summary_csv(summary: SweepSummary, timestamp: bool = False) -> str:
    return _csv_text(SUMMARY_COLUMNS, (r.row() for r in summary.rows), timestamp)


def write_outputs(summary: SweepSummary, output_path: str | Path, timestamp: bool = True) -> tuple[Path, Path]:
    out = Path(output_path)
    out.mkdir(parents=True, exist_ok=True)
    rec, summ = out / "records.csv", out / "summary.csv"
    rec.write_text(records_csv(summary.records, timestamp))
    summ.write_text(summary_csv(summary, timestamp))
    return rec, summ


# ---------------------------------------------------------------- config files

CONFIG_KEYS = {
    "model", "theta_grid", "theta_count", "theta_low", "theta_high", "theta_spacing", "theta0",
    "k_values", "m", "alpha", "estimators", "replications", "master_seed", "quad_rel_tol",
    "quad_abs_tol", "quad_max_subdivisions", "output_path", "workers", "timestamp",
}


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys override earlier ones."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = value
    return out


def _ints(s: str) -> tuple[int, ...]:
    """Comma list of integers; ``a:b`` expands to the inclusive range a..b."""
    out = []
    for part in (p.strip() for p in s.split(",") if p.strip()):
        if ":" in part:
            a, b = part.split(":", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def config_from_mapping(values: Mapping[str, str | None]) -> ExperimentConfig:
    """Build a config from string values (config file and CLI flags share this path)."""
    v = {k: x for k, x in values.items() if x is not None and x != ""}
    unknown = set(v) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        if "model" not in v:
            raise ConfigError("config needs 'model'")
        if "k_values" not in v:
            raise ConfigError("config needs 'k_values'")
        if "theta_grid" in v:
            grid = ThetaGrid(values=tuple(float(x) for x in v["theta_grid"].split(",") if x.strip()))
        else:
            missing = [key for key in ("theta_count", "theta_low", "theta_high") if key not in v]
            if missing:
                raise ConfigError(f"config needs theta_grid or {missing}")
            grid = ThetaGrid(
                count=int(v["theta_count"]), low=float(v["theta_low"]), high=float(v["theta_high"]),
                spacing=v.get("theta_spacing", "linear"),
            )
        quad = QuadratureSettings(
            rel_tol=float(v.get("quad_rel_tol", DEFAULT_SETTINGS.rel_tol)),
            abs_tol=float(v.get("quad_abs_tol", DEFAULT_SETTINGS.abs_tol)),
            max_subdivisions=int(v.get("quad_max_subdivisions", DEFAULT_SETTINGS.max_subdivisions)),
        )
        m = v.get("m", "equal_k")
        return ExperimentConfig(
            model=v["model"],
            theta_grid=grid,
            k_values=_ints(v["k_values"]),
            theta0=float(v["theta0"]) if "theta0" in v else None,
            m_policy=m if m == "equal_k" else int(m),
            alpha=float(v.get("alpha", 0.05)),
            estimators=tuple(e.strip() for e in v.get("estimators", "fk,f").split(",") if e.strip()),
            replications=int(v.get("replications", 1)),
            master_seed=int(v.get("master_seed", 0)),
            quad=quad,
            output_path=v.get("output_path"),
            workers=int(v.get("workers", 1)),
            timestamp=v.get("timestamp", "true").lower() in ("1", "true", "yes", "on"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path: str | Path, overrides: Mapping[str, str | None] | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, str | None] = dict(parse_config_text(text))
    values.update({k: x for k, x in (overrides or {}).items() if x is not None})
    return config_from_mapping(values)

