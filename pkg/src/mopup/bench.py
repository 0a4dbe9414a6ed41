"""Monte-Carlo experiment drivers for the simulation studies.

Every replicate draws its own seed from ``(base_seed, sweep index,
replicate index)``, so results do not depend on execution order or on the
number of worker threads.  Rows are always emitted in (sweep, replicate)
order.
"""

import csv
import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .baselines import hooi_mpca_fit, hosvd_matrix_init
from .linalg import sin_theta
from .matrix import ApOptions, fit_mopup, objective, select_rank
from .model import MatrixModelParams, NoiseSpec, derive_seed, sample_matrix_set
from .oracles import check_davis_kahan_comparison, random_bound_instance

STUDIES = ("scale_p1", "scale_R", "scale_n", "rank_bic", "compare_mpca", "verify_bounds")


class ConfigError(ValueError):
    pass


# Per-study defaults. p2 = 30, r = (5, 7), uniform(-1, 1) scores and 10 AP
# iterations follow the simulation protocol; n = 256 for the p1 and R
# sweeps is our choice (the protocol leaves it open).
_DEFAULTS = {
    "scale_p1": dict(sweep=[30, 40, 50, 60, 80, 100], n=256),
    "scale_R": dict(sweep=[0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0], n=256),
    "scale_n": dict(sweep=[2 ** i for i in range(2, 13)]),
    "rank_bic": dict(sweep=[0.05, 0.1, 0.15, 0.2], p1=30, p2=30, r1=3, r2=4, n=5,
                     replicates=20),
    "compare_mpca": dict(sweep=[0.05, 0.1, 0.2], n=64, replicates=20),
    "verify_bounds": dict(sweep=[5, 10, 20, 30], replicates=250),
}

_EXTRA_COLUMNS = {
    "scale_p1": [],
    "scale_R": [],
    "scale_n": [],
    "rank_bic": ["r1_hat", "r2_hat", "abs_err_r1", "abs_err_r2"],
    "compare_mpca": ["err_mpca", "err_hosvd", "obj_mopup", "obj_mpca"],
    "verify_bounds": ["p", "r", "rhs", "applicable", "satisfied", "rhs_sharp",
                      "applicable_sharp", "satisfied_sharp", "lhs_fro", "rhs_fro",
                      "satisfied_fro", "davis_kahan", "tighter"],
}

BASE_COLUMNS = ["study", "sweep_value", "replicate", "seed", "err_max", "err_u", "err_v",
                "iterations", "wall_ms"]


@dataclass
class ExperimentConfig:
    study: str
    sweep: List[float] = field(default_factory=list)
    p1: int = 40
    p2: int = 30
    r1: int = 5
    r2: int = 7
    n: int = 256
    R: float = 0.1
    noise: str = "gaussian"
    score_dist: str = "uniform_pm1"
    replicates: int = 10
    base_seed: int = 0
    max_iter: int = 10
    tol: float = 1e-8
    update_order: str = "paper_jacobi"
    rank_min: int = 2
    rank_max: int = 9
    output: Optional[str] = None

    @classmethod
    def for_study(cls, study, **overrides):
        """Config with the study's defaults, then ``overrides`` (``None`` values ignored)."""
        if study not in STUDIES:
            raise ConfigError(f"unknown study {study!r}; expected one of {', '.join(STUDIES)}")
        kwargs = dict(_DEFAULTS[study])
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        try:
            cfg = cls(study=study, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_dict(cls, d, **overrides):
        d = dict(d)
        study = overrides.pop("study", None) or d.pop("study", None)
        d.pop("study", None)
        if study is None:
            raise ConfigError("config is missing 'study'")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.for_study(study, **d)

    @classmethod
    def load(cls, path, **overrides):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(d, **overrides)

    def to_dict(self):
        return dataclasses.asdict(self)

    def solver_options(self):
        return ApOptions(max_iter=self.max_iter, tol=self.tol,
                         update_order=self.update_order, record_trace=False)

    def validate(self):
        if not self.sweep:
            raise ConfigError("sweep must be non-empty")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        try:
            NoiseSpec(self.noise, 0.0)
            self.solver_options()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.study == "verify_bounds":
            if any(int(p) < 2 for p in self.sweep):
                raise ConfigError("verify_bounds sweep values are matrix sizes >= 2")
            return
        p1_values = self.sweep if self.study == "scale_p1" else [self.p1]
        for p1 in p1_values:
            self._check_dims(int(p1))
        if self.study == "scale_n" and any(int(v) < 2 for v in self.sweep):
            raise ConfigError("scale_n sweep values are sample sizes >= 2")
        if self.study in ("scale_R", "rank_bic", "compare_mpca") and any(v < 0 for v in self.sweep):
            raise ConfigError("noise levels must be >= 0")
        if self.study == "rank_bic":
            if not 1 <= self.rank_min <= self.rank_max:
                raise ConfigError("need 1 <= rank_min <= rank_max")
            if self.rank_max >= min(self.p1, self.p2):
                raise ConfigError(
                    f"rank_max={self.rank_max} must be below min(p1, p2)={min(self.p1, self.p2)}")

    def _check_dims(self, p1):
        if not (1 <= self.r1 < p1 and 1 <= self.r2 < self.p2):
            raise ConfigError(f"need 1 <= r1 < p1 and 1 <= r2 < p2, got r=({self.r1}, {self.r2}), "
                              f"p=({p1}, {self.p2})")
        if self.study != "rank_bic" and self.r1 + self.r2 >= min(p1, self.p2):
            raise ConfigError(
                f"r1 + r2 = {self.r1 + self.r2} must be below min(p1, p2) = {min(p1, self.p2)} "
                "so that ASC does not fall back to the identity basis")


@dataclass
class ExperimentRecord:
    study: str
    sweep_value: float
    replicate: int
    seed: int
    err_max: float
    err_u: float
    err_v: float
    iterations: int
    wall_ms: float
    extra: dict = field(default_factory=dict)

    @property
    def error(self):
        return self.err_max

    def row(self):
        d = {k: getattr(self, k) for k in BASE_COLUMNS}
        d.update(self.extra)
        return d


def _cell_params(cfg, value):
    """(p1, n, R) for one sweep value."""
    p1, n, r = cfg.p1, cfg.n, cfg.R
    if cfg.study == "scale_p1":
        p1 = int(value)
    elif cfg.study == "scale_n":
        n = int(value)
    elif cfg.study in ("scale_R", "rank_bic", "compare_mpca"):
        r = float(value)
    return p1, n, r


def _draw(cfg, value, seed):
    p1, n, r = _cell_params(cfg, value)
    params = MatrixModelParams.random(p1, cfg.p2, cfg.r1, cfg.r2, derive_seed(seed, 0),
                                      score_dist=cfg.score_dist, noise=NoiseSpec(cfg.noise, r))
    return params, sample_matrix_set(params, n, derive_seed(seed, 1))


def _errors(params, u, v):
    eu, ev = sin_theta(params.u, u), sin_theta(params.v, v)
    return max(eu, ev), eu, ev


def _run_scaling(cfg, value, seed):
    params, s = _draw(cfg, value, seed)
    fit = fit_mopup(s, cfg.r1, cfg.r2, cfg.solver_options())
    return _errors(params, fit.u_hat, fit.v_hat), fit.iterations_run, {}


def _run_rank_bic(cfg, value, seed):
    params, s = _draw(cfg, value, seed)
    opts = cfg.solver_options()
    sel = select_rank(s, cfg.rank_max, cfg.rank_max, opts,
                      r1_min=cfg.rank_min, r2_min=cfg.rank_min)
    fit = fit_mopup(s, cfg.r1, cfg.r2, opts)
    r1_hat, r2_hat = sel.chosen
    extra = dict(r1_hat=r1_hat, r2_hat=r2_hat,
                 abs_err_r1=abs(r1_hat - cfg.r1), abs_err_r2=abs(r2_hat - cfg.r2))
    return _errors(params, fit.u_hat, fit.v_hat), fit.iterations_run, extra


def _run_compare(cfg, value, seed):
    params, s = _draw(cfg, value, seed)
    opts = cfg.solver_options()
    mop = fit_mopup(s, cfg.r1, cfg.r2, opts)
    mpca = hooi_mpca_fit(s, cfg.r1, cfg.r2, opts=opts)
    hu, hv = hosvd_matrix_init(s, cfg.r1, cfg.r2)
    extra = dict(err_mpca=_errors(params, mpca.u_hat, mpca.v_hat)[0],
                 err_hosvd=_errors(params, hu, hv)[0],
                 obj_mopup=objective(s, mop.u_hat, mop.v_hat),
                 obj_mpca=objective(s, mpca.u_hat, mpca.v_hat))
    return _errors(params, mop.u_hat, mop.v_hat), mop.iterations_run, extra


def _run_bounds(cfg, value, seed):
    p = int(value)
    rng = np.random.Generator(np.random.Philox(seed))
    r = int(rng.integers(1, p))
    z_scale = float(10 ** rng.uniform(-3, 0.5))
    x, z = random_bound_instance(p, r, derive_seed(seed, 2), z_scale)
    cmp = check_davis_kahan_comparison(x, z, r)
    b = cmp.blockwise
    extra = dict(p=p, r=r, rhs=b.rhs, applicable=b.applicable, satisfied=b.satisfied,
                 rhs_sharp=b.rhs_sharp, applicable_sharp=b.applicable_sharp,
                 satisfied_sharp=b.satisfied_sharp, lhs_fro=b.lhs_fro, rhs_fro=b.rhs_fro,
                 satisfied_fro=b.satisfied_fro, davis_kahan=cmp.davis_kahan,
                 tighter=cmp.tighter)
    return (b.lhs, b.lhs, b.lhs), 0, extra


_RUNNERS = {
    "scale_p1": _run_scaling,
    "scale_R": _run_scaling,
    "scale_n": _run_scaling,
    "rank_bic": _run_rank_bic,
    "compare_mpca": _run_compare,
    "verify_bounds": _run_bounds,
}


def _run_cell(cfg, sweep_idx, rep):
    value = cfg.sweep[sweep_idx]
    seed = derive_seed(cfg.base_seed, sweep_idx, rep)
    t0 = time.perf_counter()
    (emax, eu, ev), iters, extra = _RUNNERS[cfg.study](cfg, value, seed)
    wall = (time.perf_counter() - t0) * 1e3
    return ExperimentRecord(cfg.study, value, rep, seed, emax, eu, ev, iters, round(wall, 3), extra)


def run_study(cfg, threads=1, output=None):
    """Run every (sweep value, replicate) cell and optionally write a CSV.

    Parameters
    ----------
    cfg : ExperimentConfig
    threads : int
        Worker threads; results are identical for any value.
    output : str, optional
        CSV path; defaults to ``cfg.output``.

    Returns
    -------
    list of ExperimentRecord
    """
    cfg.validate()
    cells = [(i, rep) for i in range(len(cfg.sweep)) for rep in range(cfg.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: _run_cell(cfg, *c), cells))
    else:
        records = [_run_cell(cfg, *c) for c in cells]
    path = output or cfg.output
    if path:
        write_csv(records, path, cfg.study)
    return records


def _csv_value(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, path, study=None, include_wall=True):
    study = study or (records[0].study if records else "scale_n")
    columns = BASE_COLUMNS + _EXTRA_COLUMNS[study]
    if not include_wall:
        columns = [c for c in columns if c != "wall_ms"]
    if hasattr(path, "write"):
        _write_rows(path, columns, records)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(fh, columns, records)


def _write_rows(fh, columns, records):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        row = rec.row()
        w.writerow([_csv_value(row[c]) for c in columns])


@dataclass
class Summary:
    study: str
    rows: List[dict]
    slope: Optional[float] = None
    slope_points: int = 0


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def summarize(records, saturation=0.5):
    """Mean and standard deviation of ``err_max`` per sweep value.

    For ``scale_n`` the slope of log mean error against log ``n`` is
    attached; for ``scale_R`` the same log-log slope restricted to sweep
    values whose mean error is below ``saturation``; for ``scale_p1`` the
    slope against ``log(p1 sqrt(log p1))``.  Numeric extra columns are
    averaged alongside.
    """
    if not records:
        raise ValueError("no records to summarize")
    study = records[0].study
    groups = {}
    for rec in records:
        groups.setdefault(rec.sweep_value, []).append(rec)
    rows = []
    for value, recs in groups.items():
        errs = np.array([r.err_max for r in recs])
        row = dict(sweep_value=value, count=len(recs), mean=float(errs.mean()),
                   std=float(errs.std()),
                   mean_err_u=float(np.mean([r.err_u for r in recs])),
                   mean_err_v=float(np.mean([r.err_v for r in recs])))
        for key in recs[0].extra:
            vals = [r.extra[key] for r in recs]
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                row[f"mean_{key}"] = float(np.mean(vals))
            elif all(isinstance(v, bool) or v is None for v in vals):
                row[f"count_{key}"] = sum(1 for v in vals if v)
        rows.append(row)
    summary = Summary(study, rows)
    xs = np.array([r["sweep_value"] for r in rows], float)
    ys = np.array([r["mean"] for r in rows], float)
    keep = ys > 0
    if study == "scale_R":
        keep &= ys < saturation
    if study in ("scale_n", "scale_R", "scale_p1") and keep.sum() >= 2:
        x = xs[keep]
        if study == "scale_p1":
            x = x * np.sqrt(np.log(x))
        summary.slope = loglog_slope(x, ys[keep])
        summary.slope_points = int(keep.sum())
    return summary


def write_summary_csv(summary, path):
    keys = []
    for row in summary.rows:
        keys.extend(k for k in row if k not in keys)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in summary.rows:
            w.writerow([_csv_value(row.get(k)) for k in keys])
