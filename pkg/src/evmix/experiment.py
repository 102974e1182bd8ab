"""Monte Carlo execution of an :class:`ExperimentConfig` and table emission."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass
import io
import logging
import math

import numpy as np

from . import dist_zoo
from .config import ExperimentConfig
from .estimators import fit_components, fit_method, resolve_kernel
from .gev_fit import fit_dsm_gev
from .exceptions import DomainError, EvmixError, InputError
from .metrics import mise

log = logging.getLogger(__name__)

COLUMNS = ("family", "params", "n", "m", "method", "mise_mean_x100", "mise_sd_x100",
           "mix_mean", "mix_sd", "reps", "failures")
FAILURE_FLAG_FRACTION = 0.10
MIX_METHODS = ("ml_mix", "cv_mix")


@dataclass(frozen=True)
class RepOutcome:
    """One method on one replication; ``mise`` is None when the fit failed."""

    cell_index: int
    rep: int
    method: str
    mise: float | None
    mix: float | None
    error: str | None = None


@dataclass(frozen=True)
class ResultRow:
    family: str
    params: str
    n: int
    m: int
    method: str
    mise_mean: float
    mise_sd: float
    mix_mean: float | None
    mix_sd: float | None
    reps: int
    failures: int

    @property
    def flagged(self) -> bool:
        """More than 10% of the attempted replications failed."""
        return self.failures > FAILURE_FLAG_FRACTION * (self.reps + self.failures)


def rep_seed(master_seed: int, cell_index: int, rep: int) -> np.random.SeedSequence:
    """Independent stream for replication ``rep`` of cell ``cell_index``."""
    return np.random.SeedSequence([int(master_seed), int(cell_index), int(rep)])


def run_rep(cfg: ExperimentConfig, cell_index: int, rep: int) -> list[RepOutcome]:
    """Sample once, fit the shared components, then score every method."""
    cell = cfg.cells[cell_index]
    x = dist_zoo.sample(cell.spec, cell.n, rep_seed(cfg.master_seed, cell_index, rep)).values
    knobs = cfg.knobs
    kernel = resolve_kernel(knobs, cell.spec)
    need_gev = any(mth != "nonparametric" for mth in cfg.methods)
    h = gfit = None
    h_error = gev_error = None
    try:
        h, _ = fit_components(x, cell.m, kernel, knobs, need_gev=False)
    except (EvmixError, ArithmeticError, ValueError) as exc:
        h_error = f"{type(exc).__name__}: {exc}"
    if need_gev:
        try:
            gfit = fit_dsm_gev(x, cell.m, knobs.block_size, gamma_bounds=knobs.gamma_bounds,
                               max_iter=knobs.max_iter)
        except (EvmixError, ArithmeticError, ValueError) as exc:
            gev_error = f"{type(exc).__name__}: {exc}"
    out = []
    for method in cfg.methods:
        shared_error = h_error or (gev_error if method != "nonparametric" else None)
        if shared_error is not None:
            out.append(RepOutcome(cell_index, rep, method, None, None, shared_error))
            continue
        try:
            fitted = fit_method(method, x, cell.m, kernel, h, gfit, knobs)
            score = mise(fitted.cdf, cell.spec, cell.m, cfg.mise_nodes).value
            if not math.isfinite(score):
                raise ArithmeticError("non-finite MISE")
            out.append(RepOutcome(cell_index, rep, method, score, fitted.mix))
        except (EvmixError, ArithmeticError, ValueError) as exc:
            out.append(RepOutcome(cell_index, rep, method, None, None, f"{type(exc).__name__}: {exc}"))
    return out


def _run_cell(args) -> list[RepOutcome]:
    cfg, cell_index = args
    res = []
    for rep in range(cfg.reps):
        res.extend(run_rep(cfg, cell_index, rep))
    return res


def mean_sd(values) -> tuple[float, float]:
    """Mean and n-1 denominator standard deviation; sd is 0 for a single value."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(v))
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return mean, sd


def aggregate(cfg: ExperimentConfig, outcomes) -> list[ResultRow]:
    """Collapse per-rep outcomes into rows in config order (cell, then method)."""
    groups: dict[tuple[int, str], list[RepOutcome]] = {}
    for o in outcomes:
        groups.setdefault((o.cell_index, o.method), []).append(o)
    rows = []
    for ci, cell in enumerate(cfg.cells):
        for method in cfg.methods:
            reps = sorted(groups.get((ci, method), []), key=lambda o: o.rep)
            ok = [o for o in reps if o.mise is not None]
            mise_mean, mise_sd = mean_sd([o.mise for o in ok])
            if method in MIX_METHODS and ok:
                mix_mean, mix_sd = mean_sd([o.mix for o in ok])
            else:
                mix_mean = mix_sd = None
            row = ResultRow(cell.spec.family, cell.spec.params_str, cell.n, cell.m, method,
                            mise_mean, mise_sd, mix_mean, mix_sd, len(ok), len(reps) - len(ok))
            if row.flagged:
                log.warning("%s %s: %d of %d replications failed", cell, method,
                            row.failures, len(reps))
            rows.append(row)
    return rows


def run_outcomes(cfg: ExperimentConfig, threads: int = 1) -> list[RepOutcome]:
    """All per-rep outcomes, ordered by (cell, rep, method) whatever the schedule."""
    tasks = [(cfg, ci) for ci in range(len(cfg.cells))]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=int(threads)) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    else:
        chunks = [_run_cell(t) for t in tasks]
    order = {mth: i for i, mth in enumerate(cfg.methods)}
    flat = [o for chunk in chunks for o in chunk]
    flat.sort(key=lambda o: (o.cell_index, o.rep, order[o.method]))
    return flat


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Run every cell and method; rows come back in deterministic config order."""
    return aggregate(cfg, run_outcomes(cfg, threads))


# ----------------------------------------------------------------- emission

def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".10g")


def row_fields(row: ResultRow) -> list[str]:
    return [row.family, row.params, str(row.n), str(row.m), row.method,
            _num(None if row.mise_mean is None else 100.0 * row.mise_mean),
            _num(None if row.mise_sd is None else 100.0 * row.mise_sd),
            _num(row.mix_mean), _num(row.mix_sd), str(row.reps), str(row.failures)]


def _markdown(header, records) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in records]
    return "\n".join(lines) + "\n"


def emit_table(rows, fmt: str = "csv") -> str:
    """CSV or markdown text; MISE columns are scaled by 100."""
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to emit")
    records = [row_fields(r) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(records)
        return buf.getvalue()
    if fmt == "markdown":
        return _markdown(COLUMNS, records)
    raise DomainError(f"unknown table format {fmt!r}; choose csv or markdown")


def _opt(s: str):
    return float(s) if s != "" else None


def read_table(text: str) -> list[ResultRow]:
    """Parse CSV produced by :func:`emit_table` back into rows (MISE unscaled)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty table") from None
    if tuple(header) != COLUMNS:
        raise InputError(f"unexpected header: {','.join(header)}", line=1)
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(COLUMNS):
            raise InputError(f"line {lineno}: expected {len(COLUMNS)} fields", line=lineno)
        try:
            mm, ms = _opt(rec[5]), _opt(rec[6])
            rows.append(ResultRow(rec[0], rec[1], int(rec[2]), int(rec[3]), rec[4],
                                  math.nan if mm is None else mm / 100.0,
                                  math.nan if ms is None else ms / 100.0,
                                  _opt(rec[7]), _opt(rec[8]), int(rec[9]), int(rec[10])))
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}", line=lineno) from None
    return rows


def format_outcome(o: RepOutcome) -> str:
    """One verbose log line; floats use ``repr`` so they parse back exactly."""
    mise_s = "" if o.mise is None else repr(o.mise)
    mix_s = "" if o.mix is None else repr(o.mix)
    return f"{o.cell_index},{o.rep},{o.method},{mise_s},{mix_s},{o.error or ''}"


def parse_outcome(line: str) -> RepOutcome:
    ci, rep, method, mise_s, mix_s, err = line.rstrip("\n").split(",", 5)
    return RepOutcome(int(ci), int(rep), method, float(mise_s) if mise_s else None,
                      float(mix_s) if mix_s else None, err or None)
