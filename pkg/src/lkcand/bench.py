"""Run matrices over instances x configs x folds, PAR10 and the CSV exports.

All exports are sorted by (group, size, instance, config) so that repeated
runs give byte-identical files apart from timing columns.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import os
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .candidates import missing_optimal_edges
from .instance import Instance, Tour, parse_tour_file, parse_tsplib
from .solver import RunRecord, SolverConfig, solve

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 60.0


def par10(records: Sequence, cutoff: float) -> float:
    """Mean runtime with every unsolved run counted as ``10 * cutoff``.

    ``records`` holds RunRecords or ``(elapsed, solved)`` pairs.
    """
    if not records:
        raise ValueError("par10 of an empty record list")
    total = 0.0
    for r in records:
        elapsed, solved = (r.elapsed, r.solved) if isinstance(r, RunRecord) else r
        if solved:
            if elapsed > cutoff + 1e-9:
                raise ValueError(f"solved run took {elapsed}s, above the cutoff {cutoff}s")
            total += elapsed
        else:
            total += 10.0 * cutoff
    return total / len(records)


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    group: str
    size: int
    opt_tour: Path | None = None


def read_manifest(path) -> list[ManifestEntry]:
    """``instance,group,size[,opt_tour]`` CSV; paths are relative to the manifest."""
    path = Path(path)
    base = path.parent
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                opt = row.get("opt_tour") or None
                out.append(ManifestEntry(base / row["instance"], row["group"], int(row["size"]),
                                         base / opt if opt else None))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"bad manifest row {row!r}: {exc}") from None
    return out


@dataclass
class BenchReport:
    records: list[RunRecord]
    cutoff: float
    groups: dict[str, str] = field(default_factory=dict)
    sizes: dict[str, int] = field(default_factory=dict)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for r in self.records:
            key = (r.instance, r.config, r.fold)
            if key in seen:
                raise ValueError(f"duplicate record {key}")
            seen.add(key)

    def by_pair(self) -> dict[tuple[str, str], list[RunRecord]]:
        out: dict[tuple[str, str], list[RunRecord]] = defaultdict(list)
        for r in self.records:
            out[(r.instance, r.config)].append(r)
        return dict(out)

    @property
    def par10(self) -> dict[tuple[str, str], float]:
        return {k: par10(v, self.cutoff) for k, v in self.by_pair().items()}

    def configs(self) -> list[str]:
        return sorted({r.config for r in self.records})

    def _sort_key(self, instance: str, config: str = ""):
        return (self.groups.get(instance, ""), self.sizes.get(instance, 0), instance, config)


def _solve_job(args):
    inst, cfg, optimal = args
    rec = solve(inst, cfg, optimal=optimal)
    rec.tour = None
    return rec


def _load(item) -> tuple[Instance, Tour | None]:
    if isinstance(item, Instance):
        return item, None
    if isinstance(item, ManifestEntry):
        inst = parse_tsplib(Path(item.path).read_text())
        opt = parse_tour_file(Path(item.opt_tour).read_text(), inst) if item.opt_tour else None
        if opt is not None and inst.optimum_length is None:
            inst = dataclasses.replace(inst, optimum_length=opt.length)
        return inst, opt
    return parse_tsplib(Path(item).read_text()), None


def run_matrix(instances: Iterable, configs: Sequence[SolverConfig], folds: Iterable[int],
               cutoff: float = DEFAULT_CUTOFF, workers: int = 1,
               groups: dict[str, str] | None = None,
               optima: dict[str, Tour] | None = None) -> BenchReport:
    """Solve every (instance, config, fold) triple with budget ``cutoff``.

    ``instances`` may hold Instances, ManifestEntries or TSPLIB paths; load
    failures are collected in ``report.errors``.  Records are returned
    sorted, never in completion order.
    """
    instances = list(instances)
    configs = list(configs)
    folds = list(folds)
    if not instances or not configs or not folds:
        raise ValueError("run_matrix needs at least one instance, config and fold")
    labels = [c.name for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError("config names must be unique; set SolverConfig.label")
    groups = dict(groups or {})
    optima = dict(optima or {})
    sizes: dict[str, int] = {}
    errors = []
    jobs = []
    for item in instances:
        try:
            inst, opt = _load(item)
        except (OSError, ValueError) as exc:
            errors.append((str(getattr(item, "path", item)), str(exc)))
            log.warning("could not load %s: %s", item, exc)
            continue
        if isinstance(item, ManifestEntry):
            groups.setdefault(inst.name, item.group)
        groups.setdefault(inst.name, "generated")
        sizes[inst.name] = inst.n
        opt = opt or optima.get(inst.name)
        if opt is not None and inst.optimum_length is None:
            inst = dataclasses.replace(inst, optimum_length=opt.length)
        for cfg in configs:
            for f in folds:
                jobs.append((inst, dataclasses.replace(cfg, fold=f, time_budget=cutoff), opt))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_solve_job, jobs))
    else:
        records = [_solve_job(j) for j in jobs]
    records.sort(key=lambda r: (r.instance, r.config, r.fold))
    return BenchReport(records, cutoff, groups, sizes, errors)


# --------------------------------------------------------------------------
# exports


def _fmt(x: float) -> str:
    return repr(float(x))


def write_records_csv(records: Iterable[RunRecord]) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=RunRecord.FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.to_row())
    return out.getvalue()


def read_records_csv(text: str) -> list[RunRecord]:
    return [RunRecord.from_row(row) for row in csv.DictReader(io.StringIO(text))]


def export_scatter(report: BenchReport, cfg_x: str, cfg_y: str) -> str:
    """``instance,group,par10_x,par10_y,missing_edges``; missing edges come from ``cfg_x``."""
    present = set(report.configs())
    for c in (cfg_x, cfg_y):
        if c not in present:
            raise ValueError(f"config {c!r} not in report")
    scores = report.par10
    pairs = report.by_pair()
    names = sorted({r.instance for r in report.records}, key=report._sort_key)
    out = io.StringIO()
    out.write("instance,group,par10_x,par10_y,missing_edges\n")
    for name in names:
        if (name, cfg_x) not in scores or (name, cfg_y) not in scores:
            continue
        missing = next((r.missing_edges_at_start for r in pairs[(name, cfg_x)]
                        if r.missing_edges_at_start is not None), None)
        out.write(f"{name},{report.groups.get(name, '')},{_fmt(scores[(name, cfg_x)])},"
                  f"{_fmt(scores[(name, cfg_y)])},{'' if missing is None else missing}\n")
    return out.getvalue()


def export_missing_histogram(entries: Iterable[tuple]) -> str:
    """Share of instances per missing-edge count, by (group, size).

    ``entries`` yields ``(name, group, size, cand, optimal)``; instances
    without an optimal tour are skipped and listed in ``#`` comment lines.
    """
    counts: dict[tuple[str, int], Counter] = defaultdict(Counter)
    skipped = []
    for name, group, size, cand, optimal in entries:
        if optimal is None:
            skipped.append(name)
            continue
        m, _ = missing_optimal_edges(cand, optimal)
        counts[(group, int(size))][m] += 1
    out = io.StringIO()
    out.write("group,size,missing_count,share\n")
    for key in sorted(counts):
        c = counts[key]
        total = sum(c.values())
        for m in sorted(c):
            out.write(f"{key[0]},{key[1]},{m},{_fmt(c[m] / total)}\n")
    for name in sorted(skipped):
        out.write(f"# skipped {name}: no optimal tour\n")
    return out.getvalue()


def export_summary(report: BenchReport) -> str:
    """``group,size,config,mean_par10,timeout_count`` per (group, size, config)."""
    if not report.records:
        raise ValueError("empty report")
    scores = report.par10
    agg: dict[tuple, list] = defaultdict(list)
    timeouts: Counter = Counter()
    for (name, cfg), value in scores.items():
        key = (report.groups.get(name, ""), report.sizes.get(name, 0), cfg)
        agg[key].append(value)
    for r in report.records:
        if not r.solved:
            timeouts[(report.groups.get(r.instance, ""), report.sizes.get(r.instance, 0), r.config)] += 1
    out = io.StringIO()
    out.write("group,size,config,mean_par10,timeout_count\n")
    for key in sorted(agg):
        out.write(f"{key[0]},{key[1]},{key[2]},{_fmt(np.mean(agg[key]))},{timeouts[key]}\n")
    return out.getvalue()


def write_report(report: BenchReport, out_dir, scatter: tuple[str, str] | None = None) -> list[Path]:
    """Write records.csv, summary.csv and (optionally) a scatter CSV into ``out_dir``."""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    files = {"records.csv": write_records_csv(report.records), "summary.csv": export_summary(report)}
    if scatter is not None:
        files[f"scatter_{scatter[0]}_{scatter[1]}.csv"] = export_scatter(report, *scatter)
    if report.errors:
        files["errors.csv"] = "instance,error\n" + "".join(
            f"{p},{e.replace(',', ';')}\n" for p, e in sorted(report.errors))
    for fname, text in files.items():
        path = out_dir / fname
        path.write_text(text)
        written.append(path)
    return written
