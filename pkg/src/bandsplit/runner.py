"""Suite orchestration: replications x schemes, record files, comparisons.

Records go to CSV (fixed column order) or JSON lines; both encode the
same values with the same float formatting, so the two forms are
value-identical.  Replications may run in a process pool; results are
merged in (scenario, scheduler, seed) order regardless of completion
order, so the output is byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ScenarioConfig
from .engine import run_scenario
from .errors import MismatchedSeeds
from .metrics import MetricsReport, record_columns
from .schedulers import SchedulerSpec

_FLOAT_FIELDS = (
    "goodput_pps",
    "mean_latency_s",
    "p95_latency_s",
    "mean_reseq_delay_s",
    "max_reseq_delay_s",
    "out_of_order_frac",
)

# Schemes that never use two bands at once; their runs must show zero
# out-of-order deliveries.
_SINGLE_PATH_KINDS = ("single_band", "band_per_flow")


def _run_one(task: tuple[ScenarioConfig, SchedulerSpec, int]) -> MetricsReport:
    config, spec, seed = task
    return run_scenario(config, spec, seed)


def run_suite(
    config: ScenarioConfig,
    out_path: str | Path | None = None,
    fmt: str = "csv",
    seeds: int | None = None,
    jobs: int = 1,
) -> list[MetricsReport]:
    """Execute every (scheduler, seed) pair of a scenario, optionally
    writing the records to ``out_path``."""
    config.validate()
    reps = seeds if seeds is not None else config.replications
    if reps < 1:
        raise MismatchedSeeds("need at least one replication")
    tasks = [
        (config, spec, config.seed_base + r)
        for spec in config.schedulers
        for r in range(reps)
    ]
    if jobs <= 1 or len(tasks) == 1:
        reports = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, tasks))
    reports.sort(key=lambda r: (r.scenario, r.scheduler, r.seed))
    if out_path is not None:
        write_records(reports, out_path, fmt)
    return reports


def render_csv(reports: list[MetricsReport]) -> str:
    if not reports:
        return ""
    cols = record_columns(len(reports[0].per_band_frac))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rep in reports:
        rec = rep.record()
        writer.writerow([_cell(rec[c]) for c in cols])
    return buf.getvalue()


def render_jsonl(reports: list[MetricsReport]) -> str:
    return "".join(json.dumps(rep.record()) + "\n" for rep in reports)


def write_records(reports: list[MetricsReport], path: str | Path, fmt: str = "csv") -> None:
    if fmt == "csv":
        text = render_csv(reports)
    elif fmt == "json":
        text = render_jsonl(reports)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    Path(path).write_text(text, encoding="utf-8")


def _cell(v) -> str:
    # repr() round-trips floats and matches json.dumps, keeping CSV and
    # JSON lines value-identical.
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_records(path: str | Path) -> list[dict]:
    """Load a record file written by write_records (either format)."""
    text = Path(path).read_text(encoding="utf-8")
    records = []
    if text.lstrip().startswith("{"):
        for line in text.splitlines():
            if line.strip():
                records.append(json.loads(line))
        return records
    reader = csv.DictReader(io.StringIO(text))
    for row in reader:
        rec: dict = {
            "scenario": row["scenario"],
            "scheduler": row["scheduler"],
            "seed": int(row["seed"]),
            "delivered": int(row["delivered"]),
        }
        for k in _FLOAT_FIELDS:
            rec[k] = float(row[k])
        for k, v in row.items():
            if k.startswith("band_frac_"):
                rec[k] = float(v)
        records.append(rec)
    return records


@dataclass(frozen=True)
class PairedDelta:
    scenario: str
    scheduler: str
    baseline: str
    metric: str
    mean_value: float
    mean_baseline: float
    mean_delta: float
    wins: int  # seeds where scheduler value < baseline value
    seeds: int


@dataclass(frozen=True)
class ComparisonSummary:
    baseline: str
    deltas: tuple[PairedDelta, ...]
    violations: tuple[str, ...]

    def render(self) -> str:
        lines = [f"baseline: {self.baseline}"]
        header = f"{'scenario':<18} {'scheduler':<16} {'metric':<20} {'mean':>12} {'delta':>12} {'wins':>7}"
        lines.append(header)
        lines.append("-" * len(header))
        for d in self.deltas:
            lines.append(
                f"{d.scenario:<18} {d.scheduler:<16} {d.metric:<20} "
                f"{d.mean_value:>12.6g} {d.mean_delta:>+12.6g} {d.wins:>4}/{d.seeds}"
            )
        if self.violations:
            lines.append("")
            lines.append("ordering violations:")
            lines.extend(f"  {v}" for v in self.violations)
        else:
            lines.append("")
            lines.append("ordering violations: none")
        return "\n".join(lines) + "\n"


def compare(records: list[dict], baseline: str | None = None) -> ComparisonSummary:
    """Paired per-seed comparison of schemes against a baseline scheme.

    Every compared scheme must share the baseline's exact seed set.
    Also checks the expected qualitative ordering: the token scheduler
    should beat minimum_delay on resequencing delay seed by seed, stay
    at or below even_split and load_balancing in mean latency, and
    single-path schemes must show zero out-of-order deliveries.
    """
    if not records:
        raise MismatchedSeeds("no records to compare")
    by_scenario: dict[str, dict[str, dict[int, dict]]] = {}
    for rec in records:
        by_scenario.setdefault(rec["scenario"], {}).setdefault(rec["scheduler"], {})[
            rec["seed"]
        ] = rec

    deltas: list[PairedDelta] = []
    violations: list[str] = []
    chosen_baseline = None
    for scenario, by_sched in sorted(by_scenario.items()):
        if len(by_sched) < 2:
            raise MismatchedSeeds(
                f"scenario {scenario!r} has {len(by_sched)} scheme(s); need >= 2 to compare"
            )
        base = baseline
        if base is None:
            base = "leaky_bucket" if "leaky_bucket" in by_sched else sorted(by_sched)[0]
        if base not in by_sched:
            raise MismatchedSeeds(f"baseline {base!r} absent from scenario {scenario!r}")
        chosen_baseline = base
        base_runs = by_sched[base]
        base_seeds = sorted(base_runs)
        for sched, runs in sorted(by_sched.items()):
            if sched == base:
                continue
            if sorted(runs) != base_seeds:
                raise MismatchedSeeds(
                    f"{sched!r} seeds {sorted(runs)} != baseline seeds {base_seeds}"
                )
            for metric in _FLOAT_FIELDS:
                vals = [runs[s][metric] for s in base_seeds]
                bvals = [base_runs[s][metric] for s in base_seeds]
                wins = sum(1 for v, b in zip(vals, bvals) if v < b)
                deltas.append(
                    PairedDelta(
                        scenario=scenario,
                        scheduler=sched,
                        baseline=base,
                        metric=metric,
                        mean_value=sum(vals) / len(vals),
                        mean_baseline=sum(bvals) / len(bvals),
                        mean_delta=sum(v - b for v, b in zip(vals, bvals)) / len(vals),
                        wins=wins,
                        seeds=len(base_seeds),
                    )
                )
        violations.extend(_ordering_violations(scenario, by_sched))
    return ComparisonSummary(
        baseline=chosen_baseline or "",
        deltas=tuple(deltas),
        violations=tuple(violations),
    )


def _ordering_violations(scenario: str, by_sched: dict[str, dict[int, dict]]) -> list[str]:
    out = []
    if "leaky_bucket" in by_sched and "minimum_delay" in by_sched:
        lb, md = by_sched["leaky_bucket"], by_sched["minimum_delay"]
        common = sorted(set(lb) & set(md))
        losses = [s for s in common if lb[s]["mean_reseq_delay_s"] >= md[s]["mean_reseq_delay_s"]]
        if losses:
            out.append(
                f"{scenario}: leaky_bucket mean_reseq_delay_s >= minimum_delay on seeds {losses}"
            )
    for rival in ("even_split", "load_balancing"):
        if "leaky_bucket" in by_sched and rival in by_sched:
            lb, rv = by_sched["leaky_bucket"], by_sched[rival]
            common = sorted(set(lb) & set(rv))
            if common:
                lb_mean = sum(lb[s]["mean_latency_s"] for s in common) / len(common)
                rv_mean = sum(rv[s]["mean_latency_s"] for s in common) / len(common)
                if lb_mean > rv_mean:
                    out.append(
                        f"{scenario}: leaky_bucket mean latency {lb_mean:.6g} > {rival} {rv_mean:.6g}"
                    )
    for sched, runs in sorted(by_sched.items()):
        if sched.startswith(_SINGLE_PATH_KINDS):
            bad = [s for s, rec in sorted(runs.items()) if rec["out_of_order_frac"] != 0.0]
            if bad:
                out.append(f"{scenario}: {sched} shows out-of-order deliveries on seeds {bad}")
    return out
