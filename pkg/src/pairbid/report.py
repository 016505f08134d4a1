"""CSV output for runs and comparisons.

Numbers are written with six significant digits (``format(x, ".6g")``) so
that files are byte-identical across repeated runs with the same inputs.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .sim import Scenario, SimMetrics

PER_SLOT_FIELDS = ("t", "arrivals", "pending", "accepted", "acceptance_ratio", "mno_revenue", "mno_cost",
                   "mno_profit", "accepted_bid_sum", "power_w", "upper_charges", "lower_charges",
                   "slices_sold", "capacity_sold")
SUMMARY_FIELDS = ("digest", "seed", "algorithm", "resale_profile", "horizon", "dynamic", "mno_revenue",
                  "mno_cost", "mno_profit", "accepted_bid_sum", "accepted", "arrivals", "acceptance_ratio",
                  "mean_power_w", "charges")
COMPARE_FIELDS = ("resale_profile", "algorithm", "seed", "mno_revenue", "mno_cost", "mno_profit",
                  "accepted_bid_sum", "revenue_delta_pct", "cost_delta_pct", "mvno_revenue_delta_pct")


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value == 0:
            return "0"  # folds -0.0
        return format(value, ".6g")
    return "" if value is None else str(value)


def scenario_digest(scenario: Scenario) -> str:
    """Short stable fingerprint of every scenario setting."""
    return hashlib.sha256(repr(scenario).encode()).hexdigest()[:12]


def pct_delta(heuristic: float, other: float) -> float:
    """``(heuristic - other) / heuristic`` in percent; NaN when the heuristic is 0."""
    return (heuristic - other) / heuristic * 100.0 if heuristic else math.nan


@dataclass
class RunReport:
    scenario: Scenario
    metrics: SimMetrics
    dynamic: bool = False

    def per_slot_rows(self) -> list[dict]:
        rows = []
        for s in self.metrics.slots:
            row = {k: getattr(s, k) for k in PER_SLOT_FIELDS}
            row.update({f"revenue_{v}": s.mvno_revenue.get(v, 0.0) for v in self.metrics.mvno_ids})
            rows.append(row)
        return rows

    def per_slot_fields(self) -> list[str]:
        return list(PER_SLOT_FIELDS) + [f"revenue_{v}" for v in self.metrics.mvno_ids]

    def summary_row(self) -> dict:
        sc = self.scenario
        row = {"digest": scenario_digest(sc), "seed": sc.seed, "algorithm": sc.algorithm,
               "resale_profile": sc.resale_profile, "horizon": sc.horizon, "dynamic": self.dynamic}
        row.update(self.metrics.summary())
        return row

    def summary_fields(self) -> list[str]:
        return list(SUMMARY_FIELDS) + [f"revenue_{v}" for v in self.metrics.mvno_ids]


@dataclass
class CompareReport:
    """Runs keyed by (profile, algorithm, seed); deltas are against the heuristic."""

    runs: dict = field(default_factory=dict)

    def add(self, profile: str, algorithm: str, seed: int, metrics: SimMetrics) -> None:
        self.runs[(profile, algorithm, seed)] = metrics

    def profiles(self) -> list[str]:
        return sorted({k[0] for k in self.runs})

    def algorithms(self) -> list[str]:
        order = ("heuristic", "baseline1", "baseline2")
        return [a for a in order if any(k[1] == a for k in self.runs)]

    def mean(self, profile: str, algorithm: str, attr: str) -> float:
        vals = [getattr(m, attr) for (p, a, _), m in self.runs.items() if p == profile and a == algorithm]
        return math.fsum(vals) / len(vals) if vals else math.nan

    def rows(self) -> list[dict]:
        out = []
        for prof in self.profiles():
            for alg in self.algorithms():
                seeds = sorted(s for p, a, s in self.runs if p == prof and a == alg)
                for seed in seeds:
                    out.append(self._row(prof, alg, seed, self.runs[(prof, alg, seed)], self.runs.get((prof, "heuristic", seed))))
            for alg in self.algorithms():
                means = {k: self.mean(prof, alg, k) for k in ("mno_revenue", "mno_cost", "mno_profit", "accepted_bid_sum")}
                href = {k: self.mean(prof, "heuristic", k) for k in means}
                out.append(self._deltas({"resale_profile": prof, "algorithm": alg, "seed": "mean", **means}, href))
        return out

    def _row(self, prof, alg, seed, m: SimMetrics, h: SimMetrics | None) -> dict:
        row = {"resale_profile": prof, "algorithm": alg, "seed": seed, "mno_revenue": m.mno_revenue,
               "mno_cost": m.mno_cost, "mno_profit": m.mno_profit, "accepted_bid_sum": m.accepted_bid_sum}
        ref = None if h is None else {"mno_revenue": h.mno_revenue, "mno_cost": h.mno_cost,
                                      "accepted_bid_sum": h.accepted_bid_sum}
        return self._deltas(row, ref)

    @staticmethod
    def _deltas(row: dict, ref: dict | None) -> dict:
        if ref is None or row["algorithm"] == "heuristic":
            row.update(revenue_delta_pct=None, cost_delta_pct=None, mvno_revenue_delta_pct=None)
        else:
            row.update(revenue_delta_pct=pct_delta(ref["mno_revenue"], row["mno_revenue"]),
                       cost_delta_pct=pct_delta(ref["mno_cost"], row["mno_cost"]),
                       mvno_revenue_delta_pct=pct_delta(ref["accepted_bid_sum"], row["accepted_bid_sum"]))
        return row


def render_csv(fieldnames: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: fmt(row.get(k)) for k in fieldnames})
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def emit_run_csv(report: RunReport, out_dir: str | Path) -> list[Path]:
    """Write ``per_slot.csv`` and ``summary.csv``."""
    out = Path(out_dir)
    return [_write(out / "per_slot.csv", render_csv(report.per_slot_fields(), report.per_slot_rows())),
            _write(out / "summary.csv", render_csv(report.summary_fields(), [report.summary_row()]))]


def emit_compare_csv(report: CompareReport, out_dir: str | Path) -> Path:
    """Write ``compare.csv``: one row per (profile, algorithm, seed) plus a ``mean`` row per pair."""
    return _write(Path(out_dir) / "compare.csv", render_csv(COMPARE_FIELDS, report.rows()))
