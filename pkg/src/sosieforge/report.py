"""Turn signatures, campaign results and manual sosie labels into analysis tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .campaign import CampaignResult, TrialRecord
from .metrics import (
    MIN_TRIALS, DegenerateInput, RateCell, linear_trend, sr_by_kind, sr_by_tc, split_by_threshold,
    two_proportion_test,
)
from .sesig import SignatureStore, coverage_distribution

CATEGORIES = (
    "PlasticSpecification", "Optimization", "CodeRedundancy", "ImplementationRedundancy",
    "OptionalFunctionality", "Fooler", "Buggy", "Unclassified",
)

INSUFFICIENT_HIGH = "insufficient high-tested data"

# (csv file name, op, key) for the per-kind tables
KIND_TABLES = (
    ("sr_add_by_transplant.csv", "add", "transplant_kind"),
    ("sr_delete_by_point.csv", "delete", "point_kind"),
    ("sr_replace_by_point.csv", "replace", "point_kind"),
    ("sr_replace_by_transplant.csv", "replace", "transplant_kind"),
)


class SchemaError(ValueError):
    pass


class HashMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TaxonomyLabel:
    trial_index: int
    category: str
    note: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SchemaError(f"unknown taxonomy category {self.category!r}")


@dataclass(frozen=True)
class ProportionResult:
    low: Tuple[int, int]
    high: Tuple[int, int]
    statistic: Optional[float]
    p_value: Optional[float]
    status: str = "ok"


@dataclass(frozen=True)
class TrendResult:
    slope: Optional[float]
    intercept: Optional[float]
    bins_used: int
    status: str = "ok"


@dataclass
class AnalysisReport:
    program_hash: str
    tc_threshold: int
    total_trials: int
    sosie_count: int
    exploration_rate: float
    outcomes: Dict[str, int]
    coverage_summary: Dict[str, float]
    coverage_scatter: List[Tuple[str, int, Optional[float]]]
    sr_vs_tc: Dict[int, RateCell]
    trend: TrendResult
    zoom: Dict[int, RateCell]
    kind_tables: Dict[str, Dict[str, RateCell]]
    proportion_test: ProportionResult
    taxonomy: Dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "program_hash": self.program_hash,
            "tc_threshold": self.tc_threshold,
            "total_trials": self.total_trials,
            "sosie_count": self.sosie_count,
            "exploration_rate": self.exploration_rate,
            "outcomes": dict(self.outcomes),
            "coverage_summary": dict(self.coverage_summary),
            "coverage_scatter": [list(r) for r in self.coverage_scatter],
            "sr_vs_tc": _rows(self.sr_vs_tc, "tc"),
            "trend": vars(self.trend).copy(),
            "zoom": _rows(self.zoom, "tc"),
            "sr_by_kind": {name[:-4]: _rows(t, "kind") for name, t in self.kind_tables.items()},
            "proportion_test": {
                "low": list(self.proportion_test.low),
                "high": list(self.proportion_test.high),
                "statistic": self.proportion_test.statistic,
                "p_value": self.proportion_test.p_value,
                "status": self.proportion_test.status,
            },
            "taxonomy": dict(self.taxonomy),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"


def _rows(table: Dict, key: str) -> List[dict]:
    return [{key: k, "n_trials": c.n_trials, "n_sosies": c.n_sosies, "sr": c.sr,
             "low_confidence": c.low_confidence} for k, c in table.items()]


# -- loading --------------------------------------------------------------

def _read_json(src) -> dict:
    if isinstance(src, dict):
        return src
    try:
        return json.loads(Path(src).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{src}: not valid JSON ({exc})") from None


def _require(d: dict, keys: Sequence[str], where: str) -> None:
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"{where}: missing {', '.join(missing)}")


def load_signatures(src) -> SignatureStore:
    if isinstance(src, SignatureStore):
        return src
    data = _read_json(src)
    _require(data, ("total_tests", "statements"), "signatures")
    for i, row in enumerate(data["statements"]):
        _require(row, ("id", "depth_histogram"), f"signatures.statements[{i}]")
    try:
        return SignatureStore.from_json(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"signatures: {exc}") from None


def load_campaign(src) -> CampaignResult:
    if isinstance(src, CampaignResult):
        return src
    data = _read_json(src)
    _require(data, ("config", "trials", "exploration_rate"), "campaign")
    for i, row in enumerate(data["trials"]):
        _require(row, ("trial_index", "spec", "tc_at_point", "point_kind", "transplant_kind", "outcome"),
                 f"campaign.trials[{i}]")
    try:
        return CampaignResult.from_json(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"campaign: {exc}") from None


def load_labels(src) -> List[TaxonomyLabel]:
    if src is None:
        return []
    data = src if isinstance(src, list) else _read_json(src)
    if isinstance(data, dict):
        data = data.get("labels", [])
    if not isinstance(data, list):
        raise SchemaError("labels: expected a list of {trial_index, category, note}")
    out = []
    for i, row in enumerate(data):
        if isinstance(row, TaxonomyLabel):
            out.append(row)
            continue
        _require(row, ("trial_index", "category"), f"labels[{i}]")
        out.append(TaxonomyLabel(int(row["trial_index"]), row["category"], row.get("note", "")))
    return out


# -- building -------------------------------------------------------------

def taxonomy_tally(labels: Sequence[TaxonomyLabel], trials: Sequence[TrialRecord]) -> Dict[str, int]:
    """Count labels per category; sosies nobody labeled count as Unclassified."""
    sosies = {t.trial_index for t in trials if t.outcome == "sosie"}
    tally = {c: 0 for c in CATEGORIES}
    seen = set()
    for lab in labels:
        if lab.trial_index not in sosies:
            raise SchemaError(f"label for trial {lab.trial_index}, which is not a sosie")
        if lab.trial_index in seen:
            raise SchemaError(f"trial {lab.trial_index} labeled twice")
        seen.add(lab.trial_index)
        tally[lab.category] += 1
    tally["Unclassified"] += len(sosies) - len(seen)
    return tally


def _trend(table: Dict[int, RateCell]) -> TrendResult:
    pts = [(tc, c.sr) for tc, c in table.items() if not c.low_confidence]
    try:
        slope, intercept = linear_trend(pts)
    except DegenerateInput:
        return TrendResult(None, None, len(pts), "fewer than two confident bins")
    return TrendResult(slope, intercept, len(pts))


def _proportions(trials: Sequence[TrialRecord], threshold: int) -> ProportionResult:
    low, high = split_by_threshold(trials, threshold)
    try:
        stat, p = two_proportion_test(low, high)
    except DegenerateInput:
        status = INSUFFICIENT_HIGH if high[1] == 0 else "insufficient low-tested data"
        return ProportionResult(low, high, None, None, status)
    return ProportionResult(low, high, stat, p)


def build_report(signatures, campaign, labels=None, tc_threshold: int = 25,
                 min_trials: int = MIN_TRIALS) -> AnalysisReport:
    """Assemble every analysis table; a pure function of its inputs."""
    store = load_signatures(signatures)
    result = load_campaign(campaign)
    if store.program_hash and result.program_hash and store.program_hash != result.program_hash:
        raise HashMismatch(f"signatures ({store.program_hash[:12]}) and campaign "
                           f"({result.program_hash[:12]}) come from different program versions")
    trials = result.trials
    for t in trials:
        if t.spec.point not in store.signatures:
            raise HashMismatch(f"trial {t.trial_index} targets {t.spec.point}, unknown to the signatures")
    cov = coverage_distribution(store)
    table = sr_by_tc(trials, min_trials=min_trials)
    outcomes: Dict[str, int] = {}
    for t in trials:
        outcomes[t.outcome] = outcomes.get(t.outcome, 0) + 1
    return AnalysisReport(
        program_hash=result.program_hash or store.program_hash,
        tc_threshold=tc_threshold,
        total_trials=len(trials),
        sosie_count=result.sosie_count,
        exploration_rate=result.exploration_rate,
        outcomes=dict(sorted(outcomes.items())),
        coverage_summary={"min": cov.min, "q1": cov.q1, "median": cov.median, "q3": cov.q3, "max": cov.max,
                          "covered_statements": len(cov.rows)},
        coverage_scatter=list(cov.rows),
        sr_vs_tc=table,
        trend=_trend(table),
        zoom={tc: c for tc, c in table.items() if 1 <= tc <= tc_threshold},
        kind_tables={name: sr_by_kind(trials, op, key) for name, op, key in KIND_TABLES},
        proportion_test=_proportions(trials, tc_threshold),
        taxonomy=taxonomy_tally(load_labels(labels), trials),
    )


# -- export ---------------------------------------------------------------

def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def _write(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def export_csv(report: AnalysisReport, out_dir) -> List[Path]:
    """Write the scatter, tc and per-kind tables; output bytes depend only on the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "scatter.csv"
    _write(p, ("id", "tc", "median_depth"), ((sid, tc, _fmt(md)) for sid, tc, md in report.coverage_scatter))
    written.append(p)
    p = out / "sr_vs_tc.csv"
    _write(p, ("tc", "n_trials", "n_sosies", "sr", "low_confidence"),
           ((tc, c.n_trials, c.n_sosies, _fmt(c.sr), int(c.low_confidence)) for tc, c in report.sr_vs_tc.items()))
    written.append(p)
    for name, table in report.kind_tables.items():
        p = out / name
        _write(p, ("kind", "n_trials", "n_sosies", "sr"),
               ((k, c.n_trials, c.n_sosies, _fmt(c.sr)) for k, c in table.items()))
        written.append(p)
    return written


def write_report(report: AnalysisReport, path) -> None:
    Path(path).write_text(report.dumps(), encoding="utf-8")
