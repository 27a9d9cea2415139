"""Statement execution signatures: which tests reach a statement, and how deep."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from .interpreter import DEFAULT_STEP_LIMIT, ExecutionEvent, Interpreter, TestResult
from .nodes import StatementId
from .program import Program


class OriginalSuiteFails(Exception):
    """The unmodified program does not pass its own test suite."""

    def __init__(self, failures: List[TestResult]):
        names = ", ".join(f"{r.name} ({r.status}: {r.detail})" for r in failures[:5])
        super().__init__(f"{len(failures)} test(s) fail on the original program: {names}")
        self.failures = failures


@dataclass(frozen=True, eq=True)
class ExecutionSignature:
    statement: StatementId
    covering_tests: FrozenSet[int] = frozenset()
    depth_histogram: Mapping[int, int] = field(default_factory=dict)

    @property
    def exec_count(self) -> int:
        return sum(self.depth_histogram.values())

    @property
    def tc(self) -> int:
        return len(self.covering_tests)

    __hash__ = None  # type: ignore[assignment]


def median_depth(sig: ExecutionSignature) -> Optional[float]:
    """Median of the depth multiset; the two middle values are averaged for even sizes."""
    hist = sig.depth_histogram
    n = sum(hist.values())
    if n == 0:
        return None
    lo_rank, hi_rank = (n - 1) // 2, n // 2
    lo = hi = None
    seen = 0
    for depth in sorted(hist):
        seen += hist[depth]
        if lo is None and seen > lo_rank:
            lo = depth
        if seen > hi_rank:
            hi = depth
            break
    return (lo + hi) / 2


def mean_depth(sig: ExecutionSignature) -> Optional[float]:
    n = sig.exec_count
    if n == 0:
        return None
    return sum(d * c for d, c in sig.depth_histogram.items()) / n


@dataclass
class SignatureStore:
    signatures: Dict[StatementId, ExecutionSignature]
    total_tests: int
    program_hash: str = ""

    def __getitem__(self, sid: StatementId) -> ExecutionSignature:
        return self.signatures[sid]

    def __len__(self) -> int:
        return len(self.signatures)

    def tc(self, sid: StatementId) -> int:
        return len(self.signatures[sid].covering_tests)

    def covered(self) -> List[StatementId]:
        return [sid for sid, s in self.signatures.items() if s.covering_tests]

    def to_json(self) -> dict:
        rows = []
        for sid, sig in self.signatures.items():
            md = median_depth(sig)
            rows.append({
                "id": str(sid),
                "tc": sig.tc,
                "exec": sig.exec_count,
                "covering_tests": sorted(sig.covering_tests),
                "depth_histogram": {str(d): c for d, c in sorted(sig.depth_histogram.items())},
                "median_depth": md,
                "mean_depth": mean_depth(sig),
            })
        return {"program_hash": self.program_hash, "total_tests": self.total_tests, "statements": rows}

    @classmethod
    def from_json(cls, data: dict) -> "SignatureStore":
        sigs = {}
        for row in data["statements"]:
            sid = StatementId.parse(row["id"])
            hist = {int(d): int(c) for d, c in row["depth_histogram"].items()}
            sigs[sid] = ExecutionSignature(sid, frozenset(row.get("covering_tests", [])), hist)
        return cls(sigs, int(data["total_tests"]), data.get("program_hash", ""))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SignatureStore":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


class _Collector:
    def __init__(self):
        self.tests: Dict[StatementId, set] = {}
        self.depths: Dict[StatementId, Counter] = {}
        self.hits = 0

    def __call__(self, ev: ExecutionEvent) -> None:
        if ev.kind != "statement_hit":
            return
        self.hits += 1
        sid = ev.statement
        if sid not in self.tests:
            self.tests[sid] = set()
            self.depths[sid] = Counter()
        self.tests[sid].add(ev.test_id)
        self.depths[sid][ev.depth] += 1


def collect_signatures(program: Program, scope=None, step_limit: int = DEFAULT_STEP_LIMIT) -> SignatureStore:
    """Run the suite once with probes and build a signature for every program statement.

    Raises OriginalSuiteFails unless every test passes.
    """
    program = Program.of(program)
    collector = _Collector()
    results = Interpreter(program, step_limit, probes=collector).run_tests()
    failures = [r for r in results if not r.passed]
    if failures:
        raise OriginalSuiteFails(failures)
    sigs = {}
    for sid in program.program_statement_ids:
        if sid in collector.tests:
            sigs[sid] = ExecutionSignature(sid, frozenset(collector.tests[sid]), dict(collector.depths[sid]))
        else:
            sigs[sid] = ExecutionSignature(sid)
    return SignatureStore(sigs, len(results), program.content_hash)


@dataclass(frozen=True)
class CoverageSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    rows: Tuple[Tuple[str, int, Optional[float]], ...]  # (id, tc, median depth)


def coverage_distribution(store: SignatureStore) -> CoverageSummary:
    """Five-number summary of |covering tests| over covered statements, plus scatter rows."""
    rows = tuple((str(sid), sig.tc, median_depth(sig)) for sid, sig in store.signatures.items() if sig.tc)
    if not rows:
        nan = float("nan")
        return CoverageSummary(nan, nan, nan, nan, nan, rows)
    q = np.percentile(np.array([r[1] for r in rows], dtype=float), [0, 25, 50, 75, 100])
    return CoverageSummary(*(float(x) for x in q), rows=rows)


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def write_scatter_csv(store: SignatureStore, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "tc", "median_depth"])
        for sid, tc, md in coverage_distribution(store).rows:
            w.writerow([sid, tc, _fmt(md)])
