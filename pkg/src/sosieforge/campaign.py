"""Budget-based sosiefication campaigns.

Trial ``i`` draws everything it needs from its own RNG stream seeded by
``(seed, i)`` and runs on its own variant, so a campaign's output does not
depend on how trials are spread over worker processes.
"""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .interpreter import DEFAULT_STEP_LIMIT, Compiler, Interpreter
from .nodes import StatementId, kind_of
from .printer import pretty_print
from .program import Program
from .sesig import SignatureStore
from .transform import OPS, TransformEngine, TransformationSpec, engine_for
from .typecheck import ScopeTable, TypeCheckError, check_function, signatures, typecheck

log = logging.getLogger(__name__)

OUTCOMES = ("compile_error", "test_failure", "timeout", "sosie")


class NoViableTrials(RuntimeError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    budget: int
    seed: int = 0
    ops: Tuple[str, ...] = OPS
    step_limit: int = DEFAULT_STEP_LIMIT
    workers: int = 1
    # restrict transplantation points to these functions ("unit::fn" or "fn") or statement ids
    targets: Optional[Tuple[str, ...]] = None
    # also run the tests that never reach the point (they cannot observe the edit)
    full_validation: bool = False
    redraw_factor: int = 100

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.ops or any(op not in OPS for op in self.ops):
            raise ValueError(f"ops must be a nonempty subset of {OPS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d["ops"] = list(self.ops)
        d["targets"] = None if self.targets is None else list(self.targets)
        del d["workers"]  # output must not depend on parallelism
        return d


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    spec: TransformationSpec
    tc_at_point: int
    point_kind: str
    transplant_kind: Optional[str]
    outcome: str
    failed_test: Optional[str] = None
    detail: str = ""
    redraws: int = 0

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "spec": self.spec.to_json(),
            "tc_at_point": self.tc_at_point,
            "point_kind": self.point_kind,
            "transplant_kind": self.transplant_kind,
            "outcome": self.outcome,
            "failed_test": self.failed_test,
            "detail": self.detail,
            "redraws": self.redraws,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TrialRecord":
        return cls(d["trial_index"], TransformationSpec.from_json(d["spec"]), d["tc_at_point"],
                   d["point_kind"], d["transplant_kind"], d["outcome"], d.get("failed_test"),
                   d.get("detail", ""), d.get("redraws", 0))


@dataclass
class CampaignResult:
    config: CampaignConfig
    trials: List[TrialRecord]
    exploration_rate: float
    program_hash: str = ""

    @property
    def sosie_count(self) -> int:
        return sum(t.outcome == "sosie" for t in self.trials)

    def to_json(self) -> dict:
        return {
            "program_hash": self.program_hash,
            "config": self.config.to_json(),
            "trials": [t.to_json() for t in self.trials],
            "sosie_count": self.sosie_count,
            "exploration_rate": self.exploration_rate,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_json(cls, d: dict) -> "CampaignResult":
        c = dict(d["config"])
        c["ops"] = tuple(c["ops"])
        c["targets"] = None if c.get("targets") is None else tuple(c["targets"])
        return cls(CampaignConfig(**c), [TrialRecord.from_json(t) for t in d["trials"]],
                   d["exploration_rate"], d.get("program_hash", ""))

    @classmethod
    def load(cls, path) -> "CampaignResult":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _matches(sid: StatementId, targets: Sequence[str]) -> bool:
    text = str(sid)
    for t in targets:
        if t == text or t == sid.function or t == f"{sid.unit}::{sid.function}":
            return True
    return False


class TrialRunner:
    """Everything one process needs to run trials against one program."""

    def __init__(self, program: Program, store: SignatureStore, config: CampaignConfig,
                 scope: Optional[ScopeTable] = None):
        self.program = program
        self.store = store
        self.config = config
        self.engine = TransformEngine(program, scope if scope is not None else typecheck(program))
        self.sigs = signatures(program)
        self.compiler = Compiler(list(program.functions))
        self.n_tests = len(program.tests)
        pool = [sid for sid in self.engine.pool if store.tc(sid) > 0]
        if config.targets:
            pool = [sid for sid in pool if _matches(sid, config.targets)]
        if not pool:
            raise NoViableTrials("no covered transplantation point matches the configuration")
        self.points = pool
        self.redraw_cap = config.redraw_factor * config.budget
        if "delete" not in config.ops and not any(
                len(self.engine.legal_transplants(p, op)) for p in pool for op in config.ops):
            raise NoViableTrials("no (point, op) pair has a legal transplant")

    def draw(self, index: int) -> Tuple[TransformationSpec, int]:
        rng = random.Random(f"{self.config.seed}:{index}")
        for redraws in range(self.redraw_cap + 1):
            point = rng.choice(self.points)
            op = rng.choice(self.config.ops)
            if op == "delete":
                return TransformationSpec("delete", point), redraws
            cands = self.engine.legal_transplants(point, op)
            if not cands.candidates:
                continue
            cand = rng.choice(cands.candidates)
            renaming, fresh = self.engine.draw_renaming(cand, point, op, rng)
            return TransformationSpec(op, point, cand.transplant, renaming, fresh), redraws
        raise NoViableTrials(f"trial {index}: redraw cap of {self.redraw_cap} exhausted")

    def validate_variant(self, spec: TransformationSpec, full: bool) -> Tuple[str, Optional[str], str]:
        """(outcome, failed test name, detail) for the variant ``spec`` produces."""
        variant = self.engine.apply(spec, validate=False)
        fn = variant.function_of(spec.point)
        try:
            check_function(fn, self.sigs, "program")
        except TypeCheckError as exc:
            return "compile_error", None, exc.message
        covering = sorted(self.store[spec.point].covering_tests)
        order = covering
        if full:
            rest = [i for i in range(self.n_tests) if i not in self.store[spec.point].covering_tests]
            order = covering + rest
        try:
            interp = Interpreter(variant, self.config.step_limit, compiler=self.compiler)
            for tid in order:
                r = interp.run_test(tid)
                if not r.passed:
                    outcome = "timeout" if r.status == "timeout" else "test_failure"
                    return outcome, r.name, r.detail
        finally:
            self.compiler.forget(fn)
        return "sosie", None, ""

    def run_trial(self, index: int) -> TrialRecord:
        spec, redraws = self.draw(index)
        point_kind = kind_of(self.program.statements[spec.point])
        transplant_kind = None if spec.transplant is None else kind_of(self.program.statements[spec.transplant])
        outcome, failed, detail = self.validate_variant(spec, self.config.full_validation)
        return TrialRecord(index, spec, self.store.tc(spec.point), point_kind, transplant_kind,
                           outcome, failed, detail, redraws)


_WORKER: Optional[TrialRunner] = None


def _init_worker(program, store, config):
    global _WORKER
    _WORKER = TrialRunner(program, store, config)


def _run_chunk(bounds: Tuple[int, int]) -> List[TrialRecord]:
    lo, hi = bounds
    return [_WORKER.run_trial(i) for i in range(lo, hi)]


def _chunks(n: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, -(-n // (workers * 4)))
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def run_campaign(program: Program, store: SignatureStore, config: CampaignConfig,
                 scope: Optional[ScopeTable] = None) -> CampaignResult:
    """Run ``config.budget`` trials; the result depends only on (program, store, config minus workers)."""
    program = Program.of(program)
    if store.program_hash and store.program_hash != program.content_hash:
        raise ValueError("signature store was collected on a different program version")
    runner = TrialRunner(program, store, config, scope)
    if config.workers == 1:
        trials = [runner.run_trial(i) for i in range(config.budget)]
    else:
        with ProcessPoolExecutor(config.workers, initializer=_init_worker,
                                 initargs=(program, store, config)) as pool:
            trials = [t for chunk in pool.map(_run_chunk, _chunks(config.budget, config.workers)) for t in chunk]
    total_redraws = sum(t.redraws for t in trials)
    if total_redraws > runner.redraw_cap:
        raise NoViableTrials(f"{total_redraws} redraws exceed the cap of {runner.redraw_cap}")
    explored = {t.spec.point for t in trials}
    exploration = len(explored) / len(runner.engine.pool)
    log.info("campaign: %d trials, %d sosies", len(trials), sum(t.outcome == "sosie" for t in trials))
    return CampaignResult(config, trials, exploration, program.content_hash)


def reconstruct_variant(program: Program, spec: TransformationSpec, scope: Optional[ScopeTable] = None) -> Program:
    return engine_for(program, scope).apply(spec)


def reverify(program: Program, trial: TrialRecord, step_limit: int = DEFAULT_STEP_LIMIT,
             scope: Optional[ScopeTable] = None) -> bool:
    """Re-apply ``trial.spec`` to the pristine program and run the complete suite."""
    variant = reconstruct_variant(program, trial.spec, scope)
    typecheck(variant)
    return all(r.passed for r in Interpreter(variant, step_limit).run_tests())


def write_sosies(program: Program, result: CampaignResult, out_dir, scope: Optional[ScopeTable] = None) -> List[Path]:
    """Write each sosie's program units to ``<out_dir>/<trial_index>.mini``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for t in result.trials:
        if t.outcome != "sosie":
            continue
        variant = reconstruct_variant(program, t.spec, scope)
        header = f"// trial {t.trial_index}: {t.spec.op} at {t.spec.point}"
        if t.spec.transplant is not None:
            header += f" with {t.spec.transplant}"
        body = "".join(f"// {u.path}\n{pretty_print(u)}" for u in variant.units if u.kind == "program")
        path = out / f"{t.trial_index}.mini"
        path.write_text(header + "\n" + body, encoding="utf-8")
        written.append(path)
    return written
