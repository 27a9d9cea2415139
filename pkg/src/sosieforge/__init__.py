"""Sosie synthesis for MiniLang programs.

Pipeline: parse and type-check a program (``load_program``, ``typecheck``),
record which tests reach each statement (``collect_signatures``), apply
random type-safe statement transformations and keep the variants that still
pass every test (``run_campaign``), then tabulate how the sosiefication rate
varies with coverage and statement kind (``build_report``).
"""

from importlib.resources import files
from pathlib import Path
from typing import List

from .campaign import CampaignConfig, CampaignResult, TrialRecord, reverify, run_campaign
from .interpreter import Interpreter, run_suite
from .metrics import linear_trend, sosiefication_rate, sr_by_kind, sr_by_tc, two_proportion_test
from .nodes import StatementId
from .parser import ParseError, parse
from .printer import pretty_print
from .program import Program, load_program
from .report import AnalysisReport, build_report, export_csv
from .sesig import ExecutionSignature, SignatureStore, collect_signatures
from .transform import TransformationSpec, apply_transformation, draw_renaming, legal_transplants
from .typecheck import TypeCheckError, typecheck

__version__ = "0.1.0"


def corpus_names() -> List[str]:
    root = files(__package__) / "corpus"
    return sorted(p.name for p in root.iterdir() if p.is_dir() and not p.name.startswith(("_", ".")))


def corpus_dir(name: str) -> Path:
    """Filesystem path of a bundled example program."""
    return Path(str(files(__package__) / "corpus" / name))


__all__ = [
    "AnalysisReport", "CampaignConfig", "CampaignResult", "ExecutionSignature", "Interpreter", "ParseError",
    "Program", "SignatureStore", "StatementId", "TransformationSpec", "TrialRecord", "TypeCheckError",
    "apply_transformation", "build_report", "collect_signatures", "corpus_dir", "corpus_names",
    "draw_renaming", "export_csv", "legal_transplants", "linear_trend", "load_program", "parse",
    "pretty_print", "reverify", "run_campaign", "run_suite", "sosiefication_rate", "sr_by_kind", "sr_by_tc",
    "two_proportion_test", "typecheck",
]
