"""A MiniLang program: program units plus test units, loaded from a directory."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .nodes import FunctionDecl, SourceUnit, Statement, StatementId, child_statements, walk
from .parser import parse
from .printer import pretty_print


@dataclass(frozen=True)
class Program:
    units: Tuple[SourceUnit, ...]

    @classmethod
    def of(cls, units: Iterable[SourceUnit]) -> "Program":
        if isinstance(units, Program):
            return units
        return cls(tuple(sorted(units, key=lambda u: u.path)))

    @cached_property
    def functions(self) -> Dict[str, Tuple[int, int, FunctionDecl]]:
        """name -> (unit index, function index, decl); first definition wins."""
        table: Dict[str, Tuple[int, int, FunctionDecl]] = {}
        for ui, unit in enumerate(self.units):
            for fi, fn in enumerate(unit.functions):
                table.setdefault(fn.name, (ui, fi, fn))
        return table

    @cached_property
    def statements(self) -> Dict[StatementId, Statement]:
        """Every statement of every unit, keyed by id, in depth-first order."""
        out: Dict[StatementId, Statement] = {}
        for unit in self.units:
            for fn in unit.functions:
                for s in fn.statements():
                    out[s.sid] = s
        return out

    @cached_property
    def program_statement_ids(self) -> List[StatementId]:
        return [sid for sid in self.statements if self.unit(sid.unit).kind == "program"]

    @cached_property
    def _unit_index(self) -> Dict[str, int]:
        return {u.path: i for i, u in enumerate(self.units)}

    def unit(self, path: str) -> SourceUnit:
        return self.units[self._unit_index[path]]

    def function_of(self, sid: StatementId) -> FunctionDecl:
        return self.unit(sid.unit).function(sid.function)

    @cached_property
    def tests(self) -> List[Tuple[SourceUnit, FunctionDecl]]:
        """Test functions in (unit path, declaration) order; list index is the test id."""
        return [(u, fn) for u in self.units if u.kind == "test" for fn in u.functions if fn.is_test]

    def replace_function(self, unit_path: str, fn: FunctionDecl) -> "Program":
        units = list(self.units)
        ui = self._unit_index[unit_path]
        unit = units[ui]
        fns = tuple(fn if f.name == fn.name else f for f in unit.functions)
        units[ui] = replace(unit, functions=fns)
        return Program(tuple(units))

    def source(self) -> str:
        return "".join(f"// {u.path}\n{pretty_print(u)}" for u in self.units)

    @cached_property
    def content_hash(self) -> str:
        """sha256 of the canonical pretty-printed program; binds output files to a version."""
        return hashlib.sha256(self.source().encode("utf-8")).hexdigest()


def enclosing_chain(fn: FunctionDecl, path: Tuple[int, ...]) -> List[Statement]:
    """Statements from the outermost body statement down to the one at ``path``."""
    chain: List[Statement] = []
    kids = fn.body.stmts
    for idx in path:
        node = kids[idx]
        chain.append(node)
        kids = child_statements(node)
    return chain


def find_statement(fn: FunctionDecl, path: Tuple[int, ...]) -> Optional[Statement]:
    try:
        return enclosing_chain(fn, path)[-1]
    except IndexError:
        return None


def iter_program_statements(program: Program) -> Iterator[Statement]:
    for unit in program.units:
        if unit.kind == "program":
            for fn in unit.functions:
                yield from fn.statements()


def load_program(directory) -> Program:
    """Load ``src/*.mini`` (program units) and ``tests/*.mini`` (test units)."""
    root = Path(directory)
    units = []
    for sub, kind in (("src", "program"), ("tests", "test")):
        for f in sorted((root / sub).glob("*.mini")):
            rel = f"{sub}/{f.name}"
            units.append(parse(f.read_text(encoding="utf-8"), rel, kind))
    if not units:
        raise FileNotFoundError(f"no .mini files under {root}/src or {root}/tests")
    return Program.of(units)


__all__ = ["Program", "load_program", "enclosing_chain", "find_statement", "walk"]
