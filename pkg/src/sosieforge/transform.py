"""Statement-level add / delete / replace with type-constrained transplants.

A transplant is always an existing statement of the same program.  Its free
variables are rebound to same-typed variables visible at the
transplantation point, and variables it declares are freshened so they
cannot capture or collide with anything in the receiving function.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .nodes import (
    ArrayLit, Assert, Assign, Binary, Block, Break, Call, Continue, Expr, ExprStmt, FunctionDecl, If, Index,
    NewArray, Return, Statement, StatementId, Throw, Type, Unary, Var, VarDecl, While,
    child_statements, kind_of, number_function, own_expressions, strip_ids, walk, walk_expr,
    with_children,
)
from .program import Program, enclosing_chain
from .typecheck import ScopeTable, expr_type, signatures, typecheck

OPS = ("add", "delete", "replace")
SAME_KIND_ON_REPLACE = ("VarDecl", "Return", "Throw")


class NotATransplantationPoint(ValueError):
    pass


class IllegalSpec(ValueError):
    pass


@dataclass(frozen=True)
class TransformationSpec:
    op: str
    point: StatementId
    transplant: Optional[StatementId] = None
    renaming: Mapping[str, str] = field(default_factory=dict)
    fresh: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.op not in OPS:
            raise IllegalSpec(f"unknown op {self.op!r}")
        if self.op == "delete" and (self.transplant is not None or self.renaming or self.fresh):
            raise IllegalSpec("delete takes no transplant or renaming")
        if self.op != "delete" and self.transplant is None:
            raise IllegalSpec(f"{self.op} needs a transplant")
        if self.op == "replace" and self.transplant == self.point:
            raise IllegalSpec("a statement cannot be replaced by itself")

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "point": str(self.point),
            "transplant": None if self.transplant is None else str(self.transplant),
            "renaming": dict(sorted(self.renaming.items())),
            "fresh": dict(sorted(self.fresh.items())),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransformationSpec":
        return cls(
            data["op"],
            StatementId.parse(data["point"]),
            None if data["transplant"] is None else StatementId.parse(data["transplant"]),
            dict(data.get("renaming", {})),
            dict(data.get("fresh", {})),
        )


@dataclass(frozen=True)
class Candidate:
    """A legal transplant and, per free variable, the in-scope names it may be bound to."""

    transplant: StatementId
    choices: Tuple[Tuple[str, Tuple[str, ...]], ...]


@dataclass(frozen=True)
class CandidateSet:
    point: StatementId
    op: str
    candidates: Tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def transplants(self) -> List[StatementId]:
        return [c.transplant for c in self.candidates]


# --------------------------------------------------------------------------
# per-statement facts


def free_variables(stmt: Statement) -> List[str]:
    """Names referenced by ``stmt`` that it does not itself declare, in first-use order."""
    out: Dict[str, None] = {}

    def visit_expr(e: Expr, bound: Set[str]) -> None:
        for sub in walk_expr(e):
            if isinstance(sub, Var) and sub.name not in bound:
                out.setdefault(sub.name)

    def visit(s: Statement, bound: Set[str]) -> None:
        for e in own_expressions(s):
            visit_expr(e, bound)
        if isinstance(s, VarDecl):
            bound.add(s.name)
        if isinstance(s, Block):
            inner = set(bound)  # declarations stay visible to later siblings
            for child in s.stmts:
                visit(child, inner)
            return
        for child in child_statements(s):
            visit(child, set(bound))

    visit(stmt, set())
    return list(out)


def declared_variables(stmt: Statement) -> List[str]:
    seen: Dict[str, None] = {}
    for s in walk(stmt):
        if isinstance(s, VarDecl):
            seen.setdefault(s.name)
    return list(seen)


def loose_jumps(stmt: Statement) -> bool:
    """True when ``stmt`` holds a break/continue not enclosed by a loop inside ``stmt``."""
    if isinstance(stmt, (Break, Continue)):
        return True
    if isinstance(stmt, While):
        return False
    return any(loose_jumps(c) for c in child_statements(stmt))


def function_names_used(fn: FunctionDecl) -> Set[str]:
    names = {p.name for p in fn.params}
    for s in fn.statements():
        if isinstance(s, VarDecl):
            names.add(s.name)
        for e in own_expressions(s):
            names.update(x.name for x in walk_expr(e) if isinstance(x, Var))
    return names


_VOID = object()  # return-type marker for `return;`


@dataclass(frozen=True)
class _Facts:
    kind: str
    free: Tuple[Tuple[str, Type], ...]
    declared: Tuple[str, ...]
    loose_jumps: bool
    return_types: Tuple[object, ...]  # type of every Return inside, _VOID for `return;`
    own_return: Optional[object]  # for a Return statement: its value type


class TransformEngine:
    """Legality, renaming and application for one (program, scope table) pair."""

    def __init__(self, program: Program, scope: Optional[ScopeTable] = None):
        self.program = program
        self.scope = scope if scope is not None else typecheck(program)
        self.sigs = signatures(program)
        self.pool: List[StatementId] = [
            sid for sid in program.program_statement_ids if kind_of(program.statements[sid]) != "Block"
        ]
        self.facts: Dict[StatementId, _Facts] = {sid: self._facts(sid) for sid in self.pool}
        self._cache: Dict[Tuple[StatementId, str], CandidateSet] = {}
        self._names_used: Dict[Tuple[str, str], Set[str]] = {}

    def _return_type(self, s: Return) -> object:
        if s.value is None:
            return _VOID
        return expr_type(s.value, self.scope[s.sid], self.sigs)

    def _facts(self, sid: StatementId) -> _Facts:
        stmt = self.program.statements[sid]
        env = self.scope[sid]
        free = tuple((n, env[n]) for n in free_variables(stmt))
        rets = tuple(self._return_type(s) for s in walk(stmt) if isinstance(s, Return))
        own = self._return_type(stmt) if isinstance(stmt, Return) else None
        return _Facts(kind_of(stmt), free, tuple(declared_variables(stmt)), loose_jumps(stmt), rets, own)

    # -- points -----------------------------------------------------------

    def check_point(self, point: StatementId) -> Statement:
        stmt = self.program.statements.get(point)
        if stmt is None:
            raise NotATransplantationPoint(f"no statement {point}")
        if self.program.unit(point.unit).kind != "program":
            raise NotATransplantationPoint(f"{point} is in a test unit")
        if kind_of(stmt) == "Block":
            raise NotATransplantationPoint(f"{point} is a block")
        return stmt

    def in_loop(self, point: StatementId) -> bool:
        fn = self.program.function_of(point)
        return any(isinstance(s, While) for s in enclosing_chain(fn, point.path)[:-1])

    def function_return(self, point: StatementId) -> object:
        rt = self.program.function_of(point).return_type
        return _VOID if rt is None else rt

    # -- legality ---------------------------------------------------------

    def legal_transplants(self, point: StatementId, op: str) -> CandidateSet:
        """All legal transplants for ``op`` at ``point``; empty for delete, which takes none."""
        key = (point, op)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.check_point(point)
        if op not in OPS:
            raise ValueError(f"unknown op {op!r}")
        if op == "delete":
            result = CandidateSet(point, op, ())
            self._cache[key] = result
            return result
        pf = self.facts[point]
        env = self.scope[point]
        by_type: Dict[Type, List[str]] = {}
        for name in sorted(env):
            by_type.setdefault(env[name], []).append(name)
        in_loop = self.in_loop(point)
        fn_ret = self.function_return(point)
        out = []
        for sid in self.pool:
            f = self.facts[sid]
            if op == "replace":
                if sid == point:
                    continue
                if pf.kind in SAME_KIND_ON_REPLACE and f.kind != pf.kind:
                    continue
            if pf.kind == "Return" and f.kind == "Return" and pf.own_return != f.own_return:
                continue
            if f.loose_jumps and not in_loop:
                continue
            if any(rt != fn_ret for rt in f.return_types):
                continue
            choices = []
            for name, typ in f.free:
                names = by_type.get(typ)
                if not names:
                    break
                choices.append((name, tuple(names)))
            else:
                out.append(Candidate(sid, tuple(choices)))
        result = CandidateSet(point, op, tuple(out))
        self._cache[key] = result
        return result

    # -- renaming ---------------------------------------------------------

    def _taken(self, point: StatementId) -> Set[str]:
        key = (point.unit, point.function)
        if key not in self._names_used:
            self._names_used[key] = function_names_used(self.program.function_of(point))
        return self._names_used[key] | set(self.scope[point])

    def fresh_names(self, transplant: StatementId, point: StatementId, op: str) -> Dict[str, str]:
        declared = self.facts[transplant].declared
        fresh: Dict[str, str] = {}
        if not declared:
            return fresh
        t_stmt = self.program.statements[transplant]
        p_stmt = self.program.statements[point]
        if (op == "replace" and isinstance(t_stmt, VarDecl) and isinstance(p_stmt, VarDecl)
                and t_stmt.type == p_stmt.type):
            # the replaced declaration's name is free again; reuse it so later uses still bind
            fresh[t_stmt.name] = p_stmt.name
        taken = self._taken(point) | set(fresh.values())
        for name in declared:
            if name in fresh:
                continue
            new, k = name, 0
            while new in taken:
                k += 1
                new = f"{name}_{k}"
            fresh[name] = new
            taken.add(new)
        return fresh

    def draw_renaming(self, candidate: Candidate, point: StatementId, op: str,
                      rng: random.Random) -> Tuple[Dict[str, str], Dict[str, str]]:
        renaming = {name: rng.choice(options) for name, options in candidate.choices}
        return renaming, self.fresh_names(candidate.transplant, point, op)

    # -- application ------------------------------------------------------

    def validate(self, spec: TransformationSpec) -> None:
        try:
            self.check_point(spec.point)
        except NotATransplantationPoint as exc:
            raise IllegalSpec(str(exc)) from None
        if spec.op == "delete":
            return
        cands = {c.transplant: c for c in self.legal_transplants(spec.point, spec.op)}
        cand = cands.get(spec.transplant)
        if cand is None:
            raise IllegalSpec(f"{spec.transplant} is not a legal {spec.op} transplant at {spec.point}")
        choices = dict(cand.choices)
        if set(spec.renaming) != set(choices):
            raise IllegalSpec(f"renaming must bind exactly {sorted(choices)}")
        for old, new in spec.renaming.items():
            if new not in choices[old]:
                raise IllegalSpec(f"cannot bind '{old}' to '{new}' at {spec.point}")
        declared = self.facts[spec.transplant].declared
        if set(spec.fresh) != set(declared):
            raise IllegalSpec(f"fresh names must cover exactly {sorted(declared)}")
        if spec.fresh != self.fresh_names(spec.transplant, spec.point, spec.op):
            taken = self._taken(spec.point)
            values = list(spec.fresh.values())
            if len(set(values)) != len(values) or any(v in taken for v in values):
                raise IllegalSpec("fresh names collide with names of the receiving function")

    def apply(self, spec: TransformationSpec, validate: bool = True) -> Program:
        if validate:
            self.validate(spec)
        program = self.program
        fn = program.function_of(spec.point)
        new_stmt = None
        if spec.op != "delete":
            mapping = dict(spec.renaming)
            mapping.update(spec.fresh)
            new_stmt = rename_statement(strip_ids(program.statements[spec.transplant]), mapping)
        body = _edit(fn.body, spec.point.path, spec.op, new_stmt)
        new_fn = number_function(replace(fn, body=body), spec.point.unit)
        return program.replace_function(spec.point.unit, new_fn)


def _edit(block: Block, path: Sequence[int], op: str, new_stmt: Optional[Statement]) -> Block:
    idx = path[0]
    stmts = list(block.stmts)
    if len(path) > 1:
        parent = stmts[idx]
        kids = list(child_statements(parent))
        if len(path) == 2:
            raise IllegalSpec("blocks are not transplantation points")
        kids[path[1]] = _edit(kids[path[1]], path[2:], op, new_stmt)
        stmts[idx] = with_children(parent, tuple(kids))
        return replace(block, stmts=tuple(stmts))
    if op == "delete":
        del stmts[idx]
    elif op == "replace":
        stmts[idx] = new_stmt
    else:
        stmts.insert(idx + 1, new_stmt)
    return replace(block, stmts=tuple(stmts))


def rename_expr(e: Expr, mapping: Mapping[str, str]) -> Expr:
    if isinstance(e, Var):
        new = mapping.get(e.name)
        return e if new is None else replace(e, name=new)
    if isinstance(e, ArrayLit):
        return replace(e, elems=tuple(rename_expr(x, mapping) for x in e.elems))
    if isinstance(e, NewArray):
        return replace(e, size=rename_expr(e.size, mapping))
    if isinstance(e, Index):
        return replace(e, target=rename_expr(e.target, mapping), index=rename_expr(e.index, mapping))
    if isinstance(e, Call):
        return replace(e, args=tuple(rename_expr(x, mapping) for x in e.args))
    if isinstance(e, Unary):
        return replace(e, operand=rename_expr(e.operand, mapping))
    if isinstance(e, Binary):
        return replace(e, left=rename_expr(e.left, mapping), right=rename_expr(e.right, mapping))
    return e


def rename_statement(s: Statement, mapping: Mapping[str, str]) -> Statement:
    """Simultaneous substitution of variable names throughout ``s``."""
    if not mapping:
        return s
    kids = child_statements(s)
    if kids:
        s = with_children(s, tuple(rename_statement(k, mapping) for k in kids))
    if isinstance(s, VarDecl):
        return replace(s, name=mapping.get(s.name, s.name), init=rename_expr(s.init, mapping))
    if isinstance(s, Assign):
        return replace(s, target=rename_expr(s.target, mapping), value=rename_expr(s.value, mapping))
    if isinstance(s, (If, While)):
        return replace(s, cond=rename_expr(s.cond, mapping))
    if isinstance(s, Return) and s.value is not None:
        return replace(s, value=rename_expr(s.value, mapping))
    if isinstance(s, Throw):
        return replace(s, value=rename_expr(s.value, mapping))
    if isinstance(s, ExprStmt):
        return replace(s, expr=rename_expr(s.expr, mapping))
    if isinstance(s, Assert):
        return replace(s, cond=rename_expr(s.cond, mapping))
    return s


# --------------------------------------------------------------------------
# module-level API


def engine_for(program: Program, scope: Optional[ScopeTable] = None) -> TransformEngine:
    """Engine cached on the (immutable) program object, keyed by scope table identity."""
    cache = program.__dict__.setdefault("_transform_engines", {})
    key = id(scope)
    hit = cache.get(key)
    if hit is None or hit[0] is not scope:
        hit = (scope, TransformEngine(program, scope))
        cache[key] = hit
    return hit[1]


def legal_transplants(program: Program, scope: Optional[ScopeTable], point: StatementId, op: str) -> CandidateSet:
    return engine_for(program, scope).legal_transplants(point, op)


def draw_renaming(program: Program, scope: Optional[ScopeTable], candidate: Candidate, point: StatementId,
                  rng: random.Random, op: str = "add") -> Tuple[Dict[str, str], Dict[str, str]]:
    """(renaming of free variables, fresh names for declared variables)."""
    return engine_for(program, scope).draw_renaming(candidate, point, op, rng)


def apply_transformation(program: Program, spec: TransformationSpec, scope: Optional[ScopeTable] = None) -> Program:
    """Return a new program with ``spec`` applied; ``program`` itself is never modified."""
    return engine_for(program, scope).apply(spec)
