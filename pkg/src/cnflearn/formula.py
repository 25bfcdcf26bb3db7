"""CNF formulas over 1-indexed variables, with ternary partial assignments.

Two extras ride on top of plain DIMACS clause lists: the subset of variables
that are *original* (everything else is a Tseitin auxiliary), and the number
of leading clauses that are auxiliary-variable definitions (gates).  Model
projection, probability computations and negation all consult these.
"""
from __future__ import annotations

import enum
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

Literal = int
Clause = tuple[Literal, ...]


class DimacsParseError(ValueError):
    """Malformed DIMACS input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ClauseStatus(enum.Enum):
    SATISFIED = "satisfied"
    CONFLICTING = "conflicting"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class CnfFormula:
    """Immutable conjunction of clauses over variables 1..var_count.

    ``original_vars`` marks the non-auxiliary variables.  The first
    ``gate_count`` clauses are definitional: they force every auxiliary
    variable to a unique value once the original variables are fixed.
    ``negate`` preserves gates and replaces only the payload clauses, which
    keeps double negation correct under projection.
    """

    var_count: int
    clauses: tuple[Clause, ...]
    original_vars: frozenset[int]
    gate_count: int = 0

    def __post_init__(self):
        if self.var_count < 1:
            raise ValueError("var_count must be a positive integer")
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        object.__setattr__(self, "original_vars", frozenset(self.original_vars))
        for clause in self.clauses:
            if not clause:
                raise ValueError("empty clause is not allowed")
            for lit in clause:
                if lit == 0 or abs(lit) > self.var_count:
                    raise ValueError(f"literal {lit} out of range 1..{self.var_count}")
        if not self.original_vars:
            raise ValueError("original_vars must be nonempty")
        if not self.original_vars <= set(range(1, self.var_count + 1)):
            raise ValueError("original_vars outside 1..var_count")
        if not 0 <= self.gate_count <= len(self.clauses):
            raise ValueError("gate_count out of range")

    @cached_property
    def projection(self) -> tuple[int, ...]:
        """Original variables in ascending order; the member/weight order."""
        return tuple(sorted(self.original_vars))

    @cached_property
    def occurrences(self) -> dict[int, tuple[int, ...]]:
        """Variable -> indices of clauses mentioning it."""
        occ: dict[int, list[int]] = {v: [] for v in range(1, self.var_count + 1)}
        for ci, clause in enumerate(self.clauses):
            for lit in clause:
                occ[abs(lit)].append(ci)
        return {v: tuple(ix) for v, ix in occ.items()}

    @property
    def clause_count(self) -> int:
        return len(self.clauses)

    @property
    def has_auxiliary(self) -> bool:
        return len(self.original_vars) < self.var_count

    def payload_clauses(self) -> tuple[Clause, ...]:
        return self.clauses[self.gate_count :]


class Assignment:
    """Ternary assignment; ``values[k]`` is the value of variable k+1.

    ``None`` stands for the unassigned marker; it prints as ``?``.
    """

    __slots__ = ("values",)

    def __init__(self, values: Iterable[int | None]):
        vals = list(values)
        for v in vals:
            if v not in (0, 1, None):
                raise ValueError(f"assignment values must be 0, 1 or None, got {v!r}")
        self.values = vals

    @classmethod
    def empty(cls, n: int) -> "Assignment":
        return cls([None] * n)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "Assignment":
        return cls([int(b) for b in bits])

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, Assignment) and self.values == other.values

    def __str__(self) -> str:
        return "".join("?" if v is None else str(v) for v in self.values)

    def __repr__(self) -> str:
        return f"Assignment({str(self)!r})"

    def value(self, var: int) -> int | None:
        return self.values[var - 1]

    def assign(self, var: int, value: int) -> None:
        if value not in (0, 1):
            raise ValueError("value must be 0 or 1")
        self.values[var - 1] = value

    def extended(self, var: int, value: int) -> "Assignment":
        out = Assignment(self.values)
        out.assign(var, value)
        return out

    def copy(self) -> "Assignment":
        return Assignment(self.values)

    def is_complete(self) -> bool:
        return None not in self.values

    def assigned_count(self) -> int:
        return sum(v is not None for v in self.values)

    def unassigned(self) -> list[int]:
        return [i + 1 for i, v in enumerate(self.values) if v is None]

    def key(self) -> tuple[int | None, ...]:
        return tuple(self.values)

    def project(self, variables: Sequence[int]) -> tuple[int, ...]:
        out = []
        for var in variables:
            v = self.values[var - 1]
            if v is None:
                raise ValueError(f"variable {var} unassigned; cannot project")
            out.append(v)
        return tuple(out)


def _literal_value(values: list[int | None], lit: Literal) -> int | None:
    v = values[abs(lit) - 1]
    if v is None:
        return None
    return v if lit > 0 else 1 - v


def evaluate(formula: CnfFormula, assignment: Assignment) -> bool:
    """Truth value of the formula under a complete assignment."""
    if len(assignment) != formula.var_count:
        raise ValueError("assignment length does not match var_count")
    if not assignment.is_complete():
        raise ValueError("evaluate requires a complete assignment")
    vals = assignment.values
    return all(any(_literal_value(vals, lit) == 1 for lit in clause) for clause in formula.clauses)


def status(formula: CnfFormula, assignment: Assignment) -> ClauseStatus:
    """Syntactic clause check: Satisfied / Conflicting / Undetermined.

    Conflicting means some clause has every literal false; this is weaker
    than unsatisfiability of the remaining formula (deliberately so).
    """
    if len(assignment) != formula.var_count:
        raise ValueError("assignment length does not match var_count")
    vals = assignment.values
    all_satisfied = True
    for clause in formula.clauses:
        clause_true = False
        clause_open = False
        for lit in clause:
            lv = _literal_value(vals, lit)
            if lv == 1:
                clause_true = True
                break
            if lv is None:
                clause_open = True
        if clause_true:
            continue
        if not clause_open:
            return ClauseStatus.CONFLICTING
        all_satisfied = False
    return ClauseStatus.SATISFIED if all_satisfied else ClauseStatus.UNDETERMINED


def propagate(formula: CnfFormula, assignment: Assignment) -> tuple[Assignment, ClauseStatus]:
    """Unit propagation to fixpoint.

    Returns the extended assignment together with its status; a conflict
    found along the way is reported as ``CONFLICTING`` (with the values
    derived up to that point).  Never removes satisfying completions.
    """
    if len(assignment) != formula.var_count:
        raise ValueError("assignment length does not match var_count")
    vals = list(assignment.values)
    clauses = formula.clauses
    pending = deque(range(len(clauses)))
    queued = [True] * len(clauses)
    while pending:
        ci = pending.popleft()
        queued[ci] = False
        clause_true = False
        unknown: list[Literal] = []
        for lit in clauses[ci]:
            lv = _literal_value(vals, lit)
            if lv == 1:
                clause_true = True
                break
            if lv is None:
                unknown.append(lit)
        if clause_true:
            continue
        if not unknown:
            return Assignment(vals), ClauseStatus.CONFLICTING
        if len(unknown) == 1:
            lit = unknown[0]
            vals[abs(lit) - 1] = 1 if lit > 0 else 0
            for cj in formula.occurrences[abs(lit)]:
                if not queued[cj]:
                    pending.append(cj)
                    queued[cj] = True
    result = Assignment(vals)
    return result, status(formula, result)


def negate(formula: CnfFormula) -> CnfFormula:
    """Tseitin negation with projection semantics.

    Gate clauses are kept as-is; each payload clause C_j gets a fresh
    auxiliary a_j with a_j <-> not(C_j), and the new payload is the single
    clause (a_1 or ... or a_p).  For gate-closed formulas the models of the
    result, projected onto original_vars, are exactly the complement of the
    input's projected models.  Formulas whose auxiliaries are not functionally
    determined by their gates fall outside this guarantee.
    """
    gates = list(formula.clauses[: formula.gate_count])
    payload = formula.payload_clauses()
    n = formula.var_count
    if not payload:
        # negation of a tautology: unsatisfiable, encoded without empty clauses
        aux = n + 1
        clauses = gates + [(aux,), (-aux,)]
        return CnfFormula(n + 1, tuple(clauses), formula.original_vars, formula.gate_count)
    aux_vars = list(range(n + 1, n + len(payload) + 1))
    new_gates: list[Clause] = []
    for a, clause in zip(aux_vars, payload):
        for lit in clause:
            new_gates.append((-a, -lit))
        new_gates.append((a,) + clause)
    big_or = tuple(aux_vars)
    clauses = gates + new_gates + [big_or]
    return CnfFormula(
        var_count=n + len(payload),
        clauses=tuple(clauses),
        original_vars=formula.original_vars,
        gate_count=formula.gate_count + len(new_gates),
    )


def parse_dimacs(text: str) -> CnfFormula:
    """Parse standard DIMACS CNF.

    Duplicate literals inside a clause are dropped; tautological clauses are
    dropped with a warning.  The clause count in the header refers to clauses
    as written, before any dropping.
    """
    header: tuple[int, int] | None = None
    kept: list[Clause] = []
    read_clauses = 0
    current: list[Literal] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        last_line = lineno
        if line.startswith("p"):
            if header is not None:
                raise DimacsParseError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsParseError(f"malformed header {line!r}", lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsParseError(f"malformed header {line!r}", lineno) from None
            if n < 1 or m < 0:
                raise DimacsParseError(f"malformed header {line!r}", lineno)
            header = (n, m)
            continue
        if header is None:
            raise DimacsParseError("clause before header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsParseError(f"invalid token {tok!r}", lineno) from None
            if lit == 0:
                read_clauses += 1
                if not current:
                    raise DimacsParseError("empty clause", lineno)
                seen: set[Literal] = set()
                deduped: list[Literal] = []
                for l in current:
                    if l not in seen:
                        seen.add(l)
                        deduped.append(l)
                if any(-l in seen for l in deduped):
                    warnings.warn(f"dropping tautological clause at line {lineno}")
                else:
                    kept.append(tuple(deduped))
                current = []
            else:
                if abs(lit) > header[0]:
                    raise DimacsParseError(f"literal {lit} out of range", lineno)
                current.append(lit)
    if header is None:
        raise DimacsParseError("missing header", max(last_line, 1))
    if current:
        raise DimacsParseError("unterminated clause", last_line)
    if read_clauses != header[1]:
        raise DimacsParseError(
            f"clause count mismatch: header says {header[1]}, found {read_clauses}", last_line
        )
    n = header[0]
    return CnfFormula(n, tuple(kept), frozenset(range(1, n + 1)))


def to_dimacs(formula: CnfFormula) -> str:
    """Serialize to DIMACS; LF line endings, clause count as stored."""
    lines = [f"p cnf {formula.var_count} {len(formula.clauses)}"]
    for clause in formula.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


def _exists_completion(formula: CnfFormula, assignment: Assignment) -> bool:
    """Is there any satisfying completion of the partial assignment?"""
    mu, st = propagate(formula, assignment)
    if st is ClauseStatus.CONFLICTING:
        return False
    if mu.is_complete():
        return st is ClauseStatus.SATISFIED
    if st is ClauseStatus.SATISFIED:
        return True
    var = mu.unassigned()[0]
    return _exists_completion(formula, mu.extended(var, 1)) or _exists_completion(
        formula, mu.extended(var, 0)
    )


def satisfies_projected(formula: CnfFormula, bits: Sequence[int]) -> bool:
    """Does the complete original-variable assignment extend to a model?

    For formulas without auxiliaries this is plain evaluation; otherwise the
    auxiliaries are completed by propagation (falling back to search if they
    are not forced).
    """
    proj = formula.projection
    if len(bits) != len(proj):
        raise ValueError("bits length does not match projection")
    mu = Assignment.empty(formula.var_count)
    for var, b in zip(proj, bits):
        mu.assign(var, int(b))
    if not formula.has_auxiliary:
        return evaluate(formula, mu)
    return _exists_completion(formula, mu)
