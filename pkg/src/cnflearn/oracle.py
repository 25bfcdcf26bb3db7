"""Ground-truth machinery: exhaustive enumeration, exact weighted counts,
exact negative log-likelihood, KL grid minimization and finite differences.

Everything here is deliberately independent of the sampling and training
code paths so it can serve as an oracle in tests.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cnflearn.formula import (
    Assignment,
    ClauseStatus,
    CnfFormula,
    _exists_completion,
    propagate,
)

ENUMERATION_GUARD = 24
_CHUNK = 1 << 18


class OracleGuardError(ValueError):
    """Instance exceeds the exhaustive-enumeration guard."""


@dataclass(frozen=True)
class EnumerationResult:
    """All explanations of a formula, projected onto original variables.

    ``bits`` holds one row per explanation, columns ordered like the
    formula's projection, rows in ascending integer order (variable with the
    smallest index is the least significant bit).
    """

    bits: np.ndarray

    @property
    def count(self) -> int:
        return self.bits.shape[0]

    @cached_property
    def tuple_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(tuple(int(b) for b in row) for row in self.bits)

    def as_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(b) for b in row) for row in self.bits]


def _assignment_block(start: int, stop: int, k: int) -> np.ndarray:
    """Rows start..stop-1 of the 2^k assignment table, as uint8 bits."""
    idx = np.arange(start, stop, dtype=np.uint64)
    bits = np.empty((stop - start, k), dtype=np.uint8)
    for j in range(k):
        bits[:, j] = (idx >> np.uint64(j)) & np.uint64(1)
    return bits


def _clause_mask(formula: CnfFormula, bits: np.ndarray, var_to_col: dict[int, int]) -> np.ndarray:
    """Boolean satisfied-mask per row, all variables present as columns."""
    ok = np.ones(bits.shape[0], dtype=bool)
    for clause in formula.clauses:
        clause_true = np.zeros(bits.shape[0], dtype=bool)
        for lit in clause:
            col = var_to_col[abs(lit)]
            if lit > 0:
                clause_true |= bits[:, col] == 1
            else:
                clause_true |= bits[:, col] == 0
        ok &= clause_true
    return ok


def _batch_propagate(formula: CnfFormula, base: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized unit propagation over a batch of partial assignments.

    ``base`` is (B, var_count) int8 with -1 for unassigned.  Returns the
    propagated values and an alive mask (False where a conflict was derived).
    """
    vals = base.copy()
    alive = np.ones(vals.shape[0], dtype=bool)
    changed = True
    while changed:
        changed = False
        for clause in formula.clauses:
            lit_vals = np.empty((len(clause), vals.shape[0]), dtype=np.int8)
            for j, lit in enumerate(clause):
                col = vals[:, abs(lit) - 1]
                if lit > 0:
                    lit_vals[j] = col
                else:
                    lit_vals[j] = np.where(col == -1, -1, 1 - col)
            clause_true = (lit_vals == 1).any(axis=0)
            unknown = lit_vals == -1
            n_unknown = unknown.sum(axis=0)
            open_rows = alive & ~clause_true
            conflict = open_rows & (n_unknown == 0)
            if conflict.any():
                alive[conflict] = False
            unit = open_rows & (n_unknown == 1)
            if unit.any():
                first_unknown = unknown.argmax(axis=0)
                for j, lit in enumerate(clause):
                    rows = unit & (first_unknown == j)
                    if rows.any():
                        vals[rows, abs(lit) - 1] = 1 if lit > 0 else 0
                        changed = True
    return vals, alive


def enumerate_explanations(formula: CnfFormula) -> EnumerationResult:
    """Exact projected model enumeration; guarded to small instances.

    Without auxiliaries this walks the 2^n assignment table in chunks with
    bit arithmetic.  With auxiliaries it fixes each original assignment and
    completes the auxiliaries by batch unit propagation (search fallback for
    the rare non-forced case).
    """
    proj = formula.projection
    k = len(proj)
    if k > ENUMERATION_GUARD:
        raise OracleGuardError(f"{k} original variables exceeds guard {ENUMERATION_GUARD}")
    if not formula.has_auxiliary:
        var_to_col = {v: j for j, v in enumerate(proj)}
        rows = []
        for start in range(0, 1 << k, _CHUNK):
            stop = min(start + _CHUNK, 1 << k)
            bits = _assignment_block(start, stop, k)
            ok = _clause_mask(formula, bits, var_to_col)
            rows.append(bits[ok])
        return EnumerationResult(np.concatenate(rows) if rows else np.zeros((0, k), np.uint8))

    total = 1 << k
    base = np.full((total, formula.var_count), -1, dtype=np.int8)
    bits = _assignment_block(0, total, k)
    for j, var in enumerate(proj):
        base[:, var - 1] = bits[:, j]
    vals, alive = _batch_propagate(formula, base)
    complete = ~(vals == -1).any(axis=1)
    model = np.zeros(total, dtype=bool)
    done = alive & complete
    if done.any():
        var_to_col = {v: v - 1 for v in range(1, formula.var_count + 1)}
        model[done] = _clause_mask(formula, vals[done].astype(np.uint8), var_to_col)
    stalled = np.flatnonzero(alive & ~complete)
    for row in stalled:
        mu = Assignment([None if v == -1 else int(v) for v in vals[row]])
        model[row] = _exists_completion(formula, mu)
    return EnumerationResult(bits[model])


def _weights_for_rows(bits: np.ndarray, output) -> np.ndarray:
    """Probability of each row under a PerceptionOutput; invalid group
    selections get weight 0."""
    w = np.ones(bits.shape[0], dtype=np.float64)
    grouped = np.zeros(bits.shape[1], dtype=bool)
    for group in output.groups:
        pos = np.asarray(group.positions)
        grouped[pos] = True
        sel = bits[:, pos]
        valid = sel.sum(axis=1) == 1
        cat = sel.argmax(axis=1)
        w *= np.where(valid, group.probs[cat], 0.0)
    p = np.asarray(output.bernoulli, dtype=np.float64)
    for j in range(bits.shape[1]):
        if grouped[j]:
            continue
        w *= np.where(bits[:, j] == 1, p[j], 1.0 - p[j])
    return w


def exact_wmc(formula: CnfFormula, output) -> float:
    """Sum over all projected models of the per-variable weight product."""
    proj = formula.projection
    k = len(proj)
    if k > ENUMERATION_GUARD:
        raise OracleGuardError(f"{k} original variables exceeds guard {ENUMERATION_GUARD}")
    if len(output.bernoulli) != k:
        raise ValueError("output length does not match original variable count")
    if not formula.has_auxiliary:
        var_to_col = {v: j for j, v in enumerate(proj)}
        total = 0.0
        for start in range(0, 1 << k, _CHUNK):
            stop = min(start + _CHUNK, 1 << k)
            bits = _assignment_block(start, stop, k)
            ok = _clause_mask(formula, bits, var_to_col)
            if ok.any():
                total += float(_weights_for_rows(bits[ok], output).sum())
        return total
    result = enumerate_explanations(formula)
    if result.count == 0:
        return 0.0
    return float(_weights_for_rows(result.bits, output).sum())


def exact_nll(dataset, model) -> float:
    """Exact negative log-likelihood of (x, formula) pairs under a model."""
    total = 0.0
    for index, (x, formula) in enumerate(dataset):
        w = exact_wmc(formula, model.forward(x))
        if w <= 0.0:
            warnings.warn(f"item {index} has zero probability; returning inf")
            return math.inf
        total -= math.log(w)
    return total


def _kl_of(q: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """KL(q | p) rows for a batch of weight vectors against fixed log-probs."""
    with np.errstate(divide="ignore", invalid="ignore"):
        qlogq = np.where(q > 0.0, q * np.log(q), 0.0)
    return (qlogq - q * logp).sum(axis=-1)


def _simplex_lattice(k: int, steps: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integer compositions of ``steps`` into k parts within [lo, hi] bounds."""
    out: list[tuple[int, ...]] = []
    part: list[int] = []

    def rec(i: int, remaining: int) -> None:
        if i == k - 1:
            if lo[i] <= remaining <= hi[i]:
                out.append(tuple(part) + (remaining,))
            return
        tail_lo = int(lo[i + 1 :].sum())
        tail_hi = int(hi[i + 1 :].sum())
        lo_i = max(int(lo[i]), remaining - tail_hi)
        hi_i = min(int(hi[i]), remaining - tail_lo)
        for v in range(lo_i, hi_i + 1):
            part.append(v)
            rec(i + 1, remaining - v)
            part.pop()

    rec(0, steps)
    return np.array(out, dtype=np.int64).reshape(len(out), k)


def kl_grid_minimizer(psi, output, resolution: float = 1e-3) -> tuple[np.ndarray, float]:
    """Search the weight simplex for the KL-minimizing reweighing.

    Grid mode refines a simplex lattice around the running best point down to
    the requested resolution; KL(q | p) is convex in q, so the refinement is
    globally sound.  For more than 4 members a seeded Dirichlet random search
    with shrinking concentration is used instead.
    """
    from cnflearn.agree import member_log_probs

    logp = member_log_probs(output, psi.members)
    k = len(logp)
    if k == 0:
        raise ValueError("empty explanation set")
    if k == 1:
        return np.array([1.0]), float(-logp[0])

    if k <= 4:
        steps = 16
        lo = np.zeros(k, dtype=np.int64)
        hi = np.full(k, steps, dtype=np.int64)
        best_q = None
        best_kl = math.inf
        while True:
            lattice = _simplex_lattice(k, steps, lo, hi)
            q = lattice / steps
            kl = _kl_of(q, logp)
            i = int(np.argmin(kl))
            if kl[i] < best_kl:
                best_kl = float(kl[i])
                best_q = q[i]
            if 1.0 / steps <= resolution:
                break
            center = lattice[i] * 4
            steps *= 4
            lo = np.maximum(center - 8, 0)
            hi = np.minimum(center + 8, steps)
        return best_q, best_kl

    rng = np.random.default_rng(0)
    center = np.full(k, 1.0 / k)
    best_q = center
    best_kl = float(_kl_of(center[None, :], logp)[0])
    concentration = 1.0
    for _ in range(40):
        q = rng.dirichlet(center * k * concentration + 1e-3, size=2000)
        kl = _kl_of(q, logp)
        i = int(np.argmin(kl))
        if kl[i] < best_kl:
            best_kl = float(kl[i])
            best_q = q[i]
            center = q[i]
        concentration *= 1.5
    return best_q, best_kl


def finite_diff(model, x, psi, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the surrogate loss in model parameters."""
    from cnflearn.agree import surrogate_objective

    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step outside [1e-7, 1e-3]")
    params = model.get_params().copy()
    grad = np.zeros_like(params)
    for i in range(params.size):
        for sign in (+1.0, -1.0):
            p = params.copy()
            p[i] += sign * step
            model.set_params(p)
            loss = surrogate_objective(psi, model.forward(x))
            if not math.isfinite(loss):
                model.set_params(params)
                raise ValueError(f"non-finite loss at parameter {i}")
            grad[i] += sign * loss
    model.set_params(params)
    return grad / (2.0 * step)
