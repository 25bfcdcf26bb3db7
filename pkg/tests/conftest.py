import numpy as np
import pytest

from cnflearn.formula import CnfFormula


def brake_formula() -> CnfFormula:
    """Running 4-variable example: v1 or v2 or (not v3 and v4), as CNF."""
    return CnfFormula(4, ((1, 2, -3), (1, 2, 4)), frozenset({1, 2, 3, 4}))


# the 3 assignments falsifying the brake formula, bits ordered v1..v4
BRAKE_NON_MODELS = {(0, 0, 0, 0), (0, 0, 1, 0), (0, 0, 1, 1)}
BRAKE_MODELS = {
    bits
    for bits in (tuple((i >> j) & 1 for j in range(4)) for i in range(16))
    if bits not in BRAKE_NON_MODELS
}


@pytest.fixture
def brake():
    return brake_formula()


def random_formula(rng: np.random.Generator, n: int, m: int, k: int = 3) -> CnfFormula:
    """Random k-CNF without duplicate clauses or tautologies."""
    clauses: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    attempts = 0
    while len(clauses) < m and attempts < 200 * m:
        attempts += 1
        size = min(k, n)
        vars_ = rng.choice(np.arange(1, n + 1), size=size, replace=False)
        clause = tuple(sorted(int(v) if rng.random() < 0.5 else -int(v) for v in vars_))
        if clause in seen:
            continue
        seen.add(clause)
        clauses.append(clause)
    return CnfFormula(n, tuple(clauses), frozenset(range(1, n + 1)))


def random_satisfiable(rng: np.random.Generator, n: int, m: int, k: int = 3) -> CnfFormula:
    """Random k-CNF with a planted model (at least one agreeing literal per clause)."""
    planted = rng.integers(0, 2, size=n)
    clauses: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    attempts = 0
    while len(clauses) < m and attempts < 200 * m:
        attempts += 1
        size = min(k, n)
        vars_ = rng.choice(np.arange(1, n + 1), size=size, replace=False)
        signs = rng.random(size) < 0.5
        lits = [int(v) if s else -int(v) for v, s in zip(vars_, signs)]
        if not any((l > 0) == bool(planted[abs(l) - 1]) for l in lits):
            flip = int(rng.integers(0, size))
            lits[flip] = int(vars_[flip]) if planted[vars_[flip] - 1] else -int(vars_[flip])
        clause = tuple(sorted(lits))
        if clause in seen:
            continue
        seen.add(clause)
        clauses.append(clause)
    return CnfFormula(n, tuple(clauses), frozenset(range(1, n + 1)))
