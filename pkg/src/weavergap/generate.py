"""Seeded random instance and formula generators for fuzzing and corpora."""

from __future__ import annotations

import itertools

import numpy as np

from .satreduce import CnfFormula
from .setsplit import SetSplitInstance, brute_force_satisfiable


def random_322_instance(n_vars, n_sets, seed=0, planted=None, max_tries=20000):
    """Random (3,2-2) instance: occurrences <= 3, pairwise intersections <= 1.

    With ``planted`` given (a +-1 assignment), only sets balanced under it
    are accepted, so the instance is satisfiable by construction.
    """
    if n_vars < 4:
        raise ValueError("need at least 4 variables")
    rng = np.random.default_rng(seed)
    if planted is not None and len(planted) != n_vars:
        raise ValueError("planted assignment length must equal n_vars")
    occ = np.zeros(n_vars + 1, dtype=int)
    seen_pairs = set()
    sets = []
    tries = 0
    while len(sets) < n_sets:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(
                f"could not place {n_sets} sets after {max_tries} tries; "
                "lower n_sets or raise n_vars"
            )
        cand = tuple(sorted(rng.choice(np.arange(1, n_vars + 1), size=4, replace=False)))
        if any(occ[v] >= 3 for v in cand):
            continue
        pairs = set(itertools.combinations(cand, 2))
        if pairs & seen_pairs:
            continue
        if planted is not None and sum(int(planted[v - 1]) for v in cand) != 0:
            continue
        sets.append(cand)
        seen_pairs |= pairs
        for v in cand:
            occ[v] += 1
    return SetSplitInstance(n_vars=n_vars, sets=tuple(sets))


def random_planted_322(n_vars, n_sets, seed=0):
    """Satisfiable-by-construction instance plus its planted witness.

    The hidden assignment is a shuffled half-and-half sign split, so
    balanced 4-sets remain plentiful under the occurrence and
    intersection constraints.
    """
    rng = np.random.default_rng(seed)
    planted = np.array([1, -1] * (n_vars // 2) + [1] * (n_vars % 2), dtype=np.int8)
    rng.shuffle(planted)
    inst = random_322_instance(n_vars, n_sets, seed=seed + 1, planted=planted)
    return inst, planted


def search_unsat_322(n_vars, n_sets, seed=0, attempts=200, cap=30):
    """First seeded random (3,2-2) instance that brute-forces unsatisfiable."""
    for t in range(attempts):
        try:
            inst = random_322_instance(n_vars, n_sets, seed=seed + 1000 * t)
        except RuntimeError:
            continue
        if brute_force_satisfiable(inst, cap=cap) is None:
            return inst, t
    return None, attempts


def random_e3_formula(n_vars, n_clauses, seed=0, unsat_core=False):
    """Random E3 formula; optionally start from an unsatisfiable 8-clause core."""
    if n_vars < 3:
        raise ValueError("need at least 3 variables")
    rng = np.random.default_rng(seed)
    clauses = []
    if unsat_core:
        core_vars = sorted(rng.choice(np.arange(1, n_vars + 1), size=3, replace=False))
        for signs in itertools.product((1, -1), repeat=3):
            clauses.append(tuple(int(s * v) for s, v in zip(signs, core_vars)))
    while len(clauses) < n_clauses:
        cand = sorted(rng.choice(np.arange(1, n_vars + 1), size=3, replace=False))
        signs = 2 * rng.integers(0, 2, size=3) - 1
        clauses.append(tuple(int(s * v) for s, v in zip(signs, cand)))
    return CnfFormula(n_vars=n_vars, clauses=tuple(clauses))
