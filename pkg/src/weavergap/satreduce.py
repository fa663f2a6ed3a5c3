"""E3-SAT to 2-2 set splitting, through not-all-equal intermediate forms.

The chain is: E3-SAT -> NAE-E4-SAT (one fresh z per clause, copies tied
together by inequality gadgets laid out along a 4-regular circulant) ->
NAE-E3-SAT (clause splitting) -> negation-free NAE-E3 (partner variables)
-> 2-2 set splitting (one balancing variable per clause), followed by the
occurrence normalization from the setsplit module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import setsplit
from .weaver import CapExceeded, as_signs

MIN_EXPANDER_VERTICES = 5


class DimacsError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class CnfFormula:
    n_vars: int
    clauses: tuple  # tuples of signed 1-based literals

    def __post_init__(self):
        norm = []
        for i, cl in enumerate(self.clauses):
            t = tuple(int(l) for l in cl)
            if any(l == 0 or abs(l) > self.n_vars for l in t):
                raise ValueError(f"clause {i + 1} has out-of-range literals: {t}")
            norm.append(t)
        object.__setattr__(self, "clauses", tuple(norm))

    @property
    def n_clauses(self):
        return len(self.clauses)

    def e3_problems(self):
        problems = []
        for i, cl in enumerate(self.clauses):
            if len(cl) != 3:
                problems.append(f"clause {i + 1} has {len(cl)} literals")
            elif len({abs(l) for l in cl}) != 3:
                problems.append(f"clause {i + 1} repeats a variable")
        return problems

    @property
    def is_e3(self):
        return not self.e3_problems()


@dataclass(frozen=True)
class DimacsResult:
    formula: CnfFormula
    e3_valid: bool
    problems: tuple


def parse_dimacs(text):
    """Parse DIMACS CNF; E3 violations are flagged, not fatal."""
    n_vars = None
    n_clauses = None
    literals = []
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError("malformed problem line", lineno)
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError("non-integer header counts", lineno) from None
            if n_vars < 0 or n_clauses < 0:
                raise DimacsError("negative header counts", lineno)
            continue
        if n_vars is None:
            raise DimacsError("clause data before problem line", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                clauses.append(tuple(literals))
                literals = []
            else:
                if abs(lit) > n_vars:
                    raise DimacsError(f"literal {lit} out of range", lineno)
                literals.append(lit)
    if n_vars is None:
        raise DimacsError("missing problem line")
    if literals:
        clauses.append(tuple(literals))
    formula = CnfFormula(n_vars=max(n_vars, 1), clauses=tuple(clauses))
    problems = tuple(formula.e3_problems())
    return DimacsResult(formula=formula, e3_valid=not problems, problems=problems)


def to_dimacs(formula, comment=None):
    lines = []
    if comment:
        lines.append(f"c {comment}")
    lines.append(f"p cnf {formula.n_vars} {formula.n_clauses}")
    for cl in formula.clauses:
        lines.append(" ".join(str(l) for l in cl) + " 0")
    return "\n".join(lines) + "\n"


def cnf_satisfied_count(formula, values):
    x = as_signs(values, formula.n_vars)
    count = 0
    for cl in formula.clauses:
        if any(int(x[abs(l) - 1]) * (1 if l > 0 else -1) == 1 for l in cl):
            count += 1
    return count


def cnf_brute_force(formula, cap=24):
    """Smallest satisfying assignment of a CNF formula, or None."""
    n = formula.n_vars
    if n > cap:
        raise CapExceeded(f"{n} variables exceeds the CNF brute-force cap of {cap}")
    for code in range(1 << n):
        x = np.array([1 if (code >> (n - v)) & 1 else -1 for v in range(1, n + 1)], dtype=np.int8)
        if cnf_satisfied_count(formula, x) == formula.n_clauses:
            return x
    return None


# ---------------------------------------------------------------------------
# NAE formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NaeFormula:
    """Clauses satisfied when their literal values are not all equal."""

    n_vars: int
    clauses: tuple
    arity: int  # 3, or 4 for the mixed stage holding 4-clauses plus gadget 3-clauses

    def __post_init__(self):
        if self.arity not in (3, 4):
            raise ValueError("arity must be 3 or 4")
        for i, cl in enumerate(self.clauses):
            width = len(cl)
            if width not in (3, self.arity):
                raise ValueError(f"clause {i + 1} has width {width}, arity {self.arity}")
            if len({abs(l) for l in cl}) != width:
                raise ValueError(f"clause {i + 1} repeats a variable")
            if any(l == 0 or abs(l) > self.n_vars for l in cl):
                raise ValueError(f"clause {i + 1} has out-of-range literals")

    @property
    def n_clauses(self):
        return len(self.clauses)

    @property
    def all_positive(self):
        return all(l > 0 for cl in self.clauses for l in cl)


def nae_satisfied_count(formula, values):
    x = as_signs(values, formula.n_vars)
    count = 0
    for cl in formula.clauses:
        vals = {int(x[abs(l) - 1]) * (1 if l > 0 else -1) for l in cl}
        if len(vals) > 1:
            count += 1
    return count


def nae_brute_force(formula, cap=24):
    n = formula.n_vars
    if n > cap:
        raise CapExceeded(f"{n} variables exceeds the NAE brute-force cap of {cap}")
    for code in range(1 << n):
        x = np.array([1 if (code >> (n - v)) & 1 else -1 for v in range(1, n + 1)], dtype=np.int8)
        if nae_satisfied_count(formula, x) == formula.n_clauses:
            return x
    return None


# ---------------------------------------------------------------------------
# Expander substitute
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpanderGraph:
    n_vertices: int
    degree: int
    offsets: tuple
    edges: tuple  # unordered pairs of 0-based vertices
    second_eigenvalue_modulus: float

    def to_json(self):
        return {
            "n_vertices": self.n_vertices,
            "degree": self.degree,
            "offsets": list(self.offsets),
            "edges": [list(e) for e in self.edges],
            "second_eigenvalue_modulus": self.second_eigenvalue_modulus,
        }


def circulant_skip(n):
    """Second offset for the circulant: near sqrt(n), avoiding degeneracies."""
    s = max(2, round(math.sqrt(n)))
    while s % n in (1, n - 1) or (2 * s) % n == 0:
        s += 1
    return s


def expander_graph(n):
    """Deterministic 4-regular circulant stand-in for a Ramanujan graph.

    Offsets {1, s} with s near sqrt(n); offset 1 keeps the graph connected.
    The second adjacency eigenvalue modulus is computed from the circulant
    spectrum and recorded, not assumed.
    """
    if n < MIN_EXPANDER_VERTICES:
        raise ValueError(f"need at least {MIN_EXPANDER_VERTICES} vertices, got {n}")
    s = circulant_skip(n)
    edges = set()
    for v in range(n):
        for off in (1, s):
            edges.add(tuple(sorted((v, (v + off) % n))))
    j = np.arange(1, n)
    spectrum = 2 * np.cos(2 * np.pi * j / n) + 2 * np.cos(2 * np.pi * j * s / n)
    return ExpanderGraph(
        n_vertices=n,
        degree=4,
        offsets=(1, s),
        edges=tuple(sorted(edges)),
        second_eigenvalue_modulus=float(np.max(np.abs(spectrum))),
    )


# ---------------------------------------------------------------------------
# Reduction stages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NegationGadget:
    """Four all-positive NAE-3 clauses forcing x != y."""

    x: int
    y: int
    aux: tuple  # (a, b, c)
    clauses: tuple


def negation_gadget(x, y, fresh_start):
    if x == y:
        raise ValueError("negation gadget needs two distinct variables")
    a, b, c = fresh_start, fresh_start + 1, fresh_start + 2
    clauses = ((x, y, a), (x, y, b), (x, y, c), (a, b, c))
    return NegationGadget(x=x, y=y, aux=(a, b, c), clauses=clauses)


@dataclass(frozen=True)
class Nae4Meta:
    copies_per_clause: bool
    z_vars: tuple
    w_vars: tuple
    gadgets: tuple  # NegationGadget per inequality constraint
    expander: ExpanderGraph | None


def e3sat_to_nae4(formula, copies_per_clause=False):
    """Append z to every clause; optionally one z per clause tied by gadgets.

    With copies, clause j receives z_j and each expander edge (i, j) is
    realized as z_i != w and w != z_j through a fresh w, each inequality
    compiled to the four-clause all-positive gadget.
    """
    problems = formula.e3_problems()
    if problems:
        raise ValueError("input must be E3-valid: " + "; ".join(problems))
    m = formula.n_clauses
    if m == 0:
        return (
            NaeFormula(n_vars=formula.n_vars, clauses=(), arity=4),
            Nae4Meta(copies_per_clause, (), (), (), None),
        )
    if not copies_per_clause:
        z = formula.n_vars + 1
        clauses = tuple(cl + (z,) for cl in formula.clauses)
        return (
            NaeFormula(n_vars=z, clauses=clauses, arity=4),
            Nae4Meta(False, (z,), (), (), None),
        )
    n_z = max(m, MIN_EXPANDER_VERTICES)
    z_vars = tuple(formula.n_vars + 1 + t for t in range(n_z))
    graph = expander_graph(n_z)
    next_fresh = formula.n_vars + n_z + 1
    clauses = [cl + (z_vars[j],) for j, cl in enumerate(formula.clauses)]
    w_vars = []
    gadgets = []
    for u, v in graph.edges:
        w = next_fresh
        next_fresh += 1
        w_vars.append(w)
        for x, y in ((z_vars[u], w), (w, z_vars[v])):
            g = negation_gadget(x, y, next_fresh)
            next_fresh += 3
            gadgets.append(g)
            clauses.extend(g.clauses)
    return (
        NaeFormula(n_vars=next_fresh - 1, clauses=tuple(clauses), arity=4),
        Nae4Meta(True, z_vars, tuple(w_vars), tuple(gadgets), graph),
    )


@dataclass(frozen=True)
class SplitMeta:
    # (clause index in the arity-4 formula, its four literals, fresh y)
    splits: tuple


def nae4_to_nae3(formula):
    """Split every 4-clause (t1,t2,t3,t4) into (t1,t2,y) and (-y,t3,t4)."""
    next_fresh = formula.n_vars + 1
    clauses = []
    splits = []
    for j, cl in enumerate(formula.clauses):
        if len(cl) == 3:
            clauses.append(cl)
            continue
        y = next_fresh
        next_fresh += 1
        splits.append((j, cl, y))
        clauses.append((cl[0], cl[1], y))
        clauses.append((-y, cl[2], cl[3]))
    return (
        NaeFormula(n_vars=next_fresh - 1, clauses=tuple(clauses), arity=3),
        SplitMeta(splits=tuple(splits)),
    )


@dataclass(frozen=True)
class NegationMeta:
    partner: dict  # var -> partner variable holding its negation
    gadgets: tuple


def eliminate_negations(formula):
    """Make every literal positive by introducing negation partners.

    Each variable appearing negated anywhere gets one partner, tied to it
    by a single negation gadget; negative literals become the partner.
    """
    if formula.arity != 3:
        raise ValueError("negation elimination expects an arity-3 formula")
    negated = sorted({-l for cl in formula.clauses for l in cl if l < 0})
    next_fresh = formula.n_vars + 1
    partner = {}
    gadgets = []
    extra = []
    for v in negated:
        partner[v] = next_fresh
        next_fresh += 1
    for v in negated:
        g = negation_gadget(v, partner[v], next_fresh)
        next_fresh += 3
        gadgets.append(g)
        extra.extend(g.clauses)
    clauses = tuple(
        tuple(l if l > 0 else partner[-l] for l in cl) for cl in formula.clauses
    ) + tuple(extra)
    return (
        NaeFormula(n_vars=next_fresh - 1, clauses=clauses, arity=3),
        NegationMeta(partner=partner, gadgets=tuple(gadgets)),
    )


def nae3_to_setsplit(formula):
    """Clause {u,v,w} becomes the set {u,v,w,s} with a fresh balancing s."""
    if formula.arity != 3 or not formula.all_positive:
        raise ValueError("set-splitting conversion expects positive NAE-3")
    n = formula.n_vars
    balance = tuple(n + 1 + j for j in range(formula.n_clauses))
    sets = tuple(cl + (balance[j],) for j, cl in enumerate(formula.clauses))
    inst = setsplit.SetSplitInstance(n_vars=n + formula.n_clauses, sets=sets)
    return inst, balance


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    source: CnfFormula
    instance: setsplit.SetSplitInstance  # final (3,2-2) instance
    nae4: NaeFormula
    nae4_meta: Nae4Meta
    nae3: NaeFormula
    split_meta: SplitMeta
    positive: NaeFormula
    negation_meta: NegationMeta
    presplit: setsplit.SetSplitInstance  # before occurrence normalization
    balance_vars: tuple
    copy_map: setsplit.CopyMap

    def map_assignment(self, values):
        """Map a satisfying assignment of the source formula forward.

        The result satisfies the final instance whenever the input
        satisfies the E3 formula.
        """
        x0 = as_signs(values, self.source.n_vars)
        x = np.zeros(self.nae4.n_vars, dtype=np.int8)
        x[: self.source.n_vars] = x0
        for z in self.nae4_meta.z_vars:
            x[z - 1] = -1  # the appended variable is false
        for w in self.nae4_meta.w_vars:
            x[w - 1] = 1
        for g in self.nae4_meta.gadgets:
            a, b, c = g.aux
            x[a - 1], x[b - 1], x[c - 1] = 1, 1, -1
        lit = lambda l, arr: int(arr[abs(l) - 1]) * (1 if l > 0 else -1)
        x3 = np.zeros(self.nae3.n_vars, dtype=np.int8)
        x3[: self.nae4.n_vars] = x
        for _, cl, y in self.split_meta.splits:
            t = [lit(l, x3) for l in cl]
            if t[2] == t[3]:
                x3[y - 1] = t[2]  # -y differs from t3 = t4
            elif t[0] == t[1]:
                x3[y - 1] = -t[0]
            else:
                x3[y - 1] = 1
        xp = np.zeros(self.positive.n_vars, dtype=np.int8)
        xp[: self.nae3.n_vars] = x3
        for v, vbar in self.negation_meta.partner.items():
            xp[vbar - 1] = -xp[v - 1]
        for g in self.negation_meta.gadgets:
            a, b, c = g.aux
            xp[a - 1], xp[b - 1], xp[c - 1] = 1, 1, -1
        xs = np.zeros(self.presplit.n_vars, dtype=np.int8)
        xs[: self.positive.n_vars] = xp
        for j, cl in enumerate(self.positive.clauses):
            total = sum(int(xp[v - 1]) for v in cl)
            xs[self.balance_vars[j] - 1] = -total if abs(total) == 1 else 1
        xs[xs == 0] = -1
        return self.copy_map.extend_assignment(xs)

    def trace_json(self):
        return {
            "source": {"n_vars": self.source.n_vars, "clauses": [list(c) for c in self.source.clauses]},
            "nae4": {
                "n_vars": self.nae4.n_vars,
                "z_vars": list(self.nae4_meta.z_vars),
                "w_vars": list(self.nae4_meta.w_vars),
                "gadget_aux": [list(g.aux) for g in self.nae4_meta.gadgets],
                "expander": self.nae4_meta.expander.to_json() if self.nae4_meta.expander else None,
            },
            "nae3": {
                "n_vars": self.nae3.n_vars,
                "split_y": [[j, list(cl), y] for j, cl, y in self.split_meta.splits],
            },
            "positive": {
                "n_vars": self.positive.n_vars,
                "partner": {str(k): v for k, v in self.negation_meta.partner.items()},
                "gadget_aux": [list(g.aux) for g in self.negation_meta.gadgets],
            },
            "setsplit": {
                "n_vars": self.presplit.n_vars,
                "balance_vars": list(self.balance_vars),
            },
            "normalized": self.copy_map.to_json(),
        }

    def save_trace(self, path):
        with open(path, "w") as fh:
            json.dump(self.trace_json(), fh)


def full_pipeline(formula, copies_per_clause=True):
    """Compose the whole reduction down to a (3,2-2) instance with a trace.

    The default ties one z-copy per clause together along the circulant
    (the unsatisfiability-amplifying form); ``copies_per_clause=False``
    uses a single shared z, which still preserves satisfiability exactly
    and keeps the output small.
    """
    nae4, meta4 = e3sat_to_nae4(formula, copies_per_clause=copies_per_clause)
    nae3, split_meta = nae4_to_nae3(nae4)
    positive, neg_meta = eliminate_negations(nae3)
    if formula.n_clauses == 0:
        inst = setsplit.SetSplitInstance(n_vars=max(formula.n_vars, 1), sets=())
        cmap = setsplit.CopyMap(
            n_vars_in=inst.n_vars, n_vars_out=inst.n_vars,
            copies={v: (v,) for v in range(1, inst.n_vars + 1)}, gadgets={},
        )
        return PipelineResult(
            source=formula, instance=inst, nae4=nae4, nae4_meta=meta4,
            nae3=nae3, split_meta=split_meta, positive=positive,
            negation_meta=neg_meta, presplit=inst, balance_vars=(),
            copy_map=cmap,
        )
    presplit, balance = nae3_to_setsplit(positive)
    final, cmap = setsplit.to_three_occurrence(presplit)
    return PipelineResult(
        source=formula,
        instance=final,
        nae4=nae4,
        nae4_meta=meta4,
        nae3=nae3,
        split_meta=split_meta,
        positive=positive,
        negation_meta=neg_meta,
        presplit=presplit,
        balance_vars=balance,
        copy_map=cmap,
    )
