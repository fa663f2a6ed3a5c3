"""Two-stage reduction from (3,2-2) set splitting to 1/(2k)-Weaver lists.

Stage 1 mirrors the quarter reduction with a four-vector orthonormal
frame, padding every variable's support to size 4; it guarantees that for
unsatisfiable sources a constant fraction of the diagonals of any signed
sum is at least 1/50 in magnitude.  Stage 2 partitions coordinates into
at most 22 classes by greedy coloring of the co-support conflict graph,
pads each class to a multiple of C(k,2), and compresses each group of
C(k,2) coordinates through the projection block G built from the signed
incidence matrix of the complete graph on k vertices.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import setsplit
from .quarter import QuarterTrace, _build_reduction
from .weaver import (
    CapExceeded,
    FLOAT_TOL,
    WeaverInstance,
    as_signs,
    exact_w,
    heuristic_w,
    operator_norm,
    signed_sum,
)

MAX_CLASSES = 22
DIAG_THRESHOLD = Fraction(1, 50)

# Four orthonormal vectors whose squared entries in every coordinate form
# the multiset {1, 4, 4, 16}/25; any nonconstant signed combination of
# those numbers stays an odd multiple of 1/25, which is what keeps the pad
# diagonals away from zero.
Q4_EXACT = (
    (Fraction(1, 5), Fraction(4, 5), Fraction(-2, 5), Fraction(-2, 5)),
    (Fraction(4, 5), Fraction(1, 5), Fraction(2, 5), Fraction(2, 5)),
    (Fraction(-2, 5), Fraction(2, 5), Fraction(-1, 5), Fraction(4, 5)),
    (Fraction(-2, 5), Fraction(2, 5), Fraction(4, 5), Fraction(-1, 5)),
)


def q4_frame():
    return np.array(Q4_EXACT, dtype=float)


def q4_frame_exact():
    return Q4_EXACT


@dataclass(frozen=True)
class Stage1Trace(QuarterTrace):
    pass


def reduce_stage1(inst):
    """Build the stage-1 1/4-Weaver instance over the four-vector frame.

    A variable occurring in j sets gets 4 - j pad coordinates, so every
    support has size exactly 4 and every pad exists (occurrences are at
    most 3).  Pads carry three elementary vectors of norm 1/2 each.
    """
    weaver_inst, var_records, pad_records = _build_reduction(
        inst,
        Q4_EXACT,
        pads_for=lambda occ: 4 - occ,
        r_copies=3,
    )
    trace = Stage1Trace(
        n_sets=inst.n_sets,
        dim=weaver_inst.dim,
        var_records=tuple(var_records),
        pad_records=tuple(pad_records),
    )
    return weaver_inst, trace


def witness_signing_stage1(trace, values):
    """Signing from a source assignment; zero matrix when it satisfies."""
    from .quarter import witness_signing_quarter

    return witness_signing_quarter(trace, values)


# ---------------------------------------------------------------------------
# Pad-diagonal lower bound (exhaustive)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PadDiagonalReport:
    case_count: int
    min_value: float
    min_value_exact: str
    witness: tuple  # (z, w, coordinate)
    passed: bool

    def to_json(self):
        return {
            "case_count": self.case_count,
            "min_value": self.min_value,
            "min_value_exact": self.min_value_exact,
            "witness": [list(self.witness[0]), list(self.witness[1]), self.witness[2]],
            "passed": self.passed,
        }


def verify_pad_diagonal_bound():
    """Enumerate all 448 pad-diagonal cases in exact rational arithmetic.

    Cases: the 14 nonconstant sign quadruples z, all 8 sign triples w, and
    each of the 4 coordinates; the quantity is the pad diagonal entry
    | sum_i z(i) q_i(j)^2 / 4 + sum_h w(h) / 4 |, and its exact minimum
    must be 1/50.
    """
    count = 0
    best = None
    witness = None
    for z in itertools.product((1, -1), repeat=4):
        if len(set(z)) == 1:
            continue
        for w in itertools.product((1, -1), repeat=3):
            for j in range(4):
                val = abs(
                    sum(Fraction(z[i], 4) * Q4_EXACT[i][j] ** 2 for i in range(4))
                    + sum(Fraction(wh, 4) for wh in w)
                )
                count += 1
                if best is None or val < best:
                    best = val
                    witness = (z, w, j + 1)
    return PadDiagonalReport(
        case_count=count,
        min_value=float(best),
        min_value_exact=str(best),
        witness=witness,
        passed=(count == 448 and best == DIAG_THRESHOLD),
    )


@dataclass(frozen=True)
class DiagFractionReport:
    gamma: float
    min_unsat_sets: int
    mechanism_min_entry: float
    mechanism_cases: int
    sampled_min_count: int
    sampled_min_fraction: float
    proof_bound_count: float  # (gamma/3) * m, the proof-level count bound
    statement_fraction_bound: float  # gamma/12, against the full dimension
    signings_checked: int
    passed: bool

    def to_json(self):
        return {
            "gamma": self.gamma,
            "min_unsat_sets": self.min_unsat_sets,
            "mechanism_min_entry": self.mechanism_min_entry,
            "mechanism_cases": self.mechanism_cases,
            "sampled_min_count": self.sampled_min_count,
            "sampled_min_fraction": self.sampled_min_fraction,
            "proof_bound_count": self.proof_bound_count,
            "statement_fraction_bound": self.statement_fraction_bound,
            "signings_checked": self.signings_checked,
            "passed": self.passed,
        }


def verify_diag_fraction(source, inst, trace, samples=500, seed=0, brute_cap=30):
    """Measure the fraction of large diagonals against the proof bound.

    The per-pad mechanism is exhaustive: a pad diagonal depends only on
    its owner's four frame signs and its own three elementary signs, so
    enumerating those 128 combinations per pad covers every signing of the
    whole instance.  The global fraction is then measured over sampled and
    structured signings and compared with the proof-level count bound
    (gamma/3) * m, where gamma is brute-forced exactly.
    """
    min_unsat, gamma, worst_x = setsplit.unsat_gamma(source, cap=brute_cap)
    delta = float(DIAG_THRESHOLD)
    pad_owner = {p.coord: p for p in trace.pad_records}
    mech_min = np.inf
    mech_cases = 0
    for rec in trace.var_records:
        if not rec.support:
            continue
        for coord in rec.pad_coords:
            pad = pad_owner[coord]
            qsq = inst.vectors[list(rec.vec_positions)][:, coord - 1] ** 2
            rsq = inst.vectors[list(pad.vec_positions)][:, coord - 1] ** 2
            for z in itertools.product((1, -1), repeat=len(qsq)):
                if len(set(z)) == 1:
                    continue
                for w in itertools.product((1, -1), repeat=len(rsq)):
                    entry = abs(float(np.dot(z, qsq) + np.dot(w, rsq)))
                    mech_cases += 1
                    mech_min = min(mech_min, entry)
    rng = np.random.default_rng(seed)
    n_vecs = inst.n_vectors
    signings = [witness_signing_stage1(trace, worst_x)]
    for _ in range(samples):
        signings.append((2 * rng.integers(0, 2, size=n_vecs) - 1).astype(np.int8))
    base = witness_signing_stage1(trace, worst_x)
    for rec in trace.var_records[: min(8, len(trace.var_records))]:
        flipped = base.copy()
        if rec.vec_positions:
            flipped[rec.vec_positions[0]] *= -1
        signings.append(flipped)
    min_count = None
    for s in signings:
        count, _ = _diag_count(inst, s, delta)
        if min_count is None or count < min_count:
            min_count = count
    m = source.n_sets
    proof_bound = gamma * m / 3.0
    passed = (
        mech_min >= delta - 1e-12
        and min_count >= proof_bound - 1e-9
    )
    return DiagFractionReport(
        gamma=gamma,
        min_unsat_sets=min_unsat,
        mechanism_min_entry=float(mech_min),
        mechanism_cases=mech_cases,
        sampled_min_count=int(min_count),
        sampled_min_fraction=min_count / inst.dim,
        proof_bound_count=proof_bound,
        statement_fraction_bound=gamma / 12.0,
        signings_checked=len(signings),
        passed=passed,
    )


def _diag_count(inst, signs, delta):
    mat = signed_sum(inst, signs)
    d = np.abs(np.diag(mat))
    count = int(np.sum(d >= delta - 1e-12))
    return count, count / d.size


# ---------------------------------------------------------------------------
# The projection block G
# ---------------------------------------------------------------------------

def incidence_b(k):
    """k x C(k,2) signed incidence matrix of the complete graph, columns
    e_i - e_j in lexicographic (i, j) order."""
    cols = list(itertools.combinations(range(k), 2))
    b = np.zeros((k, len(cols)))
    for t, (i, j) in enumerate(cols):
        b[i, t] = 1.0
        b[j, t] = -1.0
    return b


def _pi_orthonormal(k):
    """Rows: Gram-Schmidt over the difference basis e_i - e_{i+1}."""
    rows = []
    for i in range(k - 1):
        v = np.zeros(k)
        v[i], v[i + 1] = 1.0, -1.0
        for r in rows:
            v = v - np.dot(r, v) * r
        v = v / np.linalg.norm(v)
        rows.append(v)
    return np.array(rows)


def pi_rational_exact(k):
    """Exact rational row basis of the all-ones nullspace for square k.

    With k = s^2 the matrix [-1/s | I - J * s/(k(s+1))] has orthonormal
    rows summing to zero in every row, verified symbolically in tests.
    """
    s = math.isqrt(k)
    if s * s != k:
        raise ValueError("rational projection requires k to be a perfect square")
    coef = Fraction(s, k * (s + 1))
    rows = []
    for i in range(k - 1):
        row = [Fraction(-1, s)]
        for j in range(k - 1):
            row.append((Fraction(1) if i == j else Fraction(0)) - coef)
        rows.append(tuple(row))
    return tuple(rows)


def build_g(k, rational_pi=False):
    """G = Pi B / sqrt(k): a Parseval map from C(k,2) edge coordinates
    onto k-1 dimensions with all column norms sqrt(2/k)."""
    if k < 2:
        raise ValueError("k must be at least 2")
    b = incidence_b(k)
    if rational_pi:
        pi = np.array([[float(x) for x in row] for row in pi_rational_exact(k)])
        scale = 1.0 / math.isqrt(k)
        return (pi @ b) * scale
    pi = _pi_orthonormal(k)
    return pi @ b / math.sqrt(k)


def build_g_exact(k):
    """Exact rational G for square k (then sqrt(k) is an integer)."""
    s = math.isqrt(k)
    if s * s != k:
        raise ValueError("exact G requires k to be a perfect square")
    pi = pi_rational_exact(k)
    cols = list(itertools.combinations(range(k), 2))
    g = []
    for row in pi:
        out = []
        for (i, j) in cols:
            out.append((row[i] - row[j]) / s)
        g.append(tuple(out))
    return tuple(g)


@dataclass(frozen=True)
class GBoundReport:
    k: int
    trials: int
    min_slack: float
    passed: bool

    def to_json(self):
        return {"k": self.k, "trials": self.trials, "min_slack": self.min_slack, "passed": self.passed}


def verify_g_lower_bound(k, trials=1000, seed=0, tol=1e-9):
    """Check ||G D G^T|| >= (1/k) sqrt(2/(k-1)) ||D||_F on random and
    structured diagonals."""
    g = build_g(k)
    n_cols = g.shape[1]
    rng = np.random.default_rng(seed)
    factor = math.sqrt(2.0 / (k - 1)) / k
    diags = [rng.uniform(-1, 1, size=n_cols) for _ in range(trials)]
    diags.append(np.ones(n_cols))
    diags.append((-1.0) ** np.arange(n_cols))
    for t in range(n_cols):
        e = np.zeros(n_cols)
        e[t] = 1.0
        diags.append(e)
    min_slack = np.inf
    for d in diags:
        lhs = operator_norm((g * d) @ g.T)
        rhs = factor * float(np.linalg.norm(d))
        min_slack = min(min_slack, lhs - rhs)
    return GBoundReport(k=k, trials=len(diags), min_slack=float(min_slack), passed=min_slack >= -tol)


# ---------------------------------------------------------------------------
# Stage 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage2Plan:
    k: int
    rational_pi: bool
    m1: int
    m2: int
    pad_total: int
    n_colors: int
    max_conflict_degree: int
    classes: tuple  # per color: tuple of 1-based coordinates (pads included)
    class_pads: tuple  # pads added per class
    groups: tuple  # tuple of C(k,2)-sized coordinate groups, in block order
    g: np.ndarray

    def to_json(self):
        return {
            "k": self.k,
            "rational_pi": self.rational_pi,
            "m1": self.m1,
            "m2": self.m2,
            "pad_total": self.pad_total,
            "n_colors": self.n_colors,
            "max_conflict_degree": self.max_conflict_degree,
            "classes": [list(c) for c in self.classes],
            "class_pads": list(self.class_pads),
            "groups": [list(g) for g in self.groups],
            "g": [[float(x) for x in row] for row in self.g],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def conflict_graph(inst):
    """Adjacency sets over coordinates co-supported by some vector."""
    adj = [set() for _ in range(inst.dim + 1)]  # 1-based
    for vec in inst.vectors:
        support = [int(c) + 1 for c in np.nonzero(vec)[0]]
        for a, b in itertools.combinations(support, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def greedy_coloring(adj, n):
    """Smallest available color, coordinates in ascending order."""
    colors = [-1] * (n + 1)
    for v in range(1, n + 1):
        taken = {colors[u] for u in adj[v] if colors[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    return colors


def reduce_stage2(inst, trace, k, rational_pi=False):
    """Compress a stage-1 instance into a 1/(2k)-Weaver instance.

    Steps: (1) 22-color the coordinate conflict graph greedily; (2) pad
    each class to a multiple of C(k,2) with fresh coordinates carrying
    four elementary vectors of norm 1/2; (3) group each class and apply
    the block matrix F, whose (row-block, group) blocks all equal G.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    ck2 = k * (k - 1) // 2
    m1 = inst.dim
    if m1 < MAX_CLASSES * ck2:
        raise ValueError(
            f"stage-2 requires at least {MAX_CLASSES * ck2} stage-1 coordinates "
            f"for k={k}; got {m1}"
        )
    adj = conflict_graph(inst)
    max_degree = max((len(a) for a in adj[1:]), default=0)
    colors = greedy_coloring(adj, m1)
    n_colors = max(colors[1:]) + 1 if m1 else 0
    if n_colors > MAX_CLASSES:
        raise AssertionError(f"greedy coloring used {n_colors} > {MAX_CLASSES} classes")
    classes = [[] for _ in range(n_colors)]
    for coord in range(1, m1 + 1):
        classes[colors[coord]].append(coord)
    next_coord = m1 + 1
    class_pads = []
    pad_coords = []
    for ci in range(n_colors):
        need = (-len(classes[ci])) % ck2
        class_pads.append(need)
        fresh = list(range(next_coord, next_coord + need))
        next_coord += need
        classes[ci].extend(fresh)
        pad_coords.extend(fresh)
    m2 = next_coord - 1
    groups = []
    for ci in range(n_colors):
        coords = sorted(classes[ci])
        for t in range(0, len(coords), ck2):
            groups.append(tuple(coords[t : t + ck2]))
    g = build_g(k, rational_pi=rational_pi)
    plan = Stage2Plan(
        k=k,
        rational_pi=rational_pi,
        m1=m1,
        m2=m2,
        pad_total=m2 - m1,
        n_colors=n_colors,
        max_conflict_degree=max_degree,
        classes=tuple(tuple(c) for c in classes),
        class_pads=tuple(class_pads),
        groups=tuple(groups),
        g=g,
    )
    u_inst = stage2_u_instance(inst, plan)
    f = stage2_f_matrix(plan)
    w_vectors = u_inst.vectors @ f.T
    w_inst = WeaverInstance(
        dim=f.shape[0],
        alpha=1.0 / (2 * k),
        vectors=w_vectors,
        tags=u_inst.tags,
    )
    return w_inst, plan


def stage2_u_instance(inst, plan):
    """The intermediate 1/4-Weaver list: embedded stage-1 vectors plus four
    elementary vectors of norm 1/2 on every fresh pad coordinate."""
    n, m2 = inst.n_vectors, plan.m2
    vectors = np.zeros((n + 4 * plan.pad_total, m2))
    vectors[:n, : inst.dim] = inst.vectors
    tags = list(inst.tags)
    row = n
    for coord in range(plan.m1 + 1, m2 + 1):
        for h in range(4):
            vectors[row, coord - 1] = 0.5
            tags.append(f"pad:{coord}:{h + 1}")
            row += 1
    return WeaverInstance(dim=m2, alpha=0.25, vectors=vectors, tags=tuple(tags))


def stage2_f_matrix(plan):
    """The block matrix with G on (row block i, group i), zero elsewhere."""
    km1 = plan.k - 1
    f = np.zeros((km1 * len(plan.groups), plan.m2))
    for i, group in enumerate(plan.groups):
        rows = slice(i * km1, (i + 1) * km1)
        for t, coord in enumerate(group):
            f[rows, coord - 1] = plan.g[:, t]
    return f


def witness_signing_stage2(plan, stage1_signing):
    """Extend a stage-1 signing with balanced signs on the pad quadruples."""
    s1 = as_signs(stage1_signing)
    pad_signs = np.tile(np.array([1, 1, -1, -1], dtype=np.int8), plan.pad_total)
    return np.concatenate([s1, pad_signs])


# ---------------------------------------------------------------------------
# End-to-end certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralCertificate:
    k: int
    satisfiable: bool
    witness_norm: float | None
    gamma: float | None
    phi_measured: float | None
    kappa: float | None
    proof_lower_bound: float | None
    measured_lower_bound: float | None
    w_value: float | None
    w_method: str | None
    passed: bool

    def to_json(self):
        return {
            "k": self.k,
            "satisfiable": self.satisfiable,
            "witness_norm": self.witness_norm,
            "gamma": self.gamma,
            "phi_measured": self.phi_measured,
            "kappa": self.kappa,
            "proof_lower_bound": self.proof_lower_bound,
            "measured_lower_bound": self.measured_lower_bound,
            "w_value": self.w_value,
            "w_method": self.w_method,
            "passed": self.passed,
        }


def certify_gap_general(source, k, brute_cap=30, exact_cap=26, heuristic_budget=200,
                        samples=200, seed=0, rational_pi=False):
    """Certify the 0-versus-kappa/sqrt(k) dichotomy for one source.

    Satisfiable branch: the propagated witness must drive the final signed
    sum to zero.  Unsatisfiable branch: gamma is brute-forced exactly and
    the certificate reports kappa = (1/100) sqrt(gamma/6), the proof-level
    lower bound (1/50) sqrt(gamma/(24 k)), the measured-phi variant, and
    either the exact minimum (when the vector count permits) or a clearly
    labeled heuristic upper bound.
    """
    witness = setsplit.exact_satisfiable(source, cap=brute_cap)
    v_inst, trace = reduce_stage1(source)
    w_inst, plan = reduce_stage2(v_inst, trace, k, rational_pi=rational_pi)
    if witness is not None:
        s1 = witness_signing_stage1(trace, witness)
        s2 = witness_signing_stage2(plan, s1)
        norm = operator_norm(signed_sum(w_inst, s2))
        return GeneralCertificate(
            k=k, satisfiable=True, witness_norm=norm, gamma=None,
            phi_measured=None, kappa=None, proof_lower_bound=None,
            measured_lower_bound=None,
            w_value=0.0 if norm <= FLOAT_TOL else None,
            w_method="witness", passed=norm <= FLOAT_TOL,
        )
    diag = verify_diag_fraction(source, v_inst, trace, samples=samples, seed=seed,
                                brute_cap=brute_cap)
    gamma = diag.gamma
    phi = diag.sampled_min_fraction
    kappa = math.sqrt(gamma / 6.0) / 100.0
    proof_bound = math.sqrt(gamma / (24.0 * k)) / 50.0
    measured_bound = float(DIAG_THRESHOLD) * math.sqrt(phi / (2.0 * k))
    try:
        result = exact_w(w_inst, cap=exact_cap)
        method = "exact"
        ok = result.best_value >= proof_bound - 1e-9
    except CapExceeded:
        result = heuristic_w(w_inst, budget=heuristic_budget, seed=seed)
        method = "heuristic-upper-bound"
        ok = result.best_value >= proof_bound - 1e-9
    return GeneralCertificate(
        k=k, satisfiable=False, witness_norm=None, gamma=gamma,
        phi_measured=phi, kappa=kappa, proof_lower_bound=proof_bound,
        measured_lower_bound=measured_bound, w_value=result.best_value,
        w_method=method, passed=diag.passed and ok,
    )
