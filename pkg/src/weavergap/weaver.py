"""Core linear algebra for signed sums of outer products.

An instance is a list of vectors v_1..v_n in R^dim together with a declared
norm bound alpha.  The central quantity is the minimum, over sign vectors
s in {+1,-1}^n, of the operator norm of sum_i s(i) v_i v_i^T.  A list is
alpha-Weaver when the unsigned sum of outer products is the identity and
every squared vector norm is at most alpha; that property is checked by
``check_alpha_weaver``, never assumed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Construction identities built from exact dyadic/ternary rationals are
# held to the tight tolerance; identities that pass through a floating
# orthonormalization get the loose one.
EXACT_TOL = 1e-12
FLOAT_TOL = 1e-9

DEFAULT_EXACT_CAP = 26
_BLOCK_BITS = 13


class CapExceeded(ValueError):
    """An exhaustive search was refused because it would exceed its cap."""


def as_signs(values, n=None):
    """Coerce to an int8 vector with entries exactly +-1."""
    s = np.asarray(values, dtype=np.int8).ravel()
    if n is not None and s.size != n:
        raise ValueError(f"expected {n} signs, got {s.size}")
    if s.size and not np.all(np.abs(s) == 1):
        raise ValueError("sign vector entries must be +1 or -1")
    return s


@dataclass(frozen=True)
class WeaverInstance:
    """A tagged list of real vectors with a declared alpha."""

    dim: int
    alpha: float
    vectors: np.ndarray  # shape (n_vectors, dim)
    tags: tuple

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=float)
        if vecs.ndim != 2 or vecs.shape[1] != self.dim:
            raise ValueError(f"vectors must have shape (n, {self.dim})")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        tags = tuple(self.tags)
        if len(tags) != vecs.shape[0]:
            raise ValueError("one tag per vector required")
        object.__setattr__(self, "tags", tags)
        if self.dim <= 0 or self.alpha <= 0:
            raise ValueError("dim and alpha must be positive")

    @property
    def n_vectors(self):
        return self.vectors.shape[0]

    def to_json(self):
        return {
            "dim": self.dim,
            "alpha": self.alpha,
            "vectors": self.vectors.tolist(),
            "tags": list(self.tags),
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            dim=int(data["dim"]),
            alpha=float(data["alpha"]),
            vectors=np.array(data["vectors"], dtype=float).reshape(-1, int(data["dim"])),
            tags=tuple(data["tags"]),
        )

    def save(self, path):
        # json.dumps takes the C encoder; json.dump streams through the
        # pure-Python one, which is far too slow for big vector lists.
        with open(path, "w") as fh:
            fh.write(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class SolveResult:
    best_value: float
    best_signing: np.ndarray
    method: str  # "exact" or "heuristic"
    explored: int

    def to_json(self):
        return {
            "best_value": float(self.best_value),
            "best_signing": [int(s) for s in self.best_signing],
            "method": self.method,
            "explored": int(self.explored),
        }


@dataclass(frozen=True)
class AlphaWeaverReport:
    passed: bool
    alpha: float
    tol: float
    max_sq_norm: float
    max_identity_deviation: float

    def to_json(self):
        return {
            "passed": self.passed,
            "alpha": self.alpha,
            "tol": self.tol,
            "max_sq_norm": self.max_sq_norm,
            "max_identity_deviation": self.max_identity_deviation,
        }


def signed_sum(inst, signs):
    """Return sum_i signs(i) * v_i v_i^T as an exactly symmetric matrix."""
    s = as_signs(signs, inst.n_vectors)
    v = inst.vectors
    m = (v * s[:, None]).T @ v
    return (m + m.T) / 2.0


def operator_norm(mat):
    """Largest absolute eigenvalue of a dense symmetric matrix."""
    m = np.asarray(mat, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def operator_norms(stack):
    """Operator norms of a stack of symmetric matrices, shape (b, d, d)."""
    if stack.shape[0] == 0:
        return np.empty(0)
    return np.max(np.abs(np.linalg.eigvalsh(stack)), axis=1)


def frobenius_norm(mat):
    """Square root of the sum of squared entries."""
    m = np.asarray(mat, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return float(np.sqrt(np.sum(m * m)))


def diag_stats(mat, delta):
    """(count, fraction) of diagonal entries with absolute value >= delta."""
    d = np.abs(np.diag(np.asarray(mat, dtype=float)))
    count = int(np.sum(d >= delta))
    return count, count / d.size if d.size else 0.0


def check_alpha_weaver(inst, tol=EXACT_TOL):
    """Check the two alpha-Weaver conditions: norms and sum-to-identity."""
    v = inst.vectors
    sq_norms = np.sum(v * v, axis=1)
    max_sq = float(sq_norms.max()) if v.shape[0] else 0.0
    gram = v.T @ v
    dev = float(np.max(np.abs(gram - np.eye(inst.dim))))
    passed = (max_sq <= inst.alpha + tol) and (dev <= tol)
    return AlphaWeaverReport(
        passed=passed,
        alpha=inst.alpha,
        tol=tol,
        max_sq_norm=max_sq,
        max_identity_deviation=dev,
    )


def _sign_block(n, start, stop):
    """Rows of signs for codes start..stop-1; code 0 is all -1 on free slots.

    The first sign is pinned to +1.  Remaining positions are ordered most
    significant first, bit 0 -> -1, so ascending codes enumerate signings
    in ascending lexicographic order (with -1 < +1).
    """
    codes = np.arange(start, stop, dtype=np.uint64)
    out = np.empty((codes.size, n), dtype=np.int8)
    out[:, 0] = 1
    for p in range(1, n):
        shift = np.uint64(n - 1 - p)
        out[:, p] = (2 * ((codes >> shift) & np.uint64(1)) - 1).astype(np.int8)
    return out


def _batch_size(dim, budget_elems=1 << 23):
    return max(1, budget_elems // max(dim * dim, 1))


def exact_w(inst, cap=DEFAULT_EXACT_CAP):
    """Exhaustive minimum of the signed-sum operator norm over signings.

    The global sign flip leaves the norm unchanged, so the first sign is
    fixed to +1; ties break to the lexicographically smallest signing.
    """
    n = inst.n_vectors
    if n > cap:
        raise CapExceeded(f"{n} vectors exceeds the exact-search cap of {cap}")
    if n == 0:
        return SolveResult(0.0, np.empty(0, dtype=np.int8), "exact", 0)
    outers = np.einsum("ni,nj->nij", inst.vectors, inst.vectors)
    total = 1 << (n - 1)
    best_val = np.inf
    best_code = 0
    block = min(1 << _BLOCK_BITS, _batch_size(inst.dim))
    for start in range(0, total, block):
        stop = min(start + block, total)
        signs = _sign_block(n, start, stop)
        mats = np.einsum("bn,nij->bij", signs.astype(float), outers)
        norms = operator_norms(mats)
        idx = int(np.argmin(norms))
        if norms[idx] < best_val:
            best_val = float(norms[idx])
            best_code = start + idx
    best_signing = _sign_block(n, best_code, best_code + 1)[0]
    return SolveResult(best_val, best_signing, "exact", total)


def _best_single_flip(vectors, signs, mat):
    """(index, norm) of the best single-flip neighbor, evaluated in
    memory-bounded chunks."""
    n, dim = vectors.shape
    chunk = _batch_size(dim)
    best_j = -1
    best = np.inf
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = vectors[start:stop]
        outer = np.einsum("ci,cj->cij", block, block)
        stack = mat[None, :, :] - 2.0 * signs[start:stop, None, None] * outer
        vals = operator_norms(stack)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best = float(vals[j])
            best_j = start + j
    return best_j, best


def heuristic_w(inst, budget=200, seed=0, starts=()):
    """Multi-restart greedy single-flip descent; an upper bound on W.

    ``budget`` counts descent sweeps across all restarts.  Each sweep
    evaluates every single flip of the current signing and takes the best
    strict improvement.  Deterministic given (instance, budget, seed,
    starts); warm ``starts`` are used before random restarts.
    """
    n = inst.n_vectors
    if n == 0:
        return SolveResult(0.0, np.empty(0, dtype=np.int8), "heuristic", 0)
    rng = np.random.default_rng(seed)
    vectors = inst.vectors
    explored = 0
    best_val = np.inf
    best_signing = None
    queue = [as_signs(s, n).copy() for s in starts]
    sweeps_left = max(1, int(budget))
    while sweeps_left > 0:
        signs = queue.pop(0) if queue else (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
        mat = signed_sum(inst, signs)
        val = operator_norm(mat)
        explored += 1
        while sweeps_left > 0:
            sweeps_left -= 1
            j, flip_val = _best_single_flip(vectors, signs, mat)
            explored += n
            if flip_val >= val - 1e-15:
                break
            val = flip_val
            mat = mat - 2.0 * signs[j] * np.outer(vectors[j], vectors[j])
            signs[j] = -signs[j]
        if val < best_val:
            best_val = float(val)
            best_signing = signs.copy()
        if best_val == 0.0:
            break
    if best_signing[0] == -1:
        best_signing = (-best_signing).astype(np.int8)
    return SolveResult(best_val, best_signing, "heuristic", explored)
