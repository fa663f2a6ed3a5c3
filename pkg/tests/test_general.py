import math
from fractions import Fraction

import numpy as np
import pytest

from weavergap import general, generate, weaver


def test_four_frame_exact():
    q = general.q4_frame_exact()
    for i in range(4):
        for j in range(4):
            ip = sum(q[i][t] * q[j][t] for t in range(4))
            assert ip == (Fraction(1) if i == j else Fraction(0))
    for r in range(4):
        sq = sorted(q[h][r] ** 2 for h in range(4))
        assert sq == [Fraction(1, 25), Fraction(4, 25), Fraction(4, 25), Fraction(16, 25)]


def test_four_frame_float():
    q = general.q4_frame()
    assert q[0] == pytest.approx([0.2, 0.8, -0.4, -0.4], abs=0)
    assert np.max(np.abs(q @ q.T - np.eye(4))) < 1e-15


def test_pad_diagonal_enumeration():
    rep = general.verify_pad_diagonal_bound()
    assert rep.passed
    assert rep.case_count == 448
    assert rep.min_value_exact == "1/50"
    assert rep.min_value == pytest.approx(0.02, abs=1e-15)


def test_stage1_structure():
    inst, _ = generate.random_planted_322(12, 6, seed=1)
    reduced, trace = general.reduce_stage1(inst)
    assert weaver.check_alpha_weaver(reduced, tol=1e-12).passed
    for rec in trace.var_records:
        assert len(rec.support) == 4
        assert len(rec.pad_coords) >= 1  # occurrences at most 3
    nnz = np.count_nonzero(reduced.vectors, axis=1)
    assert nnz.max() <= 4
    # support counts per coordinate: pads carry 7 vectors, set coordinates
    # 16 (four variables, four frame vectors each)
    per_coord = np.count_nonzero(reduced.vectors, axis=0)
    pad_coords = {p.coord for p in trace.pad_records}
    for coord in range(1, reduced.dim + 1):
        if coord in pad_coords:
            assert per_coord[coord - 1] == 7
        else:
            assert per_coord[coord - 1] == 16


def test_stage1_witness_zero():
    inst, planted = generate.random_planted_322(12, 6, seed=2)
    reduced, trace = general.reduce_stage1(inst)
    signs = general.witness_signing_stage1(trace, planted)
    assert weaver.operator_norm(weaver.signed_sum(reduced, signs)) <= 1e-12


def test_stage1_unsatisfying_diagonal(one_set_instance):
    reduced, trace = general.reduce_stage1(one_set_instance)
    signs = general.witness_signing_stage1(trace, [1, 1, 1, -1])
    m = weaver.signed_sum(reduced, signs)
    assert abs(m[0, 0]) >= 0.25 - 1e-12


def test_verify_diag_fraction(unsat_322_instance):
    reduced, trace = general.reduce_stage1(unsat_322_instance)
    rep = general.verify_diag_fraction(
        unsat_322_instance, reduced, trace, samples=200, seed=3, brute_cap=20
    )
    assert rep.passed
    assert rep.mechanism_min_entry >= 1 / 50 - 1e-12
    assert rep.mechanism_cases > 0
    assert rep.sampled_min_count >= rep.proof_bound_count - 1e-9
    assert rep.gamma > 0


def test_diag_fraction_zero_for_satisfiable_witness():
    inst, planted = generate.random_planted_322(12, 6, seed=7)
    reduced, trace = general.reduce_stage1(inst)
    signs = general.witness_signing_stage1(trace, planted)
    count, frac = weaver.diag_stats(weaver.signed_sum(reduced, signs), 1 / 50)
    assert (count, frac) == (0, 0.0)


# ---------------------------------------------------------------------------
# Projection block
# ---------------------------------------------------------------------------

def test_build_g_k2():
    g = general.build_g(2)
    assert g.shape == (1, 1)
    assert abs(abs(g[0, 0]) - 1.0) < 1e-12
    assert np.allclose(g @ g.T, np.eye(1), atol=1e-12)


@pytest.mark.parametrize("k", range(2, 9))
def test_build_g_parseval(k):
    g = general.build_g(k)
    assert g.shape == (k - 1, k * (k - 1) // 2)
    assert np.max(np.abs(g @ g.T - np.eye(k - 1))) <= 1e-12
    col_norms = np.linalg.norm(g, axis=0)
    assert np.max(np.abs(col_norms - math.sqrt(2.0 / k))) <= 1e-12


def test_rational_projection_exact():
    pi = general.pi_rational_exact(4)
    for i in range(3):
        assert sum(pi[i]) == 0
        for j in range(3):
            ip = sum(pi[i][t] * pi[j][t] for t in range(4))
            assert ip == (Fraction(1) if i == j else Fraction(0))
    with pytest.raises(ValueError):
        general.pi_rational_exact(5)
    g = general.build_g_exact(4)
    for i in range(3):
        for j in range(3):
            ip = sum(g[i][t] * g[j][t] for t in range(6))
            assert ip == (Fraction(1) if i == j else Fraction(0))
    for t in range(6):
        assert sum(g[i][t] ** 2 for i in range(3)) == Fraction(2, 4)


def test_build_g_rational_flag():
    g = general.build_g(4, rational_pi=True)
    assert np.max(np.abs(g @ g.T - np.eye(3))) <= 1e-15
    with pytest.raises(ValueError):
        general.build_g(5, rational_pi=True)


@pytest.mark.parametrize("k", range(2, 9))
def test_incidence_identities(k):
    b = general.incidence_b(k)
    expect = k * np.eye(k) - np.ones((k, k))
    assert np.array_equal(b @ b.T, expect)
    rng = np.random.default_rng(k)
    for _ in range(20):
        d = rng.uniform(-1, 1, size=b.shape[1])
        lhs = weaver.frobenius_norm((b * d) @ b.T) ** 2
        assert lhs >= 2 * float(np.sum(d * d)) - 1e-9


def test_g_lower_bound_structured():
    for k in (2, 3, 5):
        g = general.build_g(k)
        n_cols = g.shape[1]
        factor = math.sqrt(2.0 / (k - 1)) / k
        # all-ones diagonal compresses to the identity
        assert np.allclose((g * 1.0) @ g.T, np.eye(k - 1), atol=1e-12)
        assert 1.0 >= factor * math.sqrt(n_cols) - 1e-12
        # single nonzero entry: the norm is the squared column norm 2/k
        d = np.zeros(n_cols)
        d[0] = 1.0
        lhs = weaver.operator_norm((g * d) @ g.T)
        assert lhs == pytest.approx(2.0 / k, abs=1e-12)
        assert lhs >= factor - 1e-12
        # zero diagonal
        assert weaver.operator_norm((g * 0.0) @ g.T) == 0.0


@pytest.mark.parametrize("k", range(2, 9))
def test_g_lower_bound_random(k):
    rep = general.verify_g_lower_bound(k, trials=300, seed=11)
    assert rep.passed


# ---------------------------------------------------------------------------
# Stage 2
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def stage2_bundle():
    # 4 * 20 - 3 * 5 = 65 < 66 would fail the k=3 precondition; use m=4
    inst, planted = generate.random_planted_322(20, 4, seed=9)
    v_inst, trace = general.reduce_stage1(inst)
    w_inst, plan = general.reduce_stage2(v_inst, trace, 3)
    return inst, planted, v_inst, trace, w_inst, plan


def test_stage2_precondition():
    inst, _ = generate.random_planted_322(10, 4, seed=1)
    v_inst, trace = general.reduce_stage1(inst)
    with pytest.raises(ValueError, match="requires at least"):
        general.reduce_stage2(v_inst, trace, 4)


def test_stage2_alpha(stage2_bundle):
    _, _, _, _, w_inst, plan = stage2_bundle
    assert w_inst.alpha == pytest.approx(1 / 6)
    assert weaver.check_alpha_weaver(w_inst, tol=1e-9).passed
    sq = np.sum(w_inst.vectors**2, axis=1)
    assert np.max(np.abs(sq - 1 / 6)) <= 1e-12


def test_stage2_coloring_and_classes(stage2_bundle):
    _, _, v_inst, _, _, plan = stage2_bundle
    assert plan.max_conflict_degree <= 21
    assert plan.n_colors <= 22
    ck2 = plan.k * (plan.k - 1) // 2
    for cls, pads in zip(plan.classes, plan.class_pads):
        assert len(cls) % ck2 == 0
        assert 0 <= pads < ck2
    # every vector meets every class in at most one support coordinate
    for vec in v_inst.vectors:
        support = {int(c) + 1 for c in np.nonzero(vec)[0]}
        for cls in plan.classes:
            assert len(support & set(cls)) <= 1
    assert plan.m2 <= 2 * plan.m1
    assert plan.m2 == plan.m1 + plan.pad_total


def test_stage2_f_matrix(stage2_bundle):
    _, _, v_inst, _, w_inst, plan = stage2_bundle
    f = general.stage2_f_matrix(plan)
    km1 = plan.k - 1
    assert f.shape == (km1 * len(plan.groups), plan.m2)
    assert np.max(np.abs(f @ f.T - np.eye(f.shape[0]))) <= 1e-12


def test_stage2_group_submatrices_diagonal(stage2_bundle):
    _, _, v_inst, _, _, plan = stage2_bundle
    u_inst = general.stage2_u_instance(v_inst, plan)
    rng = np.random.default_rng(5)
    for _ in range(30):
        signs = (2 * rng.integers(0, 2, size=u_inst.n_vectors) - 1).astype(np.int8)
        m = weaver.signed_sum(u_inst, signs)
        for group in plan.groups:
            idx = [c - 1 for c in group]
            sub = m[np.ix_(idx, idx)]
            off = sub - np.diag(np.diag(sub))
            assert np.max(np.abs(off)) <= 1e-12


def test_stage2_conjugation_identity(stage2_bundle):
    _, _, v_inst, _, w_inst, plan = stage2_bundle
    u_inst = general.stage2_u_instance(v_inst, plan)
    f = general.stage2_f_matrix(plan)
    rng = np.random.default_rng(8)
    for _ in range(30):
        signs = (2 * rng.integers(0, 2, size=u_inst.n_vectors) - 1).astype(np.int8)
        lhs = weaver.signed_sum(w_inst, signs)
        rhs = f @ weaver.signed_sum(u_inst, signs) @ f.T
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_stage2_witness_propagation(stage2_bundle):
    inst, planted, v_inst, trace, w_inst, plan = stage2_bundle
    s1 = general.witness_signing_stage1(trace, planted)
    s2 = general.witness_signing_stage2(plan, s1)
    assert weaver.operator_norm(weaver.signed_sum(w_inst, s2)) <= 1e-9


def test_stage2_k2_is_identity_compression():
    inst, planted = generate.random_planted_322(14, 6, seed=3)
    v_inst, trace = general.reduce_stage1(inst)
    w_inst, plan = general.reduce_stage2(v_inst, trace, 2)
    # C(2,2) = 1: groups are singletons and F is a signed permutation
    assert plan.pad_total == 0
    assert w_inst.alpha == 0.25
    assert weaver.check_alpha_weaver(w_inst, tol=1e-9).passed


def test_certify_general_satisfiable():
    inst, _ = generate.random_planted_322(16, 8, seed=10)
    cert = general.certify_gap_general(inst, k=2)
    assert cert.passed and cert.satisfiable
    assert cert.witness_norm <= 1e-9


def test_certify_general_unsatisfiable(unsat_322_instance):
    cert = general.certify_gap_general(unsat_322_instance, k=2, brute_cap=20, samples=100)
    assert cert.passed and not cert.satisfiable
    assert cert.gamma > 0
    assert cert.kappa == pytest.approx(math.sqrt(cert.gamma / 6) / 100)
    assert cert.proof_lower_bound == pytest.approx(math.sqrt(cert.gamma / 48) / 50)
    assert cert.w_value >= cert.proof_lower_bound - 1e-9


def test_plan_json(tmp_path, stage2_bundle):
    *_, plan = stage2_bundle
    path = tmp_path / "plan.json"
    plan.save(path)
    import json

    data = json.loads(path.read_text())
    assert data["k"] == 3
    assert data["m2"] % 3 == 0
    assert len(data["groups"]) == data["m2"] // 3
