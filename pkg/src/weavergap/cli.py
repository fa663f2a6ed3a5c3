"""Command-line front end: generate, reduce, solve, verify, certify.

Artifacts are JSON files; the report commands (verify, pipeline, certify)
write a report.json plus a delimited table and rendered figures into the
output directory.  Exit codes: 0 success, 1 check failure, 2 usage or IO
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, general, generate, quarter, report, satreduce, setsplit, weaver


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, default=str)


def _load_instance(path):
    if path.endswith(".cnf") or path.endswith(".dimacs"):
        raise ValueError("expected a set-splitting JSON instance, got DIMACS")
    return setsplit.SetSplitInstance.load(path)


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args):
    rng_seed = args.seed
    if args.kind == "setsplit":
        if args.planted:
            inst, planted = generate.random_planted_322(args.n_vars, args.n_sets, seed=rng_seed)
            inst.save(args.output)
            if args.witness_output:
                _write_json(args.witness_output, setsplit.assignment_to_json(planted))
        else:
            inst = generate.random_322_instance(args.n_vars, args.n_sets, seed=rng_seed)
            inst.save(args.output)
        rep = setsplit.check_322(inst)
        if not rep.ok:
            print("generated instance failed its (3,2-2) check", file=sys.stderr)
            return 1
    elif args.kind == "unsat-setsplit":
        inst, tries = generate.search_unsat_322(
            args.n_vars, args.n_sets, seed=rng_seed, attempts=args.budget, cap=args.cap
        )
        if inst is None:
            print(f"no unsatisfiable instance found in {tries} attempts", file=sys.stderr)
            return 1
        inst.save(args.output)
    else:  # e3
        formula = generate.random_e3_formula(
            args.n_vars, args.n_clauses, seed=rng_seed, unsat_core=args.unsat_core
        )
        with open(args.output, "w") as fh:
            fh.write(satreduce.to_dimacs(formula, comment=f"seeded random E3, seed={rng_seed}"))
    print(f"wrote {args.output}")
    return 0


def cmd_reduce(args):
    inst = _load_instance(args.input)
    out_dir = _ensure_dir(args.output)
    if args.mode == "quarter":
        reduced, trace = quarter.reduce_quarter(inst)
        reduced.save(os.path.join(out_dir, "weaver.json"))
        trace.save(os.path.join(out_dir, "trace.json"))
    else:
        v_inst, trace = general.reduce_stage1(inst)
        w_inst, plan = general.reduce_stage2(v_inst, trace, args.k, rational_pi=args.rational_pi)
        v_inst.save(os.path.join(out_dir, "stage1.json"))
        trace.save(os.path.join(out_dir, "trace.json"))
        w_inst.save(os.path.join(out_dir, "weaver.json"))
        plan.save(os.path.join(out_dir, "plan.json"))
    alpha_rep = weaver.check_alpha_weaver(
        weaver.WeaverInstance.load(os.path.join(out_dir, "weaver.json")),
        tol=args.tol,
    )
    _write_json(os.path.join(out_dir, "alpha_check.json"), alpha_rep.to_json())
    print(f"wrote {out_dir} (alpha check: {'pass' if alpha_rep.passed else 'FAIL'})")
    return 0 if alpha_rep.passed else 1


def cmd_solve(args):
    inst = weaver.WeaverInstance.load(args.input)
    if args.method == "exact":
        result = weaver.exact_w(inst, cap=args.cap)
    elif args.method == "heuristic":
        result = weaver.heuristic_w(inst, budget=args.budget, seed=args.seed)
    else:
        try:
            result = weaver.exact_w(inst, cap=args.cap)
        except weaver.CapExceeded:
            result = weaver.heuristic_w(inst, budget=args.budget, seed=args.seed)
    _write_json(args.output, result.to_json())
    print(f"{result.method} value {result.best_value:.12g} ({result.explored} signings explored)")
    return 0


def _verify_suite_q1(rep, out_dir, args):
    r = quarter.verify_reflection_bound(samples=args.samples, seed=args.seed)
    rep.add_check("three-vector reflection bound and dual certificate", r.passed,
                  measured=r.min_norm, bound=1.0, witness=r.failures or None)
    rep.quantities["q1"] = r.to_json()


def _verify_suite_q4(rep, out_dir, args):
    r = general.verify_pad_diagonal_bound()
    rep.add_check("pad-diagonal 448-case enumeration", r.passed,
                  measured=r.min_value_exact, bound="1/50",
                  witness=None if r.passed else r.to_json())
    rep.quantities["q4"] = r.to_json()
    if not args.no_figures:
        import itertools
        from fractions import Fraction
        vals = []
        q4 = general.Q4_EXACT
        for z in itertools.product((1, -1), repeat=4):
            if len(set(z)) == 1:
                continue
            for w in itertools.product((1, -1), repeat=3):
                for j in range(4):
                    vals.append(float(abs(
                        sum(Fraction(z[i], 4) * q4[i][j] ** 2 for i in range(4))
                        + sum(Fraction(wh, 4) for wh in w))))
        report.save_enumeration_figure(
            vals, 1 / 50, os.path.join(out_dir, "fig_pad_diagonals.png"),
            "pad diagonal magnitudes over all 448 sign cases")


def _verify_suite_g(rep, out_dir, args):
    lhs_all, rhs_all = [], []
    for k in range(2, 9):
        g = general.build_g(k)
        gg_dev = float(np.max(np.abs(g @ g.T - np.eye(k - 1))))
        col_dev = float(np.max(np.abs(np.linalg.norm(g, axis=0) - np.sqrt(2.0 / k))))
        r = general.verify_g_lower_bound(k, trials=args.samples, seed=args.seed)
        rep.add_check(f"projection block k={k}: rows orthonormal", gg_dev <= 1e-12,
                      measured=gg_dev, bound=1e-12)
        rep.add_check(f"projection block k={k}: column norms", col_dev <= 1e-12,
                      measured=col_dev, bound=1e-12)
        rep.add_check(f"projection block k={k}: Frobenius lower bound", r.passed,
                      measured=r.min_slack, bound=0.0)
        rng = np.random.default_rng(args.seed)
        for _ in range(50):
            d = rng.uniform(-1, 1, size=g.shape[1])
            lhs_all.append(weaver.operator_norm((g * d) @ g.T))
            rhs_all.append(np.sqrt(2.0 / (k - 1)) / k * float(np.linalg.norm(d)))
    if not args.no_figures:
        report.save_bound_scatter(lhs_all, rhs_all,
                                  os.path.join(out_dir, "fig_projection_bound.png"),
                                  "compressed diagonal norms vs. bound, k=2..8")


def _verify_suite_gadget(rep, out_dir, args):
    g = setsplit.equality_gadget(1, 2, 3)
    inst = setsplit.SetSplitInstance(n_vars=15, sets=g.sets)
    equal_ok = True
    completions = {1: 0, -1: 0}
    for code in range(1 << 15):
        x = [1 if (code >> i) & 1 else -1 for i in range(15)]
        if setsplit.unsatisfied_count(inst, x) == 0:
            if x[0] != x[1]:
                equal_ok = False
            else:
                completions[x[0]] += 1
    rep.add_check("gadget exhaustive: all-satisfied forces equality", equal_ok)
    rep.add_check("gadget exhaustive: both equal values completable",
                  completions[1] > 0 and completions[-1] > 0,
                  measured=dict(completions))
    rep.quantities["gadget_completions"] = completions


def _verify_suite_alpha(rep, out_dir, args):
    if not args.input:
        raise ValueError("--input is required for the alpha suite")
    inst = weaver.WeaverInstance.load(args.input)
    r = weaver.check_alpha_weaver(inst, tol=args.tol)
    rep.add_check("alpha-Weaver conditions", r.passed,
                  measured={"max_sq_norm": r.max_sq_norm, "identity_dev": r.max_identity_deviation},
                  bound={"alpha": inst.alpha, "tol": args.tol})
    rep.quantities["alpha"] = r.to_json()


def _verify_suite_expander(rep, out_dir, args):
    # The gap is recorded as a diagnostic, never asserted: circulants with
    # an odd skip on an even vertex count are bipartite and reach the
    # degree bound exactly.
    ns = [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
    gaps = []
    for n in ns:
        g = satreduce.expander_graph(n)
        gaps.append(g.second_eigenvalue_modulus)
        degrees_ok = all(
            sum(1 for e in g.edges if n_v in e) == 4 for n_v in range(min(n, 32))
        )
        rep.add_check(f"circulant n={n}: 4-regular and connected",
                      degrees_ok and 1 in g.offsets,
                      measured={"second_eigenvalue_modulus": g.second_eigenvalue_modulus})
    rep.quantities["spectral_gaps"] = dict(zip(ns, gaps))
    if not args.no_figures:
        report.save_spectral_figure(ns, gaps, os.path.join(out_dir, "fig_spectral_gap.png"))


_SUITES = {
    "q1": _verify_suite_q1,
    "q4": _verify_suite_q4,
    "g": _verify_suite_g,
    "gadget": _verify_suite_gadget,
    "alpha": _verify_suite_alpha,
    "expander": _verify_suite_expander,
}


def cmd_verify(args):
    out_dir = _ensure_dir(args.output)
    rep = report.Report(command="verify", config=vars(args).copy())
    suites = list(_SUITES) if args.suite == "all" else [args.suite]
    if args.suite == "all" and not args.input:
        suites.remove("alpha")
    for name in suites:
        with rep.time_block(name):
            _SUITES[name](rep, out_dir, args)
    rep.save(os.path.join(out_dir, "report.json"))
    report.write_table(
        os.path.join(out_dir, "verify.csv"),
        ["check", "passed", "measured", "bound"],
        [[c["name"], c["passed"], c.get("measured", ""), c.get("bound", "")] for c in rep.checks],
    )
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    return 0 if rep.passed else 1


def cmd_pipeline(args):
    out_dir = _ensure_dir(args.output)
    rep = report.Report(command="pipeline", config=vars(args).copy())
    if args.input.endswith(".cnf") or args.input.endswith(".dimacs"):
        with open(args.input) as fh:
            parsed = satreduce.parse_dimacs(fh.read())
        if not parsed.e3_valid:
            print("input is not E3-valid: " + "; ".join(parsed.problems), file=sys.stderr)
            return 2
        with rep.time_block("satreduce"):
            result = satreduce.full_pipeline(
                parsed.formula, copies_per_clause=(args.z_mode == "copies"))
        inst = result.instance
        result.save_trace(os.path.join(out_dir, "pipeline_trace.json"))
        rep.quantities["pipeline"] = {
            "source_vars": parsed.formula.n_vars,
            "source_clauses": parsed.formula.n_clauses,
            "instance_vars": inst.n_vars,
            "instance_sets": inst.n_sets,
        }
    else:
        inst = _load_instance(args.input)
        # normalization rewrites every repeated variable; skip it when the
        # input is already in (3,2-2) form
        if not setsplit.check_322(inst).ok:
            inst, cmap = setsplit.to_three_occurrence(inst)
        result = None
    inst.save(os.path.join(out_dir, "setsplit.json"))
    rep.add_check("(3,2-2) structural check", setsplit.check_322(inst).ok)
    # The vector reduction is dense; refuse sizes that cannot be held that
    # way rather than thrash (the set-splitting artifacts are still written).
    occ = inst.occurrence_counts()[1:]
    pads = int(np.sum((4 if args.mode == "general" else 3) - occ))
    projected_dim = inst.n_sets + pads
    if projected_dim > args.max_dim:
        rep.quantities["reduce"] = (
            f"skipped: projected dimension {projected_dim} exceeds --max-dim "
            f"{args.max_dim}; rerun with --z-mode single or a smaller input"
        )
        rep.save(os.path.join(out_dir, "report.json"))
        print(f"SKIP  vector reduction ({rep.quantities['reduce']})")
        return 0 if rep.passed else 1
    with rep.time_block("reduce"):
        if args.mode == "quarter":
            reduced, trace = quarter.reduce_quarter(inst)
            trace.save(os.path.join(out_dir, "trace.json"))
        else:
            v_inst, trace = general.reduce_stage1(inst)
            reduced, plan = general.reduce_stage2(v_inst, trace, args.k,
                                                  rational_pi=args.rational_pi)
            v_inst.save(os.path.join(out_dir, "stage1.json"))
            trace.save(os.path.join(out_dir, "trace.json"))
            plan.save(os.path.join(out_dir, "plan.json"))
    reduced.save(os.path.join(out_dir, "weaver.json"))
    alpha = weaver.check_alpha_weaver(reduced, tol=args.tol if args.mode == "quarter" else 1e-9)
    rep.add_check("alpha-Weaver check", alpha.passed, measured=alpha.to_json())
    rep.quantities["max_occurrence_normalized"] = inst.max_occurrence
    with rep.time_block("solve"):
        try:
            witness = setsplit.backtracking_satisfiable(inst, node_cap=args.budget * 10000)
            rep.quantities["source_satisfiable"] = witness is not None
            if witness is not None:
                if args.mode == "quarter":
                    signs = quarter.witness_signing_quarter(trace, witness)
                else:
                    s1 = general.witness_signing_stage1(trace, witness)
                    signs = general.witness_signing_stage2(plan, s1)
                norm = weaver.operator_norm(weaver.signed_sum(reduced, signs))
                tol = 1e-12 if args.mode == "quarter" else 1e-9
                rep.add_check("witness signing reaches the zero matrix",
                              norm <= tol, measured=norm, bound=tol)
                _write_json(os.path.join(out_dir, "witness_signing.json"),
                            {"signs": [int(s) for s in signs], "norm": norm})
            elif args.mode == "quarter":
                # 0-vs-1/4 dichotomy: unsatisfiable sources sit at or above
                # 1/4; report the tightest available bound on this instance.
                rep.quantities["gap_statement"] = (
                    "unsatisfiable source: every signing has norm >= 1/4; "
                    "run `weavergap certify` for the per-instance enumeration"
                )
                result = None
                try:
                    result = weaver.exact_w(reduced)
                    rep.add_check("exact minimum at least 1/4",
                                  result.best_value >= 0.25 - 1e-9,
                                  measured=result.best_value, bound=0.25)
                except weaver.CapExceeded:
                    if reduced.n_vectors <= 800:
                        result = weaver.heuristic_w(reduced, budget=args.budget, seed=0)
                        rep.add_check(
                            "heuristic upper bound consistent with the 1/4 gap",
                            result.best_value >= 0.25 - 1e-9,
                            measured=result.best_value, bound=0.25)
                if result is not None:
                    rep.quantities["w_value"] = result.best_value
                    rep.quantities["w_method"] = result.method
        except setsplit.SearchBudgetExceeded:
            rep.quantities["source_satisfiable"] = "unknown (budget exceeded)"
    rep.save(os.path.join(out_dir, "report.json"))
    report.write_table(
        os.path.join(out_dir, "pipeline.csv"),
        ["check", "passed", "measured"],
        [[c["name"], c["passed"], c.get("measured", "")] for c in rep.checks],
    )
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    return 0 if rep.passed else 1


def cmd_certify(args):
    out_dir = _ensure_dir(args.output)
    rep = report.Report(command="certify", config=vars(args).copy())
    rows = []
    fig_rows = []
    for path in args.inputs:
        inst = _load_instance(path)
        label = os.path.splitext(os.path.basename(path))[0]
        with rep.time_block(label):
            if args.mode == "quarter":
                cert = quarter.certify_gap_quarter(
                    inst, brute_cap=args.cap, heuristic_budget=args.budget, seed=args.seed)
                lower = cert.lower_bound
            else:
                cert = general.certify_gap_general(
                    inst, args.k, brute_cap=args.cap, heuristic_budget=args.budget,
                    seed=args.seed, rational_pi=args.rational_pi)
                lower = cert.proof_lower_bound
        rep.add_check(f"{label}: dichotomy certificate", cert.passed,
                      measured=cert.to_json())
        w_display = cert.w_value if cert.w_value is not None else cert.witness_norm
        rows.append([label, cert.satisfiable, w_display, lower, cert.passed])
        fig_rows.append((label, cert.satisfiable, w_display, lower))
        _write_json(os.path.join(out_dir, f"certificate_{label}.json"), cert.to_json())
    rep.save(os.path.join(out_dir, "report.json"))
    report.write_table(
        os.path.join(out_dir, "certify.csv"),
        ["instance", "satisfiable", "w_value", "lower_bound", "passed"],
        rows,
    )
    if not args.no_figures and fig_rows:
        report.save_certificate_figure(fig_rows, os.path.join(out_dir, "fig_certificates.png"))
    for row in rows:
        print(f"{'PASS' if row[4] else 'FAIL'}  {row[0]}: satisfiable={row[1]} W={row[2]}")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="weavergap",
        description="set splitting to Weaver discrepancy: reduce, solve, verify",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate seeded random instances or formulas")
    p.add_argument("--kind", choices=["setsplit", "unsat-setsplit", "e3"], default="setsplit")
    p.add_argument("--n-vars", type=int, default=12)
    p.add_argument("--n-sets", type=int, default=8)
    p.add_argument("--n-clauses", type=int, default=8)
    p.add_argument("--planted", action="store_true", help="plant a satisfying assignment")
    p.add_argument("--unsat-core", action="store_true", help="embed an unsatisfiable core (e3)")
    p.add_argument("--witness-output", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--cap", type=int, default=30)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", help="reduce a set-splitting instance to vectors")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--mode", choices=["quarter", "general"], default="quarter")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--rational-pi", action="store_true")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("solve", help="minimize the signed-sum operator norm")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=["exact", "heuristic", "auto"], default="auto")
    p.add_argument("--cap", type=int, default=26)
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the construction verification suites")
    p.add_argument("--suite", choices=["all"] + sorted(_SUITES), default="all")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--input", default=None, help="instance for the alpha suite")
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pipeline", help="DIMACS or instance through the full chain")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="artifact directory")
    p.add_argument("--mode", choices=["quarter", "general"], default="quarter")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--rational-pi", action="store_true")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--z-mode", choices=["copies", "single"], default="copies",
                   help="per-clause z copies (amplifying) or one shared z (compact)")
    p.add_argument("--max-dim", type=int, default=2000,
                   help="refuse dense vector reductions beyond this dimension")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("certify", help="certify the zero-vs-gap dichotomy")
    p.add_argument("--input", dest="inputs", action="append", required=True,
                   help="instance file; repeat for a corpus")
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--mode", choices=["quarter", "general"], default="quarter")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--rational-pi", action="store_true")
    p.add_argument("--cap", type=int, default=30)
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, satreduce.DimacsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
