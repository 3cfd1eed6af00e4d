"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""

from __future__ import annotations

import itertools
import random
import warnings
from collections import Counter

import pytest

from conftest import (
    all_words,
    brute_runs,
    is_abc_blocks,
    is_ambn_parity,
    is_anbn,
    is_anbncm,
    is_anbncn,
    is_equal_length,
    is_wwr,
    random_weighted_automaton,
    replay_ok,
)
from storage_automata import approx, parse, transform
from storage_automata.automaton import (
    RunBudget,
    WeightedAutomaton,
    language,
    make_automaton,
    recognizes,
    runs_on,
    unweighted,
    weight_of_word,
    weighted,
    word_weights,
)
from storage_automata.semiring import (
    BOOLEAN,
    COUNTING,
    TROPICAL,
    SaturationWarning,
    axiom_violations,
    order_violations,
)
from storage_automata.transform import ConfigurationSpaceError

MAX_LEN = 8
# pd-viterbi pushes on epsilon moves without bound, but every stack symbol is
# popped by a read later, so on words of length <= 8 stacks never exceed 8
BUDGETS = {"pd-viterbi": RunBudget(max_size=MAX_LEN)}


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def lang(m, budget=None):
    return language(m, MAX_LEN, budget)


def gold(alphabet, pred, max_len=MAX_LEN):
    return {w for w in all_words(alphabet, max_len) if pred(w)}


# --- 1 -----------------------------------------------------------------------------------------------


def test_criterion_1_language_golds(examples, report):
    tss, pd2, cnt = examples["tss-anbncn"], examples["pd2-equal-length"], examples["count-anbn"]
    checks = {}

    def same(name, m, alphabet, pred):
        got = lang(m)
        checks[name] = got.exact and set(got.words) == gold(alphabet, pred)

    same("tss-anbncn = a^n b^n c^n", tss, "abc", is_anbncn)
    same("pd2-equal-length = u#v, |u|=|v|", pd2, ["a", "b", "#", "a'", "b'"], is_equal_length)
    same("count-anbn = a^n b^n, n>=1", cnt, "ab", is_anbn)
    same("app_eo(count-anbn) = a^m b^n, m=n mod 2", approx.approximate_automaton(cnt, approx.make_eo()), "ab", is_ambn_parity)
    cf = approx.make_cf(unweighted(tss).storage)
    same("app_cf(tss) = a^n b^n c^m", approx.approximate_automaton(tss, cf), "abc", is_anbncm)
    cf_top = approx.compose(cf, approx.make_top(cf.target))
    same("app_cf;top(tss) = a^n b^m c^k", approx.approximate_automaton(tss, cf_top), "abc", is_abc_blocks)

    # longer words for the three-block patterns
    long_ok = True
    for n in range(0, 6):
        long_ok &= recognizes(tss, "a" * n + "b" * n + "c" * n).accepted
        for w in ("a" * n + "b" * n + "c" * (n + 1), "a" * (n + 1) + "b" * n + "c" * n, "a" * n + "b" * (n + 1) + "c" * n):
            long_ok &= not recognizes(tss, w).accepted
    checks["tss-anbncn on n <= 5 (length <= 15)"] = long_ok
    failed = [k for k, v in checks.items() if not v]
    report(1, not failed, f"{len(checks) - len(failed)}/{len(checks)} language checks exact" + (f"; failed: {failed}" if failed else ""))


# --- 2 -----------------------------------------------------------------------------------------------


def test_criterion_2_worked_example(examples, report):
    m = examples["pd-viterbi"]
    A = approx.make_count_abstraction(unweighted(m).storage)
    res = parse.coarse_to_fine_nbest(m, A, 1, "a#ba")
    stream = list(parse.BestFirstRuns(res.coarse, "a#ba"))
    got = {r.transitions for r in res.runs}
    expected = {("t1", "t3", "t4", "t7", "t5", "t8")}
    pre = parse.preimage_sequences(res.coarse, stream[0].transitions) if stream else []
    ok_result = got == expected
    ok_stream = len(stream) == 1
    ok_pre = len(pre) == 2
    detail = (
        f"returned {sorted(' '.join(t) for t in got)} (expected t1 t3 t4 t7 t5 t8: {ok_result}); "
        f"coarse stream has {len(stream)} runs (expected 1: {ok_stream}); "
        f"preimages of first coarse run: {len(pre)} (expected 2: {ok_pre})"
    )
    report(2, ok_result and ok_stream and ok_pre, detail)


# --- 3 -----------------------------------------------------------------------------------------------


def test_criterion_3_determinization(examples, report):
    pd2, even, pal = examples["pd2-equal-length"], examples["pd-dagger-even"], examples["pd-dagger-palindrome"]
    checks = {}
    for name, m in (("pd2-equal-length", pd2), ("pd-dagger-even", even)):
        k = len(unweighted(m).storage.gamma)
        ref = lang(m)
        for label, out in (
            ("powerset", transform.determinize_powerset(m)),
            (f"bounded k={k}", transform.determinize_bounded(m, k)),
        ):
            got = lang(out)
            checks[f"{name} {label}"] = ref.exact and got.exact and got.words == ref.words

    det = transform.determinize_bounded(pal, 2)
    got = lang(det)
    checks["bounded(pd-dagger-palindrome) = ww^R"] = got.exact and set(got.words) == gold("ab", is_wwr)

    # the split of push_Gamma is exactly push_a / push_b of the primed storage
    split = transform.determinize_bounded(even, 2)
    s_split, s_prime = unweighted(split).storage, unweighted(pal).storage
    same_instr = all(
        s_split.apply("push_Gamma#1", c) == s_prime.apply("push_a", c)
        and s_split.apply("push_Gamma#2", c) == s_prime.apply("push_b", c)
        and s_split.apply("pop_a#1", c) == s_prime.apply("pop_a", c)
        for c in [(), ("a",), ("b", "a"), ("a", "b", "b")]
    )
    checks["push_Gamma#i = push_a, push_b"] = same_instr
    failed = [k for k, v in checks.items() if not v]
    report(3, not failed, f"{len(checks) - len(failed)}/{len(checks)} equivalences hold on all words <= {MAX_LEN}" + (f"; failed: {failed}" if failed else ""))


# --- 4 and 5: catalogue ------------------------------------------------------------------------------


def catalogue(m):
    """(label, strategy) pairs applicable to the automaton's storage."""
    s = unweighted(m).storage
    out = [("id", approx.identity(s))]
    if s.family == "pushdown":
        gamma = s.gamma
        one_class = {g: "x" for g in gamma}
        rename = {g: g + "2" for g in gamma}
        out += [
            ("top", approx.make_top(s)),
            ("top-k:1", approx.make_top_k(s, 1)),
            ("top-k:2", approx.make_top_k(s, 2)),
            ("uniq", approx.make_uniq(s)),
            ("count", approx.make_count_abstraction(s)),
            ("merge-all", approx.make_merge(s, one_class)),
            ("merge-rename", approx.make_merge(s, rename)),
            ("bd-k:1", approx.make_bd_k(s, 1)),
            ("bd-k:2", approx.make_bd_k(s, 2)),
            ("bd-k:3", approx.make_bd_k(s, 3)),
            ("incomp-k:2", approx.make_incomp_k(s, one_class, 2)),
        ]
        cnt = approx.make_count_abstraction(s)
        out.append(("count;eo", approx.compose(cnt, approx.make_eo_on(cnt.target))))
    elif s.family == "count":
        out.append(("eo", approx.make_eo_on(s)))
    elif s.family == "tree-stack":
        cf = approx.make_cf(s)
        out += [
            ("cf", cf),
            ("cf;top", approx.compose(cf, approx.make_top(cf.target))),
            ("cf;top-k:2", approx.compose(cf, approx.make_top_k(cf.target, 2))),
            ("merge-all", approx.make_merge(s, {g: "x" for g in s.gamma})),
            ("merge-rename", approx.make_merge(s, {g: g + "2" for g in s.gamma})),
        ]
    return out


def test_criterion_4_inclusion_suites(examples, report):
    checked, violations = 0, []
    for name, m in examples.items():
        budget = BUDGETS.get(name)
        base = lang(m, budget).words
        for label, A in catalogue(m):
            app = lang(approx.approximate_automaton(m, A), budget).words
            if A.is_total:
                checked += 1
                missing = base - app
                if missing:
                    violations.append(f"{name}/{label}: superset fails on {sorted(missing)[:3]}")
            if A.is_injective:
                checked += 1
                extra = app - base
                if extra:
                    violations.append(f"{name}/{label}: subset fails on {sorted(extra)[:3]}")
    report(4, not violations, f"{checked} inclusion checks over words <= {MAX_LEN}, {len(violations)} violations {violations[:3]}")


def unit_tropical(m):
    return weighted(unweighted(m), TROPICAL)


def test_criterion_5_weighted_suites(examples, report):
    checked, inexact, violations = 0, [], []
    rng = random.Random(55)
    spot = 0
    for name, m in examples.items():
        budget = BUDGETS.get(name)
        wm = unit_tropical(m)
        fine, fine_exact = word_weights(wm, MAX_LEN, budget)
        # spot-check the one-pass weights against the per-word search
        for w in rng.sample(sorted(fine), min(10, len(fine))):
            spot += 1
            ww = weight_of_word(wm, w, budget)
            if not ww.exact or ww.value != fine[w]:
                violations.append(f"{name} {w}: one-pass weight {fine[w]} != per-word {ww.value}")
        for label, A in catalogue(m):
            coarse, coarse_exact = word_weights(approx.approximate_automaton(wm, A), MAX_LEN, budget)
            if not (fine_exact and coarse_exact):
                inexact.append(f"{name}/{label}")
                continue
            for w in sorted(set(fine) | set(coarse)):
                fv, cv = fine.get(w, TROPICAL.zero), coarse.get(w, TROPICAL.zero)
                if A.is_total:
                    checked += 1
                    if not TROPICAL.leq(fv, cv):
                        violations.append(f"{name}/{label} {w}: coarse {cv} below fine {fv}")
                if A.is_injective:
                    checked += 1
                    if not TROPICAL.leq(cv, fv):
                        violations.append(f"{name}/{label} {w}: coarse {cv} above fine {fv}")

    # weight of a coarse run = sum of its preimage run weights, for injective strategies
    rng = random.Random(5)
    sums = 0
    for name, m in examples.items():
        for label, A in catalogue(m):
            if not A.is_injective:
                continue
            words = sorted(lang(approx.approximate_automaton(m, A), BUDGETS.get(name)).words)[:40]
            for sr in (TROPICAL, COUNTING):
                wm = weighted(unweighted(m), sr, {t.id: rng.randint(1, 4) for t in unweighted(m).transitions})
                app_m = approx.approximate_automaton(wm, A)
                for w in words:
                    for run in runs_on(app_m, w, BUDGETS.get(name)).runs:
                        pre = parse.preimage_sequences(app_m, run.transitions)
                        fine = []
                        for theta in pre:
                            ok, _ = parse.is_run(wm, theta)
                            if not ok:
                                violations.append(f"{name}/{label} {w}: preimage {theta} of a coarse run is no run")
                            fine.append(wm.run_weight(theta))
                        sums += 1
                        total = fine[0] if fine else sr.zero
                        for v in fine[1:]:
                            total = sr.plus(total, v)
                        if total != run.weight:
                            violations.append(f"{name}/{label} {w}: coarse weight {run.weight} != preimage sum {total}")
    report(
        5,
        not violations and not inexact and checked > 0,
        f"{checked} weight inequalities, {spot} per-word spot checks, {sums} preimage-sum equalities, "
        f"inexact pairs {inexact}, {len(violations)} violations {violations[:3]}",
    )


# --- 6 -----------------------------------------------------------------------------------------------


def test_criterion_6_nbest_oracle(report):
    rng = random.Random(6)
    done, mismatches, attempts = 0, [], 0
    while done < 50:
        attempts += 1
        assert attempts < 5000, "could not generate enough automata with runs"
        kind = "pd" if done % 2 == 0 else "count"
        m = random_weighted_automaton(rng, kind)
        candidates = [w for w in language(m, 6).words if len(w) >= 1] or list(language(m, 6).words)
        if not candidates:
            continue
        w = rng.choice(sorted(candidates))
        s = unweighted(m).storage
        A = approx.make_count_abstraction(s) if kind == "pd" else approx.make_eo_on(s)
        res = parse.coarse_to_fine_nbest(m, A, 3, w)
        oracle_runs = brute_runs(unweighted(m), w, 2 * len(w) + 8)
        oracle = sorted(m.run_weight(t) for t in oracle_runs)[:3]
        got = sorted(r.weight for r in res.runs)
        done += 1
        if Counter(got) != Counter(oracle) or not res.certified:
            mismatches.append(f"{kind} {''.join(w)}: got {got}, oracle {oracle}")
    report(6, not mismatches, f"{done} random automata, {len(mismatches)} mismatches {mismatches[:3]}")


# --- 7 -----------------------------------------------------------------------------------------------


def test_criterion_7_to_fsa(examples, report):
    cnt, tss = examples["count-anbn"], examples["tss-anbncn"]
    checks = {}
    eo_m = approx.approximate_automaton(cnt, approx.make_eo())
    cf = approx.make_cf(unweighted(tss).storage)
    cft_m = approx.approximate_automaton(tss, approx.compose(cf, approx.make_top(cf.target)))
    for label, src, alphabet in (("eo(count-anbn)", eo_m, "ab"), ("cf;top(tss)", cft_m, "abc")):
        fsa = transform.to_fsa(src)
        accepted = lang(src)
        agree = accepted.exact and all(fsa.accepts(w) == (w in accepted.words) for w in all_words(alphabet, MAX_LEN))
        checks[f"{label}: {len(fsa.states)} product states"] = agree
    try:
        transform.to_fsa(cnt, 500)
        checks["count-anbn raises cap error"] = False
    except ConfigurationSpaceError:
        checks["count-anbn raises cap error"] = True
    failed = [k for k, v in checks.items() if not v]
    report(7, not failed, "; ".join(f"{k}: {'ok' if v else 'FAIL'}" for k, v in checks.items()))


# --- 8 -----------------------------------------------------------------------------------------------


def test_criterion_8_property_micro_suites(examples, report):
    rng = random.Random(8)
    law_failures = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        for sr in (BOOLEAN, TROPICAL, COUNTING):
            triples = [(sr.sample(rng), sr.sample(rng), sr.sample(rng)) for _ in range(1000)]
            law_failures += axiom_violations(sr, triples) + order_violations(sr, triples)

    replayed, replay_failures = 0, []
    monotone_streams, monotone_failures = 0, []
    words = {
        "count-anbn": ["aabb", "ab", "aaabbb"],
        "pd2-equal-length": [("a", "b", "#", "a'", "b'"), ("#",)],
        "pd-dagger-palindrome": ["abba", "aa", ""],
        "pd-dagger-even": ["abab", "ab"],
        "tss-anbncn": ["aabbcc", "abc", ""],
        "pd-viterbi": ["a#a", "a#ba", "a#ca", "aa#aa"],
    }
    for name, m in examples.items():
        budget = BUDGETS.get(name)
        wm = m if isinstance(m, WeightedAutomaton) else unit_tropical(m)
        aut = unweighted(wm)
        for w in words[name]:
            limits = parse.SearchLimits(max_run_length=2 * len(w) + 2, max_expansions=5000)
            runs = list(runs_on(wm, w, budget).runs)
            rec = recognizes(wm, w, budget)
            if rec.witness:
                runs.append(rec.witness)
            stream = list(itertools.islice(parse.BestFirstRuns(wm, w, limits), 25))
            runs += stream
            monotone_streams += 1
            if any(TROPICAL.better(b.weight, a.weight) for a, b in zip(stream, stream[1:])):
                monotone_failures.append(f"{name} {w}")
            for run in runs:
                replayed += 1
                if not replay_ok(aut, run):
                    replay_failures.append(f"{name} {w} {run.transitions}")
            if name != "tss-anbncn":
                for label, A in catalogue(m):
                    if not A.is_total:
                        continue
                    res = parse.coarse_to_fine_nbest(wm, A, 2, w, limits)
                    for run in res.runs:
                        replayed += 1
                        if not replay_ok(aut, run):
                            replay_failures.append(f"nbest {name}/{label} {w}")
                    coarse_stream = list(itertools.islice(parse.BestFirstRuns(res.coarse, w, limits), 25))
                    monotone_streams += 1
                    if any(TROPICAL.better(b.weight, a.weight) for a, b in zip(coarse_stream, coarse_stream[1:])):
                        monotone_failures.append(f"coarse {name}/{label} {w}")
    ok = not (law_failures or replay_failures or monotone_failures)
    report(
        8,
        ok,
        f"semiring laws: {len(law_failures)} violations on 3x1000 triples; "
        f"replay: {replayed} runs, {len(replay_failures)} failures; "
        f"monotone streams: {monotone_streams}, {len(monotone_failures)} failures",
    )
