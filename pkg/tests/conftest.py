"""Shared oracles and generators.

The oracles here deliberately avoid the library's search code: they walk
every transition sequence breadth-first and apply storage instructions one
configuration at a time.
"""

from __future__ import annotations

import itertools
import random

import pytest

from storage_automata import load_example
from storage_automata.automaton import make_automaton, weighted
from storage_automata.semiring import TROPICAL
from storage_automata.storage import count_storage, pushdown_storage


def all_words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def brute_runs(aut, w, max_len):
    """Set of transition-id tuples that are runs on ``w`` with at most ``max_len`` steps."""
    w = tuple(w)
    s = aut.storage
    frontier = [((), q, s.initial, 0) for q in aut.initial]
    found = set()
    for _ in range(max_len + 1):
        nxt = []
        for theta, q, c, pos in frontier:
            if pos == len(w) and q in aut.final:
                found.add(theta)
            if len(theta) == max_len:
                continue
            for t in aut.transitions:
                if t.src != q:
                    continue
                npos = pos
                if t.read is not None:
                    if pos >= len(w) or w[pos] != t.read:
                        continue
                    npos += 1
                if not s.check(t.pred, c):
                    continue
                for d in s.apply(t.instr, c):
                    nxt.append((theta + (t.id,), t.dst, d, npos))
        frontier = nxt
    return found


def replay_ok(aut, run) -> bool:
    """Independent replay: every trace step is one transition applied by hand."""
    s = aut.storage
    if len(run.trace) != len(run.transitions) + 1:
        return False
    for tid, a, b in zip(run.transitions, run.trace, run.trace[1:]):
        t = aut.by_id[tid]
        if a.state != t.src or b.state != t.dst:
            return False
        rest = a.remaining
        if t.read is not None:
            if not rest or rest[0] != t.read:
                return False
            rest = rest[1:]
        if b.remaining != rest or not s.check(t.pred, a.storage) or b.storage not in s.apply(t.instr, a.storage):
            return False
    return True


# --- golds ------------------------------------------------------------------------------------------


def is_anbncn(w) -> bool:
    n = len(w) // 3
    return len(w) % 3 == 0 and tuple(w) == ("a",) * n + ("b",) * n + ("c",) * n


def is_equal_length(w) -> bool:
    if w.count("#") != 1:
        return False
    i = w.index("#")
    u, v = w[:i], w[i + 1 :]
    return set(u) <= {"a", "b"} and set(v) <= {"a'", "b'"} and len(u) == len(v)


def is_anbn(w) -> bool:
    n = len(w) // 2
    return n >= 1 and len(w) % 2 == 0 and tuple(w) == ("a",) * n + ("b",) * n


def is_ambn_parity(w) -> bool:
    m = 0
    while m < len(w) and w[m] == "a":
        m += 1
    rest = w[m:]
    n = len(rest)
    return n >= 1 and all(x == "b" for x in rest) and (m - n) % 2 == 0


def is_anbncm(w) -> bool:
    i = 0
    while i < len(w) and w[i] == "a":
        i += 1
    j = i
    while j < len(w) and w[j] == "b":
        j += 1
    return j - i == i and all(x == "c" for x in w[j:])


def is_abc_blocks(w) -> bool:
    order = {"a": 0, "b": 1, "c": 2}
    return all(order[x] <= order[y] for x, y in zip(w, w[1:]))


def is_wwr(w) -> bool:
    return len(w) % 2 == 0 and tuple(w) == tuple(reversed(w))


# --- random automata ------------------------------------------------------------------------------


def random_weighted_automaton(rng: random.Random, kind: str):
    """At most 4 states and 8 transitions; epsilon moves only go to higher-numbered states."""
    n_states = rng.randint(2, 4)
    states = list(range(1, n_states + 1))
    alphabet = ["a", "b"]
    if kind == "pd":
        storage = pushdown_storage(["x", "y"])
        preds = ["Gamma*", "bottom", "top_x", "top_y"]
        instrs = ["stay", "pop", "push_x", "push_y", "stay_x", "stay_y"]
    else:
        storage = count_storage()
        preds = ["N", "N+", "{0}"]
        instrs = ["inc", "dec"]
    ts = []
    for i in range(1, rng.randint(3, 8) + 1):
        src = rng.choice(states)
        if rng.random() < 0.25 and src < n_states:
            read, dst = None, rng.randint(src + 1, n_states)
        else:
            read, dst = rng.choice(alphabet), rng.choice(states)
        ts.append((f"t{i}", src, read, rng.choice(preds), rng.choice(instrs), dst))
    final = rng.sample(states, rng.randint(1, 2))
    aut = make_automaton(storage, ts, [1], final, states=states, alphabet=alphabet)
    weights = {t[0]: rng.randint(0, 5) for t in ts}
    return weighted(aut, TROPICAL, weights)


@pytest.fixture(scope="session")
def examples():
    names = ["count-anbn", "pd2-equal-length", "pd-dagger-palindrome", "pd-dagger-even", "tss-anbncn", "pd-viterbi"]
    return {n: load_example(n) for n in names}
