"""Automata with data storage, their runs, and weighted semantics.

A run is a sequence of transition ids.  The same sequence may be executable
along several storage paths (non-deterministic instructions); it is still one
run, and every :class:`Run` carries one witnessing configuration trace.
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

from .semiring import Semiring, product_seq, sum_finite
from .storage import DataStorage, UnknownName, config_key, config_size

EPSILON = None


def as_word(w) -> tuple:
    """Strings are split into single-character symbols; other iterables are taken as-is."""
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


def fmt_word(w: Sequence) -> str:
    if not w:
        return "ε"
    return "".join(w) if all(len(x) == 1 for x in w) else " ".join(w)


@dataclass(frozen=True)
class Transition:
    id: str
    src: Hashable
    read: str | None
    pred: str
    instr: str
    dst: Hashable

    def __str__(self):
        read = "ε" if self.read is None else self.read
        return f"{self.id}=({self.src}, {read}, {self.pred}, {self.instr}, {self.dst})"


@dataclass(frozen=True, eq=False)
class Automaton:
    """An ``(S, Σ)``-automaton.

    ``preimages`` is set on approximated automata: it maps each transition id
    to the ids of the original transitions it was built from.
    """

    states: tuple
    alphabet: tuple
    storage: DataStorage
    transitions: tuple
    initial: frozenset
    final: frozenset
    preimages: Mapping[str, tuple] | None = None

    @cached_property
    def by_id(self) -> dict[str, Transition]:
        return {t.id: t for t in self.transitions}

    @cached_property
    def index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.transitions)}

    @cached_property
    def outgoing(self) -> dict[Hashable, list[Transition]]:
        out = defaultdict(list)
        for t in self.transitions:
            out[t.src].append(t)
        return dict(out)

    @cached_property
    def _compiled(self) -> dict[str, tuple]:
        # transition id -> (predicate fn, instruction fn); unknown names are caught by validate()
        s = self.storage
        out = {}
        for t in self.transitions:
            try:
                out[t.id] = (s.predicates[s.resolve_predicate(t.pred)], s.instructions[s.resolve_instruction(t.instr)])
            except UnknownName:
                out[t.id] = None
        return out

    def successors(self, t: Transition, c) -> tuple:
        """Storage successors of ``c`` under ``t``'s predicate and instruction."""
        fns = self._compiled[t.id]
        if fns is None:
            raise UnknownName(f"transition {t.id} refers to names unknown to the storage")
        pred, instr = fns
        if not pred(c):
            return ()
        return tuple(dict.fromkeys(instr(c)))

    def transition_order(self, ids: Iterable[str]) -> tuple:
        return tuple(self.index[i] for i in ids)

    @property
    def automaton(self) -> "Automaton":
        return self


@dataclass(frozen=True, eq=False)
class WeightedAutomaton:
    """An ``(S, Σ, K)``-automaton: an automaton plus a weight per transition."""

    automaton: Automaton
    semiring: Semiring
    weights: Mapping[str, Any]

    def __getattr__(self, name):
        # delegate structural attributes to the unweighted automaton
        if name.startswith("__"):
            raise AttributeError(name)
        return getattr(self.automaton, name)

    def weight(self, tid: str):
        return self.weights[tid]

    def run_weight(self, transitions: Iterable[str]):
        return product_seq((self.weights[t] for t in transitions), self.semiring)


def unweighted(m: Automaton | WeightedAutomaton) -> Automaton:
    return m.automaton


@dataclass(frozen=True)
class MachineConfiguration:
    state: Hashable
    storage: Any
    remaining: tuple


@dataclass(frozen=True)
class Run:
    transitions: tuple
    trace: tuple
    weight: Any = None

    def __len__(self):
        return len(self.transitions)


@dataclass(frozen=True)
class RunBudget:
    """Bounds for exhaustive searches; ``max_steps=None`` means ``10·|w| + 100``.

    ``max_size`` restricts the searched semantics itself: configurations larger
    than it (see :func:`config_size`) are discarded without marking a result
    inexact, so answers are exact for the size-bounded automaton.
    """

    max_steps: int | None = None
    max_configs: int = 10**6
    max_size: int | None = None

    def steps_for(self, w: Sequence) -> int:
        return 10 * len(w) + 100 if self.max_steps is None else self.max_steps

    def successors(self, aut: "Automaton", t: Transition, c) -> tuple:
        succ = aut.successors(t, c)
        if self.max_size is None:
            return succ
        return tuple(d for d in succ if config_size(d) <= self.max_size)


@dataclass(frozen=True)
class RunSet:
    runs: tuple
    truncated: bool

    def __iter__(self):
        return iter(self.runs)

    def __len__(self):
        return len(self.runs)

    def ids(self) -> set[tuple]:
        return {r.transitions for r in self.runs}


@dataclass(frozen=True)
class Recognition:
    accepted: bool
    witness: Run | None
    exact: bool

    def __bool__(self):
        return self.accepted


@dataclass(frozen=True)
class WordWeight:
    value: Any
    exact: bool


@dataclass(frozen=True)
class LanguageSample:
    """Words up to some length accepted by runs within a step budget."""

    words: frozenset
    exact: bool

    def __contains__(self, w):
        return as_word(w) in self.words


# --- single steps ---------------------------------------------------------------------


def step(m, cfg: MachineConfiguration, t: Transition) -> frozenset:
    aut = unweighted(m)
    if t.src != cfg.state:
        return frozenset()
    rest = cfg.remaining
    if t.read is not None:
        if not rest or rest[0] != t.read:
            return frozenset()
        rest = rest[1:]
    return frozenset(MachineConfiguration(t.dst, d, rest) for d in aut.successors(t, cfg.storage))


def replays(m, run: Run) -> bool:
    """True iff consecutive trace entries are related by the run's transitions."""
    aut = unweighted(m)
    if len(run.trace) != len(run.transitions) + 1:
        return False
    for tid, a, b in zip(run.transitions, run.trace, run.trace[1:]):
        if b not in step(aut, a, aut.by_id[tid]):
            return False
    return True


# --- exhaustive run enumeration -------------------------------------------------------


@dataclass(eq=False)
class _Prefix:
    theta: tuple
    state: Hashable
    pos: int
    configs: dict  # storage config -> predecessor config (None at the root)
    parent: "_Prefix | None"


def _trace_of(node: _Prefix, w: tuple, c) -> tuple:
    out = []
    while node is not None:
        out.append(MachineConfiguration(node.state, c, w[node.pos :]))
        c = node.configs[c]
        node = node.parent
    return tuple(reversed(out))


def _pick(configs) -> Any:
    return min(configs, key=config_key)


def runs_on(m, w, budget: RunBudget | None = None) -> RunSet:
    """All runs on ``w`` of length at most ``budget.max_steps``.

    Depth-first over transition sequences, tracking the set of storage
    configurations each prefix can reach.  ``truncated`` is set when the step
    or configuration budget cut off a prefix that could still be extended.
    """
    aut = unweighted(m)
    w = as_word(w)
    budget = budget or RunBudget()
    max_steps = budget.steps_for(w)
    found: dict[tuple, Run] = {}
    truncated = False
    explored = 0
    stack = [_Prefix((), q, 0, {aut.storage.initial: None}, None) for q in sorted(aut.initial, key=config_key, reverse=True)]
    while stack:
        node = stack.pop()
        explored += 1
        if explored > budget.max_configs:
            truncated = True
            break
        if node.pos == len(w) and node.state in aut.final and node.theta not in found:
            found[node.theta] = Run(node.theta, _trace_of(node, w, _pick(node.configs)))
        children = []
        for t in aut.outgoing.get(node.state, ()):
            pos = node.pos
            if t.read is not None:
                if pos >= len(w) or w[pos] != t.read:
                    continue
                pos += 1
            nxt: dict = {}
            for c in node.configs:
                for d in budget.successors(aut, t, c):
                    nxt.setdefault(d, c)
            if nxt:
                children.append(_Prefix(node.theta + (t.id,), t.dst, pos, nxt, node))
        if children and len(node.theta) >= max_steps:
            truncated = True
            continue
        stack.extend(reversed(children))
    runs = sorted(found.values(), key=lambda r: (len(r.transitions), aut.transition_order(r.transitions)))
    if isinstance(m, WeightedAutomaton):
        runs = [Run(r.transitions, r.trace, m.run_weight(r.transitions)) for r in runs]
    return RunSet(tuple(runs), truncated)


# --- membership -----------------------------------------------------------------------


def recognizes(m, w, budget: RunBudget | None = None) -> Recognition:
    """Breadth-first search over machine configurations for an accepting one.

    Returns a shortest witness run when ``w`` is accepted.  ``exact`` is False
    when the search hit a budget before finding a witness.
    """
    aut = unweighted(m)
    w = as_word(w)
    budget = budget or RunBudget()
    max_steps = budget.steps_for(w)
    c0 = aut.storage.initial
    parent: dict = {}
    depth: dict = {}
    queue = deque()
    for q in sorted(aut.initial, key=config_key):
        node = (q, c0, 0)
        if node not in parent:
            parent[node] = None
            depth[node] = 0
            queue.append(node)
    cut = False
    while queue:
        node = queue.popleft()
        q, c, pos = node
        if pos == len(w) and q in aut.final:
            return Recognition(True, _witness(m, parent, node, w), True)
        if depth[node] >= max_steps:
            cut = cut or bool(aut.outgoing.get(q))
            continue
        for t in aut.outgoing.get(q, ()):
            npos = pos
            if t.read is not None:
                if pos >= len(w) or w[pos] != t.read:
                    continue
                npos += 1
            for d in budget.successors(aut, t, c):
                nxt = (t.dst, d, npos)
                if nxt in parent:
                    continue
                if len(parent) >= budget.max_configs:
                    cut = True
                    break
                parent[nxt] = (node, t.id)
                depth[nxt] = depth[node] + 1
                queue.append(nxt)
    return Recognition(False, None, not cut)


def _witness(m, parent: dict, node, w) -> Run:
    ids, trace = [], []
    while node is not None:
        q, c, pos = node
        trace.append(MachineConfiguration(q, c, w[pos:]))
        link = parent[node]
        if link is None:
            break
        node, tid = link
        ids.append(tid)
    ids.reverse()
    trace.reverse()
    weight = m.run_weight(ids) if isinstance(m, WeightedAutomaton) else None
    return Run(tuple(ids), tuple(trace), weight)


# --- weighted semantics -----------------------------------------------------------------


def weight_of_word(m: WeightedAutomaton, w, budget: RunBudget | None = None, method: str = "auto") -> WordWeight:
    """The weight ``⟦M⟧(w)``: the semiring sum of the weights of all runs on ``w``.

    ``method="runs"`` sums over :func:`runs_on`.  ``method="best"`` is valid for
    selective semirings only (the sum of a set is its best element) and runs a
    best-first search over machine configurations instead, which stays exact
    when the search space is infinite.  ``"auto"`` picks ``best`` whenever it
    is valid.
    """
    if method == "auto":
        method = "best" if m.semiring.selective and m.semiring.total_order else "runs"
    if method == "runs":
        rs = runs_on(m, w, budget)
        return WordWeight(sum_finite((r.weight for r in rs), m.semiring), not rs.truncated)
    if method == "best":
        return _best_weight(m, as_word(w), budget or RunBudget())
    raise ValueError(f"unknown method {method!r}")


def _best_weight(m: WeightedAutomaton, w: tuple, budget: RunBudget) -> WordWeight:
    sr = m.semiring
    if not (sr.selective and sr.total_order):
        raise ValueError(f"best-path weights need a selective, totally ordered semiring, not {sr.name}")
    from functools import cmp_to_key

    key = cmp_to_key(sr.compare)
    aut = m.automaton
    tick = itertools.count()
    best: dict = {}
    heap = []
    for q in sorted(aut.initial, key=config_key):
        node = (q, aut.storage.initial, 0)
        best[node] = sr.one
        heapq.heappush(heap, (key(sr.one), 0, next(tick), node))
    done = set()
    max_steps = budget.steps_for(w)
    cut = False
    while heap:
        _, steps, _, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        q, c, pos = node
        wt = best[node]
        if pos == len(w) and q in aut.final:
            # a path cut by the step budget might have led to something better
            return WordWeight(wt, not cut)
        if wt == sr.zero:
            # every extension stays zero; nothing better can come
            break
        if steps >= max_steps:
            cut = True
            continue
        for t in aut.outgoing.get(q, ()):
            npos = pos
            if t.read is not None:
                if pos >= len(w) or w[pos] != t.read:
                    continue
                npos += 1
            nw = sr.times(wt, m.weights[t.id])
            if sr.better(nw, wt):
                raise ValueError(f"transition {t.id} increases the weight; best-first search is unsound")
            for d in budget.successors(aut, t, c):
                nxt = (t.dst, d, npos)
                if nxt in done:
                    continue
                if nxt not in best and len(best) >= budget.max_configs:
                    cut = True
                    continue
                if nxt not in best or sr.better(nw, best[nxt]):
                    best[nxt] = nw
                    heapq.heappush(heap, (key(nw), steps + 1, next(tick), nxt))
    return WordWeight(sr.zero, not cut)


# --- bounded languages ----------------------------------------------------------------------


def language(m, max_len: int, budget: RunBudget | None = None) -> LanguageSample:
    """Every word of length ``<= max_len`` that has a run of at most ``budget.max_steps`` steps.

    One simulation over the trie of input prefixes; each prefix carries the
    set of reachable ``(state, storage)`` pairs with the fewest steps used.
    Dead prefixes are not extended.  ``exact`` is False when some pair could
    still move but the step or configuration budget stopped it.
    """
    aut = unweighted(m)
    budget = budget or RunBudget()
    max_steps = budget.max_steps if budget.max_steps is not None else 10 * max_len + 100
    eps = defaultdict(list)
    reading = defaultdict(list)
    for t in aut.transitions:
        (eps if t.read is None else reading)[t.src].append(t)
    exact = True

    def closure(seed: dict) -> dict:
        nonlocal exact
        best = dict(seed)
        heap = [(s, i, k) for i, (k, s) in enumerate(seed.items())]
        heapq.heapify(heap)
        tick = itertools.count(len(heap))
        while heap:
            s, _, k = heapq.heappop(heap)
            if best.get(k, s) < s:
                continue
            q, c = k
            for t in eps.get(q, ()):
                succ = budget.successors(aut, t, c)
                if not succ:
                    continue
                if s >= max_steps:
                    exact = False
                    break
                for d in succ:
                    nk = (t.dst, d)
                    if nk in best and best[nk] <= s + 1:
                        continue
                    if nk not in best and len(best) >= budget.max_configs:
                        exact = False
                        continue
                    best[nk] = s + 1
                    heapq.heappush(heap, (s + 1, next(tick), nk))
        return best

    accepted = set()
    queue = deque([((), closure({(q, aut.storage.initial): 0 for q in aut.initial}))])
    while queue:
        prefix, confs = queue.popleft()
        if any(q in aut.final for q, _ in confs):
            accepted.add(prefix)
        if len(prefix) >= max_len:
            continue
        nxt: dict = defaultdict(dict)
        for (q, c), s in confs.items():
            for t in reading.get(q, ()):
                succ = budget.successors(aut, t, c)
                if not succ:
                    continue
                if s >= max_steps:
                    exact = False
                    continue
                bucket = nxt[t.read]
                for d in succ:
                    k = (t.dst, d)
                    if bucket.get(k, max_steps + 1) > s + 1:
                        bucket[k] = s + 1
        for sym in sorted(nxt):
            queue.append((prefix + (sym,), closure(nxt[sym])))
    return LanguageSample(frozenset(accepted), exact)


def word_weights(m: WeightedAutomaton, max_len: int, budget: RunBudget | None = None) -> tuple[dict, bool]:
    """``⟦M⟧(w)`` for every word of length ``<= max_len`` with a nonzero weight, in one pass.

    Selective, totally ordered semirings only.  Like :func:`language`, but each
    prefix maps ``(state, storage)`` to its best weight, found best-first.  The
    flag is False when the step or configuration budget cut a path.
    """
    sr = m.semiring
    if not (sr.selective and sr.total_order):
        raise ValueError(f"best-path weights need a selective, totally ordered semiring, not {sr.name}")
    from functools import cmp_to_key

    key = cmp_to_key(sr.compare)
    aut = m.automaton
    budget = budget or RunBudget()
    max_steps = budget.max_steps if budget.max_steps is not None else 10 * max_len + 100
    eps = defaultdict(list)
    reading = defaultdict(list)
    for t in aut.transitions:
        (eps if t.read is None else reading)[t.src].append(t)
    exact = True

    def closure(seed: dict) -> dict:
        # seed: (state, storage) -> (weight, steps); settles every pair at its best weight
        nonlocal exact
        tick = itertools.count()
        heap = [(key(wt), s, next(tick), k) for k, (wt, s) in seed.items()]
        heapq.heapify(heap)
        best = dict(seed)
        done: dict = {}
        while heap:
            _, s, _, k = heapq.heappop(heap)
            if k in done:
                continue
            wt = best[k][0]
            done[k] = (wt, s)
            q, c = k
            for t in eps.get(q, ()):
                succ = budget.successors(aut, t, c)
                if not succ:
                    continue
                if s >= max_steps:
                    exact = False
                    break
                nw = sr.times(wt, m.weights[t.id])
                if sr.better(nw, wt):
                    raise ValueError(f"transition {t.id} increases the weight; best-first search is unsound")
                for d in succ:
                    nk = (t.dst, d)
                    if nk in done:
                        continue
                    if nk not in best and len(best) >= budget.max_configs:
                        exact = False
                        continue
                    if nk not in best or sr.better(nw, best[nk][0]):
                        best[nk] = (nw, s + 1)
                        heapq.heappush(heap, (key(nw), s + 1, next(tick), nk))
        return done

    out: dict = {}
    queue = deque([((), closure({(q, aut.storage.initial): (sr.one, 0) for q in aut.initial}))])
    while queue:
        prefix, confs = queue.popleft()
        finals = [wt for (q, _), (wt, _) in confs.items() if q in aut.final]
        if finals:
            value = sum_finite(finals, sr)
            if value != sr.zero:
                out[prefix] = value
        if len(prefix) >= max_len:
            continue
        nxt: dict = defaultdict(dict)
        for (q, c), (wt, s) in confs.items():
            if wt == sr.zero:
                continue
            for t in reading.get(q, ()):
                succ = budget.successors(aut, t, c)
                if not succ:
                    continue
                if s >= max_steps:
                    exact = False
                    continue
                nw = sr.times(wt, m.weights[t.id])
                bucket = nxt[t.read]
                for d in succ:
                    k = (t.dst, d)
                    if k not in bucket or sr.better(nw, bucket[k][0]):
                        bucket[k] = (nw, s + 1)
        for sym in sorted(nxt):
            queue.append((prefix + (sym,), closure(nxt[sym])))
    return out, exact


def all_words(alphabet: Iterable, max_len: int):
    alphabet = tuple(alphabet)
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# --- validation -----------------------------------------------------------------------------


def validate(m) -> list[str]:
    aut = unweighted(m)
    out = []
    states = set(aut.states)
    if not aut.alphabet:
        out.append("alphabet is empty")
    if len(set(aut.alphabet)) != len(aut.alphabet):
        out.append("alphabet has duplicate symbols")
    for q in sorted(set(aut.initial) - states, key=config_key):
        out.append(f"initial state {q!r} is not a state")
    for q in sorted(set(aut.final) - states, key=config_key):
        out.append(f"final state {q!r} is not a state")
    seen = set()
    alphabet = set(aut.alphabet)
    for t in aut.transitions:
        if t.id in seen:
            out.append(f"duplicate transition id {t.id!r}")
        seen.add(t.id)
        for end in (t.src, t.dst):
            if end not in states:
                out.append(f"transition {t.id}: {end!r} is not a state")
        if t.read is not None and t.read not in alphabet:
            out.append(f"transition {t.id}: symbol {t.read!r} is not in the alphabet")
        try:
            aut.storage.resolve_predicate(t.pred)
        except UnknownName as e:
            out.append(f"transition {t.id}: {e}")
        try:
            aut.storage.resolve_instruction(t.instr)
        except UnknownName as e:
            out.append(f"transition {t.id}: {e}")
    if isinstance(m, WeightedAutomaton):
        for t in aut.transitions:
            if t.id not in m.weights:
                out.append(f"transition {t.id} has no weight")
                continue
            try:
                m.semiring.coerce(m.weights[t.id])
            except ValueError as e:
                out.append(f"transition {t.id}: {e}")
        for tid in sorted(set(m.weights) - seen):
            out.append(f"weight given for unknown transition {tid!r}")
    return out


def make_automaton(
    storage: DataStorage,
    transitions: Iterable,
    initial: Iterable,
    final: Iterable,
    *,
    states: Iterable | None = None,
    alphabet: Iterable | None = None,
    preimages: Mapping[str, tuple] | None = None,
) -> Automaton:
    """Build an automaton from ``(id, src, read, pred, instr, dst)`` tuples or Transitions.

    States and alphabet default to those mentioned by the transitions.
    """
    ts = tuple(t if isinstance(t, Transition) else Transition(*t) for t in transitions)
    initial, final = frozenset(initial), frozenset(final)
    if states is None:
        mentioned = dict.fromkeys(itertools.chain(initial, final, *((t.src, t.dst) for t in ts)))
        states = sorted(mentioned, key=config_key)
    if alphabet is None:
        alphabet = sorted({t.read for t in ts if t.read is not None})
    return Automaton(tuple(states), tuple(alphabet), storage, ts, initial, final, preimages)


def weighted(aut: Automaton, semiring: Semiring, weights: Mapping[str, Any] | None = None) -> WeightedAutomaton:
    """Attach weights; transitions without an entry get the semiring's one."""
    weights = dict(weights or {})
    full = {t.id: semiring.coerce(weights.pop(t.id, semiring.one)) for t in aut.transitions}
    full.update(weights)  # unknown ids are kept so that validate() can report them
    return WeightedAutomaton(aut, semiring, full)
