"""Best-first run enumeration and coarse-to-fine n-best parsing.

The search graph has nodes ``(state, storage configuration, input position)``
and is built lazily from the automaton and the word; its paths from the
start nodes to accepting nodes are exactly the runs on the word.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Iterator, Mapping, Sequence

from .approx import ApproximationStrategy, StrategyError, approximate_automaton
from .automaton import (
    MachineConfiguration,
    Run,
    RunBudget,
    WeightedAutomaton,
    as_word,
    runs_on,
    unweighted,
)
from .storage import config_key

log = logging.getLogger(__name__)


class NonMonotoneWeights(ValueError):
    """Extending a run made it strictly better, so best-first order is unsound."""


@dataclass(frozen=True)
class SearchLimits:
    """``max_run_length=None`` means ``10·|w| + 100``.

    ``max_enumerated`` caps how often one search node may be expanded.  The
    first ``max_enumerated`` runs of a stream stay exact under the cap; a
    stream that needed more than that is cut off and flagged.
    """

    max_run_length: int | None = None
    max_expansions: int = 1_000_000
    max_enumerated: int | None = None

    def __post_init__(self):
        for name in ("max_run_length", "max_expansions", "max_enumerated"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive")

    def run_length_for(self, w: Sequence) -> int:
        return 10 * len(w) + 100 if self.max_run_length is None else self.max_run_length


@dataclass(eq=False)
class _Path:
    theta: tuple
    order: tuple  # transition indices, for tie-breaking
    node: tuple  # (state, config, pos)
    weight: object
    parent: "_Path | None"


def _trace(path: _Path, w: tuple) -> tuple:
    out = []
    while path is not None:
        q, c, pos = path.node
        out.append(MachineConfiguration(q, c, w[pos:]))
        path = path.parent
    return tuple(reversed(out))


class BestFirstRuns(Iterator[Run]):
    """Runs of a weighted automaton on ``w`` in non-increasing weight order.

    Equal weights come out in lexicographic order of transition positions.
    ``truncated`` is set when a limit stopped the search while unexplored
    paths remained.
    """

    def __init__(self, m: WeightedAutomaton, w, limits: SearchLimits | None = None):
        if not isinstance(m, WeightedAutomaton):
            raise TypeError("best-first enumeration needs a weighted automaton")
        self.m = m
        self.w = as_word(w)
        self.limits = limits or SearchLimits()
        self.truncated = False
        self.expansions = 0
        self.emitted = 0
        self._key = cmp_to_key(m.semiring.compare)
        self._tick = itertools.count()
        self._heap: list = []
        self._emitted_theta: set = set()
        self._seen_prefix: set = set()
        self._pops: dict = {}
        self._capped = False
        self._buffer: list = []
        self._done = False
        aut = m.automaton
        for q in sorted(aut.initial, key=config_key):
            self._push(_Path((), (), (q, aut.storage.initial, 0), m.semiring.one, None))

    def _push(self, p: _Path):
        key = (p.node, p.theta)
        if key in self._seen_prefix:
            return
        self._seen_prefix.add(key)
        heapq.heappush(self._heap, (self._key(p.weight), p.order, next(self._tick), p))

    def __iter__(self):
        return self

    def peek(self) -> Run | None:
        if not self._buffer and not self._done:
            nxt = self._advance()
            if nxt is None:
                self._done = True
            else:
                self._buffer.append(nxt)
        return self._buffer[0] if self._buffer else None

    def __next__(self) -> Run:
        run = self.peek()
        if run is None:
            raise StopIteration
        self._buffer.pop(0)
        return run

    def _advance(self) -> Run | None:
        m, w, lim = self.m, self.w, self.limits
        aut, sr = m.automaton, m.semiring
        max_len = lim.run_length_for(w)
        cap = lim.max_enumerated
        while self._heap:
            if cap is not None and self._capped and self.emitted >= cap:
                self.truncated = True
                return None
            if self.expansions >= lim.max_expansions:
                self.truncated = True
                self._diagnose_cycle()
                return None
            _, _, _, p = heapq.heappop(self._heap)
            q, c, pos = p.node
            count = self._pops.get(p.node, 0) + 1
            self._pops[p.node] = count
            if cap is not None and count > cap:
                self._capped = True
                continue
            self.expansions += 1
            if len(p.theta) < max_len:
                for t in aut.outgoing.get(q, ()):
                    npos = pos
                    if t.read is not None:
                        if pos >= len(w) or w[pos] != t.read:
                            continue
                        npos += 1
                    succ = aut.successors(t, c)
                    if not succ:
                        continue
                    nw = sr.times(p.weight, m.weights[t.id])
                    if sr.better(nw, p.weight):
                        raise NonMonotoneWeights(f"transition {t.id} increases the run weight; best-first order is unsound")
                    for d in sorted(succ, key=config_key):
                        self._push(_Path(p.theta + (t.id,), p.order + (aut.index[t.id],), (t.dst, d, npos), nw, p))
            elif any(aut.outgoing.get(q, ())):
                self.truncated = True
            if pos == len(w) and q in aut.final and p.theta not in self._emitted_theta:
                self._emitted_theta.add(p.theta)
                self.emitted += 1
                return Run(p.theta, _trace(p, w), p.weight)
        return None

    def _diagnose_cycle(self):
        if not self._heap:
            return
        p = self._heap[0][3]
        nodes, cur = set(), p
        while cur is not None:
            if cur.node in nodes:
                log.warning(
                    "search limit hit while the best open path revisits %r at weight %r: likely a zero-weight cycle",
                    cur.node[:1] + cur.node[2:],
                    p.weight,
                )
                return
            nodes.add(cur.node)
            cur = cur.parent


def enumerate_runs_best_first(m: WeightedAutomaton, w, limits: SearchLimits | None = None) -> BestFirstRuns:
    return BestFirstRuns(m, w, limits)


def preimage_sequences(mapping, theta: Sequence[str]) -> list[tuple]:
    """Every fine transition sequence whose pointwise image is ``theta``.

    ``mapping`` is a coarse automaton (its ``preimages``) or the preimage dict itself.
    """
    if not isinstance(mapping, Mapping):
        mapping = unweighted(mapping).preimages or {}
    return [tuple(x) for x in itertools.product(*(mapping.get(t, ()) for t in theta))]


def _simulate(m, theta: Sequence[str], starts, start_config):
    """Thread states and storage sets along ``theta``; returns the live path or None."""
    aut = unweighted(m)
    by_id = aut.by_id
    if not theta:
        return None
    first = by_id[theta[0]]
    if first.src not in starts:
        return None
    layers = [{start_config: None}]
    state = first.src
    for tid in theta:
        t = by_id[tid]
        if t.src != state:
            return None
        nxt: dict = {}
        for c in layers[-1]:
            for d in aut.successors(t, c):
                nxt.setdefault(d, c)
        if not nxt:
            return None
        layers.append(nxt)
        state = t.dst
    return layers


def _trace_from_layers(m, theta, layers, word: tuple) -> tuple:
    aut = unweighted(m)
    c = min(layers[-1], key=config_key)
    configs = [c]
    for layer in reversed(layers[1:]):
        c = layer[c]
        configs.append(c)
    configs.reverse()
    states = [aut.by_id[theta[0]].src] + [aut.by_id[t].dst for t in theta]
    trace, pos = [], 0
    for i, (q, c) in enumerate(zip(states, configs)):
        trace.append(MachineConfiguration(q, c, word[pos:]))
        if i < len(theta) and aut.by_id[theta[i]].read is not None:
            pos += 1
    return tuple(trace)


def _read_word(m, theta) -> tuple:
    aut = unweighted(m)
    return tuple(aut.by_id[t].read for t in theta if aut.by_id[t].read is not None)


def is_run(m, theta: Sequence[str], start_config=None) -> tuple[bool, Run | None]:
    """Is ``theta`` executable as a transition sequence?

    Only states and storage are threaded; the storage starts at the initial
    configuration unless ``start_config`` is given, and the trace records the
    word the run reads.
    """
    aut = unweighted(m)
    theta = tuple(theta)
    if not theta:
        return True, None
    start = aut.storage.initial if start_config is None else start_config
    layers = _simulate(aut, theta, {aut.by_id[theta[0]].src}, start)
    if layers is None:
        return False, None
    word = _read_word(aut, theta)
    weight = m.run_weight(theta) if isinstance(m, WeightedAutomaton) else None
    return True, Run(theta, _trace_from_layers(aut, theta, layers, word), weight)


def run_on_word(m, theta: Sequence[str], w) -> Run | None:
    """``theta`` as a run of ``m`` on ``w`` (initial to final state, from ``c_i``, reading exactly ``w``), or None."""
    aut = unweighted(m)
    w = as_word(w)
    theta = tuple(theta)
    if not theta:
        # the empty run: an initial state that is also final, on the empty word
        here = sorted((q for q in aut.initial if q in aut.final), key=repr)
        if w or not here:
            return None
        weight = m.semiring.one if isinstance(m, WeightedAutomaton) else None
        return Run((), (MachineConfiguration(here[0], aut.storage.initial, ()),), weight)
    if _read_word(aut, theta) != w or aut.by_id[theta[-1]].dst not in aut.final:
        return None
    layers = _simulate(aut, theta, aut.initial, aut.storage.initial)
    if layers is None:
        return None
    weight = m.run_weight(theta) if isinstance(m, WeightedAutomaton) else None
    return Run(theta, _trace_from_layers(aut, theta, layers, w), weight)


# --- coarse-to-fine n-best -------------------------------------------------------------------------


@dataclass(frozen=True)
class NBestResult:
    """``certified`` is False when a limit stopped the search before the stopping rule held."""

    runs: tuple
    certified: bool
    coarse: WeightedAutomaton | None = field(default=None, repr=False)
    coarse_popped: tuple = ()
    candidates: int = 0
    found: int = 0

    def weights(self) -> list:
        return [r.weight for r in self.runs]


def rank_runs(m: WeightedAutomaton, runs) -> list[Run]:
    """Best weight first; equal weights in lexicographic order of transition positions."""
    aut = m.automaton
    key = cmp_to_key(m.semiring.compare)
    return sorted(runs, key=lambda r: (key(r.weight), aut.transition_order(r.transitions)))


def coarse_to_fine_nbest(
    m: WeightedAutomaton,
    A: ApproximationStrategy,
    n: int,
    w,
    limits: SearchLimits | None = None,
    stop_rule: str = "printed",
) -> NBestResult:
    """The ``n`` best runs of ``m`` on ``w``, guided by the approximation ``app{A}m``.

    Coarse runs are taken best-first; each one's transition preimages that
    are runs of ``m`` on ``w`` are collected.  The loop stops once ``n`` runs
    are known and no remaining coarse run is heavier than the threshold:
    the lightest found run (``stop_rule="printed"``) or the n-th best found
    run (``stop_rule="nth"``).
    """
    if not isinstance(m, WeightedAutomaton):
        raise TypeError("n-best parsing needs a weighted automaton")
    if not A.is_total:
        raise StrategyError(f"strategy {A.name} is not total; coarse-to-fine parsing needs a superset approximation")
    if stop_rule not in ("printed", "nth"):
        raise ValueError(f"unknown stop rule {stop_rule!r}")
    if n < 0:
        raise ValueError("n must be non-negative")
    w = as_word(w)
    coarse = approximate_automaton(m, A)
    if n == 0:
        return NBestResult((), True, coarse)
    sr = m.semiring
    stream = BestFirstRuns(coarse, w, limits)
    found: dict[tuple, Run] = {}
    popped, candidates = [], 0
    certified = True
    while True:
        nxt = stream.peek()
        if nxt is None:
            certified = not stream.truncated
            break
        if len(found) >= n:
            ranked = rank_runs(m, found.values())
            threshold = ranked[-1].weight if stop_rule == "printed" else ranked[n - 1].weight
            if not sr.better(nxt.weight, threshold):
                break
        coarse_run = next(stream)
        popped.append(coarse_run)
        for theta in preimage_sequences(coarse, coarse_run.transitions):
            candidates += 1
            ok, _ = is_run(m, theta)
            if not ok or theta in found:
                continue
            run = run_on_word(m, theta, w)
            if run is not None:
                found[theta] = run
    best = tuple(rank_runs(m, found.values())[:n])
    return NBestResult(best, certified, coarse, tuple(popped), candidates, len(found))


def exhaustive_nbest(m: WeightedAutomaton, w, n: int, budget: RunBudget | None = None) -> tuple[list[Run], bool]:
    """Oracle: rank every run found by exhaustive search; the flag is False if that search was truncated."""
    rs = runs_on(m, w, budget)
    return rank_runs(m, rs.runs)[:n], not rs.truncated
