"""Equivalence constructions: predicate-free normal form, determinization, and FSA conversion."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .automaton import Automaton, Transition, WeightedAutomaton, make_automaton, unweighted
from .storage import DataStorage, StorageError, config_key, none_storage

TRUE = "true"


class BoundExceeded(StorageError):
    """An instruction produced more successors than the declared bound."""


class ConfigurationSpaceError(StorageError):
    """The reachable (state, configuration) space did not close within the cap."""


def _rewrap(m, aut: Automaton, weights=None):
    if isinstance(m, WeightedAutomaton):
        return WeightedAutomaton(aut, m.semiring, dict(weights if weights is not None else m.weights))
    return aut


# --- predicate-free normal form --------------------------------------------------------


def restricted_name(instr: str, pred: str) -> str:
    return f"{instr}|{pred}"


def predicate_free_storage(s: DataStorage, pairs: Iterable[tuple]) -> DataStorage:
    """A storage whose only predicate is ``true`` and whose instructions are ``r`` restricted to ``p``."""
    pairs = list(dict.fromkeys((s.resolve_instruction(r), s.resolve_predicate(p)) for r, p in pairs))
    instrs = {}
    for r, p in pairs:
        rf, pf = s.instructions[r], s.predicates[p]
        instrs[restricted_name(r, p)] = lambda c, rf=rf, pf=pf: rf(c) if pf(c) else ()
    return DataStorage(
        kind="predicate-free",
        predicates={TRUE: lambda c: True},
        instructions=instrs,
        initial=s.initial,
        spec={"kind": "predicate-free", "source": dict(s.spec), "pairs": [list(x) for x in pairs]},
        trivial=TRUE,
        fmt=s.fmt,
    )


def predicate_free(m):
    """Move every predicate into its instruction: ``(q, v, p, r, q')`` becomes ``(q, v, true, r|p, q')``."""
    aut = unweighted(m)
    s = aut.storage
    pairs = [(s.resolve_instruction(t.instr), s.resolve_predicate(t.pred)) for t in aut.transitions]
    storage = predicate_free_storage(s, pairs)
    ts = tuple(
        Transition(t.id, t.src, t.read, TRUE, restricted_name(r, p), t.dst) for t, (r, p) in zip(aut.transitions, pairs)
    )
    out = Automaton(aut.states, aut.alphabet, storage, ts, aut.initial, aut.final, aut.preimages)
    return _rewrap(m, out)


# --- powerset determinization ----------------------------------------------------------------


def canonical_set(configs: Iterable) -> tuple:
    return tuple(sorted(set(configs), key=config_key))


def powerset_storage(s: DataStorage) -> DataStorage:
    """``det(S)`` restricted to finite sets, each stored as a sorted duplicate-free tuple."""
    if set(s.predicates) != {s.trivial}:
        raise StorageError("powerset construction needs a predicate-free storage; apply predicate_free first")

    def lift(rf):
        def go(d):
            out = canonical_set(x for c in d for x in rf(c))
            return (out,) if out else ()

        return go

    fmt = s.fmt
    return DataStorage(
        kind="powerset",
        predicates={TRUE: lambda d: True},
        instructions={name: lift(rf) for name, rf in s.instructions.items()},
        initial=(s.initial,),
        spec={"kind": "powerset", "source": dict(s.spec)},
        trivial=TRUE,
        fmt=lambda d: "{" + ", ".join(fmt(c) for c in d) + "}",
    )


def determinize_powerset(m):
    """Equivalent automaton over a deterministic storage of configuration sets."""
    pf = predicate_free(m)
    aut = unweighted(pf)
    storage = powerset_storage(aut.storage)
    ts = tuple(Transition(t.id, t.src, t.read, TRUE, t.instr, t.dst) for t in aut.transitions)
    out = Automaton(aut.states, aut.alphabet, storage, ts, aut.initial, aut.final, aut.preimages)
    return _rewrap(m, out)


# --- bounded non-determinism ---------------------------------------------------------------------


def split_name(instr: str, i: int) -> str:
    return f"{instr}#{i}"


def bounded_storage(s: DataStorage, k: int) -> DataStorage:
    """Replace each instruction ``r`` by ``r#1 .. r#k``; ``r#i`` picks the i-th successor in canonical order."""
    if k < 1:
        raise ValueError("bound must be positive")

    def nth(name, rf, i):
        def go(c):
            succ = sorted(set(rf(c)), key=config_key)
            if len(succ) > k:
                raise BoundExceeded(
                    f"instruction {name!r} has {len(succ)} successors at {s.fmt(c)}, more than the bound {k}"
                )
            return (succ[i - 1],) if i <= len(succ) else ()

        return go

    instrs = {}
    for name, rf in s.instructions.items():
        for i in range(1, k + 1):
            instrs[split_name(name, i)] = nth(name, rf, i)
    return DataStorage(
        kind="bounded-split",
        predicates=dict(s.predicates),
        instructions=instrs,
        initial=s.initial,
        spec={"kind": "bounded-split", "source": dict(s.spec), "k": k},
        trivial=s.trivial,
        family=None,
        gamma=s.gamma,
        fmt=s.fmt,
    )


def determinize_bounded(m, bound_k: int):
    """Split each transition into ``bound_k`` copies over a deterministic storage.

    The configurations are unchanged.  An instruction application with more
    than ``bound_k`` successors raises :class:`BoundExceeded` when it happens.
    """
    aut = unweighted(m)
    storage = bounded_storage(aut.storage, bound_k)
    ts, weights = [], {}
    for t in aut.transitions:
        instr = aut.storage.resolve_instruction(t.instr)
        for i in range(1, bound_k + 1):
            tid = split_name(t.id, i)
            ts.append(Transition(tid, t.src, t.read, t.pred, split_name(instr, i), t.dst))
            if isinstance(m, WeightedAutomaton):
                weights[tid] = m.weights[t.id]
    preimages = None
    if aut.preimages is not None:
        preimages = {split_name(t.id, i): aut.preimages[t.id] for t in aut.transitions for i in range(1, bound_k + 1)}
    out = Automaton(aut.states, aut.alphabet, storage, tuple(ts), aut.initial, aut.final, preimages)
    return _rewrap(m, out, weights)


# --- finite configuration spaces -------------------------------------------------------------------


@dataclass(frozen=True)
class FsaAutomaton:
    """A classical finite-state automaton over product states ``(q, c)``."""

    states: tuple
    alphabet: tuple
    transitions: tuple  # (src, symbol or None, dst)
    initial: frozenset
    final: frozenset
    labels: dict = field(default_factory=dict, compare=False, repr=False)

    def _closure(self, current: set) -> set:
        eps = {}
        for s, v, d in self.transitions:
            if v is None:
                eps.setdefault(s, []).append(d)
        stack = list(current)
        seen = set(current)
        while stack:
            for d in eps.get(stack.pop(), ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def accepts(self, w) -> bool:
        from .automaton import as_word

        current = self._closure(set(self.initial))
        for sym in as_word(w):
            current = self._closure({d for s, v, d in self.transitions if v == sym and s in current})
            if not current:
                return False
        return bool(current & self.final)

    def to_automaton(self) -> Automaton:
        """The same machine as an automaton over the trivial storage, with string state labels."""
        name = self.labels or {q: str(q) for q in self.states}
        ts = [(f"t{i}", name[s], v, TRUE, "id", name[d]) for i, (s, v, d) in enumerate(self.transitions, 1)]
        return make_automaton(
            none_storage(),
            ts,
            [name[q] for q in self.initial],
            [name[q] for q in self.final],
            states=[name[q] for q in self.states],
            alphabet=self.alphabet,
        )


def to_fsa(m, reachable_cap: int = 10_000) -> FsaAutomaton:
    """Product construction over reachable ``(state, configuration)`` pairs."""
    aut = unweighted(m)
    start = [(q, aut.storage.initial) for q in sorted(aut.initial, key=config_key)]
    seen = dict.fromkeys(start)
    queue = deque(start)
    edges = []
    while queue:
        q, c = queue.popleft()
        for t in aut.outgoing.get(q, ()):
            for d in aut.successors(t, c):
                nxt = (t.dst, d)
                edges.append(((q, c), t.read, nxt))
                if nxt not in seen:
                    if len(seen) >= reachable_cap:
                        raise ConfigurationSpaceError(
                            f"configuration space not finite within cap {reachable_cap}"
                        )
                    seen[nxt] = None
                    queue.append(nxt)
    states = tuple(seen)
    labels: dict[Hashable, str] = {}
    used = set()
    for q, c in states:
        label = f"{q}|{aut.storage.fmt(c)}"
        while label in used:
            label += "'"
        used.add(label)
        labels[(q, c)] = label
    return FsaAutomaton(
        states=states,
        alphabet=aut.alphabet,
        transitions=tuple(dict.fromkeys(edges)),
        initial=frozenset(start),
        final=frozenset(x for x in states if x[0] in aut.final),
        labels=labels,
    )
