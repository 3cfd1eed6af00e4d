"""Approximation strategies and approximated storages/automata.

A strategy is a partial map ``A`` from the configurations of a source storage
to those of a target storage.  The target realises ``A(p)`` and
``A⁻¹ ∘ r ∘ A`` for every source predicate ``p`` and instruction ``r`` in closed
form; ``pred_map``/``instr_map`` say which target name implements which
source name.

Most pushdown strategies here satisfy ``A(γc) = push(γ, A(c))`` and
``A(ε) = bottom`` for a small ``push`` on the target side.  Given ``push`` and
its inverse ``unpush(u) = {(γ, v) | push(γ, v) = u}`` every pushdown
predicate and instruction has an exact closed form, built by
:func:`_stack_image`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .automaton import Automaton, Transition, WeightedAutomaton, unweighted
from .semiring import sum_finite
from .storage import (
    COUNT_INSTRUCTIONS,
    PD_FAMILIES,
    ROOT_LABEL,
    DataStorage,
    StorageError,
    TreeStack,
    count_storage,
    fmt_stack,
    pushdown_storage,
    reachable_configs,
    tree_stack_storage,
)


class StrategyError(StorageError):
    pass


@dataclass(frozen=True, eq=False)
class ApproximationStrategy:
    """``map`` returns None where ``A`` is undefined."""

    name: str
    source: DataStorage
    target: DataStorage
    map: Callable[[Any], Any]
    pred_map: Mapping[str, str]
    instr_map: Mapping[str, str]
    is_total: bool
    is_injective: bool
    inverse_sample: Callable[[Any], Iterable] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.map(self.source.initial) is None:
            raise StrategyError(f"{self.name}: the initial configuration is not approximable")
        if self.map(self.source.initial) != self.target.initial:
            raise StrategyError(f"{self.name}: target initial configuration is not A(c_i)")

    def __call__(self, c):
        return self.map(c)

    def predicate(self, name: str) -> str:
        return self.pred_map[self.source.resolve_predicate(name)]

    def instruction(self, name: str) -> str:
        return self.instr_map[self.source.resolve_instruction(name)]


def approximate_storage(A: ApproximationStrategy) -> DataStorage:
    return A.target


def identity(source: DataStorage) -> ApproximationStrategy:
    return ApproximationStrategy(
        name="id",
        source=source,
        target=source,
        map=lambda c: c,
        pred_map={p: p for p in source.predicates},
        instr_map={r: r for r in source.instructions},
        is_total=True,
        is_injective=True,
        inverse_sample=lambda c: (c,),
    )


def compose(A1: ApproximationStrategy, A2: ApproximationStrategy) -> ApproximationStrategy:
    """Apply ``A1`` first, then ``A2``."""
    if A2.source is not A1.target:
        raise StrategyError(f"cannot compose {A1.name} with {A2.name}: {A2.name} is not built on {A1.name}'s target")

    def both(c):
        d = A1.map(c)
        return None if d is None else A2.map(d)

    inverse = None
    if A1.inverse_sample and A2.inverse_sample:
        inverse = lambda u: [c for d in A2.inverse_sample(u) for c in A1.inverse_sample(d)]  # noqa: E731
    return ApproximationStrategy(
        name=f"{A1.name};{A2.name}",
        source=A1.source,
        target=A2.target,
        map=both,
        pred_map={p: A2.pred_map[q] for p, q in A1.pred_map.items()},
        instr_map={r: A2.instr_map[q] for r, q in A1.instr_map.items()},
        is_total=A1.is_total and A2.is_total,
        is_injective=A1.is_injective and A2.is_injective,
        inverse_sample=inverse,
    )


# --- helpers -----------------------------------------------------------------------------------


def pd_families(s: DataStorage) -> tuple[tuple, tuple]:
    if s.family != "pushdown":
        raise StrategyError(f"expected a pushdown-like storage, got {s.kind!r}")
    if s.kind in PD_FAMILIES and "predicates" not in s.spec:
        return PD_FAMILIES[s.kind]
    return tuple(s.spec["predicates"]), tuple(s.spec["instructions"])


def _as_pushdown(source) -> DataStorage:
    if isinstance(source, DataStorage):
        return source
    return pushdown_storage(source)


def _need_k(k: int) -> int:
    if not isinstance(k, int) or k < 1:
        raise StrategyError(f"k must be a positive integer, got {k!r}")
    return k


def _identity_names(s: DataStorage):
    return {p: p for p in s.predicates}, {r: r for r in s.instructions}


def _stack_image(
    source: DataStorage,
    name: str,
    *,
    push: Callable[[str, Any], Any],
    unpush: Callable[[Any], Iterable[tuple]],
    contains: Callable[[Any], bool],
    bottom: Any,
    map_fn: Callable[[Any], Any],
    fmt: Callable[[Any], str],
    total: bool,
    injective: bool,
    inverse_sample=None,
) -> ApproximationStrategy:
    """Closed forms for ``A(p)`` and ``A⁻¹ ∘ r ∘ A`` given ``push``/``unpush``.

    ``push`` returns None where the result is undefined; ``unpush(u)`` must
    list exactly the ``(γ, v)`` with ``v`` in the image and ``push(γ, v) = u``.
    """
    pred_fams, instr_fams = pd_families(source)
    gamma = source.gamma

    def pops(u):
        return tuple(dict.fromkeys(v for _, v in unpush(u)))

    def closure(u):
        seen = {u: None}
        todo = [u]
        while todo:
            for v in pops(todo.pop()):
                if v not in seen:
                    seen[v] = None
                    todo.append(v)
        return tuple(seen)

    def pushed(g, u):
        d = push(g, u)
        return () if d is None else (d,)

    def guard(f):
        return lambda u: f(u) if contains(u) else ()

    preds: dict[str, Callable] = {}
    for fam in pred_fams:
        if fam == "Gamma*":
            preds["Gamma*"] = contains
        elif fam == "bottom":
            preds["bottom"] = lambda u: u == bottom
        elif fam == "top_":
            for g in gamma:
                preds[f"top_{g}"] = lambda u, g=g: contains(u) and any(h == g for h, _ in unpush(u))
    instrs: dict[str, Callable] = {}
    for fam in instr_fams:
        if fam == "stay":
            instrs["stay"] = guard(lambda u: (u,))
        elif fam == "pop":
            instrs["pop"] = guard(pops)
        elif fam == "pop*":
            instrs["pop*"] = guard(closure)
        elif fam == "push_":
            for g in gamma:
                instrs[f"push_{g}"] = guard(lambda u, g=g: pushed(g, u))
        elif fam == "push_Gamma":
            instrs["push_Gamma"] = guard(lambda u: tuple(d for g in gamma for d in pushed(g, u)))
        elif fam == "stay_":
            for g in gamma:
                instrs[f"stay_{g}"] = guard(lambda u, g=g: tuple(d for v in pops(u) for d in pushed(g, v)))
        elif fam == "pop_":
            for g in gamma:
                instrs[f"pop_{g}"] = guard(lambda u, g=g: tuple(dict.fromkeys(v for h, v in unpush(u) if h == g)))
        else:
            raise StrategyError(f"{name}: unsupported instruction family {fam!r}")
    target = DataStorage(
        kind=f"approx:{name}",
        predicates=preds,
        instructions=instrs,
        initial=bottom,
        spec={"kind": "approx", "strategy": name, "source": dict(source.spec)},
        trivial="Gamma*" if "Gamma*" in preds else None,
        family="stack-image",
        gamma=gamma,
        fmt=fmt,
    )
    pmap, imap = _identity_names(source)
    return ApproximationStrategy(name, source, target, map_fn, pmap, imap, total, injective, inverse_sample)


# --- pushdown catalogue -------------------------------------------------------------------------


def make_top(source) -> ApproximationStrategy:
    """Keep only the topmost symbol; the empty pushdown becomes ``@``."""
    source = _as_pushdown(source)
    gamma = source.gamma
    if ROOT_LABEL in gamma:
        raise StrategyError(f"{ROOT_LABEL!r} must not be a pushdown symbol for the top strategy")
    image = set(gamma) | {ROOT_LABEL}
    return _stack_image(
        source,
        "top",
        push=lambda g, u: g,
        unpush=lambda u: [] if u == ROOT_LABEL else [(u, v) for v in (ROOT_LABEL,) + gamma],
        contains=lambda u: u in image,
        bottom=ROOT_LABEL,
        map_fn=lambda c: c[0] if c else ROOT_LABEL,
        fmt=str,
        total=True,
        injective=False,
    )


def make_top_k(source, k: int) -> ApproximationStrategy:
    """Keep the topmost ``k`` symbols."""
    source = _as_pushdown(source)
    k = _need_k(k)
    gamma = source.gamma
    gset = set(gamma)

    def unpush(u):
        if not u:
            return []
        out = [(u[0], u[1:])]
        if len(u) == k:
            out += [(u[0], u[1:] + (x,)) for x in gamma]
        return out

    return _stack_image(
        source,
        f"top-k:{k}",
        push=lambda g, u: ((g,) + u)[:k],
        unpush=unpush,
        contains=lambda u: isinstance(u, tuple) and len(u) <= k and set(u) <= gset,
        bottom=(),
        map_fn=lambda c: c[:k],
        fmt=fmt_stack,
        total=True,
        injective=False,
    )


def uniq_push(g, u: tuple) -> tuple:
    """Push with loop erasure: pushing a symbol already present cuts back to it."""
    return u[u.index(g) :] if g in u else (g,) + u


def uniq_map(c: tuple) -> tuple:
    """Remove repetitions by erasing loops from the bottom of the pushdown upwards."""
    u: tuple = ()
    for g in reversed(c):
        u = uniq_push(g, u)
    return u


def uniq_rewrite(c: tuple) -> tuple:
    """Rewrite ``γw'γ → γ`` to a fixpoint, always on the repetition nearest the bottom."""
    c = tuple(c)
    while True:
        seen: dict = {}
        for i in range(len(c) - 1, -1, -1):
            g = c[i]
            if g in seen:
                j = seen[g]
                c = c[: i + 1] + c[j + 1 :]
                break
            seen[g] = i
        else:
            return c


def make_uniq(source) -> ApproximationStrategy:
    """Map each pushdown to a sequence without repeated symbols."""
    source = _as_pushdown(source)
    gamma = source.gamma
    gset = set(gamma)

    def unpush(u):
        if not u:
            return []
        out = [(u[0], u[1:])]
        rest = [x for x in gamma if x not in u]
        # pushing u[0] onto any xs·u with xs fresh erases back to u (xs may be empty)
        for n in range(0, len(rest) + 1):
            for xs in itertools.permutations(rest, n):
                out.append((u[0], xs + u))
        return out

    return _stack_image(
        source,
        "uniq",
        push=uniq_push,
        unpush=unpush,
        contains=lambda u: isinstance(u, tuple) and set(u) <= gset and len(set(u)) == len(u),
        bottom=(),
        map_fn=uniq_map,
        fmt=fmt_stack,
        total=True,
        injective=False,
    )


def make_bd_k(source, k: int) -> ApproximationStrategy:
    """The partial identity on pushdowns of height at most ``k``."""
    source = _as_pushdown(source)
    k = _need_k(k)
    gset = set(source.gamma)
    return _stack_image(
        source,
        f"bd-k:{k}",
        push=lambda g, u: (g,) + u if len(u) < k else None,
        unpush=lambda u: [(u[0], u[1:])] if u else [],
        contains=lambda u: isinstance(u, tuple) and len(u) <= k and set(u) <= gset,
        bottom=(),
        map_fn=lambda c: c if len(c) <= k else None,
        fmt=fmt_stack,
        total=False,
        injective=True,
        inverse_sample=lambda u: (u,),
    )


def make_merge(source, g: Mapping[str, str]) -> ApproximationStrategy:
    """Symbol-wise relabelling by ``g``; symbols missing from ``g`` keep their name.

    Works on pushdown storages (target: a pushdown over the classes) and on
    tree-stack storages (target: a tree stack over the classes).
    """
    source = _as_pushdown(source)
    g = {str(k): str(v) for k, v in g.items()}
    unknown = set(g) - set(source.gamma)
    if unknown:
        raise StrategyError(f"merge map names symbols outside the storage alphabet: {sorted(unknown)}")
    cls = {x: g.get(x, x) for x in source.gamma}
    delta = tuple(dict.fromkeys(cls.values()))
    injective = len(delta) == len(cls)
    if source.family == "tree-stack":
        if ROOT_LABEL in delta:
            raise StrategyError(f"{ROOT_LABEL!r} is reserved for the tree-stack root")
        target = tree_stack_storage(delta, source.max_arity)
        pmap = {"TS": "TS", "bottom": "bottom"}
        pmap.update({f"equals_{x}": f"equals_{cls[x]}" for x in source.gamma})
        imap = {"down": "down"}
        for n in range(1, source.max_arity + 1):
            imap[f"up_{n}"] = f"up_{n}"
            imap.update({f"push_{n}_{x}": f"push_{n}_{cls[x]}" for x in source.gamma})

        def relabel(t: TreeStack):
            return TreeStack(tuple((a, cls.get(lab, lab)) for a, lab in t.nodes), t.pointer)

        return ApproximationStrategy("merge", source, target, relabel, pmap, imap, True, injective)

    pred_fams, instr_fams = pd_families(source)
    if source.kind in PD_FAMILIES and "predicates" not in source.spec:
        target = pushdown_storage(delta, source.kind)
    else:
        target = pushdown_storage(delta, source.kind, predicates=pred_fams, instructions=instr_fams)

    def rename(fams):
        out = {}
        for fam in fams:
            if fam.endswith("_"):
                out.update({f"{fam}{x}": f"{fam}{cls[x]}" for x in source.gamma})
            else:
                out[fam] = fam
        return out

    return ApproximationStrategy(
        "merge",
        source,
        target,
        lambda c: tuple(cls[x] for x in c),
        rename(pred_fams),
        rename(instr_fams),
        True,
        injective,
    )


def make_incomp_k(source, g: Mapping[str, str], k: int) -> ApproximationStrategy:
    """Merge symbols by ``g``, then bound the height by ``k``."""
    merged = make_merge(source, g)
    out = compose(merged, make_bd_k(merged.target, k))
    return ApproximationStrategy(
        f"incomp-k:{k}", out.source, out.target, out.map, out.pred_map, out.instr_map, out.is_total, out.is_injective
    )


def make_count_abstraction(source) -> ApproximationStrategy:
    """``u ↦ |u|``: a pushdown becomes a counter."""
    source = _as_pushdown(source)
    pred_fams, instr_fams = pd_families(source)
    pred_to = {"Gamma*": "N", "bottom": "{0}", "top_": "N+"}
    instr_to = {"stay": "id", "pop": "dec", "pop*": "dec*", "push_": "inc", "push_Gamma": "inc", "stay_": "id+", "pop_": "dec"}
    used = {instr_to[f] for f in instr_fams}
    ordered = [name for name in COUNT_INSTRUCTIONS if name in used | {"inc", "dec"}]
    target = count_storage(ordered)

    def names(fams, to):
        out = {}
        for fam in fams:
            if fam.endswith("_"):
                out.update({f"{fam}{x}": to[fam] for x in source.gamma})
            else:
                out[fam] = to[fam]
        return out

    return ApproximationStrategy(
        "count", source, target, len, names(pred_fams, pred_to), names(instr_fams, instr_to), True, False
    )


# --- counters --------------------------------------------------------------------------------------

EVEN, ODD = "even", "odd"
_FLIP = {EVEN: ODD, ODD: EVEN}


def parity_storage() -> DataStorage:
    """Configurations ``even``/``odd``: the image of a counter under parity."""
    return DataStorage(
        kind="parity",
        predicates={"{even,odd}": lambda u: u in _FLIP, "{even}": lambda u: u == EVEN},
        instructions={
            "flip": lambda u: (_FLIP[u],) if u in _FLIP else (),
            "id": lambda u: (u,) if u in _FLIP else (),
            "any": lambda u: (EVEN, ODD) if u in _FLIP else (),
        },
        initial=EVEN,
        spec={"kind": "parity"},
        trivial="{even,odd}",
    )


def make_eo() -> ApproximationStrategy:
    return make_eo_on(count_storage())


def make_eo_on(source: DataStorage) -> ApproximationStrategy:
    """Parity of a counter."""
    if source.family != "count":
        raise StrategyError(f"the eo strategy needs a counter storage, got {source.kind!r}")
    pmap = {"N": "{even,odd}", "N+": "{even,odd}", "{0}": "{even}"}
    to = {"inc": "flip", "dec": "flip", "id": "id", "id+": "id", "dec*": "any"}
    imap = {r: to[r] for r in source.instructions}
    return ApproximationStrategy(
        "eo", source, parity_storage(), lambda n: EVEN if n % 2 == 0 else ODD, pmap, imap, True, False
    )


# --- tree stacks -------------------------------------------------------------------------------------


def cf_image_storage(gamma) -> DataStorage:
    return pushdown_storage(gamma, "cf-image", predicates=("Gamma*", "bottom", "top_"), instructions=("pop", "push_", "push_Gamma"))


def make_cf(source) -> ApproximationStrategy:
    """Flatten a tree stack to the labels on the path from the pointer down to the root."""
    if not isinstance(source, DataStorage):
        source = tree_stack_storage(source)
    if source.family != "tree-stack":
        raise StrategyError(f"the cf strategy needs a tree-stack storage, got {source.kind!r}")
    gamma = source.gamma
    target = cf_image_storage(gamma)
    pmap = {"TS": "Gamma*", "bottom": "bottom"}
    pmap.update({f"equals_{x}": f"top_{x}" for x in gamma})
    imap = {"down": "pop"}
    for n in range(1, source.max_arity + 1):
        imap[f"up_{n}"] = "push_Gamma"
        imap.update({f"push_{n}_{x}": f"push_{x}" for x in gamma})
    return ApproximationStrategy("cf", source, target, TreeStack.path_labels, pmap, imap, True, False)


# --- strategy specs --------------------------------------------------------------------------------------


def read_merge_map(path) -> dict[str, str]:
    """Two whitespace-separated columns per line: ``symbol class``; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip() if not line.lstrip().startswith("#") else ""
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise StrategyError(f"{path}:{lineno}: expected 'symbol class'")
        out[parts[0]] = parts[1]
    return out


def parse_strategy(text: str, source: DataStorage, merge_maps: Mapping[str, Mapping] | None = None) -> ApproximationStrategy:
    """Build one strategy on ``source`` from ``top | top-k:K | uniq | merge:FILE | bd-k:K | incomp-k:FILE,K | eo | count | cf | id``.

    ``merge_maps`` may pre-supply maps by file name; otherwise files are read.
    """
    name, _, arg = text.strip().partition(":")

    def merge_map(ref):
        if merge_maps and ref in merge_maps:
            return merge_maps[ref]
        return read_merge_map(ref)

    def int_arg(a):
        try:
            return int(a)
        except ValueError:
            raise StrategyError(f"{text!r}: {a!r} is not an integer") from None

    if name == "top":
        return make_top(source)
    if name == "top-k":
        return make_top_k(source, int_arg(arg))
    if name == "uniq":
        return make_uniq(source)
    if name == "bd-k":
        return make_bd_k(source, int_arg(arg))
    if name == "merge":
        return make_merge(source, merge_map(arg))
    if name == "incomp-k":
        ref, _, k = arg.rpartition(",")
        return make_incomp_k(source, merge_map(ref), int_arg(k))
    if name == "eo":
        return make_eo_on(source)
    if name == "count":
        return make_count_abstraction(source)
    if name == "cf":
        return make_cf(source)
    if name == "id":
        return identity(source)
    raise StrategyError(f"unknown strategy {text!r}")


def parse_chain(texts: Iterable[str], source: DataStorage, merge_maps=None) -> ApproximationStrategy:
    """Compose strategies left to right, each built on the previous target."""
    out = None
    for text in texts:
        nxt = parse_strategy(text, source if out is None else out.target, merge_maps)
        out = nxt if out is None else compose(out, nxt)
    if out is None:
        raise StrategyError("no strategy given")
    return out


# --- automata ----------------------------------------------------------------------------------------------


def approximate_automaton(m, A: ApproximationStrategy):
    """``app{A}M``: map every transition; colliding images merge and sum their weights.

    A merged transition is named after its first member with a trailing
    prime, and ``preimages`` records the members.
    """
    aut = unweighted(m)
    if aut.storage is not A.source and dict(aut.storage.spec) != dict(A.source.spec):
        raise StrategyError(f"strategy {A.name} is built for {A.source.kind!r}, automaton uses {aut.storage.kind!r}")
    groups: dict[tuple, list[Transition]] = {}
    for t in aut.transitions:
        key = (t.src, t.read, A.predicate(t.pred), A.instruction(t.instr), t.dst)
        groups.setdefault(key, []).append(t)
    ts, preimages, weights = [], {}, {}
    for (src, read, pred, instr, dst), members in groups.items():
        tid = members[0].id + "'"
        ts.append(Transition(tid, src, read, pred, instr, dst))
        preimages[tid] = tuple(t.id for t in members)
        if isinstance(m, WeightedAutomaton):
            weights[tid] = sum_finite((m.weights[t.id] for t in members), m.semiring)
    out = Automaton(aut.states, aut.alphabet, A.target, tuple(ts), aut.initial, aut.final, preimages)
    if isinstance(m, WeightedAutomaton):
        return WeightedAutomaton(out, m.semiring, weights)
    return out


def transition_map(coarse) -> dict[str, str]:
    """Fine transition id -> coarse transition id, the inverse of ``preimages``."""
    pre = unweighted(coarse).preimages or {}
    return {f: c for c, fs in pre.items() for f in fs}


# --- sampling checks -------------------------------------------------------------------------------------


def strategy_violations(A: ApproximationStrategy, depth: int = 5, limit: int = 3000) -> list[str]:
    """Check the declared closed forms and flags against ``A`` on reachable source configurations.

    Checks soundness, ``A(r(c)) ⊆ A(r)(A(c))`` and ``c ∈ p ⇒ A(c) ∈ A(p)``,
    plus the totality and injectivity flags.  Completeness of the closed
    forms is checked separately with :func:`composition_image`.
    """
    src, tgt = A.source, A.target
    sample = reachable_configs(src, depth, limit)
    out = []
    images: dict = {}
    for c in sample:
        u = A(c)
        if u is None:
            if A.is_total:
                out.append(f"{A.name}: declared total but undefined at {src.fmt(c)}")
            continue
        if A.is_injective and u in images and images[u] != c:
            out.append(f"{A.name}: declared injective but {src.fmt(c)} and {src.fmt(images[u])} collide")
        images.setdefault(u, c)
        for p, fn in src.predicates.items():
            if fn(c) and not tgt.check(A.pred_map[p], u):
                out.append(f"{A.name}: {src.fmt(c)} satisfies {p} but its image fails {A.pred_map[p]}")
        for r, fn in src.instructions.items():
            closed = set(tgt.apply(A.instr_map[r], u))
            for d in fn(c):
                v = A(d)
                if v is not None and v not in closed:
                    out.append(f"{A.name}: {r} takes {src.fmt(c)} to {src.fmt(d)} but {tgt.fmt(v)} is missing from the image")
    return out


def composition_image(A: ApproximationStrategy, instr: str, u, witnesses: Iterable) -> set:
    """``(A⁻¹ ∘ r ∘ A)(u)`` restricted to the given preimage witnesses of ``u``."""
    fn = A.source.instructions[A.source.resolve_instruction(instr)]
    out = set()
    for c in witnesses:
        if A(c) == u:
            out.update(v for v in (A(d) for d in fn(c)) if v is not None)
    return out
