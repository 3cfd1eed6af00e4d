"""Data storages: configurations, named predicates and finitely-branching instructions.

An instruction is a function from a configuration to the finite set of its
successors; the empty set means "not applicable here".  Concrete storages
are built by the ``*_storage`` constructors below.

Pushdown configurations are tuples of symbols with index 0 as the top.
Tree-stack configurations are :class:`TreeStack` values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

Config = Hashable
Predicate = Callable[[Config], bool]
Instruction = Callable[[Config], Iterable[Config]]

ALIASES = {"Γ*": "Gamma*", "push_Γ": "push_Gamma", "TS_Γ": "TS", "ℕ": "N", "ℕ₊": "N+", "ℕ+": "N+"}


class StorageError(Exception):
    pass


class UnknownName(StorageError, KeyError):
    def __str__(self):
        return self.args[0]


@dataclass(frozen=True, eq=False)
class DataStorage:
    """A data storage ``(C, P, R, c_i)`` with named predicates and instructions.

    ``spec`` is the JSON-able description used by the file format; ``family``
    and ``gamma`` let approximation strategies recognise the shape of a
    storage (``"count"``, ``"pushdown"``, ``"tree-stack"`` or ``None``).
    """

    kind: str
    predicates: Mapping[str, Predicate]
    instructions: Mapping[str, Instruction]
    initial: Config
    spec: Mapping[str, Any]
    trivial: str | None = None
    family: str | None = None
    gamma: tuple = ()
    max_arity: int = 0
    fmt: Callable[[Config], str] = field(default=str, repr=False)

    def resolve_predicate(self, name: str) -> str:
        name = ALIASES.get(name, name)
        if name not in self.predicates:
            raise UnknownName(f"storage {self.kind!r} has no predicate {name!r}")
        return name

    def resolve_instruction(self, name: str) -> str:
        name = ALIASES.get(name, name)
        if name not in self.instructions:
            raise UnknownName(f"storage {self.kind!r} has no instruction {name!r}")
        return name

    def check(self, name: str, c: Config) -> bool:
        return bool(self.predicates[self.resolve_predicate(name)](c))

    def apply(self, name: str, c: Config) -> frozenset:
        return frozenset(self.instructions[self.resolve_instruction(name)](c))

    def __repr__(self):
        return f"<DataStorage {self.kind} {dict(self.spec)!r}>"


def check_predicate(s: DataStorage, name: str, c: Config) -> bool:
    return s.check(name, c)


def apply_instruction(s: DataStorage, name: str, c: Config) -> frozenset:
    return s.apply(name, c)


def branching_bound(s: DataStorage, sample: Iterable[Config]) -> int:
    """Largest successor-set size seen over ``sample``; evidence, not proof."""
    sample = list(sample)
    return max((len(s.apply(r, c)) for r in s.instructions for c in sample), default=0)


def reachable_configs(s: DataStorage, depth: int, limit: int = 100_000) -> list:
    """Configurations reachable from the initial one in at most ``depth`` instruction steps.

    Breadth-first, in discovery order; stops early once ``limit`` configurations are known.
    """
    seen = {s.initial: 0}
    queue = deque([s.initial])
    while queue and len(seen) < limit:
        c = queue.popleft()
        if seen[c] >= depth:
            continue
        for name in s.instructions:
            for d in s.apply(name, c):
                if d not in seen:
                    seen[d] = seen[c] + 1
                    queue.append(d)
                    if len(seen) >= limit:
                        break
    return list(seen)


def config_size(c: Any) -> int:
    """Size of a configuration: stack height, counter value, tree-stack node count, set size."""
    if isinstance(c, bool):
        return 0
    if isinstance(c, int):
        return abs(c)
    if isinstance(c, TreeStack):
        return len(c.nodes)
    if isinstance(c, (tuple, frozenset)):
        return len(c)
    return 0


def config_key(c: Any):
    """A platform-independent total sort key for configurations."""
    if isinstance(c, bool):
        return (0, int(c))
    if isinstance(c, int):
        return (1, c)
    if isinstance(c, float):
        return (1, c)
    if isinstance(c, str):
        return (2, c)
    if isinstance(c, tuple):
        return (3, tuple(config_key(x) for x in c))
    if isinstance(c, TreeStack):
        return (4, config_key(c.nodes), config_key(c.pointer))
    if isinstance(c, frozenset):
        return (5, tuple(sorted(config_key(x) for x in c)))
    return (9, repr(c))


def _add(table: dict, name: str, value) -> None:
    if name in table:
        raise StorageError(f"duplicate storage name {name!r}; choose symbols that do not collide")
    table[name] = value


def _gamma(symbols: Iterable) -> tuple:
    gamma = tuple(dict.fromkeys(str(g) for g in symbols))
    if not gamma:
        raise StorageError("the storage alphabet must be nonempty")
    return gamma


# --- Count ----------------------------------------------------------------------

COUNT_INSTRUCTIONS = {
    "inc": lambda n: (n + 1,),
    "dec": lambda n: (n - 1,) if n > 0 else (),
    # the following appear only as images of pushdown instructions
    "id": lambda n: (n,),
    "id+": lambda n: (n,) if n > 0 else (),
    "dec*": lambda n: range(n + 1),
}


def count_storage(instructions: Sequence[str] = ("inc", "dec")) -> DataStorage:
    """``Count = (N, {N, N+, {0}}, {inc, dec}, 0)``."""
    unknown = set(instructions) - set(COUNT_INSTRUCTIONS)
    if unknown:
        raise StorageError(f"unknown counter instructions {sorted(unknown)}")
    spec = {"kind": "count"}
    if tuple(instructions) != ("inc", "dec"):
        spec["instructions"] = list(instructions)
    return DataStorage(
        kind="count",
        predicates={"N": lambda n: True, "N+": lambda n: n > 0, "{0}": lambda n: n == 0},
        instructions={name: COUNT_INSTRUCTIONS[name] for name in instructions},
        initial=0,
        spec=spec,
        trivial="N",
        family="count",
    )


# --- pushdown family --------------------------------------------------------------

# instruction families; names with a trailing underscore are instantiated per symbol
PD_FAMILIES = {
    "pushdown": (("Gamma*", "bottom", "top_"), ("stay", "pop", "push_", "stay_")),
    "pushdown-popstar": (("Gamma*", "bottom", "top_"), ("stay", "pop", "push_", "stay_", "pop*")),
    "pushdown-ndpush": (("Gamma*", "bottom", "top_"), ("stay", "pop", "push_", "stay_", "push_Gamma")),
    "pushdown-dagger": (("Gamma*", "bottom"), ("stay", "push_Gamma", "pop_")),
    "pushdown-dagger-prime": (("Gamma*", "bottom"), ("stay", "push_", "pop_")),
}


def fmt_stack(w: tuple) -> str:
    if not w:
        return "ε"
    return "".join(w) if all(len(x) == 1 for x in w) else " ".join(w)


def pushdown_storage(
    gamma: Iterable,
    kind: str = "pushdown",
    *,
    predicates: Sequence[str] | None = None,
    instructions: Sequence[str] | None = None,
) -> DataStorage:
    """A storage over ``Γ*`` with a subset of the pushdown predicate/instruction families.

    ``kind`` selects one of the pushdown variants (PD, PD', PD'', PD†, (PD†)');
    explicit ``predicates``/``instructions`` family lists override it.
    """
    gamma = _gamma(gamma)
    if kind in PD_FAMILIES:
        default_preds, default_instrs = PD_FAMILIES[kind]
    elif predicates is None or instructions is None:
        raise StorageError(f"unknown pushdown kind {kind!r}")
    pred_families = tuple(predicates if predicates is not None else default_preds)
    instr_families = tuple(instructions if instructions is not None else default_instrs)

    preds: dict[str, Predicate] = {}
    for fam in pred_families:
        if fam == "Gamma*":
            _add(preds, "Gamma*", lambda w: True)
        elif fam == "bottom":
            _add(preds, "bottom", lambda w: not w)
        elif fam == "top_":
            for g in gamma:
                _add(preds, f"top_{g}", lambda w, g=g: bool(w) and w[0] == g)
        else:
            raise StorageError(f"unknown pushdown predicate family {fam!r}")

    instrs: dict[str, Instruction] = {}
    for fam in instr_families:
        if fam == "stay":
            _add(instrs, "stay", lambda w: (w,))
        elif fam == "pop":
            _add(instrs, "pop", lambda w: (w[1:],) if w else ())
        elif fam == "push_":
            for g in gamma:
                _add(instrs, f"push_{g}", lambda w, g=g: ((g,) + w,))
        elif fam == "stay_":
            for g in gamma:
                _add(instrs, f"stay_{g}", lambda w, g=g: ((g,) + w[1:],) if w else ())
        elif fam == "pop*":
            _add(instrs, "pop*", lambda w: [w[i:] for i in range(len(w) + 1)])
        elif fam == "push_Gamma":
            _add(instrs, "push_Gamma", lambda w: [(g,) + w for g in gamma])
        elif fam == "pop_":
            for g in gamma:
                _add(instrs, f"pop_{g}", lambda w, g=g: (w[1:],) if w and w[0] == g else ())
        else:
            raise StorageError(f"unknown pushdown instruction family {fam!r}")

    spec: dict[str, Any] = {"kind": kind, "gamma": list(gamma)}
    if kind not in PD_FAMILIES:
        spec["predicates"] = list(pred_families)
        spec["instructions"] = list(instr_families)
    return DataStorage(
        kind=kind,
        predicates=preds,
        instructions=instrs,
        initial=(),
        spec=spec,
        trivial="Gamma*",
        family="pushdown",
        gamma=gamma,
        fmt=fmt_stack,
    )


# --- tree-stack -------------------------------------------------------------------

ROOT_LABEL = "@"


@dataclass(frozen=True)
class TreeStack:
    """A tree stack ``<ξ, ρ>``: sorted ``(address, label)`` pairs plus the pointer address."""

    nodes: tuple
    pointer: tuple = ()

    @staticmethod
    def initial() -> "TreeStack":
        return TreeStack(nodes=(((), ROOT_LABEL),), pointer=())

    def label(self, address: tuple | None = None):
        address = self.pointer if address is None else address
        for a, lab in self.nodes:
            if a == address:
                return lab
        return None

    def has(self, address: tuple) -> bool:
        return any(a == address for a, _ in self.nodes)

    def moved(self, address: tuple) -> "TreeStack":
        return TreeStack(self.nodes, address)

    def extended(self, address: tuple, label) -> "TreeStack":
        return TreeStack(tuple(sorted(self.nodes + ((address, label),))), address)

    def path_labels(self) -> tuple:
        """Labels from the pointer down to (excluding) the root, pointer first."""
        p = self.pointer
        return tuple(self.label(p[:i]) for i in range(len(p), 0, -1))

    def is_wellformed(self) -> bool:
        addresses = {a for a, _ in self.nodes}
        if len(addresses) != len(self.nodes) or self.pointer not in addresses:
            return False
        for a, lab in self.nodes:
            if (lab == ROOT_LABEL) != (a == ()):
                return False
            if a and (a[:-1] not in addresses or min(a) < 1):
                return False
        return True


def fmt_tree_stack(t: TreeStack) -> str:
    def addr(a):
        return ".".join(map(str, a)) or "ε"

    body = ", ".join(f"{addr(a)}:{lab}" for a, lab in t.nodes)
    return f"<{{{body}}}, {addr(t.pointer)}>"


def tree_stack_storage(gamma: Iterable, max_arity: int = 8) -> DataStorage:
    """``TSS_Γ`` with child positions ``1..max_arity``."""
    gamma = _gamma(gamma)
    if ROOT_LABEL in gamma:
        raise StorageError(f"{ROOT_LABEL!r} is reserved for the tree-stack root")
    if max_arity < 1:
        raise StorageError("max_arity must be positive")

    preds: dict[str, Predicate] = {}
    _add(preds, "TS", lambda t: True)
    _add(preds, "bottom", lambda t: t.pointer == ())
    for g in gamma:
        _add(preds, f"equals_{g}", lambda t, g=g: t.label() == g)

    def down(t):
        return (t.moved(t.pointer[:-1]),) if t.pointer else ()

    def up(n):
        def go(t):
            a = t.pointer + (n,)
            return (t.moved(a),) if t.has(a) else ()

        return go

    def push(n, g):
        def go(t):
            a = t.pointer + (n,)
            return () if t.has(a) else (t.extended(a, g),)

        return go

    instrs: dict[str, Instruction] = {}
    _add(instrs, "down", down)
    for n in range(1, max_arity + 1):
        _add(instrs, f"up_{n}", up(n))
        for g in gamma:
            _add(instrs, f"push_{n}_{g}", push(n, g))

    return DataStorage(
        kind="tree-stack",
        predicates=preds,
        instructions=instrs,
        initial=TreeStack.initial(),
        spec={"kind": "tree-stack", "gamma": list(gamma), "max_arity": max_arity},
        trivial="TS",
        family="tree-stack",
        gamma=gamma,
        max_arity=max_arity,
        fmt=fmt_tree_stack,
    )


# --- trivial storage for finite-state automata --------------------------------------


def none_storage() -> DataStorage:
    return DataStorage(
        kind="none",
        predicates={"true": lambda c: True},
        instructions={"id": lambda c: (c,)},
        initial=(),
        spec={"kind": "none"},
        trivial="true",
        fmt=lambda c: "·",
    )
