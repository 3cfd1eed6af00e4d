"""JSON automaton files: loading, validation and canonical saving."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from .automaton import Automaton, Transition, WeightedAutomaton, unweighted, validate
from .semiring import get_semiring
from .storage import (
    PD_FAMILIES,
    DataStorage,
    StorageError,
    count_storage,
    none_storage,
    pushdown_storage,
    tree_stack_storage,
)


class FormatError(ValueError):
    pass


# --- storages -----------------------------------------------------------------------------


def storage_from_spec(spec: dict) -> DataStorage:
    """Rebuild a storage from its ``spec`` description, including derived storages."""
    from . import approx, transform

    if not isinstance(spec, dict) or "kind" not in spec:
        raise FormatError("storage must be an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "count":
            return count_storage(tuple(spec.get("instructions", ("inc", "dec"))))
        if kind in PD_FAMILIES or "predicates" in spec:
            if "gamma" not in spec:
                raise FormatError(f"storage {kind!r} needs 'gamma'")
            return pushdown_storage(spec["gamma"], kind, predicates=spec.get("predicates"), instructions=spec.get("instructions"))
        if kind == "tree-stack":
            if "gamma" not in spec:
                raise FormatError("storage 'tree-stack' needs 'gamma'")
            return tree_stack_storage(spec["gamma"], int(spec.get("max_arity", 8)))
        if kind == "none":
            return none_storage()
        if kind == "parity":
            return approx.parity_storage()
        if kind == "approx":
            return approx.parse_strategy(spec["strategy"], storage_from_spec(spec["source"])).target
        if kind == "predicate-free":
            return transform.predicate_free_storage(storage_from_spec(spec["source"]), [tuple(x) for x in spec["pairs"]])
        if kind == "powerset":
            return transform.powerset_storage(storage_from_spec(spec["source"]))
        if kind == "bounded-split":
            return transform.bounded_storage(storage_from_spec(spec["source"]), int(spec["k"]))
    except StorageError as e:
        raise FormatError(f"bad storage {kind!r}: {e}") from None
    except KeyError as e:
        raise FormatError(f"storage {kind!r} is missing field {e}") from None
    raise FormatError(f"unknown storage kind {kind!r}")


# --- automata -------------------------------------------------------------------------------


def _name(ref, what: str, tid: str) -> str:
    if isinstance(ref, str):
        return ref
    if isinstance(ref, dict) and "name" in ref:
        args = ref["args"] if "args" in ref else ([ref["arg"]] if "arg" in ref else [])
        return "_".join([str(ref["name"])] + [str(a) for a in args])
    raise FormatError(f"transition {tid}: {what} must be a name or an object with 'name'")


def _state(v):
    if isinstance(v, (str, int)) and not isinstance(v, bool):
        return v
    raise FormatError(f"states must be strings or integers, got {v!r}")


def automaton_from_dict(d: dict) -> Automaton | WeightedAutomaton:
    """Build and validate an automaton; weighted iff ``semiring`` is present."""
    if not isinstance(d, dict):
        raise FormatError("automaton file must contain an object")
    for key in ("alphabet", "storage", "states", "initial", "final", "transitions"):
        if key not in d:
            raise FormatError(f"missing field {key!r}")
    storage = storage_from_spec(d["storage"])
    states = tuple(_state(q) for q in d["states"])
    alphabet = tuple(str(a) for a in d["alphabet"])
    raw = d["transitions"]
    if not isinstance(raw, list):
        raise FormatError("'transitions' must be a list")
    given = {t.get("id") for t in raw if isinstance(t, dict) and t.get("id") is not None}
    fresh = (f"t{i}" for i in range(1, 10**9) if f"t{i}" not in given)
    ts, weights, origin = [], {}, {}
    for i, t in enumerate(raw):
        if not isinstance(t, dict):
            raise FormatError(f"transition #{i + 1} must be an object")
        tid = str(t["id"]) if t.get("id") is not None else next(fresh)
        for key in ("from", "pred", "instr", "to"):
            if key not in t:
                raise FormatError(f"transition {tid}: missing field {key!r}")
        read = t.get("read", "")
        read = None if read in ("", None) else str(read)
        ts.append(
            Transition(tid, _state(t["from"]), read, _name(t["pred"], "pred", tid), _name(t["instr"], "instr", tid), _state(t["to"]))
        )
        if "weight" in t:
            weights[tid] = t["weight"]
        if "origin" in t:
            origin[tid] = tuple(str(x) for x in t["origin"])
    aut = Automaton(
        states,
        alphabet,
        storage,
        tuple(ts),
        frozenset(_state(q) for q in d["initial"]),
        frozenset(_state(q) for q in d["final"]),
        origin or None,
    )
    m: Automaton | WeightedAutomaton = aut
    if d.get("semiring") is not None:
        try:
            sr = get_semiring(str(d["semiring"]))
        except ValueError as e:
            raise FormatError(str(e)) from None
        full = {}
        for t in ts:
            raw_w = weights.get(t.id, sr.one)
            try:
                full[t.id] = sr.coerce(raw_w)
            except ValueError as e:
                raise FormatError(f"transition {t.id}: {e}") from None
        m = WeightedAutomaton(aut, sr, full)
    elif weights:
        raise FormatError("transition weights given without a 'semiring'")
    problems = validate(m)
    if problems:
        raise FormatError("invalid automaton:\n  " + "\n  ".join(problems))
    return m


def automaton_to_dict(m) -> dict:
    """Canonical form: every transition has an id; weights are written only for weighted automata."""
    aut = unweighted(m)
    out: dict[str, Any] = {
        "alphabet": list(aut.alphabet),
        "storage": aut.storage.spec,
        "states": list(aut.states),
        "initial": [q for q in aut.states if q in aut.initial],
        "final": [q for q in aut.states if q in aut.final],
    }
    if isinstance(m, WeightedAutomaton):
        out["semiring"] = m.semiring.name
    ts = []
    for t in aut.transitions:
        entry: dict[str, Any] = {"id": t.id, "from": t.src, "read": t.read or "", "pred": t.pred, "instr": t.instr, "to": t.dst}
        if isinstance(m, WeightedAutomaton):
            entry["weight"] = m.semiring.encode(m.weights[t.id])
        if aut.preimages is not None and t.id in aut.preimages:
            entry["origin"] = list(aut.preimages[t.id])
        ts.append(entry)
    out["transitions"] = ts
    return out


def dumps(m) -> str:
    return json.dumps(automaton_to_dict(m), indent=2, ensure_ascii=False) + "\n"


def loads(text: str, source: str = "<string>"):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        return automaton_from_dict(d)
    except FormatError as e:
        raise FormatError(f"{source}: {e}") from None


# --- bundled examples --------------------------------------------------------------------------


def example_names() -> list[str]:
    root = resources.files("storage_automata") / "examples"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def example_text(name: str) -> str:
    name = Path(name).name
    if name.endswith(".json"):
        name = name[:-5]
    if name not in example_names():
        raise FormatError(f"no bundled example {name!r}; available: {', '.join(example_names())}")
    return (resources.files("storage_automata") / "examples" / f"{name}.json").read_text(encoding="utf-8")


def load_example(name: str):
    return loads(example_text(name), f"example:{Path(name).name}")


def load_automaton(path) -> Automaton | WeightedAutomaton:
    """Load a file; a missing path whose base name is a bundled example loads that example."""
    p = Path(path)
    if not p.exists():
        stem = p.name[:-5] if p.name.endswith(".json") else p.name
        if stem in example_names():
            return load_example(stem)
        raise FormatError(f"{path}: no such file")
    return loads(p.read_text(encoding="utf-8"), str(path))


def save_automaton(m, path) -> None:
    Path(path).write_text(dumps(m), encoding="utf-8")
