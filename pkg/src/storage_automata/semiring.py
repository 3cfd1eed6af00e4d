"""Weight algebras: semirings equipped with a partial order.

Every instance is immutable.  The parser never looks at raw numbers; it
only uses ``leq``, so the tropical semiring declares its order reversed
(a smaller cost is a *greater* weight).
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, Iterable, Sequence

INF = math.inf


class SaturationWarning(RuntimeWarning):
    """A counting-semiring value reached the saturation cap."""


class IncomparableWeights(ValueError):
    """Two weights are not related by the semiring's partial order."""


@dataclass(frozen=True)
class Semiring:
    name: str
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    leq: Callable[[Any, Any], bool]
    sample: Callable[[random.Random], Any] = field(repr=False)
    coerce: Callable[[Any], Any] = field(repr=False, default=lambda v: v)
    encode: Callable[[Any], Any] = field(repr=False, default=lambda v: v)
    total_order: bool = True
    # a + b is always one of a, b (the better one): best-path shortcuts are exact
    selective: bool = False

    def better(self, a, b) -> bool:
        """True iff ``a`` is strictly greater than ``b`` in the semiring order."""
        return a != b and self.leq(b, a)

    def compare(self, a, b) -> int:
        """-1 if ``a`` ranks before ``b`` (greater weight), 1 if after, 0 if equal."""
        if a == b:
            return 0
        if self.leq(b, a):
            return -1
        if self.leq(a, b):
            return 1
        raise IncomparableWeights(f"{self.name}: {a!r} and {b!r} are incomparable")


def sum_finite(values: Iterable, sr: Semiring):
    return reduce(sr.plus, values, sr.zero)


def product_seq(values: Iterable, sr: Semiring):
    return reduce(sr.times, values, sr.one)


# --- Boolean -----------------------------------------------------------------


def _bool_coerce(v):
    if isinstance(v, bool):
        return v
    if v in (0, 1):
        return bool(v)
    raise ValueError(f"not a boolean weight: {v!r}")


BOOLEAN = Semiring(
    name="boolean",
    plus=lambda a, b: a or b,
    times=lambda a, b: a and b,
    zero=False,
    one=True,
    leq=lambda a, b: (not a) or b,
    sample=lambda rng: rng.random() < 0.5,
    coerce=_bool_coerce,
    selective=True,
)


# --- Tropical (min, +) ---------------------------------------------------------


def _nat_or_inf(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    if isinstance(v, float) and math.isinf(v) and v > 0:
        return INF
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0 or v != int(v):
        raise ValueError(f"not a natural number or infinity: {v!r}")
    return int(v)


def _encode_inf(v):
    return "inf" if v == INF else v


def _tropical_sample(rng: random.Random):
    return INF if rng.random() < 0.1 else rng.randrange(0, 50)


TROPICAL = Semiring(
    name="tropical",
    plus=min,
    times=lambda a, b: a + b,
    zero=INF,
    one=0,
    # reversed: smaller cost is the greater weight
    leq=lambda a, b: a >= b,
    sample=_tropical_sample,
    coerce=_nat_or_inf,
    encode=_encode_inf,
    selective=True,
)


# --- Counting (+, *) with saturation --------------------------------------------

DEFAULT_CAP = 2**62


def counting(cap: int = DEFAULT_CAP) -> Semiring:
    """Natural numbers with infinity; every value >= ``cap`` collapses to infinity.

    The collapse is a semiring homomorphism, so the axioms still hold.  Each
    saturation emits a :class:`SaturationWarning`.
    """
    if cap < 2:
        raise ValueError("cap must be at least 2")

    def sat(v):
        if v != INF and v >= cap:
            warnings.warn(f"counting semiring saturated at cap {cap}", SaturationWarning, stacklevel=3)
            return INF
        return v

    def plus(a, b):
        if a == INF or b == INF:
            return INF
        return sat(a + b)

    def times(a, b):
        if a == 0 or b == 0:
            return 0
        if a == INF or b == INF:
            return INF
        return sat(a * b)

    def sample(rng: random.Random):
        r = rng.random()
        if r < 0.05:
            return INF
        if r < 0.1:
            return rng.randrange(max(cap - 5, 0), cap) if cap > 10 else rng.randrange(cap)
        return rng.randrange(0, min(20, cap))

    def coerce(v):
        return sat(_nat_or_inf(v))

    name = "counting" if cap == DEFAULT_CAP else f"counting[{cap}]"
    return Semiring(
        name=name,
        plus=plus,
        times=times,
        zero=0,
        one=1,
        leq=lambda a, b: a <= b,
        sample=sample,
        coerce=coerce,
        encode=_encode_inf,
    )


COUNTING = counting()

_BY_NAME = {
    "boolean": BOOLEAN,
    "tropical": TROPICAL,
    "viterbi": TROPICAL,
    "counting": COUNTING,
}


def get_semiring(name: str) -> Semiring:
    """Look up a built-in semiring; ``counting[N]`` selects a counting semiring with cap ``N``."""
    key = name.lower().strip()
    if key.startswith("counting[") and key.endswith("]") and key[9:-1].isdigit():
        return counting(int(key[9:-1]))
    try:
        return _BY_NAME[key]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}; expected one of {sorted(_BY_NAME)}") from None


# --- law checks -----------------------------------------------------------------


def axiom_violations(sr: Semiring, triples: Iterable[Sequence]) -> list[str]:
    """Return a description of every semiring axiom broken on the given triples."""
    out = []
    p, t, z = sr.plus, sr.times, sr.zero
    for a, b, c in triples:
        checks = {
            "plus associative": p(p(a, b), c) == p(a, p(b, c)),
            "plus commutative": p(a, b) == p(b, a),
            "times associative": t(t(a, b), c) == t(a, t(b, c)),
            "left distributive": t(a, p(b, c)) == p(t(a, b), t(a, c)),
            "right distributive": t(p(b, c), a) == p(t(b, a), t(c, a)),
            "zero absorbing": t(z, a) == z and t(a, z) == z,
            "identities": p(a, z) == a and t(a, sr.one) == a and t(sr.one, a) == a,
        }
        out.extend(f"{law} fails on {(a, b, c)!r}" for law, ok in checks.items() if not ok)
    return out


def order_violations(sr: Semiring, triples: Iterable[Sequence]) -> list[str]:
    """Return every positive-order law broken on the given triples."""
    out = []
    for a, b, c in triples:
        if not sr.leq(sr.zero, a):
            out.append(f"zero <= {a!r} fails")
        if not sr.leq(a, b):
            continue
        if not sr.leq(sr.plus(a, c), sr.plus(b, c)):
            out.append(f"+ does not preserve <= on {(a, b, c)!r}")
        if not sr.leq(sr.times(a, c), sr.times(b, c)):
            out.append(f"right * does not preserve <= on {(a, b, c)!r}")
        if not sr.leq(sr.times(c, a), sr.times(c, b)):
            out.append(f"left * does not preserve <= on {(a, b, c)!r}")
    return out
