"""Hand grips, activities, and composite blocked fields."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import ResponseField
from .errors import ParameterError, ShapeError

N_MODULES = 9

# grip id -> blocked modules, as observed in the user study
_GRIPS = {
    1: (),
    2: (1, 3, 4, 5, 7, 9),
    3: (7, 8, 9),
    4: (7, 8),
    5: (8,),
    6: (1, 2, 3, 4, 5, 7, 9),
    7: (1, 2, 3, 4, 5, 7, 8, 9),
    8: (1, 2, 3, 5, 7, 9),
    9: (4, 7, 8, 9),
    10: (1, 2, 3, 4, 5, 7),
    11: (1, 2, 3, 5, 6, 7, 8, 9),
    12: (2, 3, 4, 5, 6),
    13: (1, 2, 3),
    14: (1, 4, 7),
}

_ACTIVITIES = (
    ("Game Portrait", (3,), ("1",)),
    ("Game Landscape", (6, 7, 8), ("3/8", "2/8", "3/8")),
    ("Video Portrait", (4, 9, 12), ("3/4", "1/8", "1/8")),
    ("Video Landscape", (3, 10, 11, 12), ("1/8", "3/8", "1/4", "1/4")),
    ("Messaging Portrait", (3,), ("1",)),
    ("Messaging Landscape", (2, 6, 13), ("3/8", "1/4", "3/8")),
    ("Voice Call", (3, 4, 5), ("1/4", "1/2", "1/4")),
    ("Pocket", (14,), ("1",)),
)


@dataclass(frozen=True)
class GripProfile:
    id: int
    blocked: frozenset

    def __post_init__(self):
        blocked = frozenset(int(m) for m in self.blocked)
        if any(m < 1 or m > N_MODULES for m in blocked):
            raise ParameterError(f"grip {self.id}: module ids must lie in 1..{N_MODULES}")
        object.__setattr__(self, "blocked", blocked)

    def to_dict(self):
        return {"id": self.id, "blocked": sorted(self.blocked)}


@dataclass(frozen=True)
class ActivityProfile:
    name: str
    grips: tuple
    probabilities: tuple

    def __post_init__(self):
        grips = tuple(int(g) for g in self.grips)
        probs = tuple(Fraction(p) for p in self.probabilities)
        if len(grips) != len(probs) or not grips:
            raise ParameterError(f"activity {self.name!r}: one probability per grip required")
        if len(set(grips)) != len(grips):
            raise ParameterError(f"activity {self.name!r}: repeated grip id")
        if any(p < 0 for p in probs) or sum(probs) != 1:
            raise ParameterError(f"activity {self.name!r}: probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "grips", grips)
        object.__setattr__(self, "probabilities", probs)

    def weights(self) -> list[tuple[int, Fraction]]:
        return list(zip(self.grips, self.probabilities))

    def expected_blocked(self, grips: Mapping[int, GripProfile]) -> Fraction:
        """Probability-weighted number of blocked modules."""
        return sum((p * len(grips[g].blocked) for g, p in self.weights()), Fraction(0))

    def to_dict(self):
        return {
            "name": self.name,
            "grips": list(self.grips),
            "probs": [str(p) for p in self.probabilities],
        }


def builtin_grips() -> list[GripProfile]:
    return [GripProfile(g, frozenset(b)) for g, b in _GRIPS.items()]


def builtin_activities() -> list[ActivityProfile]:
    return [ActivityProfile(n, g, p) for n, g, p in _ACTIVITIES]


def grip_table(grips: Sequence[GripProfile]) -> dict[int, GripProfile]:
    table = {}
    for g in grips:
        if g.id in table:
            raise ParameterError(f"duplicate grip id {g.id}")
        table[g.id] = g
    return table


def check_activities(activities: Sequence[ActivityProfile], grips: Mapping[int, GripProfile]):
    for a in activities:
        missing = [g for g in a.grips if g not in grips]
        if missing:
            raise ParameterError(f"activity {a.name!r} references unknown grips {missing}")


def find_activity(activities: Sequence[ActivityProfile], name: str) -> ActivityProfile:
    key = name.strip().lower()
    for a in activities:
        if a.name.lower() == key:
            return a
    raise ParameterError(f"unknown activity {name!r}")


def load_grips(path) -> list[GripProfile]:
    """Read ``[{"id": 3, "blocked": [7, 8, 9]}, ...]``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        grips = [GripProfile(int(d["id"]), frozenset(d["blocked"])) for d in data]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"{path}: malformed grip entry ({exc})") from None
    grip_table(grips)
    return grips


def load_activities(path) -> list[ActivityProfile]:
    """Read ``[{"name": ..., "grips": [...], "probs": ["1/4", ...]}, ...]``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return [ActivityProfile(d["name"], tuple(d["grips"]), tuple(d["probs"])) for d in data]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"{path}: malformed activity entry ({exc})") from None


def grip_label(blocked) -> str:
    return "grip-" + "+".join(str(m) for m in sorted(blocked))


def compose_grip(
    free: ResponseField,
    elementary: Mapping[int, ResponseField] | Sequence[ResponseField],
    blocked,
) -> ResponseField:
    """Composite field for an arbitrary set of blocked modules.

    Per point and element, the response (phase included) is copied from the
    elementary case whose magnitude is smallest; ties go to the lowest module
    id. An empty set returns ``free`` itself.

    ``elementary`` maps module id to field; a plain sequence is taken as
    modules 1..len in order.
    """
    blocked = sorted(set(int(m) for m in blocked))
    if not blocked:
        return free
    if not isinstance(elementary, Mapping):
        elementary = {j + 1: f for j, f in enumerate(elementary)}
    missing = [j for j in blocked if j not in elementary]
    if missing:
        raise ParameterError(f"no elementary case for modules {missing}")
    cases = [elementary[j] for j in blocked]
    for c in cases:
        if not c.compatible_with(free):
            raise ShapeError(f"elementary field {c.label!r} does not match the free field grid/elements")
    if len(cases) == 1:
        return cases[0].with_responses(cases[0].responses, grip_label(blocked))
    stack = np.stack([c.responses for c in cases])
    pick = np.argmin(np.abs(stack), axis=0)
    out = np.take_along_axis(stack, pick[None], axis=0)[0]
    return free.with_responses(out, grip_label(blocked))


def compose_all(free, elementary, grips: Sequence[GripProfile]) -> dict[int, ResponseField]:
    return {g.id: compose_grip(free, elementary, g.blocked) for g in grips}
