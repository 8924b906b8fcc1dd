"""
Analog beam codebooks: candidate generation and greedy max-coverage design.

A codeword drives exactly one module. Its nonzero weights share the modulus
``1/sqrt(n_active)`` and their phases sit on the ``2**n_bits`` grid of the
phase shifters, so every codeword has unit total power.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import DirectionGrid, ResponseField, gain_matrix
from .errors import FormatError, ParameterError, ShapeError

logger = logging.getLogger(__name__)

SCHEMES = ("agnostic", "semi", "aware")


@dataclass(frozen=True)
class Codeword:
    module: int
    elements: tuple
    phases: tuple
    n_bits: int
    n_elements: int

    def __post_init__(self):
        if len(self.elements) != len(self.phases) or not self.elements:
            raise ParameterError("a codeword needs one phase index per active element")
        levels = 2**self.n_bits
        if any(not (0 <= p < levels) for p in self.phases):
            raise ParameterError(f"phase indices must lie in [0, {levels})")
        if any(not (0 <= e < self.n_elements) for e in self.elements):
            raise ParameterError("element index out of range")

    @property
    def key(self):
        return (self.module, self.elements, self.phases)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.zeros(self.n_elements, dtype=np.complex128)
        levels = 2**self.n_bits
        angles = 2.0 * np.pi * np.asarray(self.phases, dtype=float) / levels
        w[list(self.elements)] = np.exp(1j * angles) / np.sqrt(len(self.elements))
        w.setflags(write=False)
        return w

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return self.key == other.key and self.n_bits == other.n_bits and self.n_elements == other.n_elements

    def __hash__(self):
        return hash((self.key, self.n_bits, self.n_elements))


def quantize_phases(angles, n_bits: int) -> np.ndarray:
    """Nearest phase-shifter state index for each angle (radians)."""
    if n_bits < 1:
        raise ParameterError("n_bits must be >= 1")
    levels = 2**n_bits
    step = 2.0 * np.pi / levels
    return np.mod(np.round(np.asarray(angles, dtype=float) / step), levels).astype(np.int64)


def matched_codeword(response, elements, module, n_bits, n_elements) -> Codeword:
    """Constant-modulus, quantised version of the matched filter ``conj(M)``.

    Restricted to one module the gain operator ``M^H M`` is rank one, so its
    principal eigenvector is ``conj(M)`` up to scale; only its phases survive
    the phase-shifter constraint.
    """
    sub = np.asarray(response)[list(elements)]
    idx = quantize_phases(-np.angle(sub), n_bits)
    return Codeword(int(module), tuple(int(e) for e in elements), tuple(idx.tolist()), n_bits, n_elements)


def _stack(codewords) -> np.ndarray:
    if not codewords:
        raise ParameterError("no codewords")
    return np.stack([c.weights for c in codewords])


@dataclass(frozen=True)
class CandidateSet:
    codewords: tuple
    source_points: tuple

    def __len__(self):
        return len(self.codewords)

    def weight_matrix(self) -> np.ndarray:
        return _stack(self.codewords)


def seed_points(n_points: int, n_seed: int) -> np.ndarray:
    """Every ``n_points // n_seed``-th grid index, ``n_seed`` of them."""
    if n_seed < 1 or n_seed > n_points:
        raise ParameterError(f"n_seed must lie in [1, {n_points}], got {n_seed}")
    return np.arange(n_seed) * (n_points // n_seed)


def build_candidates(
    field: ResponseField,
    grid: DirectionGrid | None = None,
    n_seed: int = 363,
    n_bits: int = 4,
    modules: Sequence[int] | None = None,
) -> CandidateSet:
    """One quantised matched-filter codeword per (seed direction, module), deduplicated."""
    grid = field.grid if grid is None else grid
    if not grid.same_as(field.grid):
        raise ShapeError("field is not defined on the requested grid")
    seeds = seed_points(grid.n_points, n_seed)
    modules = field.modules if modules is None else list(modules)
    members = {m: field.elements_of(m) for m in modules}
    seen = set()
    out = []
    for i in seeds:
        row = field.responses[i]
        for m in modules:
            cw = matched_codeword(row, members[m], m, n_bits, field.n_elements)
            if cw.key not in seen:
                seen.add(cw.key)
                out.append(cw)
    return CandidateSet(tuple(out), tuple(int(i) for i in seeds))


def merge_candidates(*sets: CandidateSet) -> CandidateSet:
    seen = set()
    out = []
    points = []
    for s in sets:
        points.extend(s.source_points)
        for c in s.codewords:
            if c.key not in seen:
                seen.add(c.key)
                out.append(c)
    return CandidateSet(tuple(out), tuple(points))


@dataclass(frozen=True)
class Codebook:
    codewords: tuple
    scheme: str = "custom"
    tag: object = None
    objective: tuple = ()

    def __post_init__(self):
        if len(set(self.codewords)) != len(self.codewords):
            raise ParameterError("codebook contains repeated codewords")

    def __len__(self):
        return len(self.codewords)

    def weight_matrix(self) -> np.ndarray:
        return _stack(self.codewords)

    def same_codewords(self, other: "Codebook") -> bool:
        return list(self.codewords) == list(other.codewords)


def _normalise_weights(fields):
    pairs = [(f, w) for f, w in fields]
    if not pairs:
        raise ParameterError("at least one field is required")
    weights = [w for _, w in pairs]
    if all(isinstance(w, (int, Fraction)) for w in weights):
        if sum(Fraction(w) for w in weights) != 1:
            raise ParameterError("field weights must sum to 1")
    elif abs(sum(float(w) for w in weights) - 1.0) > 1e-12:
        raise ParameterError("field weights must sum to 1")
    if any(float(w) < 0 for w in weights):
        raise ParameterError("field weights must be nonnegative")
    return pairs


# Scores closer than this (relative) count as ties. Candidates that differ
# by a global phase rotation have identical gains in exact arithmetic, but the
# BLAS summation order can separate them by a few ulps.
TIE_RTOL = 1e-12


def _first_max(score) -> int:
    """Lowest index whose score ties with the maximum."""
    top = score.max()
    return int(np.flatnonzero(score >= top - TIE_RTOL * abs(top))[0])


def greedy_design(
    candidates: CandidateSet,
    fields: Sequence[tuple[ResponseField, object]],
    grid: DirectionGrid | None = None,
    n_codewords: int = 15,
    restrict: bool = True,
    scheme: str = "custom",
    tag=None,
) -> Codebook:
    """Greedy maximisation of the weighted mean spherical coverage.

    Each round appends the unused candidate that maximises
    ``sum_j p_j * mean_i max(G_ij(w), best_ij)``, where ``best_ij`` is the
    running best gain of field ``j`` at point ``i``. Ties, up to
    ``TIE_RTOL`` rounding, go to the lowest candidate index. With
    ``restrict`` the mean runs over the grid's evaluation region only.
    """
    if len(candidates) == 0:
        raise ParameterError("candidate set is empty")
    if not (1 <= n_codewords <= len(candidates)):
        raise ParameterError(f"n_codewords must lie in [1, {len(candidates)}], got {n_codewords}")
    pairs = _normalise_weights(fields)
    grid = pairs[0][0].grid if grid is None else grid
    for f, _ in pairs:
        if not grid.same_as(f.grid):
            raise ShapeError(f"field {f.label!r} is not defined on the design grid")
    sel = grid.selection(restrict)
    W = candidates.weight_matrix()
    tables = [gain_matrix(f.responses[sel], W) for f, _ in pairs]
    probs = [float(w) for _, w in pairs]
    best = [np.zeros(t.shape[0]) for t in tables]
    used = np.zeros(len(candidates), dtype=bool)
    chosen, trace = [], []
    for _ in range(n_codewords):
        score = np.zeros(len(candidates))
        for p, t, b in zip(probs, tables, best):
            score += p * np.maximum(t, b[:, None]).mean(axis=0)
        score[used] = -np.inf
        c = _first_max(score)
        used[c] = True
        chosen.append(candidates.codewords[c])
        trace.append(float(score[c]))
        for j, t in enumerate(tables):
            best[j] = np.maximum(best[j], t[:, c])
    logger.debug("greedy %s/%s: objective %s", scheme, tag, trace[-1])
    return Codebook(tuple(chosen), scheme, tag, tuple(trace))


def weighted_mean_coverage(codebook, fields, grid=None, restrict=True) -> float:
    """``sum_j p_j * mean_i max_w G_ij(w)`` for a fixed codebook."""
    pairs = _normalise_weights(fields)
    grid = pairs[0][0].grid if grid is None else grid
    sel = grid.selection(restrict)
    W = codebook.weight_matrix() if hasattr(codebook, "weight_matrix") else _stack(list(codebook))
    total = 0.0
    for f, p in pairs:
        total += float(p) * float(gain_matrix(f.responses[sel], W).max(axis=1).mean())
    return total


def design_agnostic(free, candidates, n_codewords=15, grid=None, restrict=True) -> Codebook:
    """Codebook for the unblocked handset, used whatever the grip."""
    return greedy_design(candidates, [(free, Fraction(1))], grid, n_codewords, restrict, "agnostic", None)


def design_grip_aware(grip_field, candidates, n_codewords=15, grid=None, restrict=True, grip_id=None) -> Codebook:
    return greedy_design(candidates, [(grip_field, Fraction(1))], grid, n_codewords, restrict, "aware", grip_id)


def design_semi_aware(activity, grip_fields: Mapping[int, ResponseField], candidates, n_codewords=15,
                      grid=None, restrict=True) -> Codebook:
    """One codebook per activity, weighting each grip by its likelihood."""
    missing = [g for g in activity.grips if g not in grip_fields]
    if missing:
        raise ParameterError(f"activity {activity.name!r}: no field for grips {missing}")
    fields = [(grip_fields[g], p) for g, p in activity.weights()]
    return greedy_design(candidates, fields, grid, n_codewords, restrict, "semi", activity.name)


# persistence ----------------------------------------------------------------

def _codewords_to_dict(codewords, module_of) -> dict:
    n_bits = {c.n_bits for c in codewords}
    if len(n_bits) > 1:
        raise ParameterError("mixed phase resolutions in one codebook")
    return {
        "n_bits": n_bits.pop() if n_bits else None,
        "module_of": [int(m) for m in module_of],
        "codewords": [{"module": c.module, "phases": list(c.phases)} for c in codewords],
    }


def _codewords_from_dict(data, path):
    try:
        n_bits = int(data["n_bits"])
        module_of = np.asarray(data["module_of"], dtype=np.int64)
        out = []
        for entry in data["codewords"]:
            elements = tuple(int(e) for e in np.flatnonzero(module_of == int(entry["module"])))
            out.append(Codeword(int(entry["module"]), elements, tuple(int(p) for p in entry["phases"]),
                                n_bits, module_of.size))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, 1, 1, f"malformed codeword data: {exc}") from None
    return out, module_of


def codebook_to_dict(codebook: Codebook, module_of) -> dict:
    d = {"scheme": codebook.scheme, "tag": codebook.tag}
    d.update(_codewords_to_dict(codebook.codewords, module_of))
    d["objective"] = list(codebook.objective)
    return d


def codebook_from_dict(data: dict, path="<dict>") -> Codebook:
    codewords, _ = _codewords_from_dict(data, path)
    try:
        return Codebook(tuple(codewords), data.get("scheme", "custom"), data.get("tag"),
                        tuple(float(x) for x in data.get("objective", ())))
    except ParameterError as exc:
        raise FormatError(path, 1, 1, str(exc)) from None


def candidates_to_dict(cands: CandidateSet, module_of) -> dict:
    d = {"scheme": "candidates", "source_points": list(cands.source_points)}
    d.update(_codewords_to_dict(cands.codewords, module_of))
    return d


def candidates_from_dict(data: dict, path="<dict>") -> CandidateSet:
    codewords, _ = _codewords_from_dict(data, path)
    return CandidateSet(tuple(codewords), tuple(int(i) for i in data.get("source_points", ())))


def _read_json(path):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.lineno, exc.colno, exc.msg) from None


def _write_json(data, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    return path


def save_codebook(codebook, module_of, path) -> Path:
    return _write_json(codebook_to_dict(codebook, module_of), path)


def load_codebook(path) -> Codebook:
    return codebook_from_dict(_read_json(path), str(path))


def save_candidates(cands, module_of, path) -> Path:
    return _write_json(candidates_to_dict(cands, module_of), path)


def load_candidates(path) -> CandidateSet:
    return candidates_from_dict(_read_json(path), str(path))
