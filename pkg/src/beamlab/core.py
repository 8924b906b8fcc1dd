"""
Direction grids, per-element response fields and spherical coverage.

Angles are in degrees throughout. ``theta`` is measured from the +z axis,
which points out of the back of the handset; the screen faces -z.
Gains are linear power gains and are only converted to dB for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NumericalError, ParameterError, ShapeError

GOLDEN_ANGLE_DEG = 180.0 * (3.0 - math.sqrt(5.0))
DEFAULT_PERCENTILES = (20, 50, 80)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def unit_vectors(theta_deg, phi_deg) -> np.ndarray:
    """Cartesian unit vectors, shape (N, 3), for polar/azimuth angles in degrees."""
    th = np.radians(np.asarray(theta_deg, dtype=float))
    ph = np.radians(np.asarray(phi_deg, dtype=float))
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)


def to_db(x):
    """10*log10 with zero mapped to -inf rather than a warning."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Discretized unit sphere plus the evaluation-region mask.

    ``kind`` is ``"fib"`` for lattices built by :func:`make_direction_grid`
    and ``"points"`` for explicit direction lists.
    """

    theta: np.ndarray
    phi: np.ndarray
    theta_max: float
    kind: str = "points"
    region_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        if theta.shape != phi.shape:
            raise ShapeError("theta and phi must have the same length")
        if theta.size < 1:
            raise ParameterError("a grid needs at least one point")
        if not (0.0 < self.theta_max <= 180.0):
            raise ParameterError(f"theta_max must lie in (0, 180], got {self.theta_max}")
        if np.any((theta < 0) | (theta > 180)) or np.any((phi < 0) | (phi >= 360)):
            raise ParameterError("theta must lie in [0, 180] and phi in [0, 360)")
        object.__setattr__(self, "theta", _frozen(theta))
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "theta_max", float(self.theta_max))
        object.__setattr__(self, "region_mask", _frozen(theta <= self.theta_max))

    @property
    def n_points(self) -> int:
        return int(self.theta.size)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.theta.tolist(), self.phi.tolist()))

    @property
    def n_region(self) -> int:
        return int(np.count_nonzero(self.region_mask))

    def unit_vectors(self) -> np.ndarray:
        return unit_vectors(self.theta, self.phi)

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.n_points}:{self.theta_max!r}"

    def selection(self, restrict: bool) -> np.ndarray:
        """Boolean mask of the points a statistic should run over."""
        if restrict:
            return self.region_mask
        return np.ones(self.n_points, dtype=bool)

    def same_as(self, other: "DirectionGrid") -> bool:
        return (
            self is other
            or (
                self.theta_max == other.theta_max
                and np.array_equal(self.theta, other.theta)
                and np.array_equal(self.phi, other.phi)
            )
        )

    def __eq__(self, other):
        if not isinstance(other, DirectionGrid):
            return NotImplemented
        return self.kind == other.kind and self.same_as(other)

    __hash__ = None


def make_direction_grid(n_points: int, theta_max: float = 180.0) -> DirectionGrid:
    """Deterministic Fibonacci lattice with ``n_points`` near-equal-area cells.

    Point ``i`` sits at ``cos(theta) = 1 - (2i + 1) / n`` and advances in
    azimuth by the golden angle. The half-cell offset keeps both poles empty,
    so ``n_points=2`` yields one point per hemisphere.
    """
    if isinstance(n_points, bool) or int(n_points) != n_points or n_points < 2:
        raise ParameterError(f"n_points must be an integer >= 2, got {n_points!r}")
    if not (0.0 < theta_max <= 180.0):
        raise ParameterError(f"theta_max must lie in (0, 180], got {theta_max!r}")
    n = int(n_points)
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    theta = np.degrees(np.arccos(z))
    phi = np.mod(i * GOLDEN_ANGLE_DEG, 360.0)
    return DirectionGrid(theta, phi, float(theta_max), kind="fib")


@dataclass(frozen=True, eq=False)
class ResponseField:
    """Complex far-field response of every antenna element on a grid.

    ``responses[i, k]`` is the response of element ``k`` toward grid point
    ``i``, scaled so an isotropic unit element has magnitude one.
    ``module_of[k]`` is the module id (1-based) element ``k`` belongs to.
    """

    grid: DirectionGrid
    responses: np.ndarray
    module_of: np.ndarray
    label: str = ""

    def __post_init__(self):
        r = np.asarray(self.responses, dtype=np.complex128)
        mods = np.asarray(self.module_of).astype(np.int64).reshape(-1)
        if r.ndim != 2:
            raise ShapeError("responses must be a 2-D (points x elements) array")
        if r.shape[0] != self.grid.n_points:
            raise ShapeError(
                f"field has {r.shape[0]} rows but the grid has {self.grid.n_points} points"
            )
        if r.shape[1] != mods.size or mods.size == 0:
            raise ShapeError("module_of must list one module id per element")
        if np.any(mods < 1):
            raise ParameterError("module ids are 1-based positive integers")
        if not np.all(np.isfinite(r)):
            raise NumericalError(f"field {self.label!r} contains non-finite responses")
        object.__setattr__(self, "responses", _frozen(r))
        object.__setattr__(self, "module_of", _frozen(mods))

    @property
    def n_elements(self) -> int:
        return int(self.module_of.size)

    @property
    def modules(self) -> list[int]:
        return sorted(set(self.module_of.tolist()))

    def elements_of(self, module: int) -> np.ndarray:
        return np.flatnonzero(self.module_of == module)

    def with_responses(self, responses: np.ndarray, label: str) -> "ResponseField":
        return ResponseField(self.grid, responses, self.module_of, label)

    def compatible_with(self, other: "ResponseField") -> bool:
        return self.grid.same_as(other.grid) and np.array_equal(self.module_of, other.module_of)

    def __eq__(self, other):
        if not isinstance(other, ResponseField):
            return NotImplemented
        return (
            self.label == other.label
            and self.compatible_with(other)
            and np.array_equal(self.responses, other.responses)
        )

    __hash__ = None


def gain(response, codeword) -> float:
    """Array gain ``w^H M^H M w`` of one direction, evaluated as ``|M w|^2``."""
    m = np.asarray(response, dtype=np.complex128).reshape(-1)
    w = np.asarray(codeword, dtype=np.complex128).reshape(-1)
    if m.shape != w.shape:
        raise ShapeError(f"response has {m.size} elements but codeword has {w.size}")
    power = float(np.vdot(w, w).real)
    if power > 1.0 + 1e-9:
        raise ParameterError(f"codeword power {power} exceeds unit power")
    return float(abs(m @ w) ** 2)


def gain_matrix(responses: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gains for every (point, codeword) pair.

    ``responses`` is (N, Nt) and ``weights`` is (C, Nt); returns (N, C).
    """
    responses = np.asarray(responses, dtype=np.complex128)
    weights = np.atleast_2d(np.asarray(weights, dtype=np.complex128))
    if responses.shape[-1] != weights.shape[-1]:
        raise ShapeError(
            f"responses have {responses.shape[-1]} elements, codewords {weights.shape[-1]}"
        )
    y = responses @ weights.T
    return y.real**2 + y.imag**2


def nearest_rank(sorted_values: np.ndarray, p: float):
    """Nearest-rank percentile of an ascending sample (index ``ceil(p n / 100)``)."""
    n = len(sorted_values)
    if n == 0:
        raise ParameterError("percentile of an empty sample")
    if not (0 <= p <= 100):
        raise ParameterError(f"percentile must lie in [0, 100], got {p}")
    rank = max(1, math.ceil(p * n / 100.0))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class CoverageReport:
    per_point_gain: np.ndarray
    best_codeword: np.ndarray
    selected: np.ndarray
    region_restricted: bool
    mean_linear: float
    percentiles: Mapping[float, float]
    percentiles_linear: Mapping[float, float]

    @property
    def mean_db(self) -> float:
        return float(to_db(self.mean_linear))

    def selected_gains(self) -> np.ndarray:
        return self.per_point_gain[self.selected]


def coverage_from_gains(
    gains: np.ndarray,
    grid: DirectionGrid,
    restrict: bool = True,
    percentiles: Iterable[float] = DEFAULT_PERCENTILES,
) -> CoverageReport:
    """Coverage statistics from a precomputed (points x codewords) gain table."""
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 2 or gains.shape[1] == 0:
        raise ParameterError("coverage needs at least one codeword")
    if gains.shape[0] != grid.n_points:
        raise ShapeError("gain table rows must match the grid")
    best = np.argmax(gains, axis=1)
    per_point = gains[np.arange(gains.shape[0]), best]
    sel = grid.selection(restrict)
    chosen = per_point[sel]
    if chosen.size == 0:
        raise ParameterError("the evaluation region contains no grid points")
    ordered = np.sort(chosen)
    pct_lin = {p: float(nearest_rank(ordered, p)) for p in percentiles}
    pct_db = {p: float(to_db(v)) for p, v in pct_lin.items()}
    return CoverageReport(
        per_point_gain=_frozen(per_point),
        best_codeword=_frozen(best),
        selected=sel,
        region_restricted=bool(restrict),
        mean_linear=float(np.mean(chosen)),
        percentiles=pct_db,
        percentiles_linear=pct_lin,
    )


def coverage_profile(
    field: ResponseField,
    codebook,
    grid: DirectionGrid | None = None,
    restrict: bool = True,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
) -> CoverageReport:
    """Best-codeword gain per direction and its summary statistics.

    ``codebook`` may be a :class:`beamlab.codebook.Codebook`, a list of
    codewords, or a (C, Nt) weight array.
    """
    grid = field.grid if grid is None else grid
    if not grid.same_as(field.grid):
        raise ShapeError("field is not defined on the requested grid")
    weights = weight_matrix(codebook)
    if weights.shape[0] == 0:
        raise ParameterError("codebook is empty")
    return coverage_from_gains(
        gain_matrix(field.responses, weights), grid, restrict, percentiles
    )


def weight_matrix(codewords) -> np.ndarray:
    """Stack codewords of any supported flavour into a (C, Nt) array."""
    if hasattr(codewords, "weight_matrix"):
        return codewords.weight_matrix()
    if isinstance(codewords, np.ndarray):
        return np.atleast_2d(codewords).astype(np.complex128)
    rows = [getattr(c, "weights", c) for c in codewords]
    if not rows:
        return np.zeros((0, 0), dtype=np.complex128)
    return np.asarray(rows, dtype=np.complex128)
