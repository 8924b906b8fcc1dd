"""
Analytic stand-ins for full-wave radiation data.

The handset carries three 2x2 patch modules on the back face and six 1x2
dipole modules on the edges, nine modules and 24 elements in total. Every
element gets a closed-form power pattern (cosine patch, sine dipole),
normalised to unit mean power over the sphere, and the geometric phase of
its position. Finger blockage of one module is emulated by a raised-cosine
attenuation mask around that module's boresight with a seeded ripple on top.

Coordinate frame: x toward the right edge, y toward the top edge, z out of
the back face (the screen faces -z). Positions are in wavelengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate

from .core import DirectionGrid, ResponseField
from .errors import ParameterError

CARRIER_GHZ = 39.0
PITCH = 0.5

FACE_NORMALS = {
    "back": (0.0, 0.0, 1.0),
    "edge-top": (0.0, 1.0, 0.0),
    "edge-bottom": (0.0, -1.0, 0.0),
    "edge-left": (-1.0, 0.0, 0.0),
    "edge-right": (1.0, 0.0, 0.0),
}
KINDS = {"patch2x2": 4, "dipole1x2": 2}


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise ParameterError(f"cannot normalise vector {v.tolist()}")
    return v / n


@dataclass(frozen=True)
class ModuleSpec:
    id: int
    kind: str
    face: str
    boresight: tuple
    center: tuple
    axis: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"module {self.id}: unknown kind {self.kind!r}")
        if self.face not in FACE_NORMALS:
            raise ParameterError(f"module {self.id}: unknown face {self.face!r}")
        object.__setattr__(self, "boresight", tuple(_unit(self.boresight).tolist()))
        object.__setattr__(self, "axis", tuple(_unit(self.axis).tolist()))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def n_elements(self) -> int:
        return KINDS[self.kind]

    def element_positions(self) -> np.ndarray:
        """Element positions in wavelengths, half-wavelength pitch."""
        c = np.asarray(self.center)
        a = np.asarray(self.axis)
        h = PITCH / 2
        if self.kind == "dipole1x2":
            return np.stack([c - h * a, c + h * a])
        b = _unit(np.cross(FACE_NORMALS[self.face], a))
        return np.stack([c + sa * h * a + sb * h * b for sb in (-1, 1) for sa in (-1, 1)])


@dataclass(frozen=True)
class PatternParams:
    patch_exponent: float = 1.5
    dipole_exponent: float = 1.0
    front_to_back_db: float = 15.0
    screen_loss_db: float = 20.0


@dataclass(frozen=True)
class HandsetLayout:
    modules: tuple
    carrier_ghz: float = CARRIER_GHZ
    pattern: PatternParams = field(default_factory=PatternParams)

    def __post_init__(self):
        mods = tuple(sorted(self.modules, key=lambda m: m.id))
        object.__setattr__(self, "modules", mods)
        ids = [m.id for m in mods]
        if len(set(ids)) != len(ids):
            raise ParameterError("module ids must be unique")

    @property
    def n_elements(self) -> int:
        return sum(m.n_elements for m in self.modules)

    def module(self, module_id: int) -> ModuleSpec:
        for m in self.modules:
            if m.id == module_id:
                return m
        raise ParameterError(f"layout has no module {module_id}")

    def module_of(self) -> np.ndarray:
        return np.concatenate([[m.id] * m.n_elements for m in self.modules]).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "carrier_ghz": self.carrier_ghz,
            "pattern": asdict(self.pattern),
            "modules": [
                {
                    "id": m.id,
                    "kind": m.kind,
                    "face": m.face,
                    "boresight": list(m.boresight),
                    "center": list(m.center),
                    "axis": list(m.axis),
                }
                for m in self.modules
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HandsetLayout":
        try:
            modules = tuple(
                ModuleSpec(
                    id=int(m["id"]),
                    kind=m["kind"],
                    face=m["face"],
                    boresight=tuple(m["boresight"]),
                    center=tuple(m["center"]),
                    axis=tuple(m["axis"]),
                )
                for m in data["modules"]
            )
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed layout entry: {exc}") from None
        pattern = PatternParams(**data.get("pattern", {}))
        return cls(modules, float(data.get("carrier_ghz", CARRIER_GHZ)), pattern)


def _tilted(main, toward, degrees):
    """``main`` rotated by ``degrees`` toward ``toward`` (both unit-ish)."""
    return tuple(_unit(np.asarray(main, float) + np.tan(np.radians(degrees)) * _unit(toward)).tolist())


def default_layout(pattern: PatternParams | None = None) -> HandsetLayout:
    """Reference phone: ~70 x 150 mm at 39 GHz (9 x 19.5 wavelengths).

    Corner clusters: modules 1-3 top-left, 4-6 top-right, 7-9 bottom-right;
    the first module of each cluster is the back-face patch. Boresights are
    tilted toward their corner to mimic the chassis edge effect, which keeps
    co-facing modules from being exact copies of each other.
    """
    w, h = 4.5, 9.75
    patch_tilt, dipole_tilt = 20.0, 15.0
    z, x, y = (0, 0, 1), (1, 0, 0), (0, 1, 0)
    mods = [
        ModuleSpec(1, "patch2x2", "back", _tilted(z, (-1, 1, 0), patch_tilt), (-3.5, 8.5, 0.0), x),
        ModuleSpec(2, "dipole1x2", "edge-top", _tilted(y, (-1, 0, 0), dipole_tilt), (-2.0, h, 0.0), x),
        ModuleSpec(3, "dipole1x2", "edge-left", _tilted((-1, 0, 0), y, dipole_tilt), (-w, 7.0, 0.0), y),
        ModuleSpec(4, "patch2x2", "back", _tilted(z, (1, 1, 0), patch_tilt), (3.5, 8.5, 0.0), x),
        ModuleSpec(5, "dipole1x2", "edge-top", _tilted(y, (1, 0, 0), dipole_tilt), (2.0, h, 0.0), x),
        ModuleSpec(6, "dipole1x2", "edge-right", _tilted(x, y, dipole_tilt), (w, 7.0, 0.0), y),
        ModuleSpec(7, "patch2x2", "back", _tilted(z, (1, -1, 0), patch_tilt), (3.5, -8.5, 0.0), x),
        ModuleSpec(8, "dipole1x2", "edge-right", _tilted(x, (0, -1, 0), dipole_tilt), (w, -7.0, 0.0), y),
        ModuleSpec(9, "dipole1x2", "edge-bottom", _tilted((0, -1, 0), x, dipole_tilt), (2.0, -h, 0.0), x),
    ]
    return HandsetLayout(tuple(mods), CARRIER_GHZ, pattern or PatternParams())


def load_layout(path) -> HandsetLayout:
    with open(path, encoding="utf-8") as fh:
        return HandsetLayout.from_dict(json.load(fh))


def save_layout(layout: HandsetLayout, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(layout.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


# element patterns ----------------------------------------------------------

def _patch_power(cos_a, exponent, floor):
    return np.maximum(np.clip(cos_a, 0.0, None) ** exponent, floor)


def _dipole_power(cos_axis, cos_b, exponent, floor):
    sin2 = np.clip(1.0 - cos_axis**2, 0.0, None)
    return sin2 * np.maximum(np.clip(cos_b, 0.0, None) ** exponent, floor)


@lru_cache(maxsize=None)
def _mean_power(kind, exponent, floor):
    """Sphere-averaged power of an unnormalised element pattern.

    Both patterns are functions of the polar angle about the boresight (the
    dipole's sin^2 term averages to 1 - sin^2/2 over azimuth when the axis is
    perpendicular to the boresight), so a 1-D quadrature in cos(angle) is exact.
    """
    if kind == "patch2x2":
        f = lambda c: _patch_power(c, exponent, floor)
    else:
        f = lambda c: (1.0 - (1.0 - c * c) / 2.0) * max(max(c, 0.0) ** exponent, floor)
    val, _ = integrate.quad(f, -1.0, 1.0, points=[0.0], epsabs=1e-13, epsrel=1e-12)
    return 0.5 * val


def element_power(module: ModuleSpec, u: np.ndarray, pattern: PatternParams) -> np.ndarray:
    """Normalised power pattern (linear, isotropic = 1) of one element of ``module``."""
    floor = 10.0 ** (-pattern.front_to_back_db / 10.0)
    b = np.asarray(module.boresight)
    cos_b = u @ b
    if module.kind == "patch2x2":
        p = _patch_power(cos_b, pattern.patch_exponent, floor)
        p = p / _mean_power(module.kind, pattern.patch_exponent, floor)
        screen = 10.0 ** (-pattern.screen_loss_db / 10.0)
        return np.where(u[:, 2] < 0.0, p * screen, p)
    axis = _unit(np.asarray(module.axis) - (np.asarray(module.axis) @ b) * b)
    p = _dipole_power(u @ axis, cos_b, pattern.dipole_exponent, floor)
    return p / _mean_power(module.kind, pattern.dipole_exponent, floor)


def synth_free_field(layout: HandsetLayout, grid: DirectionGrid, label: str = "free") -> ResponseField:
    """Free-space responses: ``sqrt(power) * exp(j 2 pi d.u)`` per element."""
    u = grid.unit_vectors()
    cols = []
    for m in layout.modules:
        amp = np.sqrt(element_power(m, u, layout.pattern))
        for d in m.element_positions():
            cols.append(amp * np.exp(2j * np.pi * (u @ d)))
    return ResponseField(grid, np.stack(cols, axis=1), layout.module_of(), label)


# blockage -------------------------------------------------------------------

@dataclass(frozen=True)
class BlockageMask:
    center: tuple
    depth_db: float = 22.0
    angular_halfwidth: float = 60.0

    def __post_init__(self):
        if not (0.0 < self.depth_db <= 40.0):
            raise ParameterError(f"depth_db must lie in (0, 40], got {self.depth_db}")
        if not (0.0 < self.angular_halfwidth <= 180.0):
            raise ParameterError(f"halfwidth must lie in (0, 180], got {self.angular_halfwidth}")
        object.__setattr__(self, "center", tuple(_unit(self.center).tolist()))

    def taper(self, u: np.ndarray) -> np.ndarray:
        """Raised cosine: 1 at the centre, 0 at and beyond the halfwidth."""
        ang = np.degrees(np.arccos(np.clip(u @ np.asarray(self.center), -1.0, 1.0)))
        t = 0.5 * (1.0 + np.cos(np.pi * ang / self.angular_halfwidth))
        return np.where(ang < self.angular_halfwidth, t, 0.0)


def mask_for(layout: HandsetLayout, module_id: int, depth_db=22.0, halfwidth=60.0) -> BlockageMask:
    return BlockageMask(layout.module(module_id).boresight, depth_db, halfwidth)


def smooth_noise(u: np.ndarray, rng: np.random.Generator, n_waves: int = 6) -> np.ndarray:
    """Smooth random function on the sphere with values in [-1, 1]."""
    dirs = rng.normal(size=(n_waves, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    freq = rng.uniform(0.5, 2.0, size=n_waves)
    phase = rng.uniform(0.0, 2 * np.pi, size=n_waves)
    amp = rng.uniform(0.5, 1.0, size=n_waves)
    waves = np.cos(2 * np.pi * (u @ dirs.T) * freq + phase)
    return waves @ amp / amp.sum()


def synth_elementary_blocked(
    free: ResponseField,
    module_id: int,
    mask: BlockageMask,
    seed: int = 0,
    ripple_db: float = 2.0,
    ripple_phase: float = 0.5,
    coupling_db: float = 1.0,
) -> ResponseField:
    """Field with a finger over one module.

    Elements of the blocked module lose ``depth_db * taper`` dB, plus a seeded
    ripple of at most ``ripple_db`` scaled by the same taper. Every other
    element (and the blocked ones outside the mask) carries a seeded coupling
    perturbation of at most ``coupling_db``.
    """
    if module_id not in free.modules:
        raise ParameterError(f"field has no module {module_id}")
    if not (0 <= ripple_db < mask.depth_db) or coupling_db < 0:
        raise ParameterError("ripple/coupling amplitudes out of range")
    u = free.grid.unit_vectors()
    t = mask.taper(u)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(module_id)]))
    out = np.array(free.responses)
    for k in range(free.n_elements):
        coupling = coupling_db * smooth_noise(u, rng)
        if free.module_of[k] == module_id:
            ripple = ripple_db * smooth_noise(u, rng)
            phase = ripple_phase * smooth_noise(u, rng)
            delta_db = t * (ripple - mask.depth_db) + (1.0 - t) * coupling
            factor = 10.0 ** (delta_db / 20.0) * np.exp(1j * phase * t)
        else:
            factor = 10.0 ** (coupling / 20.0)
        out[:, k] *= factor
    return free.with_responses(out, f"elem-{module_id}")


def synth_all_elementary(free, layout, depth_db=22.0, halfwidth=60.0, seed=0) -> dict:
    return {
        m.id: synth_elementary_blocked(free, m.id, mask_for(layout, m.id, depth_db, halfwidth), seed)
        for m in layout.modules
    }
