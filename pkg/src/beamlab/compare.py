"""
Scheme comparison per activity, shaped like a percentile-gain table.

For every activity the coverage percentiles of each grip are combined as a
probability-weighted mean of the per-grip percentiles (not a percentile of
the pooled samples). Percentiles are averaged as linear gains; gains versus
the grip-agnostic scheme are linear ratios reported in percent.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .codebook import (
    Codebook,
    build_candidates,
    design_agnostic,
    design_grip_aware,
    design_semi_aware,
    merge_candidates,
)
from .config import RunConfig
from .core import DirectionGrid, coverage_profile, make_direction_grid, to_db
from .errors import ConfigurationError, ParameterError
from .grip import (
    builtin_activities,
    builtin_grips,
    check_activities,
    compose_grip,
    find_activity,
    grip_table,
    load_activities,
    load_grips,
)
from .synth import default_layout, load_layout, synth_all_elementary, synth_free_field

logger = logging.getLogger(__name__)

# row order of the published table
TABLE_ORDER = (
    "Voice Call",
    "Game Portrait",
    "Game Landscape",
    "Video Portrait",
    "Video Landscape",
    "Messaging Portrait",
    "Messaging Landscape",
    "Pocket",
)


@dataclass(frozen=True)
class SchemeResult:
    activity: str
    scheme: str
    percentiles: dict
    percentiles_linear: dict
    relative_gain: dict
    delta_db: dict
    mean_coverage_linear: float
    per_grip: dict = field(default_factory=dict)

    @property
    def mean_coverage_db(self) -> float:
        return float(to_db(self.mean_coverage_linear))

    def to_dict(self) -> dict:
        keyed = lambda d: {str(k): v for k, v in d.items()}
        return {
            "activity": self.activity,
            "scheme": self.scheme,
            "percentiles_db": keyed(self.percentiles),
            "percentiles_linear": keyed(self.percentiles_linear),
            "relative_gain_percent": keyed(self.relative_gain),
            "delta_db": keyed(self.delta_db),
            "mean_coverage_linear": self.mean_coverage_linear,
            "mean_coverage_db": self.mean_coverage_db,
            "per_grip_percentiles_db": {str(g): keyed(v) for g, v in self.per_grip.items()},
        }


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def codebook_for(codebooks: Mapping, scheme: str, activity, grip_id: int) -> Codebook:
    """Pick the codebook a scheme uses for one grip of one activity.

    ``codebooks`` holds ``"agnostic"`` -> Codebook, ``"semi"`` -> {activity
    name: Codebook} and ``"aware"`` -> {grip id: Codebook}.
    """
    try:
        if scheme == "agnostic":
            return codebooks["agnostic"]
        if scheme == "semi":
            return codebooks["semi"][activity.name]
        if scheme == "aware":
            return codebooks["aware"][grip_id]
    except KeyError:
        raise ConfigurationError(
            f"no {scheme} codebook for activity {activity.name!r} / grip {grip_id}"
        ) from None
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def evaluate_activity(
    activity,
    scheme: str,
    codebooks: Mapping,
    grip_fields: Mapping,
    grid: DirectionGrid,
    baseline: SchemeResult | None = None,
    percentiles: Sequence[float] = (20, 50, 80),
    restrict: bool = True,
) -> SchemeResult:
    """Weighted-mean percentiles of one scheme on one activity.

    ``baseline`` is the agnostic result for the same activity; without it
    (or when ``scheme`` is agnostic) relative gains are measured against the
    result itself and come out as zero.
    """
    pct_lin = {p: 0.0 for p in percentiles}
    mean_lin = 0.0
    per_grip = {}
    for gid, prob in activity.weights():
        if gid not in grip_fields:
            raise ConfigurationError(f"no field for grip {gid}")
        cb = codebook_for(codebooks, scheme, activity, gid)
        rep = coverage_profile(grip_fields[gid], cb, grid, restrict, percentiles)
        w = float(prob)
        for p in percentiles:
            pct_lin[p] += w * rep.percentiles_linear[p]
        mean_lin += w * rep.mean_linear
        per_grip[gid] = dict(rep.percentiles)
    ref = pct_lin if baseline is None else baseline.percentiles_linear
    if baseline is not None and baseline.activity != activity.name:
        raise ParameterError("baseline belongs to a different activity")
    rel = {p: 100.0 * (pct_lin[p] / ref[p] - 1.0) for p in percentiles}
    delta = {p: float(to_db(pct_lin[p]) - to_db(ref[p])) for p in percentiles}
    return SchemeResult(
        activity=activity.name,
        scheme=scheme,
        percentiles={p: float(to_db(v)) for p, v in pct_lin.items()},
        percentiles_linear=pct_lin,
        relative_gain=rel,
        delta_db=delta,
        mean_coverage_linear=mean_lin,
        per_grip=per_grip,
    )


def activity_cdf(activity, scheme, codebooks, grip_fields, grid, restrict=True):
    """Probability-weighted empirical CDF of the per-point best gain (dB)."""
    values, weights = [], []
    for gid, prob in activity.weights():
        cb = codebook_for(codebooks, scheme, activity, gid)
        g = coverage_profile(grip_fields[gid], cb, grid, restrict).selected_gains()
        values.append(to_db(g))
        weights.append(np.full(g.size, float(prob) / g.size))
    v = np.concatenate(values)
    w = np.concatenate(weights)
    order = np.argsort(v, kind="stable")
    return v[order], np.cumsum(w[order])


@dataclass
class Experiment:
    config: RunConfig
    grid: DirectionGrid
    layout: object
    free: object
    elementary: dict
    grips: dict
    activities: list
    grip_fields: dict
    candidates: object
    codebooks: dict


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def select_activities(config: RunConfig, grips) -> list:
    acts = load_activities(config.activities_file) if config.activities_file else builtin_activities()
    check_activities(acts, grips)
    if config.activities is not None:
        acts = [find_activity(acts, n) for n in config.activities]
    return acts


def build_experiment(config: RunConfig, fields=None) -> Experiment:
    """Synthesize (or take) fields, then design every codebook the run needs.

    ``fields`` may supply ``(free, {module: elementary})`` to skip synthesis.
    """
    grid = make_direction_grid(config.n_points, config.theta_max)
    layout = load_layout(config.layout) if config.layout else default_layout()
    if fields is None:
        free = synth_free_field(layout, grid)
        elementary = synth_all_elementary(free, layout, config.depth_db, config.halfwidth, config.seed)
    else:
        free, elementary = fields
        grid = free.grid
    grips = grip_table(load_grips(config.grips_file) if config.grips_file else builtin_grips())
    activities = select_activities(config, grips)
    needed = sorted({g for a in activities for g in a.grips})
    grip_fields = {g: compose_grip(free, elementary, grips[g].blocked) for g in needed}

    restrict = config.design_region
    nc = config.n_codewords
    cands = build_candidates(free, grid, config.n_seed, config.n_bits)

    def own_candidates(field_list):
        if not config.rebuild_candidates:
            return cands
        built = [build_candidates(f, grid, config.n_seed, config.n_bits) for f in field_list]
        return merge_candidates(*built)

    codebooks = {"agnostic": design_agnostic(free, cands, nc, grid, restrict)}
    if "aware" in config.schemes:
        aware = _map(
            lambda g: design_grip_aware(grip_fields[g], own_candidates([grip_fields[g]]), nc, grid, restrict, g),
            needed,
            config.threads,
        )
        codebooks["aware"] = dict(zip(needed, aware))
    if "semi" in config.schemes:
        semi = _map(
            lambda a: design_semi_aware(
                a, grip_fields, own_candidates([grip_fields[g] for g in a.grips]), nc, grid, restrict
            ),
            activities,
            config.threads,
        )
        codebooks["semi"] = {a.name: cb for a, cb in zip(activities, semi)}
    return Experiment(config, grid, layout, free, elementary, grips, activities, grip_fields, cands, codebooks)


def evaluate_experiment(exp: Experiment) -> list[SchemeResult]:
    cfg = exp.config
    out = []
    for act in ordered_activities(exp.activities):
        base = evaluate_activity(act, "agnostic", exp.codebooks, exp.grip_fields, exp.grid,
                                 None, cfg.percentiles)
        out.append(base)
        for scheme in ("semi", "aware"):
            if scheme in cfg.schemes:
                out.append(evaluate_activity(act, scheme, exp.codebooks, exp.grip_fields, exp.grid,
                                             base, cfg.percentiles))
    return out


def ordered_activities(activities):
    rank = {n: i for i, n in enumerate(TABLE_ORDER)}
    return sorted(activities, key=lambda a: (rank.get(a.name, len(rank)), activities.index(a)))


def run_full_comparison(config: RunConfig, fields=None) -> list[SchemeResult]:
    return evaluate_experiment(build_experiment(config, fields))


# output --------------------------------------------------------------------

def comparison_csv(results: Sequence[SchemeResult], percentiles=(20, 50, 80)) -> str:
    schemes = [s for s in ("semi", "aware") if any(r.scheme == s for r in results)]
    header = ["activity"] + [f"{s}_p{p}" for p in percentiles for s in schemes]
    lines = [",".join(header)]
    activities = list(dict.fromkeys(r.activity for r in results))
    by_key = {(r.activity, r.scheme): r for r in results}
    for name in activities:
        cells = [name]
        for p in percentiles:
            for s in schemes:
                r = by_key.get((name, s))
                cells.append("" if r is None else f"{r.relative_gain[p]:.2f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def comparison_json(results, config: RunConfig, grips=None, activities=None) -> dict:
    info = {}
    if grips is not None and activities is not None:
        info = {a.name: float(a.expected_blocked(grips)) for a in activities}
    return {
        "config": config.to_dict(),
        "expected_blocked_modules": info,
        "results": [r.to_dict() for r in results],
    }


def write_outputs(exp: Experiment, results, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    pcts = exp.config.percentiles
    written = []
    path = outdir / "comparison.csv"
    path.write_text(comparison_csv(results, pcts), encoding="utf-8")
    written.append(path)
    path = outdir / "comparison.json"
    data = comparison_json(results, exp.config, exp.grips, exp.activities)
    path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    written.append(path)
    for r in results:
        act = find_activity(exp.activities, r.activity)
        v, c = activity_cdf(act, r.scheme, exp.codebooks, exp.grip_fields, exp.grid)
        path = outdir / f"cdf_{slug(r.activity)}_{r.scheme}.csv"
        body = "".join(f"{a:.6f},{b:.9f}\n" for a, b in zip(v.tolist(), c.tolist()))
        path.write_text("gain_db,cdf\n" + body, encoding="utf-8")
        written.append(path)
    return written


def format_table(results: Sequence[SchemeResult], percentiles=(20, 50, 80)) -> str:
    """Plain-text gain table for terminals."""
    schemes = [s for s in ("semi", "aware") if any(r.scheme == s for r in results)]
    names = list(dict.fromkeys(r.activity for r in results))
    by_key = {(r.activity, r.scheme): r for r in results}
    width = max(len(n) for n in names) + 2
    head = "".ljust(width) + "".join(f"{f'p{p} {s}':>14}" for p in percentiles for s in schemes)
    rows = [head]
    for n in names:
        cells = []
        for p in percentiles:
            for s in schemes:
                r = by_key.get((n, s))
                cells.append(f"{'-' if r is None else f'{r.relative_gain[p]:.1f}%':>14}")
        rows.append(n.ljust(width) + "".join(cells))
    return "\n".join(rows)
