"""Command-line driver: synth -> compose -> candidates -> design -> compare -> report.

Every stage reads and writes plain files under the output directory::

    fields/free.csv, fields/elem-<j>.csv, fields/grip-<id>.csv
    layout.json, candidates.json, codebooks/<scheme>[-<tag>].json
    comparison.json, comparison.csv, cdf_<activity>_<scheme>.csv

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .codebook import (
    build_candidates,
    design_agnostic,
    design_grip_aware,
    design_semi_aware,
    load_candidates,
    save_candidates,
    save_codebook,
)
from .compare import build_experiment, evaluate_experiment, format_table, select_activities, slug, write_outputs
from .config import RunConfig, default_config
from .errors import BeamlabError, ConfigurationError
from .fieldio import load_field, save_field
from .grip import builtin_grips, compose_grip, find_activity, grip_table, load_grips
from .synth import default_layout, load_layout, save_layout, synth_all_elementary, synth_free_field
from .core import make_direction_grid

log = logging.getLogger("beamlab")

EXIT_IO = 3

_OVERRIDES = (
    # flag, config key, type
    ("--np", "n_points", int),
    ("--theta-max", "theta_max", float),
    ("--nc", "n_codewords", int),
    ("--nd", "n_seed", int),
    ("--nb", "n_bits", int),
    ("--seed", "seed", int),
    ("--depth-db", "depth_db", float),
    ("--halfwidth", "halfwidth", float),
    ("--threads", "threads", int),
    ("--layout", "layout", str),
    ("--grips-file", "grips_file", str),
    ("--activities-file", "activities_file", str),
    ("--out", "output_dir", str),
)


class StageInputError(BeamlabError):
    exit_code = EXIT_IO


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else default_config()
    cfg = cfg.with_env()
    changes = {}
    for flag, key, _ in _OVERRIDES:
        value = getattr(args, key)
        if value is not None:
            changes[key] = value
    try:
        return cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _need(path: Path, stage: str, hint: str) -> Path:
    if not path.exists():
        raise StageInputError(f"{stage}: missing input {path} (run `beamlab {hint}` first)")
    return path


def _fields_dir(cfg) -> Path:
    return Path(cfg.output_dir) / "fields"


def _grips(cfg):
    return grip_table(load_grips(cfg.grips_file) if cfg.grips_file else builtin_grips())


def _load_elementary(cfg, modules, stage):
    d = _fields_dir(cfg)
    return {j: load_field(_need(d / f"elem-{j}.csv", stage, "synth")) for j in modules}


def _grip_field(cfg, grip, stage):
    """Composed field for a grip, from grip-<id>.csv when present."""
    d = _fields_dir(cfg)
    path = d / f"grip-{grip.id}.csv"
    if path.exists():
        return load_field(path)
    free = load_field(_need(d / "free.csv", stage, "synth"))
    return compose_grip(free, _load_elementary(cfg, sorted(grip.blocked), stage), grip.blocked)


# subcommands ----------------------------------------------------------------

def cmd_synth(cfg, args):
    grid = make_direction_grid(cfg.n_points, cfg.theta_max)
    layout = load_layout(cfg.layout) if cfg.layout else default_layout()
    free = synth_free_field(layout, grid)
    elementary = synth_all_elementary(free, layout, cfg.depth_db, cfg.halfwidth, cfg.seed)
    d = _fields_dir(cfg)
    save_field(free, d / "free.csv")
    for j, f in elementary.items():
        save_field(f, d / f"elem-{j}.csv")
    save_layout(layout, Path(cfg.output_dir) / "layout.json")
    print(f"wrote {1 + len(elementary)} fields to {d}")


def cmd_compose(cfg, args):
    grips = _grips(cfg)
    if args.grip == "all":
        chosen = list(grips.values())
    else:
        try:
            chosen = [grips[int(args.grip)]]
        except (ValueError, KeyError):
            raise ConfigurationError(f"unknown grip {args.grip!r}") from None
    d = _fields_dir(cfg)
    free = load_field(_need(d / "free.csv", "compose", "synth"))
    modules = sorted(set().union(*(g.blocked for g in chosen)))
    elementary = _load_elementary(cfg, modules, "compose")
    for g in chosen:
        save_field(compose_grip(free, elementary, g.blocked), d / f"grip-{g.id}.csv")
    print(f"wrote {len(chosen)} grip fields to {d}")


def cmd_candidates(cfg, args):
    free = load_field(_need(_fields_dir(cfg) / "free.csv", "candidates", "synth"))
    cands = build_candidates(free, free.grid, cfg.n_seed, cfg.n_bits)
    path = save_candidates(cands, free.module_of, Path(cfg.output_dir) / "candidates.json")
    print(f"wrote {len(cands)} candidates to {path}")


def cmd_design(cfg, args):
    out = Path(cfg.output_dir)
    cands = load_candidates(_need(out / "candidates.json", "design", "candidates"))
    nc = cfg.n_codewords
    restrict = cfg.design_region
    if args.scheme == "agnostic":
        free = load_field(_need(_fields_dir(cfg) / "free.csv", "design", "synth"))
        cb = design_agnostic(free, cands, nc, free.grid, restrict)
        module_of, name = free.module_of, "agnostic"
    elif args.scheme == "aware":
        if args.grip is None:
            raise ConfigurationError("design --scheme aware needs --grip <id>")
        grips = _grips(cfg)
        if args.grip not in grips:
            raise ConfigurationError(f"unknown grip {args.grip}")
        field = _grip_field(cfg, grips[args.grip], "design")
        cb = design_grip_aware(field, cands, nc, field.grid, restrict, args.grip)
        module_of, name = field.module_of, f"aware-grip{args.grip}"
    else:
        if args.activity is None:
            raise ConfigurationError("design --scheme semi needs --activity <name>")
        grips = _grips(cfg)
        act = find_activity(select_activities(cfg.replace(activities=None), grips), args.activity)
        fields = {g: _grip_field(cfg, grips[g], "design") for g in act.grips}
        first = fields[act.grips[0]]
        cb = design_semi_aware(act, fields, cands, nc, first.grid, restrict)
        module_of, name = first.module_of, f"semi-{slug(act.name)}"
    path = save_codebook(cb, module_of, out / "codebooks" / f"{name}.json")
    print(f"wrote {path} (objective {cb.objective[-1]:.6g})")


def cmd_compare(cfg, args):
    exp = build_experiment(cfg)
    results = evaluate_experiment(exp)
    paths = write_outputs(exp, results, cfg.output_dir)
    print(format_table(results, cfg.percentiles))
    print(f"wrote {len(paths)} files to {cfg.output_dir}")


def cmd_report(cfg, args):
    path = Path(args.input) if args.input else Path(cfg.output_dir) / "comparison.json"
    data = json.loads(_need(path, "report", "compare").read_text(encoding="utf-8"))
    pcts = data["config"]["percentiles"]
    rows = [r for r in data["results"] if r["scheme"] != "agnostic"]
    schemes = [s for s in ("semi", "aware") if any(r["scheme"] == s for r in rows)]
    names = list(dict.fromkeys(r["activity"] for r in data["results"]))
    by_key = {(r["activity"], r["scheme"]): r for r in data["results"]}
    width = max(len(n) for n in names) + 2
    print("".ljust(width) + "".join(f"{f'p{p} {s}':>14}" for p in pcts for s in schemes) + f"{'mean dB agn/semi/aware':>28}")
    for n in names:
        cells = "".join(
            f"{by_key[(n, s)]['relative_gain_percent'][str(p)]:>13.1f}%" for p in pcts for s in schemes
        )
        means = "/".join(
            f"{by_key[(n, s)]['mean_coverage_db']:.2f}" for s in ("agnostic", *schemes) if (n, s) in by_key
        )
        print(n.ljust(width) + cells + f"{means:>28}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON (defaults to the packaged default.json)")
    for flag, key, typ in _OVERRIDES:
        common.add_argument(flag, dest=key, type=typ, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="beamlab", description="Grip-aware analog beam codebook design.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="synthesize free-space and elementary blocked fields")
    s = sub.add_parser("compose", parents=[common], help="compose grip fields from elementary cases")
    s.add_argument("--grip", default="all", help="grip id or 'all'")
    sub.add_parser("candidates", parents=[common], help="build the candidate codeword set")
    s = sub.add_parser("design", parents=[common], help="greedy codebook design")
    s.add_argument("--scheme", required=True, choices=["agnostic", "aware", "semi"])
    s.add_argument("--grip", type=int)
    s.add_argument("--activity")
    sub.add_parser("compare", parents=[common], help="run the full three-scheme comparison")
    s = sub.add_parser("report", parents=[common], help="print a comparison.json as a table")
    s.add_argument("--input")
    return p


COMMANDS = {
    "synth": cmd_synth,
    "compose": cmd_compose,
    "candidates": cmd_candidates,
    "design": cmd_design,
    "compare": cmd_compare,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
    except BeamlabError as exc:
        print(f"beamlab {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"beamlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
