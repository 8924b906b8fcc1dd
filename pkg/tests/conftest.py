import numpy as np
import pytest

from beamlab.codebook import CandidateSet, Codeword
from beamlab.core import ResponseField, make_direction_grid
from beamlab.grip import builtin_grips, compose_all
from beamlab.synth import default_layout, synth_all_elementary, synth_free_field

# (criterion, PASS/FAIL, detail) lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def random_field(rng, grid, module_sizes=(2, 2, 2), label="rand"):
    module_of = np.concatenate([[m + 1] * n for m, n in enumerate(module_sizes)])
    shape = (grid.n_points, module_of.size)
    resp = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return ResponseField(grid, resp, module_of, label)


def random_candidates(rng, field, n_cand, n_bits=3):
    """Distinct random single-module codewords for ``field``."""
    seen, out = set(), []
    while len(out) < n_cand:
        m = int(rng.choice(field.modules))
        el = tuple(int(e) for e in field.elements_of(m))
        ph = tuple(int(p) for p in rng.integers(0, 2**n_bits, size=len(el)))
        cw = Codeword(m, el, ph, n_bits, field.n_elements)
        if cw.key not in seen:
            seen.add(cw.key)
            out.append(cw)
    return CandidateSet(tuple(out), ())


def loop_gain(row, w):
    """Scalar-accumulation reference for |sum_k M_k w_k|^2."""
    acc = 0j
    for m, x in zip(row, w):
        acc += m * x
    return acc.real * acc.real + acc.imag * acc.imag


@pytest.fixture(scope="session")
def small_world():
    """Reduced-size synthetic dataset shared by the unit tests."""
    grid = make_direction_grid(800, 100.0)
    layout = default_layout()
    free = synth_free_field(layout, grid)
    elementary = synth_all_elementary(free, layout)
    grips = {g.id: g for g in builtin_grips()}
    return {
        "grid": grid,
        "layout": layout,
        "free": free,
        "elementary": elementary,
        "grips": grips,
        "grip_fields": compose_all(free, elementary, list(grips.values())),
    }
