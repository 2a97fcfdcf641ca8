import math

import numpy as np
import pytest

from qptdetect.analysis import (
    EvalSettings,
    PhaseDiagram,
    chain_ridges,
    count_regions,
    derivative,
    diagram_from_field,
    evaluate_point,
    extremum_of,
    finite_size_scaling,
    find_extrema,
    grid_values,
    ridge_mask,
    scan,
    series,
)
from qptdetect.errors import InsufficientDataError
from qptdetect.hilbert import ModelSpec
from qptdetect.measures import TauConfig


def test_grid_values_inclusive_and_offset():
    g = grid_values(0.5, 1.5, 0.01)
    assert g.size == 101 and g[0] == 0.5 and g[-1] == 1.5
    h = grid_values(-1, 1, 0.5, 0.25)
    np.testing.assert_allclose(h, [-0.75, -0.25, 0.25, 0.75, 1.25])
    with pytest.raises(ValueError):
        grid_values(1, 0, 0.1)


def test_parabola_vertex_recovered():
    x = grid_values(-1, 1, 0.05)
    y = 3 * (x - 0.1234) ** 2 - 2
    ext = find_extrema(x, y)
    assert len(ext) == 1
    assert ext[0].kind == "min"
    assert ext[0].location == pytest.approx(0.1234, abs=1e-10)
    assert ext[0].value == pytest.approx(-2, abs=1e-10)


def test_monotone_series_has_no_extrema():
    x = grid_values(0, 1, 0.01)
    assert find_extrema(x, np.tanh(3 * x)) == []


def test_step_is_classified_as_jump():
    x = grid_values(0, 1, 0.01)
    y = 0.1 * x + (x > 0.5)
    ext = find_extrema(x, y)
    assert [e.kind for e in ext] == ["jump"]
    assert ext[0].location == pytest.approx(0.505, abs=1e-12)


def test_jump_window_flags_isolated_step_on_flat_series():
    x = grid_values(0, 1, 0.1)
    y = np.where(x > 0.45, 1.0, 0.0)
    assert [e.kind for e in find_extrema(x, y, jump_window=3)] == ["jump"]


def test_sharp_continuous_peak_is_an_extremum_not_a_jump():
    # a narrow Lorentzian: many steep differences in a row, no discontinuity
    x = grid_values(0, 1, 0.01)
    y = 1.0 / (1.0 + ((x - 0.503) / 0.02) ** 2)
    ext = find_extrema(x, y)
    assert [e.kind for e in ext] == ["max"]
    assert ext[0].location == pytest.approx(0.503, abs=0.005)
    # the same data still produce jumps when long runs are allowed
    assert any(e.kind == "jump" for e in find_extrema(x, y, jump_run=100))


def test_prominence_filters_small_wiggles():
    x = grid_values(0, 2 * math.pi, 0.01)
    y = np.sin(x) + 1e-3 * np.sin(40 * x)
    kinds = [e.kind for e in find_extrema(x, y, prominence=0.05)]
    assert kinds == ["max", "min"]


def test_derivative_and_uniform_grid_check():
    x = grid_values(0, 1, 0.01)
    _, d = derivative(x, x ** 2)
    np.testing.assert_allclose(d[1:-1], 2 * x[1:-1], atol=1e-12)
    with pytest.raises(ValueError):
        derivative(np.array([0, 0.1, 0.3]), np.zeros(3))
    with pytest.raises(InsufficientDataError):
        derivative([0, 1], [0, 1])


def test_extremum_of():
    x = grid_values(-1, 1, 0.1)
    loc, val = extremum_of(x, -(x - 0.33) ** 2 + 1, "max")
    assert loc == pytest.approx(0.33, abs=1e-12)
    assert val == pytest.approx(1.0, abs=1e-12)
    loc, _ = extremum_of(x, x, "min")
    assert loc == -1.0


def test_finite_size_scaling_exact_line():
    pts = [(n, 1.0, 0.36 + 2.5 / n ** 2) for n in (8, 10, 12, 14, 16)]
    res = finite_size_scaling(pts)
    assert res.extrapolated == pytest.approx(0.36, abs=1e-12)
    assert res.slope == pytest.approx(2.5, abs=1e-9)
    assert res.residual < 1e-12
    with pytest.raises(InsufficientDataError):
        finite_size_scaling(pts[:2])
    with pytest.raises(InsufficientDataError):
        finite_size_scaling([(8, 1, 1), (8, 1, 1.1), (10, 1, 1)])


def test_settings_validation():
    with pytest.raises(ValueError):
        EvalSettings(measures=())
    with pytest.raises(ValueError):
        EvalSettings(measures=("entropy",))
    with pytest.raises(ValueError):
        EvalSettings(distances=(0,))
    with pytest.raises(ValueError):
        EvalSettings(sector="up")
    assert EvalSettings(measures=("tau_sef", "qd"), distances=(1, 3)).columns() == \
        ["tau_sef", "qd_r1", "qd_r3"]


def test_scan_parallel_matches_sequential():
    tmpl = ModelSpec("xxz", 8, {"delta": 0.0})
    st = EvalSettings(measures=("tau_sef", "eof", "e2v"), distances=(1, 2))
    grid = grid_values(0.5, 1.5, 0.25)
    a = scan(tmpl, "delta", grid, st, workers=1)
    b = scan(tmpl, "delta", grid, st, workers=2)
    assert [r.value for r in a] == list(grid)
    for ra, rb in zip(a, b):
        assert ra.values == rb.values


def test_scan_on_record_order_and_ascending_grid():
    tmpl = ModelSpec("xymi", 101, {"gamma": 0.5})
    st = EvalSettings(engine="ff", tau=TauConfig(r_max=50, tail_tol=1e-14))
    seen = []
    scan(tmpl, "lambda", [0.1, 0.2, 0.3], st, workers=1, on_record=lambda i, r: seen.append(i))
    assert seen == [0, 1, 2]
    with pytest.raises(ValueError):
        scan(tmpl, "lambda", [0.2, 0.1], st, workers=1)
    with pytest.raises(ValueError):
        scan(ModelSpec("xxz", 8), "delta", [0.1], st, workers=1)


def test_ed_and_ff_engines_agree_on_a_point():
    spec = ModelSpec("xymi", 9, {"gamma": 0.4, "lambda": 0.6, "alpha": 0.1})
    ed = evaluate_point(spec, EvalSettings(measures=("tau_sef", "eof"), distances=(1, 2)))
    fe = evaluate_point(spec, EvalSettings(measures=("tau_sef", "eof"), distances=(1, 2), engine="ff"))
    for k in ed.values:
        assert ed.values[k] == pytest.approx(fe.values[k], abs=1e-9)


def test_lowest_sector_policy_finds_ferromagnet():
    spec = ModelSpec("xxz", 8, {"delta": -1.5})
    auto = evaluate_point(spec, EvalSettings(measures=("e1",)))
    low = evaluate_point(spec, EvalSettings(measures=("e1",), sector="lowest"))
    # the ferromagnet lives in the fully polarized sector, unentangled
    assert low.values["e1"] == pytest.approx(0.0, abs=1e-12)
    assert auto.values["e1"] > 0.5
    assert low.degenerate


def test_series_of_records():
    tmpl = ModelSpec("xxz", 6, {"delta": 0.0})
    recs = scan(tmpl, "delta", [0.0, 0.5], EvalSettings(), workers=1)
    x, y = series(recs, "tau_sef")
    assert list(x) == [0.0, 0.5]
    assert np.all(np.isfinite(y))
    assert np.isnan(series(recs, "missing")[1]).all()


def test_chain_ridges_continuation_branch_and_merge():
    x = np.arange(6) * 0.1
    cols = [[0.0], [0.01], [0.02, 0.08], [0.03, 0.09], [0.04, 0.06], [0.05]]
    lines = chain_ridges(cols, x, 0.01, max_jump=3)
    main = lines[0]
    assert [p[1] for p in main] == [0.0, 0.01, 0.02, 0.03, 0.04, 0.05]
    # the upper ridge is born away from its parent, then merges back
    upper = lines[1]
    assert upper[0] == (0.2, 0.08)
    assert upper[-1] == (0.5, 0.05)


def test_chain_ridges_attaches_branch_to_parent():
    x = np.arange(3) * 0.1
    lines = chain_ridges([[0.0], [0.0, 0.05], [0.0, 0.05]], x, 0.01, max_jump=3)
    assert lines[1][0] == (0.0, 0.0)


def test_constant_field_has_no_ridges():
    x = np.linspace(0, 1, 5)
    y = np.linspace(0, 1, 50)
    pd = diagram_from_field("a", "b", x, y, np.ones((5, 50)))
    assert pd.ridges == []
    assert count_regions(pd) == 1


def test_two_ridges_make_three_regions():
    x = np.linspace(0, 1, 20)
    y = np.linspace(-2, 2, 401)
    fld = np.array([np.exp(-((y - 1 - 0.3 * xv) / 0.03) ** 2) -
                    np.exp(-((y + 1) / 0.03) ** 2) for xv in x])
    pd = diagram_from_field("a", "b", x, y, fld)
    long_lines = [l for l in pd.ridges if len(l) >= 3]
    assert len(long_lines) == 2
    assert count_regions(pd) == 3
    mask = ridge_mask(pd, 3)
    assert mask.sum() >= 40
    cells = list(pd.cells()) if hasattr(pd, "cells") else []
    assert len(cells) == 20 * 401
