import numpy as np
import pytest

from planar_antenna.design import (
    StackTemplate,
    efficiency_map,
    eta_at,
    optimize,
    sensitivity_box,
)
from planar_antenna.emission import ObjectiveGeometry, efficiency
from planar_antenna.errors import InfeasibleDomainError

T = StackTemplate()


def test_map_flags_invalid_cells(objective):
    m = efficiency_map(T, (100, 400), (50, 450), 7, objective, workers=1)
    for i, t in enumerate(m.t_grid):
        for j, h in enumerate(m.h_grid):
            assert m.valid[i, j] == (h < t)
            assert np.isnan(m.eta[i, j]) != m.valid[i, j]
    assert np.all((m.eta[m.valid] >= 0) & (m.eta[m.valid] <= 1))


def test_map_region_around_design_point(objective):
    m = efficiency_map(T, (330, 370), (180, 220), 5, objective, workers=2)
    assert m.valid.all()
    assert m.eta.min() >= 0.93
    # cells agree with a tighter adaptive evaluation
    for t, h, eta, _ in m.rows():
        tight = efficiency(T.build(t, h), objective, rtol=1e-10)
        assert eta == pytest.approx(tight, abs=1e-7)


def test_map_independent_of_worker_count(objective):
    a = efficiency_map(T, (300, 700), (100, 300), 4, objective, workers=1)
    b = efficiency_map(T, (300, 700), (100, 300), 4, objective, workers=4)
    np.testing.assert_array_equal(a.eta, b.eta)


def test_optimizer_beats_reference_map(objective):
    bounds_t, bounds_h = (200, 800), (50, 650)
    opt = optimize(T, bounds_t, bounds_h, objective)
    ref = efficiency_map(T, bounds_t, bounds_h, 50, objective)
    assert opt.h_star < opt.t_star
    assert opt.eta_star >= 0.955
    assert opt.eta_star >= np.nanmax(ref.eta) - 1e-9
    assert opt.eta_star == pytest.approx(eta_at(T, opt.t_star, opt.h_star, objective), abs=1e-12)


def test_optimizer_is_deterministic(objective):
    a = optimize(T, (300, 600), (100, 400), objective, coarse_steps=7)
    b = optimize(T, (300, 600), (100, 400), objective, coarse_steps=7)
    assert a == b


def test_optimizer_collapsed_bounds(objective):
    opt = optimize(T, (350, 350), (200, 200), objective)
    assert (opt.t_star, opt.h_star) == (350, 200)
    assert opt.eta_star == pytest.approx(eta_at(T, 350, 200, objective), abs=0)


def test_optimizer_single_free_axis(objective):
    opt = optimize(T, (350, 350), (100, 300), objective, coarse_steps=9)
    assert opt.t_star == 350
    assert 100 <= opt.h_star <= 300


def test_lower_na_lowers_optimum(objective):
    hi = optimize(T, (300, 700), (100, 500), objective, coarse_steps=9)
    lo = optimize(T, (300, 700), (100, 500), ObjectiveGeometry(1.0, 1.78), coarse_steps=9)
    assert lo.eta_star < hi.eta_star


def test_infeasible_domain(objective):
    with pytest.raises(InfeasibleDomainError):
        optimize(T, (100, 200), (300, 400), objective)
    with pytest.raises(InfeasibleDomainError):
        eta_at(T, 200, 250, objective)


def test_sensitivity_box(objective):
    lo, hi, c = sensitivity_box(T, 350, 200, 20, 20, objective)
    assert lo <= c <= hi
    assert hi - lo <= 0.03
    lo0, hi0, c0 = sensitivity_box(T, 350, 200, 0, 0, objective)
    assert lo0 == hi0 == c0 == eta_at(T, 350, 200, objective)
    assert abs(eta_at(T, 600, 200, objective) - c) <= 0.05
    with pytest.raises(InfeasibleDomainError):
        sensitivity_box(T, 350, 330, 20, 20, objective)
