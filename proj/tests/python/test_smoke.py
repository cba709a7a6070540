import json
import math
import os

import pytest

import vppsim

DATA = os.environ.get("VPPSIM_DATA", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_benchmark_round_trip():
    s = vppsim.benchmark_scenario()
    assert s.gamma == pytest.approx(0.9)
    assert s.zeta == pytest.approx(2.7)
    again = vppsim.Scenario.from_json(s.to_json())
    assert json.loads(again.to_json()) == json.loads(s.to_json())


def test_load_scenario_file():
    s = vppsim.load_scenario(os.path.join(DATA, "benchmark.json"))
    assert s.consumers_per_subregion == 300
    assert len(s.subregions) == 3


def test_precisions_and_b1():
    s = vppsim.benchmark_scenario()
    assert vppsim.optimal_precision_cen(s)[1] == pytest.approx(0.95618, abs=1e-4)
    assert vppsim.optimal_precision_dis(s)[1] == pytest.approx(0.93658, abs=1e-4)
    assert vppsim.centralized_b1(s, [0.0, 0.0, 0.0]) == pytest.approx(83.57 / 10.7, rel=1e-12)


def test_estimator_and_cost():
    assert vppsim.blue_coefficients(3000.0, 3000.0, 500.0) == pytest.approx((250.0, 0.5))
    assert vppsim.precision_cost(5.0, 300, 3000.0, 0.5) == pytest.approx(5.0 / 300 / 3000)
    with pytest.raises(Exception):
        vppsim.precision_cost(5.0, 300, 3000.0, 1.0)


def test_dpp_converges_to_fixed_point():
    s = vppsim.benchmark_scenario()
    r = vppsim.dpp_run(s, [320.0, 530.0, 410.0], seed=3, eps=1e-9)
    assert r["status"] == "converged"
    fp = vppsim.fixed_point_demand(s, vppsim.optimal_precision_dis(s), r["signal"])
    for a, b in zip(r["avg_demand"], fp):
        assert abs(a - b) < 1e-8


def test_c1_boundary_and_divergence():
    s = vppsim.benchmark_scenario(3000)
    c1 = vppsim.check_c1(s)
    assert not c1["holds"]
    assert c1["max_consumers"] == 2666
    assert vppsim.dpp_run(s, [300.0, 500.0, 400.0])["status"] == "diverged"
    with pytest.raises(vppsim.ConditionC1Error):
        vppsim.fixed_point_demand(s, [0.5, 0.5, 0.5], [300.0, 500.0, 400.0])


def test_gap_moments_small_run():
    s = vppsim.benchmark_scenario()
    cf = vppsim.gap_variance_closed_form(s)
    mc = vppsim.gap_moments_mc(s, trials=20000, seed=5, threads=1)
    for m, v in zip(mc, cf):
        assert abs(m["mean_gap"]) <= m["ci_halfwidth"] * 1.5
        assert m["var_gap"] == pytest.approx(v, rel=0.1)


def test_dispatch_and_calibration():
    with open(os.path.join(DATA, "two_generator_fleet.json")) as fh:
        fleet = vppsim.fleet_from_json(fh.read())
    d = vppsim.solve_dispatch(fleet, 10.0, 0.0)
    assert d["outputs"] == pytest.approx([3.0, 7.0])
    assert d["price"] == pytest.approx(28.0)
    segs = vppsim.calibrate_price_curve(fleet, 0.0, 20.0, 0.5)
    assert len(segs) == 2
    assert segs[0]["q_hi"] == pytest.approx(4.5, rel=1e-8)


def test_allocation_sums_to_total():
    x = vppsim.allocate_energy([(80 - 10) / 8, (80 - 20) / 8], 1 / 8, 2.0, 5.0, 7.0)
    assert x == pytest.approx([4.125, 2.875])
    assert math.isclose(sum(x), 7.0, abs_tol=1e-9)


def test_error_types():
    with pytest.raises(vppsim.InfeasibleError):
        vppsim.allocate_energy([1.0, 2.0], 0.125, 2.0, 5.0, 11.0)
    assert issubclass(vppsim.InfeasibleError, vppsim.NumericalError)
    assert issubclass(vppsim.ConditionC1Error, vppsim.NumericalError)
    s = vppsim.benchmark_scenario()
    s.alpha = -1.0
    with pytest.raises(vppsim.ValidationError):
        vppsim.validate_scenario(s)
