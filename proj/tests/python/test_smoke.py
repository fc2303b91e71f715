import math

import pytest

import pamlab


def test_kappa_zero_is_the_time_average():
    traj = pamlab.sample_env(pamlab.EnvConfig.two_state_spin(1, 3, 20.0, 1.0, 5))
    est = pamlab.lyapunov_sweep(traj, [0.0], 20.0, 10, 1)[0]
    assert est["lambda_hat"] == pytest.approx(traj.integrate([0], 0.0, 20.0) / 20.0, rel=1e-14)


def test_frozen_field_against_oracle():
    values = [([x], 0.1 * x) for x in range(-3, 4)]
    traj = pamlab.sample_env(pamlab.EnvConfig.frozen_field(1, 3, 1.0, values))
    c = pamlab.mc_vs_oracle(traj, 1.0, 1.0, 20000, 9)
    assert abs(c["z"]) < 4.0
    assert c["oracle_u"] > 0.0


def test_trajectory_round_trip():
    traj = pamlab.sample_env(pamlab.EnvConfig.two_state_spin(1, 2, 5.0, 1.0, 3))
    back = pamlab.read_trajectory(traj.write())
    assert back.event_count == traj.event_count
    assert back.value([1], 2.5) == traj.value([1], 2.5)


def test_rearrangement():
    assert [pamlab.spiral_site(r) for r in range(5)] == [0, 1, -1, 2, -2]
    assert pamlab.rearrange({-4: 1.0, 7: 3.0, 2: 2.0}) == {0: 3.0, 1: 2.0, -1: 1.0}
    lhs, rhs, holds = pamlab.riesz_check([1.0, 0.5, 0.25], {3: 1.0, 5: 2.0}, {-2: 1.0})
    assert holds and lhs <= rhs
    for checks, violations in pamlab.property_suite(1, 50, 50, 5).values():
        assert checks > 0 and violations == 0


def test_closed_forms():
    assert pamlab.dirichlet_top_1d(3) == pytest.approx(-2.0 * (1.0 - math.cos(math.pi / 8.0)))
    exact, bound, holds = pamlab.poisson_tail(2.0, 10)
    assert holds and exact <= bound
    r = pamlab.schedule_report(0.05, 2.0)
    assert r["A_valid"] and r["certificate"]


def test_errors_and_cli(tmp_path):
    with pytest.raises(pamlab.ParameterError):
        pamlab.schedule_report(-1.0, 2.0)
    cfg = tmp_path / "s.ini"
    cfg.write_text("schema_version = 1\n[schedule]\neps = 0.05\na = 2\n")
    code, out, _ = pamlab.run_cli(["schedule-report", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "schedule-report.csv").exists()
    code, _, err = pamlab.run_cli(["schedule-report", "--config", str(tmp_path / "none.ini")])
    assert code == 2 and "config" in err
