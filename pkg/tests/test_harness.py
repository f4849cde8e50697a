import numpy as np
import pytest

from aerialpush.harness import (
    CSV_HEADER,
    EvalConfig,
    EvalRow,
    export_csv,
    export_trajectory,
    parse_csv,
    read_trajectory,
    rollout,
    run_eval,
)


@pytest.fixture(scope="module")
def scripted_row():
    return run_eval(EvalConfig(friction_values=(0.4,), episodes_per_value=10, max_steps=300))


def test_scripted_eval_row(scripted_row):
    (row,) = scripted_row
    assert row.friction == 0.4 and row.episodes == 10
    assert row.mean_goals >= 1
    goals = np.array([s.goals_completed for s in row.stats], dtype=float)
    rewards = np.array([s.total_reward for s in row.stats])
    # recompute independently of numpy's std
    mean = sum(goals) / len(goals)
    var = sum((g - mean) ** 2 for g in goals) / len(goals)
    assert row.mean_goals == pytest.approx(mean, abs=1e-9)
    assert row.std_goals == pytest.approx(var ** 0.5, abs=1e-9)
    assert row.mean_reward == pytest.approx(sum(rewards) / len(rewards), abs=1e-9)


def test_hover_completes_nothing():
    (row,) = run_eval(EvalConfig(friction_values=(0.3,), episodes_per_value=2, agent="hover", max_steps=50))
    assert row.mean_goals == 0 and row.std_goals == 0 and row.collision_rate == 0


def test_csv_is_deterministic(scripted_row):
    again = run_eval(EvalConfig(friction_values=(0.4,), episodes_per_value=10, max_steps=300))
    assert export_csv(again) == export_csv(scripted_row)


def test_csv_layout_and_round_trip(scripted_row):
    text = export_csv(scripted_row)
    lines = text.splitlines()
    assert len(lines) == 2 and lines[0] == ",".join(CSV_HEADER)
    (back,) = parse_csv(text)
    (row,) = scripted_row
    for name in CSV_HEADER:
        assert getattr(back, name) == pytest.approx(getattr(row, name), abs=1e-6)


def test_csv_sorted_by_friction():
    rows = [EvalRow(mu, 1, 0.0, 0.0, 0.0, 0.0) for mu in (0.6, 0.2, 0.4)]
    assert [r.friction for r in parse_csv(export_csv(rows))] == [0.2, 0.4, 0.6]


def test_empty_export_rejected():
    with pytest.raises(ValueError):
        export_csv([])
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def test_eval_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(agent="random")
    with pytest.raises(ValueError):
        EvalConfig(episodes_per_value=0)
    with pytest.raises(ValueError):
        EvalConfig(friction_values=())


def test_workers_do_not_change_results():
    cfg = EvalConfig(friction_values=(0.2, 0.6), episodes_per_value=2, max_steps=100)
    assert export_csv(run_eval(cfg)) == export_csv(run_eval(EvalConfig(**{**cfg.__dict__, "workers": 2})))


def test_trajectory_export_matches_log():
    ep = rollout("scripted", friction=0.4, seed=0, max_steps=1000)
    text = export_trajectory(ep.log)
    assert len(text.splitlines()) == 1001
    cols = read_trajectory(text)
    assert len(cols["time"]) == 1000
    pos = np.array([r.object for r in ep.log])
    veh = np.array([r.vehicle[:3] for r in ep.log])
    np.testing.assert_allclose(np.c_[cols["object_x"], cols["object_y"], cols["object_z"]], pos, atol=1e-9)
    np.testing.assert_allclose(np.c_[cols["vehicle_x"], cols["vehicle_y"], cols["vehicle_z"]], veh, atol=1e-9)
    np.testing.assert_allclose(cols["reward_total"], [r.reward.total for r in ep.log], atol=1e-9)
    assert cols["time"][0] == pytest.approx(0.1)


def test_read_trajectory_requires_header():
    with pytest.raises(ValueError):
        read_trajectory("1,2,3\n")
