import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftsac.evaluation import (LOG_COLUMNS, MISSING, MetricsReport, RolloutLog, TABLE_COLUMNS,
                                 aggregate, compare_table, compute_metrics, plot_data_csv,
                                 rolling_std, smoothness)
from driftsac.track import oval_track, straight_track

DT = 0.02


def synthetic_log(n, steer=None, v_x=20.0, v_y=0.0, e_y=0.0, e_psi=0.0, s=None,
                  terminal="Arrival", reference_relative=True):
    """Log moving along +x at constant velocity; unspecified channels are zero."""
    log = RolloutLog(dt=DT, track_name="synthetic", terminal=terminal,
                     reference_relative=reference_relative)
    steer = np.zeros(n) if steer is None else np.asarray(steer, dtype=float)
    for k in range(n):
        t = (k + 1) * DT
        x = v_x * t
        row = dict.fromkeys(LOG_COLUMNS, 0.0)
        row.update(t=t, x=x, v_x=v_x, v_y=v_y, delta=steer[k], steer_cmd=steer[k],
                   e_y=e_y, e_psi=e_psi, s=x if s is None else s[k])
        log.rows.append(tuple(row[c] for c in LOG_COLUMNS))
    return log


def report(**kw):
    base = dict(cte_mean=1.0, hae_mean=2.0, max_vel=100.0, avg_vel=80.0, lap_time=150.0,
                smos=0.1, slip_max=20.0, corner_cte=1.5, corner_hae=3.0, corner_avg_vel=70.0)
    base.update(kw)
    return MetricsReport(**base)


# -- compute_metrics -------------------------------------------------------


def test_constant_steering_has_zero_smos():
    log = synthetic_log(200, steer=np.full(200, 0.3))
    assert compute_metrics(log, straight_track(400.0)).smos == 0.0


def test_square_wave_steering_smos():
    steer = 0.1 * (-1.0) ** np.arange(300)
    windows = rolling_std(steer, 50)
    assert np.allclose(windows, 0.1, rtol=0, atol=1e-15)
    log = synthetic_log(300, steer=steer)
    assert compute_metrics(log, straight_track(400.0)).smos == pytest.approx(0.1, abs=1e-15)


def test_centerline_at_72_kmh():
    log = synthetic_log(250, v_x=20.0)
    rep = compute_metrics(log, straight_track(400.0))
    assert rep.cte_mean == 0.0
    assert rep.hae_mean == 0.0
    assert rep.avg_vel == pytest.approx(72.0, abs=1e-12)
    assert rep.max_vel == pytest.approx(72.0, abs=1e-12)
    assert rep.slip_max == 0.0
    assert rep.lap_time == pytest.approx(250 * DT, abs=1e-12)


def test_absolute_errors_and_slip_in_degrees():
    log = synthetic_log(100, v_x=10.0, v_y=10.0, e_y=-0.5, e_psi=-0.1)
    rep = compute_metrics(log, straight_track(400.0))
    assert rep.cte_mean == pytest.approx(0.5, abs=1e-15)
    assert rep.hae_mean == pytest.approx(math.degrees(0.1), abs=1e-12)
    assert rep.slip_max == pytest.approx(45.0, abs=1e-12)
    assert rep.avg_vel == pytest.approx(3.6 * math.hypot(10.0, 10.0), abs=1e-12)


@pytest.mark.parametrize("terminal", ["Collision", "OffTrack", "Timeout"])
def test_lap_time_only_for_arrival(terminal):
    rep = compute_metrics(synthetic_log(80, terminal=terminal), straight_track(400.0))
    assert rep.lap_time is None


def test_rough_reference_hides_error_metrics():
    rep = compute_metrics(synthetic_log(80, reference_relative=False), straight_track(400.0))
    assert rep.cte_mean is None and rep.hae_mean is None
    assert rep.corner_cte is None and rep.corner_hae is None
    assert rep.avg_vel == pytest.approx(72.0)


def test_short_log_falls_back_with_warning(caplog):
    steer = np.array([0.0, 0.2, 0.0, 0.2])
    with caplog.at_level(logging.WARNING):
        value = smoothness(steer, window=50)
    assert value == pytest.approx(0.1, abs=1e-15)
    assert "shorter" in caplog.text


def test_empty_log_rejected():
    with pytest.raises(ValueError):
        compute_metrics(RolloutLog(dt=DT), straight_track(100.0))


def test_corner_metrics_use_corner_samples_only():
    track = oval_track(straight=100.0, radius=40.0)
    corner = track.corner_segments[0]
    n = 200
    s = np.linspace(0.0, corner.end + 10.0, n)
    log = synthetic_log(n, s=s)
    inside = (s >= corner.start) & (s < corner.end)
    ey = np.where(inside, 2.0, 0.5)
    log.rows = [r[:LOG_COLUMNS.index("e_y")] + (float(e),) + r[LOG_COLUMNS.index("e_y") + 1:]
                for r, e in zip(log.rows, ey)]
    rep = compute_metrics(log, track)
    assert rep.corner_cte == pytest.approx(2.0)
    assert rep.cte_mean == pytest.approx(float(np.mean(ey)))


@given(st.lists(st.floats(-1, 1), min_size=60, max_size=120),
       st.lists(st.floats(0.0, 5.0), min_size=60, max_size=60))
@settings(max_examples=40, deadline=None)
def test_metric_invariants(steer, ey):
    n = len(ey)
    track = oval_track()
    log = synthetic_log(n, steer=steer[:n], s=np.linspace(0, 300, n))
    j = LOG_COLUMNS.index("e_y")
    log.rows = [r[:j] + (e,) + r[j + 1:] for r, e in zip(log.rows, ey)]
    rep = compute_metrics(log, track)
    speed = np.hypot(log.column("v_x"), log.column("v_y"))
    assert rep.avg_vel == 3.6 * float(speed.mean())
    assert rep.smos >= 0.0
    if rep.corner_cte is not None:
        assert 0.0 <= rep.corner_cte <= max(ey)
    assert compute_metrics(log, track) == rep


# -- aggregation -------------------------------------------------------------


def test_single_report_aggregates_to_itself():
    agg = aggregate([report()])
    assert agg.report() == report()
    assert all(v == 0.0 for v in agg.std.values())


def test_two_lap_times_mean_and_population_std():
    agg = aggregate([report(lap_time=100.0), report(lap_time=110.0)])
    assert agg.mean["lap_time"] == 105.0
    assert agg.std["lap_time"] == 5.0


def test_missing_lap_time_excluded_and_counted():
    agg = aggregate([report(lap_time=100.0), report(lap_time=None), report(lap_time=120.0)])
    assert agg.mean["lap_time"] == 110.0
    assert agg.count["lap_time"] == 2
    assert agg.n_runs == 3
    none = aggregate([report(lap_time=None)] * 2)
    assert none.mean["lap_time"] is None and none.count["lap_time"] == 0


# -- comparison table --------------------------------------------------------


def test_two_row_table_has_ten_metric_columns():
    table = compare_table({"SAC": report(), "SAC-WOS": report(smos=0.6)})
    assert table.labels == ["SAC", "SAC-WOS"]
    assert len(table.columns) == 10
    assert table.columns == [title for _, title, _ in TABLE_COLUMNS]
    lines = table.to_csv().strip().splitlines()
    assert len(lines) == 3
    assert "SMOS" in table.to_text().splitlines()[0]


def test_best_flags_follow_column_sense():
    table = compare_table({"a": report(smos=0.1, max_vel=90.0), "b": report(smos=0.5, max_vel=95.0)})
    smos = table.columns.index("SMOS")
    vel = table.columns.index("MAX-VEL")
    assert table.best[0][smos] and not table.best[1][smos]
    assert table.best[1][vel] and not table.best[0][vel]


def test_ties_flag_both_rows():
    table = compare_table({"a": report(), "b": report()})
    assert all(all(row) for row in table.best)


def test_missing_values_render_as_placeholder():
    table = compare_table({"SAC": report(), "AppTest": report(cte_mean=None, hae_mean=None)})
    text = table.to_text()
    app_row = [ln for ln in text.splitlines() if ln.startswith("AppTest")][0]
    assert MISSING in app_row
    assert app_row.split()[1] == MISSING
    assert not table.best[1][0]
    assert table.best[0][0]


def test_single_run_comparison_refused():
    with pytest.raises(ValueError):
        compare_table({"only": report()})


# -- files ---------------------------------------------------------------------


def test_rollout_log_round_trip(tmp_path):
    log = synthetic_log(30, steer=np.linspace(-0.2, 0.2, 30), terminal="Timeout")
    log.meta = {"variant": "sac"}
    path = tmp_path / "run.csv"
    log.save(path)
    back = RolloutLog.load(path)
    assert back.rows == log.rows
    assert back.terminal == "Timeout" and back.meta == {"variant": "sac"}
    assert json.loads((tmp_path / "run.csv.meta.json").read_text())["dt"] == DT


def test_plot_data_columns():
    lines = plot_data_csv(synthetic_log(5)).splitlines()
    assert lines[0].split(",") == ["t", "s", "e_y", "e_psi_deg", "slip_deg", "speed_kmh", "steer"]
    assert len(lines) == 6
    assert float(lines[1].split(",")[5]) == pytest.approx(72.0)
