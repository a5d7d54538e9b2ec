import math

import numpy as np
import pytest

from driftsac.geometry import wrap_angle
from driftsac.track import (ReferenceSource, ReferenceTrajectory, TrackGenerationError, TrackSpec,
                            corner_mask, generate_track, load_track, load_trajectory,
                            lookahead, nearest_point, oval_track, recorded_reference,
                            rough_centerline_reference, save_track, save_trajectory,
                            scripted_expert_reference, straight_track)
from driftsac.control import Action
from driftsac.vehicle import VehicleState, step


def test_zero_corners_is_straight():
    tr = generate_track(TrackSpec(seed=3, n_corners=0))
    assert tr.corner_segments == ()
    heading = tr.tangent_headings()
    assert np.allclose(heading, heading[0])


def test_generation_is_pure():
    spec = TrackSpec(seed=11, n_corners=4)
    a, b = generate_track(spec), generate_track(spec)
    assert np.array_equal(a.centerline, b.centerline)
    assert a.corner_segments == b.corner_segments


def test_corner_angles_match_geometry():
    tr = generate_track(TrackSpec(seed=7, n_corners=6, corner_angle_range_deg=(40, 180)))
    assert len(tr.corner_segments) == 6
    h = tr.tangent_headings()
    for c in tr.corner_segments:
        assert 40.0 <= c.angle_deg <= 180.0
        i0 = int(np.searchsorted(tr.s, c.start)) - 2
        i1 = int(np.searchsorted(tr.s, c.end)) + 2
        # straights on both sides, so summing wrapped steps recovers the turn
        turn = math.degrees(sum(wrap_angle(b - a) for a, b in zip(h[i0:i1], h[i0 + 1:i1 + 1])))
        assert abs(turn) == pytest.approx(c.angle_deg, abs=0.5)
        assert math.copysign(1, turn) == c.direction


def test_track_invariants():
    tr = generate_track(TrackSpec(seed=5, n_corners=5))
    gaps = np.hypot(*np.diff(tr.centerline, axis=0).T)
    assert gaps.max() <= 2.0
    for c in tr.corner_segments:
        assert 0.0 <= c.start < c.end <= tr.total_length


def test_angle_bound_message():
    with pytest.raises(ValueError, match=r"\[40, 180\]"):
        TrackSpec(seed=1, n_corners=2, corner_angle_range_deg=(30, 90))


def test_generation_failure_is_reported():
    spec = TrackSpec(seed=1, n_corners=12, corner_angle_range_deg=(170, 180),
                     segment_length_range_m=(1, 2), radius_range_m=(9, 9.5))
    with pytest.raises(TrackGenerationError):
        generate_track(spec, max_attempts=3)


def test_expert_on_straight(trainer_params):
    ref = scripted_expert_reference(straight_track(300.0), trainer_params)
    assert np.all(ref.beta == 0.0)
    assert np.allclose(ref.vx, trainer_params.top_speed)


def _one_corner(angle):
    return generate_track(TrackSpec(seed=2, n_corners=1, corner_angle_range_deg=(angle, angle),
                                    segment_length_range_m=(80, 80)))


def test_expert_drifts_only_inside_corner(trainer_params):
    tr = _one_corner(90.0)
    ref = scripted_expert_reference(tr, trainer_params)
    c = tr.corner_segments[0]
    inside = (ref.s >= c.start) & (ref.s < c.end)
    assert np.degrees(np.abs(ref.beta[inside])).max() > 15.0
    assert np.all(ref.beta[~inside] == 0.0)
    # nose points into the turn: slip opposes the turn direction
    nonzero = ref.beta[inside][ref.beta[inside] != 0.0]
    assert np.all(np.sign(nonzero) == -c.direction)
    assert np.allclose(ref.vy, np.hypot(ref.vx, ref.vy) * np.sin(ref.beta))


def test_sharper_corner_is_slower(trainer_params):
    def corner_min_speed(angle):
        tr = _one_corner(angle)
        ref = scripted_expert_reference(tr, trainer_params)
        c = tr.corner_segments[0]
        inside = (ref.s >= c.start) & (ref.s < c.end)
        return ref.speed[inside].min()

    assert corner_min_speed(150.0) < corner_min_speed(60.0)


def test_rough_reference():
    tr = generate_track(TrackSpec(seed=4, n_corners=3))
    ref = rough_centerline_reference(tr, 30.0)
    assert np.all(ref.beta == 0.0) and np.all(ref.vy == 0.0)
    assert np.all(ref.vx == 30.0)
    assert ref.source is ReferenceSource.ROUGH_CENTERLINE
    with pytest.raises(ValueError):
        rough_centerline_reference(tr, 0.0)


def test_rough_heading_constant_on_straight():
    ref = rough_centerline_reference(straight_track(100.0), 20.0)
    assert np.allclose(ref.psi, ref.psi[0])


def test_loop_heading_periodic():
    ref = rough_centerline_reference(oval_track(), 20.0)
    assert abs(wrap_angle(ref.at(0.0).psi_ref - ref.at(ref.total_length).psi_ref)) < 1e-9
    seam = math.atan2(ref.y[0] - ref.y[-1], ref.x[0] - ref.x[-1])
    assert abs(wrap_angle(ref.psi[0] - seam)) < 0.02


def test_all_sources_sane(small_track, trainer_params):
    states = [VehicleState(v_x=15.0)]
    for _ in range(200):
        states.append(step(states[-1], Action(0.1, 0.8), trainer_params, 0.02))
    for ref in (scripted_expert_reference(small_track, trainer_params),
                rough_centerline_reference(small_track, 25.0),
                recorded_reference(states)):
        assert np.all(np.abs(ref.beta) < math.pi / 2)
        assert np.all(np.isfinite(ref.speed))
        assert np.all(np.diff(ref.s) > 0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        ReferenceTrajectory(*(np.arange(5.0),) * 7, source="ScriptedExpert")
    cols = [np.arange(12.0)] * 7
    bad = list(cols)
    bad[1] = np.full(12, math.nan)
    with pytest.raises(ValueError):
        ReferenceTrajectory(*bad, source="ScriptedExpert")


def test_nearest_point_examples():
    ref = rough_centerline_reference(straight_track(100.0), 20.0)
    assert nearest_point(ref, (37.0, 0.0), 30) == (37, 0.0)
    i, d = nearest_point(ref, (42.3, 2.0), 40)
    assert abs(d - 2.0) <= 0.5
    j, e = nearest_point(ref, (42.3, -2.0), 40)
    assert i == j and e == -d


def test_hint_search_equals_global(small_reference, rng):
    ref = small_reference
    for _ in range(1000):
        k = int(rng.integers(len(ref)))
        ang = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(0, 15.0)
        pos = (ref.x[k] + r * math.cos(ang), ref.y[k] + r * math.sin(ang))
        hint = int(np.clip(k + rng.integers(-10, 11), 0, len(ref) - 1))
        local = nearest_point(ref, pos, hint)
        glob = nearest_point(ref, pos, None)
        assert local == glob


def test_lookahead_rules():
    ref = rough_centerline_reference(straight_track(200.0), 20.0)
    pts = lookahead(ref, 50, 10, 2.0)
    assert len(pts) == 10
    assert all(b.s > a.s for a, b in zip(pts, pts[1:]))
    assert np.allclose(np.diff([p.x for p in pts]), 2.0)
    end = lookahead(ref, len(ref) - 1)
    assert len(end) == 10 and all(p == ref.point(len(ref) - 1) for p in end)
    with pytest.raises(ValueError):
        lookahead(ref, 0, 0)


def test_corner_mask_convention():
    tr = _one_corner(90.0)
    c = tr.corner_segments[0]
    assert corner_mask(tr, c.start)
    assert corner_mask(tr, 0.5 * (c.start + c.end))
    assert not corner_mask(tr, c.end)
    straight = straight_track(100.0)
    assert not any(corner_mask(straight, s) for s in np.linspace(0, 100, 101))


def test_files_round_trip(tmp_path, small_track, small_reference):
    save_track(small_track, tmp_path / "t.json")
    back = load_track(tmp_path / "t.json")
    assert np.array_equal(back.centerline, small_track.centerline)
    assert back.corner_segments == small_track.corner_segments
    assert back.spec == small_track.spec
    save_trajectory(small_reference, tmp_path / "r.json")
    ref = load_trajectory(tmp_path / "r.json")
    assert np.array_equal(ref.beta, small_reference.beta)
    assert ref.source is ReferenceSource.SCRIPTED_EXPERT


def test_file_format_checked(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other", "version": 1}')
    with pytest.raises(ValueError):
        load_track(tmp_path / "x.json")
