"""Smoke tests for the pybind11 module. PYTHONPATH must point at the built
extension (ctest wires this up automatically)."""

import math
import os

import pytest

import _vanetsim as vs


def test_haversine_matches_reference():
    # same fixture as the C++ oracle: two points 0.01 degrees of lon apart
    d = vs.haversine_distance(40.6405, -8.6538, 40.6405, -8.6438)
    assert abs(d - 843.7594594621576) < 1e-9
    assert vs.haversine_distance(40.0, -8.0, 40.0, -8.0) == 0.0


def test_bearing_axes():
    north = vs.bearing(40.0, -8.0, 41.0, -8.0)
    assert abs(north) < 1e-9
    east = vs.bearing(40.0, -8.0, 40.0, -7.0)
    assert abs(east - 90.0) < 0.5


def test_lora_airtime_pinned():
    assert abs(vs.lora_airtime(20, sf=10) - 0.370688) < 1e-12
    assert vs.lora_airtime(20, sf=9) < vs.lora_airtime(20, sf=10)
    with pytest.raises(ValueError):
        vs.lora_airtime(0)


def test_delivery_probability_midpoint():
    assert abs(vs.delivery_probability(-92.0) - 0.5) < 1e-9
    assert vs.delivery_probability(-60.0) > 0.99


def test_cam_roundtrip():
    raw = vs.encode_cam(
        station_id=1001,
        station_type=0,
        lat=40.6405,
        lon=-8.6538,
        speed=11.25,
        heading=271.5,
        generation_time=123456,
    )
    assert isinstance(raw, bytes)
    assert len(raw) == 27
    decoded = vs.decode_message(raw)
    assert decoded["kind"] == "cam"
    assert decoded["station_id"] == 1001
    assert abs(decoded["lat"] - 40.6405) < 1e-9
    assert abs(decoded["speed"] - 11.25) < 1e-9


def test_decode_rejects_junk():
    with pytest.raises(ValueError):
        vs.decode_message(b"")
    with pytest.raises(ValueError):
        vs.decode_message(b"\x09garbage")


def test_dissemination_hop_model():
    rows = vs.sample_ev_dissemination(trials=2000, seed=7)
    upcoming = sorted(r["upcoming_rsu"] for r in rows)
    median = upcoming[len(upcoming) // 2]
    p90 = upcoming[int(0.9 * len(upcoming))]
    assert 69.0 <= median <= 109.0
    assert p90 <= 108.0
    for r in rows[:100]:
        assert r["ev"] < r["detecting_rsu"] < r["upcoming_rsu"]


def test_run_scenario_summary(tmp_path):
    scenario = os.environ.get("VANETSIM_SCENARIO")
    if not scenario or not os.path.exists(scenario):
        pytest.skip("scenario file not available")
    out = vs.run_scenario(scenario, out_dir=str(tmp_path), seed=11, duration=30.0)
    assert out["seed"] == 11
    assert out["cams_sent"] > 0
    assert out["obuinfo_frames_via_data_rules"] == 0
    assert out["data_frames_parsed_as_obuinfo"] == 0
    assert (tmp_path / "run.json").exists()
    assert (tmp_path / "throughput.csv").exists()


def test_determinism_of_summary(tmp_path):
    scenario = os.environ.get("VANETSIM_SCENARIO")
    if not scenario or not os.path.exists(scenario):
        pytest.skip("scenario file not available")
    a = vs.run_scenario(scenario, out_dir="", seed=3, duration=20.0)
    b = vs.run_scenario(scenario, out_dir="", seed=3, duration=20.0)
    assert a == b
