import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from manifold_kf.simkit import (
    Constant,
    CsvFormatError,
    Ramp,
    ScenarioConfig,
    Sinusoid,
    Waypoints,
    gen_measurements,
    gen_truth,
    read_csv,
    write_csv,
)
from manifold_kf.tracking import Measurement, TrackRecord, TruthSample


def test_constant_profile():
    truth = gen_truth(ScenarioConfig(duration=1.0, profile=Constant(1.0)))
    assert len(truth) == 10
    assert all((s.theta, s.omega, s.alpha) == (1.0, 0.0, 0.0) for s in truth)


def test_ramp_profile():
    truth = gen_truth(ScenarioConfig(duration=0.3, period=0.1, profile=Ramp(0.5)))
    assert_allclose([s.theta for s in truth], [0.0, 0.05, 0.10], atol=1e-15)
    assert_allclose([s.t for s in truth], [0.0, 0.1, 0.2], atol=1e-15)
    assert all(s.omega == 0.5 for s in truth)


def test_sinusoid_crossing_seam():
    prof = Sinusoid(amplitude=0.5, frequency=0.05, offset=math.pi - 0.2)
    truth = gen_truth(ScenarioConfig(duration=5.0, period=0.01, profile=prof))
    theta = np.array([s.theta for s in truth])
    assert np.all((theta >= -math.pi) & (theta < math.pi))
    jumps = np.abs(np.diff(theta)) > math.pi
    assert jumps.sum() == 1
    assert_allclose(np.abs(np.diff(theta))[jumps], 2 * math.pi, atol=0.05)


@pytest.mark.parametrize(
    "profile",
    [Sinusoid(1.2, 0.1, 0.3, 0.7), Ramp(-0.4, 2.0), Waypoints((0, 3, 7), (0.0, 1.5, -0.5))],
    ids=["sinusoid", "ramp", "waypoints"],
)
def test_derivatives_consistent(profile):
    h = 1e-5
    for t in np.linspace(0.05, 9.95, 37):
        if isinstance(profile, Waypoints) and min(abs(t - 3), abs(t - 7)) < 1e-3:
            continue
        th = lambda s: profile.evaluate(np.array([s]))[0][0]  # noqa: E731
        om = lambda s: profile.evaluate(np.array([s]))[1][0]  # noqa: E731
        _, w, a = (v[0] for v in profile.evaluate(np.array([t])))
        assert_allclose(w, (th(t + h) - th(t - h)) / (2 * h), atol=1e-6)
        assert_allclose(a, (om(t + h) - om(t - h)) / (2 * h), atol=1e-5)


def test_waypoints_validation_and_hold():
    with pytest.raises(ValueError):
        Waypoints((0, 0), (1, 2))
    with pytest.raises(ValueError):
        Waypoints((0, 1), (1,))
    wp = Waypoints((1.0, 2.0), (0.5, 1.5))
    theta, omega, _ = wp.evaluate(np.array([0.0, 1.5, 3.0]))
    assert_allclose(theta, [0.5, 1.0, 1.5])
    assert_allclose(omega, [0.0, 1.0, 0.0])


@pytest.mark.parametrize(
    "kwargs,key",
    [
        ({"period": -0.1}, "period"),
        ({"period": 0.0}, "period"),
        ({"duration": 0.0}, "duration"),
        ({"sigma_r": -1.0}, "sigma_r"),
        ({"outlier_prob": 1.5}, "outlier_prob"),
        ({"dropout_prob": -0.1}, "dropout_prob"),
        ({"seed": -1}, "seed"),
    ],
)
def test_config_errors_name_the_key(kwargs, key):
    with pytest.raises(ValueError, match=key):
        ScenarioConfig(**kwargs)


@given(st.integers(0, 2**32), st.floats(0.0, 1.0))
def test_truth_always_canonical(seed, offset):
    cfg = ScenarioConfig(duration=30.0, profile=Sinusoid(4.0, 0.1, offset), seed=seed)
    theta = np.array([s.theta for s in gen_truth(cfg)])
    assert np.all((theta >= -math.pi) & (theta < math.pi))


def test_noise_free_measurements_equal_truth():
    cfg = ScenarioConfig(duration=10.0, sigma_r=0.0)
    truth = gen_truth(cfg)
    meas = gen_measurements(truth, cfg)
    assert [m.z for m in meas] == [s.theta for s in truth]


def test_all_outliers_are_uniform():
    cfg = ScenarioConfig(duration=1000.0, period=0.1, outlier_prob=1.0, seed=11)
    z = np.array([m.z for m in gen_measurements(gen_truth(cfg), cfg)])
    assert z.size == 10_000
    ks = stats.kstest(z, stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).statistic
    assert ks < 0.02


def test_noise_statistics():
    cfg = ScenarioConfig(duration=1000.0, profile=Constant(0.0), sigma_r=0.1, seed=3)
    z = np.array([m.z for m in gen_measurements(gen_truth(cfg), cfg)])
    assert abs(z.std() - 0.1) < 0.003
    assert abs(z.mean()) < 0.003


def test_dropouts():
    cfg = ScenarioConfig(duration=1000.0, dropout_prob=0.2, seed=5)
    meas = gen_measurements(gen_truth(cfg), cfg)
    frac = np.mean([not m.valid for m in meas])
    assert abs(frac - 0.2) < 0.02


def test_seeded_reproducibility():
    cfg = ScenarioConfig(outlier_prob=0.1, dropout_prob=0.1, seed=42)
    truth = gen_truth(cfg)
    assert gen_measurements(truth, cfg) == gen_measurements(truth, cfg)
    other = ScenarioConfig(outlier_prob=0.1, dropout_prob=0.1, seed=43)
    assert gen_measurements(truth, cfg) != gen_measurements(truth, other)


# -- CSV --------------------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False)
opt = st.one_of(st.none(), finite)


@st.composite
def track_records(draw):
    n = draw(st.integers(1, 3))
    truth = draw(st.one_of(st.none(), st.tuples(*[finite] * n)))
    return TrackRecord(
        t=draw(finite),
        z=draw(opt),
        gated=draw(st.booleans()),
        mean=tuple(draw(finite) for _ in range(n)),
        cov_diag=tuple(draw(finite) for _ in range(n)),
        truth=truth,
    )


@given(st.lists(track_records(), max_size=8))
def test_track_record_roundtrip(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("csv") / "results.csv"
    write_csv(path, records)
    assert read_csv(path) == records


@given(st.lists(st.tuples(finite, opt), max_size=10))
def test_measurement_roundtrip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    records = [Measurement(t, z) for t, z in rows]
    write_csv(path, records)
    assert read_csv(path) == records


def test_truth_roundtrip(tmp_path):
    records = gen_truth(ScenarioConfig(duration=2.0, profile=Sinusoid(1.0, 0.3)))
    write_csv(tmp_path / "t.csv", records)
    assert read_csv(tmp_path / "t.csv") == records


def test_csv_format_details(tmp_path):
    path = tmp_path / "m.csv"
    write_csv(path, [Measurement(0.0, 0.1), Measurement(0.1, None)])
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines() == ["t,z,valid", "0,0.10000000000000001,1", "0.10000000000000001,,0"]


def test_header_only_is_empty(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("t,z,valid\n")
    assert read_csv(path) == []


def test_short_row_names_line(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("t,z,valid\n0,0.1,1\n0.1,0.2\n")
    with pytest.raises(CsvFormatError, match=":3:") as info:
        read_csv(path)
    assert info.value.line == 3


@pytest.mark.parametrize(
    "body",
    ["0,nan,1\n", "0,inf,1\n", "0,abc,1\n", "0,0.1,2\n", "0,,1\n", "nan,0.1,1\n"],
)
def test_bad_rows_rejected(tmp_path, body):
    path = tmp_path / "m.csv"
    path.write_text("t,z,valid\n" + body)
    with pytest.raises(CsvFormatError):
        read_csv(path)


def test_bad_header_and_empty_file(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(CsvFormatError):
        read_csv(path)
    path.write_text("")
    with pytest.raises(CsvFormatError):
        read_csv(path)


def test_results_gap_rejected(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text(
        "t,z,gated,theta,omega,alpha,p00,p11,p22,truth_theta,truth_omega,truth_alpha\n"
        "0,0.1,0,0.1,,0.3,1,1,1,,,\n"
    )
    with pytest.raises(CsvFormatError):
        read_csv(path)


def test_write_rejects_mixed_records(tmp_path):
    with pytest.raises(TypeError):
        write_csv(tmp_path / "x.csv", [Measurement(0, 0), TruthSample(0, 0, 0, 0)])
    with pytest.raises(TypeError):
        write_csv(tmp_path / "x.csv", [object()])
