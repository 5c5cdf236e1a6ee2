import numpy as np
import pytest
from helpers import gaussian_logpdf_oracle
from hypothesis import given, settings, strategies as st

from rfanomaly.anomaly import AnomalyEvent
from rfanomaly.detect import (DetectionConfig, Statistics, calibrate_cfar, calibrate_window_cfar, clean_tiles,
                              detect, extract_events, score_detections, statistic_stream, window_minima)
from rfanomaly.errmodel import ErrorModel, fit
from rfanomaly.iq import IQBuffer, make_rng, window_arrays


class PerfectStub:
    def predict_stream(self, buf, stride=4):
        X, Y, starts = window_arrays(buf, stride)
        return Y.copy(), Y, starts


class ZeroStub:
    def predict_stream(self, buf, stride=4):
        X, Y, starts = window_arrays(buf, stride)
        return np.zeros_like(Y), Y, starts


def noise_band(n, seed=0):
    rng = make_rng(seed)
    return IQBuffer(rng.standard_normal(n) + 1j * rng.standard_normal(n))


class TestStatisticStream:
    def test_perfect_predictor_constant(self):
        em = fit(make_rng(0).standard_normal((100, 8)))
        s = statistic_stream(noise_band(2000), PerfectStub(), em, DetectionConfig(V=8))
        expect = 8 * em.log_pdf(np.zeros(8)) * 10 / np.log(10)
        np.testing.assert_allclose(s.value, expect, rtol=1e-12)

    @pytest.mark.parametrize("V", [1, 3, 8])
    def test_minimum_length(self, V):
        em = fit(make_rng(0).standard_normal((100, 8)))
        n = 36 + 4 * (V - 1)
        assert len(statistic_stream(noise_band(n), PerfectStub(), em, DetectionConfig(V=V))) == 1
        with pytest.raises(ValueError):
            statistic_stream(noise_band(n - 1), PerfectStub(), em, DetectionConfig(V=V))

    def test_two_window_arithmetic(self):
        rng = make_rng(1)
        x = noise_band(40, 2)
        mu, cov = 0.1 * rng.standard_normal(8), np.diag(rng.uniform(0.5, 2, 8))
        em = ErrorModel.from_moments(mu, cov, 0.0)
        s = statistic_stream(x, ZeroStub(), em, DetectionConfig(V=2))
        # errors are the raw targets: samples 32..35 and 36..39
        e0 = np.ravel(np.column_stack([x.samples[32:36].real, x.samples[32:36].imag]))
        e1 = np.ravel(np.column_stack([x.samples[36:40].real, x.samples[36:40].imag]))
        ll = gaussian_logpdf_oracle(mu, cov, e0) + gaussian_logpdf_oracle(mu, cov, e1)
        assert len(s) == 1
        assert abs(s.value[0] - 10 * np.log10(np.exp(ll))) < 1e-9
        # span covers predicted samples 32..39; center stamp
        assert s.index[0] == (32 + 40) // 2


class TestCalibrate:
    def test_median(self):
        x = make_rng(0).standard_normal(501)
        assert calibrate_cfar(x, 0.5) == np.median(x)

    def test_order_statistics(self):
        assert calibrate_cfar(np.arange(1, 101), 0.05) == pytest.approx(5.95, abs=1e-12)

    def test_self_consistency(self):
        x = make_rng(1).standard_normal(1000)
        for p in (0.01, 0.05, 0.2):
            tau = calibrate_cfar(x, p)
            assert abs(np.mean(x < tau) - p) <= 1 / len(x)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            calibrate_cfar(np.zeros(99), 0.1)
        with pytest.raises(ValueError):
            calibrate_cfar(np.zeros(100), 1.0)

    def test_alarm_fraction_on_calibration_stream(self):
        n = 5000
        stats = Statistics(np.arange(n) * 4, make_rng(2).standard_normal(n))
        for p in (0.01, 0.05):
            tau = calibrate_cfar(stats.value, p)
            ev = extract_events(stats, tau, 0)
            # merge_gap 0 joins only adjacent points, so each alarm point is a run member
            frac = sum((e - s - 1) // 4 + 1 for s, e in ev) / n
            assert abs(frac - p) <= 2 * np.sqrt(p * (1 - p) / n)

    def test_window_level(self):
        # iid statistics every 4 samples; tile pfa on a fresh stream matches target
        rng = make_rng(3)
        clean = [Statistics(np.arange(25_000) * 4 + 18, rng.standard_normal(25_000)) for _ in range(4)]
        tau = calibrate_window_cfar(clean, 0.05, 250)
        pf = []
        for s in range(10):
            ev = Statistics(np.arange(25_000) * 4 + 18, rng.standard_normal(25_000))
            pf.append(score_detections(extract_events(ev, tau, 64), [], 100_000, 250)[1])
        assert abs(np.mean(pf) - 0.05) < 0.01

    def test_window_minima(self):
        s = Statistics(np.arange(10) * 50, np.array([5, 4, 3, 9, 9, 9, 1, 9, 9, 9.0]))
        np.testing.assert_array_equal(window_minima(s, 150), [3, 3, 3, 9, 1, 1, 1, 9])


def runs_oracle(index, value, tau, gap):
    out = []
    cur = None
    prev_pos = None
    for p, (i, v) in enumerate(zip(index, value)):
        if v >= tau:
            continue
        if cur is not None and (prev_pos == p - 1 or i - cur[1] <= gap):
            cur[1] = i + 1
            prev_pos = p
        else:
            if cur is not None:
                out.append(tuple(cur))
            cur = [i, i + 1]
            prev_pos = p
    if cur is not None:
        out.append(tuple(cur))
    return out


class TestExtract:
    def test_none(self):
        assert extract_events(Statistics(np.arange(5), np.ones(5)), 0.0, 10) == []

    def test_one_run(self):
        s = Statistics(np.arange(10) * 4, np.array([1, 1, -1, -2, -1, 1, 1, 1, 1, 1.0]))
        assert extract_events(s, 0.0, 0) == [(8, 17)]

    def test_gap_enumeration(self):
        idx = np.arange(20) * 4
        val = np.ones(20)
        val[[2, 3, 4, 9, 10, 17]] = -1
        # holes: 4*9 - 4*4 - 1 = 19 samples, 4*17 - 4*10 - 1 = 27 samples
        assert extract_events(Statistics(idx, val), 0.0, 18) == [(8, 17), (36, 41), (68, 69)]
        assert extract_events(Statistics(idx, val), 0.0, 19) == [(8, 41), (68, 69)]
        assert extract_events(Statistics(idx, val), 0.0, 27) == [(8, 69)]
        for gap in range(0, 40):
            assert extract_events(Statistics(idx, val), 0.0, gap) == runs_oracle(idx, val, 0.0, gap)

    @settings(max_examples=100)
    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=20), st.integers(0, 20), st.floats(-2, 2))
    def test_matches_oracle(self, val, gap, tau):
        idx = np.arange(len(val)) * 4
        assert extract_events(Statistics(idx, np.array(val)), tau, gap) == runs_oracle(idx, val, tau, gap)

    def test_unsorted(self):
        with pytest.raises(ValueError):
            extract_events(Statistics(np.array([4, 0]), np.array([-1.0, -1.0])), 0.0, 0)


class TestScore:
    def test_exact(self):
        truth = [(1000, 1250), (5000, 5250)]
        assert score_detections(truth, truth, 10_000, 250) == (1.0, 0.0)

    def test_nothing(self):
        assert score_detections([], [(1000, 1250)], 10_000, 250) == (0.0, 0.0)

    def test_vacuous(self):
        assert score_detections([], [], 10_000, 250) == (1.0, 0.0)

    def test_hand_tiling(self):
        truth = [AnomalyEvent("tone", 1000, 1250, params={"fc": 0}), AnomalyEvent("tone", 6000, 6250, params={"fc": 0})]
        # padded supports [750, 1500) and [5750, 6500) remove tiles 3,4,5 and 23,24,25
        tiles = clean_tiles(truth, 10_000, 250)
        assert len(tiles) == 34
        assert not any(a // 250 in (3, 4, 5, 23, 24, 25) for a, _ in tiles)
        pd, pfa = score_detections([(1100, 1200), (8000, 8010)], truth, 10_000, 250)
        assert pd == 0.5 and pfa == pytest.approx(1 / 34)

    def test_partial_tile_ignored(self):
        # 1100 samples -> 4 full tiles, the last 100 samples are not scored
        assert score_detections([(1050, 1060)], [], 1100, 250) == (1.0, 0.0)

    @settings(max_examples=60)
    @given(st.lists(st.tuples(st.integers(0, 9000), st.integers(1, 600)), max_size=6), st.randoms())
    def test_order_and_split_invariant(self, dets, rnd):
        truth = [(2000, 2250), (7000, 7250)]
        dets = [(s, min(s + w, 10_000)) for s, w in dets]
        base = score_detections(dets, truth, 10_000, 250)
        shuffled = list(dets)
        rnd.shuffle(shuffled)
        assert score_detections(shuffled, truth, 10_000, 250) == base
        split = []
        for s, e in dets:
            if e - s >= 2:
                m = (s + e) // 2
                split += [(s, m), (m, e)]
            else:
                split.append((s, e))
        assert score_detections(split, truth, 10_000, 250) == base


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(-2, 2), st.floats(0, 2))
def test_monotone_in_tau(seed, tau, delta):
    rng = make_rng(seed)
    stats = Statistics(np.arange(2500) * 4, rng.standard_normal(2500))
    truth = [(1000, 1250), (5000, 5250), (8000, 8250)]
    lo = score_detections(extract_events(stats, tau, 64), truth, 10_000, 250)
    hi = score_detections(extract_events(stats, tau + delta, 64), truth, 10_000, 250)
    assert hi[0] >= lo[0] and hi[1] >= lo[1]


def test_detect_report(tmp_path):
    em = fit(make_rng(0).standard_normal((500, 8)))
    band = noise_band(4000, 5)
    rep = detect(band, ZeroStub(), em, tau=-200.0, truth=[(100, 350)], metadata={"seed": 5})
    assert 0 <= rep.pd <= 1 and 0 <= rep.pfa <= 1
    assert all(a[1] < b[0] for a, b in zip(rep.intervals, rep.intervals[1:]))
    rep.save(tmp_path / "r.json", include_stats=True)
    rep.save_stats_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "index,value" and len(lines) == len(rep.stats) + 1


def test_config_validation():
    with pytest.raises(ValueError):
        DetectionConfig(V=0)
    with pytest.raises(ValueError):
        DetectionConfig(W=0)
    with pytest.raises(ValueError):
        DetectionConfig(target_pfa=0.0)
