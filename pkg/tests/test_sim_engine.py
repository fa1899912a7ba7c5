"""Tests for the Monte-Carlo engine: random streams, power accounting, determinism and BER runs."""

import itertools

import numpy as np
import pytest

from onebitmiso.errors import ConfigurationError
from onebitmiso.link import sim_engine
from onebitmiso.link.sim_engine import (
    GAIN_EST,
    GAIN_OPT,
    BerRecord,
    GainCheckConfig,
    Scheme,
    SimConfig,
    channel_streams,
    db_to_linear,
    draw_channel,
    draw_noise,
    mber_sup_transmit,
    run_gain_check,
    run_point,
    run_sweep,
)
from onebitmiso.link.receiver import detect, estimate_receive_filter
from onebitmiso.modulation.constellation import QAM16_POINTS
from onebitmiso.precoding.lut_precoder import ChannelRealization, build_luts, map_symbols


def _small(scheme=Scheme.MBER_SUP, **overrides):
    params = dict(
        n_antennas=6,
        n_users=2,
        etx_grid=(-5.0, 0.0, 5.0),
        n_channels=3,
        n_symbols_per_channel=300,
        rng_seed=42,
        scheme=scheme,
    )
    params.update(overrides)
    return SimConfig(**params)


class TestRandomStreams:
    """Tests for channel and noise generation."""

    def test_channel_statistics(self):
        rng = np.random.default_rng(1)
        h = draw_channel(rng, 1000, 1000).matrix
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.01)
        assert np.var(h.real) == pytest.approx(0.5, abs=0.01)
        assert np.var(h.imag) == pytest.approx(0.5, abs=0.01)

    def test_channel_is_reproducible(self):
        a = draw_channel(channel_streams(9, 4)[0], 3, 48).matrix
        b = draw_channel(channel_streams(9, 4)[0], 3, 48).matrix
        np.testing.assert_array_equal(a, b)

    def test_streams_differ_per_channel_index(self):
        a = draw_channel(channel_streams(9, 0)[0], 3, 48).matrix
        b = draw_channel(channel_streams(9, 1)[0], 3, 48).matrix
        assert not np.array_equal(a, b)

    def test_noise_calibration(self):
        noise = draw_noise(np.random.default_rng(2), (1_000_000,))
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(1.0, rel=0.01)
        assert abs(np.mean(noise)) < 0.01


class TestPowerAccounting:
    """Radiated power per channel use equals E_tx."""

    @pytest.mark.parametrize("etx_db", [-10.0, 0.0, 7.5])
    def test_mber_sup_equal_allocation(self, rng, etx_db):
        luts = build_luts(draw_channel(rng, 2, 9))
        s = QAM16_POINTS[rng.integers(0, 16, size=(200, 2))]
        x = mber_sup_transmit(luts, s, db_to_linear(etx_db))
        np.testing.assert_allclose(np.sum(np.abs(x) ** 2, axis=1), db_to_linear(etx_db), rtol=1e-6)


class TestSuperposition:
    """The two LUT streams add up over the air to a scaled 16QAM grid."""

    # user 1 owns antennas 0-3 and 8-9, user 2 owns 4-7 and 10-11
    H = np.array([
        [1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1],
    ], dtype=complex)

    def test_noiseless_receive_points(self):
        luts = build_luts(ChannelRealization(self.H))
        s = np.array(list(itertools.product(QAM16_POINTS, repeat=2)))
        r = map_symbols(s, luts) @ self.H.T
        np.testing.assert_allclose(r, 2 * s, atol=1e-12)

    def test_sixteen_clusters_at_high_energy(self):
        luts = build_luts(ChannelRealization(self.H))
        s = np.array(list(itertools.product(QAM16_POINTS, repeat=2)))
        y = mber_sup_transmit(luts, s, db_to_linear(60.0)) @ self.H.T
        y = y + draw_noise(np.random.default_rng(4), y.shape)
        detected = detect(estimate_receive_filter(y).apply(y))
        np.testing.assert_array_equal(detected, s)
        for m in range(2):
            assert len(np.unique(np.round(detected[:, m], 9))) == 16


class TestSimConfig:
    """Tests for SimConfig validation."""

    def test_more_users_than_antennas(self):
        with pytest.raises(ValueError):
            SimConfig(n_antennas=3, n_users=5, scheme=Scheme.QWF)

    def test_mber_block_too_small(self):
        with pytest.raises(ValueError):
            SimConfig(n_antennas=4, n_users=2, scheme=Scheme.MBER_SUP)

    def test_qwf_accepts_same_dimensions(self):
        assert SimConfig(n_antennas=4, n_users=2, scheme=Scheme.QWF).n_users == 2

    def test_scheme_from_string(self):
        assert SimConfig(n_antennas=6, n_users=1, scheme="qwf").scheme is Scheme.QWF

    def test_record_consistency(self):
        with pytest.raises(ValueError):
            BerRecord("qwf", 6, 2, 0.0, 0.5, 1, 4, 1, 0)


class TestRuns:
    """Tests for run_point / run_sweep."""

    @pytest.mark.parametrize("scheme", [Scheme.MBER_SUP, Scheme.QWF])
    def test_independent_of_worker_count(self, scheme):
        serial = run_sweep(_small(scheme, n_workers=1))
        parallel = run_sweep(_small(scheme, n_workers=3))
        assert serial == parallel

    @pytest.mark.parametrize("scheme", [Scheme.MBER_SUP, Scheme.QWF])
    def test_point_matches_sweep(self, scheme):
        config = _small(scheme)
        assert run_point(config, 0.0) == run_sweep(config)[1]

    def test_repeatable(self):
        config = _small()
        assert run_point(config, 5.0) == run_point(config, 5.0)

    def test_record_fields(self):
        config = _small(Scheme.QWF)
        records = run_sweep(config)
        assert [r.etx_db for r in records] == [-5.0, 0.0, 5.0]
        for r in records:
            assert r.scheme == "qwf"
            assert (r.n_antennas, r.n_users, r.channels_used, r.seed) == (6, 2, 3, 42)
            assert r.bits_total == 3 * 300 * 2 * 4
            assert r.ber == r.bit_errors / r.bits_total

    def test_luts_built_once_per_channel(self, monkeypatch):
        calls = []

        def counting(channel, config):
            calls.append(channel)
            return build_luts(channel, config)

        monkeypatch.setattr(sim_engine, "build_luts", counting)
        run_sweep(_small())
        assert len(calls) == 3

    def test_lut_failure_is_fatal(self, monkeypatch):
        def failing(channel, config):
            raise ConfigurationError("no table")

        monkeypatch.setattr(sim_engine, "build_luts", failing)
        with pytest.raises(ConfigurationError):
            run_sweep(_small(n_workers=2))

    def test_high_energy_single_user(self):
        config = SimConfig(
            n_antennas=24, n_users=1, n_channels=5, n_symbols_per_channel=2000, rng_seed=3,
        )
        assert run_point(config, 60.0).ber < 1e-3

    @pytest.mark.parametrize("scheme", [Scheme.MBER_SUP, Scheme.QWF])
    def test_low_energy_is_guessing(self, scheme):
        config = _small(scheme, n_antennas=24, n_users=2, n_symbols_per_channel=2000)
        assert run_point(config, -30.0).ber == pytest.approx(0.5, abs=0.05)


class TestGainCheck:
    """SISO AWGN check of the blind receive gain."""

    def test_estimated_gain_matches_optimum(self):
        records = run_gain_check(GainCheckConfig())
        ber = {(r.scheme, r.etx_db): r.ber for r in records}
        for snr_db in (0.0, 5.0, 10.0, 15.0):
            est, opt = ber[(GAIN_EST, snr_db)], ber[(GAIN_OPT, snr_db)]
            assert opt > 0
            assert 1 / 1.3 <= est / opt <= 1.3

    def test_record_shape(self):
        records = run_gain_check(GainCheckConfig(snr_grid=(10.0,), n_symbols=1000))
        assert [r.scheme for r in records] == [GAIN_EST, GAIN_OPT]
        assert all((r.n_antennas, r.n_users, r.bits_total) == (1, 1, 4000) for r in records)


def _desk(scheme, n_antennas, n_users, etx_grid):
    return SimConfig(
        n_antennas=n_antennas, n_users=n_users, etx_grid=etx_grid, n_channels=10,
        n_symbols_per_channel=10_000, rng_seed=0, scheme=scheme, n_workers=0,
    )


def _ber_floor(record):
    return max(record.ber, 1.0 / record.bits_total)


@pytest.mark.slow
class TestDeskScale:
    """Desk-scale reproductions of the headline comparisons."""

    def test_mber_sup_beats_qwf(self):
        grid = (-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0)
        mber = run_sweep(_desk(Scheme.MBER_SUP, 150, 3, grid))
        qwf = run_sweep(_desk(Scheme.QWF, 150, 3, grid))
        assert mber[grid.index(5.0)].ber < 5e-3
        for a, b in zip(mber, qwf):
            if a.etx_db >= 0:
                assert a.ber < b.ber

    def test_mber_sup_degrades_with_users(self):
        bers = [run_point(_desk(Scheme.MBER_SUP, 150, m, (5.0,)), 5.0).ber for m in (2, 3, 4)]
        assert bers[0] <= bers[1] <= bers[2]

    def test_antenna_gain(self):
        mber = [run_point(_desk(Scheme.MBER_SUP, n, 3, (5.0,)), 5.0) for n in (48, 96, 150)]
        qwf = [run_point(_desk(Scheme.QWF, n, 3, (5.0,)), 5.0) for n in (48, 96, 150)]
        assert mber[0].ber > mber[1].ber > mber[2].ber
        mber_gain = _ber_floor(mber[0]) / _ber_floor(mber[2])
        qwf_gain = _ber_floor(qwf[0]) / _ber_floor(qwf[2])
        assert qwf_gain < mber_gain

    def test_ber_decreases_with_energy(self):
        grid = (-10.0, -5.0, 0.0, 5.0, 10.0)
        for scheme in (Scheme.MBER_SUP, Scheme.QWF):
            bers = [r.ber for r in run_sweep(_desk(scheme, 48, 3, grid))]
            for lower, higher in zip(bers, bers[1:]):
                assert higher <= lower * 1.1 + 1e-4
