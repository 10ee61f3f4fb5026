import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import date_seq
from epicorr.errors import NumericError, SpecError
from epicorr.panel import TimeSeriesPanel
from epicorr.spectral import (
    SpectralFilterSpec,
    StopBand,
    band_stop,
    default_weekly_bands,
    filter_panel,
    frequency_mask,
    power_spectrum,
)
from epicorr.synth import DEFAULT_START, synthetic_panel

D = 1021
t = np.arange(D)
SPEC = default_weekly_bands()


def tone(period, n=D, phase=0.0):
    return np.sin(2 * np.pi * np.arange(n) / period + phase)


def geometric_sum(delta, n):
    """sum_{m<n} exp(2 pi i delta m), closed form."""
    z = np.exp(2j * np.pi * delta)
    if abs(z - 1) < 1e-15:
        return complex(n)
    return (1 - z**n) / (1 - z)


def closed_form_power(freqs, n):
    """Power |X_k|^2 / n of a sum of unit cosines at ``freqs`` for k = 1..n//2."""
    out = np.empty(n // 2)
    for k in range(1, n // 2 + 1):
        x = sum(0.5 * (geometric_sum(f - k / n, n) + geometric_sum(-f - k / n, n)) for f in freqs)
        out[k - 1] = abs(x) ** 2 / n
    return out


def in_band(freqs):
    m = np.zeros(freqs.shape, bool)
    for b in SPEC.bands:
        m |= (freqs >= b.low_edge) & (freqs <= b.high_edge)
    return m


# ---- power spectrum

def test_period7_peak():
    ps = power_spectrum(tone(7))
    k = int(np.argmax(ps.power))
    assert ps.frequencies[k] == pytest.approx(round(D / 7) / D)
    assert abs(ps.frequencies[k] - 1 / 7) <= 0.5 / D


def test_constant_has_zero_power():
    # the mean of 50 copies of 3.7 is not exactly 3.7 in binary, so allow rounding dust
    assert np.all(power_spectrum(np.full(50, 3.7)).power < 1e-25)
    assert np.all(power_spectrum(np.full(64, 4.0)).power == 0.0)


def test_frequency_grid():
    ps = power_spectrum(np.random.default_rng(0).random(D))
    assert ps.frequencies.size == ps.power.size == D // 2 + 1
    np.testing.assert_array_equal(ps.frequencies, np.arange(D // 2 + 1) / D)
    assert ps.frequencies.max() <= 0.5


@pytest.mark.parametrize("n", [1021, 1022, 64])
def test_two_tone_matches_closed_form(n):
    x = np.cos(2 * np.pi * np.arange(n) / 7) + np.cos(2 * np.pi * np.arange(n) / 3.5)
    ps = power_spectrum(x)
    expect = closed_form_power([1 / 7, 1 / 3.5], n)
    np.testing.assert_allclose(ps.power[1:], expect, rtol=1e-9, atol=1e-9 * expect.max())


def test_two_tone_equal_power_on_exact_bins():
    n = 1022  # a multiple of 7 puts both tones on exact bins
    x = np.cos(2 * np.pi * np.arange(n) / 7) + np.cos(2 * np.pi * np.arange(n) / 3.5)
    ps = power_spectrum(x)
    top = np.sort(np.argsort(ps.power)[-2:])
    np.testing.assert_allclose(ps.frequencies[top], [1 / 7, 2 / 7], atol=1e-12)
    assert ps.power[top[0]] / ps.power[top[1]] == pytest.approx(1.0, abs=1e-6)


def test_power_spectrum_rejects_bad_input():
    with pytest.raises(NumericError):
        power_spectrum([1.0, np.nan, 2.0, 3.0])
    with pytest.raises(NumericError):
        power_spectrum([1.0, 2.0, 3.0])


# ---- bands

@pytest.mark.parametrize(
    "i,lo,hi",
    [(0, 0.131578947368, 0.157480314960), (1, 0.270270270270, 0.303951367781), (2, 0.421762969211, 0.434782608695)],
)
def test_default_band_edges(i, lo, hi):
    b = SPEC.bands[i]
    assert b.low_edge == pytest.approx(lo, abs=1e-11)
    assert b.high_edge == pytest.approx(hi, abs=1e-11)
    assert b.low_edge < b.center < b.high_edge


def test_band_validation():
    with pytest.raises(SpecError):
        StopBand(0.45, 0.44, 0.5)
    with pytest.raises(SpecError):
        StopBand(0.1, 0.2, 0.3)
    with pytest.raises(SpecError):
        SpectralFilterSpec((StopBand(0.1, 0.05, 0.15), StopBand(0.14, 0.12, 0.2)))
    with pytest.raises(SpecError):
        SpectralFilterSpec((StopBand(0.1, 0.05, 0.15),), mode="cosine_taper", taper_fraction=1.5)
    assert StopBand.parse(SPEC.bands[0].to_text()) == SPEC.bands[0]


def test_mask_is_symmetric_and_binary():
    m = frequency_mask(D, SPEC)
    np.testing.assert_array_equal(m[1:], m[1:][::-1])
    assert set(np.unique(m)) <= {0.0, 1.0}
    taper = frequency_mask(D, default_weekly_bands("cosine_taper", 0.3))
    assert np.all((taper >= 0) & (taper <= 1))
    assert np.all(taper >= m)


# ---- band_stop

# Masking is exact for tones on DFT bins; 1022 = 146 * 7 and 1020 = 34 * 30.

def test_period7_flattened():
    y = band_stop(100 + 5 * tone(7, 1022), SPEC)
    assert np.max(np.abs(y - 100)) < 1e-6 * 5


def test_period30_passthrough():
    x = 3 * tone(30, 1020, phase=0.4)
    np.testing.assert_allclose(band_stop(x, SPEC), x, rtol=0, atol=1e-9 * np.max(np.abs(x)))


def test_off_bin_tone_leaks_past_band():
    # at D = 1021 the period-7 tone is off-bin and its leakage tail survives the mask
    residual = np.max(np.abs(band_stop(tone(7), SPEC)))
    assert 0.1 < residual < 0.5
    assert power_spectrum(band_stop(tone(7), SPEC)).power[in_band(power_spectrum(tone(7)).frequencies)].max() < 1e-20


def test_white_noise_band_power():
    x = np.random.default_rng(0).standard_normal(D)
    pin, pout = power_spectrum(x), power_spectrum(band_stop(x, SPEC))
    band = in_band(pin.frequencies)
    assert pout.power[band].sum() < 1e-12 * pin.power[band].sum()
    np.testing.assert_allclose(pout.power[~band], pin.power[~band], rtol=1e-9, atol=1e-9 * pin.power.max())


def test_cosine_taper_attenuates_center():
    spec = default_weekly_bands("cosine_taper", 0.1)
    y = band_stop(tone(7, 1022), spec)
    assert np.max(np.abs(y)) < 1e-9


def test_parseval_bookkeeping():
    x = np.random.default_rng(3).standard_normal(D) + 2.0
    y = band_stop(x, SPEC)
    X = np.fft.fft(x)
    f = np.minimum(np.arange(D), D - np.arange(D)) / D
    stop_energy = np.sum(np.abs(X[in_band(f)]) ** 2) / D
    e_in, e_out = np.sum(x**2), np.sum(y**2)
    assert e_out <= e_in
    assert (e_in - e_out) == pytest.approx(stop_energy, rel=1e-6)


def test_zero_phase_lag():
    x = tone(30) + 0.3 * tone(11)
    y = band_stop(x, SPEC)
    xc = np.correlate(y - y.mean(), x - x.mean(), mode="full")
    assert int(np.argmax(xc)) - (D - 1) == 0


series = arrays(np.float64, 64, elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False))


@settings(max_examples=50, deadline=None)
@given(series, series, st.floats(-5, 5), st.floats(-5, 5))
def test_linearity(x, y, a, b):
    lhs = band_stop(a * x + b * y, SPEC)
    rhs = a * band_stop(x, SPEC) + b * band_stop(y, SPEC)
    scale = max(np.max(np.abs(a * x)) + np.max(np.abs(b * y)), 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


@settings(max_examples=50, deadline=None)
@given(series)
def test_idempotence(x):
    once = band_stop(x, SPEC)
    twice = band_stop(once, SPEC)
    assert np.max(np.abs(twice - once)) <= 1e-9 * max(np.max(np.abs(x)), 1.0)


def test_band_stop_errors():
    with pytest.raises(NumericError):
        band_stop([1.0, 2.0, np.inf, 1.0, 2.0], SPEC)


# ---- filter_panel

def _panel(values):
    return TimeSeriesPanel(("A", "B"), tuple(date_seq(DEFAULT_START, values.shape[1])), values)


def test_constant_panel_unchanged():
    v = np.vstack([np.full(100, 4.0), np.full(100, 9.5)])
    np.testing.assert_allclose(filter_panel(_panel(v), SPEC).values, v, atol=1e-12)


def test_per_series_independence():
    v = np.vstack([10 + tone(7, 210), 10 + tone(30, 210)])
    out = filter_panel(_panel(v), SPEC).values
    assert np.max(np.abs(out[0] - 10)) < 1e-6
    assert np.max(np.abs(out[1] - v[1])) < 1e-9


def test_panel_equals_per_series_calls():
    panel = synthetic_panel(seed=1).panel
    out = filter_panel(panel, SPEC)
    assert out.regions == panel.regions and out.dates == panel.dates
    for i in range(panel.n_regions):
        np.testing.assert_array_equal(out.values[i], band_stop(panel.values[i], SPEC))
