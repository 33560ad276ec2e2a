"""Tests for error/rate metrics and the complexity accounting."""

import math

import numpy as np
import pytest

from hdris.channel import SystemDims, build_channels, sample_params
from hdris.estimators import (
    hdr_estimate,
    ideal_estimate,
    krf_estimate,
    ls_estimate,
    matched_filter,
    simulate_observation,
)
from hdris.metrics import (
    METHODS,
    flops_analytic,
    flops_measured,
    ideal_spectral_efficiency,
    nmse,
    spectral_efficiency,
    summarize,
)
from hdris.training import make_training

SMALL_DIMS = SystemDims(
    n_bs_y=2, n_bs_z=2, n_ue_y=2, n_ue_z=2, n_ris_y=4, n_ris_z=4,
    n_pilots=16, n_blocks=16,
)

# 16-antenna arrays at both ends, 4x4 surface, minimal exact training
REF_DIMS = SystemDims(
    n_bs_y=4, n_bs_z=4, n_ue_y=4, n_ue_z=4, n_ris_y=4, n_ris_z=4,
    n_pilots=16, n_blocks=16,
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _square_dims(n_ris_axis, n_pilots=16, n_blocks=None):
    if n_blocks is None:
        n_blocks = n_ris_axis * n_ris_axis
    return SystemDims(
        n_bs_y=4, n_bs_z=4, n_ue_y=4, n_ue_z=4,
        n_ris_y=n_ris_axis, n_ris_z=n_ris_axis,
        n_pilots=n_pilots, n_blocks=n_blocks,
    )


# ---------------------------------------------------------------------------
# normalized error
# ---------------------------------------------------------------------------


def test_nmse_perfect_and_zero_estimates():
    rng = np.random.default_rng(0)
    t = crandn(rng, 6, 5)
    assert nmse(t, t) == 0.0
    assert nmse(t, np.zeros_like(t)) == pytest.approx(1.0)


def test_nmse_matches_noise_power():
    rng = np.random.default_rng(1)
    t = crandn(rng, 16, 16)
    sigma2 = 0.25
    acc = 0.0
    n_draws = 300
    for _ in range(n_draws):
        n = math.sqrt(sigma2 / 2) * crandn(rng, 16, 16)
        acc += nmse(t, t + n)
    expected = sigma2 * t.size / np.linalg.norm(t) ** 2
    assert acc / n_draws == pytest.approx(expected, rel=0.1)


def test_nmse_scale_invariance():
    rng = np.random.default_rng(2)
    t, e = crandn(rng, 4, 4), crandn(rng, 4, 4)
    c = 3.7 * np.exp(0.9j)
    assert nmse(c * t, c * e) == pytest.approx(nmse(t, e), rel=1e-12)


def test_nmse_validation():
    with pytest.raises(ValueError):
        nmse(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(ValueError):
        nmse(np.zeros((2, 2)), np.ones((2, 2)))


# ---------------------------------------------------------------------------
# beamformed rate
# ---------------------------------------------------------------------------


def test_noiseless_estimates_reach_ideal_rate():
    # with an exact cascade every estimator picks the same phases and
    # beams, and the rate hits the closed-form perfect-CSI value
    ch = build_channels(SMALL_DIMS, sample_params(np.random.default_rng(3)))
    target = ideal_spectral_efficiency(SMALL_DIMS, 1.0, 1.0)
    assert target == pytest.approx(math.log2(1 + 4 * 4 * 16 ** 2), rel=1e-12)
    for est in (
        hdr_estimate(ch.cascade, SMALL_DIMS),
        krf_estimate(ch.cascade, SMALL_DIMS),
        ls_estimate(ch.cascade, SMALL_DIMS),
        ideal_estimate(ch),
    ):
        rate = spectral_efficiency(ch, est, tx_power=1.0, noise_var=1.0)
        assert rate == pytest.approx(target, abs=1e-9)


def test_ideal_rate_bounds_every_estimator():
    design = make_training(SMALL_DIMS)
    sigma2 = 1.0
    target = ideal_spectral_efficiency(SMALL_DIMS, 1.0, sigma2)
    for trial in range(30):
        rng = np.random.default_rng(trial + 100)
        ch = build_channels(SMALL_DIMS, sample_params(rng))
        obs = simulate_observation(ch, design, sigma2, rng=rng)
        raw = matched_filter(obs, design, check=False)
        for est in (
            hdr_estimate(raw, SMALL_DIMS),
            krf_estimate(raw, SMALL_DIMS),
            ls_estimate(raw, SMALL_DIMS),
        ):
            rate = spectral_efficiency(ch, est, tx_power=1.0, noise_var=sigma2)
            assert rate <= target + 1e-9


def test_rate_scales_with_power_and_noise():
    ch = build_channels(SMALL_DIMS, sample_params(np.random.default_rng(4)))
    est = hdr_estimate(ch.cascade, SMALL_DIMS)
    low = spectral_efficiency(ch, est, tx_power=0.1, noise_var=1.0)
    high = spectral_efficiency(ch, est, tx_power=10.0, noise_var=1.0)
    assert high > low
    same = spectral_efficiency(ch, est, tx_power=1.0, noise_var=10.0)
    np.testing.assert_allclose(same, low, rtol=1e-12)


def test_rate_validation():
    ch = build_channels(SMALL_DIMS, sample_params(np.random.default_rng(5)))
    est = ls_estimate(ch.cascade, SMALL_DIMS)
    with pytest.raises(ValueError):
        spectral_efficiency(ch, est, noise_var=0.0)
    with pytest.raises(ValueError):
        ideal_spectral_efficiency(SMALL_DIMS, noise_var=-1.0)


# ---------------------------------------------------------------------------
# complexity accounting
# ---------------------------------------------------------------------------


def test_analytic_flops_at_reference_dims():
    # shared filtering term Q^2*M*N*T*K = 16777216 at the reference dims;
    # the structured fit adds Q*M*N*(sum of the six mode extents) and the
    # per-column baseline adds (Q*M*N)^2
    assert flops_analytic("ls", REF_DIMS) == 16777216
    assert flops_analytic("hdr", REF_DIMS) == 16875520
    assert flops_analytic("krf", REF_DIMS) == 33554432


def test_analytic_flops_large_surface_ratios():
    # the headline scaling comparison at a 50x50 surface
    dims = _square_dims(50, n_pilots=16, n_blocks=2500)
    hdr = flops_analytic("hdr", dims)
    krf = flops_analytic("krf", dims)
    ls = flops_analytic("ls", dims)
    assert 1.8 <= krf / hdr <= 2.2
    assert hdr / ls <= 1.1
    assert ls < hdr < krf


def test_analytic_flops_monotone_in_surface_size():
    prev = {m: 0 for m in METHODS}
    for axis in (2, 4, 8, 16):
        dims = _square_dims(axis)
        for m in METHODS:
            cur = flops_analytic(m, dims)
            assert cur > prev[m]
            prev[m] = cur


def test_flops_unknown_method():
    with pytest.raises(ValueError):
        flops_analytic("mmse", SMALL_DIMS)
    with pytest.raises(ValueError):
        flops_measured("mmse", SMALL_DIMS)


def test_measured_flops_at_reference_dims():
    # the common matched-filter term is Q * (T*K) * (M*N) exact; the
    # estimator-specific extras come on top
    assert flops_measured("ls", REF_DIMS) == 16 * 256 * 256
    assert flops_measured("ls", SMALL_DIMS) == 4 * 256 * 64
    assert flops_measured("hdr", REF_DIMS) == 1152340
    assert flops_measured("krf", REF_DIMS) == 1122304
    for m in ("hdr", "krf"):
        assert flops_measured(m, REF_DIMS) > flops_measured("ls", REF_DIMS)


def test_measured_flops_seed_invariant():
    # counts depend on dimensions, not on the channel draw
    assert flops_measured("hdr", REF_DIMS, seed=0) == flops_measured(
        "hdr", REF_DIMS, seed=99
    )


def test_measured_tracks_analytic_trend():
    # growing the surface widens the krf-vs-hdr gap in both accountings
    gaps_meas, gaps_ana = [], []
    for axis in (4, 8):
        dims = _square_dims(axis)
        gaps_meas.append(flops_measured("krf", dims) / flops_measured("hdr", dims))
        gaps_ana.append(flops_analytic("krf", dims) / flops_analytic("hdr", dims))
    assert gaps_meas[1] > gaps_meas[0]
    assert gaps_ana[1] > gaps_ana[0]


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def test_summarize_mean_and_median():
    mean, median = summarize([1.0, 2.0, 4.0])
    assert mean == pytest.approx(7.0 / 3.0)
    assert median == 2.0


def test_summarize_order_invariant():
    rng = np.random.default_rng(6)
    vals = list(rng.uniform(0, 1, size=101))
    shuffled = list(vals)
    rng.shuffle(shuffled)
    assert summarize(vals) == summarize(shuffled)


def test_summarize_empty_raises():
    with pytest.raises(ValueError):
        summarize([])
