import numpy as np
import pytest
from hypothesis import given, strategies as st

from iqcrlb.impairment import (DB_FLOOR, ImbalanceParams, NoiseSpec, add_noise, apply_imbalance,
                               compensate, from_alpha, from_gain_phase, from_target_ilr,
                               residual_ilr_db, to_db)
from iqcrlb.waveform import OfdmConfig, TimeDomainFrame

alpha_st = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0.0, 0.95), st.floats(0, 2 * np.pi))


def test_balanced_frontend():
    p = ImbalanceParams(0.0, 0.0)
    assert p.k1 == 1 and p.k2 == 0 and p.alpha == 0
    assert p.ilr_db == DB_FLOOR


def test_gain_phase_frozen():
    p = from_gain_phase(0.1, 0.2)
    c, s = np.cos(0.1), np.sin(0.1)
    assert p.k1 == pytest.approx(complex(c, -0.1 * s))
    assert p.k2 == pytest.approx(complex(0.1 * c, s))
    assert p.alpha == pytest.approx(p.k2 / np.conj(p.k1))


@given(alpha_st)
def test_from_alpha_roundtrip(alpha):
    p = from_alpha(alpha)
    assert p.alpha == pytest.approx(alpha, abs=1e-12)
    assert p.k2 == pytest.approx(alpha * np.conj(p.k1), abs=1e-12)


def test_from_alpha_rejects_unit_magnitude():
    with pytest.raises(ValueError):
        from_alpha(1.0)


@given(st.floats(-80, -0.5), st.integers(0, 2 ** 32 - 1))
def test_target_ilr(ilr, seed):
    p = from_target_ilr(ilr, np.random.default_rng(seed))
    assert p.ilr_db == pytest.approx(ilr, abs=1e-9)


def test_target_ilr_unrealizable(rng):
    with pytest.raises(ValueError):
        from_target_ilr(0.0, rng)


def test_to_db_clamps():
    assert to_db(0.0) == DB_FLOOR
    assert to_db(100.0) == pytest.approx(20.0)


@given(alpha_st)
def test_compensation_removes_image(alpha):
    p = from_alpha(alpha)
    s = np.exp(1j * np.linspace(0, 5, 32)) * np.linspace(0.5, 1.5, 32)
    out = compensate(apply_imbalance(s, p), p.alpha)
    # r - alpha r* = K1 (1 - |alpha|^2) s
    assert np.allclose(out, p.k1 * (1 - abs(alpha) ** 2) * s)


def test_imbalance_keeps_frame_type():
    cfg = OfdmConfig(4, 1, 1)
    f = TimeDomainFrame(np.ones(5, complex), cfg)
    out = apply_imbalance(f, from_gain_phase(0.05, 0.02))
    assert isinstance(out, TimeDomainFrame) and out.config is cfg


def test_noise_variance_and_circularity(rng):
    w = add_noise(np.zeros(400_000, complex), 0.5, rng)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.5, rel=0.01)
    assert abs(np.mean(w * w)) < 0.01
    x = np.ones(3, complex)
    assert add_noise(x, 0.0, rng) is x
    with pytest.raises(ValueError):
        add_noise(x, -1.0, rng)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0, 0.0)


def test_residual_ilr():
    a = 0.1 * np.exp(0.3j)
    assert residual_ilr_db(a, a) == DB_FLOOR
    approx = residual_ilr_db(a, 0.0, exact=False)
    assert approx == pytest.approx(-20.0)
    # exact form divides by |1 - alpha_hat alpha*|^2, equal to 1 at alpha_hat = 0
    assert residual_ilr_db(a, 0.0) == pytest.approx(approx)
    assert residual_ilr_db(a, 0.09) != pytest.approx(residual_ilr_db(a, 0.09, exact=False), abs=1e-6)


def test_gain_phase_examples():
    p = from_gain_phase(0.1, 0.0)
    assert p.k1 == 1 and p.k2 == pytest.approx(0.1) and p.alpha == pytest.approx(0.1)
    assert p.ilr_db == pytest.approx(-20.0)
    q = from_gain_phase(0.0, 0.2)
    assert q.k1 == pytest.approx(np.cos(0.1)) and q.k2 == pytest.approx(1j * np.sin(0.1))
    assert abs(q.alpha) == pytest.approx(np.tan(0.1))


def test_real_input_scales_by_k1_plus_k2():
    p = from_gain_phase(0.07, -0.1)
    s = np.linspace(-1, 1, 9).astype(complex)
    assert np.allclose(apply_imbalance(s, p), (p.k1 + p.k2) * s)


def test_single_tone_image_ratio():
    p = from_alpha(0.05 * np.exp(1j))
    n = 64
    s = np.exp(2j * np.pi * 5 * np.arange(n) / n)
    spec = np.abs(np.fft.fft(apply_imbalance(s, p))) ** 2
    assert np.count_nonzero(spec > 1e-20 * spec.max()) == 2
    ilr = 10 * np.log10(spec[n - 5] / spec[5])
    assert ilr == pytest.approx(p.ilr_db, abs=1e-9)


def test_half_alpha_compensation():
    a = 0.02 * np.exp(0.4j)
    p = from_alpha(a)
    s = np.exp(2j * np.pi * 3 * np.arange(32) / 32)
    spec = np.abs(np.fft.fft(compensate(apply_imbalance(s, p), a / 2))) ** 2
    assert spec[29] / spec[3] == pytest.approx(abs(a / 2) ** 2, rel=0.01)


def test_alpha_phase_uniform():
    from scipy.stats import kstest
    rng = np.random.default_rng(5)
    ph = np.array([np.angle(from_target_ilr(-20.0, rng).alpha) for _ in range(10_000)])
    assert kstest((ph % (2 * np.pi)) / (2 * np.pi), "uniform").pvalue > 0.01


def test_residual_ilr_examples():
    assert residual_ilr_db(0.5, 0.4, exact=False) - residual_ilr_db(0.5, 0.4) == pytest.approx(
        20 * np.log10(0.8), abs=1e-9)


@given(alpha_st.filter(lambda a: abs(a) <= 0.1), alpha_st.filter(lambda a: abs(a) <= 0.1))
def test_residual_forms_agree_for_small_imbalance(a, b):
    if abs(a - b) < 1e-9:
        return
    assert abs(residual_ilr_db(a, b) - residual_ilr_db(a, b, exact=False)) < 0.1
