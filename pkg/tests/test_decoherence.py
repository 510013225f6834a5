import math

import numpy as np
import pytest

from kerrcat import hilbert as hb
from kerrcat.decoherence import (bitflip_time_analytic, coherence_sweep, exp_fit, leakage_population,
                                 p_ratio, rate_report, windowed_exp_fit)
from kerrcat.errors import ContractError, FitError
from kerrcat.model import DeviceParams, NoiseConfig

P = DeviceParams()


def test_bitflip_analytic():
    assert bitflip_time_analytic(2.6, 15.5, 0.0) == pytest.approx(15.5 / 5.2, abs=1e-12)
    assert bitflip_time_analytic(2.6, 15.5, 0.0) == pytest.approx(2.98, abs=5e-3)
    assert bitflip_time_analytic(2.6, 15.5, 0.04) == pytest.approx(2.76, abs=5e-3)
    assert bitflip_time_analytic(2.6, 15.5, 0.5) == pytest.approx(0.5 * bitflip_time_analytic(2.6, 15.5, 0.0))
    with pytest.raises(ContractError):
        bitflip_time_analytic(0.0, 15.5, 0.0)


def test_leakage_population():
    pe, pc = leakage_population(0.0, 15.5, 0.04)
    assert (pe, pc) == (0.0, 1.0)
    pe_inf, _ = leakage_population(1e6, 15.5, 0.04)
    assert pe_inf == pytest.approx(0.04 / 1.08)
    assert pe_inf == pytest.approx(0.037, abs=5e-4)
    rep = rate_report(P)
    assert rep.leakage_equilibration_time == pytest.approx(14.35, abs=0.01)


def test_jump_projection_identities():
    dim = 40
    a = hb.annihilation(dim)
    cp = hb.cat_state(P.alpha, 1, dim)
    cm = hb.cat_state(P.alpha, -1, dim)
    p = p_ratio(P.alpha)
    # a|C+> = alpha p |C->, a|C-> = alpha / p |C+>
    assert np.linalg.norm(a @ cp - P.alpha * p * cm) < 1e-8
    assert np.linalg.norm(a @ cm - P.alpha / p * cp) < 1e-8
    assert (1 / p - p) / 2 == pytest.approx(math.exp(-2 * P.nbar), rel=1e-3)
    # at the rounded nbar = 2.6 this is the quoted 0.006 suppression
    p26 = p_ratio(math.sqrt(2.6))
    assert (1 / p26 - p26) / 2 == pytest.approx(0.006, abs=6e-4)


def test_exp_fit_exact():
    t = np.linspace(0, 10, 60)
    fit = exp_fit(t, np.exp(-t / 2.6))
    assert fit.tau == pytest.approx(2.6, rel=1e-6)
    assert fit.residual_rms < 1e-8


def test_exp_fit_noise_monte_carlo():
    t = np.linspace(0, 4 * 2.6, 121)
    taus = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        taus.append(exp_fit(t, np.exp(-t / 2.6) + 0.01 * rng.standard_normal(t.size)).tau)
    assert np.max(np.abs(np.array(taus) / 2.6 - 1)) < 0.03


def test_exp_fit_failures():
    t = np.linspace(0, 1, 20)
    with pytest.raises(FitError):
        exp_fit(t, np.full(20, 0.3))
    with pytest.raises(ContractError):
        exp_fit(t[:5], t[:5])


def test_windowed_fit_ignores_slow_tail():
    t = np.linspace(0, 40, 200)
    y = np.exp(-t / 2.0) + 0.02 * (1 - np.exp(-t / 30.0))
    assert windowed_exp_fit(t, y).tau == pytest.approx(2.0, rel=0.05)


def test_pure_loss_matches_analytic():
    curves = coherence_sweep("Z", P, NoiseConfig(n_th=0.0), t_max=12.0)
    ref = bitflip_time_analytic(P.nbar, P.T1, 0.0)
    assert curves.tau == pytest.approx(ref, rel=0.05)


def test_x_decay_much_slower():
    noise = NoiseConfig(n_th=0.04)
    tx = coherence_sweep("X", P, noise).tau
    tz = coherence_sweep("Z", P, noise).tau
    assert tx > 20 * tz


def test_phase_flip_monotone():
    taus = np.empty((3, 3))
    for i, n_th in enumerate((0.02, 0.08, 0.14)):
        for j, kphi in enumerate((0.0, 200.0, 400.0)):
            taus[i, j] = coherence_sweep("X", P, NoiseConfig(n_th=n_th, kappa_phi_eff=kphi),
                                         n_points=61).tau
    assert np.all(np.diff(taus, axis=0) < 0)
    assert np.all(np.diff(taus, axis=1) < 0)


def test_leakage_curve_rises():
    c = coherence_sweep("Y", P, NoiseConfig(n_th=0.12))
    for lab, series in c.leakage.items():
        assert series[0] == pytest.approx(0.0, abs=1e-6)
        assert series[-1] > series[len(series) // 4] > 0
        assert c.leakage_fits[lab] is not None


def test_truncation_convergence():
    a = coherence_sweep("Y", P, NoiseConfig(n_th=0.08), t_max=5.0, n_points=11, dim=20)
    b = coherence_sweep("Y", P, NoiseConfig(n_th=0.08), t_max=5.0, n_points=11, dim=40)
    for k in a.expectations:
        assert np.abs(a.expectations[k] - b.expectations[k]).max() < 1e-6


def test_bad_axis():
    with pytest.raises(ContractError):
        coherence_sweep("W", P)


def test_fit_failure_is_flagged_not_raised():
    c = coherence_sweep("X", P.replace(T1=1e9), NoiseConfig.off(), t_max=50.0, n_points=21)
    assert c.fits["+X"] is None and c.flags
    assert math.isnan(c.leakage_tau)
