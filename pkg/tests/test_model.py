import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrcat import hilbert as hb
from kerrcat.errors import ConfigError, TruncationError
from kerrcat.model import (DeviceParams, Generator, NoiseConfig, cat_basis, classical_energy_surface,
                           drive_term, h_cat, h_effective, h_full_two_mode)
from kerrcat.units import TWO_PI

P = DeviceParams()


def comm(x, y):
    return x @ y - y @ x


def test_defaults_and_derived():
    assert P.alpha == pytest.approx(1.6277, abs=1e-4)
    assert P.nbar == pytest.approx(17.75 / 6.7)
    assert P.kappa_b == pytest.approx(1.9)
    assert P.kappa_a == pytest.approx(1 / 15.5)
    assert P.stark_shift == pytest.approx(4 * 6.7 * 0.29**2)
    assert P.stark_shift == pytest.approx(2.25, abs=0.01)


@pytest.mark.parametrize("key,value", [("T1_us", -1.0), ("K_MHz", 0.0), ("n_th", 1.0), ("eps2_MHz", -2.0)])
def test_invalid_params_name_the_key(key, value):
    with pytest.raises(ConfigError, match=key):
        DeviceParams.from_mapping({key: value})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        DeviceParams.from_mapping({"bogus": 1})


def test_config_round_trip(tmp_path):
    p = P.replace(n_th=0.12, eps2=15.5)
    for name in ("p.json", "p.toml"):
        path = tmp_path / name
        p.save(path)
        assert DeviceParams.load(path) == p
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert DeviceParams.load(empty) == P
    bad = tmp_path / "bad.json"
    bad.write_text('{"K_MHz": 6.7,,}')
    with pytest.raises(ConfigError, match="line 1"):
        DeviceParams.load(bad)
    assert json.loads((tmp_path / "p.json").read_text())["n_th"] == 0.12


def test_overrides():
    p = P.with_overrides(["n_th=0.12", "T1_us = 20"])
    assert (p.n_th, p.T1) == (0.12, 20.0)
    with pytest.raises(ConfigError):
        P.with_overrides(["n_th"])


def test_h_cat_fock_element():
    h = h_cat(6.7, 0.0, 10)
    assert (hb.fock(2, 10) @ h @ hb.fock(2, 10)).real / TWO_PI == pytest.approx(-2 * 6.7)


@pytest.mark.parametrize("ratio", [2.0, 2.65, 4.0])
def test_cat_factorization_residual(ratio):
    K = 6.7
    eps2 = ratio * K
    dim = 50
    h = h_cat(K, eps2, dim)
    e0 = TWO_PI * eps2**2 / K
    for s in (1, -1):
        psi = hb.cat_state(math.sqrt(ratio), s, dim)
        res = np.linalg.norm((h - e0 * np.eye(dim)) @ psi) / np.linalg.norm(h, 2)
        assert res < 1e-8


def test_h_cat_truncation_guard():
    with pytest.raises(TruncationError):
        h_cat(1.0, 30.0, 20)


def test_builders_hermitian_and_parity():
    dim = 40
    par = hb.parity(dim)
    for h in (h_cat(6.7, 17.75, dim), h_effective(P, dim)):
        assert np.abs(h - h.conj().T).max() < 1e-12
        assert np.abs(comm(h, par)).max() < 1e-10
    assert np.abs(drive_term(0.74, dim) - drive_term(0.74, dim).conj().T).max() < 1e-14


def test_compensated_stark_equals_h_cat():
    p = P.replace(delta_as=P.stark_shift)
    np.testing.assert_allclose(h_effective(p, 40), h_cat(p.K, p.eps2, 40), atol=1e-9)


def test_drive_expectation_and_splitting():
    dim = 40
    coh = hb.coherent_state(P.alpha, dim)
    val = hb.expect(drive_term(0.74, dim), coh).real / TWO_PI
    assert val == pytest.approx(2 * 0.74 * P.alpha, rel=1e-8)
    assert 4 * 0.74 * P.alpha == pytest.approx(4.818, abs=1e-3)


def test_two_mode_reductions():
    dims = (12, 3)
    p = P.replace(xi_cr=0.0, eps2=6.0, g_cr=0.0)
    g = Generator(h_full_two_mode(p, dims), dims)
    h = g({"eps2": p.eps2})
    vac = hb.ket2dm(hb.fock(0, 3))
    # <0_b| H |0_b> on the storage factor reproduces the effective Hamiltonian
    red = h.reshape(12, 3, 12, 3)[:, 0, :, 0]
    np.testing.assert_allclose(red, h_effective(p, 12), atol=1e-10)
    assert vac.shape == (3, 3)


def test_conversion_conserves_total_number():
    dims = (12, 4)
    terms = {t.label: t for t in h_full_two_mode(P, dims)}
    h_cr = terms["conversion"].value({"g_cr": P.g_cr_complex})
    a, b = hb.two_mode_ops(*dims)
    n_tot = a.conj().T @ a + b.conj().T @ b
    assert np.abs(comm(h_cr, n_tot)).max() < 1e-10
    # default phase gives i g (a b^dag - a^dag b)
    expected = TWO_PI * 1j * P.g_cr * (a @ b.conj().T - a.conj().T @ b)
    np.testing.assert_allclose(h_cr, expected, atol=1e-10)


def test_cross_kerr_energy():
    dims = (12, 4)
    terms = {t.label: t for t in h_full_two_mode(P, dims)}
    psi = np.kron(hb.fock(1, 12), hb.fock(1, 4))
    e = (psi @ terms["cross_kerr"].operator @ psi).real / TWO_PI
    assert e == pytest.approx(-0.2)


def test_classical_surface():
    K, eps2 = 6.7, 17.75
    x = np.linspace(-3, 3, 6001)
    e = classical_energy_surface(K, eps2, x)
    peaks = x[np.argsort(e)[-2:]]
    assert np.sort(np.abs(peaks)) == pytest.approx([math.sqrt(eps2 / K)] * 2, abs=2e-3)
    assert e.max() - classical_energy_surface(K, eps2, 0.0) == pytest.approx(eps2**2 / K, rel=1e-6)
    assert eps2**2 / K == pytest.approx(47.02, abs=0.01)
    flat = classical_energy_surface(K, 0.0, x)
    assert x[np.argmax(flat)] == pytest.approx(0.0, abs=1e-9)


def test_stabilized_photon_number_at_fig2_point():
    cb = cat_basis(P.replace(eps2=15.5, delta_as=0.0), 40, "effective")
    assert cb.nbar == pytest.approx(2.2, abs=0.1)
    # the uncompensated Stark shift lowers the photon number below eps2 / K
    assert cb.nbar < 15.5 / P.K - 0.1
    n_even = hb.expect(hb.number(40), cb.c_plus).real
    assert n_even < cb.nbar


def test_cat_basis_phase_convention():
    cb = cat_basis(P, 40)
    for col, s in ((0, 1), (1, -1)):
        ov = np.vdot(hb.cat_state(P.alpha, s, 40), cb.vectors[:, col])
        assert ov.real > 0.99 and abs(ov.imag) < 1e-12
    assert tuple(cb.parities) == (1, -1)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 500.0), st.floats(5.0, 40.0))
def test_noise_channels_rates(n_th, kphi, t1):
    cfg = NoiseConfig(T1=t1, n_th=n_th, kappa_phi_eff=kphi)
    chans = {c.label: c.rate for c in cfg.channels(P, 6)}
    assert chans["loss"] == pytest.approx((1 + n_th) / t1)
    if n_th > 0:
        assert chans["gain"] == pytest.approx(n_th / t1)
    if kphi > 0:
        assert chans["dephasing"] == pytest.approx(TWO_PI * kphi * 1e-6)
    assert NoiseConfig.off().channels(P, 6) == []


def test_noise_override_validated():
    with pytest.raises(ConfigError):
        NoiseConfig(n_th=1.5).resolve(P)
