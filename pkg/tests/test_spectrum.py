import math

import numpy as np
import pytest

from kerrcat import hilbert as hb
from kerrcat.errors import ContractError
from kerrcat.model import DeviceParams, h_cat, h_effective
from kerrcat.spectrum import (diagonalize, fock_anharmonicity, gap_estimate, spurious_z_rate,
                              tuneup_detuning, z_rotation_rate)

P = DeviceParams()


def test_fock_spectrum_without_squeezing():
    rep = diagonalize(h_cat(6.7, 0.0, 12), K=6.7)
    assert sorted(rep.eigenvalues)[-3] == pytest.approx(-2 * 6.7)
    n = np.arange(12)
    np.testing.assert_allclose(np.sort(rep.eigenvalues), np.sort(-6.7 * n * (n - 1)), atol=1e-9)


def test_spectroscopy_lines():
    rep = diagonalize(h_effective(P, 60), K=P.K, eps2=P.eps2)
    assert rep.gap_numeric[0] == pytest.approx(-48.9, abs=1.0)
    assert rep.gap_numeric[1] == pytest.approx(-65.8, abs=1.0)
    assert rep.two_photon_line == pytest.approx(-53.2, abs=0.5)
    d = rep.to_dict()
    assert d["two_photon_state_MHz"] == pytest.approx(2 * rep.two_photon_line)


@pytest.mark.parametrize("ratio", [2.0, 2.65, 4.0])
def test_degenerate_cat_pair(ratio):
    K = 6.7
    rep = diagonalize(h_cat(K, ratio * K, 60), K=K, eps2=ratio * K)
    assert rep.degenerate
    assert rep.splitting < 1e-6 * K


def test_parity_labels_and_orthonormality():
    rep = diagonalize(h_cat(P.K, P.eps2, 50), K=P.K)
    v = rep.vectors
    assert np.abs(v.conj().T @ v - np.eye(50)).max() < 1e-10
    par = hb.parity(50)
    for k in range(12):
        assert abs(hb.expect(par, v[:, k]).real) > 1 - 1e-6


def test_parity_selection_rule():
    rep = diagonalize(h_cat(P.K, P.eps2, 50), K=P.K)
    v = rep.vectors[:, :10]
    a = hb.annihilation(50)
    m = v.conj().T @ (a + a.conj().T) @ v
    same = rep.parities[:10, None] == rep.parities[None, :10]
    assert np.abs(m[same]).max() < 1e-10


def test_non_hermitian_rejected():
    with pytest.raises(ContractError):
        diagonalize(np.array([[0, 1], [0, 0]], complex))


def test_gap_estimate():
    assert gap_estimate(6.7, 17.75) == pytest.approx(71.0)
    assert gap_estimate(6.7, 35.5) == pytest.approx(2 * 71.0)
    assert fock_anharmonicity(6.7) == pytest.approx(13.4)


def test_gap_approaches_estimate():
    K = 6.7
    rel = []
    for ratio in (4, 8, 12, 16):
        rep = diagonalize(h_cat(K, ratio * K, 90), K=K, eps2=ratio * K)
        rel.append(abs(abs(rep.gap) - gap_estimate(K, ratio * K)) / gap_estimate(K, ratio * K))
    assert all(x > y for x, y in zip(rel, rel[1:]))


def test_spurious_z_rate():
    assert spurious_z_rate(0.0, 1.6) == 0.0
    assert spurious_z_rate(1.0, math.sqrt(2.6)) == pytest.approx(-0.0574, abs=1e-4)
    rates = [abs(spurious_z_rate(1.0, math.sqrt(n))) for n in np.linspace(0.6, 5, 30)]
    assert all(x > y for x, y in zip(rates, rates[1:]))


def test_tuneup():
    assert tuneup_detuning(P.replace(xi_s=0.0)) == 0.0
    d = tuneup_detuning(P)
    assert d == pytest.approx(2.25, abs=0.1)
    assert abs(z_rotation_rate(P, d)) < 1e-3


def test_truncation_convergence_of_lines():
    a = diagonalize(h_effective(P, 50)).gap_numeric
    b = diagonalize(h_effective(P, 100)).gap_numeric
    assert np.allclose(a, b, rtol=1e-6, atol=0)
