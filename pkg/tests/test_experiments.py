import math

import numpy as np
import pytest

from kerrcat.errors import FitError
from kerrcat.experiments import fit_cosine, rabi_oscillation
from kerrcat.model import DeviceParams

P = DeviceParams()
FIG2 = P.replace(delta_as=0.0)


def test_fit_cosine_recovers_frequency():
    t = np.linspace(0, 2, 200)
    fit = fit_cosine(t, 0.5 + 0.3 * np.cos(2 * math.pi * 3.3 * t + 0.4))
    assert fit["frequency"] == pytest.approx(3.3, rel=1e-8)
    assert fit["amplitude"] == pytest.approx(0.3, rel=1e-8)
    with pytest.raises(FitError):
        fit_cosine(t, np.ones_like(t))


def test_fock_qubit_rabi():
    # resonant drive on the bare resonator
    r = rabi_oscillation(FIG2, eps2=0.0, t_drive=3.0, dim=8)
    assert 2 * P.eps_x == pytest.approx(1.48)
    assert r.frequency == pytest.approx(1.48, rel=0.01)
    assert r.expected_frequency(P.eps_x) == pytest.approx(1.48)


@pytest.fixture(scope="module")
def aligned():
    return rabi_oscillation(FIG2, eps2=15.5)


def test_stabilized_rabi_frequency(aligned):
    assert aligned.nbar == pytest.approx(2.2, abs=0.1)
    assert aligned.frequency == pytest.approx(aligned.expected_frequency(P.eps_x), rel=0.05)
    assert aligned.frequency == pytest.approx(4.4, abs=0.2)


def test_phase_dependence(aligned):
    shifted = rabi_oscillation(FIG2, eps2=15.5, arg_eps_x=math.pi)
    assert shifted.frequency == pytest.approx(aligned.frequency, rel=1e-3)
    np.testing.assert_allclose(shifted.population, aligned.population, atol=1e-6)
    blocked = rabi_oscillation(FIG2, eps2=15.5, arg_eps_x=math.pi / 2)
    f = aligned.frequency
    assert blocked.fringe_amplitude(f) < 0.05 * aligned.fringe_amplitude(f)
    # what remains is a slow drift, far below the aligned swing
    assert blocked.contrast < 0.1 * aligned.contrast
    mid = rabi_oscillation(FIG2, eps2=15.5, arg_eps_x=math.pi / 4)
    assert mid.frequency == pytest.approx(math.cos(math.pi / 4) * aligned.frequency, rel=0.1)
