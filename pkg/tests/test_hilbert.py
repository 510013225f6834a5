import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrcat import hilbert as hb
from kerrcat.errors import InvalidDimensionError, TruncationError

ALPHA = 1.6277


def test_annihilation_matrix_elements():
    np.testing.assert_array_equal(hb.annihilation(2), [[0, 1], [0, 0]])
    a = hb.annihilation(6)
    for n in range(5):
        assert a[n, n + 1] == pytest.approx(math.sqrt(n + 1))
    assert np.count_nonzero(a) == 5


def test_vacuum_is_annihilated():
    assert np.allclose(hb.annihilation(7) @ hb.fock(0, 7), 0)


def test_truncated_commutator():
    a = hb.annihilation(4)
    comm = a @ a.conj().T - a.conj().T @ a
    np.testing.assert_allclose(comm, np.diag([1, 1, 1, -3]), atol=1e-14)


@pytest.mark.parametrize("dim", [0, -3, 2.5, True])
def test_bad_dimension(dim):
    with pytest.raises(InvalidDimensionError):
        hb.annihilation(dim)


def test_displacement_identity_and_vacuum():
    np.testing.assert_allclose(hb.displacement(0, 10), np.eye(10), atol=1e-15)
    psi = hb.displacement(ALPHA, 40) @ hb.fock(0, 40)
    assert abs(np.vdot(hb.coherent_state(ALPHA, 40), psi)) ** 2 >= 1 - 1e-10


def test_displacement_vacuum_overlap():
    d = hb.displacement(2 * ALPHA, 50)
    assert d[0, 0].real == pytest.approx(math.exp(-2 * ALPHA**2), rel=1e-9)
    assert math.exp(-2 * ALPHA**2) == pytest.approx(4.99e-3, abs=1e-5)


def test_displacement_guard():
    with pytest.raises(TruncationError):
        hb.displacement(3.0, 20)
    with pytest.raises(TruncationError):
        hb.coherent_state(3.0, 20)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=1.2), st.complex_numbers(max_magnitude=1.2))
def test_displacement_composition(x, y):
    dim = 60
    lhs = hb.displacement(x, dim) @ hb.displacement(y, dim)
    rhs = np.exp(1j * (x * np.conj(y)).imag) * hb.displacement(x + y, dim)
    # compare on the well-represented low-photon block
    assert np.abs(lhs - rhs)[:15, :15].max() < 1e-8


def test_coherent_state():
    np.testing.assert_allclose(hb.coherent_state(0, 8), hb.fock(0, 8))
    psi = hb.coherent_state(ALPHA, 40)
    assert hb.expect(hb.number(40), psi).real == pytest.approx(ALPHA**2, abs=1e-6)
    assert ALPHA**2 == pytest.approx(2.649, abs=1e-3)
    assert np.linalg.norm((hb.annihilation(40) - ALPHA * np.eye(40)) @ psi) < 1e-8


def test_parity():
    p = hb.parity(6)
    np.testing.assert_allclose(p @ hb.fock(1, 6), -hb.fock(1, 6))
    cat = hb.cat_state(ALPHA, 1, 40)
    assert hb.expect(hb.parity(40), cat).real == pytest.approx(1, abs=1e-12)
    coh = hb.coherent_state(ALPHA, 40)
    assert hb.expect(hb.parity(40), coh).real == pytest.approx(math.exp(-2 * ALPHA**2), rel=1e-8)


def test_cardinal_states_orthonormal():
    c = hb.cardinal_states(hb.cat_state(ALPHA, 1, 40), hb.cat_state(ALPHA, -1, 40))
    for a, b in (("+X", "-X"), ("+Y", "-Y"), ("+Z", "-Z")):
        assert abs(np.vdot(c[a], c[b])) < 1e-12
        assert np.linalg.norm(c[a]) == pytest.approx(1)
    # +X is close to the coherent state |+alpha>
    assert abs(np.vdot(hb.coherent_state(ALPHA, 40), c["+X"])) ** 2 > 0.98


def test_wigner_special_values():
    assert hb.wigner(hb.ket2dm(hb.fock(0, 10)), 0) == pytest.approx(2 / np.pi, abs=1e-12)
    assert hb.wigner(hb.ket2dm(hb.fock(1, 10)), 0) == pytest.approx(-2 / np.pi, abs=1e-12)


def test_wigner_coherent_peak():
    rho = hb.ket2dm(hb.coherent_state(1.0 + 0.5j, 30))
    w = hb.wigner(rho, [1.0 + 0.5j, -1.0 - 0.5j])
    assert w[0] == pytest.approx(2 / np.pi, abs=1e-8)
    assert abs(w[1]) < 1e-3


def test_wigner_normalization_cat():
    rho = hb.ket2dm(hb.cat_state(ALPHA, 1, 40))
    r = ALPHA + 4
    step = 0.05
    xs = np.arange(-r, r + step / 2, step)
    w = hb.wigner_grid(rho, xs, xs)
    assert w.sum() * step * step == pytest.approx(1, abs=1e-3)


def test_wigner_grid_matches_pointwise():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    xs = np.array([-1.0, 0.0, 0.7])
    ys = np.array([-0.4, 0.3])
    grid = hb.wigner_grid(rho, xs, ys)
    pts = xs[None, :] + 1j * ys[:, None]
    np.testing.assert_allclose(grid, hb.wigner(rho, pts), atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_wigner_origin_is_parity(seed):
    rng = np.random.default_rng(seed)
    d = 8
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    w0 = hb.wigner(rho, 0)
    assert w0 == pytest.approx(2 / np.pi * hb.expect(hb.parity(d), rho).real, abs=1e-10)


def test_partial_trace_of_product():
    ra = hb.ket2dm(hb.coherent_state(0.5, 6))
    rb = hb.ket2dm(hb.fock(2, 4))
    rho = np.kron(ra, rb)
    np.testing.assert_allclose(hb.partial_trace(rho, (6, 4), 0), ra, atol=1e-14)
    np.testing.assert_allclose(hb.partial_trace(rho, (6, 4), 1), rb, atol=1e-14)


def test_density_checks():
    rho = hb.ket2dm(hb.coherent_state(0.7, 12))
    assert hb.density_report(rho).ok()
    assert not hb.density_report(2 * rho).ok()


def test_truncation_convergence_coherent():
    n1 = hb.expect(hb.number(30), hb.coherent_state(ALPHA, 30)).real
    n2 = hb.expect(hb.number(60), hb.coherent_state(ALPHA, 60)).real
    assert abs(n1 - n2) / n2 < 1e-6
