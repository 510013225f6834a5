"""Unit conventions.

User-facing frequencies are ordinary frequencies nu in MHz, the way every
device number is quoted. Internally every Hamiltonian and rate is an
angular frequency in rad/us, so that ``exp(-1j * H * t)`` with ``t`` in us
needs no further factors. Decay rates quoted as 1/T (T1, kappa_a) are
already in 1/us and are *not* multiplied by 2*pi.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def angular(nu_mhz):
    """MHz (nu) -> rad/us (omega)."""
    return TWO_PI * nu_mhz


def frequency(omega):
    """rad/us (omega) -> MHz (nu)."""
    return omega / TWO_PI


def hz_to_angular(nu_hz):
    """Hz (nu) -> rad/us. Used for the tiny dephasing rates quoted in Hz."""
    return TWO_PI * nu_hz * 1e-6
