"""Eigenspectrum of the stabilized resonator and the Stark-shift tuneup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import hilbert as hb
from .errors import ContractError, SearchBracketError
from .model import DeviceParams, Generator, cat_terms, eigenbasis
from .units import TWO_PI


def default_dim(nbar: float) -> int:
    """Fock truncation that keeps the top-level population of the cat manifold
    and the first excited states negligible."""
    return max(40, int(math.ceil(nbar + 10 * math.sqrt(nbar) + 22)))


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues in MHz, sorted from the top of the inverted well down.

    ``gap_numeric`` holds the transitions cat -> psi_e+ and cat -> psi_e-
    (even and odd first excited states); ``two_photon_line`` is half the
    transition to the next even state.
    """

    eigenvalues: np.ndarray
    parities: np.ndarray
    cat_energy: float
    splitting: float
    degenerate: bool
    gap_numeric: tuple[float, float]
    two_photon_line: float
    gap_estimate: float | None
    vectors: np.ndarray = field(repr=False, default=None)

    @property
    def gap(self) -> float:
        """Smallest cat-to-excited separation (MHz, negative in this frame)."""
        return max(self.gap_numeric)

    def to_dict(self, n_levels: int = 12) -> dict:
        return {
            "eigenvalues_MHz": [float(x) for x in self.eigenvalues[:n_levels]],
            "parities": [int(p) for p in self.parities[:n_levels]],
            "cat_energy_MHz": self.cat_energy,
            "cat_splitting_MHz": self.splitting,
            "degenerate": self.degenerate,
            "line_psi_e_plus_MHz": self.gap_numeric[0],
            "line_psi_e_minus_MHz": self.gap_numeric[1],
            "two_photon_line_MHz": self.two_photon_line,
            "two_photon_state_MHz": 2 * self.two_photon_line,
            "gap_estimate_MHz": self.gap_estimate,
        }


def diagonalize(h: np.ndarray, K: float | None = None, eps2: float | None = None,
                degeneracy_tol: float = 1e-6) -> SpectrumReport:
    """Full spectrum of a parity-conserving Hamiltonian given in rad/us.

    The cat pair is the two highest eigenvalues; it is flagged degenerate
    when split by less than ``degeneracy_tol * K`` (``K`` defaults to 1 MHz).
    """
    h = np.asarray(h, complex)
    hb.check_hermitian(h)
    par_op = hb.parity(h.shape[0])
    if np.abs(h @ par_op - par_op @ h).max() > 1e-9 * max(1.0, np.abs(h).max()):
        raise ContractError("Hamiltonian does not conserve photon-number parity")
    w, v, par = eigenbasis(h)
    e = w / TWO_PI
    tol = degeneracy_tol * (K if K is not None else 1.0)
    even = np.nonzero(par == 1)[0]
    odd = np.nonzero(par == -1)[0]
    cat = 0.5 * (e[even[0]] + e[odd[0]])
    split = abs(e[even[0]] - e[odd[0]])
    lines = (float(e[even[1]] - cat), float(e[odd[1]] - cat))
    two_photon = float(e[even[2]] - cat) / 2 if even.size > 2 else float("nan")
    est = -gap_estimate(K, eps2) if K is not None and eps2 is not None else None
    return SpectrumReport(e, par.astype(int), float(cat), float(split), bool(split < tol),
                          lines, two_photon, est, v)


def gap_estimate(K: float, eps2: float) -> float:
    """Large-alpha gap magnitude 4 K nbar = 4 eps2 (MHz)."""
    if eps2 < 0 or K <= 0:
        raise ContractError("need K > 0 and eps2 >= 0")
    return 4.0 * K * (eps2 / K)


def fock_anharmonicity(K: float) -> float:
    """Gap of the undriven resonator, 2K (MHz)."""
    return 2.0 * K


def spurious_z_rate(delta: float, alpha: complex) -> float:
    """Residual Z-rotation rate -4 Delta |alpha|^2 exp(-2|alpha|^2) (MHz)."""
    n = abs(alpha) ** 2
    return -4.0 * delta * n * math.exp(-2.0 * n)


def z_rotation_rate(params: DeviceParams, delta_as: float, dim: int | None = None,
                    t_max: float = 2.0, n_samples: int = 41) -> float:
    """Simulated rotation rate (MHz) of |-Y> under the effective Hamiltonian.

    The equator state is built from the cat pair of the same Hamiltonian and
    evolved exactly (via its eigendecomposition) for ``t_max``; the rate is the
    slope of the unwrapped phase of <X> + i<Y>.
    """
    dim = dim or default_dim(params.nbar)
    p = params.replace(delta_as=delta_as)
    h = Generator(cat_terms(p, dim, "effective"), (dim,))({"eps2": p.eps2})
    w, v, par = eigenbasis(h)
    cp = v[:, np.nonzero(par == 1)[0][0]]
    cm = v[:, np.nonzero(par == -1)[0][0]]
    psi0 = (cp - 1j * cm) / math.sqrt(2)
    t = np.linspace(0.0, t_max, n_samples)
    coeff = v.conj().T @ psi0
    psi_t = (v[None] * (coeff[None] * np.exp(-1j * np.outer(t, w)))[:, None, :]).sum(-1)
    r01 = np.conj(psi_t @ cp.conj()) * (psi_t @ cm.conj())  # <C+|rho|C->
    phase = np.unwrap(np.angle(r01.conj()))  # arg(<X> + i<Y>) = -arg(rho_01)
    slope = np.polyfit(t, phase, 1)[0]
    return float(slope / TWO_PI)


def tuneup_detuning(params: DeviceParams, dim: int | None = None, tol: float = 1e-9) -> float:
    """Detuning Delta_as (MHz) that nulls the simulated Z rotation.

    Searched over [0, 2 * 4K|xi_s|^2]; returns 0 when there is no Stark shift.
    """
    if params.eps2 <= 0:
        raise ContractError("tuneup needs eps2 > 0")
    stark = params.stark_shift
    if stark == 0:
        return 0.0
    f = lambda d: z_rotation_rate(params, d, dim)  # noqa: E731
    lo, hi = 0.0, 2.0 * stark
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise SearchBracketError(f"no sign change of the Z rate on [{lo}, {hi}] MHz")
    return float(scipy.optimize.brentq(f, lo, hi, xtol=tol))
