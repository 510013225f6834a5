"""Cat-quadrature readout through a frequency-converting coupling to a lossy cavity."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import hilbert as hb
from .dynamics import CollapseChannel, evolve
from .errors import ContractError, FitError, TruncationError
from .model import DeviceParams, NoiseConfig, cat_basis
from .units import TWO_PI, hz_to_angular

T_CR = 3.6
TAIL_TOL = 1e-6


def semiclassical_beta(t, sigma_x: int, params: DeviceParams):
    """Mean-field cavity amplitude (2 g alpha / kappa_b) sigma_x (1 - exp(-kappa_b t / 2))."""
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ContractError("t must be >= 0")
    kb = TWO_PI * params.kappa_b
    beta_ss = 2 * params.g_cr * params.alpha / params.kappa_b
    return (beta_ss * sigma_x * (1 - np.exp(-kb * t / 2))).astype(complex)


def qswitch_decay(t, g: float, kappa_b: float):
    """Storage population <n(t)>/<n(0)> of an unstabilized single excitation
    swapped into the cavity at coupling ``g`` (MHz) and cavity decay ``kappa_b`` (MHz)."""
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ContractError("t must be >= 0")
    k = TWO_PI * kappa_b
    om = np.sqrt(complex(k**2 - (4 * TWO_PI * g) ** 2))
    if abs(om) < 1e-9 * max(k, 1.0):
        amp = np.exp(-k * t / 4) * (1 + k * t / 4)
    else:
        amp = np.exp(-k * t / 4) * (om * np.cosh(om * t / 4) + k * np.sinh(om * t / 4)) / om
    return np.abs(amp) ** 2


@dataclass(frozen=True)
class QSwitchFit:
    g: float
    scale: float
    offset: float
    g_stderr: float
    residuals: np.ndarray = field(repr=False)
    unidentifiable: bool = False


def fit_gcr(t, n, kappa_b: float = 1.9, guesses=(0.3, 0.8, 1.5, 2.5, 4.0)) -> QSwitchFit:
    """Least-squares fit of scale * qswitch_decay(t, g) + offset; returns g in MHz."""
    t = np.asarray(t, float)
    n = np.asarray(n, float)
    if t.size < 20 or t.size != n.size:
        raise ContractError("fit_gcr needs >= 20 matching samples")

    def resid(p):
        return p[1] * qswitch_decay(t, abs(p[0]), kappa_b) + p[2] - n

    best = None
    for g0 in guesses:
        sol = scipy.optimize.least_squares(resid, [g0, n[0], 0.0], method="lm", xtol=1e-12)
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or not np.isfinite(best.x).all():
        raise FitError("Q-switch fit diverged", resid(best.x) if best is not None else n)
    g, scale, off = best.x
    dof = max(t.size - 3, 1)
    s2 = 2 * best.cost / dof
    try:
        cov = np.linalg.inv(best.jac.T @ best.jac) * s2
        err = float(np.sqrt(abs(cov[0, 0])))
        scale_err = float(np.sqrt(abs(cov[1, 1])))
    except np.linalg.LinAlgError:
        err = scale_err = float("inf")
    # a curve without a resolvable decay says nothing about g
    no_signal = abs(scale) <= max(3 * scale_err, 1e-6 * np.abs(n).max())
    flat = abs(g) < 0.05 or not np.isfinite(err) or err > abs(g) or no_signal
    return QSwitchFit(abs(float(g)), float(scale), float(off), err, best.fun, bool(flat))


# ---------------------------------------------------------- two-mode model


@dataclass(frozen=True)
class ReadoutDynamics:
    """Deterministic two-mode evolution for the two preparations (+alpha, -alpha)."""

    times: np.ndarray
    b_mean: np.ndarray        # (n_t, 2) <b>(t)
    rho_storage: np.ndarray = field(repr=False)   # (2, M, M) final storage state
    basis: np.ndarray = field(repr=False)          # (N, M) storage eigenvectors
    cavity_tail: float = 0.0
    mean_photons: float = 0.0

    def retention(self) -> np.ndarray:
        """p(+|+) and p(-|-): overlap of the final storage state with the prepared X state."""
        s = 1 / math.sqrt(2)
        xp = np.zeros(self.rho_storage.shape[-1], complex)
        xm = xp.copy()
        xp[:2] = s, s
        xm[:2] = s, -s
        return np.real(np.array([xp.conj() @ self.rho_storage[0] @ xp,
                                 xm.conj() @ self.rho_storage[1] @ xm]))

    def bloch(self, which: int = 0):
        r = self.rho_storage[which][:2, :2]
        return (float(np.real(r[0, 0] + r[1, 1])), float(2 * np.real(r[0, 1])),
                float(-2 * np.imag(r[0, 1])), float(np.real(r[0, 0] - r[1, 1])))


def _storage_basis(params: DeviceParams, n_states: int, dim: int, stabilized: bool):
    if stabilized:
        cb = cat_basis(params, dim, "ideal", n_states=n_states)
        return cb.vectors, cb.energies - cb.energies[0]
    k = hb.number(dim)
    e = -TWO_PI * params.K * np.diag(k @ (k - np.eye(dim))).real
    return np.eye(dim, dtype=complex)[:, :n_states], e[:n_states]


@dataclass(frozen=True)
class ReadoutModel:
    hamiltonian: np.ndarray = field(repr=False)
    channels: tuple = field(repr=False)
    rho0: np.ndarray = field(repr=False)    # (2, D, D): +alpha and -alpha with the cavity in vacuum
    b: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    dims: tuple = (8, 28)


def readout_model(params: DeviceParams, noise: NoiseConfig | None = None, n_states: int = 8,
                  dim_b: int = 28, dim: int = 50) -> ReadoutModel:
    """Cat Hamiltonian plus conversion coupling, with the storage represented on
    the ``n_states`` highest eigenstates of the stabilized Hamiltonian (the cat
    pair and its leakage levels) and the cavity on ``dim_b`` Fock states."""
    noise = NoiseConfig.cavity_only() if noise is None else noise
    p = noise.resolve(params)
    beta_ss = 2 * p.g_cr * p.alpha / p.kappa_b
    hb.check_truncation(beta_ss, dim_b)
    v, e = _storage_basis(p, n_states, dim, p.eps2 > 0)
    m = v.shape[1]
    a_small = v.conj().T @ hb.annihilation(dim) @ v
    b_small = hb.annihilation(dim_b)
    dims = (m, dim_b)
    a = np.kron(a_small, np.eye(dim_b))
    b = np.kron(np.eye(m), b_small)
    conv = TWO_PI * p.g_cr_complex * a.conj().T @ b
    h = np.kron(np.diag(e), np.eye(dim_b)) + conv + conv.conj().T

    channels = []
    if noise.cavity_loss:
        channels.append(CollapseChannel(b, TWO_PI * p.kappa_b, "cavity", (1, b_small, dims)))
    if noise.storage_loss:
        th = p.n_th if noise.thermal else 0.0
        channels.append(CollapseChannel(a, p.kappa_a * (1 + th), "loss", (0, a_small, dims)))
        if th > 0:
            channels.append(CollapseChannel(a.conj().T, p.kappa_a * th, "gain",
                                            (0, a_small.conj().T, dims)))
    if noise.dephasing and p.kappa_phi_eff > 0:
        n_small = v.conj().T @ hb.number(dim) @ v
        channels.append(CollapseChannel(np.kron(n_small, np.eye(dim_b)),
                                        hz_to_angular(p.kappa_phi_eff), "dephasing", (0, n_small, dims)))
    s = 1 / math.sqrt(2)
    vac = hb.fock(0, dim_b)
    kets = []
    for sign in (1, -1):
        x = np.zeros(m, complex)
        x[0], x[1] = s, sign * s
        kets.append(np.kron(x, vac))
    rho0 = np.stack([np.outer(k, k.conj()) for k in kets])
    return ReadoutModel(h, tuple(channels), rho0, b, v, dims)


def readout_dynamics(params: DeviceParams, noise: NoiseConfig | None = None, t_cr: float = T_CR,
                     dt: float = 0.02, n_states: int = 8, dim_b: int = 28, dim: int = 50,
                     rtol: float = 1e-7, atol: float = 1e-9) -> ReadoutDynamics:
    """Evolve |+-alpha> (x) |0> for ``t_cr`` and keep <b>(t) and the final storage state.

    Results are cached per argument set; the default noise is cavity loss only.
    """
    noise = NoiseConfig.cavity_only() if noise is None else noise
    return _readout_dynamics(params, noise, float(t_cr), float(dt), n_states, dim_b, dim, rtol, atol)


@functools.lru_cache(maxsize=8)
def _readout_dynamics(params, noise, t_cr, dt, n_states, dim_b, dim, rtol, atol) -> ReadoutDynamics:
    mod = readout_model(params, noise, n_states, dim_b, dim)
    m, nb = mod.dims
    times = np.arange(0.0, t_cr + 0.5 * dt, dt)
    tr = evolve(mod.hamiltonian, mod.channels, mod.rho0, times, rtol=rtol, atol=atol,
                observables={"b": mod.b}, store_states=False)
    r = tr.final.reshape(2, m, nb, m, nb)
    rho_a = np.einsum("nibjb->nij", r)
    rho_b = np.einsum("naiaj->nij", r)
    tail = float(np.real(rho_b[:, -1, -1]).max())
    if tail > TAIL_TOL:
        raise TruncationError(f"cavity population tail {tail:.2e} exceeds {TAIL_TOL:g}; raise dim_b")
    n_b = float(np.real(np.einsum("nii,i->n", rho_b, np.arange(nb))).mean())
    return ReadoutDynamics(times, tr.expectations["b"], rho_a, mod.basis, tail, n_b)


# -------------------------------------------------------------- records


@dataclass(frozen=True)
class ReadoutRecord:
    times: np.ndarray
    samples: np.ndarray
    label: int
    mean: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.times.size > 2 and np.ptp(np.diff(self.times)) > 1e-9:
            raise ContractError("record samples must be uniformly spaced")


def output_field(dyn: ReadoutDynamics, params: DeviceParams) -> np.ndarray:
    """beta_out(t) = sqrt(kappa_b,c) <b>(t) for (+alpha, -alpha), in sqrt(photons/us)."""
    return math.sqrt(TWO_PI * params.kappa_b_c) * dyn.b_mean


def matched_filter(beta_plus, beta_minus) -> np.ndarray:
    return np.conj(np.asarray(beta_plus) - np.asarray(beta_minus))


def filter_snr(beta_plus, beta_minus, envelope, dt: float, eta: float = 1.0) -> float:
    """Separation / sigma of the integrated signal for white record noise."""
    k = np.asarray(envelope, complex)
    sep = abs(np.sum(k * (np.asarray(beta_plus) - np.asarray(beta_minus))) * dt)
    sigma = math.sqrt(1.0 / (2 * eta * dt)) * math.sqrt(np.sum(np.abs(k) ** 2)) * dt
    return sep / sigma


def _record_noise(rng, shape, dt: float, eta: float):
    std = math.sqrt(1.0 / (2 * eta * dt))
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def simulate_readout(prep: int, params: DeviceParams, noise: NoiseConfig | None = None,
                     seed: int = 0, t_cr: float = T_CR, eta: float = 1.0, n_shots: int = 1,
                     dt: float = 0.02):
    """Noisy output records for preparation ``prep`` (+1 or -1) and their
    integrated (I, Q) values.

    Each shot is the conditional mean output field plus complex white vacuum
    noise; (I + iQ) = sum K(t) record(t) dt with the matched filter K.
    Returns (first ReadoutRecord, complex array of n_shots integrated values).
    """
    if prep not in (1, -1):
        raise ContractError("prep must be +1 or -1")
    dyn = readout_dynamics(params, noise, t_cr, dt)
    beta = output_field(dyn, params)
    kern = matched_filter(beta[:, 0], beta[:, 1])
    mean = beta[:, 0 if prep == 1 else 1]
    rng = np.random.default_rng(seed)
    recs = mean[None, :] + _record_noise(rng, (n_shots, mean.size), dt, eta)
    iq = (recs @ kern) * dt
    return ReadoutRecord(dyn.times, recs[0], prep, mean), iq


@dataclass(frozen=True)
class HistogramReport:
    points: dict = field(repr=False)
    means: dict
    sigmas: dict
    threshold: float
    fidelity: float
    separation: float
    qnd: float | None = None

    def to_dict(self) -> dict:
        return {"means": self.means, "sigmas": self.sigmas, "threshold": self.threshold,
                "fidelity": self.fidelity, "separation_over_sigma": self.separation, "Q": self.qnd}


def histogram_report(params: DeviceParams, noise: NoiseConfig | None = None, n_shots: int = 30_000,
                     seed: int = 0, t_cr: float = T_CR, eta: float = 1.0, qnd: float | None = None,
                     dt: float = 0.02) -> HistogramReport:
    """Gaussian statistics of the integrated shots, scaled so that sigma = 1,
    with assignment fidelity F = 1 - P(-|+) - P(+|-) at the threshold I = 0."""
    seeds = np.random.SeedSequence(seed).spawn(2)
    pts, means, sig = {}, {}, {}
    raw = {}
    for prep, ss in zip((1, -1), seeds):
        _, iq = simulate_readout(prep, params, noise, int(ss.generate_state(1)[0]), t_cr, eta,
                                 n_shots, dt)
        raw[prep] = iq
    sigma = float(np.sqrt(0.5 * (raw[1].real.var(ddof=1) + raw[-1].real.var(ddof=1))))
    for prep, iq in raw.items():
        key = "+" if prep == 1 else "-"
        pts[key] = iq / sigma
        means[key] = (float(pts[key].real.mean()), float(pts[key].imag.mean()))
        sig[key] = float(pts[key].real.std(ddof=1))
    err = np.mean(pts["+"].real < 0) + np.mean(pts["-"].real > 0)
    sep = abs(means["+"][0] - means["-"][0])
    return HistogramReport(pts, means, sig, 0.0, float(1 - err), float(sep), qnd)


def qnd_metric(params: DeviceParams, noise: NoiseConfig | None = None, t_cr: float = T_CR,
               **kw) -> float:
    """Q = (p(+|+) + p(-|-)) / 2 from cat-manifold retention after one pulse."""
    dyn = readout_dynamics(params, noise, t_cr, **kw)
    return float(dyn.retention().mean())


def record_qnd(params: DeviceParams, noise: NoiseConfig | None = None, n_shots: int = 20_000,
               seed: int = 0, t_cr: float = T_CR, eta: float = 1.0) -> float:
    """Agreement rate of two successive thresholded readouts.

    The state between pulses is flipped with the simulated non-retention
    probability; cavity ring-down between the pulses is assumed complete.
    """
    dyn = readout_dynamics(params, noise, t_cr)
    keep = dyn.retention()
    rng = np.random.default_rng(seed)
    agree = []
    for idx, prep in enumerate((1, -1)):
        _, first = simulate_readout(prep, params, noise, int(rng.integers(2**63)), t_cr, eta, n_shots)
        flip = rng.random(n_shots) > keep[idx]
        second = np.empty(n_shots, complex)
        for state, mask in ((prep, ~flip), (-prep, flip)):
            if mask.any():
                _, s = simulate_readout(state, params, noise, int(rng.integers(2**63)), t_cr, eta,
                                        int(mask.sum()))
                second[mask] = s
        agree.append(np.mean(np.sign(first.real) == np.sign(second.real)))
    return float(np.mean(agree))


def in_manifold_rotation(dyn: ReadoutDynamics) -> float:
    """Angle (rad) of the final +X Bloch vector away from the X axis.

    This lumps coherent tilts together with the Z imbalance that photon loss
    builds up through the unequal cat norms, so it is an upper bound on any
    readout-induced rotation.
    """
    _, x, y, z = dyn.bloch(0)
    return math.atan2(math.hypot(y, z), x)


def qswitch_simulation(params: DeviceParams, t_max: float = 3.0, dt: float = 0.02,
                       dim_b: int = 4, n_states: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Unstabilized regime: storage Fock |1> swapped into the cavity, <n_a>(t)."""
    p = params.replace(eps2=0.0)
    v, e = _storage_basis(p, n_states, n_states, False)
    a_small = hb.annihilation(n_states)
    b_small = hb.annihilation(dim_b)
    dims = (n_states, dim_b)
    a = np.kron(a_small, np.eye(dim_b))
    b = np.kron(np.eye(n_states), b_small)
    conv = TWO_PI * p.g_cr_complex * a.conj().T @ b
    h = np.kron(np.diag(e), np.eye(dim_b)) + conv + conv.conj().T
    ch = [CollapseChannel(b, TWO_PI * p.kappa_b, "cavity", (1, b_small, dims))]
    psi = np.kron(hb.fock(1, n_states), hb.fock(0, dim_b))
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    tr = evolve(h, ch, psi, times, observables={"n_a": a.conj().T @ a}, store_states=False)
    return times, tr.expectations["n_a"].real
