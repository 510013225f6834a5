"""Analytic decoherence rates and master-equation coherence sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import hilbert as hb
from .dynamics import propagate
from .errors import ContractError, FitError
from .model import DeviceParams, NoiseConfig, cat_basis, h_cat


def bitflip_time_analytic(nbar: float, T1: float, n_th: float) -> float:
    """T1 / (2 nbar (1 + 2 n_th)) in us."""
    if nbar <= 0 or T1 <= 0:
        raise ContractError("need nbar > 0 and T1 > 0")
    return T1 / (2.0 * nbar * (1.0 + 2.0 * n_th))


def leakage_population(t, T1: float, n_th: float):
    """Excited-manifold and cat-manifold populations (p_e, p_c) from thermal heating."""
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ContractError("t must be >= 0")
    rate = (1.0 + 2.0 * n_th) / T1
    p_e = n_th / (1.0 + 2.0 * n_th) * (1.0 - np.exp(-rate * t))
    return p_e, 1.0 - p_e


def p_ratio(alpha: complex) -> float:
    """N+/N- with N+- = 1/sqrt(2 (1 +- exp(-2|alpha|^2)))."""
    x = math.exp(-2.0 * abs(alpha) ** 2)
    return math.sqrt((1.0 - x) / (1.0 + x))


@dataclass(frozen=True)
class RateReport:
    bitflip_time: float
    leakage_equilibration_time: float
    leakage_equilibrium_population: float
    n_th: float
    kappa_phi_eff: float

    def to_dict(self) -> dict:
        return {"bitflip_time_us": self.bitflip_time,
                "leakage_equilibration_time_us": self.leakage_equilibration_time,
                "leakage_equilibrium_population": self.leakage_equilibrium_population,
                "n_th": self.n_th, "kappa_phi_eff_Hz": self.kappa_phi_eff}


def rate_report(params: DeviceParams) -> RateReport:
    return RateReport(
        bitflip_time_analytic(params.nbar, params.T1, params.n_th),
        params.T1 / (1.0 + 2.0 * params.n_th),
        params.n_th / (1.0 + 2.0 * params.n_th),
        params.n_th, params.kappa_phi_eff,
    )


# ------------------------------------------------------------------ fits


@dataclass(frozen=True)
class ExpFit:
    amplitude: float
    tau: float
    offset: float
    residual_rms: float
    n_points: int

    def __call__(self, t):
        return self.amplitude * np.exp(-np.asarray(t, float) / self.tau) + self.offset

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "tau_us": self.tau, "offset": self.offset,
                "residual_rms": self.residual_rms, "n_points": self.n_points}


def _initial_guess(t, y):
    off = y[-1] - 0.05 * (y[-2] - y[-1]) if y.size > 1 else 0.0
    d = y - off
    sign = 1.0 if d[0] >= 0 else -1.0
    d = sign * d
    ok = d > 1e-3 * np.abs(d).max()
    if ok.sum() >= 2:
        slope, icpt = np.polyfit(t[ok], np.log(d[ok]), 1)
        if slope < 0:
            return sign * math.exp(icpt), -1.0 / slope, off
    return y[0] - y[-1], max(t[-1] - t[0], 1e-12) / 3.0, y[-1]


def exp_fit(t, y, max_iter: int = 200, atol: float = 1e-9) -> ExpFit:
    """Least-squares fit of A exp(-t/tau) + B (Levenberg-Marquardt).

    Series whose spread is below ``atol`` or 1e-9 of their magnitude are
    treated as constant and rejected.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.size < 8 or t.size != y.size:
        raise ContractError("exp_fit needs >= 8 matching samples")
    scale = max(float(np.abs(y).max()), 1e-300)
    if np.ptp(y) <= max(1e-9 * scale, atol):
        raise FitError("constant series: decay time is unidentifiable", np.zeros_like(y))
    a0, tau0, b0 = _initial_guess(t, y)

    def resid(p):
        with np.errstate(over="ignore"):
            return p[0] * np.exp(-t / p[1]) + p[2] - y

    sol = scipy.optimize.least_squares(resid, [a0, tau0, b0], method="lm", xtol=1e-10,
                                       ftol=1e-15, gtol=1e-15, max_nfev=max_iter * 4)
    a, tau, b = sol.x
    if sol.status <= 0 or not np.isfinite(sol.x).all() or tau <= 0:
        raise FitError(f"exponential fit did not converge ({sol.message})", resid(sol.x))
    return ExpFit(float(a), float(tau), float(b), float(np.sqrt(np.mean(sol.fun ** 2))), t.size)


def windowed_exp_fit(t, y, n_tau: float = 4.0) -> ExpFit:
    """Fit, then refit once over [0, n_tau * tau] of the first estimate."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    first = exp_fit(t, y)
    keep = t <= t[0] + n_tau * first.tau
    if keep.sum() >= 8 and keep.sum() < t.size:
        return exp_fit(t[keep], y[keep])
    return first


# --------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class CoherenceCurves:
    """Cat-basis expectation of ``axis`` for the two states on that axis, and
    the leakage out of the cat pair, with their exponential fits."""

    axis: str
    times: np.ndarray
    expectations: dict
    leakage: dict
    fits: dict
    leakage_fits: dict
    flags: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return float(np.mean([f.tau for f in self.fits.values() if f is not None]))

    @property
    def leakage_tau(self) -> float:
        vals = [f.tau for f in self.leakage_fits.values() if f is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def to_dict(self) -> dict:
        return {"axis": self.axis, "tau_us": self.tau, "leakage_tau_us": self.leakage_tau,
                "fits": {k: (v.to_dict() if v else None) for k, v in self.fits.items()},
                "leakage_fits": {k: (v.to_dict() if v else None) for k, v in self.leakage_fits.items()},
                "flags": self.flags}


_DEFAULT_T_MAX = {"X": 500.0, "Y": 15.0, "Z": 15.0}


def coherence_sweep(axis: str, params: DeviceParams, noise: NoiseConfig | None = None,
                    t_max: float | None = None, n_points: int = 121, dim: int = 20) -> CoherenceCurves:
    """Free decay of the two cardinal states on ``axis`` under the ideal cat
    Hamiltonian and the storage dissipators."""
    axis = axis.upper()
    if axis not in _DEFAULT_T_MAX:
        raise ContractError(f"axis must be X, Y or Z, got {axis!r}")
    noise = NoiseConfig() if noise is None else noise
    p = noise.resolve(params)
    t_max = _DEFAULT_T_MAX[axis] if t_max is None else t_max
    times = np.linspace(0.0, t_max, n_points)
    h = h_cat(p.K, p.eps2, dim)
    cb = cat_basis(p, dim, "ideal")
    card = cb.cardinals()
    labels = ("+" + axis, "-" + axis)
    rho0 = np.stack([hb.ket2dm(card[lab]) for lab in labels])
    tr = propagate(h, noise.channels(p, (dim,)), rho0, times, store_states=True)
    col = "IXYZ".index(axis)
    expectations, leakage, fits, lfits, flags = {}, {}, {}, {}, {}
    for i, lab in enumerate(labels):
        bl = np.array([cb.bloch(r) for r in tr.states[:, i]])
        expectations[lab] = bl[:, col]
        leakage[lab] = 1.0 - bl[:, 0]
        for store, key, series in ((fits, lab, bl[:, col]), (lfits, lab, 1.0 - bl[:, 0])):
            try:
                store[key] = windowed_exp_fit(times, series)
            except FitError as exc:
                store[key] = None
                flags[f"{'leakage ' if store is lfits else ''}{key}"] = str(exc)
    return CoherenceCurves(axis, times, expectations, leakage, fits, lfits, flags)
