"""Rabi oscillations of the Fock and cat qubits, and helpers shared by the runners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import hilbert as hb
from .dynamics import evolve
from .errors import FitError
from .model import DeviceParams, Generator, NoiseConfig, cat_basis, cat_terms
from .schedule import T_RABI_RISE, T_RAMP, Block, Envelope, PulseSchedule, Segment, ramp


@dataclass(frozen=True)
class RabiResult:
    times: np.ndarray                  # drive time (us), rise included
    population: np.ndarray             # population of |C+> (|0> when eps2 = 0)
    frequency: float                   # MHz
    contrast: float                    # peak-to-peak after the rise
    nbar: float                        # lobe photon number of the stabilized pair
    eps2: float
    arg_eps_x: float
    fit: dict = field(default_factory=dict, repr=False)
    rise: float = 0.0

    def expected_frequency(self, eps_x: float) -> float:
        """4 eps_x sqrt(<n>) when stabilized, 2 eps_x otherwise."""
        return 4 * eps_x * math.sqrt(self.nbar) if self.eps2 > 0 else 2 * eps_x

    def fringe_amplitude(self, frequency: float) -> float:
        """Peak-to-peak oscillation at ``frequency`` after the rise, on top of
        a quadratic baseline that absorbs slow drifts."""
        m = self.times >= self.rise
        t, y = self.times[m], self.population[m]
        w = 2 * math.pi * frequency * t
        basis = np.column_stack([np.cos(w), np.sin(w), np.ones_like(t), t, t * t])
        c = np.linalg.lstsq(basis, y, rcond=None)[0]
        return 2 * math.hypot(c[0], c[1])


def fit_cosine(t, y) -> dict:
    """Least-squares fit of c + A cos(2 pi f t + phi) with an FFT start value."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if np.ptp(y) < 1e-9:
        raise FitError("no oscillation to fit", y - y.mean())
    yc = y - y.mean()
    dt = t[1] - t[0]
    pad = 8 * t.size
    spec = np.abs(np.fft.rfft(yc, pad))
    freqs = np.fft.rfftfreq(pad, dt)
    f0 = freqs[1 + np.argmax(spec[1:])]
    a0 = 0.5 * np.ptp(y)

    def resid(p):
        return p[2] + p[0] * np.cos(2 * math.pi * p[1] * t + p[3]) - y

    best = None
    for ph in (0.0, math.pi / 2, math.pi, -math.pi / 2):
        sol = scipy.optimize.least_squares(resid, [a0, f0, y.mean(), ph], method="lm")
        if best is None or sol.cost < best.cost:
            best = sol
    a, f, c, ph = best.x
    return {"amplitude": abs(a), "frequency": abs(f), "offset": c, "phase": ph,
            "rms": float(np.sqrt(np.mean(best.fun ** 2)))}


def rabi_oscillation(params: DeviceParams, eps2: float | None = None, arg_eps_x: float = 0.0,
                     t_drive: float = 1.5, n_samples: int = 301, dim: int = 30,
                     kind: str = "effective", noise: NoiseConfig | None = None,
                     rise: float = T_RABI_RISE, t_ramp: float = T_RAMP) -> RabiResult:
    """Drive the stabilized resonator from |C+> and sample the |C+> population.

    The squeezing is ramped on from vacuum, then a single Rabi drive with a
    tanh rise is held for ``t_drive``; the population is recorded while the
    drive is on and the frequency is fitted after the rise.
    """
    p = params if eps2 is None else params.replace(eps2=eps2)
    gen = Generator(cat_terms(p, dim, kind), (dim,))
    sched = PulseSchedule()
    if p.eps2 > 0:
        sched = sched.append(ramp("on", p, t_ramp))
    t_on = sched.duration
    amp = p.eps_x * np.exp(1j * (arg_eps_x + p.eps_x_phase))
    drive = Envelope("tanh_ramp", amp, 0.0, t_drive, rise, "on")
    stab = Envelope("constant", p.eps2, 0.0, t_drive) if p.eps2 > 0 else Envelope("zero", 0, 0.0, t_drive)
    sched = sched.append(Block((Segment(0.0, t_drive, (("eps2", stab), ("eps_x", drive)), "rabi"),)))
    cb = cat_basis(p, dim, "ideal" if kind == "ideal" else "effective")
    proj = hb.ket2dm(cb.c_plus)
    times = t_on + np.linspace(0.0, t_drive, n_samples)
    channels = noise.channels(p, (dim,)) if noise is not None else []
    tr = evolve(sched.bind(gen), channels, hb.fock(0, dim), times, observables={"p": proj},
                store_states=False)
    pop = tr.expectations["p"].real
    rel = times - t_on
    after = rel >= rise
    contrast = float(np.ptp(pop[after]))
    try:
        fit = fit_cosine(rel[after], pop[after])
        freq = fit["frequency"]
    except FitError:
        fit, freq = {}, 0.0
    nbar = cb.nbar
    return RabiResult(rel, pop, float(freq), contrast, nbar, float(p.eps2), arg_eps_x, fit, rise)


def rabi_eps2_sweep(params: DeviceParams, eps2_values, **kw) -> list[RabiResult]:
    return [rabi_oscillation(params, float(e), **kw) for e in eps2_values]
