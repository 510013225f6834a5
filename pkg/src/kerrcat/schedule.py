"""Pulse envelopes, gate blocks and pulse schedules.

A schedule is an immutable tuple of segments tiling ``[0, T]``. Each segment
binds envelopes to the three drive slots ``eps2`` (squeezing), ``eps_x``
(Rabi drive) and ``g_cr`` (conversion). Gate builders produce blocks starting
at t = 0 written in the *local* cat frame; appending a block to a schedule
shifts it in time and rotates its drive phases by the accumulated frame
phase phi (eps2 by 2 phi, eps_x and g_cr by phi). Only Z gates change phi.
"""

from __future__ import annotations

import bisect
import functools
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from . import hilbert as hb
from .errors import AdiabaticityWarning, ContractError
from .model import DeviceParams, Generator, cat_basis, cat_terms
from .units import TWO_PI

SLOTS = ("eps2", "eps_x", "g_cr")
_FRAME_WEIGHT = {"eps2": 2, "eps_x": 1, "g_cr": 1}
KINDS = ("zero", "constant", "tanh_ramp", "gaussian", "rect_window", "linear")

T_RAMP = 0.32       # us, squeezing ramp
T_RABI_RISE = 0.08  # us, Rabi drive rise
T_X = 0.024         # us, Gaussian X-gate length
T_Z_RISE = 0.004    # us, squeezing step edges in the experimental Z gate


@dataclass(frozen=True)
class Envelope:
    """Time profile on ``[start, stop]`` (us) with complex ``amplitude`` (MHz).

    ``width`` is the ramp length for ``tanh_ramp``, sigma for ``gaussian`` and
    the edge length for ``rect_window``.
    """

    kind: str
    amplitude: complex = 0.0
    start: float = 0.0
    stop: float = 0.0
    width: float = 0.0
    direction: str = "on"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown envelope kind {self.kind!r}")
        if self.stop < self.start:
            raise ContractError("envelope stop before start")
        if self.kind in ("tanh_ramp", "gaussian") and self.width <= 0:
            raise ContractError(f"{self.kind} needs width > 0")
        if self.direction not in ("on", "off"):
            raise ContractError("direction must be 'on' or 'off'")
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    def shape(self, t: float) -> float:
        """Real profile in [0, 1]."""
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "constant":
            return 1.0
        if k == "tanh_ramp":
            w = self.width
            u = t - self.start if self.direction == "on" else self.stop - t
            u = min(max(u, 0.0), w)
            lo = math.tanh(-4.0)
            return (math.tanh(8.0 * (u - w / 2) / w) - lo) / (-2 * lo)
        if k == "gaussian":
            c = 0.5 * (self.start + self.stop)
            half = 0.5 * (self.stop - self.start)
            ped = math.exp(-0.5 * (half / self.width) ** 2)
            g = math.exp(-0.5 * ((t - c) / self.width) ** 2)
            return max(0.0, (g - ped) / (1.0 - ped))
        if k == "rect_window":
            if self.width <= 0:
                return 1.0
            edge = min(t - self.start, self.stop - t) / self.width
            return min(max(edge, 0.0), 1.0)
        # linear
        span = self.stop - self.start
        frac = (t - self.start) / span if span > 0 else 1.0
        frac = min(max(frac, 0.0), 1.0)
        return frac if self.direction == "on" else 1.0 - frac

    def __call__(self, t: float) -> complex:
        return self.amplitude * self.shape(t)

    def sample(self, times) -> np.ndarray:
        return np.array([self(t) for t in np.atleast_1d(times)])

    def shifted(self, dt: float) -> "Envelope":
        return replace(self, start=self.start + dt, stop=self.stop + dt)

    def rotated(self, phase: float) -> "Envelope":
        return replace(self, amplitude=self.amplitude * np.exp(1j * phase))

    def area(self) -> complex:
        """Integral of the envelope over its support (MHz us)."""
        from scipy.integrate import quad
        val, _ = quad(lambda t: self.shape(t), self.start, self.stop, limit=200)
        return self.amplitude * val

    def to_dict(self) -> dict:
        return {"kind": self.kind, "amplitude": [self.amplitude.real, self.amplitude.imag],
                "start": self.start, "stop": self.stop, "width": self.width,
                "direction": self.direction}

    @classmethod
    def from_dict(cls, d: dict) -> "Envelope":
        d = dict(d)
        re, im = d.pop("amplitude")
        return cls(amplitude=complex(re, im), **d)


@dataclass(frozen=True)
class Segment:
    start: float
    stop: float
    slots: tuple = ()  # tuple of (slot, Envelope)
    label: str = ""

    def __post_init__(self):
        if not self.stop > self.start:
            raise ContractError(f"segment {self.label!r} must have positive duration")
        for s, _ in self.slots:
            if s not in SLOTS:
                raise ContractError(f"unknown slot {s!r}")

    @property
    def duration(self) -> float:
        return self.stop - self.start

    def values(self, t: float) -> dict[str, complex]:
        out: dict[str, complex] = {}
        for s, env in self.slots:
            out[s] = out.get(s, 0.0) + env(t)
        return out

    def envelope(self, slot: str) -> Envelope | None:
        for s, env in self.slots:
            if s == slot:
                return env
        return None

    def shifted(self, dt: float, phase: float = 0.0) -> "Segment":
        slots = tuple((s, e.shifted(dt).rotated(_FRAME_WEIGHT[s] * phase)) for s, e in self.slots)
        return Segment(self.start + dt, self.stop + dt, slots, self.label)

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "label": self.label,
                "slots": [[s, e.to_dict()] for s, e in self.slots]}

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        slots = tuple((s, Envelope.from_dict(e)) for s, e in d["slots"])
        return cls(d["start"], d["stop"], slots, d.get("label", ""))


@dataclass(frozen=True)
class Block:
    """Gate or waiting block in the local frame, starting at t = 0."""

    segments: tuple
    frame_increment: float = 0.0
    label: str = ""

    @property
    def duration(self) -> float:
        return self.segments[-1].stop if self.segments else 0.0


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple = ()
    frame_phase: float = 0.0

    def __post_init__(self):
        t = 0.0
        for seg in self.segments:
            if abs(seg.start - t) > 1e-12:
                raise ContractError(f"segment {seg.label!r} leaves a gap or overlap at t={t}")
            t = seg.stop

    @property
    def duration(self) -> float:
        return self.segments[-1].stop if self.segments else 0.0

    @property
    def breakpoints(self) -> tuple:
        return tuple(s.stop for s in self.segments)

    def append(self, *blocks) -> "PulseSchedule":
        segs = list(self.segments)
        phi = self.frame_phase
        for blk in blocks:
            if isinstance(blk, PulseSchedule):
                blk = Block(blk.segments, blk.frame_phase)
            t0 = segs[-1].stop if segs else 0.0
            segs += [s.shifted(t0, phi) for s in blk.segments]
            phi += blk.frame_increment
        return PulseSchedule(tuple(segs), phi)

    def segment_at(self, t: float) -> Segment:
        if not self.segments:
            raise ContractError("empty schedule")
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[min(max(i, 0), len(self.segments) - 1)]

    @functools.cached_property
    def _starts(self):
        return [s.start for s in self.segments]

    def values(self, t: float) -> dict[str, complex]:
        return self.segment_at(t).values(t)

    def sample(self, times, slot: str) -> np.ndarray:
        return np.array([self.values(t).get(slot, 0.0) for t in np.atleast_1d(times)])

    def bind(self, generator: Generator) -> "DrivenHamiltonian":
        return DrivenHamiltonian(generator, self)

    def to_dict(self) -> dict:
        return {"frame_phase": self.frame_phase, "duration": self.duration,
                "segments": [s.to_dict() for s in self.segments]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSchedule":
        return cls(tuple(Segment.from_dict(s) for s in d["segments"]), d.get("frame_phase", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "PulseSchedule":
        return cls.from_dict(json.loads(text))


class DrivenHamiltonian:
    """Callable H(t) = generator(schedule values at t) with segment breakpoints."""

    def __init__(self, generator: Generator, schedule: PulseSchedule):
        self.generator = generator
        self.schedule = schedule
        self.breakpoints = schedule.breakpoints

    def __call__(self, t: float) -> np.ndarray:
        return self.generator(self.schedule.values(t))


# ------------------------------------------------------------- builders


def _stab(params: DeviceParams, duration: float, label: str, **extra) -> Segment:
    slots = [("eps2", Envelope("constant", params.eps2, 0.0, duration))]
    slots += [(s, e) for s, e in extra.items()]
    return Segment(0.0, duration, tuple(slots), label)


def map_ramp(direction: str, amplitude: complex, t_ramp: float = T_RAMP, start: float = 0.0) -> Envelope:
    """tanh ramp of the squeezing drive, rescaled to hit 0 and the full value exactly."""
    if t_ramp <= 0:
        raise ContractError("t_ramp must be > 0")
    return Envelope("tanh_ramp", amplitude, start, start + t_ramp, t_ramp, direction)


def ramp(direction: str, params: DeviceParams, t_ramp: float = T_RAMP) -> Block:
    env = map_ramp(direction, params.eps2, t_ramp)
    return Block((Segment(0.0, t_ramp, (("eps2", env),), f"ramp_{direction}"),), 0.0, "ramp")


def hold(duration: float, params: DeviceParams, eps_x: complex = 0.0) -> Block:
    """Stabilization on for ``duration``; optional constant Rabi drive."""
    extra = {"eps_x": Envelope("constant", eps_x, 0.0, duration)} if eps_x else {}
    return Block((_stab(params, duration, "hold", **extra),), 0.0, "hold")


def idle(duration: float) -> Block:
    """All drives off (free Kerr evolution)."""
    return Block((Segment(0.0, duration, (("eps2", Envelope("zero", 0, 0.0, duration)),), "idle"),))


def gaussian_pulse(amplitude: complex, duration: float = T_X) -> Envelope:
    return Envelope("gaussian", amplitude, 0.0, duration, duration / 4)


def x_gate_block(amplitude: complex, params: DeviceParams, duration: float = T_X) -> Block:
    """Gaussian Rabi pulse with the given (signed/complex) peak amplitude."""
    if abs(amplitude) >= 0.5 * 4 * params.K * params.nbar:
        warnings.warn(f"X-gate amplitude {abs(amplitude):.3g} MHz is not small against the gap",
                      AdiabaticityWarning, stacklevel=2)
    seg = _stab(params, duration, "x_gate", eps_x=gaussian_pulse(amplitude, duration))
    return Block((seg,), 0.0, "x_gate")


def x_gate(theta: float, params: DeviceParams, duration: float = T_X, kind: str = "ideal",
           dim: int = 36, amplitude: complex | None = None) -> Block:
    """X(theta) = exp(-i theta sigma_x / 2) on the cat qubit.

    The drive is aligned with the cat (phase 0 in the local frame, plus the
    calibrated ``eps_x_phase``). Unless ``amplitude`` is given it is
    calibrated by simulating the rotation angle (see
    :func:`calibrate_x_amplitude`).
    """
    if theta == 0:
        return Block((_stab(params, duration, "x_gate"),), 0.0, "x_gate")
    if amplitude is None:
        amplitude = calibrate_x_amplitude(theta, params, duration, kind, dim)
    return x_gate_block(amplitude * np.exp(1j * params.eps_x_phase), params, duration)


def z_gate_phase(params: DeviceParams, duration: float, kind: str = "ideal") -> float:
    """Cat-frame phase acquired while the squeezing drive is off.

    Kerr evolution for pi/2K maps |-Y> to |alpha e^{-i pi/2}>; with the
    effective model the uncompensated detuning adds -2 pi Delta_as T_Z.
    """
    phi = -math.pi / 2
    if kind == "effective":
        phi -= TWO_PI * params.delta_as * duration
    return phi


def z_gate(params: DeviceParams, mode: str = "ideal", kind: str = "ideal",
           duration: float | None = None, rise: float = T_Z_RISE) -> Block:
    """Z(pi/2): squeezing off for T_Z, then back on with its phase boosted by
    2 phi. ``mode="ideal"`` toggles instantly for exactly pi/2K;
    ``"experimental"`` uses 38 ns between half-amplitude points with linear
    edges of ``rise``."""
    if mode == "ideal":
        tz = duration if duration is not None else 1.0 / (4.0 * params.K)
        phi = z_gate_phase(params, tz, kind)
        seg = Segment(0.0, tz, (("eps2", Envelope("zero", 0, 0.0, tz)),), "z_gate")
        return Block((seg,), phi, "z_gate")
    if mode != "experimental":
        raise ContractError(f"unknown Z-gate mode {mode!r}")
    tz = duration if duration is not None else 0.038
    phi = z_gate_phase(params, tz, kind)
    boosted = params.eps2 * np.exp(2j * phi)
    segs = (
        Segment(0.0, rise, (("eps2", Envelope("linear", params.eps2, 0.0, rise, 0, "off")),), "z_fall"),
        Segment(rise, tz, (("eps2", Envelope("zero", 0, rise, tz)),), "z_off"),
        Segment(tz, tz + rise, (("eps2", Envelope("linear", boosted, tz, tz + rise, 0, "on")),), "z_rise"),
    )
    return Block(segs, phi, "z_gate")


def frame_rotation(phi: float, dim: int) -> np.ndarray:
    """R = exp(i phi a^dag a); R|alpha> = |alpha e^{i phi}>."""
    return np.diag(np.exp(1j * phi * np.arange(dim)))


def to_lab_frame(rho: np.ndarray, phi: float) -> np.ndarray:
    """Express a state of the boosted frame in the original cat basis."""
    r = frame_rotation(phi, rho.shape[-1])
    return r.conj().T @ rho @ r


def rabi_sequence(dt: float, arg_eps_x: float, params: DeviceParams,
                  t_ramp: float = T_RAMP, rise: float = T_RABI_RISE, ramp_off: bool = True) -> PulseSchedule:
    """Ramp on, Rabi drive (tanh rise) held for ``dt``, ramp off."""
    if dt < 0:
        raise ContractError("dt must be >= 0")
    sched = PulseSchedule().append(ramp("on", params, t_ramp))
    if dt > 0:
        amp = params.eps_x * np.exp(1j * (arg_eps_x + params.eps_x_phase))
        drive = Envelope("tanh_ramp", amp, 0.0, dt, min(rise, dt) if rise > 0 else dt, "on")
        if rise <= 0:
            drive = Envelope("constant", amp, 0.0, dt)
        sched = sched.append(Block((_stab(params, dt, "rabi", eps_x=drive),)))
    if ramp_off:
        sched = sched.append(ramp("off", params, t_ramp))
    return sched


CARDINALS = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")


def fock_cardinal(point: str, dim: int) -> np.ndarray:
    s = 1 / math.sqrt(2)
    z0, z1 = hb.fock(0, dim), hb.fock(1, dim)
    table = {"+Z": z0, "-Z": z1, "+X": s * (z0 + z1), "-X": s * (z0 - z1),
             "+Y": s * (z0 + 1j * z1), "-Y": s * (z0 - 1j * z1)}
    if point not in table:
        raise ContractError(f"unknown cardinal point {point!r}")
    return table[point]


@functools.lru_cache(maxsize=32)
def mapping_phase(params: DeviceParams, direction: str = "on", dim: int = 30,
                  kind: str = "ideal", t_ramp: float = T_RAMP) -> float:
    """Relative C-/C+ phase picked up by the noiseless squeezing ramp.

    The cat pair is degenerate along the whole ramp, but the even state
    admixes excited states non-adiabatically and so lags by a small phase.
    ``"on"`` returns the phase of the cat Bloch vector reached from Fock
    |+X>; ``"off"`` the Fock phase reached from the exact cat |+X>. The
    Fock-qubit preparation and readout frames are aligned with these values,
    which is what the experimental mapping calibration does.
    """
    from .dynamics import evolve

    gen = Generator(cat_terms(params, dim, kind), (dim,))
    sched = PulseSchedule().append(ramp(direction, params, t_ramp))
    cb = cat_basis(params, dim, "ideal" if kind == "ideal" else "effective")
    if direction == "on":
        psi = fock_cardinal("+X", dim)
        rho = evolve(sched.bind(gen), [], psi, [sched.duration], store_states=False).final
        _, x, y, _ = cb.bloch(rho)
    else:
        psi = cb.cardinals()["+X"]
        rho = evolve(sched.bind(gen), [], psi, [sched.duration], store_states=False).final
        x, y = 2 * rho[0, 1].real, -2 * rho[0, 1].imag
    return math.atan2(y, x)


def fock_frame(phi: float, dim: int) -> np.ndarray:
    """diag(1, e^{i phi}, 1, ...): phase on the Fock |1> amplitude only."""
    d = np.ones(dim, complex)
    d[1] = np.exp(1j * phi)
    return np.diag(d)


@dataclass(frozen=True)
class Preparation:
    rho0: np.ndarray = field(repr=False)
    schedule: PulseSchedule


def cardinal_init(point: str, params: DeviceParams, dim: int = 30, thermal: bool = False,
                  n_th: float | None = None, method: str = "fock", t_ramp: float = T_RAMP,
                  kind: str = "ideal", calibrate: bool = True) -> Preparation:
    """Initial Fock state and the schedule preparing a cat cardinal point.

    ``method="fock"`` prepares the point on the Fock qubit with an ideal
    unitary and ramps the squeezing on; a thermal flag first mixes in the
    Fock |1> population. ``method="gates"`` ramps |0> to |C+> and then
    rotates inside the cat manifold.
    """
    p_th = (params.n_th if n_th is None else n_th) if thermal else 0.0
    if method == "fock":
        psi = fock_cardinal(point, dim)
        flipped = fock_cardinal({"+": "-", "-": "+"}[point[0]] + point[1], dim)
        if point[1] == "Z":
            flipped = hb.fock(1, dim) if point == "+Z" else hb.fock(0, dim)
        rho = (1 - p_th) * hb.ket2dm(psi) + p_th * hb.ket2dm(flipped)
        if calibrate and params.eps2 > 0:
            f = fock_frame(-mapping_phase(params, "on", dim, kind, t_ramp), dim)
            rho = f @ rho @ f.conj().T
        return Preparation(rho, PulseSchedule().append(ramp("on", params, t_ramp)))
    if method != "gates":
        raise ContractError(f"unknown init method {method!r}")
    rho = (1 - p_th) * hb.ket2dm(hb.fock(0, dim)) + p_th * hb.ket2dm(hb.fock(1, dim))
    sched = PulseSchedule().append(ramp("on", params, t_ramp))
    gates = {
        "+Z": [], "-Z": [x_gate(math.pi, params, kind=kind)],
        "-Y": [x_gate(math.pi / 2, params, kind=kind)], "+Y": [x_gate(-math.pi / 2, params, kind=kind)],
        "+X": [x_gate(math.pi / 2, params, kind=kind), z_gate(params, kind=kind)],
        "-X": [x_gate(-math.pi / 2, params, kind=kind), z_gate(params, kind=kind)],
    }
    if point not in gates:
        raise ContractError(f"unknown cardinal point {point!r}")
    return Preparation(rho, sched.append(*gates[point]))


# ------------------------------------------------------------- calibration


def _bloch_angle(params: DeviceParams, amplitude: float, duration: float, kind: str, dim: int) -> float:
    """Rotation angle about X produced on |C+> by a Gaussian pulse."""
    from .dynamics import evolve

    cb = cat_basis(params, dim, "ideal" if kind == "ideal" else "effective")
    gen = Generator(cat_terms(params, dim, kind), (dim,))
    blk = x_gate_block(amplitude, params, duration)
    sched = PulseSchedule().append(blk)
    tr = evolve(sched.bind(gen), [], cb.c_plus, [sched.duration], rtol=1e-9, atol=1e-11,
                store_states=False)
    _, _, y, z = cb.bloch(tr.final)
    return math.atan2(-y, z)


@functools.lru_cache(maxsize=64)
def calibrate_x_amplitude(theta: float, params: DeviceParams, duration: float = T_X,
                          kind: str = "ideal", dim: int = 36) -> float:
    """Peak amplitude (MHz, signed) giving an X rotation by ``theta``.

    Numerical amplitude-Rabi calibration: the rotation angle of the simulated
    noiseless pulse is matched to ``|theta|`` by Brent's method in a bracket
    around the small-amplitude area law theta = 2 pi * 4 alpha * area.
    """
    if abs(theta) > math.pi + 1e-12:
        raise ContractError("calibrate |theta| <= pi")
    target = abs(theta)
    area = gaussian_pulse(1.0, duration).area().real
    guess = target / (TWO_PI * 4 * params.alpha * area)

    def err(a):
        ang = _bloch_angle(params, a, duration, kind, dim)
        if target > math.pi / 2:
            ang %= TWO_PI  # continuous through theta = pi
        return ang - target

    lo, hi = 0.5 * guess, 1.5 * guess
    for _ in range(30):
        if err(lo) < 0 < err(hi):
            break
        if err(lo) >= 0:
            lo *= 0.7
        else:
            lo, hi = hi, hi * 1.3
    else:
        raise ContractError(f"could not bracket X({theta}) amplitude")
    root = scipy.optimize.brentq(err, lo, hi, xtol=1e-8)
    return root if theta >= 0 else -root
