"""Lindblad master-equation integration.

``evolve`` integrates

    d rho/dt = -i [H(t), rho] + sum_k g_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})

with an adaptive Dormand-Prince 5(4) pair and 4th-order dense output, using
direct matrix products only. ``oracle_evolve`` and ``propagate`` build the
Liouvillian explicitly and exponentiate it; they serve as a reference for
small dimensions and as a fast path for long piecewise-constant runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import ContractError, InvalidDimensionError, StiffnessError


@dataclass(frozen=True)
class CollapseChannel:
    """Jump operator ``operator`` with rate ``rate`` (1/us).

    ``local = (mode, op, dims)`` optionally records that the operator acts on
    one factor of a two-mode space; the integrator then applies it as a
    tensor contraction instead of a full matrix product.
    """

    operator: np.ndarray = field(repr=False)
    rate: float
    label: str = ""
    local: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ContractError(f"collapse rate must be finite and >= 0, got {self.rate}")
        op = np.asarray(self.operator)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise InvalidDimensionError("collapse operator must be square")

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    def transformed(self, u: np.ndarray) -> "CollapseChannel":
        """Channel with the operator projected onto the columns of ``u``."""
        return CollapseChannel(u.conj().T @ self.operator @ u, self.rate, self.label)


def _as_operator(h, t):
    return h(t) if callable(h) else h


class _Dissipator:
    """Pre-digested channel set: effective non-Hermitian part plus jump terms."""

    def __init__(self, channels: Sequence[CollapseChannel], dim: int):
        self.decay = np.zeros((dim, dim), complex)
        self.diag = []
        self.local = []
        self.dense = []
        for ch in channels:
            if ch.dim != dim:
                raise InvalidDimensionError(f"channel {ch.label!r} has dim {ch.dim}, expected {dim}")
            if ch.rate == 0:
                continue
            op = np.asarray(ch.operator, complex)
            self.decay += 0.5 * ch.rate * (op.conj().T @ op)
            if np.count_nonzero(op - np.diag(np.diagonal(op))) == 0:
                d = np.diagonal(op)
                self.diag.append((ch.rate, d[:, None] * d.conj()[None, :]))
            elif ch.local is not None:
                mode, small, dims = ch.local
                self.local.append((ch.rate, mode, np.asarray(small, complex), tuple(dims)))
            else:
                self.dense.append((ch.rate, op, op.conj().T))

    def jumps(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for g, w in self.diag:
            out += g * (w * rho)
        for g, mode, small, dims in self.local:
            da, db = dims
            lead = rho.shape[:-2]
            # matmul on reshaped views keeps both contractions in BLAS
            if mode == 0:
                r = small @ rho.reshape(*lead, da, db * da * db)
                r = small.conj() @ r.reshape(*lead, da * db, da, db)
            else:
                r = small @ rho.reshape(*lead, da, db, da * db)
                r = r.reshape(*lead, da * db * da, db) @ small.conj().T
            out += g * r.reshape(rho.shape)
        for g, op, opd in self.dense:
            out += g * (op @ rho @ opd)
        return out


def lindblad_rhs(hamiltonian, channels: Sequence[CollapseChannel], rho: np.ndarray, t: float = 0.0):
    """Right-hand side of the Lindblad equation (rho may carry batch axes)."""
    rho = np.asarray(rho, complex)
    h = np.asarray(_as_operator(hamiltonian, t), complex)
    if h.shape != rho.shape[-2:]:
        raise InvalidDimensionError(f"H has shape {h.shape}, rho has {rho.shape}")
    diss = _Dissipator(channels, h.shape[0])
    heff = h - 1j * diss.decay
    return -1j * (heff @ rho - rho @ heff.conj().T) + diss.jumps(rho)


# ----------------------------------------------------------------- DOPRI5

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# Dense output: y(t + s h) = y + h * sum_i k_i * (P @ [s, s^2, s^3, s^4])_i
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Trajectory:
    """Sampled solution. ``states`` is None when only observables were kept."""

    times: np.ndarray
    states: np.ndarray | None
    expectations: dict[str, np.ndarray]
    final: np.ndarray
    stats: dict = field(default_factory=dict)

    def invariant_report(self) -> dict[str, float]:
        """Worst trace error, Hermiticity defect and most negative eigenvalue
        over all stored samples (never corrected, only reported)."""
        states = self.states if self.states is not None else self.final[None]
        s = states.reshape(-1, *states.shape[-2:])
        tr = np.abs(np.einsum("bii->b", s) - 1).max()
        herm = np.abs(s - s.conj().swapaxes(-1, -2)).max()
        ev = np.linalg.eigvalsh(0.5 * (s + s.conj().swapaxes(-1, -2))).min()
        return {"trace_error": float(tr), "hermiticity": float(herm), "min_eigenvalue": float(ev)}


def _breakpoints(hamiltonian, t0, t1, extra):
    pts = set(extra or ())
    pts.update(getattr(hamiltonian, "breakpoints", ()) or ())
    return [t0] + sorted(p for p in pts if t0 < p < t1) + [t1]


def evolve(hamiltonian, channels: Sequence[CollapseChannel], rho0: np.ndarray,
           t_samples, rtol: float = 1e-8, atol: float = 1e-10,
           observables: Mapping[str, np.ndarray] | None = None,
           store_states: bool = True, breakpoints=None, max_step: float | None = None,
           t0: float = 0.0) -> Trajectory:
    """Integrate from ``t0`` and sample at ``t_samples`` (sorted, >= t0).

    ``hamiltonian`` is a constant matrix or a callable ``H(t)``; callables may
    expose ``breakpoints`` (segment edges) where the integrator restarts so
    that kinks in the envelopes are never stepped across. Sample values come
    from the dense-output interpolant. ``rho0`` may be a ket, a density
    matrix, or a batch ``(..., D, D)`` of density matrices integrated
    together.
    """
    rho = np.asarray(rho0, complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    ts = np.asarray(t_samples, float).ravel()
    if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < t0):
        raise ContractError("t_samples must be sorted and >= t0")
    dim = rho.shape[-1]
    h_test = np.asarray(_as_operator(hamiltonian, t0))
    if h_test.shape != (dim, dim):
        raise InvalidDimensionError(f"H has shape {h_test.shape}, rho has dim {dim}")
    diss = _Dissipator(channels, dim)
    const_h = None if callable(hamiltonian) else np.asarray(hamiltonian, complex) - 1j * diss.decay

    nfev = 0
    # For Hermitian rho, rho H_eff^dag = (H_eff rho)^dag saves one product.
    hermitian = bool(np.allclose(rho, rho.conj().swapaxes(-1, -2), atol=1e-13))

    def f(t, y):
        nonlocal nfev
        nfev += 1
        heff = const_h if const_h is not None else np.asarray(hamiltonian(t), complex) - 1j * diss.decay
        hy = heff @ y
        if not hermitian:
            return -1j * (hy - y @ heff.conj().T) + diss.jumps(y)
        # Symmetrizing the jump part keeps round-off in the anti-Hermitian
        # sector from being amplified by the jump terms alone.
        j = diss.jumps(y)
        out = -1j * hy + 0.5 * j
        return out + out.conj().swapaxes(-1, -2)

    obs = {k: np.asarray(v, complex).T.copy() for k, v in (observables or {}).items()}
    n = ts.size
    states = np.empty((n, *rho.shape), complex) if store_states else None
    expect = {k: np.empty((n, *rho.shape[:-2]), complex) for k in obs}

    def record(i, y):
        if store_states:
            states[i] = y
        for k, ot in obs.items():
            expect[k][i] = np.einsum("ij,...ij->...", ot, y)

    t_end = ts[-1] if n else t0
    idx = 0
    while idx < n and ts[idx] == t0:
        record(idx, rho)
        idx += 1

    y = rho
    h = None
    steps = rejected = 0
    edges = _breakpoints(hamiltonian, t0, t_end, breakpoints)
    for seg, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if b <= a:
            continue
        t = a
        k1 = f(t, y)
        if h is None:
            scale = atol + rtol * np.abs(y)
            d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
            d1 = np.sqrt(np.mean(np.abs(k1 / scale) ** 2))
            h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        hmax = max_step if max_step is not None else b - a
        while t < b:
            h = min(h, hmax, b - t)
            if b - t - h < 1e-14 * max(1.0, abs(b)):
                h = b - t
            if h < 1e-13 * max(1.0, abs(t)):
                raise StiffnessError(f"step size underflow at t={t:.6g} us in segment [{a:.6g}, {b:.6g}]",
                                     t=t, h=h, segment=(a, b))
            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(c * kk for c, kk in zip(_A[i], ks) if c != 0)
                ks.append(f(t + _C[i] * h, yi))
            y_new = y + h * sum(c * kk for c, kk in zip(_B5, ks) if c != 0)
            err_vec = h * sum(c * kk for c, kk in zip(_E, ks) if c != 0)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
            if err <= 1.0:
                t_new = b if h == b - t else t + h
                while idx < n and ts[idx] <= t_new:
                    s = (ts[idx] - t) / h
                    coeff = _P @ np.array([s, s * s, s**3, s**4])
                    record(idx, y + h * sum(c * kk for c, kk in zip(coeff, ks) if c != 0))
                    idx += 1
                t, y, k1 = t_new, y_new, ks[6]
                steps += 1
                fac = 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
                h = h * fac
            else:
                rejected += 1
                h = h * max(0.2, 0.9 * err ** -0.2)
        if not np.all(np.isfinite(y)):
            raise StiffnessError(f"non-finite state in segment [{a}, {b}]", t=t, h=h, segment=(a, b))
    while idx < n:  # samples exactly at t_end after rounding
        record(idx, y)
        idx += 1
    return Trajectory(ts, states, expect, y,
                      {"nfev": nfev, "steps": steps, "rejected": rejected, "segments": len(edges) - 1})


# ----------------------------------------------------------- Liouvillian


def liouvillian(h: np.ndarray, channels: Sequence[CollapseChannel]) -> np.ndarray:
    """Dense superoperator acting on row-major vec(rho)."""
    h = np.asarray(h, complex)
    d = h.shape[0]
    eye = np.eye(d)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        c = np.asarray(ch.operator, complex)
        cdc = c.conj().T @ c
        lv += ch.rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
    return lv


ORACLE_MAX_DIM = 16


def oracle_evolve(h: np.ndarray, channels: Sequence[CollapseChannel], rho0: np.ndarray, t: float):
    """rho(t) = expm(L t) rho0 for a constant generator; dim <= 16 only."""
    rho0 = np.asarray(rho0, complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    d = rho0.shape[0]
    if d > ORACLE_MAX_DIM:
        raise InvalidDimensionError(f"oracle limited to dim <= {ORACLE_MAX_DIM}, got {d}")
    prop = scipy.linalg.expm(liouvillian(h, channels) * t)
    return (prop @ rho0.reshape(-1)).reshape(d, d)


def propagate(h: np.ndarray, channels: Sequence[CollapseChannel], rho0: np.ndarray, times,
              observables: Mapping[str, np.ndarray] | None = None,
              store_states: bool = True) -> Trajectory:
    """Exact propagation under a constant generator at sorted ``times``.

    Intended for long, constant-Hamiltonian runs of moderate dimension
    (a few tens of levels): the superoperator exponential for each distinct
    time step is computed once and applied repeatedly.
    """
    rho = np.asarray(rho0, complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    d = rho.shape[-1]
    ts = np.asarray(times, float)
    lv = liouvillian(h, channels)
    cache: dict[float, np.ndarray] = {}
    batch = rho.shape[:-2]
    v = rho.reshape(-1, d * d).T
    obs = {k: np.asarray(o, complex).T.reshape(-1) for k, o in (observables or {}).items()}
    states = np.empty((ts.size, *rho.shape), complex) if store_states else None
    expect = {k: np.empty((ts.size, *batch), complex) for k in obs}
    t_prev = 0.0
    for i, t in enumerate(ts):
        dt = round(float(t - t_prev), 12)
        if dt < 0:
            raise ContractError("times must be sorted and >= 0")
        if dt > 0:
            if dt not in cache:
                cache[dt] = scipy.linalg.expm(lv * dt)
            v = cache[dt] @ v
        t_prev = t
        cur = v.T.reshape(rho.shape)
        if store_states:
            states[i] = cur
        for k, o in obs.items():
            expect[k][i] = (o @ v).reshape(batch)
    final = v.T.reshape(rho.shape)
    return Trajectory(ts, states, expect, final, {"expm": len(cache)})
