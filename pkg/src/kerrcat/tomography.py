"""Process tomography on the cat qubit and the random gate-sequence benchmark."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert as hb
from .dynamics import evolve
from .model import DeviceParams, Generator, NoiseConfig, cat_basis, cat_terms
from .schedule import (CARDINALS, T_RAMP, Block, PulseSchedule, cardinal_init, fock_frame,
                       frame_rotation, mapping_phase, ramp, to_lab_frame, x_gate)

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], complex),
)
# Bloch vectors of the cardinal points, in CARDINALS order
_BLOCH = {"+X": (1, 0, 0), "-X": (-1, 0, 0), "+Y": (0, 1, 0), "-Y": (0, -1, 0),
          "+Z": (0, 0, 1), "-Z": (0, 0, -1)}


def rx(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * SIGMA[0] - 1j * np.sin(theta / 2) * SIGMA[1]


def rz(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * SIGMA[0] - 1j * np.sin(theta / 2) * SIGMA[3]


@dataclass(frozen=True)
class ExpectationSet:
    """(<I>, <X>, <Y>, <Z>) for the six preparations, rows in CARDINALS order."""

    values: np.ndarray
    errors: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.shape != (6, 4):
            raise ValueError(f"expectation set must be 6x4, got {v.shape}")
        e = np.zeros_like(v) if self.errors is None else np.broadcast_to(np.asarray(self.errors, float), v.shape).copy()
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "errors", e)

    def __getitem__(self, point: str) -> np.ndarray:
        return self.values[CARDINALS.index(point)]

    def with_errors(self, std) -> "ExpectationSet":
        return ExpectationSet(self.values, std)

    @classmethod
    def ideal(cls, unitary: np.ndarray | None = None) -> "ExpectationSet":
        u = np.eye(2) if unitary is None else np.asarray(unitary)
        rows = []
        for pt in CARDINALS:
            rho = 0.5 * (SIGMA[0] + sum(c * s for c, s in zip(_BLOCH[pt], SIGMA[1:])))
            out = u @ rho @ u.conj().T
            rows.append([np.real(np.trace(out @ s)) for s in SIGMA])
        return cls(np.array(rows))

    def to_dict(self) -> dict:
        return {pt: {"I": v[0], "X": v[1], "Y": v[2], "Z": v[3], "std": list(e)}
                for pt, v, e in zip(CARDINALS, self.values.tolist(), self.errors.tolist())}


@dataclass(frozen=True)
class PTM:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, float)
        if m.shape != (4, 4):
            raise ValueError("PTM must be 4x4")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "PTM") -> "PTM":
        return PTM(self.matrix @ other.matrix)

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.matrix)).max())

    @classmethod
    def from_channel(cls, channel) -> "PTM":
        """R_jk = 1/2 Tr[sigma_j E(sigma_k)] for a linear map on 2x2 matrices."""
        out = [channel(s) for s in SIGMA]
        return cls(np.array([[0.5 * np.real(np.trace(sj @ ok)) for ok in out] for sj in SIGMA]))

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "PTM":
        return cls.from_channel(lambda m: u @ m @ u.conj().T)


def ptm_fidelity(r_exp, r_ideal) -> float:
    """F = (1/2 Tr[R_ideal^T R_exp] + 1) / 3."""
    a = r_exp.matrix if isinstance(r_exp, PTM) else np.asarray(r_exp)
    b = r_ideal.matrix if isinstance(r_ideal, PTM) else np.asarray(r_ideal)
    return float((0.5 * np.trace(b.T @ a) + 1.0) / 3.0)


def process_fidelity(r_exp, r_ideal) -> float:
    """Tr[R_ideal^T R_exp] / 4."""
    a = r_exp.matrix if isinstance(r_exp, PTM) else np.asarray(r_exp)
    b = r_ideal.matrix if isinstance(r_ideal, PTM) else np.asarray(r_ideal)
    return float(np.trace(b.T @ a) / 4.0)


def _pauli_vectors(values: np.ndarray) -> np.ndarray:
    """Stack of (1, sigma_x, sigma_y, sigma_z) estimates from a (..., 6, 4) array.

    Each preparation gives rho_i = 1/2 (<I> 1 + <X> sx + <Y> sy + <Z> sz); the
    identity is the average sum_i rho_i / 3 and sigma_k = rho_{+k} - rho_{-k}.
    """
    sig = np.stack(SIGMA)
    rho = 0.5 * np.einsum("...ic,cab->...iab", values, sig)
    ix = {p: CARDINALS.index(p) for p in CARDINALS}
    ident = rho.sum(axis=-3) / 3.0
    sx = rho[..., ix["+X"], :, :] - rho[..., ix["-X"], :, :]
    sy = rho[..., ix["+Y"], :, :] - rho[..., ix["-Y"], :, :]
    sz = rho[..., ix["+Z"], :, :] - rho[..., ix["-Z"], :, :]
    return np.stack([ident, sx, sy, sz], axis=-3)


def _ptm_batch(values: np.ndarray, ref_values: np.ndarray) -> np.ndarray:
    fin = _pauli_vectors(values)
    init = _pauli_vectors(ref_values)
    return 0.5 * np.real(np.einsum("...jab,...kba->...jk", init, fin))


def ptm_from_expectations(es: ExpectationSet, reference: ExpectationSet | None = None) -> PTM:
    """R_jk = 1/2 Tr[P_j^init P_k^fin] with P^init taken from ``reference``
    (the mapping-only measurement; ideal Paulis when omitted). No
    maximum-likelihood projection is applied."""
    ref = ExpectationSet.ideal() if reference is None else reference
    return PTM(_ptm_batch(es.values, ref.values))


def bootstrap_fidelity_error(es: ExpectationSet, r_ideal, reference: ExpectationSet | None = None,
                             n_resamples: int = 10_000, seed: int = 0) -> float:
    """Std of the PTM fidelity when every expectation is redrawn from a
    Gaussian of its standard error."""
    ref = ExpectationSet.ideal() if reference is None else reference
    b = r_ideal.matrix if isinstance(r_ideal, PTM) else np.asarray(r_ideal)
    rng = np.random.default_rng(seed)
    draws = es.values + es.errors * rng.standard_normal((n_resamples, 6, 4))
    r = _ptm_batch(draws, np.broadcast_to(ref.values, draws.shape))
    fid = (0.5 * np.einsum("kj,nkj->n", b, r) + 1.0) / 3.0
    return float(fid.std(ddof=1)) if n_resamples > 1 else 0.0


# ------------------------------------------------------------- simulation


def _operation_block(operation) -> Block:
    if operation is None:
        return Block(())
    if isinstance(operation, PulseSchedule):
        return Block(operation.segments, operation.frame_phase)
    return operation


def measure_cardinals(operation, params: DeviceParams, noise: NoiseConfig | None = None,
                      dim: int = 24, kind: str = "ideal", thermal_init: bool = False,
                      std: float = 0.0, t_ramp: float = T_RAMP, rtol: float = 1e-8) -> ExpectationSet:
    """Simulated tomography of ``operation`` (a Block or schedule, or None).

    For every cardinal point: Fock-qubit preparation, squeezing ramp-up,
    the operation, ramp-down, then an ideal Fock-qubit measurement in the
    frame left by any Z gates. <I> is the population kept in {|0>, |1>};
    everything else counts as leaked and is discarded.
    """
    preps = [cardinal_init(pt, params, dim, thermal_init, t_ramp=t_ramp, kind=kind) for pt in CARDINALS]
    rho0 = np.stack([pr.rho0 for pr in preps])
    sched = preps[0].schedule.append(_operation_block(operation), ramp("off", params, t_ramp))
    gen = Generator(cat_terms(params, dim, kind), (dim,))
    channels = noise.channels(params, (dim,)) if noise is not None else []
    final = evolve(sched.bind(gen), channels, rho0, [sched.duration], rtol=rtol,
                   store_states=False).final
    corr = fock_frame(-mapping_phase(params, "off", dim, kind, t_ramp), dim) @ \
        frame_rotation(-sched.frame_phase, dim)
    final = corr @ final @ corr.conj().T
    p0 = final[:, 0, 0].real
    p1 = final[:, 1, 1].real
    r01 = final[:, 0, 1]
    vals = np.stack([p0 + p1, 2 * r01.real, -2 * r01.imag, p0 - p1], axis=1)
    return ExpectationSet(vals, std)


def gate_ptm(operation, params: DeviceParams, dim: int = 36, kind: str = "ideal",
             noise: NoiseConfig | None = None, rtol: float = 1e-9) -> PTM:
    """PTM of ``operation`` restricted to the cat manifold.

    The four operators |C_i><C_j| are propagated exactly (no mapping ramps),
    returned to the original frame and projected back on the cat pair, so
    leakage shows up as a contraction of the PTM.
    """
    blk = _operation_block(operation)
    sched = PulseSchedule().append(blk)
    cb = cat_basis(params, dim, "ideal" if kind == "ideal" else "effective")
    v = cb.vectors[:, :2]
    basis = np.stack([np.outer(v[:, i], v[:, j].conj()) for i in range(2) for j in range(2)])
    gen = Generator(cat_terms(params, dim, kind), (dim,))
    channels = noise.channels(params, (dim,)) if noise is not None else []
    if sched.duration > 0:
        out = evolve(sched.bind(gen), channels, basis, [sched.duration], rtol=rtol, atol=1e-12,
                     store_states=False).final
    else:
        out = basis
    out = to_lab_frame(out, sched.frame_phase)
    blocks = np.einsum("ai,nab,bj->nij", v.conj(), out, v).reshape(2, 2, 2, 2)

    def channel(m):
        return np.einsum("ij,ijkl->kl", m, blocks)

    return PTM.from_channel(channel)


# ------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class BenchmarkResult:
    lengths: np.ndarray
    z_mean: np.ndarray
    z_sem: np.ndarray
    amplitude: float
    tau_n: float
    offset: float
    r: float
    seed: int
    details: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"tau_n": self.tau_n, "r": self.r, "amplitude": self.amplitude,
                "offset": self.offset, "seed": self.seed, **self.details}


def gate_error_from_tau(tau_n: float) -> float:
    """Per-gate error r = (1 - exp(-1/tau_n)) / 2."""
    return (1.0 - math.exp(-1.0 / tau_n)) / 2.0


_RB_ANGLES = (math.pi / 2, math.pi, -math.pi / 2)


def rb_superoperators(params: DeviceParams, noise: NoiseConfig | None = None, n_states: int = 8,
                      dim: int = 50, kind: str = "ideal", rtol: float = 1e-8):
    """Gate superoperators on the ``n_states`` highest eigenstates of the
    stabilized Hamiltonian (cat pair plus leakage levels).

    Stabilization is constant during the benchmark, so its eigenbasis is an
    exact frame for the gates; the leakage levels keep non-adiabatic
    population and its relaxation.
    """
    cb = cat_basis(params, dim, "ideal" if kind == "ideal" else "effective", n_states=n_states)
    v = cb.vectors
    gen = Generator(cat_terms(params, dim, kind), (dim,)).transformed(v)
    channels = [c.transformed(v) for c in (noise.channels(params, (dim,)) if noise else [])]
    m = n_states
    eye = np.eye(m)
    basis = np.stack([np.outer(eye[i], eye[j]) for i in range(m) for j in range(m)])
    sup = {}
    for theta in _RB_ANGLES:
        sched = PulseSchedule().append(x_gate(theta, params, kind=kind))
        out = evolve(sched.bind(gen), channels, basis, [sched.duration], rtol=rtol,
                     store_states=False).final
        sup[theta] = out.reshape(m * m, m * m).T  # column k: image of basis element k
    return sup, m


def _exact_average(sup, m, lengths, rho0):
    """Mean final state over all 2^n sequences, tracked per net quarter turn."""
    half, full = sup[_RB_ANGLES[0]], sup[_RB_ANGLES[1]]
    classes = np.zeros((4, m * m), complex)
    classes[0] = rho0.reshape(-1)
    out, n = [], 0
    for target in lengths:
        while n < target:
            classes = 0.5 * (np.roll(classes, 1, axis=0) @ half.T + np.roll(classes, 2, axis=0) @ full.T)
            n += 1
        out.append(classes.copy())
    return out


_UNDO = {1: -math.pi / 2, 2: math.pi, 3: math.pi / 2}


def random_sequence_benchmark(n_max: int, n_samples: int, params: DeviceParams,
                              noise: NoiseConfig | None = None, seed: int = 0,
                              lengths=None, n_states: int = 8, kind: str = "ideal",
                              exact: bool = False) -> BenchmarkResult:
    """Random X(pi/2)/X(pi) sequences from |C+>, closed by the undo rotation.

    <Z> is read by projecting on the cat pair; the ensemble mean over
    ``n_samples`` sequences per length is fitted with A exp(-n/tau_n) + B.
    ``exact=True`` replaces sampling by the average over all sequences.
    """
    from .decoherence import exp_fit

    sup, m = rb_superoperators(params, noise, n_states, kind=kind)
    if lengths is None:
        lengths = np.unique(np.linspace(0, n_max, 16).astype(int))
    lengths = np.asarray(lengths, int)
    rho0 = np.zeros((m, m), complex)
    rho0[0, 0] = 1.0

    def z_of(vec):
        r = vec.reshape(m, m)
        return float(np.real(r[0, 0] - r[1, 1]))

    means, sems = [], []
    if exact:
        for classes in _exact_average(sup, m, lengths, rho0):
            vec = classes[0] + sum(sup[_UNDO[q]] @ classes[q] for q in (1, 2, 3))
            means.append(z_of(vec))
            sems.append(0.0)
    else:
        rng = np.random.default_rng(seed)
        for n in lengths:
            zs = []
            for _ in range(n_samples):
                picks = rng.integers(0, 2, size=n)
                vec = rho0.reshape(-1)
                for g in picks:
                    vec = sup[_RB_ANGLES[g]] @ vec
                quarter = int((picks + 1).sum()) % 4
                if quarter:
                    vec = sup[_UNDO[quarter]] @ vec
                zs.append(z_of(vec))
            zs = np.asarray(zs)
            means.append(zs.mean())
            sems.append(zs.std(ddof=1) / math.sqrt(zs.size) if zs.size > 1 else 0.0)
    means = np.asarray(means)
    fit = exp_fit(lengths.astype(float), means)
    return BenchmarkResult(lengths, means, np.asarray(sems), fit.amplitude, fit.tau, fit.offset,
                           gate_error_from_tau(fit.tau), seed,
                           {"n_samples": 0 if exact else n_samples, "n_states": n_states,
                            "exact": exact})
