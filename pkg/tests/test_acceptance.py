"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured numbers before
asserting, so ``pytest -v -s`` (or the captured output on failure) shows the
whole scorecard.
"""

import math
import time

import numpy as np
import pytest

from kerrcat import hilbert as hb
from kerrcat.decoherence import bitflip_time_analytic, coherence_sweep
from kerrcat.dynamics import CollapseChannel, evolve, oracle_evolve
from kerrcat.experiments import rabi_oscillation
from kerrcat.model import DeviceParams, NoiseConfig, cat_basis, h_cat, h_effective
from kerrcat.readout import fit_gcr, qnd_metric, qswitch_decay
from kerrcat.schedule import x_gate, z_gate
from kerrcat.spectrum import diagonalize
from kerrcat.tomography import (PTM, ExpectationSet, bootstrap_fidelity_error, gate_ptm, process_fidelity,
                                ptm_fidelity, random_sequence_benchmark, rx, rz)
from kerrcat.units import TWO_PI

P = DeviceParams()


@pytest.fixture
def report(capsys):
    def emit(n, checks, elapsed, budget=None):
        ok = all(c[1] for c in checks) and (budget is None or elapsed < budget)
        parts = [f"{name}={'ok' if good else 'BAD'} ({detail})" for name, good, detail in checks]
        limit = f" / {budget:.0f} s" if budget is not None else ""
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: " + "; ".join(parts)
                  + f"; runtime {elapsed:.1f} s{limit}")
        return ok
    return emit


def within(x, target, tol):
    return abs(x - target) <= tol


def test_criterion_1_spectrum_lines(report):
    t0 = time.perf_counter()
    rep = diagonalize(h_effective(P, 60), K=P.K, eps2=P.eps2)
    up, um = rep.gap_numeric
    two = rep.two_photon_line
    dt = time.perf_counter() - t0
    assert report(1, [
        ("e+ line", within(up, -48.9, 1.0), f"{up:.2f} MHz vs -48.9 +- 1"),
        ("e- line", within(um, -65.8, 1.0), f"{um:.2f} MHz vs -65.8 +- 1"),
        ("two-photon", within(two, -53.2, 0.5), f"{two:.2f} MHz vs -53.2 +- 0.5"),
    ], dt, 5.0)


def test_criterion_2_degeneracy_and_factorization(report):
    t0 = time.perf_counter()
    checks = []
    for ratio in (2.0, 2.65, 4.0):
        eps2 = ratio * P.K
        dim = 50
        h = h_cat(P.K, eps2, dim)
        rep = diagonalize(h, K=P.K, eps2=eps2)
        e0 = TWO_PI * eps2**2 / P.K
        res = max(np.linalg.norm((h - e0 * np.eye(dim)) @ hb.cat_state(math.sqrt(ratio), s, dim))
                  / np.linalg.norm(h, 2) for s in (1, -1))
        checks.append((f"split@{ratio}", rep.splitting < 1e-6 * P.K, f"{rep.splitting:.1e} MHz"))
        checks.append((f"residual@{ratio}", res < 1e-8, f"{res:.1e}"))
    assert report(2, checks, time.perf_counter() - t0, 5.0)


def test_criterion_3_rabi(report):
    t0 = time.perf_counter()
    fig2 = P.replace(delta_as=0.0)
    fock = rabi_oscillation(fig2, eps2=0.0, t_drive=3.0, dim=8)
    aligned = rabi_oscillation(fig2, eps2=15.5)
    flipped = rabi_oscillation(fig2, eps2=15.5, arg_eps_x=math.pi)
    blocked = rabi_oscillation(fig2, eps2=15.5, arg_eps_x=math.pi / 2)
    f = aligned.frequency
    est = aligned.expected_frequency(P.eps_x)
    fringe0, fringe90 = aligned.fringe_amplitude(f), blocked.fringe_amplitude(f)
    dt = time.perf_counter() - t0
    assert report(3, [
        ("fock", abs(fock.frequency / 1.48 - 1) < 0.01, f"{fock.frequency:.4f} MHz vs 1.48"),
        ("nbar", within(aligned.nbar, 2.2, 0.1), f"{aligned.nbar:.3f} vs 2.2 +- 0.1"),
        ("cat rabi", abs(f / est - 1) < 0.05, f"{f:.3f} vs 4 eps_x sqrt(n) = {est:.3f} MHz"),
        ("pi-periodic", abs(flipped.frequency / f - 1) < 1e-3, f"{flipped.frequency:.4f} MHz"),
        ("pi/2 suppression", fringe90 < 0.05 * fringe0, f"fringe {fringe90:.1e} vs {fringe0:.3f}"),
    ], dt, 120.0)


def test_criterion_4_gates(report):
    t0 = time.perf_counter()
    fx = process_fidelity(gate_ptm(x_gate(math.pi / 2, P), P), PTM.from_unitary(rx(math.pi / 2)))
    fz = process_fidelity(gate_ptm(z_gate(P), P), PTM.from_unitary(rz(math.pi / 2)))
    rb = random_sequence_benchmark(120, 40, P, NoiseConfig(n_th=0.08, kappa_phi_eff=230.0), seed=1)
    dt = time.perf_counter() - t0
    assert report(4, [
        ("X(pi/2)", fx >= 0.99, f"F_proc {fx:.4f}"),
        ("Z(pi/2)", fz >= 0.99, f"F_proc {fz:.6f}"),
        ("rb", 0.008 <= rb.r <= 0.020, f"r = {rb.r:.4f} (tau_n {rb.tau_n:.1f})"),
    ], dt, 600.0)


def test_criterion_5_tomography_math(report):
    t0 = time.perf_counter()
    r = PTM.from_unitary(rx(math.pi / 2))
    self_f = ptm_fidelity(r, r)
    depol = ptm_fidelity(np.diag([1.0, 0, 0, 0]), np.eye(4))
    std = bootstrap_fidelity_error(ExpectationSet.ideal(rx(math.pi / 2)).with_errors(0.006), r, seed=0)
    assert report(5, [
        ("self", self_f == 1.0, f"{self_f!r}"),
        ("depolarizing", depol == 0.5, f"{depol!r}"),
        ("bootstrap", std < 0.005, f"std {std:.4f}"),
    ], time.perf_counter() - t0)


@pytest.mark.slow
def test_criterion_6_readout(report):
    t0 = time.perf_counter()
    t = np.linspace(0, 3, 301)
    clean = qswitch_decay(t, 1.7, 1.9)
    g_clean = fit_gcr(t, clean).g
    g_noisy = fit_gcr(t, clean + 0.02 * np.random.default_rng(0).standard_normal(t.size)).g
    q_cav = qnd_metric(P, NoiseConfig.cavity_only())
    q_full = qnd_metric(P, NoiseConfig(n_th=0.08, kappa_phi_eff=230.0))
    dt = time.perf_counter() - t0
    assert report(6, [
        ("g_cr", abs(g_clean / 1.7 - 1) < 0.02 and abs(g_noisy / 1.7 - 1) < 0.02,
         f"{g_clean:.4f} / {g_noisy:.4f} MHz (noiseless / sigma 0.02)"),
        ("Q cavity", within(q_cav, 0.93, 0.01), f"{q_cav:.4f} vs 0.93 +- 0.01"),
        ("Q full", within(q_full, 0.90, 0.01), f"{q_full:.4f} vs 0.90 +- 0.01"),
    ], dt, 900.0)


def test_criterion_7_decoherence(report):
    t0 = time.perf_counter()
    hot = NoiseConfig(n_th=0.12, kappa_phi_eff=0.0)
    warm = NoiseConfig(n_th=0.08, kappa_phi_eff=230.0)
    # bit flips randomize Z, phase flips randomize X
    bf_hot = coherence_sweep("Z", P, hot)
    pf_hot = coherence_sweep("X", P, hot)
    bf_warm = coherence_sweep("Z", P, warm)
    pf_warm = coherence_sweep("X", P, warm)
    bit_hot = bf_hot.tau
    leak = bf_hot.leakage_tau
    a0 = bitflip_time_analytic(2.6, 15.5, 0.0)
    a4 = bitflip_time_analytic(2.6, 15.5, 0.04)
    closed = (abs(a0 - 15.5 / 5.2) < 1e-6 and abs(a4 - 15.5 / (5.2 * 1.08)) < 1e-6
              and round(a0, 2) == 2.98 and round(a4, 2) == 2.76)
    dt = time.perf_counter() - t0
    assert report(7, [
        ("bit-flip 0.12", abs(bit_hot / 2.4 - 1) <= 0.10, f"{bit_hot:.3f} us vs 2.4 +- 10%"),
        ("phase-flip 0.12", abs(pf_hot.tau / 130 - 1) <= 0.15, f"{pf_hot.tau:.1f} us vs 130 +- 15%"),
        ("leakage 0.12", abs(leak / 16 - 1) <= 0.20, f"{leak:.2f} us vs 16 +- 20%"),
        ("bit-flip 0.08", abs(bf_warm.tau / 2.6 - 1) <= 0.10, f"{bf_warm.tau:.3f} us vs 2.6 +- 10%"),
        ("phase-flip 0.08", abs(pf_warm.tau / 110 - 1) <= 0.15, f"{pf_warm.tau:.1f} us vs 110 +- 15%"),
        ("analytic", closed, f"{a0:.6f} / {a4:.6f} us"),
    ], dt, 1200.0)


def _random_instance(seed, dim):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 2.0 * (m + m.conj().T) / math.sqrt(dim)
    chans = [CollapseChannel((rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(dim),
                             float(rng.uniform(0.1, 1.0))) for _ in range(2)]
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return h, chans, rho / np.trace(rho).real


def test_criterion_8_property_suites(report):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        for dim in (4, 8, 12):
            h, ch, rho = _random_instance(seed, dim)
            worst = max(worst, hb.trace_distance(evolve(h, ch, rho, [1.0]).final,
                                                 oracle_evolve(h, ch, rho, 1.0)))
    # 200 us with loss and gain at the default cat size
    dim = 12
    a = hb.annihilation(dim)
    noisy = [CollapseChannel(a, 1.04 / 15.5), CollapseChannel(a.conj().T, 0.04 / 15.5)]
    inv = evolve(h_cat(1.0, 2.65, dim), noisy, hb.cat_state(P.alpha, 1, dim),
                 np.linspace(0, 200, 5)).invariant_report()
    inv_ok = inv["trace_error"] < 1e-7 and inv["hermiticity"] < 1e-9 and inv["min_eigenvalue"] > -1e-7
    pdim = 30
    par = evolve(h_cat(P.K, P.eps2, pdim), [CollapseChannel(hb.number(pdim), 0.5)],
                 hb.cat_state(P.alpha, 1, pdim), np.linspace(0, 1, 6),
                 observables={"P": hb.parity(pdim)}, store_states=False)
    par_dev = float(np.abs(par.expectations["P"] - 1).max())
    c20 = coherence_sweep("Y", P, NoiseConfig(n_th=0.08), t_max=5.0, n_points=11, dim=20)
    c40 = coherence_sweep("Y", P, NoiseConfig(n_th=0.08), t_max=5.0, n_points=11, dim=40)
    conv = max(float(np.abs(c20.expectations[k] - c40.expectations[k]).max()) for k in c20.expectations)
    rho = hb.ket2dm(cat_basis(P, 40).c_minus)
    step = 0.05
    xs = np.arange(-(P.alpha + 4), P.alpha + 4 + step / 2, step)
    norm = float(hb.wigner_grid(rho, xs, xs).sum() * step * step)
    w0 = float(np.ravel(hb.wigner(rho, [0.0]))[0])
    w0_ref = 2 / math.pi * hb.expect(hb.parity(40), rho).real
    assert report(8, [
        ("oracle", worst < 1e-6, f"max trace distance {worst:.1e}"),
        ("invariants", inv_ok, f"trace {inv['trace_error']:.1e}, herm {inv['hermiticity']:.1e}, "
                               f"min eig {inv['min_eigenvalue']:.1e}"),
        ("parity", par_dev < 1e-6, f"{par_dev:.1e}"),
        ("truncation", conv < 1e-6, f"dim 20 vs 40: {conv:.1e}"),
        ("wigner norm", abs(norm - 1) < 1e-3, f"{norm:.6f}"),
        ("W(0)", abs(w0 - w0_ref) < 1e-10, f"{w0:.6f} vs {w0_ref:.6f}"),
    ], time.perf_counter() - t0)
