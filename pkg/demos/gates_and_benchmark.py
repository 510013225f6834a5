"""Gate fidelities in the cat manifold and a short random-sequence benchmark.

    python3 demos/gates_and_benchmark.py
"""

import math

from kerrcat.model import DeviceParams, NoiseConfig
from kerrcat.schedule import x_gate, z_gate
from kerrcat.tomography import PTM, gate_ptm, process_fidelity, random_sequence_benchmark, rx, rz

p = DeviceParams()
fx = process_fidelity(gate_ptm(x_gate(math.pi / 2, p), p), PTM.from_unitary(rx(math.pi / 2)))
fz = process_fidelity(gate_ptm(z_gate(p), p), PTM.from_unitary(rz(math.pi / 2)))
print(f"process fidelity X(pi/2) {fx:.4f}, Z(pi/2) {fz:.6f}")

noise = NoiseConfig(n_th=0.08, kappa_phi_eff=230.0)
rb = random_sequence_benchmark(120, 40, p, noise, seed=1)
for n, z in zip(rb.lengths, rb.z_mean):
    print(f"  n = {n:4d}  <Z> = {z:+.4f}")
print(f"tau_n = {rb.tau_n:.1f} gates, error per gate r = {rb.r:.4f}")
