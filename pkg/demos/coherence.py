"""Bit-flip and phase-flip times of the stabilized cat under thermal noise.

Bit flips (decay of <Z>) are limited by single-photon loss at about
T1 / (2 nbar (1 + 2 n_th)); phase flips (decay of <X>) are exponentially
suppressed in nbar. Takes a few minutes.

    python3 demos/coherence.py
"""

from kerrcat.decoherence import bitflip_time_analytic, coherence_sweep
from kerrcat.model import DeviceParams, NoiseConfig

p = DeviceParams()
for n_th, kphi in ((0.12, 0.0), (0.08, 230.0)):
    noise = NoiseConfig(n_th=n_th, kappa_phi_eff=kphi)
    z = coherence_sweep("Z", p, noise)
    x = coherence_sweep("X", p, noise)
    print(f"n_th = {n_th}, kappa_phi = {kphi:.0f} Hz: bit flip {z.tau:.2f} us, "
          f"phase flip {x.tau:.0f} us, leakage rise {z.leakage_tau:.1f} us")
for n_th in (0.0, 0.04):
    print(f"closed form at nbar = 2.6, n_th = {n_th}: {bitflip_time_analytic(2.6, 15.5, n_th):.3f} us")
