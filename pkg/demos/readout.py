"""Cat-quadrature readout: Q-switch calibration, then QND-ness of the
stabilized measurement.

The QND simulation couples the storage to a readout cavity and takes about
five minutes on one core.

    python3 demos/readout.py
"""

import numpy as np

from kerrcat.model import DeviceParams, NoiseConfig
from kerrcat.readout import fit_gcr, qnd_metric, qswitch_simulation

p = DeviceParams()
t, n = qswitch_simulation(p)
noisy = n + 0.02 * np.random.default_rng(0).standard_normal(n.size)
fit = fit_gcr(t, noisy)
print(f"Q-switch fit: g_cr = {fit.g:.3f} MHz (true {p.g_cr})")
print(f"QND-ness, cavity loss only: {qnd_metric(p, NoiseConfig.cavity_only()):.3f}")
