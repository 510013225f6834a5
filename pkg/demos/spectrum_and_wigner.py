"""Spectrum of the stabilized resonator and the Wigner function of a cat.

Prints the cat-to-excited transitions, checks that the cat pair is
degenerate, and shows the interference fringes of |-Y>.

    python3 demos/spectrum_and_wigner.py
"""

import numpy as np

from kerrcat import hilbert as hb
from kerrcat.model import DeviceParams, cat_basis, h_effective
from kerrcat.spectrum import diagonalize

p = DeviceParams()
rep = diagonalize(h_effective(p, 60), K=p.K, eps2=p.eps2)
print(f"alpha = {p.alpha:.3f}, |alpha|^2 = {p.nbar:.3f}")
# the detuning term lifts the exact degeneracy of the ideal Hamiltonian slightly
print(f"cat pair split by {rep.splitting:.2e} MHz")
print(f"cat -> psi_e+ {rep.gap_numeric[0]:.2f} MHz, cat -> psi_e- {rep.gap_numeric[1]:.2f} MHz")
print(f"two-photon line {rep.two_photon_line:.2f} MHz")

# |-Y> = (|C+> - i|C->)/sqrt(2): the fringes between the lobes go negative
card = cat_basis(p, 40).cardinals()
rho = hb.ket2dm(card["-Y"])
xs = np.linspace(-4.5, 4.5, 91)
w = hb.wigner_grid(rho, xs, xs)
step = xs[1] - xs[0]
print(f"W(-Y): min {w.min():.3f}, max {w.max():.3f}, integral {w.sum() * step**2:.4f}")
print(f"W(0) = {float(np.ravel(hb.wigner(rho, [0.0]))[0]):.4f} = (2/pi)<P>")
