"""
Building the state with photons
===============================

Two coherently pumped down-conversion crystals feed a Mach-Zehnder
interferometer whose internal phase jumps at random. A beamsplitter then
leaks one path of Alice's photon to a detector.
"""

import math

import numpy as np

from seqbell import optics

# A symmetric 50-50 beamsplitter adds i on reflection.
print("50-50 beamsplitter:\n", np.round(optics.beamsplitter(0.5).matrix, 6))

# With internal phase 0 the interferometer swaps the modes like a mirror;
# with internal phase pi it lets them through.
print("\nMZ(0):\n", np.round(optics.mz_unitary(0.0).matrix, 12))
print("MZ(pi):\n", np.round(optics.mz_unitary(math.pi).matrix, 12))

# The crystals emit alpha |2>|2''> + beta |1>|1''>.
alpha_sq, p1 = 0.8, 0.7
psi = optics.pdc_pair_state(alpha_sq)
print("\nsource amplitudes:", np.round(psi.real, 6))

# Bare interferometer in the transparent setting: a relative minus sign appears,
# which the mixer's fixed phase plates remove.
bare = np.kron(np.eye(2), optics.mz_unitary(math.pi).matrix) @ psi
plated = np.kron(np.eye(2), optics.mixer_unitary(math.pi).matrix) @ psi
print("transparent branch, bare:      ", np.round(bare, 6))
print("transparent branch, with plates:", np.round(plated, 6))

rho = optics.stochastic_mz_mix(psi, p1, 1 - p1)
target, _ = optics.build_example_state(optics.ExampleStateParams(alpha_sq, p1))
print("\nlargest deviation from the target mixture:", np.max(np.abs(rho - target)))

###############################################################################
# The pre-selecting beamsplitter
# ------------------------------
# Transmittivity (beta/alpha)^2 on path 2. A photon sent to detector D ends the
# run; everything else is the filtered pair.
pre = optics.preselection_for(optics.ExampleStateParams(alpha_sq, p1))
print(f"\ntransmittivity {pre.transmittivity:.4f}")
print("three-mode unitary on (|1>, |2>, |D>):\n", np.round(pre.three_mode_unitary(), 6))
prob, rho_f = optics.beamsplitter_filter(rho, pre)
print(f"pairs surviving: {prob:.6f}")
print("deviation from the balanced Bell mixture:", np.max(np.abs(rho_f - optics.filtered_closed_form(p1))))
