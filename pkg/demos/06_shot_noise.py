"""
Photon shot-noise limit
=======================

Lorentzian line of 700 kHz FWHM with 1.6 % effective contrast, probed at
1042 nm. The detected power sets the photon rate.
"""

from nvsinglet.magnetometry import photon_rate_from_power, shot_noise_sensitivity

for mw in (5, 10, 15, 20):
    rate = photon_rate_from_power(mw * 1e-3)
    eta = shot_noise_sensitivity(rate, 0.016, 700e3)
    print(f"{mw:3d} mW  R = {rate:.2e}/s  ->  {eta * 1e12:.2f} pT/rtHz")
