"""Physical constants and unit conversions.

Everything inside the package is angular frequency (rad/s) and seconds.
Values that cross the user boundary (configs, CSV, reports) are ordinary
frequencies in MHz/kHz and are converted here and nowhere else.
"""

import math

TWO_PI = 2.0 * math.pi

# Gyromagnetic ratios in rad/s/T (standard NMR tables, gamma/2pi in MHz/T).
GAMMA_C13 = TWO_PI * 10.7084e6
GAMMA_H1 = TWO_PI * 42.577e6


def mhz_to_rad(f_mhz):
    """Ordinary frequency in MHz -> angular frequency in rad/s."""
    return TWO_PI * 1e6 * f_mhz


def rad_to_mhz(omega):
    return omega / (TWO_PI * 1e6)


def khz_to_rad(f_khz):
    return TWO_PI * 1e3 * f_khz


def rad_to_khz(omega):
    return omega / (TWO_PI * 1e3)
