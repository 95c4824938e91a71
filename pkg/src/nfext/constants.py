import math

C = 299_792_458.0  # m/s
ETA = 376.73  # free-space impedance, ohm


def wavelength(fc):
    return C / fc


def wavenumber(fc):
    return 2.0 * math.pi * fc / C
