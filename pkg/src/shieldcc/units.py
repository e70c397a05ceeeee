"""Physical constants and unit conversions.

All internal computation is done in Hartree atomic units (hbar = m_e = e =
a0 = 1).  Every conversion between atomic units and I/O units lives in this
table; no other module hard-codes a conversion factor.

I/O units: electric field in kV/cm, magnetic field in gauss, energies in
GHz / MHz / microkelvin, dipoles in debye, lengths in bohr, cross sections
in a0^2 or cm^2, rate coefficients in cm^3 s^-1.
"""

import math

# CODATA 2018
HARTREE_GHZ = 6.579_683_920_502e6       # E_h / h  [GHz]
HARTREE_KELVIN = 3.157_750_248_0e5      # E_h / k_B  [K]
EFIELD_AU_VCM = 5.142_206_747_63e9      # atomic unit of electric field [V/cm]
BFIELD_AU_TESLA = 2.350_517_567_58e5    # atomic unit of magnetic field [T]
DEBYE_AU = 0.393_430_307                # 1 D in e*a0
AMU_ME = 1822.888_486_209               # 1 u in electron masses
BOHR_CM = 5.291_772_109_03e-9           # a0 [cm]
VELOCITY_AU_CMS = 2.187_691_263_64e10   # atomic unit of velocity [cm/s]
MU_BOHR_AU = 0.5                        # Bohr magneton, e*hbar/(2 m_e)

GHZ_TO_AU = 1.0 / HARTREE_GHZ
MHZ_TO_AU = 1e-3 * GHZ_TO_AU
KELVIN_TO_AU = 1.0 / HARTREE_KELVIN
UK_TO_AU = 1e-6 * KELVIN_TO_AU
KVCM_TO_AU = 1e3 / EFIELD_AU_VCM
GAUSS_TO_AU = 1e-4 / BFIELD_AU_TESLA
A0SQ_TO_CM2 = BOHR_CM**2

AU_TO_GHZ = HARTREE_GHZ
AU_TO_MHZ = 1e3 * HARTREE_GHZ
AU_TO_UK = 1e6 * HARTREE_KELVIN
AU_TO_KVCM = 1.0 / KVCM_TO_AU
AU_TO_GAUSS = 1.0 / GAUSS_TO_AU
AU_TO_DEBYE = 1.0 / DEBYE_AU


def wavevector(e_coll_au: float, mu_red_au: float) -> float:
    """Asymptotic wave vector k = sqrt(2 mu E) / hbar in a0^-1."""
    return math.sqrt(2.0 * mu_red_au * e_coll_au)


def collision_velocity_cms(e_coll_au: float, mu_red_au: float) -> float:
    """Relative velocity v = sqrt(2 E / mu) in cm/s."""
    return math.sqrt(2.0 * e_coll_au / mu_red_au) * VELOCITY_AU_CMS


def rate_coefficient_cm3s(sigma_a0sq: float, e_coll_au: float,
                          mu_red_au: float) -> float:
    """Rate coefficient k = v * sigma in cm^3 s^-1."""
    return collision_velocity_cms(e_coll_au, mu_red_au) * sigma_a0sq * A0SQ_TO_CM2
