"""Physical observables from S matrices.

Cross sections follow the identical-boson conventions (statistical factor
g = 2): elastic from |delta - S|^2 over the channels of the incoming pair
level, state-to-state inelastic from |S|^2 into each final level,
short-range loss from the unitarity deficit of the absorbing boundary,
and total loss either as their sum or directly from the diagonal-level
flux deficit (both are computed and cross-checked).  Rate coefficients
are k = v sigma with v = sqrt(2 E_coll / mu).
"""

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import units

G_IDENTICAL_BOSONS = 2.0
BORN_SUM_TOTAL = 2.234          # sigma_el,L>0 = 2.234 D^2 at zero energy
BORN_SUM_MTOT0 = 1.396          # part arising from M_tot = 0


@dataclass(frozen=True)
class DipoleLength:
    """Dipolar length scale D = d1 d2 mu / (4 pi eps0 hbar^2), in a0."""

    d1: float
    d2: float
    mu_red: float

    def __post_init__(self):
        if self.d1 * self.d2 < 0:
            raise ValueError("dipole product must be non-negative")

    @property
    def value(self) -> float:
        return self.d1 * self.d2 * self.mu_red


def born_elastic(dipole_length) -> tuple:
    """Zero-energy Born elastic sum (total, M_tot = 0 part) in a0^2."""
    d = dipole_length.value if isinstance(dipole_length, DipoleLength) \
        else float(dipole_length)
    return BORN_SUM_TOTAL * d * d, BORN_SUM_MTOT0 * d * d


@dataclass
class ObservableSet:
    """Cross sections (a0^2) and rate coefficients for one condition point."""

    e_coll: float
    field: float
    b_field: float
    k0: float
    mu_red: float
    m_tot_list: list
    incoming_level: tuple
    sigma_el: float
    sigma_el_00: float          # diagonal s-wave contribution
    sigma_inel_total: float
    sigma_short: float
    sigma_loss: float
    state_to_state: dict
    partial: dict               # L_in -> {el, inel, short, loss}
    a_complex: complex | None = None

    @property
    def sigma_el_higher(self) -> float:
        """Elastic cross section excluding the diagonal s-wave part."""
        return self.sigma_el - self.sigma_el_00

    def rate(self, sigma_a0sq: float) -> float:
        return units.rate_coefficient_cm3s(sigma_a0sq, self.e_coll,
                                           self.mu_red)

    @property
    def k_el(self) -> float:
        return self.rate(self.sigma_el)

    @property
    def k_inel(self) -> float:
        return self.rate(self.sigma_inel_total)

    @property
    def k_short(self) -> float:
        return self.rate(self.sigma_short)

    @property
    def k_loss(self) -> float:
        return self.rate(self.sigma_loss)


def cross_sections(solutions, g: float = G_IDENTICAL_BOSONS) -> ObservableSet:
    """Accumulate cross sections over solved (M_tot, parity) blocks.

    All solutions must share conditions and incoming level; the incoming
    pair level must be open in each block that contains it.
    """
    if not solutions:
        raise ValueError("no scattering solutions given")
    ref = solutions[0]
    for sol in solutions[1:]:
        same = (sol.e_coll == ref.e_coll and sol.field == ref.field
                and sol.b_field == ref.b_field
                and sol.incoming_level == ref.incoming_level)
        if not same:
            raise ValueError("solutions were computed at different conditions")

    k0 = None
    sig_el = 0.0
    sig_short = 0.0
    sig_loss = 0.0
    s2s = {}
    partial = {}
    s00 = None

    for sol in solutions:
        inc = sol.incoming_indices()
        if not inc:
            continue
        k0 = float(sol.k_open[inc[0]])
        pref = g * math.pi / k0 ** 2
        inc_set = set(inc)
        for i in inc:
            l_in = sol.channels[i].L
            row = sol.s[i]
            part = partial.setdefault(
                l_in, {"el": 0.0, "inel": 0.0, "short": 0.0, "loss": 0.0})
            # elastic: outgoing within the incoming level
            el = sum(abs((1.0 if j == i else 0.0) - row[j]) ** 2
                     for j in inc)
            # state-to-state inelastic
            level_flux = {}
            for j, cj in enumerate(sol.channels):
                if j in inc_set:
                    continue
                level_flux[cj.pair_level] = (level_flux.get(cj.pair_level, 0.0)
                                             + abs(row[j]) ** 2)
            short = 1.0 - float(np.sum(np.abs(row) ** 2))
            loss = 1.0 - sum(abs(row[j]) ** 2 for j in inc)
            sig_el += pref * el
            sig_short += pref * short
            sig_loss += pref * loss
            part["el"] += pref * el
            part["short"] += pref * short
            part["loss"] += pref * loss
            part["inel"] += pref * sum(level_flux.values())
            for lev, flux in level_flux.items():
                s2s[lev] = s2s.get(lev, 0.0) + pref * flux
            if sol.m_tot == 0 and l_in == 0:
                s00 = complex(sol.s[i, i])
    if k0 is None:
        raise ValueError("incoming pair level is closed in every block")

    sig_inel = sum(s2s.values())
    ident = abs(sig_loss - (sig_inel + sig_short))
    # the two loss routes agree algebraically; allow only float rounding
    # of the unitarity sums on top of the 1e-10 relative contract
    pref = g * math.pi / k0 ** 2
    rows = sum(len(sol.incoming_indices()) for sol in solutions)
    tol = 1e-10 * sig_loss + 1e3 * np.finfo(float).eps * pref * max(rows, 1)
    if ident > tol:
        raise ValueError(
            f"loss-identity violation: sigma_inel + sigma_short deviates "
            f"from the direct total by {ident:.3e} a0^2")

    sig_el_00 = 0.0
    a_cmplx = None
    if s00 is not None:
        sig_el_00 = g * math.pi / k0 ** 2 * abs(1.0 - s00) ** 2
        a_cmplx = scattering_length(s00, k0)

    return ObservableSet(
        e_coll=ref.e_coll, field=ref.field, b_field=ref.b_field, k0=k0,
        mu_red=_mu_from(solutions[0]),
        m_tot_list=sorted({s.m_tot for s in solutions}),
        incoming_level=ref.incoming_level,
        sigma_el=sig_el, sigma_el_00=sig_el_00,
        sigma_inel_total=sig_inel, sigma_short=sig_short,
        sigma_loss=sig_loss, state_to_state=s2s, partial=partial,
        a_complex=a_cmplx)


def _mu_from(sol):
    # k = sqrt(2 mu E) -> mu = k^2 / (2 E)
    inc = sol.incoming_indices()
    k0 = sol.k_open[inc[0]]
    return float(k0 ** 2 / (2.0 * sol.e_coll))


def rate_coefficient(sigma_a0sq, e_coll, mu_red) -> float:
    """k = v sigma in cm^3 s^-1 for sigma in a0^2 (all inputs au)."""
    if e_coll <= 0:
        raise ValueError("collision energy must be positive")
    return units.rate_coefficient_cm3s(sigma_a0sq, e_coll, mu_red)


def scattering_length(s00: complex, k0: float) -> complex:
    """Energy-dependent a(k0) = alpha - i beta from the diagonal s-wave S.

    a = (1/ik0) (1 - S00) / (1 + S00); beta = -Im a >= 0 for any
    sub-unitary S00.
    """
    if s00 == -1.0:
        raise ZeroDivisionError("S00 = -1: scattering length pole")
    a = (1.0 - s00) / (1j * k0 * (1.0 + s00))
    if -a.imag < -1e-8 * max(1.0, abs(a)):
        warnings.warn(f"negative loss part beta = {-a.imag:.3e} a0; "
                      "S00 outside the unit disc", stacklevel=2)
    return a


def swave_cross_sections(a: complex, k0: float,
                         g: float = G_IDENTICAL_BOSONS) -> tuple:
    """(sigma_el_00, sigma_inel_00) from a complex scattering length.

    The inelastic formula counts every non-diagonal exit channel, so it
    includes L-changing collisions that are physically elastic; with
    strong shielding it can exceed true loss by orders of magnitude.
    """
    if k0 < 0:
        raise ValueError("k0 must be non-negative")
    alpha, beta = a.real, -a.imag
    asq = alpha * alpha + beta * beta
    den = 1.0 + k0 * k0 * asq + 2.0 * k0 * beta
    sig_el = 4.0 * math.pi * g * asq / den
    if k0 == 0.0:
        sig_inel = math.inf if beta > 0 else 0.0
    else:
        sig_inel = 4.0 * math.pi * g * beta / (k0 * den)
    return sig_el, sig_inel


@dataclass
class BetaFit:
    """Low-energy decomposition beta(k0) = beta_loss + slope * k0."""

    beta_loss: float
    slope: float
    slope_over_born: float      # slope / (D^2 / 45)
    residual: float
    flags: list = dc_field(default_factory=list)


def beta_decomposition(k0_samples, beta_samples, dipole_length) -> BetaFit:
    """Linear fit of beta(k0); the Born value of the slope is D^2/45."""
    k0s = np.asarray(k0_samples, dtype=float)
    betas = np.asarray(beta_samples, dtype=float)
    if len(k0s) < 3:
        raise ValueError("need at least three samples in the linear regime")
    flags = []
    order = np.argsort(k0s)
    k0s, betas = k0s[order], betas[order]
    if np.any(np.diff(betas) <= 0):
        flags.append("beta samples not monotonically increasing with k0")
    coeff, res = np.polynomial.polynomial.polyfit(k0s, betas, 1, full=True)
    beta_loss, slope = float(coeff[0]), float(coeff[1])
    rms = math.sqrt(res[0][0] / len(k0s)) if len(res[0]) else 0.0
    span = betas.max() - betas.min()
    if span > 0 and rms > 0.02 * span:
        flags.append(f"fit residual {rms:.3e} a0 suggests curvature "
                     "beyond the linear regime")
    if beta_loss < 0:
        if beta_loss < -5.0 * max(rms, 1e-300):
            flags.append(f"fitted beta_loss = {beta_loss:.3e} a0 is "
                         "significantly negative")
        beta_loss = max(beta_loss, 0.0)
    d = dipole_length.value if isinstance(dipole_length, DipoleLength) \
        else float(dipole_length)
    born_slope = d * d / 45.0
    ratio = slope / born_slope if born_slope else math.inf
    return BetaFit(beta_loss=beta_loss, slope=slope, slope_over_born=ratio,
                   residual=rms, flags=flags)
