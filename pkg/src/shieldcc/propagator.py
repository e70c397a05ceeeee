"""Log-derivative propagation of the coupled radial equations.

The short-range boundary is fully absorbing: at R_absorb the solution is
a purely incoming WKB wave in the local adiabatic frame, imposed through a
complex log-derivative matrix.  A single complex propagation of
Y = psi' psi^-1 is mathematically equivalent to co-propagating two real
solutions and forming traveling waves, and halves the bookkeeping.  The
resulting S matrix is sub-unitary; the unitarity deficit per incoming
channel measures flux lost at short range.  With ``absorbing=False`` a
hard wall is imposed instead and S is unitary to propagation accuracy.

The propagator itself is the constant-reference sector method: within
each sector the diagonal of the coupling matrix at the midpoint is
treated exactly (so locally open channels may oscillate freely) and the
residual coupling enters through Simpson-weighted corrections, giving a
global O(h^4) scheme that tolerates geometrically growing steps at long
range.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from . import units
from .interaction import CouplingModel, build_coupling_model
from .monomer import DressedRotorBasis
from .pair_basis import (BasisSpec, build_pair_basis, monomer_table,
                         partition_classes)

WALL_LOG_DERIVATIVE = 1e14


@dataclass(frozen=True)
class PropagationConfig:
    """Radial grid and boundary-condition settings (lengths in a0)."""

    r_absorb: float = 50.0
    r_mid: float = 300.0
    r_max: float = 1e4
    inner_step: float = 0.02
    step_growth: float = 1.02
    wavelength_fraction: float = 0.1
    absorbing: bool = True
    match_tolerance: float = 3e-3
    auto_extend_r_max: bool = True
    collision_energy: float = 10.0 * units.UK_TO_AU

    def __post_init__(self):
        if not (0 < self.r_absorb < self.r_mid < self.r_max):
            raise ValueError("need 0 < r_absorb < r_mid < r_max")
        if self.inner_step <= 0 or self.step_growth < 1.0:
            raise ValueError("steps must be positive and growth >= 1")


@dataclass
class ScatteringSolution:
    """Non-unitary S matrix of one (M_tot, parity) block.

    ``s`` is indexed [incoming, outgoing] over the open channels listed in
    ``channels``; ``k_open`` are the asymptotic wave vectors.
    """

    m_tot: int
    parity: str
    e_coll: float
    field: float
    b_field: float
    incoming_level: tuple
    channels: list
    k_open: np.ndarray
    s: np.ndarray
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def unitarity_deficit(self) -> np.ndarray:
        return 1.0 - np.sum(np.abs(self.s) ** 2, axis=1)

    def incoming_indices(self) -> list:
        return [i for i, c in enumerate(self.channels)
                if c.pair_level == self.incoming_level]


def _reference_propagators(mref, h):
    """Half-sector log-derivative propagators of the diagonal reference."""
    y1 = np.empty_like(mref)
    y2 = np.empty_like(mref)
    small = np.abs(mref) * h * h < 1e-10
    y1[small] = 1.0 / h + mref[small] * h / 3.0
    y2[small] = 1.0 / h - mref[small] * h / 6.0
    closed = (~small) & (mref > 0)
    p = np.sqrt(mref[closed])
    ph = p * h
    with np.errstate(over="ignore"):
        y1[closed] = np.where(ph > 36.0, p, p / np.tanh(ph))
        y2[closed] = np.where(ph > 36.0, 0.0, p / np.sinh(np.minimum(ph, 700.0)))
    open_ = (~small) & (mref < 0)
    p = np.sqrt(-mref[open_])
    ph = p * h
    y1[open_] = p / np.tan(ph)
    y2[open_] = p / np.sin(ph)
    return y1, y2


def _sector_step(y, m_a, m_c, m_b, h):
    """Propagate Y across one sector [a, b] with midpoint c, half-width h."""
    mref = np.diag(m_c).copy()
    y1, y2 = _reference_propagators(mref, h)
    n = len(mref)
    dm_c = m_c - np.diag(mref)
    q_a = (h / 3.0) * (m_a - np.diag(mref))
    q_b = (h / 3.0) * (m_b - np.diag(mref))
    q_c = (4.0 / h) * (np.eye(n) - np.linalg.inv(np.eye(n)
                                                 + (h * h / 6.0) * dm_c))
    y1d = np.diag(y1)
    rhs = np.diag(y2).astype(complex)
    y = (y1d + q_c) - y2[:, None] * np.linalg.solve(y + y1d + q_a, rhs)
    y = (y1d + q_b) - y2[:, None] * np.linalg.solve(y + y1d + q_c, rhs)
    return y


def absorbing_initial_condition(w_mat, w_deriv, e_tot, mu_red,
                                absorbing=True) -> np.ndarray:
    """Log-derivative matrix at the short-range boundary.

    Absorbing: diagonalize W, impose per-channel WKB waves that are purely
    incoming where locally open (y = -ik - k'/2k) and decaying into the
    wall where locally closed.  Non-absorbing: a hard wall (large positive
    real log-derivative), which yields a unitary S matrix.
    """
    n = w_mat.shape[0]
    if not np.all(np.isfinite(w_mat)):
        raise ValueError("non-finite W at the boundary")
    if not absorbing:
        return (WALL_LOG_DERIVATIVE + 0.0j) * np.eye(n)
    evals, vecs = np.linalg.eigh(w_mat)
    dw = np.einsum("ji,jk,ki->i", vecs, w_deriv, vecs)
    y = np.empty(n, dtype=complex)
    for j in range(n):
        if e_tot > evals[j]:
            k = math.sqrt(2.0 * mu_red * (e_tot - evals[j]))
            kp = -mu_red * dw[j] / k
            y[j] = -1j * k - kp / (2.0 * k)
        else:
            kap = math.sqrt(2.0 * mu_red * (evals[j] - e_tot))
            kapp = mu_red * dw[j] / kap
            y[j] = kap - kapp / (2.0 * kap)
    return (vecs * y) @ vecs.T


def propagate(y, w_of_r, e_tot, mu_red, r_start, r_end, *, first_width,
              growth=1.0, wavelength_fraction=0.1, w_deriv=None):
    """March Y from r_start to r_end; returns (Y, sectors used).

    Sector widths grow geometrically by ``growth`` but never exceed
    ``wavelength_fraction`` of the shortest local wavelength, so locally
    open channels stay resolved.  ``w_of_r`` maps R to the coupling
    matrix W(R) (thresholds relative to E = 0 of e_tot).
    """
    if r_end <= r_start:
        raise ValueError("r_end must exceed r_start")
    two_mu = 2.0 * mu_red

    def m_of(r):
        m = two_mu * w_of_r(r)
        idx = np.diag_indices_from(m)
        m[idx] -= two_mu * e_tot
        return m

    r = r_start
    m_left = m_of(r)
    width = first_width
    n_sectors = 0
    while r < r_end - 1e-12:
        kin = e_tot - np.min(np.diag(m_left)) / two_mu
        if kin > 0:
            kmax = math.sqrt(two_mu * kin)
            cap = wavelength_fraction * 2.0 * math.pi / kmax
            width = min(width, cap)
        width = min(width, r_end - r)
        h = 0.5 * width
        m_mid = m_of(r + h)
        m_right = m_of(r + width)
        y = _sector_step(y, m_left, m_mid, m_right, h)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"log-derivative became non-finite "
                                     f"near R = {r:.2f} a0")
        r += width
        m_left = m_right
        width *= growth
        n_sectors += 1
    return y, n_sectors


def _decaying_log_derivative(kappa, l_val, r):
    """d/dR log of the exponentially decaying free solution x k_L(x)."""
    x = kappa * r
    num = 0.0
    den = 0.0
    fac = 1.0
    for j in range(l_val + 1):
        if j > 0:
            fac *= (l_val + j) * (l_val - j + 1) / (2.0 * j)
        term = fac * x ** (-j)
        den += term
        num -= j * term / x
    return kappa * (-1.0 + num / den)


def match_asymptotic(y, model: CouplingModel, e_tot, r_max,
                     match_tolerance=3e-3):
    """Extract the open-open S matrix by matching to free diagonal solutions.

    Open channels are matched to Riccati-Bessel traveling waves with their
    own L and k; closed channels carry decaying exponentials.  Returns
    (s[in, out], open channel indices, k_open, diagnostics).
    """
    thr = model.thresholds
    w_end = model.w(r_max)
    open_mask = e_tot > thr
    if not open_mask.any():
        raise ValueError("all channels closed at this energy")
    off = w_end - np.diag(np.diag(w_end))
    min_gap = np.min(e_tot - thr[open_mask])
    residual = np.max(np.abs(off)) / min_gap
    if residual > match_tolerance:
        raise ValueError(
            f"asymptotic coupling residual {residual:.2e} exceeds matching "
            f"tolerance {match_tolerance:.1e} at R_max = {r_max:.0f} a0; "
            "increase r_max")

    n = len(thr)
    l_arr = np.array([c.L for c in model.channels])
    open_idx = np.where(open_mask)[0]
    n_open = len(open_idx)
    g = np.zeros(n, dtype=complex)
    gp = np.zeros(n, dtype=complex)
    e_in = np.zeros((n, n_open), dtype=complex)
    e_in_p = np.zeros((n, n_open), dtype=complex)
    k_open = np.zeros(n_open)

    for col, i in enumerate(open_idx):
        k = math.sqrt(2.0 * model.mu_red * (e_tot - thr[i]))
        k_open[col] = k
        x = k * r_max
        l_val = int(l_arr[i])
        j, jp = spherical_jn(l_val, x), spherical_jn(l_val, x, derivative=True)
        yb, ybp = spherical_yn(l_val, x), spherical_yn(l_val, x, derivative=True)
        s_f, c_f = x * j, -x * yb
        s_d, c_d = k * (j + x * jp), -k * (yb + x * ybp)
        rt = 1.0 / math.sqrt(k)
        g[i] = (c_f + 1j * s_f) * rt
        gp[i] = (c_d + 1j * s_d) * rt
        e_in[i, col] = (c_f - 1j * s_f) * rt
        e_in_p[i, col] = (c_d - 1j * s_d) * rt

    for i in np.where(~open_mask)[0]:
        kappa = math.sqrt(2.0 * model.mu_red * (thr[i] - e_tot))
        g[i] = 1.0
        gp[i] = _decaying_log_derivative(kappa, int(l_arr[i]), r_max)

    lhs = y * g[None, :]
    lhs[np.diag_indices_from(lhs)] -= gp
    rhs = y @ e_in - e_in_p
    coeff = np.linalg.solve(lhs, rhs)
    s = coeff[open_idx, :].T            # [incoming, outgoing]

    diag = {
        "matching_residual": float(residual),
        "s_symmetry": float(np.max(np.abs(s - s.T))) if n_open > 1 else 0.0,
        "r_max": float(r_max),
    }
    return s, open_idx, k_open, diag


def _required_r_max(model: CouplingModel, e_coll, tol) -> float:
    """R beyond which off-diagonal couplings are below the matching tol.

    Carries a factor-2 margin so the matching-residual check cannot sit
    exactly at its own threshold.
    """
    c3max = np.max(np.abs(model.c3_total - np.diag(np.diag(model.c3_total))))
    if c3max == 0.0:
        return 0.0
    return (2.0 * c3max / (tol * e_coll)) ** (1.0 / 3.0)


def propagate_model(y, model: CouplingModel, e_tot, config: PropagationConfig):
    """Fixed fine steps to r_mid, geometric growth to r_max."""
    two_mu = 2.0 * model.mu_red
    m0 = two_mu * np.abs(model.w(config.r_absorb))
    m0[np.diag_indices_from(m0)] += two_mu * abs(e_tot)
    scale = np.max(np.sum(m0, axis=1))
    h_inner = min(config.inner_step, math.sqrt(1e-3 / scale))

    r_max = config.r_max
    if config.auto_extend_r_max:
        r_max = max(r_max, _required_r_max(model, e_tot, config.match_tolerance))

    y, n1 = propagate(y, model.w, e_tot, model.mu_red,
                      config.r_absorb, config.r_mid,
                      first_width=2.0 * h_inner, growth=1.0,
                      wavelength_fraction=config.wavelength_fraction)
    y, n2 = propagate(y, model.w, e_tot, model.mu_red,
                      config.r_mid, r_max,
                      first_width=2.0 * h_inner, growth=config.step_growth,
                      wavelength_fraction=config.wavelength_fraction)
    return y, r_max, n1 + n2


def solve_coupling_model(model: CouplingModel, e_coll,
                         config: PropagationConfig, m_tot, parity):
    """Boundary condition + propagation + matching for one built model."""
    e_tot = e_coll        # thresholds are referenced to the incoming level
    w0 = model.w(config.r_absorb)
    wd0 = model.w_deriv(config.r_absorb)
    y = absorbing_initial_condition(w0, wd0, e_tot, model.mu_red,
                                    absorbing=config.absorbing)
    y, r_max, sectors = propagate_model(y, model, e_tot, config)
    s, open_idx, k_open, diag = match_asymptotic(
        y, model, e_tot, r_max, config.match_tolerance)
    diag["sectors"] = sectors
    diag["n_channels"] = model.n_channels
    diag["n_open"] = len(open_idx)
    return ScatteringSolution(
        m_tot=m_tot, parity=parity, e_coll=e_coll, field=model.field,
        b_field=model.b_field, incoming_level=model.incoming_level,
        channels=[model.channels[i] for i in open_idx],
        k_open=k_open, s=s, diagnostics=diag)


def solve_block(params, field, b_field, e_coll, spec: BasisSpec,
                config: PropagationConfig, *, incoming_pair=None,
                n_max: int = 20, c6_elec=None, denominator_floor=None,
                rotor_basis: DressedRotorBasis = None,
                class_margin=None) -> ScatteringSolution:
    """End to end solve of one (M_tot, parity) block.

    monomer states -> channel basis -> couplings (+ Van Vleck) ->
    propagation -> asymptotic matching.  Deterministic for a fixed
    configuration.
    """
    from . import interaction

    if incoming_pair is None:
        incoming_pair = (((1, 0, 0, 0), (1, 0, 0, 0)) if spec.include_spin
                         else ((1, 0), (1, 0)))
    if rotor_basis is None:
        rotor_basis = DressedRotorBasis(params, field, n_max)
    table = monomer_table(rotor_basis, spec.ntilde_max,
                          include_spin=spec.include_spin, b_field=b_field)
    channels = build_pair_basis(spec, table)
    kwargs = {}
    if class_margin is not None:
        kwargs["margin"] = class_margin
    class1, class2, _ = partition_classes(channels, spec, table,
                                          incoming_pair, **kwargs)
    mkw = {"b_field": b_field}
    if c6_elec is not None:
        mkw["c6_elec"] = c6_elec
    if denominator_floor is not None:
        mkw["denominator_floor"] = denominator_floor
    model = build_coupling_model(class1, class2, table, incoming_pair, **mkw)
    return solve_coupling_model(model, e_coll, config, spec.m_tot,
                                spec.l_parity)
