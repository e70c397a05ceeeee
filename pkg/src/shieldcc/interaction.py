"""Assembly of the R-dependent coupled-channel interaction.

Produces the R-independent coefficient matrices whose contraction gives
W(R) = thresholds + centrifugal/R^2 + (C3 + C3_spin)/R^3 + C6/R^6:

* C3: dipole-dipole coupling, evaluated as the rank-2 tensor contraction
  -sqrt(6) (mu1 mu2) sum_q (-1)^q C^2_{-q}(Rhat) [T^1(mu1) x T^1(mu2)]^2_q
  between symmetrized dressed channels (head-to-tail attractive).
* C6: isotropic electronic dispersion plus the second-order Van Vleck
  contribution of class-2 channels, with R-independent asymptotic energy
  denominators.
* C3_spin: Van Vleck cross terms, first order in the dipole-dipole
  coupling and first order in the electron spin-rotation or anisotropic
  hyperfine operator (zero in spin-free runs).

With spin included, the class-1 channel functions are products of dressed
rotor and |g, m_g> states; the residual fine/hyperfine + Zeeman couplings
among them are diagonalized at R = infinity and all coefficient matrices
are rotated into that asymptotic eigenbasis, so thresholds are exact and
matching stays diagonal.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import units
from .angular import c_tensor_element, clebsch_gordan
from .monomer import monomer_spin_operators
from .pair_basis import Channel, MonomerTable, pair_key

C6_ELEC_DEFAULT = 2300.0                               # E_h a0^6
DENOMINATOR_FLOOR_DEFAULT = 1.0 * units.GHZ_TO_AU      # abort below this
_COUPLING_EPS = 1e-14                                  # |element| considered 0


def _w2_table(l_max: int) -> np.ndarray:
    """w2[L', L, M+l_max, q+2] = (-1)^q <L' M-q | C^2_{-q} | L M>."""
    out = np.zeros((l_max + 1, l_max + 1, 2 * l_max + 1, 5))
    for l_ket in range(l_max + 1):
        for m_ket in range(-l_ket, l_ket + 1):
            for q in range(-2, 3):
                for l_bra in range(max(0, l_ket - 2),
                                   min(l_max, l_ket + 2) + 1):
                    val = c_tensor_element(l_bra, m_ket - q, 2, -q,
                                           l_ket, m_ket)
                    if val:
                        sign = -1.0 if q % 2 else 1.0
                        out[l_bra, l_ket, m_ket + l_max, q + 2] = sign * val
    return out


class PairCouplingBuilder:
    """Vectorized matrix elements between symmetrized pair channels.

    Rows are bras, columns kets; each block call loops over rows and
    gathers over the column channels with numpy, which keeps full-basis
    Van Vleck assemblies (hundreds x tens of thousands of elements)
    affordable.
    """

    def __init__(self, table: MonomerTable, l_max: int):
        self.table = table
        self.l_max = l_max
        rb = table.rotor_basis
        self.mu2 = rb.params.dipole ** 2
        ridx = np.asarray(table.rotor_idx)
        d = rb.c1[:, ridx[:, None], ridx[None, :]].copy()
        if table.include_spin:
            spin_eq = np.asarray(table.spin_idx)[:, None] == \
                np.asarray(table.spin_idx)[None, :]
            d *= spin_eq[None, :, :]
        self.d = d
        self.w2 = _w2_table(l_max)
        self.cg21 = np.array([[
            clebsch_gordan(1, p1, 1, q - p1, 2, q) if abs(q - p1) <= 1 else 0.0
            for p1 in (-1, 0, 1)] for q in range(-2, 3)])
        # spin-free rotor-pair energies (Van Vleck denominators)
        self.rotor_pair_energy = None

    def _cols(self, cols):
        ia = np.fromiter((c.idx1 for c in cols), int, len(cols))
        ib = np.fromiter((c.idx2 for c in cols), int, len(cols))
        l_arr = np.fromiter((c.L for c in cols), int, len(cols))
        m_arr = np.fromiter((c.M_L for c in cols), int, len(cols))
        proj = np.fromiter((c.internal_projection for c in cols), int,
                           len(cols))
        norm = 1.0 / np.sqrt(1.0 + (ia == ib))
        lphase = 1.0 - 2.0 * (l_arr % 2)
        return ia, ib, l_arr, m_arr, proj, norm, lphase

    def c3_block(self, rows, cols) -> np.ndarray:
        """Dipole-dipole R^-3 coefficient matrix between channel lists."""
        ia, ib, l_arr, m_arr, proj, norm, lphase = self._cols(cols)
        out = np.zeros((len(rows), len(cols)))
        off = self.l_max
        for ri, ch in enumerate(rows):
            q = ch.internal_projection - proj
            ok = np.abs(q) <= 2
            if not ok.any():
                continue
            qc = np.where(ok, q, 0)
            ang = self.w2[ch.L, l_arr, m_arr + off, qc + 2] * ok
            if not ang.any():
                continue
            direct = np.zeros(len(cols))
            exch = np.zeros(len(cols))
            for p1 in (-1, 0, 1):
                p2 = qc - p1
                okp = ok & (np.abs(p2) <= 1)
                if not okp.any():
                    continue
                p2c = np.clip(p2 + 1, 0, 2)
                cgv = self.cg21[qc + 2, p1 + 1] * okp
                direct += cgv * self.d[p1 + 1, ch.idx1, ia] \
                    * self.d[p2c, ch.idx2, ib]
                exch += cgv * self.d[p1 + 1, ch.idx1, ib] \
                    * self.d[p2c, ch.idx2, ia]
            rnorm = 1.0 / np.sqrt(1.0 + (ch.idx1 == ch.idx2))
            out[ri] = (-np.sqrt(6.0) * self.mu2 * rnorm) * norm * ang \
                * (direct + lphase * exch)
        return out

    def one_body_block(self, rows, cols, mono: np.ndarray) -> np.ndarray:
        """Pair matrix of a one-molecule operator op(1) + op(2).

        ``mono`` is the operator over MonomerTable indices; elements are
        diagonal in (L, M_L).
        """
        ia, ib, l_arr, m_arr, proj, norm, lphase = self._cols(cols)
        out = np.zeros((len(rows), len(cols)))
        for ri, ch in enumerate(rows):
            mask = (l_arr == ch.L) & (m_arr == ch.M_L)
            if not mask.any():
                continue
            direct = mono[ch.idx1, ia] * (ch.idx2 == ib) \
                + (ch.idx1 == ia) * mono[ch.idx2, ib]
            exch = mono[ch.idx1, ib] * (ch.idx2 == ia) \
                + (ch.idx1 == ib) * mono[ch.idx2, ia]
            rnorm = 1.0 / np.sqrt(1.0 + (ch.idx1 == ch.idx2))
            out[ri] = mask * rnorm * norm * (direct + lphase * exch)
        return out

    def spinfree_pair_energies(self, chans) -> np.ndarray:
        """Stark-only pair threshold energies (Van Vleck denominators)."""
        rb = self.table.rotor_basis
        ridx = np.asarray(self.table.rotor_idx)
        e_rot = rb.energies[ridx]
        i1 = np.fromiter((c.idx1 for c in chans), int, len(chans))
        i2 = np.fromiter((c.idx2 for c in chans), int, len(chans))
        return e_rot[i1] + e_rot[i2]


def hdd_matrix(channels, table: MonomerTable, l_max=None) -> np.ndarray:
    """R^-3 dipole-dipole coefficient matrix within one channel list."""
    _check_block(channels)
    if l_max is None:
        l_max = max(c.L for c in channels)
    builder = PairCouplingBuilder(table, l_max)
    m = builder.c3_block(channels, channels)
    return 0.5 * (m + m.T)


def _check_block(channels):
    if not channels:
        raise ValueError("empty channel list")
    mtot = {c.internal_projection + c.M_L for c in channels}
    par = {c.L % 2 for c in channels}
    if len(mtot) > 1 or len(par) > 1:
        raise ValueError("channels mix (M_tot, parity) blocks")


def _vv_denominators(builder, class1, class2, floor):
    e1 = builder.spinfree_pair_energies(class1)
    e2 = builder.spinfree_pair_energies(class2)
    return e1, e2


def _vv_guard(v, e1, e2, floor, class1, class2):
    gap = e1[:, None] - e2[None, :]
    bad = (np.abs(gap) < floor) & (np.abs(v) > _COUPLING_EPS)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"Van Vleck denominator {gap[i, j] * units.AU_TO_GHZ:.4f} GHz "
            f"below floor {floor * units.AU_TO_GHZ:.3f} GHz between coupled "
            f"channels [{class1[i].describe()}] and [{class2[j].describe()}]; "
            f"move the class-2 level into class 1 or lower the floor")
    return gap


def vanvleck_dd(class1, class2, builder: PairCouplingBuilder,
                floor: float = DENOMINATOR_FLOOR_DEFAULT) -> np.ndarray:
    """Second-order dipole-dipole contribution of class 2, as R^-6 matrix.

    <a|H|b> = sum_alpha (1/2) V_a,alpha V_alpha,b
              [1/(E_a - E_alpha) + 1/(E_b - E_alpha)]
    with R-independent asymptotic (spin-free) denominators.
    """
    n1 = len(class1)
    if not class2:
        return np.zeros((n1, n1))
    v = builder.c3_block(class1, class2)
    e1, e2 = _vv_denominators(builder, class1, class2, floor)
    gap = _vv_guard(v, e1, e2, floor, class1, class2)
    a = np.where(np.abs(v) > _COUPLING_EPS, v / gap, 0.0)
    return 0.5 * (a @ v.T + v @ a.T)


def vanvleck_spin(class1, class2, builder: PairCouplingBuilder,
                  floor: float = DENOMINATOR_FLOOR_DEFAULT) -> np.ndarray:
    """Van Vleck cross terms dd x (spin-rotation, anisotropic hf): R^-3.

    Four-term symmetrized sums of the paper-free form
    (1/2)[ V_dd/(Ea-E) V_s + V_dd V_s/(Eb-E) + dd <-> s ] over class-2
    intermediates, with spin-free asymptotic denominators.  Zero when
    gamma = t = 0 or in spin-free mode.
    """
    n1 = len(class1)
    table = builder.table
    if not class2 or not table.include_spin:
        return np.zeros((n1, n1))
    params = table.rotor_basis.params
    if params.gamma == 0.0 and params.t_aniso == 0.0:
        return np.zeros((n1, n1))

    ops = monomer_spin_operators(table.rotor_basis)
    ridx = np.asarray(table.rotor_idx)
    sidx = np.asarray(table.spin_idx)
    flat = 4 * ridx + sidx
    total = np.zeros((n1, n1))
    vdd = builder.c3_block(class1, class2)
    e1, e2 = _vv_denominators(builder, class1, class2, floor)
    gap1 = e1[:, None] - e2[None, :]
    add = np.where(np.abs(vdd) > _COUPLING_EPS, vdd / gap1, 0.0)
    for key in ("sn", "is2"):
        mono = ops[key][np.ix_(flat, flat)]
        if not np.abs(mono).max() > 0:
            continue
        vs = builder.one_body_block(class1, class2, mono)
        _vv_guard(vs, e1, e2, floor, class1, class2)
        asp = np.where(np.abs(vs) > _COUPLING_EPS, vs / gap1, 0.0)
        total += 0.5 * (add @ vs.T + vdd @ asp.T + asp @ vdd.T + vs @ add.T)
    return total


def _asymptotic_transform(class1, builder: PairCouplingBuilder,
                          b_field: float):
    """Diagonalize the internal (R = infinity) Hamiltonian over class 1.

    Returns (U, thresholds, relabeled channels).  Spin-free channels are
    already eigenstates, so U is the identity there.  With spin, the
    rotation runs per (L, M_L) block; eigenvectors are matched back to the
    product channels by maximum overlap (ambiguous matches flagged), which
    keeps channel identities and ordering stable.
    """
    table = builder.table
    n = len(class1)
    if not table.include_spin:
        thr = np.array([c.threshold for c in class1])
        return np.eye(n), thr, list(class1)

    params = table.rotor_basis.params
    ops = monomer_spin_operators(table.rotor_basis)
    fhf = ops["sn"] + ops["is2"] + ops["i_dot_s"] + ops["in"]
    fhf += params.g_s * units.MU_BOHR_AU * b_field * ops["sz"]
    ridx = np.asarray(table.rotor_idx)
    sidx = np.asarray(table.spin_idx)
    flat = 4 * ridx + sidx
    mono = fhf[np.ix_(flat, flat)]

    t_mat = builder.one_body_block(class1, class1, mono)
    t_mat = 0.5 * (t_mat + t_mat.T)
    t_mat += np.diag(builder.spinfree_pair_energies(class1))

    u = np.zeros((n, n))
    thr = np.zeros(n)
    new_channels = list(class1)
    groups = {}
    for i, c in enumerate(class1):
        groups.setdefault((c.L, c.M_L), []).append(i)
    for idx in groups.values():
        sel = np.array(idx)
        evals, evecs = np.linalg.eigh(t_mat[np.ix_(sel, sel)])
        overlap = np.abs(evecs) ** 2
        rows, cols = linear_sum_assignment(-overlap)
        for r, k in zip(rows, cols):
            vec = evecs[:, k]
            jref = r if abs(vec[r]) > 1e-12 else int(np.argmax(np.abs(vec)))
            if vec[jref] < 0:
                vec = -vec
            u[sel, sel[r]] = vec
            thr[sel[r]] = evals[k]
            new_channels[sel[r]] = replace(class1[sel[r]],
                                           threshold=float(evals[k]))
    return u, thr, new_channels


@dataclass
class CouplingModel:
    """R-independent coefficients defining W(R) for one block."""

    channels: list
    thresholds: np.ndarray          # au, incoming pair level at zero
    c3: np.ndarray
    c3_spin: np.ndarray
    c6: np.ndarray
    centrifugal: np.ndarray
    mu_red: float
    incoming_level: tuple
    incoming_threshold: float       # absolute energy of the incoming level
    field: float = 0.0
    b_field: float = 0.0

    @property
    def n_channels(self) -> int:
        return len(self.thresholds)

    @property
    def c3_total(self) -> np.ndarray:
        return self.c3 + self.c3_spin

    def w(self, r: float) -> np.ndarray:
        """W(R) in au (thresholds relative to the incoming pair level)."""
        if r <= 0:
            raise ValueError("R must be positive")
        out = self.c3_total / r ** 3 + self.c6 / r ** 6
        didx = np.diag_indices_from(out)
        out[didx] += self.thresholds + self.centrifugal / r ** 2
        return out

    def w_deriv(self, r: float) -> np.ndarray:
        """dW/dR, used for WKB corrections at the absorbing boundary."""
        out = -3.0 * self.c3_total / r ** 4 - 6.0 * self.c6 / r ** 7
        didx = np.diag_indices_from(out)
        out[didx] += -2.0 * self.centrifugal / r ** 3
        return out

    def incoming_channels(self):
        return [i for i, c in enumerate(self.channels)
                if c.pair_level == self.incoming_level]


def build_coupling_model(class1, class2, table: MonomerTable,
                         incoming_pair, *, c6_elec: float = C6_ELEC_DEFAULT,
                         denominator_floor: float = DENOMINATOR_FLOOR_DEFAULT,
                         b_field: float = 0.0) -> CouplingModel:
    """Assemble all coefficient matrices for one (M_tot, parity) block."""
    _check_block(class1 + class2)
    l_max = max(c.L for c in class1 + class2)
    builder = PairCouplingBuilder(table, l_max)

    c3 = builder.c3_block(class1, class1)
    c3 = 0.5 * (c3 + c3.T)
    c6 = vanvleck_dd(class1, class2, builder, denominator_floor)
    c6[np.diag_indices_from(c6)] -= c6_elec
    c3s = vanvleck_spin(class1, class2, builder, denominator_floor)

    u, thr, channels = _asymptotic_transform(class1, builder, b_field)
    c3 = u.T @ c3 @ u
    c6 = u.T @ c6 @ u
    c3s = u.T @ c3s @ u

    params = table.rotor_basis.params
    l_arr = np.array([c.L for c in channels], dtype=float)
    cent = l_arr * (l_arr + 1.0) / (2.0 * params.pair_reduced_mass)

    key = pair_key(*incoming_pair)
    inc = [i for i, c in enumerate(channels) if c.pair_level == key]
    if not inc:
        raise ValueError(f"incoming pair level {key} has no channel "
                         "in this block")
    e_inc = thr[inc[0]]
    return CouplingModel(
        channels=channels, thresholds=thr - e_inc,
        c3=c3, c3_spin=c3s, c6=c6, centrifugal=cent,
        mu_red=params.pair_reduced_mass,
        incoming_level=key, incoming_threshold=float(e_inc),
        field=table.rotor_basis.field, b_field=b_field)


@dataclass
class AdiabatSet:
    """Continuity-tracked eigenvalue curves of W(R)."""

    r_grid: np.ndarray
    energies: np.ndarray            # (n_r, n_channels), au, tracked
    labels: list                    # channel descriptions at long range

    def curve(self, label_substring: str) -> np.ndarray:
        hits = [i for i, lab in enumerate(self.labels)
                if label_substring in lab]
        if len(hits) != 1:
            raise KeyError(f"{label_substring!r} matches {len(hits)} curves")
        return self.energies[:, hits[0]]


def adiabats(model: CouplingModel, r_grid) -> AdiabatSet:
    """Eigenvalues of W(R) over a monotone R grid.

    Curves are ordered so each column follows one adiabat through avoided
    crossings: labels are assigned by eigenvector overlap at the largest R
    (where W is nearly diagonal) and tracked inward by maximal overlap
    between adjacent grid points.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or len(r) < 2 or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be strictly increasing")
    n = model.n_channels
    energies = np.zeros((len(r), n))

    evals, evecs = np.linalg.eigh(model.w(r[-1]))
    rows, cols = linear_sum_assignment(-np.abs(evecs))
    perm = np.empty(n, dtype=int)
    perm[rows] = cols
    energies[-1] = evals[perm]
    prev = evecs[:, perm]
    labels = [model.channels[i].describe() for i in range(n)]

    for k in range(len(r) - 2, -1, -1):
        evals, evecs = np.linalg.eigh(model.w(r[k]))
        overlap = np.abs(prev.T @ evecs)
        rows, cols = linear_sum_assignment(-overlap)
        perm = np.empty(n, dtype=int)
        perm[rows] = cols
        energies[k] = evals[perm]
        prev = evecs[:, perm]
    return AdiabatSet(r_grid=r, energies=energies, labels=labels)


def export_adiabats_csv(adset: AdiabatSet, path) -> None:
    """CSV rows (R_a0, curve_index, energy_MHz, dominant_channel_label)."""
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["R_a0", "curve_index", "energy_MHz",
                         "dominant_channel_label"])
        for i, r in enumerate(adset.r_grid):
            for j in range(adset.energies.shape[1]):
                writer.writerow([
                    f"{r:.6f}", j,
                    f"{adset.energies[i, j] * units.AU_TO_MHZ:.12g}",
                    adset.labels[j]])
