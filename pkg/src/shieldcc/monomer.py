"""Single-molecule Hamiltonians and field-dressed states.

Builds and diagonalizes the rigid-rotor + Stark Hamiltonian (optionally
extended by electron-spin / nuclear-spin fine and hyperfine structure and a
Zeeman term), producing labeled field-dressed states, induced space-fixed
dipoles and pair-threshold crossing fields.

Everything here is in atomic units; see :mod:`shieldcc.units`.
"""

import csv
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import units
from .angular import c_tensor_element

# coupled two-spin-1/2 basis, fixed ordering (g, m_g)
SPIN_LABELS = ((0, 0), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class MoleculeParams:
    """Rigid-rotor molecule with a 2-Sigma spin structure.

    All values in atomic units.  ``gamma`` is the electron spin-rotation
    constant, ``zeta_f`` the isotropic (Fermi-contact) electron-nuclear
    coupling, ``t_aniso`` the anisotropic electron-nuclear coupling and
    ``c_f`` the nuclear spin-rotation constant.
    """

    rotational_constant: float
    dipole: float
    mass: float
    gamma: float = 0.0
    zeta_f: float = 0.0
    t_aniso: float = 0.0
    c_f: float = 0.0
    g_s: float = 2.0023193

    def __post_init__(self):
        if self.rotational_constant <= 0:
            raise ValueError("rotational constant must be positive")
        if self.dipole < 0:
            raise ValueError("body-frame dipole must be non-negative")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def pair_reduced_mass(self) -> float:
        return 0.5 * self.mass

    @classmethod
    def from_spectroscopic(cls, b_ghz, dipole_debye, mass_amu,
                           gamma_mhz=0.0, zeta_f_mhz=0.0, t_mhz=0.0,
                           c_f_mhz=0.0, g_s=2.0023193) -> "MoleculeParams":
        return cls(
            rotational_constant=b_ghz * units.GHZ_TO_AU,
            dipole=dipole_debye * units.DEBYE_AU,
            mass=mass_amu * units.AMU_ME,
            gamma=gamma_mhz * units.MHZ_TO_AU,
            zeta_f=zeta_f_mhz * units.MHZ_TO_AU,
            t_aniso=t_mhz * units.MHZ_TO_AU,
            c_f=c_f_mhz * units.MHZ_TO_AU,
            g_s=g_s,
        )


# 40Ca19F ground state.  b and mu as used throughout; spin constants
# transcribed from the radio-frequency double-resonance measurements of
# Childs, Goodman and Goodman, J. Mol. Spectrosc. 86, 365 (1981), mapping
# their (B, gamma, b, c, C_I) to (b, gamma, zeta_f = b + c/3, t = c/3, c_f).
CAF_PRESET = dict(
    b_ghz=10.267,
    dipole_debye=3.07,
    mass_amu=58.9609941,
    gamma_mhz=39.65891,
    zeta_f_mhz=109.1839 + 40.1190 / 3.0,
    t_mhz=40.1190 / 3.0,
    c_f_mhz=0.029,
)

MOLECULE_PRESETS = {"CaF-40-19": CAF_PRESET}


def molecule_from_preset(name: str) -> MoleculeParams:
    try:
        kwargs = MOLECULE_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown molecule preset {name!r}; "
                       f"known: {sorted(MOLECULE_PRESETS)}") from None
    return MoleculeParams.from_spectroscopic(**kwargs)


@dataclass(frozen=True)
class FieldDressedState:
    """Eigenstate of a single-molecule Hamiltonian at one field point.

    ``label`` is (ntilde, m_n) for spin-free states and
    (ntilde, m_n, g, m_g) with the spin structure included.  The
    composition vector refers to free rotor functions n = |m_n| .. n_max
    (spin-free) or to the dressed-rotor x spin product basis recorded by
    the builder.  Sign convention: largest-magnitude coefficient positive.
    """

    label: tuple
    energy: float
    composition: np.ndarray
    field: float
    b_field: float = 0.0
    ambiguous_label: bool = False

    @property
    def ntilde(self) -> int:
        return self.label[0]

    @property
    def m_n(self) -> int:
        return self.label[1]


def stark_hamiltonian(params: MoleculeParams, field: float, m_n: int,
                      n_max: int) -> np.ndarray:
    """Rotor + Stark matrix over |n, m_n>, n = |m_n| .. n_max.

    Diagonal b n(n+1); off-diagonal -mu F <n' m|C^1_0|n m>.  The field is
    along z, so the matrix is block diagonal in m_n by construction.
    """
    if n_max < abs(m_n):
        raise ValueError(f"n_max={n_max} < |m_n|={abs(m_n)}")
    if field < 0:
        raise ValueError("field must be non-negative")
    ns = np.arange(abs(m_n), n_max + 1)
    h = np.diag(params.rotational_constant * ns * (ns + 1.0))
    for i, n in enumerate(ns[:-1]):
        cup = c_tensor_element(n + 1, m_n, 1, 0, n, m_n)
        h[i + 1, i] = h[i, i + 1] = -params.dipole * field * cup
    return h


def field_dressed_states(params: MoleculeParams, field: float,
                         n_max: int) -> list:
    """All dressed rotor states (ntilde, m_n) up to n_max, every m_n block.

    ntilde counts energy order within an m_n block starting from |m_n|.
    Ordered by (m_n, ntilde) with m_n = -n_max .. n_max.
    """
    states = []
    for m_n in range(-n_max, n_max + 1):
        h = stark_hamiltonian(params, field, m_n, n_max)
        evals, evecs = np.linalg.eigh(h)
        for k in range(len(evals)):
            vec = evecs[:, k].copy()
            jmax = int(np.argmax(np.abs(vec)))
            if vec[jmax] < 0:
                vec = -vec
            states.append(FieldDressedState(
                label=(abs(m_n) + k, m_n), energy=float(evals[k]),
                composition=vec, field=field))
    return states


def induced_dipole(state: FieldDressedState, params: MoleculeParams) -> float:
    """Space-fixed dipole <mu C^1_0> of a dressed rotor state.

    Equals -dE/dF by the Hellmann-Feynman theorem: positive for aligned
    (field-seeking-down) states, negative for anti-aligned ones.
    """
    m = state.m_n
    ns = np.arange(abs(m), abs(m) + len(state.composition))
    c = state.composition
    d = 0.0
    for i, n in enumerate(ns[:-1]):
        d += 2.0 * c[i + 1] * c[i] * c_tensor_element(n + 1, m, 1, 0, n, m)
    return params.dipole * d


def _pair_energy(params, n_max, pair, field):
    table = {s.label: s.energy for s in field_dressed_states(params, field, n_max)}
    return table[tuple(pair[0])] + table[tuple(pair[1])]


def pair_threshold_crossing(params: MoleculeParams, pair_a, pair_b,
                            bracket, n_max: int = 20,
                            tol: float = 1e-4 * units.KVCM_TO_AU) -> float:
    """Field (au) where pair thresholds E_a(F) and E_b(F) cross.

    ``pair_a``/``pair_b`` are pairs of (ntilde, m_n) labels; ``bracket``
    is an (F_lo, F_hi) interval in au over which the threshold difference
    changes sign.
    """
    def gap(f):
        return (_pair_energy(params, n_max, pair_a, f)
                - _pair_energy(params, n_max, pair_b, f))

    lo, hi = bracket
    if gap(lo) * gap(hi) > 0:
        raise ValueError("threshold difference does not change sign over bracket")
    return brentq(gap, lo, hi, xtol=tol)


# ---------------------------------------------------------------------------
# operator tables over dressed rotor states

def _rotor_ladder(n, m, p):
    """<n m+p | n_p | n m> for the rotor angular momentum operator."""
    if p == 0:
        return float(m)
    if abs(m + p) > n:
        return 0.0
    if p == 1:
        return -np.sqrt((n - m) * (n + m + 1) / 2.0)
    return np.sqrt((n + m) * (n - m + 1) / 2.0)


class DressedRotorBasis:
    """Dressed rotor states at one field plus operator tables over them.

    Provides dense matrices of C^1_p, C^2_q and n_p between all dressed
    states, evaluated through the free-rotor composition of each state.
    These feed every pair-coupling builder, so they are computed once per
    field point with blockwise matrix products.
    """

    def __init__(self, params: MoleculeParams, field: float, n_max: int):
        self.params = params
        self.field = field
        self.n_max = n_max
        self.states = field_dressed_states(params, field, n_max)
        self.index = {s.label: i for i, s in enumerate(self.states)}
        self.energies = np.array([s.energy for s in self.states])
        self._m_groups = {}
        for i, s in enumerate(self.states):
            self._m_groups.setdefault(s.m_n, []).append(i)

    def state(self, label) -> FieldDressedState:
        return self.states[self.index[tuple(label)]]

    def _operator_matrix(self, k_rank, q, element) -> np.ndarray:
        """<A'|op|A> for an operator with Delta m_n = q, via compositions."""
        n_states = len(self.states)
        out = np.zeros((n_states, n_states))
        for m, idx in self._m_groups.items():
            mp = m + q
            if mp not in self._m_groups:
                continue
            idxp = self._m_groups[mp]
            ns = np.arange(abs(m), self.n_max + 1)
            nsp = np.arange(abs(mp), self.n_max + 1)
            table = np.zeros((len(nsp), len(ns)))
            for a, npr in enumerate(nsp):
                for b, n in enumerate(ns):
                    table[a, b] = element(npr, n, m)
            comp = np.stack([self.states[i].composition for i in idx])
            compp = np.stack([self.states[i].composition for i in idxp])
            block = compp @ table @ comp.T
            out[np.ix_(idxp, idx)] = block
        return out

    @cached_property
    def c1(self) -> np.ndarray:
        """c1[p+1] = matrix of C^1_p, p = -1, 0, +1."""
        return np.stack([
            self._operator_matrix(1, p, lambda npr, n, m, p=p:
                                  c_tensor_element(npr, m + p, 1, p, n, m))
            for p in (-1, 0, 1)])

    @cached_property
    def c2(self) -> np.ndarray:
        """c2[q+2] = matrix of C^2_q, q = -2 .. +2."""
        return np.stack([
            self._operator_matrix(2, q, lambda npr, n, m, q=q:
                                  c_tensor_element(npr, m + q, 2, q, n, m))
            for q in (-2, -1, 0, 1, 2)])

    @cached_property
    def nop(self) -> np.ndarray:
        """nop[p+1] = matrix of the spherical rotor component n_p."""
        return np.stack([
            self._operator_matrix(1, p, lambda npr, n, m, p=p:
                                  _rotor_ladder(n, m, p) if npr == n else 0.0)
            for p in (-1, 0, 1)])

    def dipoles(self) -> np.ndarray:
        """Induced space-fixed dipole <mu C^1_0> of every state."""
        return self.params.dipole * np.diag(self.c1[1])


# ---------------------------------------------------------------------------
# electron + nuclear spin structure (s = i = 1/2)

def _spin_matrices():
    """Spherical components of s and i plus T^2(i,s) in the |g, m_g> basis."""
    sz = np.array([[0.5, 0.0], [0.0, -0.5]])
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])   # raising, |+> first
    sm = sp.T
    one = np.eye(2)

    def spherical(op_z, op_p, op_m):
        return [op_m / np.sqrt(2.0), op_z, -op_p / np.sqrt(2.0)]

    s_unc = [np.kron(c, one) for c in spherical(sz, sp, sm)]
    i_unc = [np.kron(one, c) for c in spherical(sz, sp, sm)]

    # uncoupled order |m_s m_i> = ++, +-, -+, --; coupled per SPIN_LABELS
    u = np.zeros((4, 4))
    rt2 = 1.0 / np.sqrt(2.0)
    u[:, 0] = [0.0, rt2, -rt2, 0.0]    # (0, 0)
    u[:, 1] = [0.0, 0.0, 0.0, 1.0]     # (1,-1)
    u[:, 2] = [0.0, rt2, rt2, 0.0]     # (1, 0)
    u[:, 3] = [1.0, 0.0, 0.0, 0.0]     # (1,+1)

    s_c = [u.T @ m @ u for m in s_unc]
    i_c = [u.T @ m @ u for m in i_unc]

    from .angular import clebsch_gordan
    t2 = []
    for q in (-2, -1, 0, 1, 2):
        acc = np.zeros((4, 4))
        for p1 in (-1, 0, 1):
            p2 = q - p1
            if abs(p2) > 1:
                continue
            acc += clebsch_gordan(1, p1, 1, p2, 2, q) * (i_c[p1 + 1] @ s_c[p2 + 1])
        acc[np.abs(acc) < 1e-14] = 0.0     # structural zeros exactly zero
        t2.append(acc)

    i_dot_s = sum((-1) ** p * (i_c[p + 1] @ s_c[1 - p]) for p in (-1, 0, 1))
    i_dot_s[np.abs(i_dot_s) < 1e-14] = 0.0
    return {"s": s_c, "i": i_c, "t2_is": t2, "i_dot_s": i_dot_s}


_SPIN_OPS = None


def spin_ops():
    global _SPIN_OPS
    if _SPIN_OPS is None:
        _SPIN_OPS = _spin_matrices()
    return _SPIN_OPS


def monomer_spin_operators(basis: DressedRotorBasis):
    """One-molecule fhf operator matrices over the dressed-rotor x spin
    product basis (rotor index slow, spin index fast).

    Returns dict with 'sn' (gamma s.n), 'is2' (t sqrt6 T2(C).T2(i,s)),
    'i_dot_s' (zeta_f i.s), 'in' (c_f i.n) and 'sz' (electron spin z).
    """
    ops = spin_ops()
    p = basis.params
    nrot = len(basis.states)
    eye_rot = np.eye(nrot)

    def contract(rotor_mats, spin_mats, ranks):
        acc = np.zeros((nrot * 4, nrot * 4))
        for q in ranks:
            sign = -1.0 if q % 2 else 1.0
            acc += sign * np.kron(rotor_mats[q + ranks[-1]], spin_mats[-q + ranks[-1]])
        return acc

    sn = p.gamma * contract(basis.nop, ops["s"], (-1, 0, 1))
    i_n = p.c_f * contract(basis.nop, ops["i"], (-1, 0, 1))
    is2 = p.t_aniso * np.sqrt(6.0) * contract(basis.c2, ops["t2_is"],
                                              (-2, -1, 0, 1, 2))
    ids = p.zeta_f * np.kron(eye_rot, ops["i_dot_s"])
    sz = np.kron(eye_rot, ops["s"][1])
    return {"sn": sn, "is2": is2, "i_dot_s": ids, "in": i_n, "sz": sz}


def spin_hamiltonian(params: MoleculeParams, basis: DressedRotorBasis,
                     b_field: float) -> np.ndarray:
    """Full fhf + Zeeman + Stark matrix over dressed-rotor x spin products.

    The Stark part enters as the diagonal dressed energies; the result is
    real symmetric and block diagonal in m_f = m_n + m_g.
    """
    if basis.params != params:
        raise ValueError("rotor basis was built for different parameters")
    ops = monomer_spin_operators(basis)
    h = ops["sn"] + ops["is2"] + ops["i_dot_s"] + ops["in"]
    h += params.g_s * units.MU_BOHR_AU * b_field * ops["sz"]
    h += np.kron(np.diag(basis.energies), np.eye(4))
    return h


def spin_dressed_states(params: MoleculeParams, field: float,
                        b_field: float, n_max: int) -> list:
    """Eigenstates of the Stark + fhf + Zeeman monomer Hamiltonian.

    Labels (ntilde, m_n, g, m_g) are assigned by maximum overlap with the
    dressed-rotor x |g, m_g> product basis; states whose largest product
    weight is below 0.5 are flagged ambiguous.  m_f is exactly conserved,
    so the diagonalization runs per m_f block.
    """
    basis = DressedRotorBasis(params, field, n_max)
    h = spin_hamiltonian(params, basis, b_field)
    dim = h.shape[0]
    prod_labels = [(s.label[0], s.label[1], g, mg)
                   for s in basis.states for (g, mg) in SPIN_LABELS]
    m_f = np.array([lab[1] + lab[3] for lab in prod_labels])

    states = []
    for mf in np.unique(m_f):
        sel = np.where(m_f == mf)[0]
        evals, evecs = np.linalg.eigh(h[np.ix_(sel, sel)])
        for k in range(len(evals)):
            vec = np.zeros(dim)
            sub = evecs[:, k]
            jmax = int(np.argmax(np.abs(sub)))
            if sub[jmax] < 0:
                sub = -sub
            vec[sel] = sub
            lead = sel[jmax]
            states.append(FieldDressedState(
                label=prod_labels[lead], energy=float(evals[k]),
                composition=vec, field=field, b_field=b_field,
                ambiguous_label=bool(sub[jmax] ** 2 < 0.5)))
    states.sort(key=lambda s: (s.label[1], s.label[0], s.label[2], s.label[3]))
    return states


def export_stark_map(params: MoleculeParams, fields, n_max: int, path,
                     include_spin: bool = False, b_field: float = 0.0,
                     ntilde_max=None) -> None:
    """Write (field_kVcm, ntilde, mn[, g, mg], energy_MHz, dipole_D) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if include_spin:
            writer.writerow(["field_kVcm", "ntilde", "mn", "g", "mg",
                             "energy_MHz", "dipole_D"])
        else:
            writer.writerow(["field_kVcm", "ntilde", "mn",
                             "energy_MHz", "dipole_D"])
        for f in fields:
            if include_spin:
                sts = spin_dressed_states(params, f, b_field, n_max)
                rb = DressedRotorBasis(params, f, n_max)
                dip_prod = np.kron(params.dipole * rb.c1[1], np.eye(4))
            else:
                sts = field_dressed_states(params, f, n_max)
            for s in sts:
                if ntilde_max is not None and s.ntilde > ntilde_max:
                    continue
                if include_spin:
                    d = float(s.composition @ dip_prod @ s.composition)
                else:
                    d = induced_dipole(s, params)
                row = [f"{f * units.AU_TO_KVCM:.6f}", *s.label,
                       f"{s.energy * units.AU_TO_MHZ:.6f}",
                       f"{d * units.AU_TO_DEBYE:.8f}"]
                writer.writerow(row)
