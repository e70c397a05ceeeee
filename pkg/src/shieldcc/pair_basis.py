"""Symmetrized two-molecule channel bases.

Channels are boson-symmetrized combinations of two monomer states with a
partial wave:  [ |A B> + (-1)^L |B A> ] Y_L M_L / sqrt(2 (1 + delta_AB)),
blocked by the conserved projection M_tot and by the parity of L, and
partitioned into class 1 (kept in the coupled equations) and class 2
(folded in perturbatively).

In spin mode the monomer states are products of a field-dressed rotor
function and a coupled two-spin-1/2 function |g, m_g>; the residual fine
and hyperfine couplings among class-1 channels are handled downstream by
the interaction assembly.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from . import units
from .monomer import (SPIN_LABELS, DressedRotorBasis, monomer_spin_operators)

BASIS_PRESETS = ("minimal", "small", "large", "spin-N13")


@dataclass(frozen=True)
class MonomerTable:
    """Monomer states available for pair enumeration at one field point.

    ``labels[i]`` is (ntilde, m_n) or (ntilde, m_n, g, m_g); ``energies``
    are asymptotic monomer energies (diagonal fhf/Zeeman included in spin
    mode); ``rotor_idx``/``spin_idx`` map into the dressed-rotor basis and
    the fixed spin-label list.
    """

    labels: tuple
    energies: np.ndarray
    rotor_idx: np.ndarray
    spin_idx: np.ndarray | None
    rotor_basis: DressedRotorBasis
    b_field: float = 0.0

    @property
    def include_spin(self) -> bool:
        return self.spin_idx is not None

    def index_of(self, label) -> int:
        return self.labels.index(tuple(label))


def monomer_table(rotor_basis: DressedRotorBasis, ntilde_max: int,
                  include_spin: bool = False,
                  b_field: float = 0.0) -> MonomerTable:
    """Collect monomer states with ntilde <= ntilde_max for pair building."""
    sel = [i for i, s in enumerate(rotor_basis.states) if s.ntilde <= ntilde_max]
    sel.sort(key=lambda i: rotor_basis.states[i].label)
    if not include_spin:
        labels = tuple(rotor_basis.states[i].label for i in sel)
        energies = np.array([rotor_basis.states[i].energy for i in sel])
        return MonomerTable(labels, energies, np.array(sel), None, rotor_basis)

    params = rotor_basis.params
    ops = monomer_spin_operators(rotor_basis)
    fhf = ops["sn"] + ops["is2"] + ops["i_dot_s"] + ops["in"]
    fhf += params.g_s * units.MU_BOHR_AU * b_field * ops["sz"]
    diag = np.diag(fhf)

    labels, energies, ridx, sidx = [], [], [], []
    for i in sel:
        st = rotor_basis.states[i]
        for k, (g, mg) in enumerate(SPIN_LABELS):
            labels.append((st.label[0], st.label[1], g, mg))
            energies.append(st.energy + diag[4 * i + k])
            ridx.append(i)
            sidx.append(k)
    return MonomerTable(tuple(labels), np.array(energies), np.array(ridx),
                        np.array(sidx), rotor_basis, b_field)


def _projection(label) -> int:
    """Conserved internal projection m_n (+ m_g) of one monomer label."""
    m = label[1]
    if len(label) == 4:
        m += label[3]
    return m


def pair_key(label1, label2) -> tuple:
    """Canonical (order-independent) pair-level key."""
    a, b = tuple(label1), tuple(label2)
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Channel:
    """One symmetrized pair basis function."""

    mono1: tuple
    mono2: tuple
    L: int
    M_L: int
    threshold: float
    cls: int = 0            # 1 or 2 once partitioned
    idx1: int = -1          # positions in the MonomerTable
    idx2: int = -1

    @property
    def same_pair(self) -> bool:
        return self.mono1 == self.mono2

    @property
    def exchange_phase(self) -> int:
        return -1 if self.L % 2 else 1

    @property
    def pair_level(self) -> tuple:
        return pair_key(self.mono1, self.mono2)

    @property
    def internal_projection(self) -> int:
        return _projection(self.mono1) + _projection(self.mono2)

    def describe(self) -> str:
        def one(lab):
            return "(" + ",".join(str(x) for x in lab) + ")"
        return f"{one(self.mono1)}+{one(self.mono2)} L={self.L} ML={self.M_L}"


@dataclass(frozen=True)
class BasisSpec:
    """Channel-basis request for one (M_tot, parity) block."""

    ntilde_max: int = 5
    l_max: int = 20
    m_tot: int = 0
    l_parity: str = "even"
    class1: object = "all"      # preset name, explicit pair-key list, or "all"
    include_spin: bool = False

    def __post_init__(self):
        if self.l_parity not in ("even", "odd"):
            raise ValueError("l_parity must be 'even' or 'odd'")
        if self.l_max < 0 or self.ntilde_max < 0:
            raise ValueError("cutoffs must be non-negative")
        if isinstance(self.class1, str):
            if self.class1 != "all" and self.class1 not in BASIS_PRESETS:
                raise ValueError(f"unknown basis preset {self.class1!r}")
            if self.class1 == "spin-N13" and not self.include_spin:
                raise ValueError("spin-N13 requires include_spin")


def build_pair_basis(spec: BasisSpec, table: MonomerTable) -> list:
    """All boson-symmetric channels of one (M_tot, L-parity) block.

    Deterministic ordering: threshold energy, then monomer labels, then
    (L, M_L).  Duplicate symmetrized pairs are eliminated by enumerating
    unordered monomer pairs; self-paired levels drop odd L.
    """
    if spec.include_spin != table.include_spin:
        raise ValueError("basis spec and monomer table disagree about spin")
    order = sorted(range(len(table.labels)), key=lambda i: table.labels[i])
    l_start = 0 if spec.l_parity == "even" else 1
    chans = []
    for a in range(len(order)):
        i = order[a]
        for b in range(a, len(order)):
            j = order[b]
            proj = _projection(table.labels[i]) + _projection(table.labels[j])
            m_l = spec.m_tot - proj
            if abs(m_l) > spec.l_max:
                continue
            thresh = float(table.energies[i] + table.energies[j])
            same = i == j
            for L in range(max(l_start, abs(m_l) + ((abs(m_l) + l_start) % 2)),
                           spec.l_max + 1, 2):
                if same and L % 2:
                    continue
                chans.append(Channel(
                    mono1=table.labels[i], mono2=table.labels[j],
                    L=L, M_L=m_l, threshold=thresh, idx1=i, idx2=j))
    if not chans:
        raise ValueError(f"no channels match M_tot={spec.m_tot}, "
                         f"{spec.l_parity} L (l_max={spec.l_max})")
    chans.sort(key=lambda c: (c.threshold, c.mono1, c.mono2, c.L, c.M_L))
    return chans


def resolve_class1(spec: BasisSpec, table: MonomerTable) -> frozenset:
    """Expand a class-1 selector (preset name or explicit list) to pair keys."""
    sel = spec.class1
    if sel == "all":
        keys = {pair_key(a, b) for a in table.labels for b in table.labels}
        return frozenset(keys)
    if isinstance(sel, str):
        return frozenset(_preset_pairs(sel, table))
    keys = set()
    for item in sel:
        a, b = item
        ka = tuple(tuple(x) for x in (a, b))
        for lab in ka:
            if lab not in table.labels:
                raise ValueError(f"class-1 selector references unknown "
                                 f"monomer state {lab}")
        keys.add(pair_key(*ka))
    return frozenset(keys)


def _spin_combos(rotor_pairs):
    out = set()
    for (l1, l2) in rotor_pairs:
        for g1, mg1 in SPIN_LABELS:
            for g2, mg2 in SPIN_LABELS:
                out.add(pair_key(l1 + (g1, mg1), l2 + (g2, mg2)))
    return out


def _preset_pairs(name: str, table: MonomerTable):
    minimal = [((1, 0), (1, 0)), ((0, 0), (2, 0))]
    small = minimal + [((0, 0), (2, -1)), ((0, 0), (2, 1))]
    if name == "minimal":
        rotor = minimal
    elif name == "small":
        rotor = small
    elif name == "large":
        labs = {lab[:2] for lab in table.labels if lab[0] <= 2}
        rotor = [(a, b) for a in labs for b in labs if a <= b]
    elif name == "spin-N13":
        keys = {pair_key((1, 0, 0, 0), (1, 0, 0, 0))}
        for m in (0, -1, 1):
            for g, mg in SPIN_LABELS:
                keys.add(pair_key((0, 0, 0, 0), (2, m, g, mg)))
        return keys
    else:
        raise ValueError(f"unknown basis preset {name!r}")
    if table.include_spin:
        return _spin_combos(rotor)
    return {pair_key(a, b) for (a, b) in rotor}


def partition_classes(channels, spec: BasisSpec, table: MonomerTable,
                      incoming_pair, margin: float = 3.0 * units.GHZ_TO_AU):
    """Tag channels as class 1 / class 2.

    Returns (class1, class2, warnings).  Raises if the incoming pair level
    is not in class 1; warns if any class-2 threshold lies within
    ``margin`` of a class-1 threshold (the Van Vleck treatment assumes
    well-separated classes).
    """
    keys = resolve_class1(spec, table)
    incoming = pair_key(*incoming_pair)
    if incoming not in keys:
        raise ValueError(f"incoming pair level {incoming} is not in class 1")
    class1, class2 = [], []
    for c in channels:
        if c.pair_level in keys:
            class1.append(replace(c, cls=1))
        else:
            class2.append(replace(c, cls=2))

    warnings = []
    if class2:
        t1 = {}
        for c in class1:
            t1.setdefault(c.pair_level, c.threshold)
        t2 = {}
        for c in class2:
            t2.setdefault(c.pair_level, c.threshold)
        for lev2, e2 in t2.items():
            gaps = {lev1: abs(e2 - e1) for lev1, e1 in t1.items()}
            lev1 = min(gaps, key=gaps.get)
            if gaps[lev1] < margin:
                warnings.append(
                    f"class-2 level {lev2} lies "
                    f"{gaps[lev1] * units.AU_TO_GHZ:.3f} GHz from class-1 "
                    f"level {lev1}")
    return class1, class2, warnings


def pair_levels(channels) -> list:
    """Unique pair-level keys in deterministic (threshold, label) order."""
    seen = {}
    for c in channels:
        seen.setdefault(c.pair_level, c.threshold)
    return sorted(seen, key=lambda k: (seen[k], k))


def dump_basis_json(channels, path, field: float = 0.0) -> None:
    """Write channel labels, thresholds and class tags for inspection."""
    rows = [{
        "mono1": list(c.mono1), "mono2": list(c.mono2),
        "L": c.L, "M_L": c.M_L, "class": c.cls,
        "threshold_GHz": c.threshold * units.AU_TO_GHZ,
    } for c in channels]
    with open(path, "w") as fh:
        json.dump({"field_kVcm": field * units.AU_TO_KVCM,
                   "n_channels": len(rows), "channels": rows}, fh, indent=1)
