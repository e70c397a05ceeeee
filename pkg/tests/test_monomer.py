import math

import numpy as np
import pytest

from shieldcc import units
from shieldcc.angular import c_tensor_element
from shieldcc.monomer import (DressedRotorBasis, MoleculeParams,
                              field_dressed_states, induced_dipole,
                              molecule_from_preset, pair_threshold_crossing,
                              spin_dressed_states, spin_hamiltonian,
                              spin_ops, stark_hamiltonian)

KV = units.KVCM_TO_AU


def state_table(params, field_kvcm, n_max=20):
    sts = field_dressed_states(params, field_kvcm * KV, n_max)
    return {s.label: s for s in sts}


class TestStarkHamiltonian:
    def test_zero_field_is_diagonal_rigid_rotor(self, caf):
        h = stark_hamiltonian(caf, 0.0, 0, 6)
        ns = np.arange(0, 7)
        assert np.allclose(h, np.diag(caf.rotational_constant * ns * (ns + 1)))

    def test_coupling_element_value(self, caf):
        f = 21.55 * KV
        h = stark_hamiltonian(caf, f, 0, 4)
        want = -caf.dipole * f / math.sqrt(3.0)
        assert h[0, 1] == pytest.approx(want, rel=1e-14)

    def test_symmetric(self, caf):
        rng = np.random.default_rng(3)
        for _ in range(5):
            f = float(rng.uniform(0, 30)) * KV
            m = int(rng.integers(-3, 4))
            h = stark_hamiltonian(caf, f, m, 8)
            assert np.array_equal(h, h.T)

    def test_rejects_bad_cutoff(self, caf):
        with pytest.raises(ValueError):
            stark_hamiltonian(caf, 0.0, 3, 2)


class TestDressedStates:
    def test_zero_field_spectrum(self, caf):
        tab = state_table(caf, 0.0, 12)
        b = caf.rotational_constant
        for n in range(5):
            assert tab[(n, 0)].energy == pytest.approx(b * n * (n + 1),
                                                       rel=1e-12, abs=1e-18)
        gap = tab[(1, 0)].energy - tab[(0, 0)].energy
        assert gap * units.AU_TO_GHZ == pytest.approx(2 * 10.267, rel=1e-12)

    def test_level_ordering_at_23kvcm(self, caf):
        tab = state_table(caf, 23.0)
        assert tab[(1, 1)].energy < tab[(1, 0)].energy < tab[(2, 0)].energy

    def test_cutoff_convergence(self, caf):
        e15 = state_table(caf, 25.0, 15)[(1, 0)].energy
        e20 = state_table(caf, 25.0, 20)[(1, 0)].energy
        assert abs(e20 - e15) < 1e-10 * caf.rotational_constant

    def test_composition_normalized_and_sign_fixed(self, caf):
        for s in field_dressed_states(caf, 23.0 * KV, 8):
            assert np.linalg.norm(s.composition) == pytest.approx(1.0,
                                                                  abs=1e-12)
            assert s.composition[np.argmax(np.abs(s.composition))] > 0

    def test_label_continuity_under_field_sweep(self, caf):
        prev = None
        for fk in np.arange(21.0, 21.1, 0.01):
            sts = field_dressed_states(caf, fk * KV, 10)
            cur = {s.label: s.composition for s in sts if s.m_n == 0}
            if prev is not None:
                for lab, comp in cur.items():
                    assert abs(np.dot(comp, prev[lab])) > 0.999
            prev = cur


class TestInducedDipole:
    def test_zero_field_no_dipole(self, caf):
        for s in field_dressed_states(caf, 0.0, 6):
            assert induced_dipole(s, caf) == pytest.approx(0.0, abs=1e-14)

    def test_shielding_state_dipole_range(self, caf):
        # (1,0) anti-aligns over the shielding window: -0.44 to -0.34 D
        d_lo = induced_dipole(state_table(caf, 21.7)[(1, 0)], caf)
        d_hi = induced_dipole(state_table(caf, 24.5)[(1, 0)], caf)
        assert d_lo * units.AU_TO_DEBYE == pytest.approx(-0.44, abs=0.01)
        assert d_hi * units.AU_TO_DEBYE == pytest.approx(-0.34, abs=0.01)
        ds = [induced_dipole(state_table(caf, fk)[(1, 0)], caf)
              for fk in np.linspace(21.7, 24.5, 8)]
        assert np.all(np.diff(ds) > 0)

    def test_hellmann_feynman(self, caf):
        f = 23.0 * KV
        df = 1e-5 * KV
        for lab in [(0, 0), (1, 0), (1, 1), (2, 0)]:
            state = [s for s in field_dressed_states(caf, f, 20)
                     if s.label == lab][0]
            d = induced_dipole(state, caf)
            e_plus = {s.label: s.energy
                      for s in field_dressed_states(caf, f + df, 20)}[lab]
            e_minus = {s.label: s.energy
                       for s in field_dressed_states(caf, f - df, 20)}[lab]
            slope = (e_plus - e_minus) / (2 * df)
            assert d == pytest.approx(-slope, rel=1e-6, abs=1e-12)

    def test_ground_state_alignment_grows(self, caf):
        ds = [induced_dipole(state_table(caf, fk)[(0, 0)], caf)
              for fk in np.linspace(5.0, 25.0, 6)]
        assert all(d > 0 for d in ds)          # aligned, -dE/dF > 0
        assert np.all(np.diff(ds) > 0)

    def test_dipole_sum_rule(self, caf):
        basis = DressedRotorBasis(caf, 23.0 * KV, 6)
        assert np.sum(basis.dipoles()) == pytest.approx(0.0, abs=1e-12)


class TestThresholdCrossings:
    @pytest.mark.parametrize("pair_b,f_expect,tol", [
        (((0, 0), (2, 0)), 21.55, 0.05),
        (((0, 0), (2, 1)), 20.20, 0.05),
        (((0, 0), (2, 2)), 18.3, 0.1),
    ])
    def test_crossing_fields(self, caf, pair_b, f_expect, tol):
        f = pair_threshold_crossing(caf, ((1, 0), (1, 0)), pair_b,
                                    ((f_expect - 1.5) * KV,
                                     (f_expect + 1.5) * KV), n_max=14)
        assert f * units.AU_TO_KVCM == pytest.approx(f_expect, abs=tol)

    def test_no_sign_change_raises(self, caf):
        with pytest.raises(ValueError):
            pair_threshold_crossing(caf, ((1, 0), (1, 0)), ((0, 0), (2, 0)),
                                    (23.0 * KV, 24.0 * KV), n_max=10)


class TestSpinStructure:
    def test_zeta_only_eigenvalues(self, caf):
        mod = MoleculeParams(caf.rotational_constant, caf.dipole, caf.mass,
                             gamma=0.0, zeta_f=caf.zeta_f, t_aniso=0.0,
                             c_f=0.0)
        sts = spin_dressed_states(mod, 23.0 * KV, 0.0, 6)
        base = state_table(mod, 23.0, 6)[(0, 0)].energy
        group = sorted([s for s in sts if s.label[:2] == (0, 0)],
                       key=lambda s: s.energy)
        shifts = [(s.energy - base) / mod.zeta_f for s in group]
        assert shifts[0] == pytest.approx(-0.75, abs=1e-9)
        for sh in shifts[1:]:
            assert sh == pytest.approx(0.25, abs=1e-9)
        assert [s.label[2] for s in group] == [0, 1, 1, 1]

    def test_hyperfine_spread_scale(self, caf):
        # the (0,0) manifold spans roughly the Fermi-contact splitting
        sts = spin_dressed_states(caf, 23.0 * KV, 0.0, 10)
        es = sorted(s.energy for s in sts if s.label[:2] == (0, 0))
        spread = (es[-1] - es[0]) * units.AU_TO_MHZ
        assert 100.0 < spread < 140.0

    def test_hermitian_and_blocked(self, caf):
        basis = DressedRotorBasis(caf, 23.0 * KV, 4)
        h = spin_hamiltonian(caf, basis, 5.0 * units.GAUSS_TO_AU)
        assert np.allclose(h, h.T, atol=1e-18)
        labels = [(s.label[0], s.label[1], g, mg)
                  for s in basis.states for (g, mg) in
                  ((0, 0), (1, -1), (1, 0), (1, 1))]
        m_f = np.array([lab[1] + lab[3] for lab in labels])
        off_block = h[np.ix_(m_f == 0, m_f == 1)]
        assert np.abs(off_block).max() == 0.0

    def test_zeeman_splits_symmetrically(self, caf):
        b = 10.0 * units.GAUSS_TO_AU
        t0 = {s.label: s.energy
              for s in spin_dressed_states(caf, 23.0 * KV, 0.0, 8)}
        tb = {s.label: s.energy
              for s in spin_dressed_states(caf, 23.0 * KV, b, 8)}
        up = tb[(0, 0, 1, 1)] - t0[(0, 0, 1, 1)]
        dn = tb[(0, 0, 1, -1)] - t0[(0, 0, 1, -1)]
        # first-order degenerate PT on the 4x4 spin block: +-g_s muB B / 2
        want = caf.g_s * units.MU_BOHR_AU * b / 2.0
        assert up == pytest.approx(want, rel=1e-3)
        assert dn == pytest.approx(-want, rel=1e-3)
        assert up + dn == pytest.approx(0.0, abs=1e-4 * want)

    def test_zero_b_time_reversal_degeneracy(self, caf):
        sts = spin_dressed_states(caf, 23.0 * KV, 0.0, 6)
        tab = {s.label: s.energy for s in sts}
        for lab, e in tab.items():
            mirror = (lab[0], -lab[1], lab[2], -lab[3])
            assert tab[mirror] == pytest.approx(e, abs=1e-15)

    def test_composition_norms(self, caf):
        for s in spin_dressed_states(caf, 22.0 * KV, 0.0, 5):
            assert np.linalg.norm(s.composition) == pytest.approx(1.0,
                                                                  abs=1e-12)

    def test_spin_channel_crossings(self, caf):
        from scipy.optimize import brentq

        def gap(fk, lab2):
            t = {s.label: s.energy
                 for s in spin_dressed_states(caf, fk * KV, 0.0, 12)}
            return 2 * t[(1, 0, 0, 0)] - (t[(0, 0, 0, 0)] + t[lab2])

        f0 = brentq(lambda x: gap(x, (2, 0, 0, 0)), 21.3, 22.0, xtol=1e-3)
        f1 = brentq(lambda x: gap(x, (2, 0, 1, 1)), 21.3, 22.0, xtol=1e-3)
        assert f0 == pytest.approx(21.55, abs=0.05)
        assert f1 == pytest.approx(21.66, abs=0.05)

    def test_t2_spin_operator_has_no_g0_elements(self):
        ops = spin_ops()
        for t2q in ops["t2_is"]:
            assert np.abs(t2q[0, :]).max() == 0.0
            assert np.abs(t2q[:, 0]).max() == 0.0


def test_preset_lookup_unknown():
    with pytest.raises(KeyError):
        molecule_from_preset("NaK")


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        MoleculeParams(rotational_constant=-1.0, dipole=1.0, mass=1.0)
    with pytest.raises(ValueError):
        MoleculeParams(rotational_constant=1.0, dipole=-0.1, mass=1.0)
