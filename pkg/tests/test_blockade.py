"""Blockade shift, overlap factors, and amplitude-equation integration.

Expected values were either computed analytically, taken from an exact
two-atom diagonalization oracle (full initial + coupled manifolds), or
frozen from converged runs of the released implementation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydtools.blockade import (
    AmplitudeState,
    EnsembleGeometry,
    ExcitationField,
    IntegrationError,
    _build_hamiltonian,
    blockade_shift,
    double_excitation_probability,
    effective_interaction_mhz,
    integrate_amplitudes,
    overlap_kappa,
    pair_state_basis,
    pair_state_count,
)
from rydtools.pair import build_vdd, forster_eigensystem


def two_atoms(r_um, theta=0.0):
    """Atom pair separated by r_um with axis at angle theta from z."""
    return EnsembleGeometry(
        np.array(
            [[0.0, 0.0, 0.0], [r_um * math.sin(theta), 0.0, r_um * math.cos(theta)]]
        )
    )


def xy_ring(n, spacing_um):
    """n atoms on a ring in the xy plane, nearest-neighbour distance fixed."""
    ang = 2 * math.pi / n
    rad = spacing_um / (2 * math.sin(ang / 2))
    return EnsembleGeometry(
        np.array(
            [[rad * math.cos(i * ang), rad * math.sin(i * ang), 0.0] for i in range(n)]
        )
    )


def exact_two_atom_inv_b2(channels, theta, r_um, target_m=0.5):
    """Oracle: diagonalize the full two-atom Hamiltonian over the initial
    and all coupled Zeeman manifolds, then sum overlap/energy^2 directly."""
    mats = [build_vdd(ch, theta) for ch in channels]
    ni = mats[0].shape[1]
    dims_c = [m.shape[0] for m in mats]
    h = np.zeros((ni + sum(dims_c),) * 2)
    off = ni
    for ch, m, dc in zip(channels, mats, dims_c):
        v = ch.c3_mhz_um3 / r_um**3 * m
        h[off : off + dc, :ni] = v
        h[:ni, off : off + dc] = v.T
        h[off : off + dc, off : off + dc] = np.eye(dc) * ch.defect_mhz
        off += dc
    vals, vecs = np.linalg.eigh(h)
    j = channels[0].initial[0].j
    dj = round(2 * j) + 1
    idx = round(target_m + j) * dj + round(target_m + j)
    ov = np.abs(vecs[idx, :]) ** 2
    good = np.abs(vals) > 1e-12
    return float(np.sum(ov[good] / vals[good] ** 2))


class TestGeometry:
    def test_counts_and_pairs(self):
        geo = two_atoms(5.0)
        assert geo.n == 2
        assert list(geo.pairs()) == [(0, 1)]
        assert geo.separation_um(0, 1) == pytest.approx(5.0, rel=1e-12)

    def test_axis_angles(self):
        assert two_atoms(3.0, 0.0).axis_theta_rad(0, 1) == pytest.approx(0.0, abs=1e-12)
        assert two_atoms(3.0, math.pi / 2).axis_theta_rad(0, 1) == pytest.approx(
            math.pi / 2, abs=1e-12
        )
        # opposite axis directions are the same physical configuration
        up = EnsembleGeometry(np.array([[0, 0, 0], [0, 0, 4.0]]))
        down = EnsembleGeometry(np.array([[0, 0, 4.0], [0, 0, 0]]))
        assert up.axis_theta_rad(0, 1) == down.axis_theta_rad(0, 1)

    def test_coincident_atoms_rejected(self):
        with pytest.raises(ValueError):
            EnsembleGeometry(np.array([[0, 0, 0], [0.0, 0.0, 0.0]]))

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            EnsembleGeometry(np.zeros((2, 2)))


class TestField:
    def test_collective_rabi_invariant(self):
        for n in (1, 2, 7, 50):
            f = ExcitationField.uniform(n, 1.7)
            assert f.omega_n_mhz == pytest.approx(
                math.sqrt(n) * f.omega_rms_mhz, rel=1e-12
            )

    def test_target_m(self):
        f = ExcitationField.uniform(2, 1.0, polarization=1, ground_m=0.5)
        assert f.target_m == 1.5
        assert ExcitationField.uniform(2, 1.0).target_m == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ExcitationField(rabi_mhz=np.zeros((0,)))


class TestOverlapKappa:
    def test_parseval_uniform(self, rb_43d_eigensystem):
        f = ExcitationField.uniform(2, 0.01)
        k = overlap_kappa(rb_43d_eigensystem, f, r_um=10.0)
        assert np.sum(np.abs(k) ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_single_state_completeness(self, rb_s60_eigensystem):
        # at theta=0 the driven s-pair product is itself a pair eigenstate
        f = ExcitationField.uniform(2, 0.01)
        w = np.abs(overlap_kappa(rb_s60_eigensystem, f, r_um=8.0)) ** 2
        assert np.sum(w > 1e-12) == 1
        assert w.max() == pytest.approx(1.0, abs=1e-12)

    def test_nonuniform_pair_prefactor(self, rb_s60_eigensystem):
        f = ExcitationField(rabi_mhz=np.array([1.0, 2.0]))
        k = overlap_kappa(rb_s60_eigensystem, f, pair=(0, 1), r_um=8.0)
        expected = (1.0 * 2.0 / f.omega_rms_mhz**2) ** 2
        assert np.sum(np.abs(k) ** 2) == pytest.approx(expected, rel=1e-12)

    def test_polarization_domain_error(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 0.01, polarization=2)
        with pytest.raises(ValueError):
            overlap_kappa(rb_s60_eigensystem, f, r_um=8.0)

    def test_angle_changes_weight_distribution(self, rb_43d_channels, rb_43d_eigensystem):
        f = ExcitationField.uniform(2, 0.01)
        w0 = np.sort(np.abs(overlap_kappa(rb_43d_eigensystem, f, r_um=10.0)) ** 2)
        side = forster_eigensystem(rb_43d_channels, math.pi / 2)
        w90 = np.sort(np.abs(overlap_kappa(side, f, r_um=10.0)) ** 2)
        assert np.sum(np.abs(w0 - w90)) > 0.5


class TestBlockadeShift:
    def test_single_state_b_equals_delta(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 0.01)
        shifts, vectors = pair_state_basis(rb_s60_eigensystem, 8.0)
        w = np.abs(overlap_kappa(rb_s60_eigensystem, f, r_um=8.0)) ** 2
        delta = shifts[int(np.argmax(w))]
        res = blockade_shift(two_atoms(8.0), f, rb_s60_eigensystem)
        assert res.b_mhz == pytest.approx(abs(delta), rel=1e-12)
        assert res.blockade_valid
        assert res.b_mhz > 0

    def test_brute_force_oracle_55s(self, rb_s55_channels, rb_s55_eigensystem):
        f = ExcitationField.uniform(2, 0.001)
        for theta in (0.0, math.pi / 2):
            b_exact = exact_two_atom_inv_b2(rb_s55_channels, theta, 10.0) ** -0.5
            b_model = blockade_shift(
                two_atoms(10.0, theta), f, rb_s55_eigensystem
            ).b_mhz
            assert b_model == pytest.approx(b_exact, rel=5e-3)

    def test_brute_force_oracle_43d(self, rb_43d_channels, rb_43d_eigensystem):
        f = ExcitationField.uniform(2, 0.001)
        b_model = {}
        b_exact = {}
        for theta in (0.0, math.pi / 2):
            b_exact[theta] = exact_two_atom_inv_b2(rb_43d_channels, theta, 10.0) ** -0.5
            b_model[theta] = blockade_shift(
                two_atoms(10.0, theta), f, rb_43d_eigensystem
            ).b_mhz
            assert b_model[theta] == pytest.approx(b_exact[theta], rel=0.01)
        ratio_model = b_model[0.0] / b_model[math.pi / 2]
        ratio_exact = b_exact[0.0] / b_exact[math.pi / 2]
        assert ratio_model == pytest.approx(ratio_exact, rel=0.02)

    def test_angular_stability_s_vs_d(self, rb_s55_eigensystem, rb_43d_eigensystem):
        f = ExcitationField.uniform(2, 0.001)
        thetas = np.linspace(0.0, math.pi / 2, 7)
        b_s = np.array(
            [
                blockade_shift(two_atoms(10.0, t), f, rb_s55_eigensystem).b_mhz
                for t in thetas
            ]
        )
        b_d = np.array(
            [
                blockade_shift(two_atoms(10.0, t), f, rb_43d_eigensystem).b_mhz
                for t in thetas
            ]
        )
        assert b_s.max() / b_s.min() < 1.2
        assert b_d.max() / b_d.min() > 5.0

    def test_zero_shift_short_circuit(self, rb_43d_channels):
        # stretched m=5/2 drive: the doubly-stretched pair state cannot
        # couple to p3/2+f5/2 along the axis, so its shift vanishes exactly
        one = forster_eigensystem(rb_43d_channels[:1])
        f = ExcitationField.uniform(2, 0.01, polarization=2)
        res = blockade_shift(two_atoms(10.0), f, one)
        assert res.b_mhz == 0.0
        assert not res.blockade_valid
        assert res.zero_term is not None
        assert math.isinf(res.p2)
        # the second channel lifts the zero
        both = forster_eigensystem(rb_43d_channels)
        res2 = blockade_shift(two_atoms(10.0), f, both)
        assert res2.b_mhz > 0
        assert res2.zero_term is None

    def test_removing_largest_term_increases_b(self, rb_43d_eigensystem):
        f = ExcitationField.uniform(2, 0.001)
        res = blockade_shift(two_atoms(10.0, 0.6), f, rb_43d_eigensystem)
        rows = [r for r in res.contributions if math.isfinite(r[-1])]
        assert rows == sorted(rows, key=lambda r: -r[-1])
        total = sum(r[-1] for r in rows)
        reduced = total - rows[0][-1]
        assert math.sqrt(1.0 / reduced) > res.b_mhz

    def test_equidistant_ring_matches_pair(self, rb_s60_eigensystem):
        # all ring pairs share separation and in-plane axis angle, so the
        # blockade average reduces to the two-atom value exactly
        b3 = blockade_shift(
            xy_ring(3, 6.0), ExcitationField.uniform(3, 0.01), rb_s60_eigensystem
        ).b_mhz
        b2 = blockade_shift(
            two_atoms(6.0, math.pi / 2),
            ExcitationField.uniform(2, 0.01),
            rb_s60_eigensystem,
        ).b_mhz
        assert b3 == pytest.approx(b2, rel=1e-12)

    def test_square_diagonals_weaken_blockade(self, rb_s60_eigensystem):
        side = 6.0
        square = EnsembleGeometry(
            np.array([[0, 0, 0], [side, 0, 0], [side, side, 0], [0, side, 0]], float)
        )
        b4 = blockade_shift(
            square, ExcitationField.uniform(4, 0.01), rb_s60_eigensystem
        ).b_mhz
        b3 = blockade_shift(
            xy_ring(3, side), ExcitationField.uniform(3, 0.01), rb_s60_eigensystem
        ).b_mhz
        assert b4 < b3

    def test_input_validation(self, rb_s60_eigensystem):
        with pytest.raises(ValueError):
            blockade_shift(
                two_atoms(8.0), ExcitationField.uniform(3, 0.01), rb_s60_eigensystem
            )
        with pytest.raises(ValueError):
            blockade_shift(
                EnsembleGeometry(np.zeros((1, 3))),
                ExcitationField.uniform(1, 0.01),
                rb_s60_eigensystem,
            )


class TestDoubleExcitation:
    def test_arithmetic(self):
        f = ExcitationField.uniform(2, 1.0 / math.sqrt(2))
        assert f.omega_n_mhz == pytest.approx(1.0, rel=1e-12)
        assert double_excitation_probability(f, 2, 10.0) == pytest.approx(
            0.0025, rel=1e-12
        )

    def test_large_n_saturates(self):
        b = 10.0
        limit = 1.0 / (2 * b**2)
        p50 = double_excitation_probability(
            ExcitationField.uniform(50, 1.0 / math.sqrt(50)), 50, b
        )
        assert p50 == pytest.approx(limit, rel=0.021)
        p500 = double_excitation_probability(
            ExcitationField.uniform(500, 1.0 / math.sqrt(500)), 500, b
        )
        assert p500 == pytest.approx(limit, rel=0.0021)

    def test_sentinels(self):
        f = ExcitationField.uniform(2, 100.0)
        assert math.isinf(double_excitation_probability(f, 2, 1.0))
        assert math.isinf(double_excitation_probability(f, 2, 0.0))
        assert double_excitation_probability(f, 1, 1.0) == 0.0


class TestIntegration:
    def test_two_level_limit(self):
        # with all doubly-excited states removed the dynamics is exact Rabi
        # oscillation at the collective frequency
        f = ExcitationField.uniform(2, 0.05)
        geo = two_atoms(4.0)
        for frac in (0.25, 0.5, 1.0):
            t = frac / f.omega_n_mhz
            out = integrate_amplitudes(AmplitudeState.ground(1, 0), geo, f, None, t)
            assert abs(out.c_g) ** 2 == pytest.approx(
                math.cos(math.pi * f.omega_n_mhz * t) ** 2, abs=1e-6
            )
            assert abs(out.norm_sq() - 1.0) < 1e-8

    def test_collective_speedup_sqrt2(self, rb_s60_eigensystem):
        omega = 0.05

        def first_minimum(geo, n, eig, guess):
            f = ExcitationField.uniform(n, omega)
            n_pairs = n * (n - 1) // 2
            st = AmplitudeState.ground(n_pairs, pair_state_count(eig))

            def ground_pop(t):
                return abs(integrate_amplitudes(st, geo, f, eig, t).c_g) ** 2

            lo, hi = 0.7 * guess, 1.3 * guess
            for _ in range(36):
                m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
                if ground_pop(m1) < ground_pop(m2):
                    hi = m2
                else:
                    lo = m1
            return 0.5 * (lo + hi)

        t1 = first_minimum(
            EnsembleGeometry(np.zeros((1, 3))), 1, None, 1.0 / (2 * omega)
        )
        t2 = first_minimum(
            two_atoms(4.0), 2, rb_s60_eigensystem, 1.0 / (2 * math.sqrt(2) * omega)
        )
        assert t1 / t2 == pytest.approx(math.sqrt(2), rel=1e-3)

    @pytest.mark.parametrize("n_atoms", [2, 3, 4])
    def test_perturbative_p2_oracle(self, rb_s60_eigensystem, n_atoms):
        geo = two_atoms(6.0) if n_atoms == 2 else xy_ring(n_atoms, 6.0)
        probe = ExcitationField.uniform(n_atoms, 0.01)
        b = blockade_shift(geo, probe, rb_s60_eigensystem).b_mhz
        f = ExcitationField.uniform(n_atoms, 0.0999 * b / math.sqrt(n_atoms))
        assert f.omega_n_mhz / b <= 0.1
        st = AmplitudeState.ground(
            n_atoms * (n_atoms - 1) // 2, pair_state_count(rb_s60_eigensystem)
        )
        out = integrate_amplitudes(
            st, geo, f, rb_s60_eigensystem, 1.0 / (2 * f.omega_n_mhz)
        )
        pert = double_excitation_probability(f, n_atoms, b)
        assert out.p2() == pytest.approx(pert, rel=0.25)
        assert abs(out.norm_sq() - 1.0) < 1e-8

    def test_perturbative_p2_tighter_at_weaker_drive(self, rb_s60_eigensystem):
        geo = xy_ring(3, 6.0)
        b = blockade_shift(
            geo, ExcitationField.uniform(3, 0.01), rb_s60_eigensystem
        ).b_mhz
        f = ExcitationField.uniform(3, 0.05 * b / math.sqrt(3))
        st = AmplitudeState.ground(3, pair_state_count(rb_s60_eigensystem))
        out = integrate_amplitudes(
            st, geo, f, rb_s60_eigensystem, 1.0 / (2 * f.omega_n_mhz)
        )
        assert out.p2() == pytest.approx(
            double_excitation_probability(f, 3, b), rel=0.2
        )

    def test_adiabatic_following(self, rb_s60_channels, rb_s60_eigensystem):
        geo = two_atoms(4.0)
        b = blockade_shift(
            geo, ExcitationField.uniform(2, 0.01), rb_s60_eigensystem
        ).b_mhz
        devs = {}
        for ratio in (0.02, 0.01):
            f = ExcitationField.uniform(2, ratio * b / math.sqrt(2))
            t = 0.25 / f.omega_n_mhz
            out = integrate_amplitudes(
                AmplitudeState.ground(1, 4), geo, f, rb_s60_eigensystem, t
            )
            shifts, _ = pair_state_basis(rb_s60_eigensystem, 4.0)
            kap = overlap_kappa(rb_s60_eigensystem, f, (0, 1), r_um=4.0)
            mask = (np.abs(kap) ** 2 > 1e-12) & (shifts != 0)
            predicted = -f.omega_n_mhz * kap[mask] / (2 * shifts[mask]) * out.c_s
            dev = np.max(
                np.abs(out.c_pairs[0][mask] - predicted) / np.abs(predicted)
            )
            devs[ratio] = dev
            assert dev < 5 * ratio / 2
            p2_adiabatic = float(np.sum(np.abs(predicted) ** 2))
            assert out.p2() == pytest.approx(p2_adiabatic, rel=5e-3)
        assert devs[0.01] < devs[0.02]

    def test_decay_damping(self, rb_s60_eigensystem):
        silent = ExcitationField(rabi_mhz=np.zeros(2))
        geo = two_atoms(8.0)
        single = AmplitudeState(c_g=0.0j, c_s=1.0 + 0.0j, c_pairs=np.zeros((1, 4), complex))
        out = integrate_amplitudes(
            single, geo, silent, rb_s60_eigensystem, 5.0, decay_tau_us=10.0
        )
        assert abs(out.c_s) ** 2 == pytest.approx(math.exp(-0.5), abs=1e-6)
        pair_amp = np.zeros((1, 4), complex)
        pair_amp[0, 0] = 1.0
        double = AmplitudeState(c_g=0.0j, c_s=0.0j, c_pairs=pair_amp)
        out2 = integrate_amplitudes(
            double, geo, silent, rb_s60_eigensystem, 5.0, decay_tau_us=10.0
        )
        assert np.sum(np.abs(out2.c_pairs) ** 2) == pytest.approx(
            math.exp(-1.0), abs=1e-6
        )

    def test_hamiltonian_hermitian(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 0.01)
        h = _build_hamiltonian(two_atoms(8.0), f, rb_s60_eigensystem)
        assert np.allclose(h, h.conj().T, atol=1e-14)
        hd = _build_hamiltonian(
            two_atoms(8.0), f, rb_s60_eigensystem, decay_tau_us=10.0
        )
        anti = (hd - hd.conj().T) / 2j
        assert np.all(np.diag(anti) <= 0)
        assert np.allclose(anti - np.diag(np.diag(anti)), 0, atol=1e-14)

    def test_step_failure_raises(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 0.05)
        with pytest.raises(IntegrationError):
            integrate_amplitudes(
                AmplitudeState.ground(1, 4),
                two_atoms(8.0),
                f,
                rb_s60_eigensystem,
                1.0,
                tol=0.0,
            )

    def test_state_shape_validation(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 0.05)
        with pytest.raises(ValueError):
            integrate_amplitudes(
                AmplitudeState.ground(1, 3),
                two_atoms(8.0),
                f,
                rb_s60_eigensystem,
                1.0,
            )

    @settings(max_examples=5, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    def test_norm_conserved_random_states(self, rb_s60_eigensystem, seed):
        rng = np.random.default_rng(seed)
        vec = rng.normal(size=6) + 1j * rng.normal(size=6)
        vec /= np.linalg.norm(vec)
        state = AmplitudeState(
            c_g=complex(vec[0]), c_s=complex(vec[1]), c_pairs=vec[2:].reshape(1, 4)
        )
        t = float(rng.uniform(0.1, 3.0))
        out = integrate_amplitudes(
            state,
            two_atoms(6.0),
            ExcitationField.uniform(2, 0.3),
            rb_s60_eigensystem,
            t,
        )
        assert abs(out.norm_sq() - 1.0) < 1e-8


class TestEffectiveInteraction:
    def test_weak_drive_limit(self, rb_s60_eigensystem):
        shifts, _ = pair_state_basis(rb_s60_eigensystem, 8.0)
        w = (
            np.abs(
                overlap_kappa(
                    rb_s60_eigensystem, ExcitationField.uniform(2, 1.0), r_um=8.0
                )
            )
            ** 2
        )
        nz = w > 1e-12
        for omega in (1e-4, 1e-3):
            f = ExcitationField.uniform(2, omega)
            dd = effective_interaction_mhz(f, rb_s60_eigensystem, 8.0)
            perturbative = float(np.sum(w[nz] * omega**2 / shifts[nz]))
            assert dd == pytest.approx(perturbative, rel=1e-3)

    def test_strong_drive_plateau(self, rb_s60_eigensystem):
        shifts, _ = pair_state_basis(rb_s60_eigensystem, 8.0)
        w = (
            np.abs(
                overlap_kappa(
                    rb_s60_eigensystem, ExcitationField.uniform(2, 1.0), r_um=8.0
                )
            )
            ** 2
        )
        plateau = float(np.sum(shifts[w > 1e-12]))
        d3 = effective_interaction_mhz(
            ExcitationField.uniform(2, 1e3), rb_s60_eigensystem, 8.0
        )
        d4 = effective_interaction_mhz(
            ExcitationField.uniform(2, 1e4), rb_s60_eigensystem, 8.0
        )
        assert d3 == pytest.approx(plateau, rel=1e-5)
        assert d4 == pytest.approx(plateau, rel=1e-7)

    def test_interior_maximum(self, rb_s60_eigensystem):
        f = ExcitationField.uniform(2, 1.0)
        rs = np.linspace(2.0, 30.0, 57)
        vals = [abs(effective_interaction_mhz(f, rb_s60_eigensystem, r)) for r in rs]
        i = int(np.argmax(vals))
        assert 0 < i < len(rs) - 1
        fine = np.linspace(rs[i - 1], rs[i + 1], 201)
        peak = max(
            abs(effective_interaction_mhz(f, rb_s60_eigensystem, r)) for r in fine
        )
        # a single dominant pair state saturates at Omega/2 when its shift
        # sweeps through Omega
        assert peak == pytest.approx(0.5, rel=1e-3)

    def test_zero_drive_rejected(self, rb_s60_eigensystem):
        with pytest.raises(ValueError):
            effective_interaction_mhz(
                ExcitationField(rabi_mhz=np.zeros(2)), rb_s60_eigensystem, 8.0
            )
