import cmath
import math

import numpy as np
import pytest

from quasiid import INTEGERS, CharacteristicTriplet, Lattice, RepresentationKind, SignedAtomicMeasure
from quasiid.lattice import LatticeDistribution, analyze_finite
from quasiid.triplet import (
    CharacteristicPair,
    affine_transform,
    convolve_triplets,
    g_c,
    gaussian_variance_probe,
    pair_to_triplet,
    psi_eval,
    rebase_gamma,
    triplet_to_pair,
    validate_necessary,
)

M = SignedAtomicMeasure
K = RepresentationKind


def trip(a=0.0, atoms=None, gamma=0.0, kind=K.DRIFT):
    return CharacteristicTriplet(a, M(atoms or {}), gamma, kind)


class TestTripletModel:
    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            trip(a=-1.0)

    def test_atom_at_origin_rejected(self):
        with pytest.raises(ValueError):
            trip(atoms={0.0: 1.0})

    def test_json_round_trip(self):
        t = CharacteristicTriplet(0.5, M.from_indices([1, -2], [0.3, -0.1]), 1.25, K.CENTER)
        d = t.to_dict()
        assert d["kind"] == "center"
        back = CharacteristicTriplet.from_dict(d)
        assert back.a == t.a and back.gamma == t.gamma and back.kind is K.CENTER and back.nu == t.nu


class TestGc:
    def test_origin_value(self):
        assert g_c(0.0, 3.0) == -4.5

    def test_zero_frequency(self):
        assert g_c(2.7, 0.0) == 0

    def test_period(self):
        assert abs(g_c(2.0, math.pi)) < 1e-15

    def test_continuity_at_origin(self):
        assert abs(g_c(1e-6, 1.3) - g_c(0.0, 1.3)) < 1e-5

    def test_bounded_in_x(self):
        x = np.linspace(-50, 50, 2001)
        assert np.max(np.abs(g_c(x, 2.0))) < 2 + 2 + 2 * 2

    def test_only_standard(self):
        with pytest.raises(ValueError):
            g_c(1.0, 1.0, K.DRIFT)


class TestPsi:
    def test_gaussian(self):
        for kind in K:
            assert psi_eval(trip(a=2.0, kind=kind), 1.5) == pytest.approx(-2.25)

    def test_poisson(self):
        z = 0.7
        assert psi_eval(trip(atoms={1.0: 3.0}), z) == pytest.approx(3.0 * (cmath.exp(1j * z) - 1), abs=1e-15)

    def test_bernoulli_at_pi(self):
        t = analyze_finite(LatticeDistribution.bernoulli(0.75)).triplet
        mu_hat = 0.25 + 0.75 * cmath.exp(1j * math.pi)
        assert cmath.exp(psi_eval(t, math.pi)) == pytest.approx(mu_hat, abs=1e-12)

    def test_standard_kind_compensates_small_jumps(self):
        t = trip(atoms={0.5: 2.0, 3.0: 1.0}, gamma=0.2, kind=K.STANDARD)
        z = 1.1
        want = 0.2j * z + 2.0 * (cmath.exp(0.5j * z) - 1 - 0.5j * z) + (cmath.exp(3j * z) - 1)
        assert psi_eval(t, z) == pytest.approx(want, abs=1e-14)

    def test_vectorised(self):
        t = trip(atoms={1.0: 1.0, -2.0: 0.5})
        z = np.array([0.0, 1.0, 2.0])
        assert np.allclose(psi_eval(t, z), [psi_eval(t, v) for v in z])


class TestPairConversion:
    def test_gaussian_only(self):
        t = pair_to_triplet(CharacteristicPair(M({0.0: 2.0}), 0.0))
        assert t.a == 2.0 and not t.nu

    def test_small_jump_rescaled(self):
        t = pair_to_triplet(CharacteristicPair(M({0.5: 0.25}), 0.0))
        assert dict(t.nu.items()) == {0.5: 1.0}

    def test_large_jump_kept(self):
        t = pair_to_triplet(CharacteristicPair(M({2.0: 1.0}), 0.0))
        assert dict(t.nu.items()) == {2.0: 1.0}

    def test_negative_origin_mass_rejected(self):
        with pytest.raises(ValueError):
            pair_to_triplet(CharacteristicPair(M({0.0: -0.1}), 0.0))

    def test_round_trip_on_lattice(self):
        t = CharacteristicTriplet(0.3, M.from_indices([-3, 1, 4], [0.5, -0.2, 0.1], Lattice(0.0, 0.5)), 1.0, K.STANDARD)
        back = pair_to_triplet(triplet_to_pair(t))
        assert back.a == t.a and back.gamma == t.gamma
        assert back.nu.allclose(t.nu, atol=1e-15)


class TestRebase:
    def test_far_atom(self):
        t = trip(atoms={2.0: 1.0}, gamma=0.4, kind=K.STANDARD)
        assert rebase_gamma(t, K.DRIFT).gamma == 0.4
        assert rebase_gamma(t, K.CENTER).gamma == pytest.approx(2.4)

    def test_identity(self):
        t = trip(atoms={0.5: 1.0}, gamma=0.4, kind=K.STANDARD)
        assert rebase_gamma(t, K.STANDARD) is t

    def test_bernoulli_center_is_mean(self):
        p = 0.75
        t = analyze_finite(LatticeDistribution.bernoulli(p)).triplet
        # sum_m (-m) nu({-m}) with nu({-m}) = (-1)^(m+1) r^m / m, r = (1-p)/p
        r = (1 - p) / p
        series = math.fsum(-((-1) ** (m + 1)) * r ** m for m in range(1, 200))
        assert series == pytest.approx(-(1 - p), abs=1e-15)
        assert rebase_gamma(t, K.CENTER).gamma == pytest.approx(1 + series, abs=1e-12)


class TestTransforms:
    def test_convolution_adds_exponents(self):
        t1 = trip(a=0.5, atoms={1.0: 0.3, -0.5: -0.1}, gamma=0.2, kind=K.STANDARD)
        t2 = trip(atoms={2.0: 0.7}, gamma=-1.0, kind=K.CENTER)
        s = convolve_triplets(t1, t2)
        z = np.linspace(-4, 4, 17)
        assert np.allclose(psi_eval(s, z), psi_eval(t1, z) + psi_eval(t2, z), atol=1e-12)

    @pytest.mark.parametrize("kind", list(K))
    def test_affine_map(self, kind):
        t = trip(a=0.2, atoms={0.5: 0.4, 1.5: -0.1, -3.0: 0.2}, gamma=0.3, kind=kind)
        m, b = -1.7, 0.4
        u = affine_transform(t, m, b)
        z = np.linspace(-3, 3, 13)
        lhs = np.exp(psi_eval(u, z))
        rhs = np.exp(1j * b * z) * np.exp(psi_eval(t, m * z))
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_affine_keeps_lattice(self):
        t = CharacteristicTriplet(0.0, M.from_indices([1, 2], [0.3, 0.1]), 0.0)
        u = affine_transform(t, 2.0, 0.5)
        assert list(u.nu.locations()) == [2.0, 4.0]
        assert u.gamma == 0.5

    def test_zero_dilation_rejected(self):
        with pytest.raises(ValueError):
            affine_transform(trip(), 0.0)


class TestVarianceProbe:
    def test_pure_gaussian(self):
        probe = gaussian_variance_probe(lambda z: -1.5 * z * z, 10.0)
        assert all(v == pytest.approx(3.0) for v in probe.values)
        assert probe.estimate == pytest.approx(3.0)
        assert probe.spread == pytest.approx(0.0, abs=1e-12)

    def test_poisson_exponent_tends_to_zero(self):
        lam = 2.0
        probe = gaussian_variance_probe(lambda z: lam * (cmath.exp(1j * z) - 1), 200.0)
        for z, v in zip(probe.z, probe.values):
            assert abs(v) <= 4 * lam / z ** 2
        assert abs(probe.estimate) < 1e-2

    def test_rejects_bad_zmax(self):
        with pytest.raises(ValueError):
            gaussian_variance_probe(lambda z: 0j, 0.0)


class TestValidateNecessary:
    def test_counterexample_fails_total_mass(self):
        rep = validate_necessary(CharacteristicTriplet(0.0, M({1.0: 1.0, 3.0: -2.0}), 0.0))
        assert not rep.passed
        assert "total_mass" in rep.failed

    def test_positive_measure_passes(self):
        rep = validate_necessary(CharacteristicTriplet(0.7, M({1.0: 1.0, -3.0: 0.5, 0.2: 4.0}), 2.0))
        assert rep.passed
        skipped = [c.name for c in rep.checks if not c.applicable]
        assert skipped == ["total_mass", "truncated_first_moment"]

    def test_bernoulli_triplet_passes(self):
        rep = validate_necessary(analyze_finite(LatticeDistribution.bernoulli(0.75)).triplet)
        assert rep.passed and len(rep.checks) == 5

    def test_cosine_bound_catches_dominant_negative_part(self):
        t = CharacteristicTriplet(0.0, M({1.0: 0.1, 2.0: -0.5}), 0.0)
        rep = validate_necessary(t)
        assert "cosine_bound" in rep.failed

    def test_report_serialises(self):
        d = validate_necessary(CharacteristicTriplet(0.0, M.zero(INTEGERS), 0.0)).to_dict()
        assert d["passed"] and len(d["checks"]) == 5
