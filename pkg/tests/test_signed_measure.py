import math
from collections import defaultdict

import numpy as np
import pytest

from quasiid import INTEGERS, Lattice, Region, SignedAtomicMeasure
from quasiid.signed_measure import (
    ComplexAtomicMeasure,
    convolve,
    convolve_power,
    exp_measure,
    fourier_eval,
    fourier_increment,
    hahn_jordan,
    l1_distance,
    restrict,
)
from quasiid.lattice import LatticeDistribution, analyze_finite

M = SignedAtomicMeasure


def brute_convolve(a: dict, b: dict) -> dict:
    out = defaultdict(float)
    for x, u in a.items():
        for y, v in b.items():
            out[x + y] += u * v
    return {k: v for k, v in out.items() if v != 0}


def as_dict(m: SignedAtomicMeasure) -> dict:
    return dict(m.items())


class TestConstruction:
    def test_zero_weights_are_dropped(self):
        m = M({0.0: 1.0, 1.0: 0.0})
        assert m.items() == [(0.0, 1.0)]

    def test_cancelling_entries_vanish(self):
        m = M([(2.0, 0.5), (2.0, -0.5), (3.0, 1.0)])
        assert as_dict(m) == {3.0: 1.0}

    def test_lattice_rejects_off_grid_location(self):
        with pytest.raises(ValueError):
            M({0.3: 1.0}, lattice=INTEGERS)

    def test_lattice_keys_are_indices(self):
        lat = Lattice(0.5, 2.0)
        m = M({2.5: 1.0, -1.5: 2.0}, lattice=lat)
        assert list(m.indices()) == [-1, 1]
        assert list(m.locations()) == [-1.5, 2.5]

    def test_json_round_trip_lattice(self):
        m = M.from_indices([-2, 5], [0.25, -1.5], Lattice(1.0, 2.0))
        back = M.from_dict(m.to_dict())
        assert back == m and back.lattice == m.lattice
        assert m.to_dict()["atoms"][0] == [-3.0, 0.25, -2]

    def test_json_round_trip_float(self):
        m = M({0.1: 2.0, -3.7: -1.0})
        d = m.to_dict()
        assert d["lattice"] is None
        assert M.from_dict(d) == m

    def test_immutable(self):
        m = M({1.0: 1.0})
        with pytest.raises(AttributeError):
            m.foo = 1

    def test_total_variation_and_mass(self):
        m = M({1.0: 1.0, 3.0: -2.0})
        assert m.total_mass() == -1.0
        assert m.total_variation() == 3.0


class TestHahnJordan:
    def test_sign_split(self):
        d = hahn_jordan(M({1.0: 1.0, 3.0: -2.0}))
        assert as_dict(d.positive) == {1.0: 1.0}
        assert as_dict(d.negative) == {3.0: 2.0}
        assert as_dict(d.total_variation) == {1.0: 1.0, 3.0: 2.0}

    def test_zero_measure(self):
        d = hahn_jordan(M.zero())
        assert not d.positive and not d.negative and not d.total_variation

    def test_mixed_example(self):
        d = hahn_jordan(M({-1.0: 0.5, 2.0: -0.25}))
        assert as_dict(d.positive) == {-1.0: 0.5}
        assert as_dict(d.negative) == {2.0: 0.25}
        assert d.total_variation.total_mass() == 0.75


class TestConvolve:
    def test_diracs(self):
        assert as_dict(convolve(M({1.5: 1.0}), M({-4.0: 1.0}))) == {-2.5: 1.0}

    def test_binomial(self):
        b = M({0.0: 0.5, 1.0: 0.5}, lattice=INTEGERS)
        assert as_dict(convolve(b, b)) == {0.0: 0.25, 1.0: 0.5, 2.0: 0.25}

    def test_signed_cancellation(self):
        out = convolve(M({0.0: 1.0, 1.0: -1.0}), M({0.0: 1.0, 1.0: 1.0}))
        assert as_dict(out) == {0.0: 1.0, 2.0: -1.0}

    def test_matches_brute_force_on_float_atoms(self):
        rng = np.random.default_rng(3)
        a = {float(x): float(w) for x, w in zip(rng.normal(size=6), rng.normal(size=6))}
        b = {float(x): float(w) for x, w in zip(rng.normal(size=5), rng.normal(size=5))}
        got = as_dict(convolve(M(a), M(b)))
        want = brute_convolve(a, b)
        assert len(got) == len(want)
        for (x, w), (y, v) in zip(sorted(got.items()), sorted(want.items())):
            assert x == pytest.approx(y, abs=1e-12)
            assert w == pytest.approx(v, abs=1e-12)

    def test_sparse_lattice_path(self):
        a = M.from_indices([0, 10_000], [1.0, 2.0])
        b = M.from_indices([0, 7_000], [1.0, -1.0])
        assert as_dict(convolve(a, b)) == {0.0: 1.0, 7000.0: -1.0, 10000.0: 2.0, 17000.0: -2.0}

    def test_shifted_lattices_combine_exactly(self):
        a = M.from_indices([0, 1], [0.5, 0.5], Lattice(0.5, 1.0))
        b = M.from_indices([0, 1], [0.5, 0.5], Lattice(0.25, 1.0))
        out = convolve(a, b)
        assert out.lattice is not None and out.lattice.spacing == 1.0
        assert list(out.locations()) == [0.75, 1.75, 2.75]

    def test_power(self):
        assert as_dict(convolve_power(M({-1.0: 1.0}, lattice=INTEGERS), 7)) == {-7.0: 1.0}
        b = M({0.0: 0.5, 1.0: 0.5}, lattice=INTEGERS)
        assert as_dict(convolve_power(b, 2)) == {0.0: 0.25, 1.0: 0.5, 2.0: 0.25}
        assert convolve_power(b, 1) == b
        with pytest.raises(ValueError):
            convolve_power(b, 0)

    def test_power_matches_triple_convolution(self):
        rng = np.random.default_rng(11)
        z = M.from_indices(rng.choice(np.arange(-6, 7), 5, replace=False), rng.normal(size=5))
        assert convolve_power(z, 3).allclose(convolve(convolve(z, z), z), atol=1e-12)


class TestExpMeasure:
    def test_poisson_numerators(self):
        res = exp_measure(M({1.0: 1.0}, lattice=INTEGERS))
        for n in range(8):
            assert res.measure.weight_at(float(n)) == pytest.approx(1.0 / math.factorial(n), abs=1e-15)
        assert res.tail_bound < 1e-15

    def test_zero(self):
        res = exp_measure(M.zero(INTEGERS))
        assert as_dict(res.measure) == {0.0: 1.0}
        assert res.terms == 0

    def test_recovers_bernoulli_from_its_quasi_levy_measure(self):
        mu = LatticeDistribution.bernoulli(0.75)
        res = analyze_finite(mu)
        nu = res.triplet.nu
        ex = exp_measure(nu).measure * math.exp(-nu.total_mass())
        shifted = ex.map_affine(1.0, res.triplet.gamma)
        for k in range(-5, 5):
            assert shifted.weight_at(float(k)) == pytest.approx(mu.mass_at_index(k), abs=1e-9)

    def test_nonpositive_tolerance_rejected(self):
        with pytest.raises(ValueError):
            exp_measure(M({1.0: 1.0}), tail_tol=0.0)


class TestFourierAndDistance:
    def test_values(self):
        assert fourier_eval(M({0.0: 1.0}), 2.3) == 1.0
        assert abs(fourier_eval(M({0.0: 0.5, 1.0: 0.5}), np.pi)) < 1e-16
        assert fourier_eval(M({1.0: 1.0, 3.0: -2.0}), 0.0) == -1.0

    def test_vectorised_matches_direct_sum(self):
        m = M({0.3: 1.0, -2.0: -0.5, 4.0: 0.25})
        z = np.linspace(-3, 3, 7)
        direct = [sum(w * np.exp(1j * zz * x) for x, w in m.items()) for zz in z]
        assert np.allclose(fourier_eval(m, z), direct, atol=1e-14)

    def test_bounded_by_total_variation(self):
        m = M({0.3: 1.0, -2.0: -0.5})
        assert np.all(np.abs(fourier_eval(m, np.linspace(0, 20, 50))) <= m.total_variation() + 1e-15)

    def test_l1(self):
        z = M({0.0: 0.3})
        assert l1_distance(z, z) == 0.0
        assert l1_distance(M({1.0: 1.0}), M({2.0: 1.0})) == 2.0
        assert l1_distance(M({0.0: 0.3}), M({0.0: 0.1, 1.0: 0.1})) == pytest.approx(0.3)


class TestRestrict:
    def test_drop_origin(self):
        assert as_dict(restrict(M({0.0: 1.0, 1.0: 1.0}), Region.nonzero())) == {1.0: 1.0}

    def test_empty_and_everything(self):
        z = M({0.0: 1.0, -2.0: 3.0})
        assert not restrict(z, Region.empty())
        assert restrict(z, Region.everything()) == z

    def test_half_open_interval(self):
        z = M({0.0: 1.0, 1.0: 2.0, 2.0: 3.0})
        assert as_dict(restrict(z, Region.interval(0.0, 2.0, (False, True)))) == {1.0: 2.0, 2.0: 3.0}
        assert as_dict(restrict(z, Region.interval(0.0, 2.0).inverted())) == {}


def test_complex_measure_real_part():
    c = ComplexAtomicMeasure({1: 0.5 + 1e-12j, 2: -0.25 + 0j})
    assert as_dict(c.real_part()) == {1.0: 0.5, 2.0: -0.25}
    with pytest.raises(ValueError):
        ComplexAtomicMeasure({1: 1j}).real_part()


class TestFourierIncrement:
    @pytest.mark.parametrize("lattice", [INTEGERS, Lattice(0.25, 0.5)])
    def test_block_path_matches_direct_sum(self, lattice):
        rng = np.random.default_rng(3)
        idx = np.concatenate((np.arange(-700, 0), np.arange(1, 900, 2)))
        z = M.from_indices(idx, rng.normal(size=idx.size) / idx.size, lattice)
        freqs = rng.uniform(-7, 7, 50)
        direct = (np.exp(1j * np.multiply.outer(freqs, z.locations())) - 1.0) @ z.weights()
        assert np.allclose(fourier_increment(z, freqs), direct, atol=1e-12, rtol=0)

    def test_exact_zero_and_small_frequency(self):
        z = M.from_indices(np.arange(1, 2000), 1.0 / np.arange(1, 2000) ** 2)
        assert fourier_increment(z, [0.0])[0] == 0
        eps = 1e-9
        got = fourier_increment(z, [eps])[0]
        # first order: i eps sum x w
        assert got.imag == pytest.approx(eps * math.fsum(1.0 / np.arange(1, 2000)), rel=1e-9)

    def test_sparse_and_float_measures(self):
        z = M.from_indices([-10 ** 6, 3, 10 ** 6], [0.1, 0.2, 0.3])
        f = M({0.3: 1.0, -2.5: 0.5})
        freqs = np.array([0.0, 0.1, 2.0])
        for m in (z, f):
            direct = (np.exp(1j * np.multiply.outer(freqs, m.locations())) - 1.0) @ m.weights()
            assert np.allclose(fourier_increment(m, freqs), direct, atol=1e-12)
