import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls.lattice import (
    DataError,
    FieldL,
    InvalidSiteError,
    LatticeShape,
    ball,
    constant_generator,
    dump_field,
    embed_lookup,
    hashed_noise_generator,
    load_field,
    point_source,
    regularized_abs,
    torus_dist_inf,
    truncate,
    wrap_add,
)


class TestLatticeShape:
    def test_derived_quantities(self):
        shape = LatticeShape(d=2, L=3)
        assert shape.side == 7
        assert shape.volume == 49
        assert shape.side % 2 == 1

    def test_single_site_box_allowed(self):
        shape = LatticeShape(d=1, L=0)
        assert shape.volume == 1
        assert list(shape.sites()) == [(0,)]

    @pytest.mark.parametrize("d,L", [(0, 3), (1, -1), (-2, 2)])
    def test_invalid_parameters(self, d, L):
        with pytest.raises(ValueError):
            LatticeShape(d=d, L=L)

    def test_sites_storage_order(self):
        shape = LatticeShape(d=2, L=1)
        sites = list(shape.sites())
        assert sites[0] == (-1, -1)
        assert sites[1] == (-1, 0)
        assert sites[-1] == (1, 1)
        assert len(sites) == 9

    def test_require_site(self):
        shape = LatticeShape(d=1, L=2)
        assert shape.require_site([2]) == (2,)
        with pytest.raises(InvalidSiteError):
            shape.require_site((3,))
        with pytest.raises(InvalidSiteError):
            shape.require_site((0, 0))


class TestWrapAdd:
    def test_reduction_into_box(self):
        # 2 + 1 = 3 == -2 mod 5
        assert wrap_add(LatticeShape(1, 2), (2,), (1,)) == (-2,)

    def test_additive_identity(self):
        shape = LatticeShape(2, 3)
        assert wrap_add(shape, (2, -3), (0, 0)) == (2, -3)

    def test_per_coordinate_reduction(self):
        assert wrap_add(LatticeShape(2, 1), (1, 1), (1, 1)) == (-1, -1)

    def test_rejects_out_of_box(self):
        with pytest.raises(InvalidSiteError):
            wrap_add(LatticeShape(1, 2), (3,), (0,))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.data())
    def test_group_laws(self, L, data):
        shape = LatticeShape(1, L)
        coord = st.integers(-L, L)
        x = (data.draw(coord),)
        y = (data.draw(coord),)
        z = (data.draw(coord),)
        assert wrap_add(shape, x, y) == wrap_add(shape, y, x)
        assert wrap_add(shape, wrap_add(shape, x, y), z) == wrap_add(shape, x, wrap_add(shape, y, z))
        assert wrap_add(shape, x, tuple(-c for c in x)) == (0,)


class TestTorusDist:
    def test_self_distance_zero(self):
        shape = LatticeShape(2, 3)
        assert torus_dist_inf(shape, (1, -2), (1, -2)) == 0

    def test_wrap_around_shorter(self):
        assert torus_dist_inf(LatticeShape(1, 2), (-2,), (2,)) == 1

    def test_2d_example(self):
        assert torus_dist_inf(LatticeShape(2, 3), (3, 0), (-3, 1)) == 1

    @pytest.mark.parametrize("d,L", [(1, 3), (2, 2)])
    def test_metric_axioms_exhaustive(self, d, L):
        shape = LatticeShape(d, L)
        sites = list(shape.sites())
        for x, y in itertools.product(sites, repeat=2):
            dxy = torus_dist_inf(shape, x, y)
            assert dxy == torus_dist_inf(shape, y, x)
            assert (dxy == 0) == (x == y)
            assert 0 <= dxy <= L
        for x, y, z in itertools.product(sites[::2], sites[::2], sites[::2]):
            assert torus_dist_inf(shape, x, z) <= (
                torus_dist_inf(shape, x, y) + torus_dist_inf(shape, y, z)
            )


class TestBall:
    def test_radius_zero(self):
        shape = LatticeShape(2, 3)
        assert ball(shape, (1, 1), 0) == [(1, 1)]

    def test_small_radius_count(self):
        assert len(ball(LatticeShape(1, 5), (0,), 1)) == 3

    def test_capped_at_volume(self):
        b = ball(LatticeShape(1, 1), (0,), 2)
        assert sorted(b) == [(-1,), (0,), (1,)]

    @pytest.mark.parametrize("d,L,r", [(1, 4, 2), (2, 3, 1), (2, 2, 3)])
    def test_count_and_membership(self, d, L, r):
        shape = LatticeShape(d, L)
        x = (1,) * d
        b = ball(shape, x, r)
        assert len(b) == len(set(b)) == min((2 * r + 1) ** d, shape.volume)
        for y in b:
            assert torus_dist_inf(shape, x, y) <= r
        for y in shape.sites():
            if torus_dist_inf(shape, x, y) <= r:
                assert y in b

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            ball(LatticeShape(1, 2), (0,), -1)


class TestFieldL:
    def test_wrong_size_rejected(self):
        with pytest.raises(DataError):
            FieldL(LatticeShape(1, 2), np.zeros(4, dtype=complex))

    def test_nonfinite_rejected(self):
        values = np.zeros(5, dtype=complex)
        values[2] = np.nan
        with pytest.raises(DataError):
            FieldL(LatticeShape(1, 2), values)

    def test_values_frozen(self):
        f = FieldL.zero(LatticeShape(1, 2))
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_does_not_freeze_caller_array(self):
        arr = np.ones(5, dtype=complex)
        FieldL(LatticeShape(1, 2), arr)
        arr[0] = 2.0  # still writable

    def test_at_uses_true_coordinates(self):
        shape = LatticeShape(1, 2)
        f = FieldL(shape, np.arange(5, dtype=complex))
        assert f.at((-2,)) == 0
        assert f.at((2,)) == 4


class TestGenerators:
    def test_constant_truncation(self):
        f = truncate(constant_generator(2 - 1j), LatticeShape(2, 2))
        assert np.all(f.values == 2 - 1j)

    def test_truncations_agree_on_overlap(self):
        gen = hashed_noise_generator(seed=7, envelope_exponent=0.45)
        small = truncate(gen, LatticeShape(1, 4))
        big = truncate(gen, LatticeShape(1, 8))
        for x in small.shape.sites():
            assert small.at(x) == big.at(x)

    def test_trunc_embed_roundtrip(self):
        shape = LatticeShape(1, 3)
        f = truncate(hashed_noise_generator(seed=3), shape)
        again = truncate(lambda z: embed_lookup(f, z), shape)
        assert np.array_equal(f.values, again.values)

    def test_generator_purity(self):
        gen_a = hashed_noise_generator(seed=42, envelope_exponent=0.3)
        gen_b = hashed_noise_generator(seed=42, envelope_exponent=0.3)
        for z in [(0,), (5,), (-17,), (123456,)]:
            assert gen_a(z) == gen_b(z)
        assert gen_a((1,)) != hashed_noise_generator(seed=43, envelope_exponent=0.3)((1,))

    def test_envelope_bound(self):
        gen = hashed_noise_generator(seed=11, envelope_exponent=0.45, amplitude=0.8)
        for z in [(0,), (3,), (-40,), (250,)]:
            assert abs(gen(z)) <= 0.8 * regularized_abs(z) ** 0.45 + 1e-15

    def test_point_source(self):
        gen = point_source(3j)
        assert gen((0,)) == 3j
        assert gen((1,)) == 0
        f = truncate(gen, LatticeShape(1, 4))
        assert f.at((0,)) == 3j
        assert abs(f.values).sum() == 3.0

    def test_nonfinite_generator_rejected(self):
        bad = constant_generator(1.0)
        with pytest.raises(DataError):
            truncate(lambda z: math.inf, LatticeShape(1, 1))
        truncate(bad, LatticeShape(1, 1))


class TestEmbedLookup:
    def test_inside_box(self):
        f = FieldL(LatticeShape(1, 2), np.arange(5, dtype=complex))
        assert embed_lookup(f, (1,)) == f.at((1,))

    def test_wraps_outside(self):
        f = FieldL(LatticeShape(1, 2), np.arange(5, dtype=complex))
        assert embed_lookup(f, (7,)) == f.at((2,))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(-30, 30), st.integers(0, 3))
    def test_periodicity(self, z, axis_shift):
        shape = LatticeShape(1, 3)
        f = truncate(hashed_noise_generator(seed=5), shape)
        assert embed_lookup(f, (z,)) == embed_lookup(f, (z + shape.side,))
        assert embed_lookup(f, (z,)) == embed_lookup(f, (z - 2 * shape.side,))

    def test_dimension_mismatch(self):
        f = FieldL.zero(LatticeShape(1, 2))
        with pytest.raises(InvalidSiteError):
            embed_lookup(f, (1, 2))


class TestDump:
    def test_roundtrip_exact(self, tmp_path):
        shape = LatticeShape(2, 2)
        rng = np.random.default_rng(0)
        f = FieldL(shape, rng.standard_normal(shape.dims) + 1j * rng.standard_normal(shape.dims))
        path = tmp_path / "field.txt"
        dump_field(f, path)
        g = load_field(path)
        assert g.shape == shape
        assert np.array_equal(f.values, g.values)

    def test_header_and_order(self, tmp_path):
        shape = LatticeShape(1, 1)
        f = FieldL(shape, np.array([1 + 2j, 0j, -1j]))
        path = tmp_path / "field.txt"
        dump_field(f, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "1 1"
        assert lines[1].startswith("-1 ")
        assert lines[3].startswith("1 ")

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 1\n-1 0.0 0.0\n0 0.0 0.0\n")
        with pytest.raises(DataError):
            load_field(path)
        path.write_text("1 1\n0 0.0 0.0\n-1 0.0 0.0\n1 0.0 0.0\n")
        with pytest.raises(DataError):
            load_field(path)
