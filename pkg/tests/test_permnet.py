import itertools

import numpy as np
import pytest

from core.errors import UnsupportedPermutationError, ValidationError
from core.permnet import (
    BenesNetwork,
    IndexMap,
    RoutingCache,
    apply,
    index_permutation,
    is_bit_permute,
    relocate_vector,
    route,
    route_permutation,
    target_ordering,
)
from core.qstate import QubitOrdering


def random_ordering(rng, n):
    return QubitOrdering(tuple(int(b) for b in rng.permutation(n)))


def check_reordering(net, source, target):
    index_map = IndexMap(source, target)
    settings = route(net, index_map)
    v = np.arange(net.size) * 3 + 1
    assert np.array_equal(apply(net, settings, v), relocate_vector(index_map, v))


class TestTargetOrdering:
    """Bringing one or two qubits to the low index bits."""

    def test_single_qubit(self):
        ordering = target_ordering(QubitOrdering.identity(3), 2)
        assert ordering.perm == (1, 2, 0)

    def test_pair(self):
        ordering = target_ordering(QubitOrdering.identity(4), 3, 1)
        assert ordering.position_of(3) == 0
        assert ordering.position_of(1) == 1
        assert ordering.position_of(0) == 2
        assert ordering.position_of(2) == 3

    def test_others_keep_relative_order(self):
        current = QubitOrdering((3, 1, 0, 2))
        ordering = target_ordering(current, 1)
        # qubit 2 sits at bit 0 and qubit 0 at bit 3 before the move
        assert ordering.position_of(2) < ordering.position_of(0)

    @pytest.mark.parametrize("i,j", [(3, None), (-1, None), (0, 0), (0, 5)])
    def test_invalid(self, i, j):
        with pytest.raises(ValidationError):
            target_ordering(QubitOrdering.identity(3), i, j)


class TestIndexMap:
    """Direct index relocation between orderings."""

    def test_table_moves_bit(self):
        index_map = IndexMap(QubitOrdering.identity(3), QubitOrdering((1, 2, 0)))
        table = index_map.table()
        assert table[4] == 1
        assert table[1] == 2
        assert table[0] == 0

    def test_table_matches_oracle(self):
        rng = np.random.default_rng(3)
        index_map = IndexMap(random_ordering(rng, 5), random_ordering(rng, 5))
        relocate = index_permutation(index_map)
        assert index_map.table().tolist() == [relocate(k) for k in range(32)]

    def test_inverse_undoes(self):
        rng = np.random.default_rng(4)
        index_map = IndexMap(random_ordering(rng, 4), random_ordering(rng, 4))
        v = np.arange(16)
        assert np.array_equal(relocate_vector(index_map.inverse(), relocate_vector(index_map, v)), v)

    def test_then_composes(self):
        a, b, c = (QubitOrdering(p) for p in [(0, 1, 2), (2, 0, 1), (1, 2, 0)])
        first, second = IndexMap(a, b), IndexMap(b, c)
        combined = first.then(second)
        assert combined.table().tolist() == second.table()[first.table()].tolist()

    def test_then_rejects_mismatch(self):
        a, b = QubitOrdering.identity(2), QubitOrdering((1, 0))
        with pytest.raises(ValidationError):
            IndexMap(a, b).then(IndexMap(a, b))

    def test_mismatched_sizes(self):
        with pytest.raises(ValidationError):
            IndexMap(QubitOrdering.identity(2), QubitOrdering.identity(3))


class TestBenesNetwork:
    """Network shape and routing."""

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_shape(self, n):
        net = BenesNetwork(n)
        assert net.layer_count == 2 * n - 1
        assert net.switches == 1 << (n - 1)
        assert net.all_pass().bits.shape == (2 * n - 1, 1 << (n - 1))

    def test_large_network_builds(self):
        """Endpoint sampling covers sizes past the exhaustive check."""
        assert BenesNetwork(10).size == 1024

    def test_rejects_zero_qubits(self):
        with pytest.raises(ValidationError):
            BenesNetwork(0)

    def test_all_pass_is_identity(self):
        net = BenesNetwork(4)
        v = np.arange(16)
        assert np.array_equal(apply(net, net.all_pass(), v), v)

    def test_identity_map_routes_all_pass(self):
        net = BenesNetwork(5)
        identity = QubitOrdering.identity(5)
        assert route(net, IndexMap(identity, identity)).is_all_pass()

    @pytest.mark.parametrize("n", range(1, 9))
    def test_every_single_and_pair(self, n):
        net = BenesNetwork(n)
        identity = QubitOrdering.identity(n)
        for i in range(n):
            check_reordering(net, identity, target_ordering(identity, i))
        for i, j in itertools.permutations(range(n), 2):
            check_reordering(net, identity, target_ordering(identity, i, j))

    @pytest.mark.parametrize("n", [3, 6, 8])
    def test_random_reorderings(self, n):
        net = BenesNetwork(n)
        rng = np.random.default_rng(n)
        for _ in range(100):
            check_reordering(net, random_ordering(rng, n), random_ordering(rng, n))

    @pytest.mark.slow
    def test_random_reorderings_extended(self):
        rng = np.random.default_rng(2024)
        networks = {n: BenesNetwork(n) for n in range(2, 11)}
        for _ in range(1000):
            n = int(rng.integers(2, 11))
            check_reordering(networks[n], random_ordering(rng, n), random_ordering(rng, n))

    def test_inverse_apply(self):
        net = BenesNetwork(6)
        rng = np.random.default_rng(8)
        settings = route(net, IndexMap(random_ordering(rng, 6), random_ordering(rng, 6)))
        v = rng.integers(-65536, 65536, size=64)
        assert np.array_equal(apply(net, settings, apply(net, settings, v), inverse=True), v)

    def test_values_are_only_moved(self):
        net = BenesNetwork(3)
        settings = route(net, IndexMap(QubitOrdering.identity(3), QubitOrdering((2, 0, 1))))
        v = np.array([5, -3, 7, 0, 11, 2, -9, 4])
        assert sorted(apply(net, settings, v).tolist()) == sorted(v.tolist())

    def test_non_bit_permute_rejected(self):
        net = BenesNetwork(2)
        with pytest.raises(UnsupportedPermutationError):
            route_permutation(net, [1, 0, 2, 3])

    @pytest.mark.parametrize("dest,expected", [
        ([0, 1, 2, 3], True),
        ([0, 2, 1, 3], True),
        ([1, 0, 3, 2], False),
        ([0, 1, 3, 2], False),
        ([0, 3, 2, 1], False),
    ])
    def test_is_bit_permute(self, dest, expected):
        assert is_bit_permute(np.array(dest)) is expected

    def test_apply_shape_checks(self):
        net = BenesNetwork(2)
        with pytest.raises(ValidationError):
            apply(net, net.all_pass(), np.arange(8))
        with pytest.raises(ValidationError):
            apply(net, BenesNetwork(3).all_pass(), np.arange(4))

    def test_settings_dump(self):
        assert BenesNetwork(2).all_pass().dump() == "layer 00 0\nlayer 01 0\nlayer 02 0\n"


class TestRoutingCache:
    """Memoized settings and compiled gathers."""

    @pytest.fixture
    def cache(self):
        return RoutingCache(BenesNetwork(4))

    def test_gather_matches_apply(self, cache):
        source, target = QubitOrdering.identity(4), QubitOrdering((3, 0, 2, 1))
        settings, gather = cache.lookup(source, target)
        v = np.arange(16) * 7
        assert np.array_equal(v[gather], apply(cache.network, settings, v))
        assert np.array_equal(v[gather], relocate_vector(IndexMap(source, target), v))

    def test_entries_reused(self, cache):
        source, target = QubitOrdering.identity(4), QubitOrdering((1, 0, 2, 3))
        first = cache.lookup(source, target)
        second = cache.lookup(source, target)

        assert first is second
        assert len(cache) == 1

    def test_eviction(self):
        cache = RoutingCache(BenesNetwork(3), max_entries=1)
        identity = QubitOrdering.identity(3)
        cache.lookup(identity, QubitOrdering((1, 0, 2)))
        cache.lookup(identity, QubitOrdering((2, 1, 0)))

        assert len(cache) == 1
