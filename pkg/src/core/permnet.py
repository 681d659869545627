"""Self-routing Benes permutation network for qubit reordering.

The network for 2^n endpoints has 2n-1 layers of 2^(n-1) two-by-two
switches. It is built recursively: an input layer pairs lines (2k, 2k+1)
and sends the upper output to line k of the top half-size network and the
lower output to line k of the bottom one; the output layer mirrors it.
Flattened, layer l < n-1 is followed by an unshuffle within blocks of
2^(n-l) lines and layer l > n-1 is preceded by a shuffle within blocks of
2^(l-n+2) lines.

Qubit reorderings induce bit-permute index maps. For those maps the
switch settings follow from the destination tags alone: if source bit r is
the one relocated to destination bit 0, the element on the upper input of
input switch k goes to the top sub-network exactly when bit r of its
source index is clear. Both sub-problems are again bit-permute (with
complement), so the rule recurses without the looping algorithm.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import UnsupportedPermutationError, ValidationError
from .qstate import QubitOrdering

# exhaustive connectivity check up to this many qubits, endpoint sampling above
FULL_CONNECTIVITY_CHECK_N = 8


def target_ordering(current: QubitOrdering, i: int, j: Optional[int] = None) -> QubitOrdering:
    """Ordering with qubit ``i`` at bit 0 (and ``j`` at bit 1).

    The remaining qubits keep their relative order from ``current`` and fill
    the higher bit positions.
    """
    n = current.n
    moved = [i] if j is None else [i, j]
    for qubit in moved:
        if not 0 <= qubit < n:
            raise ValidationError(f"qubit {qubit} out of range for {n} qubits")
    if j is not None and i == j:
        raise ValidationError(f"duplicate qubit {i}")

    others = sorted((q for q in range(n) if q not in moved), key=current.position_of)
    perm = [0] * n
    for bit, qubit in enumerate(moved + others):
        perm[qubit] = bit
    return QubitOrdering(tuple(perm))


@dataclass(frozen=True)
class IndexMap:
    """Index relocation from one qubit ordering to another."""

    source: QubitOrdering
    target: QubitOrdering

    def __post_init__(self):
        if self.source.n != self.target.n:
            raise ValidationError(
                f"orderings have mismatched qubit counts ({self.source.n} vs {self.target.n})"
            )

    @property
    def n(self) -> int:
        return self.source.n

    def table(self) -> np.ndarray:
        """``table[src]`` is the destination index of source index ``src``."""
        indices = np.arange(1 << self.n, dtype=np.int64)
        dest = np.zeros_like(indices)
        for qubit in range(self.n):
            dest |= ((indices >> self.source.perm[qubit]) & 1) << self.target.perm[qubit]
        return dest

    def inverse(self) -> 'IndexMap':
        return IndexMap(self.target, self.source)

    def then(self, other: 'IndexMap') -> 'IndexMap':
        if other.source != self.target:
            raise ValidationError("index maps do not compose: target and source orderings differ")
        return IndexMap(self.source, other.target)


def index_permutation(index_map: IndexMap) -> Callable[[int], int]:
    """Direct bit-relocation oracle for an index map."""
    source = index_map.source.perm
    target = index_map.target.perm

    def relocate(index: int) -> int:
        out = 0
        for qubit, bit in enumerate(source):
            out |= ((index >> bit) & 1) << target[qubit]
        return out

    return relocate


def relocate_vector(index_map: IndexMap, v: Sequence) -> np.ndarray:
    """Permute ``v`` with the direct index map (no network involved)."""
    values = np.asarray(v)
    out = np.empty_like(values)
    out[index_map.table()] = values
    return out


@dataclass(frozen=True, eq=False)
class SwitchSettings:
    """One pass/cross bit per switch per layer; True means cross."""

    bits: np.ndarray

    @property
    def layer_count(self) -> int:
        return self.bits.shape[0]

    def is_all_pass(self) -> bool:
        return not self.bits.any()

    def __eq__(self, other) -> bool:
        return isinstance(other, SwitchSettings) and np.array_equal(self.bits, other.bits)

    def dump(self) -> str:
        """One line per layer with the switch bits hex-encoded (switch k is bit k)."""
        width = max(1, (self.bits.shape[1] + 3) // 4)
        lines = []
        for layer, row in enumerate(self.bits):
            value = sum(1 << k for k, cross in enumerate(row) if cross)
            lines.append(f"layer {layer:02d} {value:0{width}x}")
        return "\n".join(lines) + "\n"


def _unshuffle_gather(size: int, block: int) -> np.ndarray:
    half = block // 2
    local = np.arange(block)
    gather = np.where(local < half, 2 * local, 2 * (local - half) + 1)
    return (np.arange(0, size, block)[:, None] + gather[None, :]).reshape(-1)


def _shuffle_gather(size: int, block: int) -> np.ndarray:
    half = block // 2
    local = np.arange(block)
    gather = np.where(local % 2 == 0, local // 2, half + local // 2)
    return (np.arange(0, size, block)[:, None] + gather[None, :]).reshape(-1)


class BenesNetwork:
    """Benes network wiring for 2^n endpoints."""

    def __init__(self, n: int):
        if n < 1:
            raise ValidationError("a permutation network needs at least one qubit")
        self.n = n
        self.size = 1 << n
        self.switches = self.size // 2
        self.layer_count = 2 * n - 1

        self._pre: List[Optional[np.ndarray]] = []
        self._post: List[Optional[np.ndarray]] = []
        for layer in range(self.layer_count):
            pre = post = None
            if layer < n - 1:
                post = _unshuffle_gather(self.size, 1 << (n - layer))
            elif layer > n - 1:
                pre = _shuffle_gather(self.size, 1 << (layer - n + 2))
            self._pre.append(pre)
            self._post.append(post)
        self._pre_inv = [None if g is None else np.argsort(g) for g in self._pre]
        self._post_inv = [None if g is None else np.argsort(g) for g in self._post]

        self._check_connectivity()

    def _check_connectivity(self) -> None:
        if self.n <= FULL_CONNECTIVITY_CHECK_N:
            reach = np.eye(self.size, dtype=bool)
        else:
            reach = np.zeros((2, self.size), dtype=bool)
            reach[0, 0] = reach[1, self.size - 1] = True

        for layer in range(self.layer_count):
            if self._pre[layer] is not None:
                reach = reach[:, self._pre[layer]]
            either = reach.reshape(reach.shape[0], -1, 2).any(axis=2)
            reach = np.repeat(either, 2, axis=1)
            if self._post[layer] is not None:
                reach = reach[:, self._post[layer]]

        if not reach.all():
            raise ValidationError(f"network for n={self.n} is not fully connected")

    def switch_layer(self, values: np.ndarray, cross: np.ndarray) -> np.ndarray:
        pairs = values.reshape(-1, 2)
        out = pairs.copy()
        out[cross, 0] = pairs[cross, 1]
        out[cross, 1] = pairs[cross, 0]
        return out.reshape(-1)

    def forward_layer(self, values: np.ndarray, layer: int, cross: np.ndarray) -> np.ndarray:
        if self._pre[layer] is not None:
            values = values[self._pre[layer]]
        values = self.switch_layer(values, cross)
        if self._post[layer] is not None:
            values = values[self._post[layer]]
        return values

    def backward_layer(self, values: np.ndarray, layer: int, cross: np.ndarray) -> np.ndarray:
        if self._post_inv[layer] is not None:
            values = values[self._post_inv[layer]]
        values = self.switch_layer(values, cross)
        if self._pre_inv[layer] is not None:
            values = values[self._pre_inv[layer]]
        return values

    def all_pass(self) -> SwitchSettings:
        return SwitchSettings(np.zeros((self.layer_count, self.switches), dtype=bool))


def apply(net: BenesNetwork, settings: SwitchSettings, v: Sequence, inverse: bool = False) -> np.ndarray:
    """Push ``v`` through the network; amplitudes are relocated, never modified.

    With ``inverse`` the layers run backward, undoing a forward application.
    """
    values = np.asarray(v)
    if values.ndim != 1 or values.shape[0] != net.size:
        raise ValidationError(f"expected a flat vector of {net.size} entries")
    if settings.bits.shape != (net.layer_count, net.switches):
        raise ValidationError("switch settings do not match the network shape")

    if inverse:
        for layer in reversed(range(net.layer_count)):
            values = net.backward_layer(values, layer, settings.bits[layer])
    else:
        for layer in range(net.layer_count):
            values = net.forward_layer(values, layer, settings.bits[layer])
    return values


def is_bit_permute(dest: np.ndarray) -> bool:
    """True when ``dest`` relocates index bits and nothing else."""
    size = len(dest)
    n = size.bit_length() - 1
    if size != 1 << n or int(dest[0]) != 0:
        return False
    images = [int(dest[1 << b]) for b in range(n)]
    if any(img == 0 or img & (img - 1) for img in images) or len(set(images)) != n:
        return False
    indices = np.arange(size, dtype=np.int64)
    rebuilt = np.zeros(size, dtype=np.int64)
    for b, img in enumerate(images):
        rebuilt |= ((indices >> b) & 1) * img
    return bool(np.array_equal(rebuilt, dest))


def _route_block(dest: np.ndarray, m: int, base: int, layer: int, bits: np.ndarray) -> None:
    first = base // 2
    if m == 1:
        bits[layer, first] = int(dest[0]) == 1
        return

    half = 1 << (m - 1)
    inverse = np.empty_like(dest)
    inverse[dest] = np.arange(dest.size)
    # source bit that lands on destination bit 0
    delta = int(inverse[0] ^ inverse[1])
    if delta & (delta - 1):
        raise UnsupportedPermutationError("sub-permutation is not bit-permute; self-routing impossible")
    r = delta.bit_length() - 1

    upper = 2 * np.arange(half, dtype=np.int64)
    if r:
        cross = ((upper >> r) & 1).astype(bool)
    else:
        cross = np.zeros(half, dtype=bool)
    top_dest = dest[upper + cross]
    bottom_dest = dest[upper + 1 - cross]

    bits[layer, first:first + half] = cross
    bits[layer + 2 * m - 2, first + (top_dest >> 1)] = (top_dest & 1).astype(bool)

    _route_block(top_dest >> 1, m - 1, base, layer + 1, bits)
    _route_block(bottom_dest >> 1, m - 1, base + half, layer + 1, bits)


def route_permutation(net: BenesNetwork, dest: Sequence[int]) -> SwitchSettings:
    """Settings realizing ``out[dest[s]] = v[s]`` for a bit-permute ``dest``.

    Raises:
        UnsupportedPermutationError: ``dest`` is not a bit-permute map
    """
    dest = np.asarray(dest, dtype=np.int64)
    if dest.shape != (net.size,):
        raise ValidationError(f"permutation must have {net.size} entries")
    if not is_bit_permute(dest):
        raise UnsupportedPermutationError("only qubit-reordering (bit-permute) maps can be self-routed")

    bits = np.zeros((net.layer_count, net.switches), dtype=bool)
    _route_block(dest, net.n, 0, 0, bits)
    settings = SwitchSettings(bits)

    expected = np.empty(net.size, dtype=np.int64)
    expected[dest] = np.arange(net.size)
    if not np.array_equal(apply(net, settings, np.arange(net.size)), expected):
        raise UnsupportedPermutationError("routing did not realize the requested permutation")
    return settings


def route(net: BenesNetwork, index_map: IndexMap) -> SwitchSettings:
    """
    Self-route the reordering described by an index map.

    Args:
        net: Network sized for the register
        index_map: Source and target qubit orderings

    Returns:
        SwitchSettings with apply(net, settings, v) equal to relocating v

    Raises:
        ValidationError: the map and the network disagree on n
    """
    if index_map.n != net.n:
        raise ValidationError(f"index map for {index_map.n} qubits on a network for {net.n}")
    return route_permutation(net, index_map.table())


class RoutingCache:
    """Routed settings and compiled gather tables per ordering pair.

    The gather table is the network applied to the identity index vector, so
    ``v[gather]`` equals ``apply(net, settings, v)``.
    """

    def __init__(self, network: BenesNetwork, max_entries: int = 4096):
        self.network = network
        self.max_entries = max_entries
        self._entries: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], Tuple[SwitchSettings, np.ndarray]] = {}

    def lookup(self, source: QubitOrdering, target: QubitOrdering) -> Tuple[SwitchSettings, np.ndarray]:
        key = (source.perm, target.perm)
        entry = self._entries.get(key)
        if entry is None:
            settings = route(self.network, IndexMap(source, target))
            gather = apply(self.network, settings, np.arange(self.network.size))
            if len(self._entries) >= self.max_entries:
                self._entries.pop(next(iter(self._entries)))
            entry = (settings, gather)
            self._entries[key] = entry
        return entry

    def __len__(self) -> int:
        return len(self._entries)
