"""Finite 0/1 lattice windows standing in for bi-infinite spin configurations.

A window of N sites carries one of two boundary policies: periodic (a ring,
preserving translation invariance) or frozen words (fixed bits glued to the
left and right of the window, which never change during evolution).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class Periodic:
    def __repr__(self):
        return "Periodic()"


@dataclass(frozen=True)
class FrozenWords:
    """Immutable bit words adjacent to the window: left[-1] sits at site -1,
    right[0] at site N."""

    left: str
    right: str

    def __post_init__(self):
        for word in (self.left, self.right):
            if not word or set(word) - {"0", "1"}:
                raise BoundaryError(
                    "boundary word must be a nonempty 0/1 string, got %r" % (word,)
                )


PERIODIC = Periodic()


def _normalize_bits(bits):
    if isinstance(bits, str):
        vals = tuple(int(ch) for ch in bits)
    else:
        vals = tuple(int(v) for v in bits)
    if any(v not in (0, 1) for v in vals):
        raise ValueError("configuration bits must be 0 or 1")
    return vals


@dataclass(frozen=True)
class Configuration:
    """A 0/1 state on sites 0..N-1 plus the boundary policy used to resolve
    neighborhoods that reach outside the window."""

    bits: tuple
    boundary: object = PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "bits", _normalize_bits(self.bits))
        if not self.bits:
            raise ValueError("configuration must have at least one site")
        if not isinstance(self.boundary, (Periodic, FrozenWords)):
            raise BoundaryError("boundary must be Periodic or FrozenWords")

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, x):
        return self.bits[x]

    def as_array(self):
        return np.array(self.bits, dtype=np.int8)

    def with_bits(self, bits):
        return Configuration(bits, self.boundary)

    def to_literal(self):
        body = "".join(str(b) for b in self.bits)
        if isinstance(self.boundary, FrozenWords):
            return "%s|%s|%s" % (self.boundary.left, body, self.boundary.right)
        return body

    @classmethod
    def from_literal(cls, text, boundary=PERIODIC):
        """Parse "0110" (policy taken from `boundary`) or "L|bits|R" (frozen)."""
        text = text.strip()
        if "|" in text:
            parts = text.split("|")
            if len(parts) != 3:
                raise ValueError("frozen literal must look like L|bits|R, got %r" % text)
            return cls(parts[1], FrozenWords(parts[0], parts[2]))
        return cls(text, boundary)

    @classmethod
    def all_zero(cls, n, boundary=PERIODIC):
        return cls((0,) * n, boundary)

    @classmethod
    def all_one(cls, n, boundary=PERIODIC):
        return cls((1,) * n, boundary)


def leq(a: Configuration, b: Configuration) -> bool:
    """Pointwise partial order on equal-length windows."""
    if len(a) != len(b):
        raise ValueError("cannot compare configurations of lengths %d and %d" % (len(a), len(b)))
    return all(x <= y for x, y in zip(a.bits, b.bits))


def translate(a: Configuration, x: int) -> Configuration:
    """Cyclic shift by x sites; defined only on periodic windows."""
    if not isinstance(a.boundary, Periodic):
        raise BoundaryError("translation is undefined for frozen boundaries")
    n = len(a)
    x %= n
    return Configuration(a.bits[-x:] + a.bits[:-x] if x else a.bits, a.boundary)


def site_value(a: Configuration, pos: int) -> int:
    """Value at a (possibly out-of-window) position, resolved by the boundary."""
    n = len(a)
    if 0 <= pos < n:
        return a.bits[pos]
    if isinstance(a.boundary, Periodic):
        return a.bits[pos % n]
    words = a.boundary
    if pos < 0:
        if pos < -len(words.left):
            raise BoundaryError("position %d reaches past the left boundary word" % pos)
        return int(words.left[len(words.left) + pos])
    if pos >= n + len(words.right):
        raise BoundaryError("position %d reaches past the right boundary word" % pos)
    return int(words.right[pos - n])


def neighborhood(a: Configuration, x: int, radius: int) -> str:
    """The (2*radius+1)-bit word centered at site x, boundary-resolved."""
    if not 0 <= x < len(a):
        raise ValueError("site %d outside window of %d sites" % (x, len(a)))
    return "".join(str(site_value(a, x + o)) for o in range(-radius, radius + 1))


_ORDER_PAIRS = {
    0: (),
    1: (),
    2: ((0, 1),),
    3: ((0, 1), (1, 2)),
    # lower <= each middle <= upper; the two middles are unordered relative
    # to each other
    4: ((0, 1), (0, 2), (1, 3), (2, 3)),
}

_LAYER_NAMES = {
    0: (),
    1: ("eta",),
    2: ("eta", "xi"),
    3: ("eta", "gamma", "xi"),
    4: ("eta", "gamma1", "gamma2", "xi"),
}


def order_pairs(n_layers: int):
    """Index pairs (i, j) that must satisfy layer_i <= layer_j pointwise."""
    try:
        return _ORDER_PAIRS[n_layers]
    except KeyError:
        raise ValueError("unsupported layer count %d" % n_layers) from None


def layer_names(n_layers: int):
    try:
        return _LAYER_NAMES[n_layers]
    except KeyError:
        raise ValueError("unsupported layer count %d" % n_layers) from None


@dataclass(frozen=True)
class JointState:
    """Background layer plus zero or more spin layers of the same length.

    Spin layers are kept in increasing order: with three layers the chain
    eta <= gamma <= xi must hold pointwise, with four layers the two middle
    layers are each wedged between the outer two but not mutually ordered.
    """

    beta: Configuration
    layers: tuple = ()
    names: tuple = None

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        names = self.names if self.names is not None else layer_names(len(layers))
        if len(names) != len(layers):
            raise ValueError("need one name per layer")
        object.__setattr__(self, "names", tuple(names))
        for layer in layers:
            if len(layer) != len(self.beta):
                raise ValueError("all layers must match the background length")
        for i, j in order_pairs(len(layers)):
            if not leq(layers[i], layers[j]):
                raise ValueError(
                    "layers %s and %s are not ordered" % (self.names[i], self.names[j])
                )

    @property
    def n_sites(self):
        return len(self.beta)

    def layer(self, name):
        return self.layers[self.names.index(name)]

    def as_dict(self):
        out = {"beta": self.beta}
        out.update(zip(self.names, self.layers))
        return out


def point_mass_states(n, boundary=PERIODIC):
    """The two extreme (background, spin) states: all zeros and all ones."""
    lo = JointState(Configuration.all_zero(n, boundary), (Configuration.all_zero(n, boundary),))
    hi = JointState(Configuration.all_one(n, boundary), (Configuration.all_one(n, boundary),))
    return lo, hi


def initially_ordered_pairs(layers):
    """All index pairs (i, j), i < j, whose layers start pointwise ordered."""
    out = []
    for i in range(len(layers)):
        for j in range(i + 1, len(layers)):
            if leq(layers[i], layers[j]):
                out.append((i, j))
    return tuple(out)


class MutableWindow:
    """Mutable copy of a configuration's bits with boundary-resolved reads;
    used inside simulators, one replica at a time."""

    __slots__ = ("bits", "boundary", "n")

    def __init__(self, config: Configuration):
        self.bits = list(config.bits)
        self.boundary = config.boundary
        self.n = len(config.bits)

    def value(self, pos):
        if 0 <= pos < self.n:
            return self.bits[pos]
        if isinstance(self.boundary, Periodic):
            return self.bits[pos % self.n]
        words = self.boundary
        if pos < 0:
            if pos < -len(words.left):
                raise BoundaryError("position %d reaches past the left boundary word" % pos)
            return int(words.left[len(words.left) + pos])
        if pos >= self.n + len(words.right):
            raise BoundaryError("position %d reaches past the right boundary word" % pos)
        return int(words.right[pos - self.n])

    def word_index(self, x, radius):
        idx = 0
        for off in range(-radius, radius + 1):
            idx = (idx << 1) | self.value(x + off)
        return idx

    def flip(self, x):
        self.bits[x] ^= 1

    def to_configuration(self):
        return Configuration(tuple(self.bits), self.boundary)
