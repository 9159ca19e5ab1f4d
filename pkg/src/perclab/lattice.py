"""Square-lattice geometry and the lazy coupled edge-weight field.

Sites are plain ``(x, y)`` integer tuples, edges are canonical pairs of
adjacent sites (lexicographically smaller endpoint first).  Edge weights
are produced on demand by a keyed pseudo-random function of
``(seed, edge)``, so a single seed describes one coupled realization of
every Bernoulli bond configuration at once: the edge is p-open exactly
when its weight is <= p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

Site = tuple[int, int]
Edge = tuple[Site, Site]

P_CRITICAL = 0.5

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

# direction order is fixed: east, north, west, south
_DIRECTIONS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijective 64-bit scrambler."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Derive a child seed from a master seed and an index path.

    Used to hand independent streams to replicas, environments and
    walkers without any shared mutable RNG state.
    """
    z = mix64(master + _GOLDEN)
    for p in parts:
        z = mix64(z ^ (p & _MASK64))
    return z


def neighbors(s: Site) -> list[Site]:
    """The four lattice neighbors of ``s`` in fixed order (E, N, W, S)."""
    x, y = s
    return [(x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)]


def canonical_edge(u: Site, v: Site) -> Edge:
    """Canonical form of the bond between adjacent sites ``u`` and ``v``."""
    if abs(u[0] - v[0]) + abs(u[1] - v[1]) != 1:
        raise ValueError(f"sites {u} and {v} are not lattice neighbors")
    return (u, v) if u <= v else (v, u)


def is_horizontal(e: Edge) -> bool:
    return e[0][1] == e[1][1]


def incident_edges(s: Site) -> list[Edge]:
    """Canonical edges incident to ``s``, in neighbor order (E, N, W, S)."""
    return [canonical_edge(s, t) for t in neighbors(s)]


def dual_edge(e: Edge) -> Edge:
    """The dual-lattice bond crossing the primal bond ``e``.

    Dual sites live on the shifted lattice: the dual site ``(a, b)``
    stands for the plane point ``(a + 1/2, b + 1/2)``, the center of the
    plaquette whose lower-left corner is ``(a, b)``.  ``primal_edge`` is
    the exact inverse, so ``primal_edge(dual_edge(e)) == e`` always.
    """
    (x1, y1), (x2, y2) = e
    if y1 == y2:  # horizontal bond -> vertical dual bond
        return ((x1, y1 - 1), (x1, y1))
    return ((x1 - 1, y1), (x1, y1))


def primal_edge(d: Edge) -> Edge:
    """Inverse of :func:`dual_edge`: the primal bond crossing dual bond ``d``."""
    (a1, b1), (a2, b2) = d
    if a1 == a2:  # vertical dual bond -> horizontal primal bond
        return ((a1, b1 + 1), (a1 + 1, b1 + 1))
    return ((a1 + 1, b1), (a1 + 1, b1 + 1))


def chebyshev(s: Site, center: Site = (0, 0)) -> int:
    """Sup-norm distance |s - center|_inf."""
    return max(abs(s[0] - center[0]), abs(s[1] - center[1]))


@dataclass(frozen=True)
class Box:
    """The box of radius ``n`` around ``center``: all sites within sup-distance n."""

    center: Site = (0, 0)
    radius: int = 0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("box radius must be nonnegative")

    @property
    def site_count(self) -> int:
        return (2 * self.radius + 1) ** 2

    def contains(self, s: Site) -> bool:
        return chebyshev(s, self.center) <= self.radius

    def sites(self) -> Iterator[Site]:
        cx, cy = self.center
        n = self.radius
        for x in range(cx - n, cx + n + 1):
            for y in range(cy - n, cy + n + 1):
                yield (x, y)

    def boundary_sites(self) -> list[Site]:
        """Internal vertex boundary: sites at sup-distance exactly ``radius``."""
        n = self.radius
        if n == 0:
            return [self.center]
        cx, cy = self.center
        out = []
        for x in range(cx - n, cx + n + 1):
            out.append((x, cy - n))
            out.append((x, cy + n))
        for y in range(cy - n + 1, cy + n):
            out.append((cx - n, y))
            out.append((cx + n, y))
        return out


@dataclass(frozen=True)
class Annulus:
    """Closed annulus S(outer) minus the open box S(inner)^o around ``center``.

    Contains the sites at sup-distance d with inner <= d <= outer, so both
    boundary rings belong to the annulus.
    """

    center: Site = (0, 0)
    inner: int = 1
    outer: int = 2

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError("annulus requires 0 < inner < outer")

    @property
    def site_count(self) -> int:
        return (2 * self.outer + 1) ** 2 - (2 * self.inner - 1) ** 2

    def contains(self, s: Site) -> bool:
        return self.inner <= chebyshev(s, self.center) <= self.outer

    def sites(self) -> Iterator[Site]:
        for s in Box(self.center, self.outer).sites():
            if chebyshev(s, self.center) >= self.inner:
                yield s


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle of sites, corners inclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError("rectangle corners out of order")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def site_count(self) -> int:
        return (self.width + 1) * (self.height + 1)

    def contains(self, s: Site) -> bool:
        return self.x0 <= s[0] <= self.x1 and self.y0 <= s[1] <= self.y1

    def sites(self) -> Iterator[Site]:
        for x in range(self.x0, self.x1 + 1):
            for y in range(self.y0, self.y1 + 1):
                yield (x, y)


Region = Box | Annulus | Rect


def region_edges(region: Region) -> Iterator[Edge]:
    """Canonical lattice edges with both endpoints inside ``region``."""
    for s in region.sites():
        x, y = s
        if region.contains((x + 1, y)):
            yield (s, (x + 1, y))
        if region.contains((x, y + 1)):
            yield (s, (x, y + 1))


class WeightField:
    """Deterministic uniform edge weights keyed by ``(seed, canonical edge)``.

    Immutable and stateless: every query recomputes the same value, weights
    for distinct edges behave as independent Uniform[0,1) variables, and the
    whole family of Bernoulli configurations is monotone-coupled through the
    single weight per edge.
    """

    __slots__ = ("seed", "_base")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._base = mix64(self.seed + _GOLDEN)

    def __repr__(self):
        return f"WeightField(seed={self.seed})"

    def weight(self, e: Edge) -> float:
        """Weight of canonical edge ``e``, a 53-bit uniform in [0, 1)."""
        # mix64 chain unrolled; this is the innermost loop of the invasion
        (x, y), _ = e
        z = (self._base ^ (x & _MASK64))
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK64
        z = (z ^ (z >> 31)) ^ (y & _MASK64)
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK64
        z = (z ^ (z >> 31)) ^ (0 if e[0][1] == e[1][1] else 1)
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK64
        return ((z ^ (z >> 31)) >> 11) * 2.0 ** -53

    def is_p_open(self, e: Edge, p: float) -> bool:
        """True when the edge is p-open, i.e. weight(e) <= p."""
        return self.weight(e) <= p

    def weights_array(self, x: np.ndarray, y: np.ndarray, orient: np.ndarray) -> np.ndarray:
        """Vectorized weights for canonical edges given as coordinate arrays.

        ``x, y`` are the lexicographically smaller endpoints, ``orient`` is
        0 for horizontal and 1 for vertical bonds.  Bit-identical to
        :meth:`weight` edge by edge.
        """
        m1 = np.uint64(_MUL1)
        m2 = np.uint64(_MUL2)

        def _mix(z):
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            return z ^ (z >> np.uint64(31))

        z = np.uint64(self._base) ^ x.astype(np.int64).view(np.uint64)
        z = _mix(z)
        z = _mix(z ^ y.astype(np.int64).view(np.uint64))
        z = _mix(z ^ orient.astype(np.uint64))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


class TableField:
    """Weight field backed by an explicit table; for hand-traced oracles.

    Edges missing from the table get weight ``default`` (just below 1), so a
    hand-specified patch is always invaded before anything outside it.
    """

    def __init__(self, table: dict[Edge, float] | Iterable[tuple[Edge, float]],
                 default: float = 1.0 - 2.0 ** -53):
        self.table = dict(table)
        self.default = default
        for e, w in self.table.items():
            if canonical_edge(*e) != e:
                raise ValueError(f"table edge {e} is not canonical")
            if not 0.0 <= w < 1.0:
                raise ValueError(f"weight {w} outside [0, 1)")

    def weight(self, e: Edge) -> float:
        return self.table.get(e, self.default)

    def is_p_open(self, e: Edge, p: float) -> bool:
        return self.weight(e) <= p
