"""APSK constellations with DVB-S2 geometry, shaping partitions and symbol pmfs.

A constellation couples three things: the complex signal points on concentric
rings, a bijective bit labeling, and (optionally) a shaping strategy that
designates ``g`` label positions as shaping bits.  Biasing those bits toward
zero with probability ``p0`` induces a nonuniform symbol pmf that favors the
low-energy subconstellations.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

# Ring-radius ratios permitted by DVB-S2.  16-APSK uses a single outer/inner
# ratio; 32-APSK uses a (middle/inner, outer/inner) pair.
DVBS2_GAMMA_16 = (2.57, 2.60, 2.70, 2.75, 2.85, 3.15)
DVBS2_GAMMA_32 = ((2.53, 4.30), (2.54, 4.33), (2.64, 4.64), (2.72, 4.87), (2.84, 5.27))

RING_POPULATIONS = {16: (4, 12), 32: (4, 12, 16)}
RING_PHASE_OFFSETS = {
    16: (np.pi / 4, np.pi / 12),
    32: (np.pi / 4, np.pi / 12, 0.0),
}

# Label positions acting as shaping bits, per (M, g).  For 16-APSK the
# shaping bits are the leading label bits; for 32-APSK the ring-selecting
# second bit comes first, then the last bit, then the first bit.
SHAPING_BIT_POSITIONS = {
    (16, 1): (0,),
    (16, 2): (0, 1),
    (32, 1): (1,),
    (32, 2): (1, 4),
    (32, 3): (0, 1, 4),
}

# Expected ring composition {ring: count} of every shaping subset, used to
# validate that a label table realizes the intended energy partition.
_PARTITION_RING_COMPOSITION = {
    (16, 1): {0: {0: 4, 1: 4}, 1: {1: 8}},
    (16, 2): {0: {0: 4}, 1: {1: 4}, 2: {1: 4}, 3: {1: 4}},
    (32, 1): {0: {0: 4, 1: 12}, 1: {2: 16}},
    (32, 2): {0: {0: 4, 1: 4}, 1: {1: 8}, 2: {2: 8}, 3: {2: 8}},
    (32, 3): {
        0: {0: 4}, 1: {1: 4}, 2: {2: 4}, 3: {2: 4},
        4: {1: 4}, 5: {1: 4}, 6: {2: 4}, 7: {2: 4},
    },
}


@dataclass(frozen=True)
class RingSpec:
    """Geometry of an APSK ring set (radii relative to the inner ring)."""

    points_per_ring: tuple[int, ...]
    radius_ratios: tuple[float, ...]
    phase_offsets: tuple[float, ...]

    def __post_init__(self):
        m_total = sum(self.points_per_ring)
        if m_total & (m_total - 1):
            raise ValueError(f"total point count {m_total} is not a power of two")
        if self.radius_ratios[0] != 1.0:
            raise ValueError("first radius ratio must be 1")
        if any(b <= a for a, b in zip(self.radius_ratios, self.radius_ratios[1:])):
            raise ValueError("radius ratios must be strictly increasing")
        if not (len(self.points_per_ring) == len(self.radius_ratios) == len(self.phase_offsets)):
            raise ValueError("ring spec fields must have equal length")


@dataclass(frozen=True)
class ShapingStrategy:
    """Designates g label positions as shaping bits with zero-bias p0."""

    g: int
    bit_positions: tuple[int, ...]
    p0: float

    def __post_init__(self):
        if len(self.bit_positions) != self.g:
            raise ValueError("bit_positions length must equal g")
        if not 0.5 <= self.p0 < 1.0:
            raise ValueError(f"p0 = {self.p0} outside [0.5, 1)")


def shaping_strategy(M: int, g: int, p0: float) -> ShapingStrategy:
    """Canonical shaping strategy for M-APSK with g shaping bits."""
    if (M, g) not in SHAPING_BIT_POSITIONS:
        raise ValueError(f"no shaping strategy defined for M={M}, g={g}")
    return ShapingStrategy(g=g, bit_positions=SHAPING_BIT_POSITIONS[(M, g)], p0=p0)


class Constellation:
    """Labeled complex signal set with ring geometry and a symbol pmf.

    Immutable after construction; all arrays are read-only.  ``points`` are
    normalized so that sum(pmf * |points|^2) == 1.
    """

    def __init__(self, points, labels, rings: RingSpec, ring_index, pmf=None):
        points = np.asarray(points, dtype=complex)
        labels = np.asarray(labels, dtype=np.uint8)
        M = points.size
        if labels.shape != (M, int(np.log2(M))):
            raise ValueError("labels must be an (M, log2 M) bit matrix")
        self.M = M
        self.m = labels.shape[1]
        self.rings = rings
        self.ring_index = np.asarray(ring_index, dtype=np.int64)

        values = labels @ (1 << np.arange(self.m - 1, -1, -1))
        if np.unique(values).size != M:
            raise ValueError("labels do not form a bijection onto {0,1}^m")
        self.label_values = values
        # symbol index for each m-bit label value
        inv = np.empty(M, dtype=np.int64)
        inv[values] = np.arange(M)
        self.index_of_label = inv

        if pmf is None:
            pmf = np.full(M, 1.0 / M)
        pmf = np.asarray(pmf, dtype=float)
        if abs(pmf.sum() - 1.0) > 1e-12 or np.any(pmf <= 0):
            raise ValueError("pmf must be strictly positive and sum to 1")
        es = float(np.sum(pmf * np.abs(points) ** 2))
        self.points = points / np.sqrt(es)
        self.labels = labels
        self.pmf = pmf
        for arr in (self.points, self.labels, self.pmf, self.ring_index,
                    self.label_values, self.index_of_label):
            arr.setflags(write=False)

    @property
    def energy(self) -> float:
        """Average symbol energy under the pmf (1 by construction)."""
        return float(np.sum(self.pmf * np.abs(self.points) ** 2))

    def shaping_prefixes(self, strategy: ShapingStrategy):
        """Per-symbol integer value of the shaping bits, MSB first."""
        bits = self.labels[:, list(strategy.bit_positions)]
        return bits @ (1 << np.arange(strategy.g - 1, -1, -1))

    def map_bits(self, z):
        """Map an (N, m) bit array to complex symbols."""
        z = np.asarray(z, dtype=np.uint8)
        values = z @ (1 << np.arange(self.m - 1, -1, -1))
        return self.points[self.index_of_label[values]]


def _load_mapping_lines(lines):
    records = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        ring_s, idx_s, bits = line.split()
        records.append((int(ring_s), int(idx_s), bits))
    return records


def load_mapping(path_or_lines):
    """Read a symbol-mapping table: one ``ring idx label`` record per symbol."""
    if isinstance(path_or_lines, (list, tuple)):
        return _load_mapping_lines(path_or_lines)
    with open(path_or_lines) as fh:
        return _load_mapping_lines(fh.readlines())


def _bundled_mapping(M: int):
    name = f"apsk{M}.txt"
    text = resources.files("apskshape.data").joinpath(name).read_text()
    return _load_mapping_lines(text.splitlines())


def _gamma_ratios(M: int, gamma, allow_any_gamma: bool):
    if M == 16:
        g = float(gamma)
        if not allow_any_gamma and not any(abs(g - v) < 1e-9 for v in DVBS2_GAMMA_16):
            raise ValueError(f"gamma={g} not in the DVB-S2 16-APSK set {DVBS2_GAMMA_16}")
        return (1.0, g)
    pair = tuple(float(v) for v in np.atleast_1d(gamma))
    if len(pair) != 2:
        raise ValueError("32-APSK needs a (gamma1, gamma2) pair")
    if not allow_any_gamma and not any(
        abs(pair[0] - a) < 1e-9 and abs(pair[1] - b) < 1e-9 for a, b in DVBS2_GAMMA_32
    ):
        raise ValueError(f"gamma={pair} not in the DVB-S2 32-APSK set {DVBS2_GAMMA_32}")
    return (1.0,) + pair


def build_apsk(M: int, gamma, mapping=None, allow_any_gamma: bool = False) -> Constellation:
    """Build a 16- or 32-APSK constellation, unit energy under a uniform pmf.

    Parameters
    ----------
    M : 16 or 32.
    gamma : ring-radius ratio (16-APSK) or pair of ratios (32-APSK).  Must be
        one of the DVB-S2 values unless `allow_any_gamma`.
    mapping : optional mapping table (as from `load_mapping`); defaults to the
        bundled DVB-S2-derived table.
    """
    if M not in RING_POPULATIONS:
        raise ValueError(f"unsupported constellation order M={M}")
    ratios = _gamma_ratios(M, gamma, allow_any_gamma)
    pops = RING_POPULATIONS[M]
    offs = RING_PHASE_OFFSETS[M]
    rings = RingSpec(points_per_ring=pops, radius_ratios=ratios, phase_offsets=offs)

    if mapping is None:
        mapping = _bundled_mapping(M)
    m = int(np.log2(M))
    if len(mapping) != M:
        raise ValueError(f"mapping has {len(mapping)} records, expected {M}")

    points = np.empty(M, dtype=complex)
    labels = np.empty((M, m), dtype=np.uint8)
    ring_index = np.empty(M, dtype=np.int64)
    seen = set()
    for i, (ring, idx, bits) in enumerate(mapping):
        if ring >= len(pops) or idx >= pops[ring]:
            raise ValueError(f"record {i}: ring {ring} index {idx} out of range")
        if (ring, idx) in seen:
            raise ValueError(f"duplicate symbol position ring={ring} idx={idx}")
        seen.add((ring, idx))
        if len(bits) != m or set(bits) - {"0", "1"}:
            raise ValueError(f"record {i}: label {bits!r} is not an {m}-bit string")
        angle = offs[ring] + 2 * np.pi * idx / pops[ring]
        points[i] = ratios[ring] * np.exp(1j * angle)
        labels[i] = [int(b) for b in bits]
        ring_index[i] = ring

    const = Constellation(points, labels, rings, ring_index)
    _validate_partitions(const)
    return const


def _validate_partitions(c: Constellation) -> None:
    """Check that every supported shaping strategy induces the expected
    equal-size, ring-consistent subsets."""
    for (M, g), expected in _PARTITION_RING_COMPOSITION.items():
        if M != c.M:
            continue
        strat = shaping_strategy(M, g, 0.75)
        prefixes = c.shaping_prefixes(strat)
        for prefix, comp in expected.items():
            members = np.flatnonzero(prefixes == prefix)
            if members.size != 2 ** (c.m - g):
                raise ValueError(
                    f"M={M} g={g}: subset {prefix} has {members.size} symbols, "
                    f"expected {2 ** (c.m - g)}"
                )
            rings, counts = np.unique(c.ring_index[members], return_counts=True)
            if dict(zip(rings.tolist(), counts.tolist())) != comp:
                raise ValueError(
                    f"M={M} g={g}: subset {prefix} ring composition "
                    f"{dict(zip(rings.tolist(), counts.tolist()))} != {comp}"
                )


def partition_of(c: Constellation, strategy: ShapingStrategy, prefix: int):
    """Indices of the symbols whose shaping bits equal `prefix`."""
    if strategy.g == 0:
        return np.arange(c.M)
    if not 0 <= prefix < 2 ** strategy.g:
        raise ValueError(f"prefix {prefix} out of range for g={strategy.g}")
    return np.flatnonzero(c.shaping_prefixes(strategy) == prefix)


def shaped_pmf(c: Constellation, strategy: ShapingStrategy):
    """Symbol pmf induced by biasing each shaping bit to zero with prob p0.

    Each symbol's probability is the product of its shaping-bit factors
    (p0 for a zero, 1-p0 for a one) divided by the 2^(m-g) uniform choices
    within the subset.
    """
    bits = c.labels[:, list(strategy.bit_positions)].astype(float)
    factors = np.where(bits == 0, strategy.p0, 1.0 - strategy.p0)
    return factors.prod(axis=1) / 2 ** (c.m - strategy.g)


def with_pmf(c: Constellation, strategy: ShapingStrategy) -> Constellation:
    """New constellation carrying the strategy's pmf, renormalized to Es=1."""
    pmf = shaped_pmf(c, strategy)
    return Constellation(c.points, c.labels, c.rings, c.ring_index, pmf=pmf)


def papr_db(c: Constellation, pmf=None) -> float:
    """Peak-to-average power ratio max|x|^2 / E[|x|^2] in dB."""
    pmf = c.pmf if pmf is None else np.asarray(pmf, dtype=float)
    power = np.abs(c.points) ** 2
    return 10.0 * np.log10(power.max() / np.sum(pmf * power))
