"""Layered sketch for small sparsity: coded names, linking, and clustering.

Each coordinate's identity is Reed-Solomon coded into s chunks.  Layer j
partitions [n] by a name string combining the coordinate's layer-j hash, its
j-th code chunk, and its hashes under the layers adjacent to j in a fixed
expander graph.  Heavy names are recovered per layer with the count-sketch
decoder, re-checked with a point-query sketch, and then stitched back into
coordinates by linking mutually consistent names across layers and decoding
each connected component's chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import partition_sketch as ps
from .prf import derive_key, uniform_index
from .rscode import ChunkCode


def circulant_neighbors(s: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Neighbor lists of a circulant graph on [s]; connected, equal degrees.

    Offsets 1, 2, ... are added symmetrically until the requested degree is
    reached (capped at s-1, the complete graph).
    """
    if s < 2:
        raise ValueError("need at least two layers")
    degree = min(degree, s - 1)
    neighbors = []
    for j in range(s):
        seen: list[int] = []
        offset = 1
        while len(seen) < degree:
            for cand in ((j + offset) % s, (j - offset) % s):
                if cand != j and cand not in seen and len(seen) < degree:
                    seen.append(cand)
            offset += 1
        neighbors.append(tuple(sorted(seen)))
    return tuple(neighbors)


@dataclass(frozen=True)
class LayerSchema:
    index: int
    partition: ps.PartitionFamily
    names: np.ndarray  # (parts, 2 + degree) field table, row per part
    heavy_schema: ps.PointQuerySchema  # count-sketch mode
    check_schema: ps.PointQuerySchema  # point-query mode


@dataclass(frozen=True)
class ExpanderSchema:
    n: int
    k: int
    seed: int
    layers_count: int
    code: ChunkCode
    degree: int
    h_range: int
    error_fraction: float
    neighbors: tuple[tuple[int, ...], ...]
    layers: tuple[LayerSchema, ...]
    constants: ps.SketchConstants

    @property
    def name_bits(self) -> int:
        h_bits = max(1, math.ceil(math.log2(self.h_range)))
        return h_bits + self.code.t + self.degree * h_bits

    @property
    def total_rows(self) -> int:
        return sum(
            layer.heavy_schema.rows + layer.check_schema.rows for layer in self.layers
        )

    @property
    def cap(self) -> int:
        return self.constants.cap_factor * self.k

    def name_key(self, layer: int) -> np.uint64:
        return derive_key(self.seed, 300 + layer)


@dataclass(frozen=True)
class LayerBits:
    heavy: ps.SketchBits
    check: ps.SketchBits


@dataclass(frozen=True)
class LayerList:
    """Surviving candidates of one layer after filtering and point queries."""

    layer: int
    parts: np.ndarray
    names: np.ndarray  # (len(parts), 2 + degree)
    good_counts: np.ndarray
    point_queries: int = 0
    bit_reads: int = 0


@dataclass(frozen=True)
class RecoveryDiagnostics:
    components: int = 0
    decode_failures: int = 0
    verify_failures: int = 0
    layer_sizes: tuple[int, ...] = ()
    extras: dict = field(default_factory=dict)


def max_sparsity(n: int, log_factor: float = 1.0) -> int:
    """Largest sparsity this scheme accepts before bucketing must take over."""
    return max(1, math.ceil(log_factor * math.log2(max(n, 2))))


def _hash_fields(schema_seed: int, n: int, s: int, h_range: int) -> np.ndarray:
    coords = np.arange(n)
    return np.stack(
        [uniform_index(derive_key(schema_seed, 300 + j), coords, h_range) for j in range(s)]
    )


def _pack_rows(fields: np.ndarray, widths: list[int]) -> np.ndarray:
    """Pack small nonnegative integer columns into one comparable key per row.

    Falls back to a lexicographic structured view when the packed width
    exceeds 64 bits.
    """
    total = sum(widths)
    if total <= 64:
        out = np.zeros(fields.shape[0], dtype=np.uint64)
        for col, w in enumerate(widths):
            out = (out << np.uint64(w)) | fields[:, col].astype(np.uint64)
        return out
    rec = np.ascontiguousarray(fields.astype(np.int64))
    return rec.view([("", np.int64)] * fields.shape[1]).reshape(-1)


def build_schema(
    n: int,
    k: int,
    seed: int,
    constants: ps.SketchConstants = ps.SketchConstants(),
    error_fraction: float = 0.25,
    degree: int = 4,
    heavy_exponent: int = 2,
    check_exponent: int = 2,
    log_factor: float = 1.0,
) -> ExpanderSchema:
    """Build the layered naming scheme and its per-layer sketches.

    heavy_exponent fixes the count-sketch failure target (2^t)^-heavy_exponent
    from the name chunk width; check_exponent fixes the point-query failure
    target log2(n)^-check_exponent.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if k < 1:
        raise ValueError("need k >= 1")
    if k > max_sparsity(n, log_factor):
        raise ValueError(
            f"sparsity {k} exceeds the small-sparsity limit "
            f"{max_sparsity(n, log_factor)} for n={n}; reduce per-instance "
            "sparsity by bucketing first"
        )
    message_bits = max(1, math.ceil(math.log2(n)))
    log_bits = max(1.0, math.log2(max(message_bits, 2)))
    s = max(4, math.ceil(message_bits / log_bits))
    code = ChunkCode.for_error_fraction(message_bits, s, error_fraction)
    neighbors = circulant_neighbors(s, degree)
    deg = len(neighbors[0])
    h_range = max(16, math.ceil(math.log2(n)) ** 3)

    own_hash = _hash_fields(seed, n, s, h_range)
    codewords = code.encode_many(np.arange(n))  # (n, s)

    heavy_delta = float((1 << code.t)) ** (-heavy_exponent)
    check_delta = min(0.5, float(math.ceil(math.log2(n))) ** (-check_exponent))
    h_bits = max(1, math.ceil(math.log2(h_range)))
    widths = [h_bits, code.t] + [h_bits] * deg

    layers = []
    for j in range(s):
        fields = np.column_stack(
            [own_hash[j], codewords[:, j]] + [own_hash[nb] for nb in neighbors[j]]
        )
        packed = _pack_rows(fields, widths)
        _, first, labels = np.unique(packed, return_index=True, return_inverse=True)
        partition = ps.PartitionFamily(n=n, size=int(first.size), labels=labels)
        heavy_schema = ps.build_schema(
            partition, k, heavy_delta,
            seed=int(derive_key(seed, 400 + j)), constants=constants,
        )
        check_schema = ps.build_schema(
            partition, k, check_delta,
            seed=int(derive_key(seed, 500 + j)), constants=constants,
        )
        layers.append(
            LayerSchema(
                index=j,
                partition=partition,
                names=fields[first],
                heavy_schema=heavy_schema,
                check_schema=check_schema,
            )
        )
    return ExpanderSchema(
        n=n, k=k, seed=seed, layers_count=s, code=code, degree=deg,
        h_range=h_range, error_fraction=error_fraction, neighbors=neighbors,
        layers=tuple(layers), constants=constants,
    )


def make_name(schema: ExpanderSchema, i, layer: int) -> np.ndarray:
    """Name fields of coordinate(s) i in a layer: own hash, chunk, neighbor hashes."""
    i = np.atleast_1d(np.asarray(i, dtype=np.int64))
    if i.min() < 0 or i.max() >= schema.n:
        raise ValueError("coordinate out of range")
    own = uniform_index(schema.name_key(layer), i, schema.h_range)
    chunk = schema.code.encode_many(i)[:, layer]
    cols = [own, chunk]
    for nb in schema.neighbors[layer]:
        cols.append(uniform_index(schema.name_key(nb), i, schema.h_range))
    return np.column_stack(cols)


def measure(schema: ExpanderSchema, x) -> tuple[LayerBits, ...]:
    return tuple(
        LayerBits(
            heavy=ps.measure(layer.heavy_schema, x),
            check=ps.measure(layer.check_schema, x),
        )
        for layer in schema.layers
    )


def layer_decode(
    schema: ExpanderSchema,
    layer: int,
    bits: LayerBits,
    prefilter_reps: int = 8,
) -> LayerList:
    """Candidate heavy names of one layer.

    Count-sketch decode over the realized names (pruned by the nonzero
    probe), then drop candidates whose own-hash collides within the list,
    then keep those passing the point-query check, capped by good count.
    """
    ls = schema.layers[layer]
    n_parts = ls.partition.size
    reads = 0
    if prefilter_reps > 0:
        candidates = ps.nonzero_candidates(ls.heavy_schema, bits.heavy, prefilter_reps)
        reads += n_parts * 3 * min(prefilter_reps, ls.heavy_schema.reps) * 2
    else:
        candidates = np.arange(n_parts)
    queries = int(candidates.size)
    reads += int(candidates.size) * 3 * ls.heavy_schema.reps * 2
    found = ps.count_sketch_decode(ls.heavy_schema, bits.heavy, candidates)
    empty = LayerList(
        layer=layer,
        parts=np.empty(0, dtype=np.int64),
        names=np.empty((0, 2 + schema.degree), dtype=np.int64),
        good_counts=np.empty(0, dtype=np.int64),
        point_queries=queries,
        bit_reads=reads,
    )
    if found.size == 0:
        return empty
    own = ls.names[found, 0]
    _, inverse, counts = np.unique(own, return_inverse=True, return_counts=True)
    unique_mask = counts[inverse] == 1
    found = found[unique_mask]
    if found.size == 0:
        return empty
    queries += int(found.size)
    reads += int(found.size) * 3 * ls.check_schema.reps * 2
    stats = ps.query_stats(ls.check_schema, bits.check, found)
    passing = (~stats.zero_declared) & (
        stats.good_counts >= ls.check_schema.vote_threshold
    )
    found = found[passing]
    good = stats.good_counts[passing]
    cap = schema.cap
    if found.size > cap:
        order = np.lexsort((found, -good))[:cap]
        found, good = found[order], good[order]
    order = np.argsort(found)
    found, good = found[order], good[order]
    return LayerList(
        layer=layer, parts=found, names=ls.names[found], good_counts=good,
        point_queries=queries, bit_reads=reads,
    )


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def link_cluster_decode(
    schema: ExpanderSchema, layer_lists: list[LayerList]
) -> tuple[np.ndarray, np.ndarray, RecoveryDiagnostics]:
    """Stitch per-layer name lists into coordinates.

    Vertices are (layer, name) survivors; an edge is added between adjacent
    layers only when each endpoint's name carries the other's own-hash (both
    endpoints must suggest it).  Each connected component contributes one
    chunk per layer (a missing layer is an erasure, conflicting claims count
    as a possible corruption), is decoded, and is kept only when the decoded
    coordinate's recomputed names agree with the component on enough layers.
    """
    s = schema.layers_count
    offsets = np.cumsum([0] + [ll.parts.size for ll in layer_lists])
    total = int(offsets[-1])
    uf = _UnionFind(total)
    # index of j in the name fields of layer j2 (and vice versa)
    pos = {
        (j, nb): 2 + idx
        for j in range(s)
        for idx, nb in enumerate(schema.neighbors[j])
    }
    lookup = []
    for ll in layer_lists:
        table: dict[int, list[int]] = {}
        for row in range(ll.parts.size):
            table.setdefault(int(ll.names[row, 0]), []).append(row)
        lookup.append(table)
    for j in range(s):
        ll = layer_lists[j]
        for nb in schema.neighbors[j]:
            if nb < j:
                continue
            col_fwd = pos[(j, nb)]
            col_back = pos[(nb, j)]
            other = layer_lists[nb]
            for row in range(ll.parts.size):
                claimed = int(ll.names[row, col_fwd])
                for row2 in lookup[nb].get(claimed, ()):
                    if int(other.names[row2, col_back]) == int(ll.names[row, 0]):
                        uf.union(int(offsets[j]) + row, int(offsets[nb]) + row2)
    components: dict[int, list[tuple[int, int]]] = {}
    for j in range(s):
        for row in range(layer_lists[j].parts.size):
            root = uf.find(int(offsets[j]) + row)
            components.setdefault(root, []).append((j, row))

    min_matches = math.ceil((1.0 - schema.error_fraction) * s - 1e-9)
    results: dict[int, float] = {}
    decode_failures = 0
    verify_failures = 0
    for members in components.values():
        slots = np.zeros(s, dtype=np.int64)
        erasures = [True] * s
        claims: dict[int, list[int]] = {}
        for j, row in members:
            claims.setdefault(j, []).append(row)
        for j, rows in claims.items():
            # conflicting claims stay in as a possible corruption for the
            # code to fix; the lowest part index supplies the symbol
            row = min(rows, key=lambda r: layer_lists[j].parts[r])
            slots[j] = layer_lists[j].names[row, 1]
            erasures[j] = False
        value = schema.code.decode(slots, [j for j in range(s) if erasures[j]])
        if value is None or not 0 <= value < schema.n:
            decode_failures += 1
            continue
        matches = 0
        for j in range(s):
            rows = claims.get(j)
            if not rows or len(rows) != 1:
                continue
            expected = make_name(schema, value, j)[0]
            if np.array_equal(expected, layer_lists[j].names[rows[0]]):
                matches += 1
        if matches < min_matches:
            verify_failures += 1
            continue
        score = float(
            sum(layer_lists[j].good_counts[rows[0]] for j, rows in claims.items() if len(rows) == 1)
        )
        if value not in results or score > results[value]:
            results[value] = score
    coords = np.array(sorted(results), dtype=np.int64)
    scores = np.array([results[int(i)] for i in coords])
    cap = schema.cap
    if coords.size > cap:
        order = np.lexsort((coords, -scores))[:cap]
        keep = np.sort(order)
        coords, scores = coords[keep], scores[keep]
    diag = RecoveryDiagnostics(
        components=len(components),
        decode_failures=decode_failures,
        verify_failures=verify_failures,
        layer_sizes=tuple(int(ll.parts.size) for ll in layer_lists),
        extras={
            "point_queries": sum(ll.point_queries for ll in layer_lists),
            "bit_reads": sum(ll.bit_reads for ll in layer_lists),
        },
    )
    return coords, scores, diag


def recover(
    schema: ExpanderSchema,
    bits: tuple[LayerBits, ...],
    prefilter_reps: int = 8,
) -> tuple[np.ndarray, np.ndarray, RecoveryDiagnostics]:
    """Full decode: per-layer lists, then link-and-cluster reassembly."""
    if len(bits) != schema.layers_count:
        raise ValueError("layer bit count does not match schema")
    lists = [
        layer_decode(schema, j, bits[j], prefilter_reps)
        for j in range(schema.layers_count)
    ]
    return link_cluster_decode(schema, lists)
