"""One-bit partition point queries and the union-bound count-sketch decoder.

The scheme hashes the parts of a fixed partition of [n] into buckets, three
independent times per repetition.  Each bucket row measures the sign of a
random signed combination of per-part gaussian sums, and each row is paired
with its negation so that an exactly-zero measurement is detectable as a
(+1, +1) bit pair.  A part is reported heavy when, in a majority of
repetitions, all three of its bucket rows agree with its assigned signs or
all three anti-agree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .prf import U64, derive_key, fold, rademacher, standard_normal

# probability mass pinned by the two-sided gaussian clipping constants:
# P[|N(0,1)| < quantile_hi] = 19/20 and P[|N(0,1)| > quantile_lo] = 19/20
QUANTILE_HI = float(norm.ppf(0.975))
QUANTILE_LO = float(norm.ppf(0.525))


class AnalysisMarginWarning(RuntimeWarning):
    """The bucket constant is too small for the separation analysis to apply.

    Detection still works empirically at much smaller constants; this warning
    records that the worst-case margin condition is not met.
    """


@dataclass(frozen=True)
class PartitionFamily:
    """A partition of [n] into ``size`` parts.

    Stored either as an explicit per-coordinate label array or, for interval
    partitions, as the sorted array of interval start positions.
    """

    n: int
    size: int
    labels: np.ndarray | None = None
    starts: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1 or self.size < 1:
            raise ValueError("partition needs n >= 1 and at least one part")
        if (self.labels is None) == (self.starts is None):
            raise ValueError("exactly one of labels/starts must be given")
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (self.n,):
                raise ValueError("labels must cover every coordinate")
            if lab.min() < 0 or lab.max() >= self.size:
                raise ValueError("part label out of range")
            object.__setattr__(self, "labels", lab)
        else:
            st = np.asarray(self.starts, dtype=np.int64)
            if st.size != self.size or st[0] != 0 or np.any(np.diff(st) <= 0):
                raise ValueError("starts must begin at 0 and strictly increase")
            if st[-1] >= self.n:
                raise ValueError("interval start beyond signal length")
            object.__setattr__(self, "starts", st)

    @classmethod
    def contiguous(cls, n: int, parts: int) -> "PartitionFamily":
        """Equal-width intervals of width ceil(n/parts); last may be short."""
        width = -(-n // parts)
        starts = np.arange(0, n, width, dtype=np.int64)
        return cls(n=n, size=len(starts), starts=starts)

    @classmethod
    def from_labels(cls, labels) -> "PartitionFamily":
        lab = np.asarray(labels, dtype=np.int64)
        return cls(n=lab.size, size=int(lab.max()) + 1 if lab.size else 1, labels=lab)

    def parts_of(self, coords) -> np.ndarray:
        """Part index of each coordinate (vectorized)."""
        coords = np.asarray(coords, dtype=np.int64)
        if self.labels is not None:
            return self.labels[coords]
        return np.searchsorted(self.starts, coords, side="right") - 1

    def part_bounds(self, part: int) -> tuple[int, int]:
        """[start, end) of an interval part; only for interval partitions."""
        if self.starts is None:
            raise ValueError("part_bounds requires an interval partition")
        start = int(self.starts[part])
        end = int(self.starts[part + 1]) if part + 1 < self.size else self.n
        return start, end


@dataclass(frozen=True)
class SketchConstants:
    """Tunable constants of the sketch.

    bucket_factor  buckets per unit of sparsity
    rep_factor     repetitions per bit of failure probability
    cap_factor     output size cap, in units of sparsity
    """

    bucket_factor: int = 32
    rep_factor: int = 8
    cap_factor: int = 16


@dataclass(frozen=True)
class PointQuerySchema:
    """Implicit description of the measurement rows for one partition sketch."""

    partition: PartitionFamily
    k: int
    delta: float
    seed: int
    constants: SketchConstants
    reps: int
    buckets: int
    quantile_hi: float
    quantile_lo: float

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def vote_threshold(self) -> int:
        return min(self.reps, (self.reps + 1) // 2 + 1)

    @property
    def cap(self) -> int:
        return self.constants.cap_factor * self.k

    @property
    def rows(self) -> int:
        # 2 polarities x 3 sub-iterations x buckets x repetitions
        return 2 * 3 * self.buckets * self.reps

    @property
    def bucket_key(self) -> np.uint64:
        return derive_key(self.seed, 1)

    @property
    def sign_key(self) -> np.uint64:
        return derive_key(self.seed, 2)

    @property
    def gauss_key(self) -> np.uint64:
        return derive_key(self.seed, 3)


@dataclass(frozen=True)
class SketchBits:
    """Observed sign bits, shape (reps, 3, buckets, 2); last axis is polarity.

    bits[..., 0] is sign(z) and bits[..., 1] is sign(-z) for the underlying
    linear measurement z; a (+1, +1) pair marks z == 0 exactly.  Flattened
    row order is repetition-major, then sub-iteration, then bucket, then
    polarity.
    """

    bits: np.ndarray

    def __post_init__(self):
        b = self.bits
        if b.ndim != 4 or b.shape[1] != 3 or b.shape[3] != 2 or b.dtype != np.int8:
            raise ValueError(f"bad bit tensor shape {b.shape} / dtype {b.dtype}")


@dataclass(frozen=True)
class QueryStats:
    """Vote tallies for a batch of queried parts."""

    parts: np.ndarray
    good_counts: np.ndarray
    zero_declared: np.ndarray  # bool: majority of repetitions all-zero rows


def build_schema(
    partition: PartitionFamily,
    k: int,
    delta: float,
    seed: int,
    constants: SketchConstants = SketchConstants(),
) -> PointQuerySchema:
    """Lay out a point-query sketch for the given partition and sparsity."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"failure target delta must be in (0,1), got {delta}")
    if k < 1:
        raise ValueError(f"sparsity k must be >= 1, got {k}")
    reps = max(1, math.ceil(constants.rep_factor * math.log2(1.0 / delta)))
    buckets = constants.bucket_factor * k
    hi, lo = QUANTILE_HI, QUANTILE_LO
    if lo / math.sqrt(k) <= hi * math.sqrt(20.0 / (constants.bucket_factor * k)):
        needed = math.ceil(20.0 * (hi / lo) ** 2)
        warnings.warn(
            "bucket_factor %d is below the worst-case separation margin "
            "(needs >= %d); detection relies on empirical slack"
            % (constants.bucket_factor, needed),
            AnalysisMarginWarning,
            stacklevel=2,
        )
    return PointQuerySchema(
        partition=partition,
        k=k,
        delta=delta,
        seed=seed,
        constants=constants,
        reps=reps,
        buckets=buckets,
        quantile_hi=hi,
        quantile_lo=lo,
    )


def measure(schema: PointQuerySchema, x, rep_block_elems: int = 2_000_000) -> SketchBits:
    """Take all sign measurements of ``x`` under the schema.

    One pass over the nonzeros of x per repetition; the underlying real
    measurements exist only transiently.  sign(0) = +1, so empty buckets
    produce (+1, +1) pairs.  Repetitions are processed in blocks sized to
    keep intermediate arrays near ``rep_block_elems`` elements.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (schema.n,):
        raise ValueError(f"signal shape {x.shape} does not match n={schema.n}")
    reps, buckets = schema.reps, schema.buckets
    bits = np.ones((reps, 3, buckets, 2), dtype=np.int8)
    nz = np.nonzero(x)[0]
    if nz.size == 0:
        return SketchBits(bits=bits)
    vals = x[nz]
    occupied, inverse = np.unique(schema.partition.parts_of(nz), return_inverse=True)
    n_occ = occupied.size
    occ_u64 = occupied.astype(np.uint64)
    block = max(1, rep_block_elems // max(3 * max(n_occ, nz.size), 1))
    for r0 in range(0, reps, block):
        rr = np.arange(r0, min(r0 + block, reps))
        nb = rr.size
        gauss = standard_normal(fold(schema.gauss_key, rr)[:, None], nz[None, :])
        flat_part = (np.arange(nb)[:, None] * n_occ + inverse[None, :]).ravel()
        part_sums = np.bincount(
            flat_part, weights=(gauss * vals).ravel(), minlength=nb * n_occ
        ).reshape(nb, n_occ)
        rl = (rr[:, None] * 3 + np.arange(3)[None, :]).ravel()
        bucket = (
            fold(fold(schema.bucket_key, rl)[:, None], occupied[None, :]) % U64(buckets)
        ).astype(np.int64)
        sg = rademacher(
            fold(schema.sign_key, rl)[:, None],
            occ_u64[None, :] * U64(buckets) + bucket.astype(np.uint64),
        )
        weights = sg * np.repeat(part_sums, 3, axis=0)
        flat_bucket = (np.arange(nb * 3)[:, None] * buckets + bucket).ravel()
        z = np.bincount(
            flat_bucket, weights=weights.ravel(), minlength=nb * 3 * buckets
        ).reshape(nb, 3, buckets)
        bits[rr, :, :, 0] = np.where(z >= 0, 1, -1)
        bits[rr, :, :, 1] = np.where(-z >= 0, 1, -1)
    return SketchBits(bits=bits)


def query_stats(
    schema: PointQuerySchema,
    sketch: SketchBits,
    parts,
    chunk: int = 2048,
) -> QueryStats:
    """Tally good repetitions and zero detections for a batch of parts.

    A repetition is good for a part when its three bucket rows all agree
    with the part's assigned signs or all anti-agree, and none of the three
    rows is an exact zero.  A part whose three rows are all zero in a strict
    majority of repetitions is declared exactly zero.
    """
    parts = np.atleast_1d(np.asarray(parts, dtype=np.int64))
    if parts.size and (parts.min() < 0 or parts.max() >= schema.partition.size):
        raise ValueError("queried part index out of range")
    reps, buckets = schema.reps, schema.buckets
    rl = np.arange(reps * 3)
    row_keys = fold(schema.bucket_key, rl)[:, None]
    sign_keys = fold(schema.sign_key, rl)[:, None]
    flat = sketch.bits.reshape(reps * 3, buckets, 2)
    rl_col = rl[:, None]
    good = np.empty(parts.size, dtype=np.int64)
    zero_declared = np.empty(parts.size, dtype=bool)
    for lo in range(0, parts.size, chunk):
        block = parts[lo : lo + chunk]
        bucket = (fold(row_keys, block[None, :]) % U64(buckets)).astype(np.int64)
        sg = rademacher(
            sign_keys, block.astype(np.uint64)[None, :] * U64(buckets) + bucket.astype(np.uint64)
        )
        y = flat[rl_col, bucket, 0]
        y_neg = flat[rl_col, bucket, 1]
        is_zero = ((y == 1) & (y_neg == 1)).reshape(reps, 3, -1)
        matches = (y == sg).reshape(reps, 3, -1)
        clean = ~is_zero.any(axis=1)
        good_rep = clean & (matches.all(axis=1) | (~matches).all(axis=1))
        good[lo : lo + chunk] = good_rep.sum(axis=0)
        zero_declared[lo : lo + chunk] = 2 * is_zero.all(axis=1).sum(axis=0) > reps
    return QueryStats(parts=parts, good_counts=good, zero_declared=zero_declared)


def point_query(schema: PointQuerySchema, sketch: SketchBits, part: int) -> int:
    """1 if the part is judged to contain a heavy hitter, else 0."""
    stats = query_stats(schema, sketch, [part])
    if stats.zero_declared[0]:
        return 0
    return int(stats.good_counts[0] >= schema.vote_threshold)


def select_passing(stats: QueryStats, vote_threshold: int, cap: int) -> np.ndarray:
    """Parts passing the vote, capped at ``cap`` by good count (ties: lower index)."""
    passing = (~stats.zero_declared) & (stats.good_counts >= vote_threshold)
    idx = np.nonzero(passing)[0]
    if idx.size > cap:
        order = np.lexsort((stats.parts[idx], -stats.good_counts[idx]))
        idx = idx[order[:cap]]
    return np.sort(stats.parts[idx])


def nonzero_candidates(
    schema: PointQuerySchema,
    sketch: SketchBits,
    probe_reps: int = 8,
    chunk: int = 8192,
) -> np.ndarray:
    """Parts that show a fully nonzero bucket row triple in an early repetition.

    A part holding any signal mass makes all three of its bucket rows nonzero
    in every repetition, so it always survives this probe.  Parts failing it
    sit in exactly-zero buckets throughout the probed repetitions, which
    cannot reach the vote threshold except by vanishing-probability chance;
    skipping them turns the exhaustive scan into work proportional to the
    occupied parts on sparse signals.
    """
    reps = min(probe_reps, schema.reps)
    buckets = schema.buckets
    rl = np.arange(reps * 3)
    row_keys = fold(schema.bucket_key, rl)[:, None]
    flat = sketch.bits.reshape(schema.reps * 3, buckets, 2)[: reps * 3]
    rl_col = rl[:, None]
    keep = []
    all_parts = np.arange(schema.partition.size)
    for lo in range(0, all_parts.size, chunk):
        block = all_parts[lo : lo + chunk]
        bucket = (fold(row_keys, block[None, :]) % U64(buckets)).astype(np.int64)
        y = flat[rl_col, bucket, 0]
        y_neg = flat[rl_col, bucket, 1]
        is_zero = ((y == 1) & (y_neg == 1)).reshape(reps, 3, -1)
        clean_rep = ~is_zero.any(axis=1)
        keep.append(block[clean_rep.any(axis=0)])
    return np.concatenate(keep) if keep else np.empty(0, dtype=np.int64)


def count_sketch_decode(
    schema: PointQuerySchema,
    sketch: SketchBits,
    candidates=None,
) -> np.ndarray:
    """All queried parts that pass the point query, capped at cap_factor * k.

    With ``candidates=None`` every part of the partition is queried, which
    costs time linear in the partition size; callers that can enumerate a
    small candidate set should pass it.
    """
    if candidates is None:
        candidates = np.arange(schema.partition.size)
    else:
        candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        return np.empty(0, dtype=np.int64)
    stats = query_stats(schema, sketch, candidates)
    return select_passing(stats, schema.vote_threshold, schema.cap)
