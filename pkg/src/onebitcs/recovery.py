"""Gaussian sign measurements and the convex program that inverts them.

The direction of a signal is estimated from y = sign(Gx + v) by maximizing
the correlation <y, G_S z> over the intersection of an l1 ball of radius
sqrt(k) (sparsity prior) and the l2 unit ball (scale normalization; one-bit
measurements carry no magnitude).  The maximizer has a closed form: scale
the correlation vector when the l1 constraint is slack, otherwise soft
threshold it at the exact level that lands on the l1 boundary, found by a
breakpoint scan rather than bisection.

The full pipeline stacks a heavy-hitter sketch (support identification)
above the gaussian block (value estimation on the support); the gaussian
block always measures all of x, so mass outside the identified support acts
as extra pre-quantization noise, exactly as the error analysis treats it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import heavy_hitters as hh
from . import partition_sketch as ps
from .model import SparseEstimate
from .prf import derive_key, fold, standard_normal


@dataclass(frozen=True)
class GaussianSchema:
    """Implicit dense gaussian matrix with optional pre-quantization noise."""

    rows: int
    n: int
    seed: int
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.n < 1:
            raise ValueError("rows and n must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise level must be nonnegative")

    @property
    def matrix_key(self) -> np.uint64:
        return derive_key(self.seed, 11)

    @property
    def noise_key(self) -> np.uint64:
        return derive_key(self.seed, 12)

    def entries(self, rows, cols) -> np.ndarray:
        """Regenerate G[rows, cols] as an outer block (len(rows), len(cols))."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return standard_normal(fold(self.matrix_key, rows)[:, None], cols[None, :])

    def noise(self, rows) -> np.ndarray:
        return self.noise_sigma * standard_normal(self.noise_key, np.asarray(rows))


def sign_measure(schema: GaussianSchema, x, row_block: int = 0) -> np.ndarray:
    """y = sign(Gx + v) as int8, regenerating G in row blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (schema.n,):
        raise ValueError(f"signal shape {x.shape} does not match n={schema.n}")
    nz = np.nonzero(x)[0]
    y = np.empty(schema.rows, dtype=np.int8)
    if row_block <= 0:
        row_block = max(1, 4_000_000 // max(nz.size, 1))
    for lo in range(0, schema.rows, row_block):
        rows = np.arange(lo, min(lo + row_block, schema.rows))
        dot = (
            schema.entries(rows, nz) @ x[nz]
            if nz.size
            else np.zeros(rows.size)
        )
        if schema.noise_sigma > 0:
            dot = dot + schema.noise(rows)
        y[rows] = np.where(dot >= 0, 1, -1)
    return y


def correlation(schema: GaussianSchema, y, support, row_block: int = 0) -> np.ndarray:
    """c = G_S^T y over the support columns, regenerated in row blocks."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (schema.rows,):
        raise ValueError("measurement length mismatch")
    support = np.asarray(support, dtype=np.int64)
    if row_block <= 0:
        row_block = max(1, 4_000_000 // max(support.size, 1))
    c = np.zeros(support.size)
    for lo in range(0, schema.rows, row_block):
        rows = np.arange(lo, min(lo + row_block, schema.rows))
        c += schema.entries(rows, support).T @ y[rows]
    return c


def solve_l1l2(c, l1_bound: float) -> np.ndarray:
    """Maximize <c, z> over {||z||_1 <= l1_bound, ||z||_2 <= 1}, exactly.

    When the l1 constraint is slack the maximizer is c normalized; otherwise
    it is a soft-thresholded c renormalized to the sphere, with the
    threshold solved on the breakpoint segment where the l1/l2 ratio crosses
    the bound.  Returns the zero vector for c = 0.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("correlation vector must be 1-D and nonempty")
    if l1_bound <= 0:
        raise ValueError("l1 bound must be positive")
    norm2 = float(np.linalg.norm(c))
    if norm2 == 0.0:
        return np.zeros_like(c)
    if float(np.abs(c).sum()) / norm2 <= l1_bound:
        return c / norm2
    a = np.sort(np.abs(c))[::-1]
    csum = np.cumsum(a)
    qsum = np.cumsum(a * a)
    s2 = l1_bound * l1_bound
    for p in range(1, a.size + 1):
        lam_lo = a[p] if p < a.size else 0.0
        sp, qp = csum[p - 1], qsum[p - 1]
        lin = sp - p * lam_lo
        quad = qp - 2 * lam_lo * sp + p * lam_lo * lam_lo
        if quad <= 0 or lin < 0:
            continue
        if lin * lin >= s2 * quad - 1e-15 * max(1.0, s2 * quad):
            # ratio crosses the bound on [lam_lo, a[p-1]) with p active terms
            if abs(p - s2) < 1e-12:
                lam = lam_lo
            else:
                spread = (p * qp - sp * sp) / (p - s2)
                lam = (sp - l1_bound * math.sqrt(max(spread, 0.0))) / p
                lam = min(max(lam, lam_lo), a[p - 1])
            z = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
            nz = float(np.linalg.norm(z))
            if nz == 0.0:
                continue
            return z / nz
    return c / norm2  # unreachable for finite inputs; keeps the scan total


@dataclass(frozen=True)
class PipelineSchema:
    """Heavy-hitter block stacked over a gaussian sign block."""

    n: int
    k: int
    delta: float
    seed: int
    support_schema: hh.HeavyHitterSchema
    gauss_schema: GaussianSchema

    @property
    def support_rows(self) -> int:
        return self.support_schema.total_rows

    @property
    def gauss_rows(self) -> int:
        return self.gauss_schema.rows

    @property
    def total_rows(self) -> int:
        return self.support_rows + self.gauss_rows


@dataclass(frozen=True)
class PipelineBits:
    support_bits: list
    sign_bits: np.ndarray


@dataclass(frozen=True)
class PipelineDiagnostics:
    support: np.ndarray
    support_empty: bool
    point_queries: int
    bit_reads: int
    support_rows: int
    gauss_rows: int
    extras: dict = field(default_factory=dict)


def default_gauss_rows(n: int, k: int, delta: float, scale: float = 2.0) -> int:
    """ceil(scale * k * log2(n/k) / delta^2), the value-estimation row budget."""
    return max(1, math.ceil(scale * k * math.log2(max(n / k, 2.0)) / delta**2))


def build_pipeline(
    n: int,
    k: int,
    delta: float,
    seed: int,
    gauss_rows: int | None = None,
    gauss_scale: float = 2.0,
    noise_sigma: float = 0.0,
    constants: ps.SketchConstants = ps.SketchConstants(),
    **hh_kwargs,
) -> PipelineSchema:
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0,1), got {delta}")
    support_schema = hh.build_schema(n, k, seed=int(derive_key(seed, 21)), constants=constants, **hh_kwargs)
    if gauss_rows is None:
        gauss_rows = default_gauss_rows(n, k, delta, gauss_scale)
    gauss_schema = GaussianSchema(
        rows=gauss_rows, n=n, seed=int(derive_key(seed, 22)), noise_sigma=noise_sigma
    )
    return PipelineSchema(
        n=n, k=k, delta=delta, seed=seed,
        support_schema=support_schema, gauss_schema=gauss_schema,
    )


def measure(schema: PipelineSchema, x) -> PipelineBits:
    return PipelineBits(
        support_bits=hh.measure(schema.support_schema, x),
        sign_bits=sign_measure(schema.gauss_schema, x),
    )


def decode(
    schema: PipelineSchema, bits: PipelineBits, prefilter_reps: int = 8
) -> tuple[SparseEstimate, PipelineDiagnostics]:
    """Support from the sketch block, values from the gaussian block."""
    support, _, diags = hh.decode(
        schema.support_schema, bits.support_bits, prefilter_reps
    )
    point_queries = sum(d.extras.get("point_queries", 0) for d in diags)
    bit_reads = sum(d.extras.get("bit_reads", 0) for d in diags)
    if support.size == 0:
        estimate = SparseEstimate(
            indices=np.empty(0, dtype=np.int64),
            values=np.empty(0),
            sparsity_bound=max(1, schema.support_schema.cap),
        )
        diag = PipelineDiagnostics(
            support=support, support_empty=True,
            point_queries=point_queries, bit_reads=bit_reads,
            support_rows=schema.support_rows, gauss_rows=schema.gauss_rows,
        )
        return estimate, diag
    c = correlation(schema.gauss_schema, bits.sign_bits, support)
    values = solve_l1l2(c, math.sqrt(schema.k))
    estimate = SparseEstimate(
        indices=support, values=values,
        sparsity_bound=max(schema.support_schema.cap, support.size),
    )
    diag = PipelineDiagnostics(
        support=support, support_empty=False,
        point_queries=point_queries, bit_reads=bit_reads,
        support_rows=schema.support_rows, gauss_rows=schema.gauss_rows,
    )
    return estimate, diag
