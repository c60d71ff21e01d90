"""Monte Carlo experiment runner with CSV reporting.

Each trial builds a fresh schema from (master seed, trial id), generates a
signal, measures, decodes, and judges success against the exact tail/heavy
oracles, never against sketch output.  Everything is deterministic given
the config, so repeated runs produce byte-identical CSV files; wall-clock
timing is opt-in because it would break that property.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import btree, expander, heavy_hitters, recovery, signals
from . import partition_sketch as ps
from .model import tail_stats
from .prf import RandomSource, derive_key

SCHEMES = ("ppq", "ppcs", "btree", "expander", "heavy-hitters", "pipeline")

CSV_COLUMNS = (
    "trial_id", "scheme", "n", "k", "delta", "m_total", "success",
    "err_sq", "tail_sq", "decode_ops", "wall_ms", "seed",
)

# partition size used by the partition-level schemes, in units of sparsity
PARTS_PER_SPARSITY = 64


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "pipeline"
    n: int = 4096
    k: int = 4
    delta: float = 0.1
    b: int = 16
    gamma: float = 0.5
    sigma: float = 0.0
    mg: int = 0  # 0 = use the default gaussian row budget
    trials: int = 10
    seed: int = 1
    model: str = signals.EXACT_SPARSE
    tail: float = 0.3
    out: str = ""
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0,1), got {self.delta}")
        if self.model not in signals.MODELS:
            raise ValueError(f"unknown signal model {self.model!r}")
        if self.scheme == "btree" and not 2 <= self.b <= self.n:
            raise ValueError(f"branching factor {self.b} out of range")
        if self.scheme == "expander":
            cap = expander.max_sparsity(self.n)
            if self.k > cap:
                raise ValueError(
                    f"expander scheme needs k <= {cap} at n={self.n}; "
                    "use heavy-hitters for larger sparsity"
                )
        return self


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    scheme: str
    n: int
    k: int
    delta: float
    m_total: int
    success: bool
    err_sq: float
    tail_sq: float
    decode_ops: int
    wall_ms: float
    seed: int


def _partition_for(config: ExperimentConfig) -> ps.PartitionFamily:
    parts = min(config.n, PARTS_PER_SPARSITY * config.k)
    return ps.PartitionFamily.contiguous(config.n, parts)


def _run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    src = RandomSource(config.seed).derive(1000, trial)
    schema_seed = int(derive_key(config.seed, 2000, trial))
    x = signals.gen_signal(config.model, config.n, config.k, src, config.tail)
    stats = tail_stats(x, config.k)
    started = time.perf_counter()
    if config.scheme in ("ppq", "ppcs"):
        partition = _partition_for(config)
        schema = ps.build_schema(partition, config.k, config.delta, schema_seed)
        bits = ps.measure(schema, x)
        heavy_parts = np.unique(partition.parts_of(stats.heavy))
        if config.scheme == "ppq":
            target = int(partition.parts_of([int(np.argmax(np.abs(x)))])[0])
            success = ps.point_query(schema, bits, target) == 1
            err_sq = 0.0 if success else 1.0
            decode_ops = 1 + 3 * schema.reps * 2
        else:
            found = ps.count_sketch_decode(schema, bits)
            success = bool(np.isin(heavy_parts, found).all()) and found.size <= schema.cap
            mask = np.isin(partition.parts_of(np.arange(config.n)), found)
            err_sq = float(np.sum(x[~mask] ** 2))
            decode_ops = partition.size * (1 + 3 * schema.reps * 2)
        m_total = schema.rows
    elif config.scheme == "btree":
        schema, level_bits = btree.build_and_measure(
            x, config.n, config.k, config.b, config.delta, schema_seed
        )
        result = btree.decode(schema, level_bits)
        success = bool(np.isin(stats.heavy, result.indices).all())
        err_sq = float(np.sum(x**2) - np.sum(x[result.indices] ** 2))
        decode_ops = result.point_queries + result.bit_reads
        m_total = schema.total_rows
    elif config.scheme == "expander":
        schema = expander.build_schema(config.n, config.k, schema_seed)
        bits = expander.measure(schema, x)
        found, _, diag = expander.recover(schema, bits)
        success = bool(np.isin(stats.heavy, found).all())
        err_sq = float(np.sum(x**2) - np.sum(x[found] ** 2))
        decode_ops = diag.extras["point_queries"] + diag.extras["bit_reads"]
        m_total = schema.total_rows
    elif config.scheme == "heavy-hitters":
        schema = heavy_hitters.build_schema(config.n, config.k, schema_seed)
        bits = heavy_hitters.measure(schema, x)
        found, _, diags = heavy_hitters.decode(schema, bits)
        success = (
            bool(np.isin(stats.heavy, found).all()) and found.size <= schema.cap
        )
        err_sq = float(np.sum(x**2) - np.sum(x[found] ** 2))
        decode_ops = sum(
            d.extras["point_queries"] + d.extras["bit_reads"] for d in diags
        )
        m_total = schema.total_rows
    else:  # pipeline
        schema = recovery.build_pipeline(
            config.n, config.k, config.delta, schema_seed,
            gauss_rows=config.mg or None, noise_sigma=config.sigma,
        )
        bits = recovery.measure(schema, x)
        estimate, diag = recovery.decode(schema, bits)
        err_sq = float(np.sum((x - estimate.to_dense(config.n)) ** 2))
        success = err_sq <= 2 * stats.tail_sq + config.delta
        decode_ops = diag.point_queries + diag.bit_reads
        m_total = schema.total_rows
    wall_ms = (time.perf_counter() - started) * 1000.0 if config.timing else 0.0
    return TrialRecord(
        trial_id=trial, scheme=config.scheme, n=config.n, k=config.k,
        delta=config.delta, m_total=int(m_total), success=bool(success),
        err_sq=err_sq, tail_sq=stats.tail_sq, decode_ops=int(decode_ops),
        wall_ms=wall_ms, seed=config.seed,
    )


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    config = config.validate()
    return [_run_trial(config, t) for t in range(config.trials)]


@dataclass(frozen=True)
class ReportSummary:
    trials: int
    successes: int
    rate: float
    ci_halfwidth: float
    median_err_sq: float


def summarize(records: list[TrialRecord]) -> ReportSummary:
    if not records:
        raise ValueError("no trial records to summarize")
    n = len(records)
    wins = sum(r.success for r in records)
    p = wins / n
    half = 1.96 * math.sqrt(p * (1 - p) / n)
    return ReportSummary(
        trials=n, successes=wins, rate=p, ci_halfwidth=half,
        median_err_sq=float(np.median([r.err_sq for r in records])),
    )


def _config_comment(config: ExperimentConfig) -> str:
    pairs = " ".join(
        f"{f.name}={getattr(config, f.name)}"
        for f in fields(ExperimentConfig)
        if f.name != "out"  # the file knows where it lives
    )
    return f"# {pairs}"


def render_report(records: list[TrialRecord], config: ExperimentConfig | None = None) -> str:
    if not records:
        raise ValueError("no trial records to report")
    buf = io.StringIO()
    if config is not None:
        buf.write(_config_comment(config) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([
            r.trial_id, r.scheme, r.n, r.k, repr(r.delta), r.m_total,
            int(r.success), repr(r.err_sq), repr(r.tail_sq), r.decode_ops,
            repr(r.wall_ms), r.seed,
        ])
    return buf.getvalue()


def emit_report(
    records: list[TrialRecord],
    path: str,
    config: ExperimentConfig | None = None,
) -> ReportSummary:
    """Write the CSV and return (and print) the aggregate summary."""
    text = render_report(records, config)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    summary = summarize(records)
    print(
        f"{len(records)} trials: success rate {summary.rate:.3f} "
        f"+/- {summary.ci_halfwidth:.3f} (95% CI), "
        f"median err_sq {summary.median_err_sq:.6g}"
    )
    return summary


def parse_report(path: str) -> list[TrialRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        records.append(
            TrialRecord(
                trial_id=int(row["trial_id"]), scheme=row["scheme"],
                n=int(row["n"]), k=int(row["k"]), delta=float(row["delta"]),
                m_total=int(row["m_total"]), success=bool(int(row["success"])),
                err_sq=float(row["err_sq"]), tail_sq=float(row["tail_sq"]),
                decode_ops=int(row["decode_ops"]), wall_ms=float(row["wall_ms"]),
                seed=int(row["seed"]),
            )
        )
    return records


def read_config_file(path: str) -> dict[str, str]:
    """Line-oriented key=value config; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def config_from_mappings(*mappings: dict) -> ExperimentConfig:
    """Later mappings override earlier ones; values may arrive as strings."""
    config = ExperimentConfig()
    for mapping in mappings:
        clean = {}
        for key, value in mapping.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ValueError(f"unknown config key {key!r}")
            target = _FIELD_TYPES[key]
            if isinstance(value, str) and target is not str:
                if target in ("int", int):
                    value = int(value)
                elif target in ("float", float):
                    value = float(value)
                elif target in ("bool", bool):
                    value = value.lower() in ("1", "true", "yes", "on")
            clean[key] = value
        config = replace(config, **clean)
    return config
