"""Measurement persistence: packed sign bits under a self-contained header.

File layout: an ASCII magic line, one JSON header line carrying every
parameter needed to rebuild the schema (including the master seed, so all
hash/sign/gaussian families regenerate on the decode side), then raw packed
bit blocks whose byte lengths are listed in the header.

Bits pack +1 -> 1 and -1 -> 0 in little-endian bit order, following each
sketch's flattened row order (repetition-major, then sub-iteration, then
bucket, then polarity).
"""

from __future__ import annotations

import json

import numpy as np

from . import btree, expander, heavy_hitters, recovery
from . import partition_sketch as ps

MAGIC = "onebitcs-bits v1"


def pack_bits(sketch: ps.SketchBits) -> bytes:
    flat = (sketch.bits.ravel() > 0).astype(np.uint8)
    return np.packbits(flat, bitorder="little").tobytes()


def unpack_bits(data: bytes, reps: int, buckets: int) -> ps.SketchBits:
    count = reps * 3 * buckets * 2
    flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if flat.size < count:
        raise ValueError("bit block shorter than schema requires")
    bits = np.where(flat[:count].astype(bool), 1, -1).astype(np.int8)
    return ps.SketchBits(bits=bits.reshape(reps, 3, buckets, 2))


def pack_sign_vector(y: np.ndarray) -> bytes:
    return np.packbits((np.asarray(y).ravel() > 0).astype(np.uint8), bitorder="little").tobytes()


def unpack_sign_vector(data: bytes, rows: int) -> np.ndarray:
    flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if flat.size < rows:
        raise ValueError("sign block shorter than expected")
    return np.where(flat[:rows].astype(bool), 1, -1).astype(np.int8)


def _constants_dict(c: ps.SketchConstants) -> dict:
    return {
        "bucket_factor": c.bucket_factor,
        "rep_factor": c.rep_factor,
        "cap_factor": c.cap_factor,
    }


def _constants_from(d: dict) -> ps.SketchConstants:
    return ps.SketchConstants(**d)


def write_blocks(path: str, scheme: str, header: dict, blocks: list[bytes]):
    header = dict(header)
    header["scheme"] = scheme
    header["block_lengths"] = [len(b) for b in blocks]
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {scheme}\n".encode())
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for block in blocks:
            fh.write(block)


def read_blocks(path: str) -> tuple[str, dict, list[bytes]]:
    with open(path, "rb") as fh:
        magic = fh.readline().decode().rstrip("\n")
        if not magic.startswith(MAGIC):
            raise ValueError(f"{path} is not a onebitcs bits file")
        header = json.loads(fh.readline().decode())
        blocks = [fh.read(length) for length in header["block_lengths"]]
    return header["scheme"], header, blocks


# -- scheme-specific save/load ------------------------------------------------

def save_ppcs(path: str, schema: ps.PointQuerySchema, bits: ps.SketchBits):
    if schema.partition.starts is None:
        raise ValueError(
            "only interval partitions are serialized; label partitions are "
            "schema-internal (layered sketches persist through their own format)"
        )
    header = {
        "n": schema.n,
        "parts": schema.partition.size,
        "k": schema.k,
        "delta": schema.delta,
        "seed": schema.seed,
        "reps": schema.reps,
        "buckets": schema.buckets,
        "constants": _constants_dict(schema.constants),
    }
    write_blocks(path, "ppcs", header, [pack_bits(bits)])


def load_ppcs(header: dict, blocks: list[bytes]):
    partition = ps.PartitionFamily.contiguous(header["n"], header["parts"])
    schema = ps.build_schema(
        partition, header["k"], header["delta"], header["seed"],
        _constants_from(header["constants"]),
    )
    if schema.reps != header["reps"] or schema.buckets != header["buckets"]:
        raise ValueError("rebuilt schema does not match file header")
    return schema, unpack_bits(blocks[0], schema.reps, schema.buckets)


def save_btree(path: str, schema: btree.BTreeSchema, level_bits: list[ps.SketchBits]):
    header = {
        "n": schema.n, "k": schema.k, "b": schema.b, "delta": schema.delta,
        "seed": schema.seed, "levels": len(schema.levels),
        "constants": _constants_dict(schema.constants),
    }
    write_blocks(path, "btree", header, [pack_bits(b) for b in level_bits])


def load_btree(header: dict, blocks: list[bytes]):
    schema = btree.build_schema(
        header["n"], header["k"], header["b"], header["delta"], header["seed"],
        _constants_from(header["constants"]),
    )
    if len(schema.levels) != header["levels"]:
        raise ValueError("rebuilt level count does not match file header")
    level_bits = [
        unpack_bits(block, level.schema.reps, level.schema.buckets)
        for block, level in zip(blocks, schema.levels)
    ]
    return schema, level_bits


def save_expander(path: str, schema: expander.ExpanderSchema, bits):
    header = {
        "n": schema.n, "k": schema.k, "seed": schema.seed,
        "layers": schema.layers_count,
        "error_fraction": schema.error_fraction,
        "constants": _constants_dict(schema.constants),
    }
    blocks = []
    for layer_bits in bits:
        blocks.append(pack_bits(layer_bits.heavy))
        blocks.append(pack_bits(layer_bits.check))
    write_blocks(path, "expander", header, blocks)


def load_expander(header: dict, blocks: list[bytes]):
    schema = expander.build_schema(
        header["n"], header["k"], header["seed"],
        _constants_from(header["constants"]),
        error_fraction=header["error_fraction"],
    )
    if schema.layers_count != header["layers"]:
        raise ValueError("rebuilt layer count does not match file header")
    bits = []
    for j, layer in enumerate(schema.layers):
        heavy = unpack_bits(blocks[2 * j], layer.heavy_schema.reps, layer.heavy_schema.buckets)
        check = unpack_bits(blocks[2 * j + 1], layer.check_schema.reps, layer.check_schema.buckets)
        bits.append(expander.LayerBits(heavy=heavy, check=check))
    return schema, tuple(bits)


def save_heavy_hitters(path: str, schema: heavy_hitters.HeavyHitterSchema, bucket_bits):
    header = {
        "n": schema.n, "k": schema.k, "seed": schema.seed,
        "buckets": schema.buckets,
        "log_factor": schema.log_factor,
        "bucket_factor": schema.bucket_factor,
        "constants": _constants_dict(schema.constants),
    }
    blocks = []
    for layers in bucket_bits:
        for layer_bits in layers:
            blocks.append(pack_bits(layer_bits.heavy))
            blocks.append(pack_bits(layer_bits.check))
    write_blocks(path, "heavy-hitters", header, blocks)


def _unpack_hh_blocks(schema: heavy_hitters.HeavyHitterSchema, blocks: list[bytes]):
    bucket_bits = []
    cursor = 0
    for sub in schema.sub_schemas:
        layers = []
        for layer in sub.layers:
            heavy = unpack_bits(blocks[cursor], layer.heavy_schema.reps, layer.heavy_schema.buckets)
            check = unpack_bits(blocks[cursor + 1], layer.check_schema.reps, layer.check_schema.buckets)
            layers.append(expander.LayerBits(heavy=heavy, check=check))
            cursor += 2
        bucket_bits.append(tuple(layers))
    return bucket_bits


def load_heavy_hitters(header: dict, blocks: list[bytes]):
    schema = heavy_hitters.build_schema(
        header["n"], header["k"], header["seed"],
        _constants_from(header["constants"]),
        log_factor=header["log_factor"],
        bucket_factor=header["bucket_factor"],
    )
    if schema.buckets != header["buckets"]:
        raise ValueError("rebuilt bucket count does not match file header")
    return schema, _unpack_hh_blocks(schema, blocks)


def save_pipeline(path: str, schema: recovery.PipelineSchema, bits: recovery.PipelineBits):
    header = {
        "n": schema.n, "k": schema.k, "delta": schema.delta, "seed": schema.seed,
        "gauss_rows": schema.gauss_schema.rows,
        "noise_sigma": schema.gauss_schema.noise_sigma,
        "hh_buckets": schema.support_schema.buckets,
        "constants": _constants_dict(schema.support_schema.constants),
    }
    blocks = []
    for layers in bits.support_bits:
        for layer_bits in layers:
            blocks.append(pack_bits(layer_bits.heavy))
            blocks.append(pack_bits(layer_bits.check))
    blocks.append(pack_sign_vector(bits.sign_bits))
    write_blocks(path, "pipeline", header, blocks)


def load_pipeline(header: dict, blocks: list[bytes]):
    schema = recovery.build_pipeline(
        header["n"], header["k"], header["delta"], header["seed"],
        gauss_rows=header["gauss_rows"], noise_sigma=header["noise_sigma"],
        constants=_constants_from(header["constants"]),
    )
    if schema.support_schema.buckets != header["hh_buckets"]:
        raise ValueError("rebuilt bucketing does not match file header")
    support_bits = _unpack_hh_blocks(schema.support_schema, blocks[:-1])
    sign_bits = unpack_sign_vector(blocks[-1], schema.gauss_schema.rows)
    return schema, recovery.PipelineBits(support_bits=support_bits, sign_bits=sign_bits)


_LOADERS = {
    "ppcs": load_ppcs,
    "btree": load_btree,
    "expander": load_expander,
    "heavy-hitters": load_heavy_hitters,
    "pipeline": load_pipeline,
}


def load_measurement(path: str):
    """Rebuild (scheme name, schema, bits) from a bits file alone."""
    scheme, header, blocks = read_blocks(path)
    if scheme not in _LOADERS:
        raise ValueError(f"unknown scheme {scheme!r} in {path}")
    schema, bits = _LOADERS[scheme](header, blocks)
    return scheme, schema, bits
