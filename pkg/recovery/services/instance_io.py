"""
LRL1 instance files.

Layout (little-endian):
    magic b'LRL1', version u8 = 1,
    tags u8 x3: problem kind, ground-truth kind, noise kind,
    u64 x6: d1, d2, r, k, m, |S|,
    f64 x5: s (NaN for sensing), p, noise scale, t0, p0,
    then row-major arrays: Σ* (r), U* (d1×r), V* (d2×r), X* (d1×d2),
    sensing matrices (m×d1×d2, f64) or index pairs (m×2, u64),
    S (|S|, u64), eps (m, f64), y (m, f64).

St is recomputed from eps and t0 on load.

Factor files are JSON objects {"W1": [[...]], "W2": [[...]]} as written by
FactorPair.to_dict; symmetric pairs carry W1 only.
"""

import json
import logging
import struct

import numpy as np

from recovery.models import (
    GROUND_TRUTH_TAGS,
    NOISE_TAGS,
    PROBLEM_TAGS,
    SENSING_PROBLEMS,
    SYMMETRIC_PROBLEMS,
    EnsembleKindEnum,
    FactorPair,
    GroundTruth,
    Instance,
    MeasurementEnsemble,
    NoiseModel,
    NoiseRealization,
)
from recovery.services.problem import InvalidDimensionsError

logger = logging.getLogger(__name__)

MAGIC = b'LRL1'
VERSION = 1
HEADER = struct.Struct('<4sBBBB6Q5d')
F64 = np.dtype('<f8')
U64 = np.dtype('<u8')


class InstanceFormatError(Exception):
    """File is not a valid LRL1 instance"""
    pass


def encode_instance(inst: Instance) -> bytes:
    gt, ens, noise = inst.gt, inst.ens, inst.noise
    header = HEADER.pack(
        MAGIC, VERSION,
        PROBLEM_TAGS.index(inst.kind),
        GROUND_TRUTH_TAGS.index(gt.kind),
        NOISE_TAGS.index(noise.model.kind),
        gt.d1, gt.d2, gt.r, inst.k, inst.m, noise.S.size,
        float('nan') if ens.s is None else ens.s,
        noise.p, noise.model.scale, noise.t0, noise.p0,
    )
    parts = [
        header,
        np.ascontiguousarray(gt.Sigmastar, dtype=F64).tobytes(),
        np.ascontiguousarray(gt.Ustar, dtype=F64).tobytes(),
        np.ascontiguousarray(gt.Vstar, dtype=F64).tobytes(),
        np.ascontiguousarray(gt.Xstar, dtype=F64).tobytes(),
    ]
    if ens.is_sensing:
        parts.append(np.ascontiguousarray(ens.matrices, dtype=F64).tobytes())
    else:
        parts.append(np.ascontiguousarray(ens.indices, dtype=U64).tobytes())
    parts.append(np.ascontiguousarray(noise.S, dtype=U64).tobytes())
    parts.append(np.ascontiguousarray(noise.eps, dtype=F64).tobytes())
    parts.append(np.ascontiguousarray(inst.y, dtype=F64).tobytes())
    return b''.join(parts)


class _Reader:
    def __init__(self, payload: bytes, offset: int):
        self.payload = payload
        self.offset = offset

    def take(self, dtype, count, shape=None):
        nbytes = dtype.itemsize * count
        if self.offset + nbytes > len(self.payload):
            raise InstanceFormatError("Instance file is truncated")
        arr = np.frombuffer(self.payload, dtype=dtype, count=count, offset=self.offset).copy()
        self.offset += nbytes
        return arr.reshape(shape) if shape is not None else arr


def decode_instance(payload: bytes) -> Instance:
    if len(payload) < HEADER.size:
        raise InstanceFormatError("Instance file is shorter than its header")
    (magic, version, problem_tag, gt_tag, noise_tag,
     d1, d2, r, k, m, n_s, s, p, scale, t0, p0) = HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise InstanceFormatError(f"Bad magic bytes {magic!r}")
    if version != VERSION:
        raise InstanceFormatError(f"Unsupported instance version {version}")
    try:
        problem_kind = PROBLEM_TAGS[problem_tag]
        gt_kind = GROUND_TRUTH_TAGS[gt_tag]
        noise_kind = NOISE_TAGS[noise_tag]
    except IndexError as e:
        raise InstanceFormatError("Unknown kind tag in header") from e

    reader = _Reader(payload, HEADER.size)
    sigma = reader.take(F64, r)
    U = reader.take(F64, d1 * r, (d1, r))
    V = reader.take(F64, d2 * r, (d2, r))
    X = reader.take(F64, d1 * d2, (d1, d2))
    gt = GroundTruth(d1=d1, d2=d2, r=r, Ustar=U, Sigmastar=sigma, Vstar=V, Xstar=X, kind=gt_kind)

    if problem_kind in SENSING_PROBLEMS:
        matrices = reader.take(F64, m * d1 * d2, (m, d1, d2))
        ens = MeasurementEnsemble(kind=EnsembleKindEnum.SENSING, d1=d1, d2=d2, matrices=matrices)
    else:
        indices = reader.take(U64, m * 2, (m, 2)).astype(np.int64)
        if np.any(indices[:, 0] >= d1) or np.any(indices[:, 1] >= d2):
            raise InstanceFormatError(f"Observed entry outside the {d1}x{d2} matrix")
        ens = MeasurementEnsemble(kind=EnsembleKindEnum.COMPLETION, d1=d1, d2=d2, indices=indices, s=s)

    S = reader.take(U64, n_s).astype(np.int64)
    if np.any(S >= m):
        raise InstanceFormatError(f"Corrupted index {int(S.max())} in S, expected < {m}")
    eps = reader.take(F64, m)
    y = reader.take(F64, m)
    if reader.offset != len(payload):
        raise InstanceFormatError(f"{len(payload) - reader.offset} trailing bytes after instance data")

    St = S[np.abs(eps[S]) >= t0]
    noise = NoiseRealization(
        p=p, model=NoiseModel(kind=noise_kind, scale=scale),
        S=S, eps=eps, t0=t0, p0=p0, St=St,
    )
    return Instance(gt=gt, ens=ens, noise=noise, y=y, k=k, symmetric=problem_kind in SYMMETRIC_PROBLEMS)


def dump_instance(inst: Instance, path) -> int:
    payload = encode_instance(inst)
    with open(path, 'wb') as fh:
        fh.write(payload)
    logger.info(f"Wrote {inst.kind} instance ({len(payload)} bytes) to {path}")
    return len(payload)


def load_instance(path) -> Instance:
    try:
        with open(path, 'rb') as fh:
            payload = fh.read()
    except OSError as e:
        raise InstanceFormatError(f"Cannot read instance file {path}: {e}") from e
    return decode_instance(payload)


def load_factors(path, inst: Instance) -> FactorPair:
    """
    Read an explicit point (W1, W2) for inst.

    Raises:
        InstanceFormatError: unreadable or malformed file
        InvalidDimensionsError: shapes do not match inst
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
        W1 = np.asarray(payload['W1'], dtype=float)
        W2 = np.asarray(payload['W2'], dtype=float) if payload.get('W2') is not None else None
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InstanceFormatError(f"Cannot read factor file {path}: {e}") from e

    if W1.shape != (inst.d1, inst.k):
        raise InvalidDimensionsError(f"W1 must be {inst.d1}x{inst.k}, got {'x'.join(map(str, W1.shape))}")
    if inst.symmetric:
        if W2 is not None:
            raise InvalidDimensionsError("Symmetric instances take W1 only")
        W = FactorPair(W1)
    else:
        if W2 is None or W2.shape != (inst.k, inst.d2):
            shape = 'nothing' if W2 is None else 'x'.join(map(str, W2.shape))
            raise InvalidDimensionsError(f"W2 must be {inst.k}x{inst.d2}, got {shape}")
        W = FactorPair(W1, W2)
    if not W.is_finite():
        raise InvalidDimensionsError("Factor file holds non-finite entries")
    logger.debug(f"Loaded {inst.kind} factors from {path}")
    return W
