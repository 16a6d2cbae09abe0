"""Deterministic RNG streams for instances, solutions, probes and solver runs."""

import hashlib
from dataclasses import dataclass

import numpy as np


def _hash_to_u64(text: str) -> int:
    digest = hashlib.sha256(text.encode('ascii')).digest()
    return int.from_bytes(digest[:8], 'big', signed=False)


def derive_job_seed(base_seed: int, cell: int, trial: int) -> int:
    """
    Stable per-job seed for sweeps and multi-seed runs.

    Depends only on (base_seed, cell, trial), never on scheduling order.
    """
    if cell < 0 or trial < 0:
        raise ValueError("cell and trial must be non-negative")
    return _hash_to_u64(f"{base_seed}:cell:{cell}:trial:{trial}")


@dataclass(frozen=True)
class LabStreams:
    instance: np.random.Generator   # ground truth, measurements, noise
    solution: np.random.Generator   # R / Z draws for true solutions
    probe: np.random.Generator      # random directions, Haar V in probes
    solver: np.random.Generator     # optimizer initialisation


def make_streams(seed: int) -> LabStreams:
    """Split one seed into independent named streams."""
    root = np.random.SeedSequence(int(seed))
    ss_instance, ss_solution, ss_probe, ss_solver = root.spawn(4)
    return LabStreams(
        instance=np.random.default_rng(ss_instance),
        solution=np.random.default_rng(ss_solution),
        probe=np.random.default_rng(ss_probe),
        solver=np.random.default_rng(ss_solver),
    )
