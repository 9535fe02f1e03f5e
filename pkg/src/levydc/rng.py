"""Deterministic per-trajectory random streams.

All randomness derives from one master seed through explicit spawn keys, so
any (loop, trajectory, purpose) triple addresses its stream directly: no
sequential spawning state, no dependence on execution order or worker
count.  Purposes are fixed channels:

====  ======================================================
 0    dynamic-cut jump sampling (times then sizes, + before -)
 1    fixed-cut jump sampling (same internal order)
 2    diffusion Brownian increments, fine regular grid (method-independent)
 3    diffusion Brownian bridge splits at dynamic-cut jump times
 4    diffusion Brownian bridge splits at fixed-cut jump times
 5    independent small-jump Gaussians; subkeyed by (method id, resolution)
 6    substitute-driver Brownian increments, fine regular grid
 7    substitute-driver bridge splits at dynamic-cut jump times
 8    substitute-driver bridge splits at fixed-cut jump times
====  ======================================================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CH_DC_JUMPS = 0
CH_AR_JUMPS = 1
CH_BROWNIAN = 2
CH_BRIDGE_DC = 3
CH_BRIDGE_AR = 4
CH_SMALL_JUMP = 5
CH_GAUSS_SUB = 6
CH_GAUSS_BRIDGE_DC = 7
CH_GAUSS_BRIDGE_AR = 8

METHOD_IDS = {"dc": 0, "ar": 1, "none": 2}


@dataclass(frozen=True)
class TrajectorySeeds:
    """Address of one trajectory's family of random streams."""

    master_seed: int
    loop: int
    trajectory: int

    def generator(self, channel: int, *sub: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.loop, self.trajectory, channel, *sub),
        )
        return np.random.default_rng(seq)

    @property
    def key(self) -> tuple:
        return (self.master_seed, self.loop, self.trajectory)
