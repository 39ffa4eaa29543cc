"""Keyed uniform streams and inverse-transform sample matrices.

A stream is identified by a master seed and an integer path such as
``(replication, theta_index, side)``. The path is hashed into a Philox key
(numpy's SeedSequence), so any stream can be regenerated on its own, in any
order, on any worker. Reusing one UniformMatrix at two parameter values is
exactly what "common random numbers" means here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from refprior.errors import DomainError
from refprior.models import get_model

U_MIN = 2.0 ** -53
U_MAX = 1.0 - 2.0 ** -53


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if any(p < 0 for p in self.path):
            raise DomainError("stream path entries must be non-negative integers")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise DomainError("master_seed must fit in an unsigned 64-bit integer")

    def child(self, *more: int) -> "StreamKey":
        return StreamKey(self.master_seed, self.path + tuple(more))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def label(self) -> str:
        return "/".join(str(p) for p in self.path)


@dataclass(frozen=True)
class UniformMatrix:
    """m x k uniforms strictly inside (0, 1), with the key that produced them (if any)."""

    u: np.ndarray
    key: StreamKey | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2:
            raise DomainError("UniformMatrix needs a 2-d array")
        if not np.all((u > 0.0) & (u < 1.0)):
            raise DomainError("uniforms must lie strictly inside (0, 1)")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @property
    def m(self) -> int:
        return self.u.shape[0]

    @property
    def k(self) -> int:
        return self.u.shape[1]


def uniform_matrix(key: StreamKey, m: int, k: int) -> UniformMatrix:
    if m < 1 or k < 1:
        raise DomainError(f"uniform_matrix needs m >= 1 and k >= 1, got m={m}, k={k}")
    u = key.generator().random((m, k))
    np.clip(u, U_MIN, U_MAX, out=u)
    return UniformMatrix(u, key)


def sample_matrix(model, U: UniformMatrix, theta: float) -> np.ndarray:
    """Entry (j, i) is F^-1(U[j, i]; theta); row j is sample j."""
    model = get_model(model)
    return np.asarray(model.inverse_cdf(U.u, theta), dtype=float).reshape(U.shape)
