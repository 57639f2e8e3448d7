"""Seeded, independently named random streams."""

import hashlib
import typing

import numpy as np


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "big")


class RngRegistry(object):
    """Hands out one numpy Generator per label. Every stream is derived from
    the run seed and the label only, so draws on one stream never depend on
    how much another stream has been consumed."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("Seeds must be non-negative.")
        self._seed = seed
        self._streams: typing.Dict[str, np.random.Generator] = {}

    @property
    def seed(self) -> int:
        return self._seed

    def stream(self, label: str) -> np.random.Generator:
        if label not in self._streams:
            seq = np.random.SeedSequence(
                entropy=self._seed, spawn_key=(_label_key(label),)
            )
            self._streams[label] = np.random.default_rng(seq)
        return self._streams[label]

    __call__ = stream

    def __repr__(self):
        return f"RngRegistry(seed={self._seed}, streams={sorted(self._streams)})"
