"""
Signing and hashing helpers.

Ed25519 signatures are deterministic, so identical seeds give identical
signatures and therefore byte-identical chains. Private keys are derived
from a seeded random stream instead of the OS entropy pool.
"""

import functools
import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

HASH_SIZE = 32
ZERO_HASH = b"\x00" * HASH_SIZE


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def leading_zero_bits(h: bytes) -> int:
    bits = 0
    for byte in h:
        if byte == 0:
            bits += 8
            continue
        return bits + (8 - byte.bit_length())
    return bits


class KeyPair(object):
    """An Ed25519 key pair. The public half is kept as raw bytes."""

    def __init__(self, private_key: Ed25519PrivateKey):
        self._private_key = private_key
        self._public_key = private_key.public_key().public_bytes(
            Encoding.Raw, PublicFormat.Raw
        )

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != 32:
            raise ValueError("Ed25519 seeds are exactly 32 bytes.")
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    @classmethod
    def from_rng(cls, rng) -> "KeyPair":
        """Derives a key pair from a numpy Generator."""
        return cls.from_seed(rng.bytes(32))

    @property
    def public_key(self) -> bytes:
        return self._public_key

    def sign(self, message: bytes) -> bytes:
        return self._private_key.sign(message)

    def __repr__(self):
        return f"KeyPair({self._public_key.hex()[:16]})"


@functools.lru_cache(maxsize=1 << 17)
def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """Checks an Ed25519 signature. Results are memoized since verification
    is a pure function of its inputs."""
    if len(public_key) != 32 or len(signature) != 64:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(
            signature, message
        )
        return True
    except (InvalidSignature, ValueError):
        return False
