from abc import ABC, abstractmethod

from blackchain.crypto import digest
from blackchain.entities.encoding import Decoder, Encoder

import enum
import json


def _jsonable(value):
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex()
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Base):
        return value.to_dictionary()
    if hasattr(value, "_asdict"):
        return {k: _jsonable(v) for k, v in value._asdict().items()}
    if isinstance(value, dict):
        return {str(_jsonable(k)): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted((_jsonable(v) for v in value), key=str)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Base(ABC):
    """The Base class exposes the properties of an entity as a dictionary,
    prints them as json and gives every entity a canonical byte encoding
    and a hash over it."""

    # Entities that never change after construction cache their encoding.
    _frozen = True

    def __iter__(self):
        for k in self._properties():
            yield k, getattr(self, k)

    @classmethod
    def _properties(cls):
        return [
            p for p in cls.__dict__ if isinstance(getattr(cls, p), property)
        ]

    @classmethod
    def from_dictionary(cls, d):
        d = {
            key: value for key, value in d.items() if key in cls._properties()
        }
        return cls(**d)

    def to_dictionary(self):
        return {k: _jsonable(getattr(self, k)) for k in self._properties()}

    @abstractmethod
    def encode(self, enc: Encoder):
        pass

    @classmethod
    def decode(cls, dec: Decoder):
        raise NotImplementedError(f"{cls.__name__} is encode-only.")

    def canonical_bytes(self) -> bytes:
        cached = self.__dict__.get("_canonical")
        if cached is not None:
            return cached
        enc = Encoder()
        self.encode(enc)
        data = enc.getvalue()
        if self._frozen:
            self.__dict__["_canonical"] = data
        return data

    @classmethod
    def from_bytes(cls, data: bytes):
        dec = Decoder(data)
        obj = cls.decode(dec)
        dec.expect_end()
        return obj

    @property
    def hash(self) -> bytes:
        return digest(self.canonical_bytes())

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.canonical_bytes() == other.canonical_bytes()
        )

    def __hash__(self):
        return hash(self.hash)

    def __repr__(self):
        return json.dumps(self.to_dictionary())
