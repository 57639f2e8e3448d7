"""
Canonical byte encoding.

Fields are written in declared order, integers are big-endian and fixed
width, floats are IEEE-754 doubles and every variable length item (bytes,
strings, lists) carries a u32 length prefix. Hashes computed over these
bytes are stable across platforms.
"""

import struct
import typing

from blackchain.entities.utils import ChainParseError

_U8 = struct.Struct(">B")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I64 = struct.Struct(">q")
_F64 = struct.Struct(">d")


class Encoder(object):
    def __init__(self):
        self._parts = []

    def u8(self, value: int) -> "Encoder":
        self._parts.append(_U8.pack(value))
        return self

    def u32(self, value: int) -> "Encoder":
        self._parts.append(_U32.pack(value))
        return self

    def u64(self, value: int) -> "Encoder":
        self._parts.append(_U64.pack(value))
        return self

    def i64(self, value: int) -> "Encoder":
        self._parts.append(_I64.pack(value))
        return self

    def f64(self, value: float) -> "Encoder":
        self._parts.append(_F64.pack(value))
        return self

    def boolean(self, value: bool) -> "Encoder":
        return self.u8(1 if value else 0)

    def raw(self, value: bytes) -> "Encoder":
        self._parts.append(bytes(value))
        return self

    def blob(self, value: bytes) -> "Encoder":
        self._parts.append(_U32.pack(len(value)))
        self._parts.append(bytes(value))
        return self

    def text(self, value: str) -> "Encoder":
        return self.blob(value.encode("utf-8"))

    def seq(
        self, items: typing.Iterable, write: typing.Callable
    ) -> "Encoder":
        items = list(items)
        self.u32(len(items))
        for item in items:
            write(self, item)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Decoder(object):
    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if n < 0 or end > len(self._data):
            raise ChainParseError(
                f"Truncated input at offset {self._pos} (wanted {n} bytes)."
            )
        chunk = self._data[self._pos : end].tobytes()
        self._pos = end
        return chunk

    def u8(self) -> int:
        return _U8.unpack(self._take(1))[0]

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self._take(8))[0]

    def i64(self) -> int:
        return _I64.unpack(self._take(8))[0]

    def f64(self) -> float:
        return _F64.unpack(self._take(8))[0]

    def boolean(self) -> bool:
        value = self.u8()
        if value not in (0, 1):
            raise ChainParseError(f"Invalid boolean byte {value}.")
        return value == 1

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as e:
            raise ChainParseError(f"Invalid utf-8 string: {e}")

    def seq(self, read: typing.Callable) -> list:
        return [read(self) for _ in range(self.u32())]

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_end(self):
        if self.remaining:
            raise ChainParseError(
                f"{self.remaining} trailing bytes after record."
            )
