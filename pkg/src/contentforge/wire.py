"""Shared big-endian wire helpers for the bundle file formats.

All bundle integers are big-endian. Strings come in two sizes:
string16 (u16 byte length + UTF-8 bytes) and string32 (u32 + UTF-8).
"""

from __future__ import annotations

import io
import struct
from typing import BinaryIO, Protocol


class CodecError(ValueError):
    """Raised when binary bundle data cannot be decoded."""


MAX_STRING16 = 0xFFFF


class ByteWriter:
    """Accumulates a byte sequence of packed big-endian fields."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def u8(self, value: int) -> None:
        self._buf.append(value & 0xFF)

    def i8(self, value: int) -> None:
        self._buf += struct.pack(">b", value)

    def u16(self, value: int) -> None:
        self._buf += struct.pack(">H", value)

    def u32(self, value: int) -> None:
        self._buf += struct.pack(">I", value)

    def u64(self, value: int) -> None:
        self._buf += struct.pack(">Q", value)

    def raw(self, data: bytes) -> None:
        self._buf += data

    def string16(self, text: str) -> None:
        data = text.encode("utf-8")
        if len(data) > MAX_STRING16:
            raise CodecError(f"string of {len(data)} bytes exceeds the u16 length field")
        self.u16(len(data))
        self.raw(data)

    def string32(self, text: str) -> None:
        data = text.encode("utf-8")
        self.u32(len(data))
        self.raw(data)

    def getvalue(self) -> bytes:
        return bytes(self._buf)

    def __len__(self) -> int:
        return len(self._buf)


class ByteParser:
    """Reads packed big-endian fields from a byte buffer, checking bounds."""

    def __init__(self, data: bytes, offset: int = 0) -> None:
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CodecError(
                f"truncated input: wanted {n} bytes at offset {self.offset}, "
                f"have {len(self.data) - self.offset}"
            )
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def i8(self) -> int:
        return struct.unpack(">b", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def string16(self) -> str:
        return self._string(self.u16())

    def string32(self) -> str:
        return self._string(self.u32())

    def _string(self, length: int) -> str:
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError(f"invalid UTF-8 at offset {self.offset}: {exc.reason}") from None

    def expect_magic(self, magic: bytes) -> None:
        found = self.take(len(magic))
        if found != magic:
            raise CodecError(f"bad magic: expected {magic!r}, found {found!r}")

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def at_end(self) -> bool:
        return self.offset == len(self.data)


class ByteSource(Protocol):
    """Sequential byte source with a skip that does not read skipped bytes."""

    def read(self, n: int) -> bytes: ...

    def skip(self, n: int) -> None: ...


class StreamSource:
    """ByteSource over a seekable binary stream (file or BytesIO)."""

    def __init__(self, stream: BinaryIO) -> None:
        self._stream = stream

    def read(self, n: int) -> bytes:
        return self._stream.read(n)

    def skip(self, n: int) -> None:
        self._stream.seek(n, io.SEEK_CUR)

    def close(self) -> None:
        self._stream.close()


class CountingSource:
    """ByteSource wrapper that tallies bytes read and bytes skipped."""

    def __init__(self, inner: ByteSource) -> None:
        self._inner = inner
        self.bytes_read = 0
        self.bytes_skipped = 0

    def read(self, n: int) -> bytes:
        data = self._inner.read(n)
        self.bytes_read += len(data)
        return data

    def skip(self, n: int) -> None:
        self._inner.skip(n)
        self.bytes_skipped += n

    def close(self) -> None:
        close = getattr(self._inner, "close", None)
        if close is not None:
            close()
