"""MSB-first bit I/O, signed/unsigned mapping, exp-Golomb and LEB128 varints."""

from __future__ import annotations

from .errors import CorruptStreamError, DomainError, TruncatedStreamError


class BitWriter:
    """Accumulates bits MSB-first; the final partial byte is zero-padded."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_count = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._nacc += 1
        self.bit_count += 1
        if self._nacc == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def write_bits(self, value: int, nbits: int) -> None:
        """Write the low ``nbits`` of ``value``, most significant first."""
        for shift in range(nbits - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def getvalue(self) -> bytes:
        if self._nacc:
            return bytes(self._buf) + bytes([self._acc << (8 - self._nacc)])
        return bytes(self._buf)


class BitReader:
    """Reads bits MSB-first from ``data``.

    ``bit_count`` limits the readable bits (defaults to ``8 * len(data)``), so
    the zero padding of a final byte can be excluded.
    """

    def __init__(self, data: bytes, bit_count: int | None = None) -> None:
        self._data = bytes(data)
        self.bit_count = 8 * len(self._data) if bit_count is None else bit_count
        if self.bit_count > 8 * len(self._data):
            raise DomainError("bit_count exceeds the buffer size")
        self.pos = 0

    def read_bit(self) -> int:
        if self.pos >= self.bit_count:
            raise TruncatedStreamError(f"bit stream exhausted after {self.pos} bits")
        byte = self._data[self.pos >> 3]
        bit = (byte >> (7 - (self.pos & 7))) & 1
        self.pos += 1
        return bit

    def read_bits(self, nbits: int) -> int:
        value = 0
        for _ in range(nbits):
            value = (value << 1) | self.read_bit()
        return value

    @property
    def remaining(self) -> int:
        return self.bit_count - self.pos


def zigzag(s: int) -> int:
    """Map a signed integer to unsigned: 0, -1, 1, -2, 2 -> 0, 1, 2, 3, 4."""
    return 2 * s if s >= 0 else -2 * s - 1


def unzigzag(u: int) -> int:
    if u < 0:
        raise DomainError(f"unzigzag expects a non-negative integer, got {u}")
    return u >> 1 if u % 2 == 0 else -((u + 1) >> 1)


def exp_golomb_codeword(n: int) -> str:
    """Zero-order exp-Golomb codeword of ``n`` as a string of '0'/'1'."""
    if n < 0:
        raise DomainError(f"exp-Golomb codes non-negative integers only, got {n}")
    binary = format(n + 1, "b")
    return "0" * (len(binary) - 1) + binary


def exp_golomb_length(n: int) -> int:
    return 2 * (n + 1).bit_length() - 1


def exp_golomb_encode(n: int, writer: BitWriter) -> None:
    if n < 0:
        raise DomainError(f"exp-Golomb codes non-negative integers only, got {n}")
    m = n + 1
    nbits = m.bit_length()
    writer.write_bits(0, nbits - 1)
    writer.write_bits(m, nbits)


# Residuals are bounded by 2 * 255 after zigzag, so longer prefixes mean garbage.
MAX_PREFIX_ZEROS = 32


def exp_golomb_decode(reader) -> int:
    """Decode one codeword from any object with a ``read_bit()`` method."""
    zeros = 0
    read_bit = reader.read_bit
    while read_bit() == 0:
        zeros += 1
        if zeros > MAX_PREFIX_ZEROS:
            raise CorruptStreamError("exp-Golomb prefix longer than any valid codeword")
    value = 1
    for _ in range(zeros):
        value = (value << 1) | read_bit()
    return value - 1


def encode_varint(n: int) -> bytes:
    """Unsigned LEB128."""
    if n < 0:
        raise DomainError(f"varints are unsigned, got {n}")
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Return ``(value, next_offset)``."""
    value = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise TruncatedStreamError("varint runs past the end of the buffer")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise TruncatedStreamError("varint longer than 64 bits")
