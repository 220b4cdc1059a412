"""Adaptive binary range coder.

A 32-bit carry-propagating range coder (LZMA-style ``shift_low`` with a cache
byte) driven by a single adaptive order-0 bit model. Payload layout::

    body || terminator

``terminator`` is ``0xA0 | pad``: the encoder elides ``pad`` (0..4) trailing
zero bytes of its final flush and the decoder re-inserts them virtually. The
decoder consumes exactly ``len(body) + pad`` bytes for a valid payload, which
is what makes truncation and trailing garbage detectable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import CorruptStreamError, DomainError, TruncatedStreamError

TOP = 1 << 24
MASK32 = 0xFFFFFFFF
TERMINATOR_TAG = 0xA0
DEFAULT_CAP = 1024


@dataclass
class AdaptiveBinaryModel:
    """Zero/one counts; both halve (floor, min 1) once their sum exceeds ``cap``."""

    c0: int = 1
    c1: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        if self.c0 < 1 or self.c1 < 1:
            raise DomainError("model counts must be >= 1")
        if self.cap < 2:
            raise DomainError("cap must allow at least one count per symbol")

    @property
    def p0(self) -> float:
        return self.c0 / (self.c0 + self.c1)

    def update(self, bit: int) -> None:
        if bit:
            self.c1 += 1
        else:
            self.c0 += 1
        if self.c0 + self.c1 > self.cap:
            self.c0 = max(1, self.c0 >> 1)
            self.c1 = max(1, self.c1 >> 1)


class RangeEncoder:
    def __init__(self, model: AdaptiveBinaryModel | None = None) -> None:
        self.model = model if model is not None else AdaptiveBinaryModel()
        self.low = 0
        self.range = MASK32
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()
        self._finished = False

    def _shift_low(self) -> None:
        low = self.low
        if low < 0xFF000000 or low > MASK32:
            carry = low >> 32
            temp = self._cache
            while True:
                self._out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self._cache_size -= 1
                if not self._cache_size:
                    break
            self._cache = (low >> 24) & 0xFF
        self._cache_size += 1
        self.low = (low & 0x00FFFFFF) << 8

    def encode_bit(self, bit: int) -> None:
        self.encode_bits((bit,))

    def encode_bits(self, bits: Iterable) -> None:
        """Encode an iterable of bits; ints or the characters '0'/'1'."""
        if self._finished:
            raise RuntimeError("encoder already finished")
        m = self.model
        c0, c1, cap = m.c0, m.c1, m.cap
        low, rng = self.low, self.range
        for b in bits:
            total = c0 + c1
            bound = (rng // total) * c0
            if b == 0 or b == "0":
                rng = bound
                c0 += 1
            else:
                low += bound
                rng -= bound
                c1 += 1
            if c0 + c1 > cap:
                c0 = max(1, c0 >> 1)
                c1 = max(1, c1 >> 1)
            while rng < TOP:
                rng <<= 8
                self.low = low
                self._shift_low()
                low = self.low
        self.low, self.range = low, rng
        m.c0, m.c1 = c0, c1

    def finish(self) -> bytes:
        """Flush and return ``body || terminator``."""
        if self._finished:
            raise RuntimeError("encoder already finished")
        self._finished = True
        # Pick the value in [low, low + range) with the most trailing zero bytes.
        pad = 0
        for elided in range(4, -1, -1):
            unit = 1 << (8 * elided)
            v = -(-self.low // unit) * unit
            if v < self.low + self.range:
                self.low = v
                pad = elided
                break
        for _ in range(5):
            self._shift_low()
        out = self._out
        # The very first byte out of shift_low is the initial cache and always 0.
        if out[0] != 0:
            raise AssertionError("range coder invariant broken: leading byte non-zero")
        body = bytes(out[1 : len(out) - pad])
        if any(out[len(out) - pad :]):
            raise AssertionError("elided flush bytes are not zero")
        return body + bytes([TERMINATOR_TAG | pad])


class RangeDecoder:
    """Mirror of :class:`RangeEncoder`; ``read_bit`` makes it usable as a bit reader."""

    def __init__(self, payload: bytes, model: AdaptiveBinaryModel | None = None) -> None:
        if not payload:
            raise TruncatedStreamError("empty arithmetic payload (terminator missing)")
        term = payload[-1]
        pad = term & 0x0F
        if term & 0xF0 != TERMINATOR_TAG or pad > 4:
            raise CorruptStreamError(f"bad arithmetic terminator byte 0x{term:02x}")
        self.model = model if model is not None else AdaptiveBinaryModel()
        self._body = bytes(payload[:-1])
        self._pad = pad
        self._pos = 0
        self._virtual = 0
        self.range = MASK32
        code = 0
        for _ in range(4):
            code = (code << 8) | self._next_byte()
        self.code = code
        self.bits_decoded = 0

    def _next_byte(self) -> int:
        if self._pos < len(self._body):
            b = self._body[self._pos]
            self._pos += 1
            return b
        if self._virtual < self._pad:
            self._virtual += 1
            return 0
        raise TruncatedStreamError("arithmetic payload exhausted before decoding finished")

    def read_bit(self) -> int:
        m = self.model
        c0 = m.c0
        bound = (self.range // (c0 + m.c1)) * c0
        if self.code < bound:
            self.range = bound
            bit = 0
        else:
            self.code -= bound
            self.range -= bound
            bit = 1
        m.update(bit)
        while self.range < TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._next_byte()) & MASK32
        self.bits_decoded += 1
        return bit

    def decode_bits(self, count: int) -> list[int]:
        if count < 0:
            raise DomainError("bit count must be non-negative")
        m = self.model
        c0, c1, cap = m.c0, m.c1, m.cap
        rng, code = self.range, self.code
        out = [0] * count
        for i in range(count):
            bound = (rng // (c0 + c1)) * c0
            if code < bound:
                rng = bound
                c0 += 1
            else:
                code -= bound
                rng -= bound
                out[i] = 1
                c1 += 1
            if c0 + c1 > cap:
                c0 = max(1, c0 >> 1)
                c1 = max(1, c1 >> 1)
            while rng < TOP:
                rng <<= 8
                code = ((code << 8) | self._next_byte()) & MASK32
        self.range, self.code = rng, code
        m.c0, m.c1 = c0, c1
        self.bits_decoded += count
        return out

    def finish(self) -> None:
        """Check that the payload was consumed exactly."""
        if self._pos != len(self._body) or self._virtual != self._pad:
            raise CorruptStreamError(
                f"arithmetic payload not consumed exactly "
                f"({self._pos}/{len(self._body)} bytes, {self._virtual}/{self._pad} padding)"
            )


def arith_encode(bits: Iterable, model: AdaptiveBinaryModel | None = None) -> bytes:
    enc = RangeEncoder(model)
    enc.encode_bits(bits)
    return enc.finish()


def arith_decode(payload: bytes, count: int, model: AdaptiveBinaryModel | None = None) -> list[int]:
    dec = RangeDecoder(payload, model)
    bits = dec.decode_bits(count)
    dec.finish()
    return bits
