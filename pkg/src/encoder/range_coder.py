"""Adaptive multi-symbol arithmetic coder shared by the reference codecs.

32-bit integer coder with bit-level renormalisation and deferred
("pending") bits for the straddle case. Frequencies live in
:class:`AdaptiveModel`; the encoder and decoder update models identically,
so the two sides stay in lock-step.
"""

from src.core.errors import DecodeError

PRECISION = 32
TOP = (1 << PRECISION) - 1
HALF = 1 << (PRECISION - 1)
QUARTER = 1 << (PRECISION - 2)

# Bits the decoder may read past the end of a well-formed stream.
_READ_SLACK = PRECISION + 8


class AdaptiveModel:
    """Frequency table over ``n_symbols`` symbols that adapts as symbols are coded."""

    def __init__(self, n_symbols: int, increment: int = 24, limit: int = 1 << 16):
        if n_symbols < 1:
            raise ValueError(f"model needs at least one symbol, got {n_symbols}")
        if limit > QUARTER:
            raise ValueError("frequency limit must stay below a quarter of the coder range")
        self.n_symbols = n_symbols
        self.increment = increment
        self.limit = limit
        self.freqs = [1] * n_symbols
        self.total = n_symbols

    def interval(self, symbol: int) -> tuple[int, int]:
        if not 0 <= symbol < self.n_symbols:
            raise ValueError(f"symbol {symbol} outside alphabet of size {self.n_symbols}")
        low = sum(self.freqs[:symbol])
        return low, low + self.freqs[symbol]

    def find(self, target: int) -> tuple[int, int, int]:
        """Symbol whose interval contains ``target``, with its bounds."""
        low = 0
        for symbol, freq in enumerate(self.freqs):
            if target < low + freq:
                return symbol, low, low + freq
            low += freq
        raise DecodeError("arithmetic decoder target outside the model range")

    def update(self, symbol: int) -> None:
        self.freqs[symbol] += self.increment
        self.total += self.increment
        if self.total > self.limit:
            self.freqs = [max(1, f >> 1) for f in self.freqs]
            self.total = sum(self.freqs)


class RangeEncoder:
    """Encodes symbol intervals into a byte string."""

    def __init__(self) -> None:
        self._low = 0
        self._high = TOP
        self._pending = 0
        self._out = bytearray()
        self._acc = 0
        self._nbits = 0

    def _put(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._nbits += 1
        if self._nbits == 8:
            self._out.append(self._acc)
            self._acc = 0
            self._nbits = 0

    def _emit(self, bit: int) -> None:
        self._put(bit)
        for _ in range(self._pending):
            self._put(bit ^ 1)
        self._pending = 0

    def encode(self, cum_low: int, cum_high: int, total: int) -> None:
        span = self._high - self._low + 1
        self._high = self._low + span * cum_high // total - 1
        self._low = self._low + span * cum_low // total
        while True:
            if self._high < HALF:
                self._emit(0)
            elif self._low >= HALF:
                self._emit(1)
                self._low -= HALF
                self._high -= HALF
            elif self._low >= QUARTER and self._high < HALF + QUARTER:
                self._pending += 1
                self._low -= QUARTER
                self._high -= QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) | 1

    def encode_symbol(self, model: AdaptiveModel, symbol: int) -> None:
        low, high = model.interval(symbol)
        self.encode(low, high, model.total)
        model.update(symbol)

    def encode_bits(self, value: int, nbits: int) -> None:
        """Write ``nbits`` equiprobable bits, most significant first."""
        while nbits > 0:
            chunk = min(nbits, 16)
            nbits -= chunk
            part = (value >> nbits) & ((1 << chunk) - 1)
            self.encode(part, part + 1, 1 << chunk)

    def finish(self) -> bytes:
        self._pending += 1
        self._emit(0 if self._low < QUARTER else 1)
        if self._nbits:
            self._out.append(self._acc << (8 - self._nbits))
            self._acc = 0
            self._nbits = 0
        return bytes(self._out)


class RangeDecoder:
    """Inverse of :class:`RangeEncoder` over an in-memory byte string."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._bitpos = 0
        self._low = 0
        self._high = TOP
        self._value = 0
        for _ in range(PRECISION):
            self._value = (self._value << 1) | self._next_bit()

    def _next_bit(self) -> int:
        byte_index = self._bitpos >> 3
        bit = 0
        if byte_index < len(self._data):
            bit = (self._data[byte_index] >> (7 - (self._bitpos & 7))) & 1
        elif self._bitpos >= len(self._data) * 8 + _READ_SLACK:
            raise DecodeError("arithmetic-coded stream ended early")
        self._bitpos += 1
        return bit

    def _target(self, total: int) -> int:
        span = self._high - self._low + 1
        return ((self._value - self._low + 1) * total - 1) // span

    def _consume(self, cum_low: int, cum_high: int, total: int) -> None:
        span = self._high - self._low + 1
        self._high = self._low + span * cum_high // total - 1
        self._low = self._low + span * cum_low // total
        while True:
            if self._high < HALF:
                pass
            elif self._low >= HALF:
                self._low -= HALF
                self._high -= HALF
                self._value -= HALF
            elif self._low >= QUARTER and self._high < HALF + QUARTER:
                self._low -= QUARTER
                self._high -= QUARTER
                self._value -= QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) | 1
            self._value = (self._value << 1) | self._next_bit()

    def decode_symbol(self, model: AdaptiveModel) -> int:
        target = self._target(model.total)
        symbol, low, high = model.find(target)
        self._consume(low, high, model.total)
        model.update(symbol)
        return symbol

    def decode_bits(self, nbits: int) -> int:
        value = 0
        while nbits > 0:
            chunk = min(nbits, 16)
            nbits -= chunk
            total = 1 << chunk
            part = self._target(total)
            if part >= total:
                raise DecodeError("arithmetic decoder target outside the raw-bit range")
            self._consume(part, part + 1, total)
            value = (value << chunk) | part
        return value
