"""Fibonacci LFSR used as the global twirl source.

Bits are numbered 1..width as in the usual tap tables. Each step computes the
XOR of the tapped bits, shifts left by one and inserts the feedback at bit 1.
The feedback polynomial is ``x^w + sum(x^(w - t) for t in taps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Standard maximal-length tap sets (Xilinx XAPP052, plus widths 2 and 3).
MAXIMAL_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
    25: (25, 22),
    26: (26, 6, 2, 1),
    27: (27, 5, 2, 1),
    28: (28, 25),
    29: (29, 27),
    30: (30, 6, 4, 1),
    31: (31, 28),
    32: (32, 22, 2, 1),
    33: (33, 20),
    34: (34, 27, 2, 1),
    35: (35, 33),
    36: (36, 25),
    37: (37, 5, 4, 3, 2, 1),
    38: (38, 6, 5, 1),
    39: (39, 35),
    40: (40, 38, 21, 19),
    41: (41, 38),
    42: (42, 41, 20, 19),
    43: (43, 42, 38, 37),
    44: (44, 43, 18, 17),
    45: (45, 44, 42, 41),
    46: (46, 45, 26, 25),
    47: (47, 42),
    48: (48, 47, 21, 20),
    49: (49, 40),
    50: (50, 49, 24, 23),
    51: (51, 50, 36, 35),
    52: (52, 49),
    53: (53, 52, 38, 37),
    54: (54, 53, 18, 17),
    55: (55, 31),
    56: (56, 55, 35, 34),
    57: (57, 50),
    58: (58, 39),
    59: (59, 58, 38, 37),
    60: (60, 59),
    61: (61, 60, 46, 45),
    62: (62, 61, 6, 5),
    63: (63, 62),
    64: (64, 63, 61, 60),
}


class LfsrError(ValueError):
    pass


def feedback_polynomial(width: int, taps: tuple[int, ...]) -> int:
    """Polynomial over GF(2) as an int bitmask (bit i is the x^i coefficient)."""
    poly = 1 << width
    for t in taps:
        poly ^= 1 << (width - t)
    return poly


def _polymulmod(a: int, b: int, mod: int, deg: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= mod
    return out


def _xpow_mod(n: int, mod: int, deg: int) -> int:
    """x^n mod ``mod`` over GF(2)."""
    result, base = 1, 2
    if deg == 1:
        base = 1  # x == 1 mod (x + 1)
    while n:
        if n & 1:
            result = _polymulmod(result, base, mod, deg)
        base = _polymulmod(base, base, mod, deg)
        n >>= 1
    return result


@dataclass(frozen=True)
class Lfsr:
    width: int
    state: int
    taps: tuple[int, ...] = ()

    def __post_init__(self):
        if self.width < 2:
            raise LfsrError("LFSR width must be at least 2")
        taps = tuple(sorted(self.taps or MAXIMAL_TAPS.get(self.width, ()), reverse=True))
        if not taps:
            raise LfsrError(f"no reference taps for width {self.width}; pass taps explicitly")
        if taps[0] != self.width or any(not 1 <= t <= self.width for t in taps):
            raise LfsrError(f"taps {taps} invalid for width {self.width}")
        object.__setattr__(self, "taps", taps)
        if not 0 < self.state < (1 << self.width):
            raise LfsrError("LFSR state must be a nonzero word of the register width")

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def step(self) -> "Lfsr":
        s = self.state
        fb = 0
        for t in self.taps:
            fb ^= (s >> (t - 1)) & 1
        return Lfsr(self.width, ((s << 1) | fb) & self.mask, self.taps)

    def advance(self, n: int) -> "Lfsr":
        """State after ``n`` steps, in O(width^2 log n) via x^n mod the feedback polynomial."""
        if n < 0:
            raise LfsrError("cannot step an LFSR backwards")
        if n < 2 * self.width:
            out = self
            for _ in range(n):
                out = out.step()
            return out
        coeffs = _xpow_mod(n, feedback_polynomial(self.width, self.taps), self.width)
        acc, cur = 0, self
        for i in range(self.width):
            if (coeffs >> i) & 1:
                acc ^= cur.state
            cur = cur.step()
        return Lfsr(self.width, acc, self.taps)

    def field(self, index: int) -> int:
        """2-bit field ``index`` (bits 2*index and 2*index+1 of the word)."""
        return (self.state >> (2 * index)) & 3

    @classmethod
    def from_seed(cls, seed: int, width: int, taps: tuple[int, ...] = ()) -> "Lfsr":
        """Nonzero start state derived from an arbitrary integer seed."""
        raw = np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)
        value = (int(raw[0]) << 64) | int(raw[1])
        return cls(width, 1 + value % ((1 << width) - 1), taps)


def period(lfsr: Lfsr, limit: int | None = None) -> int:
    """Cycle length by direct enumeration (small widths only)."""
    limit = limit or (1 << lfsr.width)
    start = lfsr.state
    cur = lfsr.step()
    n = 1
    while cur.state != start:
        cur = cur.step()
        n += 1
        if n > limit:
            raise LfsrError("no cycle back to the start state within limit")
    return n
