"""Arithmetic over binary circulant matrices.

An r x r binary circulant is determined by its first row, which we treat
as a polynomial in GF(2)[x]/(x^r - 1) (bit j of the row = coefficient of
x^j).  Row-vector-times-circulant is then plain polynomial multiplication,
which is all the key algebra needs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CirculantPoly",
    "NotInvertible",
    "cyc_add",
    "cyc_mul",
    "cyc_inverse",
    "cyc_transpose",
]

# Below this weight a shift-and-XOR product over the lighter operand's
# support beats the integer-multiplication path.
_SPARSE_MUL_CUTOFF = 64


class NotInvertible(ValueError):
    """The polynomial shares a factor with x^r - 1 and has no inverse."""


class CirculantPoly:
    """First row of an r x r binary circulant, stored as an int bitmask."""

    __slots__ = ("r", "_bits")

    def __init__(self, r: int, bits: int):
        if r <= 0:
            raise ValueError(f"block size must be positive, got {r}")
        if bits < 0 or bits >> r:
            raise ValueError("row bits out of range for block size")
        self.r = r
        self._bits = bits

    # --- constructors -------------------------------------------------

    @classmethod
    def zero(cls, r: int) -> "CirculantPoly":
        return cls(r, 0)

    @classmethod
    def one(cls, r: int) -> "CirculantPoly":
        return cls(r, 1)

    @classmethod
    def monomial(cls, r: int, k: int) -> "CirculantPoly":
        return cls(r, 1 << (k % r))

    @classmethod
    def from_support(cls, r: int, support) -> "CirculantPoly":
        bits = 0
        for j in support:
            j = int(j)
            if not 0 <= j < r:
                raise ValueError(f"support index {j} out of range [0, {r})")
            if bits >> j & 1:
                raise ValueError(f"duplicate support index {j}")
            bits |= 1 << j
        return cls(r, bits)

    @classmethod
    def from_dense(cls, row) -> "CirculantPoly":
        row = np.asarray(row, dtype=np.uint8) & 1
        bits = int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")
        return cls(len(row), bits)

    # --- views --------------------------------------------------------

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def weight(self) -> int:
        return bin(self._bits).count("1")

    @property
    def support(self) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(self.dense()))

    def dense(self) -> np.ndarray:
        """First row as a length-r uint8 array."""
        raw = self._bits.to_bytes((self.r + 7) // 8, "little")
        return np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                             count=self.r, bitorder="little")

    def is_zero(self) -> bool:
        return self._bits == 0

    # --- ring operations ----------------------------------------------

    def __add__(self, other: "CirculantPoly") -> "CirculantPoly":
        self._check_size(other)
        return CirculantPoly(self.r, self._bits ^ other._bits)

    def __mul__(self, other: "CirculantPoly") -> "CirculantPoly":
        self._check_size(other)
        a, b = self._bits, other._bits
        if a == 0 or b == 0:
            return CirculantPoly(self.r, 0)
        wa, wb = bin(a).count("1"), bin(b).count("1")
        if wa > wb:
            a, b, wa = b, a, wb
        if wa <= _SPARSE_MUL_CUTOFF:
            prod = _mul_sparse(a, b, self.r)
        else:
            prod = _mul_lanes(a, b, self.r)
        return CirculantPoly(self.r, prod)

    def transpose(self) -> "CirculantPoly":
        """Circulant transpose: support index j maps to (r - j) mod r."""
        r, bits = self.r, self._bits
        out = bits & 1  # x^0 is fixed
        rest = bits >> 1
        if rest:
            # reverse the remaining r-1 bits
            rev = int(f"{rest:0{r - 1}b}"[::-1], 2)
            out |= rev << 1
        return CirculantPoly(r, out)

    def inverse(self) -> "CirculantPoly":
        """Multiplicative inverse mod x^r - 1, or raise NotInvertible."""
        if self._bits == 0:
            raise NotInvertible("zero polynomial has no inverse")
        inv = _invert_mod(self._bits, self.r)
        return CirculantPoly(self.r, inv)

    # --- misc ---------------------------------------------------------

    def _check_size(self, other: "CirculantPoly") -> None:
        if not isinstance(other, CirculantPoly):
            raise TypeError(f"expected CirculantPoly, got {type(other).__name__}")
        if self.r != other.r:
            raise ValueError(f"block size mismatch: {self.r} != {other.r}")

    def __eq__(self, other) -> bool:
        return (isinstance(other, CirculantPoly)
                and self.r == other.r and self._bits == other._bits)

    def __hash__(self) -> int:
        return hash((self.r, self._bits))

    def __repr__(self) -> str:
        supp = self.support
        if len(supp) > 12:
            return f"CirculantPoly(r={self.r}, weight={self.weight})"
        return f"CirculantPoly(r={self.r}, support={list(supp)})"


# --- low-level GF(2)[x] helpers on int bitmasks -------------------------


def _rotl(bits: int, s: int, r: int, mask: int) -> int:
    s %= r
    return ((bits << s) | (bits >> (r - s))) & mask if s else bits


def _mul_sparse(a: int, b: int, r: int) -> int:
    """Product mod x^r - 1 by rotating b once per set bit of a."""
    mask = (1 << r) - 1
    acc = 0
    j = 0
    while a:
        tz = (a & -a).bit_length() - 1
        j += tz
        acc ^= _rotl(b, j, r, mask)
        a >>= tz + 1
        j += 1
    return acc


def _mul_lanes(a: int, b: int, r: int) -> int:
    """Carryless product via plain integer multiply on 16-bit lanes.

    Each GF(2) coefficient gets its own 16-bit lane, so cross-coefficient
    carries cannot happen for r < 2^16; the product's coefficient parities
    are read back lane by lane and folded mod x^r - 1.
    """
    if r >= 1 << 16:
        return _mul_sparse(a, b, r)
    wide_a = _spread16(a, r)
    wide_b = _spread16(b, r)
    prod = wide_a * wide_b
    lanes = np.frombuffer(prod.to_bytes(4 * r, "little"), dtype="<u2")
    coeffs = (lanes & 1).astype(np.uint8)  # coefficients 0 .. 2r-2
    folded = coeffs[:r].copy()
    folded[: r - 1] ^= coeffs[r : 2 * r - 1]
    return int.from_bytes(np.packbits(folded, bitorder="little").tobytes(), "little")


def _spread16(bits: int, r: int) -> int:
    raw = bits.to_bytes((r + 7) // 8, "little")
    lanes = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                          count=r, bitorder="little").astype("<u2")
    return int.from_bytes(lanes.tobytes(), "little")


def _poly_deg(p: int) -> int:
    return p.bit_length() - 1


def _invert_mod(a: int, r: int) -> int:
    """Extended Euclid for a(x) mod x^r - 1 over GF(2)."""
    modulus = (1 << r) | 1
    # Invariants: s*a = u (mod modulus), t*a = v (mod modulus).
    u, v = a, modulus
    s, t = 1, 0
    while u:
        du, dv = _poly_deg(u), _poly_deg(v)
        if du < dv:
            u, v = v, u
            s, t = t, s
            continue
        shift = du - dv
        u ^= v << shift
        s ^= t << shift
    if v != 1:  # gcd(a, x^r - 1) != 1
        raise NotInvertible(f"gcd with x^{r} - 1 has degree {_poly_deg(v)}")
    return _reduce_mod(t, r)


def _reduce_mod(p: int, r: int) -> int:
    """Reduce a GF(2)[x] polynomial mod x^r - 1 (fold high bits down)."""
    mask = (1 << r) - 1
    while p >> r:
        p = (p & mask) ^ (p >> r)
    return p


# --- spec-facing operation aliases --------------------------------------


def cyc_add(a: CirculantPoly, b: CirculantPoly) -> CirculantPoly:
    """Coefficient-wise XOR of first rows."""
    return a + b


def cyc_mul(a: CirculantPoly, b: CirculantPoly) -> CirculantPoly:
    """Polynomial product modulo x^r - 1."""
    return a * b


def cyc_inverse(a: CirculantPoly) -> CirculantPoly:
    """Inverse in GF(2)[x]/(x^r - 1); raises NotInvertible otherwise."""
    return a.inverse()


def cyc_transpose(a: CirculantPoly) -> CirculantPoly:
    """First row of the transposed circulant."""
    return a.transpose()
