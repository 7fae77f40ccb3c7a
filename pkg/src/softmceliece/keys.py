"""System parameters, QC-MDPC key generation, and key serialization.

The private key is a row of n0 sparse circulant blocks [H_0 | ... | H_{n0-1}]
with column weight d_v.  The public key is the non-identity part of the
systematic generator matrix: one dense circulant row g_i per message block,
g_i = transpose(H_{n0-1}^{-1} * H_i), so the payload is (n0 - 1) * r bits.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .qc_ring import CirculantPoly, NotInvertible

__all__ = [
    "SystemParams",
    "PrivateKey",
    "PublicKey",
    "KeyFormatError",
    "KeyGenerationError",
    "generate_keypair",
    "derive_public",
    "serialize_key",
    "deserialize_key",
    "PRESETS",
]

_MAGIC = b"SMCE"
_VERSION = 1
_KIND_PRIVATE = 0
_KIND_PUBLIC = 1
# magic, version, kind, n0, r, d_v, q, sigma, t_lower, max_iter
_HEADER = struct.Struct("<4sBBHIHBdIH")

_INVERTIBILITY_RETRIES = 100


class KeyFormatError(ValueError):
    """Malformed serialized key."""


class KeyGenerationError(RuntimeError):
    """Key generation could not complete (pathological parameters)."""


def expected_error_count(n: int, sigma: float) -> float:
    """Mean number of sign flips that Gaussian noise of scale sigma induces
    on n antipodal symbols: (n/2) * erfc(1 / (sigma * sqrt(2)))."""
    if sigma <= 0.0:
        return 0.0
    return 0.5 * n * math.erfc(1.0 / (sigma * math.sqrt(2.0)))


@dataclass(frozen=True)
class SystemParams:
    """Public scheme parameters.

    n0:      number of circulant blocks (code rate (n0-1)/n0)
    r:       circulant block size, odd
    d_v:     column weight of the private parity-check blocks
    sigma:   intentional-noise standard deviation
    t_lower: rejection threshold on induced bit errors (default: round(t_hat))
    q:       quantizer bits per ciphertext sample
    max_iter: decoder iteration cap
    """

    n0: int
    r: int
    d_v: int
    sigma: float
    t_lower: int = field(default=-1)
    q: int = 16
    max_iter: int = 100

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError(f"n0 must be >= 2, got {self.n0}")
        if self.r < 3 or self.r % 2 == 0:
            raise ValueError(f"r must be odd and >= 3, got {self.r}")
        if not 0 < self.d_v < self.r:
            raise ValueError(f"d_v must be in (0, r), got {self.d_v}")
        if self.sigma < 0.0 or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 4 <= self.q <= 32:
            raise ValueError(f"q must be in [4, 32], got {self.q}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.t_lower == -1:
            # default threshold: expected error count, at least 1
            object.__setattr__(self, "t_lower",
                               max(1, round(expected_error_count(self.n, self.sigma))))
        if self.t_lower < 0:
            raise ValueError(f"t_lower must be >= 0, got {self.t_lower}")
        if self.t_lower >= self.n:
            raise ValueError("t_lower must be below the code length")

    @property
    def n(self) -> int:
        return self.n0 * self.r

    @property
    def k(self) -> int:
        return (self.n0 - 1) * self.r

    @property
    def d_c(self) -> int:
        return self.n0 * self.d_v

    @property
    def rate(self) -> float:
        return (self.n0 - 1) / self.n0

    @property
    def t_hat(self) -> float:
        return expected_error_count(self.n, self.sigma)

    def with_sigma(self, sigma: float) -> "SystemParams":
        """Same code, different noise level; t_lower re-derived."""
        return replace(self, sigma=sigma, t_lower=-1)


@dataclass(frozen=True)
class PrivateKey:
    params: SystemParams
    h_blocks: tuple

    def __post_init__(self):
        p = self.params
        if len(self.h_blocks) != p.n0:
            raise ValueError(f"expected {p.n0} blocks, got {len(self.h_blocks)}")
        for i, h in enumerate(self.h_blocks):
            if h.r != p.r:
                raise ValueError(f"block {i} has size {h.r}, expected {p.r}")
            if h.weight != p.d_v:
                raise ValueError(f"block {i} has weight {h.weight}, expected {p.d_v}")


@dataclass(frozen=True)
class PublicKey:
    params: SystemParams
    p_blocks: tuple

    def __post_init__(self):
        p = self.params
        if len(self.p_blocks) != p.n0 - 1:
            raise ValueError(f"expected {p.n0 - 1} blocks, got {len(self.p_blocks)}")
        for i, g in enumerate(self.p_blocks):
            if g.r != p.r:
                raise ValueError(f"block {i} has size {g.r}, expected {p.r}")

    @property
    def size_bits(self) -> int:
        return (self.params.n0 - 1) * self.params.r


def _sample_support(rng: np.random.Generator, r: int, weight: int) -> CirculantPoly:
    """Uniform weight-`weight` first row, by rejection on repeated indices."""
    picked: set[int] = set()
    while len(picked) < weight:
        picked.add(int(rng.integers(0, r)))
    return CirculantPoly.from_support(r, sorted(picked))


def generate_keypair(params: SystemParams, seed) -> tuple[PrivateKey, PublicKey]:
    """Sample a private key and derive its systematic public key.

    The last block is resampled until invertible in GF(2)[x]/(x^r - 1)
    (bounded retries), since the systematic form needs its inverse.
    """
    rng = np.random.default_rng(seed)
    blocks = [_sample_support(rng, params.r, params.d_v)
              for _ in range(params.n0 - 1)]

    last = None
    last_inv = None
    for _ in range(_INVERTIBILITY_RETRIES):
        candidate = _sample_support(rng, params.r, params.d_v)
        try:
            last_inv = candidate.inverse()
        except NotInvertible:
            continue
        last = candidate
        break
    if last is None:
        raise KeyGenerationError(
            f"no invertible weight-{params.d_v} block found in "
            f"{_INVERTIBILITY_RETRIES} attempts (r={params.r})")

    blocks.append(last)
    sk = PrivateKey(params, tuple(blocks))
    pk = _public_from_blocks(params, blocks, last_inv)
    return sk, pk


def derive_public(sk: PrivateKey) -> PublicKey:
    """Recompute the public key; fails if the last block is not invertible."""
    last_inv = sk.h_blocks[-1].inverse()
    return _public_from_blocks(sk.params, sk.h_blocks, last_inv)


def _public_from_blocks(params, h_blocks, last_inv) -> PublicKey:
    p_blocks = tuple((last_inv * h).transpose() for h in h_blocks[:-1])
    return PublicKey(params, p_blocks)


# --- serialization -------------------------------------------------------


def _pack_header(params: SystemParams, kind: int) -> bytes:
    return _HEADER.pack(_MAGIC, _VERSION, kind, params.n0, params.r,
                        params.d_v, params.q, params.sigma,
                        params.t_lower, params.max_iter)


def _row_bytes(r: int) -> int:
    return (r + 7) // 8


def serialize_key(key) -> bytes:
    """Encode a key (either kind) to the binary key format."""
    params = key.params
    if isinstance(key, PrivateKey):
        out = [_pack_header(params, _KIND_PRIVATE)]
        for h in key.h_blocks:
            out.append(struct.pack(f"<{params.d_v}I", *h.support))
        return b"".join(out)
    if isinstance(key, PublicKey):
        out = [_pack_header(params, _KIND_PUBLIC)]
        for g in key.p_blocks:
            out.append(g.bits.to_bytes(_row_bytes(params.r), "little"))
        return b"".join(out)
    raise TypeError(f"not a key: {type(key).__name__}")


def deserialize_key(data: bytes):
    """Decode a serialized key; returns PrivateKey or PublicKey."""
    if len(data) < _HEADER.size:
        raise KeyFormatError("truncated header")
    magic, version, kind, n0, r, d_v, q, sigma, t_lower, max_iter = \
        _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise KeyFormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise KeyFormatError(f"unsupported version {version}")
    if r % 2 == 0:
        raise KeyFormatError(f"even block size {r} rejected")
    try:
        params = SystemParams(n0=n0, r=r, d_v=d_v, sigma=sigma,
                              t_lower=t_lower, q=q, max_iter=max_iter)
    except ValueError as exc:
        raise KeyFormatError(f"invalid parameters: {exc}") from exc

    body = data[_HEADER.size:]
    if kind == _KIND_PRIVATE:
        expect = n0 * d_v * 4
        if len(body) != expect:
            raise KeyFormatError(f"private payload is {len(body)} bytes, "
                                 f"expected {expect}")
        blocks = []
        for i in range(n0):
            supp = struct.unpack_from(f"<{d_v}I", body, i * d_v * 4)
            try:
                blocks.append(CirculantPoly.from_support(r, supp))
            except ValueError as exc:
                raise KeyFormatError(f"block {i}: {exc}") from exc
        return PrivateKey(params, tuple(blocks))

    if kind == _KIND_PUBLIC:
        rb = _row_bytes(r)
        expect = (n0 - 1) * rb
        if len(body) != expect:
            raise KeyFormatError(f"public payload is {len(body)} bytes, "
                                 f"expected {expect}")
        blocks = []
        for i in range(n0 - 1):
            bits = int.from_bytes(body[i * rb:(i + 1) * rb], "little")
            if bits >> r:
                raise KeyFormatError(f"block {i}: padding bits set")
            blocks.append(CirculantPoly(r, bits))
        return PublicKey(params, tuple(blocks))

    raise KeyFormatError(f"unknown key kind {kind}")


# Design points: 80-bit and 128-bit security at rate 1/2.
PRESETS = {
    "80": SystemParams(n0=2, r=3601, d_v=45, sigma=0.44091, t_lower=84),
    "128": SystemParams(n0=2, r=7885, d_v=71, sigma=0.41897, t_lower=134),
}
