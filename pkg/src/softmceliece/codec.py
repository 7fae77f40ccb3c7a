"""Soft encryption: systematic encoding, Gaussian intentional noise with
rejection on the induced error count, q-bit quantization, and decryption
through the LLR-SPA decoder.

The encryption map is x = 2*c - 1 + w: the codeword is 2-PAM modulated and
hit with i.i.d. Gaussian noise, so decryption is ordinary soft-decision
LDPC decoding of the private code.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .keys import PrivateKey, PublicKey, SystemParams
from .qc_ring import CirculantPoly
from .spa_decoder import DecodeFailure, TannerGraph, llr_init, spa_decode

__all__ = [
    "Ciphertext",
    "NoiseVector",
    "Quantizer",
    "CiphertextFormatError",
    "NoiseRejectionError",
    "ParameterMismatchError",
    "encode",
    "modulate",
    "count_induced_errors",
    "sample_noise",
    "encrypt",
    "decrypt",
    "quantize",
    "dequantize",
    "bits_to_poly",
    "poly_to_bits",
    "MAX_NOISE_ATTEMPTS",
]

_MAGIC = b"SMCT"
_VERSION = 1
# magic, version, n0, r, q, sigma
_HEADER = struct.Struct("<4sBHIBd")

MAX_NOISE_ATTEMPTS = 1000


class CiphertextFormatError(ValueError):
    """Malformed serialized ciphertext."""


class NoiseRejectionError(RuntimeError):
    """Rejection sampling exceeded the attempt cap (sigma/t_lower mismatch)."""


class ParameterMismatchError(ValueError):
    """Ciphertext and key parameter headers disagree."""


# --- bit helpers ---------------------------------------------------------


def bits_to_poly(bits: np.ndarray, r: int) -> CirculantPoly:
    """Length-r 0/1 array to a ring element (bit j = coefficient of x^j)."""
    packed = np.packbits(np.asarray(bits, dtype=np.uint8) & 1, bitorder="little")
    return CirculantPoly(r, int.from_bytes(packed.tobytes(), "little"))


def poly_to_bits(p: CirculantPoly) -> np.ndarray:
    return p.dense()


# --- quantizer -----------------------------------------------------------


@dataclass(frozen=True)
class Quantizer:
    """Uniform mid-rise quantizer on [-1 - 6*sigma, 1 + 6*sigma].

    The clip range covers the +-1 symbols plus six noise deviations, so
    saturation is a < 1e-9 per-sample event at any operating point.
    """

    q: int
    sigma: float

    def __post_init__(self):
        if not 4 <= self.q <= 32:
            raise ValueError(f"q must be in [4, 32], got {self.q}")

    @property
    def lo(self) -> float:
        return -1.0 - 6.0 * self.sigma

    @property
    def levels(self) -> int:
        return 1 << self.q

    @property
    def step(self) -> float:
        return (2.0 + 12.0 * self.sigma) / self.levels

    def quantize(self, x) -> np.ndarray:
        # nearest reconstruction point; np.rint gives round-half-to-even
        idx = np.rint((np.asarray(x, dtype=np.float64) - self.lo) / self.step - 0.5)
        return np.clip(idx, 0, self.levels - 1).astype(np.uint64)

    def dequantize(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.float64)
        return self.lo + (codes + 0.5) * self.step


def quantize(x, q: int, sigma: float) -> np.ndarray:
    return Quantizer(q, sigma).quantize(x)


def dequantize(codes, q: int, sigma: float) -> np.ndarray:
    return Quantizer(q, sigma).dequantize(codes)


# --- ciphertext ----------------------------------------------------------


@dataclass(frozen=True)
class Ciphertext:
    n0: int
    r: int
    q: int
    sigma: float
    codes: np.ndarray  # length n0*r, q-bit sample codes

    def __post_init__(self):
        if self.codes.shape != (self.n0 * self.r,):
            raise ValueError(f"expected {self.n0 * self.r} samples, "
                             f"got {self.codes.shape}")
        if self.q < 64 and np.any(self.codes >> np.uint64(self.q)):
            raise ValueError("sample codes exceed the q-bit range")

    @property
    def n(self) -> int:
        return self.n0 * self.r

    def samples(self) -> np.ndarray:
        return Quantizer(self.q, self.sigma).dequantize(self.codes)

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(_MAGIC, _VERSION, self.n0, self.r, self.q,
                              self.sigma)
        bits = ((self.codes[:, None] >> np.arange(self.q, dtype=np.uint64))
                & np.uint64(1)).astype(np.uint8)
        return header + np.packbits(bits.ravel(), bitorder="little").tobytes()

    @classmethod
    def record_size(cls, n0: int, r: int, q: int) -> int:
        return _HEADER.size + (n0 * r * q + 7) // 8

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        if len(data) < _HEADER.size:
            raise CiphertextFormatError("truncated header")
        magic, version, n0, r, q, sigma = _HEADER.unpack_from(data)
        if magic != _MAGIC:
            raise CiphertextFormatError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise CiphertextFormatError(f"unsupported version {version}")
        if not 4 <= q <= 32 or n0 < 2 or r < 3:
            raise CiphertextFormatError("invalid header fields")
        n = n0 * r
        expect = (n * q + 7) // 8
        body = data[_HEADER.size:]
        if len(body) != expect:
            raise CiphertextFormatError(f"payload is {len(body)} bytes, "
                                        f"expected {expect}")
        bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8),
                             count=n * q, bitorder="little")
        weights = np.uint64(1) << np.arange(q, dtype=np.uint64)
        codes = (bits.reshape(n, q).astype(np.uint64) * weights).sum(axis=1)
        return cls(n0=n0, r=r, q=q, sigma=sigma, codes=codes)


@dataclass(frozen=True)
class NoiseVector:
    samples: np.ndarray
    t_star: int
    attempts: int


# --- operations ----------------------------------------------------------


def encode(u: np.ndarray, pk: PublicKey) -> np.ndarray:
    """Systematic encoding: c = [u | parity], parity(x) = sum u_i(x)*g_i(x)."""
    params = pk.params
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (params.k,):
        raise ValueError(f"message must be {params.k} bits, got {u.shape}")
    parity = CirculantPoly.zero(params.r)
    for i, g in enumerate(pk.p_blocks):
        u_i = bits_to_poly(u[i * params.r:(i + 1) * params.r], params.r)
        parity = parity + u_i * g
    return np.concatenate([u & 1, parity.dense()])


def modulate(bits: np.ndarray) -> np.ndarray:
    """2-PAM map: bit b to symbol 2b - 1."""
    return 2.0 * np.asarray(bits, dtype=np.float64) - 1.0


def count_induced_errors(symbols: np.ndarray, noise: np.ndarray) -> int:
    """Positions where the noisy sample's sign disagrees with the symbol.

    The boundary s*w = -1 (sample exactly zero) counts as an error.
    """
    return int(np.count_nonzero(symbols * noise <= -1.0))


def _sample_noise(symbols: np.ndarray, params: SystemParams,
                  rng: np.random.Generator) -> NoiseVector:
    for attempt in range(1, MAX_NOISE_ATTEMPTS + 1):
        w = rng.normal(0.0, params.sigma, params.n) if params.sigma > 0 \
            else np.zeros(params.n)
        t_star = count_induced_errors(symbols, w)
        if t_star >= params.t_lower:
            return NoiseVector(samples=w, t_star=t_star, attempts=attempt)
    raise NoiseRejectionError(
        f"no noise draw reached t_lower={params.t_lower} in "
        f"{MAX_NOISE_ATTEMPTS} attempts (t_hat={params.t_hat:.2f})")


def sample_noise(codeword: np.ndarray, params: SystemParams, seed) -> NoiseVector:
    """Draw Gaussian noise for a codeword, discarding draws that induce
    fewer than t_lower hard-decision errors."""
    symbols = modulate(codeword)
    return _sample_noise(symbols, params, np.random.default_rng(seed))


def encrypt(u: np.ndarray, pk: PublicKey, seed, noise: np.ndarray | None = None,
            ) -> Ciphertext:
    """Encrypt a k-bit message to a quantized real-valued ciphertext.

    `noise` overrides the sampled noise vector (test hook; the rejection
    rule still applies to it).
    """
    params = pk.params
    codeword = encode(u, pk)
    symbols = modulate(codeword)
    if noise is None:
        nv = _sample_noise(symbols, params, np.random.default_rng(seed))
    else:
        noise = np.asarray(noise, dtype=np.float64)
        t_star = count_induced_errors(symbols, noise)
        if t_star < params.t_lower:
            raise NoiseRejectionError(
                f"supplied noise induces {t_star} errors, below "
                f"t_lower={params.t_lower}")
        nv = NoiseVector(samples=noise, t_star=t_star, attempts=1)
    x = symbols + nv.samples
    codes = Quantizer(params.q, params.sigma).quantize(x)
    return Ciphertext(n0=params.n0, r=params.r, q=params.q,
                      sigma=params.sigma, codes=codes)


def decrypt(ct: Ciphertext, sk: PrivateKey,
            graph: TannerGraph | None = None) -> np.ndarray:
    """Recover the k-bit message, or raise DecodeFailure.

    A prebuilt TannerGraph may be passed to amortize setup across many
    decryptions of the same key.
    """
    params = sk.params
    if (ct.n0, ct.r, ct.q) != (params.n0, params.r, params.q) \
            or ct.sigma != params.sigma:
        raise ParameterMismatchError(
            f"ciphertext header (n0={ct.n0}, r={ct.r}, q={ct.q}, "
            f"sigma={ct.sigma}) does not match key parameters")
    if graph is None:
        graph = TannerGraph.from_private_key(sk)
    llrs = llr_init(ct.samples(), params.sigma)
    codeword = spa_decode(llrs, graph, params.max_iter)
    return codeword[:params.k]
