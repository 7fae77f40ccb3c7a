"""Log-likelihood-ratio sum-product decoding on the private Tanner graph.

Sign convention: positive LLR favors bit 1 (symbol +1), so the channel
LLR for a sample x under 2-PAM/AWGN is 2x/sigma^2.  Check updates use the
exact tanh product rule on a flooding schedule with early termination on
a zero syndrome.
"""

from __future__ import annotations

import numpy as np

__all__ = ["DecodeFailure", "TannerGraph", "llr_init", "spa_decode", "LLR_MAX"]

LLR_MAX = 50.0
# Keep |tanh| strictly below 1 so atanh of a message product stays finite.
_TANH_CLIP = 1.0 - 1e-12


class DecodeFailure(RuntimeError):
    """Decoder hit the iteration cap without reaching a zero syndrome."""


class TannerGraph:
    """Adjacency of the length-n code with r checks of degree d_c = n0*d_v.

    Edges are stored check-major as an (r, d_c) table of variable indices,
    plus the permutation that reads the same edges variable-major, so both
    message-passing directions are single numpy gathers.
    """

    def __init__(self, r: int, supports):
        self.r = r
        self.supports = [np.asarray(sorted(s), dtype=np.int64) for s in supports]
        self.n0 = len(self.supports)
        self.d_v = len(self.supports[0])
        if any(len(s) != self.d_v for s in self.supports):
            raise ValueError("all blocks must share the column weight")
        self.n = self.n0 * r
        self.d_c = self.n0 * self.d_v

        rows = np.arange(r, dtype=np.int64)[:, None]
        # check c is adjacent, within block i, to variables (c + s) mod r
        self.check_vars = np.concatenate(
            [(rows + s[None, :]) % r + i * r
             for i, s in enumerate(self.supports)], axis=1)

        # edge id (check-major) of each (variable, slot) pair
        var_edges = np.empty((self.n, self.d_v), dtype=np.int64)
        for i, s in enumerate(self.supports):
            checks = (rows - s[None, :]) % r            # (r, d_v); row = var position
            slots = i * self.d_v + np.arange(self.d_v, dtype=np.int64)[None, :]
            var_edges[i * r:(i + 1) * r] = checks * self.d_c + slots
        self.var_edges = var_edges

    @classmethod
    def from_private_key(cls, sk) -> "TannerGraph":
        return cls(sk.params.r, [h.support for h in sk.h_blocks])

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """Parity of each check for a hard-decision word."""
        return np.bitwise_and(bits[self.check_vars].sum(axis=1), 1)

    def is_codeword(self, bits: np.ndarray) -> bool:
        return not self.syndrome(bits).any()


def llr_init(samples, sigma: float) -> np.ndarray:
    """Channel LLRs 2*x/sigma^2, clamped to +-LLR_MAX."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    llr = 2.0 * np.asarray(samples, dtype=np.float64) / (sigma * sigma)
    return np.clip(llr, -LLR_MAX, LLR_MAX)


def _check_update(messages: np.ndarray) -> np.ndarray:
    """Tanh-rule check update, leave-one-out via prefix/suffix products."""
    t = np.tanh(messages * 0.5)
    np.clip(t, -_TANH_CLIP, _TANH_CLIP, out=t)
    r, d_c = t.shape
    left = np.empty_like(t)
    right = np.empty_like(t)
    left[:, 0] = 1.0
    np.cumprod(t[:, :-1], axis=1, out=left[:, 1:])
    right[:, -1] = 1.0
    np.cumprod(t[:, :0:-1], axis=1, out=right[:, -2::-1])
    loo = left * right
    np.clip(loo, -_TANH_CLIP, _TANH_CLIP, out=loo)
    return 2.0 * np.arctanh(loo)


def spa_decode(llrs: np.ndarray, graph: TannerGraph, max_iter: int) -> np.ndarray:
    """Decode channel LLRs to an n-bit codeword of the private code.

    Hard decision is taken every iteration (ties at LLR 0 decide bit 0);
    returns as soon as the syndrome is zero, raises DecodeFailure after
    max_iter iterations otherwise.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} LLRs, got {llrs.shape}")

    bits = (llrs > 0).astype(np.uint8)
    if graph.is_codeword(bits):
        return bits

    # variable-to-check messages, check-major layout
    v2c = llrs[graph.check_vars]
    for _ in range(max_iter):
        c2v_cm = _check_update(v2c)
        c2v = c2v_cm.ravel()[graph.var_edges]          # variable-major view
        posterior = llrs + c2v.sum(axis=1)

        bits = (posterior > 0).astype(np.uint8)
        if graph.is_codeword(bits):
            return bits

        v2c.ravel()[graph.var_edges] = posterior[:, None] - c2v
    raise DecodeFailure(f"no zero syndrome within {max_iter} iterations")
