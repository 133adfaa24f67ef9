"""Pretrained-embedding provider contract plus a deterministic stub.

A provider turns token ids into contextual embeddings of a fixed width, up to
a maximum window length, and exposes a static per-token embedding table for
decoder conditioning. Providers are frozen: nothing backpropagates into them.
"""

from __future__ import annotations

import abc

import numpy as np

from .errors import ContractError


class EmbeddingProvider(abc.ABC):
    """Deterministic ids -> (len, width) embeddings, len <= max_window."""

    max_window: int
    width: int
    token_table: np.ndarray  # (vocab, width), static

    @abc.abstractmethod
    def context_embed(self, ids: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_ids(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 1 or ids.size == 0:
            raise ContractError("provider: ids must be a non-empty 1-D sequence")
        if ids.size > self.max_window:
            raise ContractError(
                f"provider: {ids.size} tokens exceed the {self.max_window}-token window"
            )
        if ids.min() < 0 or ids.max() >= self.token_table.shape[0]:
            raise ContractError("provider: token id out of range")
        return ids


class StubProvider(EmbeddingProvider):
    """Seeded lookup table with an optional fixed neighbor-mixing transform.

    context_free=True makes position t depend only on the token at t, which
    gives windowed encoding an exact-equality oracle; otherwise each position
    also mixes its in-window neighbors through a fixed linear map.
    """

    def __init__(
        self,
        vocab_size: int,
        width: int = 64,
        max_window: int = 512,
        seed: int = 0,
        context_free: bool = False,
    ):
        if vocab_size < 1 or width < 1 or max_window < 1:
            raise ContractError("stub provider: sizes must be >= 1")
        rng = np.random.default_rng(seed)
        self.max_window = max_window
        self.width = width
        self.context_free = context_free
        self.token_table = rng.normal(0.0, 1.0, (vocab_size, width))
        self._mix = rng.normal(0.0, width ** -0.5, (width, width))

    def context_embed(self, ids: np.ndarray) -> np.ndarray:
        ids = self._check_ids(ids)
        base = self.token_table[ids]
        if self.context_free:
            return base.copy()
        neighbors = np.zeros_like(base)
        neighbors[1:] += base[:-1]
        neighbors[:-1] += base[1:]
        return base + 0.5 * (neighbors @ self._mix)
