"""Sliding-window encoding for inputs longer than a provider's window:
split token ids into strided spans, embed each span, and average the
embeddings at overlapping positions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .providers import EmbeddingProvider


@dataclass(frozen=True)
class WindowingConfig:
    window: int = 512
    stride: int = 256

    def __post_init__(self):
        if not 1 <= self.stride <= self.window:
            raise ContractError(
                f"stride must satisfy 1 <= stride <= window, got {self.stride}/{self.window}"
            )


def split_windows(length: int, cfg: WindowingConfig) -> list[tuple[int, int]]:
    """[start, end) spans at 0, S, 2S, ...; stops with the first span reaching length."""
    if length < 1:
        raise ContractError("split_windows: length must be >= 1")
    spans = []
    start = 0
    while True:
        end = min(start + cfg.window, length)
        spans.append((start, end))
        if end == length:
            return spans
        start += cfg.stride


def coverage_counts(spans: list[tuple[int, int]], length: int) -> np.ndarray:
    """How many spans cover each position 0..length-1."""
    counts = np.zeros(length, dtype=np.int64)
    for start, end in spans:
        counts[start:end] += 1
    return counts


def merge_windows(
    mats: list[np.ndarray], spans: list[tuple[int, int]], length: int
) -> np.ndarray:
    """Sum per-window rows into their positions and divide by coverage count."""
    if len(mats) != len(spans):
        raise ContractError("merge_windows: one matrix per span required")
    width = mats[0].shape[1]
    acc = np.zeros((length, width))
    for mat, (start, end) in zip(mats, spans):
        if mat.shape != (end - start, width):
            raise ContractError(
                f"merge_windows: span [{start},{end}) expects {(end - start, width)}, "
                f"got {mat.shape}"
            )
        acc[start:end] += mat
    counts = coverage_counts(spans, length)
    if (counts == 0).any():
        raise ContractError("merge_windows: spans leave positions uncovered")
    return acc / counts[:, None]


def encode_long(
    ids: np.ndarray, provider: EmbeddingProvider, cfg: WindowingConfig
) -> np.ndarray:
    """Provider embeddings for arbitrarily long ids; identity to a direct call
    when the input fits in one window."""
    ids = np.asarray(ids, dtype=np.int64)
    if provider.max_window < cfg.window:
        raise ContractError(
            f"provider window {provider.max_window} smaller than configured window {cfg.window}"
        )
    if ids.size <= cfg.window:
        return provider.context_embed(ids)
    spans = split_windows(ids.size, cfg)
    mats = [provider.context_embed(ids[s:e]) for s, e in spans]
    return merge_windows(mats, spans, ids.size)
