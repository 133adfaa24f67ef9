"""Beam-search generation with a minimum-length mask and a saturating-log
coverage penalty applied at final scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

COVERAGE_FLOOR = 1e-10


@dataclass(frozen=True)
class DecodingConfig:
    beam_size: int = 4
    min_length: int = 55
    max_length: int = 150
    coverage_beta: float = 0.0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ContractError("beam_size must be >= 1")
        if not 0 < self.min_length <= self.max_length:
            raise ContractError("need 0 < min_length <= max_length")
        if self.coverage_beta < 0.0:
            raise ContractError("coverage_beta must be >= 0")


@dataclass
class Hypothesis:
    """Partial sequence (BOS excluded, EOS stripped) with accumulated score."""

    tokens: list[int]
    log_prob: float
    finished: bool
    coverage: np.ndarray
    finish_step: int = field(default=-1)


def coverage_penalty(coverage: np.ndarray, beta: float) -> float:
    """beta * sum_j log(min(c_j, 1)); 0 when beta == 0 or all positions covered."""
    coverage = np.asarray(coverage, dtype=np.float64)
    if (coverage < 0).any():
        raise ContractError("coverage_penalty: coverage entries must be >= 0")
    if beta == 0.0:
        return 0.0
    return float(beta * np.log(np.minimum(np.maximum(coverage, COVERAGE_FLOOR), 1.0)).sum())


def _final_score(h: Hypothesis, beta: float) -> float:
    return h.log_prob + coverage_penalty(h.coverage, beta)


def beam_search(model, src_ids, cfg: DecodingConfig) -> list[int]:
    """Best decoded token-id sequence (EOS stripped) for one source.

    The model must expose encode(src_ids) -> memory, decode_step(memory,
    src_ids, prefix) -> (probs (V,), source attention), and vocab.bos_id /
    vocab.eos_id. Ties break by earlier finish step, then lexicographic
    token order, which makes decoding deterministic.
    """
    src_ids = np.asarray(src_ids, dtype=np.int64)
    if src_ids.size == 0:
        raise ContractError("beam_search: empty source")
    memory = model.encode(src_ids)
    bos, eos = model.vocab.bos_id, model.vocab.eos_id
    src_len = src_ids.size

    live = [Hypothesis([], 0.0, False, np.zeros(src_len))]
    finished: list[Hypothesis] = []

    for step in range(cfg.max_length):
        candidates: list[tuple[float, list[int], Hypothesis, np.ndarray]] = []
        for hyp in live:
            probs, attn = model.decode_step(memory, src_ids, [bos] + hyp.tokens)
            probs = np.asarray(probs, dtype=np.float64)
            if probs.min() < 0.0 or abs(probs.sum() - 1.0) > 1e-6:
                raise ContractError("beam_search: model produced an invalid distribution")
            with np.errstate(divide="ignore"):
                logp = np.log(probs)
            if len(hyp.tokens) < cfg.min_length:
                logp[eos] = -np.inf
            for tok in range(len(probs)):
                if logp[tok] == -np.inf:
                    continue
                candidates.append(
                    (hyp.log_prob + logp[tok], hyp.tokens + [tok], hyp, attn)
                )
        if not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))
        live = []
        for score, tokens, hyp, attn in candidates[: cfg.beam_size]:
            coverage = hyp.coverage + attn
            if tokens[-1] == eos:
                finished.append(Hypothesis(tokens[:-1], score, True, coverage, step))
            else:
                live.append(Hypothesis(tokens, score, False, coverage))
        if len(finished) >= cfg.beam_size or not live:
            break

    pool = finished + [
        Hypothesis(h.tokens, h.log_prob, False, h.coverage, cfg.max_length) for h in live
    ]
    pool.sort(key=lambda h: (-_final_score(h, cfg.coverage_beta), h.finish_step, h.tokens))
    return list(pool[0].tokens)
