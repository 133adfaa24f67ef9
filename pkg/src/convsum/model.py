"""Transformer encoder-decoder summarizer with a copy (pointer) output layer,
optional convolutional self-attention in encoder layers, and optional
conditioning on a frozen embedding provider via stacking or concatenation."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .attention import (
    AttentionConfig,
    attention_params,
    conv_multi_head_attention,
    multi_head_attention,
)
from .autodiff import Tensor
from .errors import ConfigError, ContractError
from .optim import adam_noam_step, zero_grads
from .providers import EmbeddingProvider
from .tokenizer import Vocab
from .windowing import WindowingConfig, encode_long

INTEGRATION_MODES = ("none", "stacking", "concatenation")


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 256
    enc_layers: int = 3
    dec_layers: int = 3
    ff_size: int = 1024
    attention: AttentionConfig = field(default_factory=AttentionConfig)
    dropout: float = 0.1
    label_smoothing: float = 0.1
    integration: str = "none"
    copy: bool = True
    provider_width: int = 64
    decoder_conditioned: bool = False

    def __post_init__(self):
        if self.d_model % self.attention.heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by {self.attention.heads} heads"
            )
        if self.enc_layers < 1 or self.dec_layers < 1:
            raise ConfigError("encoder and decoder need at least one layer each")
        if self.integration not in INTEGRATION_MODES:
            raise ConfigError(f"integration must be one of {INTEGRATION_MODES}")
        if self.integration == "concatenation" and self.enc_layers - self.conv_branch_layers < 1:
            raise ConfigError(
                "concatenation needs at least one conv-branch and one plain encoder layer"
            )
        if not 0.0 <= self.dropout < 1.0 or not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError("dropout and label_smoothing must be in [0, 1)")

    @property
    def conv_branch_layers(self) -> int:
        """Depth of the parallel conv branch in concatenation mode: ceil(layers/3)."""
        return -(-self.enc_layers // 3)


@functools.lru_cache(maxsize=None)
def _sinusoid(length: int, d: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    dim = np.arange(d // 2)[None, :]
    angle = pos / np.power(10000.0, 2.0 * dim / d)
    pe = np.zeros((length, d))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def _linear_init(rng: np.random.Generator, din: int, dout: int) -> tuple[Tensor, Tensor]:
    lim = math.sqrt(6.0 / (din + dout))
    w = Tensor(rng.uniform(-lim, lim, (din, dout)), requires_grad=True)
    b = Tensor(np.zeros(dout), requires_grad=True)
    return w, b


def _norm_init(d: int) -> tuple[Tensor, Tensor]:
    return Tensor(np.ones(d), requires_grad=True), Tensor(np.zeros(d), requires_grad=True)


def _sub(params: dict[str, Tensor], prefix: str) -> dict[str, Tensor]:
    pl = prefix + "."
    return {k[len(pl):]: v for k, v in params.items() if k.startswith(pl)}


class Summarizer:
    """One model instance: parameters, forward paths, and the training step.

    Parameters live in a flat name->Tensor dict (the checkpoint unit). The
    computation graph is single-threaded per instance; a frozen instance may
    serve concurrent decodes.
    """

    def __init__(
        self,
        cfg: ModelConfig,
        vocab: Vocab,
        provider: EmbeddingProvider | None = None,
        windowing: WindowingConfig | None = None,
        seed: int = 0,
    ):
        if (cfg.integration != "none" or cfg.decoder_conditioned) and provider is None:
            raise ConfigError(f"integration '{cfg.integration}' requires an embedding provider")
        if provider is not None and provider.width != cfg.provider_width:
            raise ConfigError(
                f"provider width {provider.width} != configured width {cfg.provider_width}"
            )
        self.cfg = cfg
        self.vocab = vocab
        self.provider = provider
        self.windowing = windowing or WindowingConfig()
        if provider is not None and provider.max_window < self.windowing.window:
            raise ConfigError(
                f"provider window {provider.max_window} smaller than "
                f"windowing window {self.windowing.window}"
            )
        self.rng = np.random.default_rng(seed)
        self.params = self._init_params(np.random.default_rng(seed))

    # ------------------------------------------------------------------
    # parameters
    # ------------------------------------------------------------------

    def _init_params(self, rng: np.random.Generator) -> dict[str, Tensor]:
        cfg = self.cfg
        d, V = cfg.d_model, len(self.vocab)
        p: dict[str, Tensor] = {}

        def put_attention(prefix: str):
            for k, t in attention_params(rng, d).items():
                p[f"{prefix}.{k}"] = t

        def put_block(prefix: str):
            put_attention(f"{prefix}.att")
            p[f"{prefix}.ln1.g"], p[f"{prefix}.ln1.b"] = _norm_init(d)
            p[f"{prefix}.ff.w1"], p[f"{prefix}.ff.b1"] = _linear_init(rng, d, cfg.ff_size)
            p[f"{prefix}.ff.w2"], p[f"{prefix}.ff.b2"] = _linear_init(rng, cfg.ff_size, d)
            p[f"{prefix}.ln2.g"], p[f"{prefix}.ln2.b"] = _norm_init(d)

        if cfg.integration in ("none", "concatenation"):
            p["src_embed"] = Tensor(rng.normal(0.0, d ** -0.5, (V, d)), requires_grad=True)
        if cfg.integration == "stacking":
            p["ctx_proj.w"], p["ctx_proj.b"] = _linear_init(rng, cfg.provider_width, d)
        if cfg.integration == "concatenation":
            p["cat_proj.w"], p["cat_proj.b"] = _linear_init(rng, d + cfg.provider_width, d)
        for i in range(cfg.enc_layers):
            put_block(f"enc.{i}")

        if cfg.decoder_conditioned:
            p["dec_proj.w"], p["dec_proj.b"] = _linear_init(rng, cfg.provider_width, d)
        else:
            p["tgt_embed"] = Tensor(rng.normal(0.0, d ** -0.5, (V, d)), requires_grad=True)
        for i in range(cfg.dec_layers):
            put_attention(f"dec.{i}.self")
            p[f"dec.{i}.ln1.g"], p[f"dec.{i}.ln1.b"] = _norm_init(d)
            put_attention(f"dec.{i}.cross")
            p[f"dec.{i}.ln2.g"], p[f"dec.{i}.ln2.b"] = _norm_init(d)
            p[f"dec.{i}.ff.w1"], p[f"dec.{i}.ff.b1"] = _linear_init(rng, d, cfg.ff_size)
            p[f"dec.{i}.ff.w2"], p[f"dec.{i}.ff.b2"] = _linear_init(rng, cfg.ff_size, d)
            p[f"dec.{i}.ln3.g"], p[f"dec.{i}.ln3.b"] = _norm_init(d)

        p["gen.w"], p["gen.b"] = _linear_init(rng, d, V)
        if cfg.copy:
            p["copy.wq"], p["copy.bq"] = _linear_init(rng, d, d)
            p["copy.gate.w"], p["copy.gate.b"] = _linear_init(rng, 2 * d, 1)
        return p

    # ------------------------------------------------------------------
    # encoder
    # ------------------------------------------------------------------

    def _drop(self, x: Tensor, training: bool) -> Tensor:
        return ad.dropout(x, self.cfg.dropout, self.rng, training)

    def _encoder_layer(self, x: Tensor, i: int, use_conv: bool, training: bool) -> Tensor:
        p = self.params
        att = _sub(p, f"enc.{i}.att")
        if use_conv:
            a, _ = conv_multi_head_attention(x, att, self.cfg.attention)
        else:
            a, _ = multi_head_attention(x, x, att, self.cfg.attention.heads)
        x = ad.layer_norm(x + self._drop(a, training), p[f"enc.{i}.ln1.g"], p[f"enc.{i}.ln1.b"])
        f = ad.linear(
            ad.relu(ad.linear(x, p[f"enc.{i}.ff.w1"], p[f"enc.{i}.ff.b1"])),
            p[f"enc.{i}.ff.w2"],
            p[f"enc.{i}.ff.b2"],
        )
        return ad.layer_norm(x + self._drop(f, training), p[f"enc.{i}.ln2.g"], p[f"enc.{i}.ln2.b"])

    def _learned_source_embedding(self, src_ids: np.ndarray, training: bool) -> Tensor:
        d = self.cfg.d_model
        e = ad.embedding_lookup(self.params["src_embed"], src_ids) * math.sqrt(d)
        e = e + ad.constant(_sinusoid(len(src_ids), d))
        return self._drop(e, training)

    def _provider_context(self, src_ids: np.ndarray) -> Tensor:
        ctx = encode_long(src_ids, self.provider, self.windowing)
        return ad.constant(ctx)  # frozen: no gradient flows into the provider

    def encode(self, src_ids, training: bool = False) -> Tensor:
        """Source token ids -> memory (L, d_model) under the configured integration."""
        src_ids = np.asarray(src_ids, dtype=np.int64)
        if src_ids.size == 0:
            raise ContractError("encode: zero-length input")
        cfg = self.cfg
        conv_at = set(cfg.attention.conv_layers)

        if cfg.integration == "none":
            x = self._learned_source_embedding(src_ids, training)
            for i in range(cfg.enc_layers):
                x = self._encoder_layer(x, i, i in conv_at, training)
            return x

        if cfg.integration == "stacking":
            ctx = self._provider_context(src_ids)
            x = ad.linear(ctx, self.params["ctx_proj.w"], self.params["ctx_proj.b"])
            x = self._drop(x, training)
            for i in range(cfg.enc_layers):
                x = self._encoder_layer(x, i, i in conv_at, training)
            return x

        # concatenation: conv branch over learned embeddings, provider branch raw,
        # joined on the feature axis and projected, then the plain stack
        n_conv = cfg.conv_branch_layers
        a = self._learned_source_embedding(src_ids, training)
        for i in range(n_conv):
            a = self._encoder_layer(a, i, True, training)
        ctx = self._provider_context(src_ids)
        x = ad.linear(
            ad.concat([a, ctx], axis=1), self.params["cat_proj.w"], self.params["cat_proj.b"]
        )
        x = self._drop(x, training)
        for i in range(n_conv, cfg.enc_layers):
            x = self._encoder_layer(x, i, False, training)
        return x

    # ------------------------------------------------------------------
    # decoder
    # ------------------------------------------------------------------

    def _decoder_states(
        self, memory: Tensor, prefix_ids: np.ndarray, training: bool
    ) -> tuple[Tensor, Tensor]:
        """Run the decoder stack; returns (states (T, d), last cross-attention (H, T, L))."""
        cfg = self.cfg
        p = self.params
        T = len(prefix_ids)
        if T == 0:
            raise ContractError("decode: empty prefix")
        if prefix_ids[0] != self.vocab.bos_id:
            raise ContractError("decode: prefix must begin with BOS")
        d = cfg.d_model
        if cfg.decoder_conditioned:
            table = ad.constant(self.provider.token_table[np.asarray(prefix_ids, dtype=np.int64)])
            x = ad.linear(table, p["dec_proj.w"], p["dec_proj.b"])
        else:
            x = ad.embedding_lookup(p["tgt_embed"], prefix_ids) * math.sqrt(d)
        x = self._drop(x + ad.constant(_sinusoid(T, d)), training)

        causal = np.tril(np.ones((T, T), dtype=bool))
        cross_weights = None
        heads = cfg.attention.heads
        for i in range(cfg.dec_layers):
            a, _ = multi_head_attention(x, x, _sub(p, f"dec.{i}.self"), heads, causal)
            x = ad.layer_norm(x + self._drop(a, training), p[f"dec.{i}.ln1.g"], p[f"dec.{i}.ln1.b"])
            c, cross_weights = multi_head_attention(x, memory, _sub(p, f"dec.{i}.cross"), heads)
            x = ad.layer_norm(x + self._drop(c, training), p[f"dec.{i}.ln2.g"], p[f"dec.{i}.ln2.b"])
            f = ad.linear(
                ad.relu(ad.linear(x, p[f"dec.{i}.ff.w1"], p[f"dec.{i}.ff.b1"])),
                p[f"dec.{i}.ff.w2"],
                p[f"dec.{i}.ff.b2"],
            )
            x = ad.layer_norm(x + self._drop(f, training), p[f"dec.{i}.ln3.g"], p[f"dec.{i}.ln3.b"])
        return x, cross_weights

    def pointer_generator(
        self,
        decoder_states: Tensor,
        memory: Tensor,
        src_ids: np.ndarray,
        force_gate: float | None = None,
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Mix a copy distribution over source tokens with the generator softmax.

        Returns (gate (T, 1), mixed distribution (T, V), copy attention (T, L)).
        The gate multiplies the copy side; duplicate source tokens accumulate
        their attention mass onto the shared vocabulary id.
        """
        src_ids = np.asarray(src_ids, dtype=np.int64)
        if memory.shape[0] != src_ids.size:
            raise ContractError("pointer_generator: memory length must match source ids")
        p = self.params
        d = self.cfg.d_model
        q = ad.linear(decoder_states, p["copy.wq"], p["copy.bq"])
        attn = ad.softmax(ad.scale(ad.matmul(q, ad.transpose(memory, (1, 0))), d ** -0.5))
        context = ad.matmul(attn, memory)
        if force_gate is None:
            gate = ad.sigmoid(
                ad.linear(ad.concat([decoder_states, context], axis=1),
                          p["copy.gate.w"], p["copy.gate.b"])
            )
        else:
            gate = ad.constant(np.full((decoder_states.shape[0], 1), float(force_gate)))
        p_copy = ad.scatter_probs(attn, src_ids, len(self.vocab))
        p_soft = ad.softmax(ad.linear(decoder_states, p["gen.w"], p["gen.b"]))
        one_minus = ad.add(ad.scale(gate, -1.0), ad.constant(1.0))
        mixed = ad.add(ad.mul(gate, p_copy), ad.mul(one_minus, p_soft))
        return gate, mixed, attn

    def _output_distribution(
        self, memory: Tensor, src_ids: np.ndarray, prefix_ids: np.ndarray, training: bool
    ) -> tuple[Tensor, Tensor]:
        """Full-prefix distributions (T, V) plus per-position source attention (T, L)."""
        states, cross = self._decoder_states(memory, prefix_ids, training)
        if self.cfg.copy:
            _, mixed, attn = self.pointer_generator(states, memory, src_ids)
            return mixed, attn
        probs = ad.softmax(ad.linear(states, self.params["gen.w"], self.params["gen.b"]))
        mean_cross = ad.scale(ad.tensor_sum(cross, axis=0), 1.0 / self.cfg.attention.heads)
        return probs, mean_cross

    def decode_step(
        self, memory: Tensor, src_ids, prefix_ids, training: bool = False
    ) -> tuple[np.ndarray, np.ndarray]:
        """Next-token distribution for the last prefix position.

        Returns (probabilities (V,), source attention (L,)); the attention row
        feeds the decoder's coverage accounting.
        """
        prefix_ids = np.asarray(prefix_ids, dtype=np.int64)
        probs, attn = self._output_distribution(
            memory, np.asarray(src_ids, dtype=np.int64), prefix_ids, training
        )
        return probs.data[-1].copy(), attn.data[-1].copy()

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------

    def sequence_loss(self, src_ids, tgt_ids, training: bool = True) -> tuple[Tensor, int]:
        """Teacher-forced loss for one (source, BOS..EOS target) pair.

        Returns (mean loss over target tokens, target token count).
        """
        src_ids = np.asarray(src_ids, dtype=np.int64)
        tgt_ids = np.asarray(tgt_ids, dtype=np.int64)
        if tgt_ids.size < 2 or tgt_ids[0] != self.vocab.bos_id:
            raise ContractError("sequence_loss: target must be BOS/EOS-wrapped")
        memory = self.encode(src_ids, training)
        tgt_in, tgt_out = tgt_ids[:-1], tgt_ids[1:]
        smoothing, pad = self.cfg.label_smoothing, self.vocab.pad_id
        if self.cfg.copy:
            probs, _ = self._output_distribution(memory, src_ids, tgt_in, training)
            loss = ad.label_smoothed_nll(probs, tgt_out, smoothing, pad)
        else:
            states, _ = self._decoder_states(memory, tgt_in, training)
            logits = ad.linear(states, self.params["gen.w"], self.params["gen.b"])
            loss = ad.label_smoothed_cross_entropy(logits, tgt_out, smoothing, pad)
        return loss, int((tgt_out != pad).sum())

    def train_step(self, batch, opt_state) -> tuple[float, float]:
        """One optimizer update on a batch of (source ids, BOS..EOS target ids).

        Loss is the token-weighted mean over the batch. Returns (loss, lr).
        """
        if not batch:
            raise ContractError("train_step: empty batch")
        zero_grads(self.params)
        losses: list[tuple[Tensor, int]] = []
        for src, tgt in batch:
            losses.append(self.sequence_loss(src, tgt, training=True))
        total_tokens = sum(n for _, n in losses)
        if total_tokens == 0:
            total = losses[0][0]
            for item, _ in losses[1:]:
                total = total + item
            total = ad.scale(total, 0.0)
        else:
            total = None
            for item, n in losses:
                part = ad.scale(item, n / total_tokens)
                total = part if total is None else total + part
        ad.backward(total)
        lr = adam_noam_step(opt_state, self.params)
        return total.item(), lr
