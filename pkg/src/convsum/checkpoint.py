"""Versioned checkpoint container: run config, vocab, parameters, optimizer
moments, and the training RNG state, in one .npz with a JSON meta record.
Round-trips are bit-exact (float64 arrays stored losslessly)."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, build_model
from .errors import ConfigError, DataError
from .model import Summarizer
from .optim import OptimizerState
from .tokenizer import Vocab

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    run_config: RunConfig
    vocab_tokens: list[str]
    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    opt_step: int
    rng_state: dict


def save_checkpoint(
    path: str, model: Summarizer, opt: OptimizerState, run_config: RunConfig
) -> None:
    arrays: dict[str, np.ndarray] = {}
    for name, t in model.params.items():
        arrays[f"param:{name}"] = t.data
    for name, arr in opt.m.items():
        arrays[f"m:{name}"] = arr
    for name, arr in opt.v.items():
        arrays[f"v:{name}"] = arr
    meta = {
        "version": FORMAT_VERSION,
        "run_config": run_config.to_dict(),
        "vocab": model.vocab.tokens(),
        "opt_step": opt.step,
        "rng_state": model.rng.bit_generator.state,
    }
    with open(path, "wb") as f:
        np.savez(f, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    with data:
        if "__meta__" not in data:
            raise DataError(f"not a checkpoint file: {path}")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("version") != FORMAT_VERSION:
            raise ConfigError(
                f"unsupported checkpoint version {meta.get('version')} in {path}"
            )
        params, m, v = {}, {}, {}
        for key in data.files:
            if key.startswith("param:"):
                params[key[6:]] = data[key]
            elif key.startswith("m:"):
                m[key[2:]] = data[key]
            elif key.startswith("v:"):
                v[key[2:]] = data[key]
    return Checkpoint(
        run_config=RunConfig.from_dict(meta["run_config"]),
        vocab_tokens=list(meta["vocab"]),
        params=params,
        m=m,
        v=v,
        opt_step=int(meta["opt_step"]),
        rng_state=meta["rng_state"],
    )


def restore_model(ckpt: Checkpoint) -> tuple[Summarizer, OptimizerState]:
    """Rebuild the model/optimizer a checkpoint describes and load its state."""
    vocab = Vocab(ckpt.vocab_tokens)
    model, opt = build_model(ckpt.run_config, vocab)
    expected = set(model.params)
    if expected != set(ckpt.params):
        missing = sorted(expected - set(ckpt.params))[:3]
        extra = sorted(set(ckpt.params) - expected)[:3]
        raise ConfigError(
            f"checkpoint parameters do not match the configured model "
            f"(missing {missing}, unexpected {extra})"
        )
    for name, arr in ckpt.params.items():
        if model.params[name].data.shape != arr.shape:
            raise ConfigError(
                f"checkpoint/config mismatch: parameter '{name}' has shape "
                f"{arr.shape}, model expects {model.params[name].data.shape}"
            )
        model.params[name].data = arr.astype(np.float64).copy()
    opt.m = {k: a.astype(np.float64).copy() for k, a in ckpt.m.items()}
    opt.v = {k: a.astype(np.float64).copy() for k, a in ckpt.v.items()}
    opt.step = ckpt.opt_step
    model.rng.bit_generator.state = ckpt.rng_state
    return model, opt
