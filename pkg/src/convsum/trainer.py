"""Training harness: seeded batch sampling, loss logging, periodic
checkpoints behind a directory lock, and beam-search evaluation."""

from __future__ import annotations

import os

import numpy as np

from .checkpoint import load_checkpoint, restore_model, save_checkpoint
from .config import RunConfig, build_model, check_arch_compatible
from .decoding import DecodingConfig, beam_search
from .errors import ConfigError, DataError
from .model import Summarizer
from .rouge import RougeScore, mean_scores, rouge_all
from .tokenizer import Vocab

LOCK_NAME = "LOCK"
LOG_NAME = "loss.tsv"


class DirectoryLock:
    """Exclusive ownership of a checkpoint directory via an O_EXCL lock file."""

    def __init__(self, directory: str):
        self.path = os.path.join(directory, LOCK_NAME)

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DataError(
                f"checkpoint directory is locked by another run: {self.path}"
            ) from None
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        try:
            os.unlink(self.path)
        except FileNotFoundError:
            pass
        return False


class Trainer:
    """Owns one model + optimizer and drives training over encoded pairs."""

    def __init__(
        self,
        cfg: RunConfig,
        vocab: Vocab,
        pairs: list[tuple[np.ndarray, np.ndarray]],
        resume_from: str | None = None,
    ):
        if not pairs:
            raise DataError("trainer: no training pairs")
        self.cfg = cfg
        self.vocab = vocab
        self.pairs = pairs
        if resume_from is not None:
            ckpt = load_checkpoint(resume_from)
            check_arch_compatible(ckpt.run_config, cfg)
            if ckpt.vocab_tokens != vocab.tokens():
                raise ConfigError("checkpoint vocab differs from the provided vocab")
            self.model, self.opt = restore_model(ckpt)
        else:
            self.model, self.opt = build_model(cfg, vocab)
        self.history: list[tuple[int, float, float]] = []

    @property
    def step(self) -> int:
        return self.opt.step

    def _sample_batch(self):
        idx = self.model.rng.integers(0, len(self.pairs), size=self.cfg.batch_size)
        return [self.pairs[i] for i in idx]

    def train(self, until_step: int | None = None, log=None) -> list[tuple[int, float, float]]:
        """Run steps up to `until_step` (default cfg.steps); returns (step, lr, loss) rows."""
        target = self.cfg.steps if until_step is None else until_step
        rows = []
        while self.opt.step < target:
            loss, lr = self.model.train_step(self._sample_batch(), self.opt)
            row = (self.opt.step, lr, loss)
            rows.append(row)
            self.history.append(row)
            if log is not None:
                log.write(f"{row[0]}\t{row[1]:.12e}\t{row[2]:.12e}\n")
        return rows

    def run(self) -> list[tuple[int, float, float]]:
        """Full training per config: lock the checkpoint dir, log every step,
        checkpoint every `checkpoint_every` steps and at the end."""
        os.makedirs(self.cfg.checkpoint_dir, exist_ok=True)
        rows: list[tuple[int, float, float]] = []
        with DirectoryLock(self.cfg.checkpoint_dir):
            log_path = os.path.join(self.cfg.checkpoint_dir, LOG_NAME)
            with open(log_path, "a", encoding="utf-8") as log:
                while self.opt.step < self.cfg.steps:
                    next_stop = min(
                        self.cfg.steps,
                        (self.opt.step // self.cfg.checkpoint_every + 1)
                        * self.cfg.checkpoint_every,
                    )
                    rows.extend(self.train(until_step=next_stop, log=log))
                    self.save(os.path.join(self.cfg.checkpoint_dir, f"ckpt-{self.opt.step}.npz"))
        return rows

    def save(self, path: str) -> None:
        save_checkpoint(path, self.model, self.opt, self.cfg)


def summarize_ids(model: Summarizer, src_ids: np.ndarray, dec_cfg: DecodingConfig) -> list[int]:
    return beam_search(model, src_ids, dec_cfg)


def evaluate_model(
    model: Summarizer,
    test_pairs: list[tuple[np.ndarray, list[str]]],
    dec_cfg: DecodingConfig,
    words: bool = False,
) -> dict[str, RougeScore]:
    """Corpus-mean ROUGE of beam-search output against references.

    test_pairs holds (source ids, reference token strings). With words=True
    both sides are detokenized to whitespace words before scoring.
    """
    from .tokenizer import detokenize

    per_doc = []
    for src_ids, ref_tokens in test_pairs:
        cand_ids = beam_search(model, src_ids, dec_cfg)
        cand_tokens = [model.vocab.token(i) for i in cand_ids]
        if words:
            cand = detokenize(cand_ids, model.vocab).split()
            ref = detokenize([model.vocab.id(t) for t in ref_tokens], model.vocab).split()
            per_doc.append(rouge_all(cand, ref))
        else:
            per_doc.append(rouge_all(cand_tokens, ref_tokens))
    return mean_scores(per_doc)
