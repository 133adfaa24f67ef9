"""Subword tokenization: greedy longest-match against a vocabulary with "##"
continuation pieces, plus detokenization and frequency-based vocab building."""

from __future__ import annotations

import collections
from typing import Iterable

from .errors import ContractError, DataError

PAD, UNK, CLS, SEP, BOS, EOS = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "<s>", "</s>"
RESERVED = (PAD, UNK, CLS, SEP, BOS, EOS)
CONT = "##"


class Vocab:
    """Immutable bidirectional token<->id table; reserved tokens pinned to ids 0-5."""

    def __init__(self, tokens: list[str]):
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise ContractError(f"vocab must start with the reserved tokens {RESERVED}")
        if len(set(tokens)) != len(tokens):
            raise ContractError("vocab contains duplicate tokens")
        self._tokens = list(tokens)
        self._ids = {t: i for i, t in enumerate(tokens)}

    pad_id, unk_id, cls_id, sep_id, bos_id, eos_id = 0, 1, 2, 3, 4, 5

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            raise ContractError(f"token not in vocab: {token!r}") from None

    def token(self, i: int) -> str:
        if not 0 <= i < len(self._tokens):
            raise ContractError(f"id out of vocab range: {i}")
        return self._tokens[i]

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for t in self._tokens:
                f.write(t + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocab":
        try:
            with open(path, encoding="utf-8") as f:
                tokens = [line.rstrip("\n") for line in f]
        except OSError as e:
            raise DataError(f"cannot read vocab file {path}: {e}") from e
        if tokens and tokens[-1] == "":
            tokens.pop()
        if not tokens:
            raise DataError(f"empty vocab file: {path}")
        return cls(tokens)


def _is_word_char(ch: str) -> bool:
    return ch.isalnum()


def split_words(text: str) -> list[str]:
    """Lowercase, split on whitespace, and break punctuation into single tokens."""
    out: list[str] = []
    buf: list[str] = []
    for ch in text.lower():
        if ch.isspace():
            if buf:
                out.append("".join(buf))
                buf = []
        elif _is_word_char(ch):
            buf.append(ch)
        else:
            if buf:
                out.append("".join(buf))
                buf = []
            out.append(ch)
    if buf:
        out.append("".join(buf))
    return out


def wordpieces(word: str, vocab: Vocab) -> list[str] | None:
    """Greedy longest-match-first decomposition; None if no full decomposition."""
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            sub = word[start:end]
            if start > 0:
                sub = CONT + sub
            if sub in vocab:
                piece = sub
                break
            end -= 1
        if piece is None:
            return None
        pieces.append(piece)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocab) -> list[int]:
    """Token ids starting with [CLS]; undecomposable words map to one [UNK]."""
    ids = [vocab.cls_id]
    for word in split_words(text):
        pieces = wordpieces(word, vocab)
        if pieces is None:
            ids.append(vocab.unk_id)
        else:
            ids.extend(vocab.id(p) for p in pieces)
    return ids


def detokenize(ids: Iterable[int], vocab: Vocab) -> str:
    """Merge continuation pieces, drop reserved tokens, join words with spaces."""
    words: list[str] = []
    for i in ids:
        tok = vocab.token(i)
        if tok in RESERVED:
            continue
        if tok.startswith(CONT) and words:
            words[-1] += tok[len(CONT):]
        else:
            words.append(tok[len(CONT):] if tok.startswith(CONT) else tok)
    return " ".join(words)


def build_vocab(corpus: Iterable[str], size: int) -> Vocab:
    """Frequency-based vocab: reserved tokens, the seen character alphabet (both
    word-initial and "##" continuation forms), then the most frequent whole
    words and "##" suffix pieces until `size` entries are reached."""
    if size <= len(RESERVED):
        raise ContractError(f"vocab size must exceed the {len(RESERVED)} reserved tokens")
    word_counts: collections.Counter[str] = collections.Counter()
    chars: set[str] = set()
    for text in corpus:
        for w in split_words(text):
            word_counts[w] += 1
            chars.update(w)
    if not word_counts:
        raise DataError("build_vocab: empty corpus")

    tokens = list(RESERVED)
    for c in sorted(chars):
        tokens.append(c)
        tokens.append(CONT + c)
    if len(tokens) > size:
        raise ContractError(
            f"vocab size {size} is smaller than reserved tokens plus the "
            f"character set ({len(tokens)} entries)"
        )

    present = set(tokens)
    candidates: collections.Counter[str] = collections.Counter()
    for w, n in word_counts.items():
        candidates[w] += n
        for i in range(1, len(w)):
            candidates[CONT + w[i:]] += n
    for tok, _ in sorted(candidates.items(), key=lambda kv: (-kv[1], kv[0])):
        if len(tokens) >= size:
            break
        if tok not in present:
            tokens.append(tok)
            present.add(tok)
    return Vocab(tokens)
