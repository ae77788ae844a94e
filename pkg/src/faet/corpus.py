"""Corpus handling: JSONL ingestion, emoji extraction, splits, vocab, batches.

The primary input format is JSONL with pre-tokenized fields; raw-text
ingestion through `extract_emojis` is a convenience path so tokenizer
disputes stay out of the model's test surface.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class CorpusError(ValueError):
    """Malformed corpus input; carries the offending line number if known."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass
class TokenizedDoc:
    """One sample: text tokens, emoji tokens, optional binary label (1=positive)."""

    text_tokens: list[str]
    emoji_tokens: list[str]
    label: int | None = None

    def to_json(self) -> str:
        obj = {"text_tokens": self.text_tokens, "emoji_tokens": self.emoji_tokens}
        if self.label is not None:
            obj["label"] = self.label
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def parse_jsonl_record(line: str, line_number: int | None = None,
                       mode: str = "train") -> TokenizedDoc:
    """Parse and validate one JSONL record.

    mode="train" covers training/eval records (label and >=1 emoji required);
    mode="predict" allows missing labels and empty emoji lists.  Unknown
    extra fields are ignored.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON: {exc.msg}", line_number) from exc
    if not isinstance(obj, dict):
        raise CorpusError("record is not a JSON object", line_number)

    text = obj.get("text_tokens")
    if not isinstance(text, list) or not text:
        raise CorpusError("text_tokens must be a non-empty array", line_number)
    if not all(isinstance(t, str) and t for t in text):
        raise CorpusError("text_tokens must be non-empty strings", line_number)

    emojis = obj.get("emoji_tokens", [])
    if not isinstance(emojis, list) or not all(
            isinstance(t, str) and t for t in emojis):
        raise CorpusError("emoji_tokens must be an array of non-empty strings",
                          line_number)

    label = obj.get("label")
    if label is not None and label not in (0, 1):
        raise CorpusError(f"label must be 0 or 1, got {label!r}", line_number)

    if mode == "train":
        if label is None:
            raise CorpusError("label required", line_number)
        if not emojis:
            raise CorpusError("at least one emoji token required", line_number)
    elif mode != "predict":
        raise ValueError(f"unknown mode {mode!r}")

    return TokenizedDoc(list(text), list(emojis), label)


def read_jsonl(path: str, mode: str = "train") -> list[TokenizedDoc]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                docs.append(parse_jsonl_record(line, line_number=i, mode=mode))
    return docs


def write_jsonl(docs: list[TokenizedDoc], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc.to_json() + "\n")


# Pictographic code point blocks treated as emoji; joiners/variation
# selectors are dropped so "😊️" still yields one emoji token.
_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF), (0x1F600, 0x1F64F), (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF), (0x1FA70, 0x1FAFF), (0x1F1E6, 0x1F1FF),
    (0x2600, 0x26FF), (0x2700, 0x27BF),
)
_CJK_RANGES = (
    (0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF),
    (0x3000, 0x303F), (0xFF00, 0xFFEF),
)
_SKIP_CODEPOINTS = {0xFE0E, 0xFE0F, 0x200D}
_ALIAS_RE = re.compile(r"(\[[^\[\]]*\])")


def _in_ranges(cp: int, ranges) -> bool:
    return any(lo <= cp <= hi for lo, hi in ranges)


def is_emoji_char(ch: str) -> bool:
    return _in_ranges(ord(ch), _EMOJI_RANGES)


def load_alias_table(path: str) -> dict[str, str]:
    """Alias table file: one "name<TAB>emoji" entry per line."""
    table = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise CorpusError("alias line needs name<TAB>emoji", i)
            name, emoji = line.split("\t", 1)
            table[name] = emoji
    return table


def extract_emojis(raw: str, aliases: dict[str, str] | None = None
                   ) -> tuple[list[str], list[str]]:
    """Split a raw string into text tokens and emoji tokens, in order.

    Emoji code points (and bracketed alias names like "[smile]") move to the
    emoji stream with multiplicity preserved; the rest is tokenized
    per-character for CJK runs and whitespace-delimited otherwise.
    """
    aliases = aliases or {}
    text_tokens: list[str] = []
    emoji_tokens: list[str] = []
    word: list[str] = []

    def flush():
        if word:
            text_tokens.append("".join(word))
            word.clear()

    for piece in _ALIAS_RE.split(raw):
        if piece.startswith("[") and piece.endswith("]") and piece[1:-1] in aliases:
            flush()
            emoji_tokens.append(aliases[piece[1:-1]])
            continue
        for ch in piece:
            cp = ord(ch)
            if cp in _SKIP_CODEPOINTS:
                continue
            if _in_ranges(cp, _EMOJI_RANGES):
                flush()
                emoji_tokens.append(ch)
            elif _in_ranges(cp, _CJK_RANGES):
                flush()
                if not ch.isspace():
                    text_tokens.append(ch)
            elif ch.isspace():
                flush()
            else:
                word.append(ch)
    flush()
    return text_tokens, emoji_tokens


@dataclass
class SplitSpec:
    """train:test:val ratios plus the shuffle seed; same seed, same partition."""

    ratios: tuple[float, float, float] = (7.0, 2.0, 1.0)
    seed: int = 0


def split_sizes(n: int, ratios=(7.0, 2.0, 1.0)) -> tuple[int, int, int]:
    """Deterministic floor rule: test and val floor their share, train gets
    the remainder."""
    r_train, r_test, r_val = ratios
    if min(ratios) <= 0:
        raise ValueError(f"ratios must be positive, got {ratios}")
    total = r_train + r_test + r_val
    n_test = int(np.floor(n * r_test / total))
    n_val = int(np.floor(n * r_val / total))
    return n - n_test - n_val, n_test, n_val


# Split sizes reported elsewhere for the 8930-comment reference corpus; they
# differ from the floor rule by one document and follow no stated rule, so
# they are surfaced in reports but never reproduced.
REFERENCE_SPLIT = {"total": 8930, "train": 6250, "test": 1786, "val": 894}


def split_report(n: int, ratios=(7.0, 2.0, 1.0)) -> dict:
    n_train, n_test, n_val = split_sizes(n, ratios)
    report = {
        "total": n,
        "train": n_train,
        "test": n_test,
        "val": n_val,
        "rule": "test=floor(N*r_test/S), val=floor(N*r_val/S), train=remainder",
    }
    if n == REFERENCE_SPLIT["total"] and tuple(ratios) == (7.0, 2.0, 1.0):
        report["reference_note"] = (
            "floor rule gives {train}/{test}/{val}; the reference corpus "
            "reports {rt}/{rs}/{rv} for the same 8930 documents (off by one "
            "on train/val; its partition rule is unspecified)".format(
                train=n_train, test=n_test, val=n_val,
                rt=REFERENCE_SPLIT["train"], rs=REFERENCE_SPLIT["test"],
                rv=REFERENCE_SPLIT["val"]))
    return report


def split_corpus(docs: list[TokenizedDoc], spec: SplitSpec | None = None
                 ) -> tuple[list[TokenizedDoc], list[TokenizedDoc], list[TokenizedDoc]]:
    """Seeded shuffle, then cut into (train, test, val) by the floor rule."""
    spec = spec or SplitSpec()
    n = len(docs)
    if n < 10:
        raise CorpusError(f"need at least 10 documents to split, got {n}")
    n_train, n_test, n_val = split_sizes(n, spec.ratios)
    perm = np.random.default_rng(spec.seed).permutation(n)
    shuffled = [docs[i] for i in perm]
    return (shuffled[:n_train],
            shuffled[n_train:n_train + n_test],
            shuffled[n_train + n_test:])


@dataclass
class Vocab:
    """Token<->id maps: text ids reserve PAD=0 and UNK=1, emoji ids are dense."""

    id_to_text: list[str] = field(default_factory=lambda: [PAD_TOKEN, UNK_TOKEN])
    id_to_emoji: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.text_to_id = {t: i for i, t in enumerate(self.id_to_text)}
        self.emoji_to_id = {t: i for i, t in enumerate(self.id_to_emoji)}

    @property
    def n_text(self) -> int:
        return len(self.id_to_text)

    @property
    def n_emoji(self) -> int:
        return len(self.id_to_emoji)

    def encode_text(self, tokens: list[str]) -> list[int]:
        return [self.text_to_id.get(t, UNK_ID) for t in tokens]

    def decode_text(self, ids: list[int]) -> list[str]:
        return [self.id_to_text[i] for i in ids]

    def encode_emojis(self, tokens: list[str]) -> list[int]:
        try:
            return [self.emoji_to_id[t] for t in tokens]
        except KeyError as exc:
            raise CorpusError(
                f"emoji token {exc.args[0]!r} not in vocabulary "
                "(closed after build)") from exc

    def to_json_dict(self) -> dict:
        return {"text": self.id_to_text, "emoji": self.id_to_emoji}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Vocab":
        return cls(id_to_text=list(obj["text"]), id_to_emoji=list(obj["emoji"]))


def build_vocab(train_docs: list[TokenizedDoc], min_count: int = 1) -> Vocab:
    """First-seen-order vocabulary from the training split only."""
    counts: dict[str, int] = {}
    for doc in train_docs:
        for tok in doc.text_tokens:
            counts[tok] = counts.get(tok, 0) + 1
    id_to_text = [PAD_TOKEN, UNK_TOKEN]
    id_to_text.extend(t for t, c in counts.items() if c >= min_count)

    id_to_emoji: list[str] = []
    seen = set()
    for doc in train_docs:
        for tok in doc.emoji_tokens:
            if tok not in seen:
                seen.add(tok)
                id_to_emoji.append(tok)
    return Vocab(id_to_text=id_to_text, id_to_emoji=id_to_emoji)


@dataclass
class Batch:
    """Padded id matrices plus true lengths; padding positions carry PAD_ID
    (text) or 0 (emoji) and are never read past the stored counts."""

    text_ids: np.ndarray      # (B, Lmax) int64
    text_lengths: np.ndarray  # (B,)
    emoji_ids: np.ndarray     # (B, Mmax) int64
    emoji_counts: np.ndarray  # (B,)
    labels: np.ndarray        # (B,) int64, -1 when absent
    docs: list[TokenizedDoc]

    def __len__(self) -> int:
        return len(self.docs)


def encode_doc(doc: TokenizedDoc, vocab: Vocab, max_len: int = 100
               ) -> tuple[list[int], list[int]]:
    text_ids = vocab.encode_text(doc.text_tokens[:max_len])
    emoji_ids = vocab.encode_emojis(doc.emoji_tokens)
    return text_ids, emoji_ids


def make_batches(docs: list[TokenizedDoc], vocab: Vocab, batch_size: int,
                 max_len: int = 100, seed: int = 0, shuffle: bool = True,
                 mode: str = "train") -> list[Batch]:
    """Seeded shuffle, encode, pad; the final partial batch is kept."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = (np.random.default_rng(seed).permutation(len(docs))
             if shuffle else np.arange(len(docs)))
    batches = []
    for start in range(0, len(docs), batch_size):
        chunk = [docs[i] for i in order[start:start + batch_size]]
        encoded = [encode_doc(d, vocab, max_len) for d in chunk]
        if mode == "train" and any(not e for _, e in encoded):
            raise CorpusError("document without emojis in training batch")
        b = len(chunk)
        l_max = max(len(t) for t, _ in encoded)
        m_max = max((len(e) for _, e in encoded), default=0)
        text_ids = np.full((b, l_max), PAD_ID, dtype=np.int64)
        emoji_ids = np.zeros((b, max(m_max, 1)), dtype=np.int64)
        text_lengths = np.zeros(b, dtype=np.int64)
        emoji_counts = np.zeros(b, dtype=np.int64)
        labels = np.full(b, -1, dtype=np.int64)
        for row, (doc, (tids, eids)) in enumerate(zip(chunk, encoded)):
            text_ids[row, :len(tids)] = tids
            text_lengths[row] = len(tids)
            emoji_ids[row, :len(eids)] = eids
            emoji_counts[row] = len(eids)
            if doc.label is not None:
                labels[row] = doc.label
        batches.append(Batch(text_ids, text_lengths, emoji_ids, emoji_counts,
                             labels, chunk))
    return batches
