"""Embedding layer: text token vectors plus context-mixed emoji vectors.

Each emoji owns two trainable sense vectors (one leaning positive contexts,
one negative).  At use sites the two senses are mixed by additive attention
against the document context, yielding one vector per emoji position.
"""

from __future__ import annotations

import json

import numpy as np

from . import autograd as ag
from .autograd import Value
from .corpus import CorpusError, PAD_ID, Vocab


class TextEncoder:
    """Pluggable token encoder: a trainable lookup table, or fixed
    per-document vectors loaded from file.

    The PAD row of the trainable table is frozen at zero: PAD positions
    embed to zero vectors and contribute no gradient.
    """

    def __init__(self, dim: int, vocab_size: int | None = None,
                 rng: np.random.Generator | None = None,
                 doc_vectors: dict[int, np.ndarray] | None = None):
        self.dim = dim
        if doc_vectors is not None:
            self.mode = "precomputed_file"
            self.doc_vectors = doc_vectors
            self.table = None
        else:
            self.mode = "trainable_table"
            rng = rng or np.random.default_rng(0)
            init = rng.uniform(-0.1, 0.1, size=(vocab_size, dim))
            init[PAD_ID] = 0.0
            self.table = ag.param(init)
            self.doc_vectors = None

    @classmethod
    def from_precomputed(cls, path: str, dim: int) -> "TextEncoder":
        """Load fixed text vectors: JSONL, line k = {"vectors": [...]} for
        document k of the corpus, one vector per text token."""
        doc_vectors: dict[int, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    vecs = np.asarray(json.loads(line)["vectors"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise CorpusError(f"bad vector record: {exc}", i + 1) from exc
                if vecs.ndim != 2 or vecs.shape[1] != dim:
                    raise CorpusError(
                        f"vectors of dimension {vecs.shape[-1] if vecs.ndim else '?'}"
                        f" != configured {dim}", i + 1)
                doc_vectors[i] = vecs
        return cls(dim, doc_vectors=doc_vectors)

    def parameters(self) -> dict[str, Value]:
        if self.mode == "trainable_table":
            return {"text_embed": self.table}
        return {}

    def embed(self, token_ids, doc_index: int | None = None) -> Value:
        """(n,) token ids -> (n, dim); PAD positions are zero vectors."""
        token_ids = np.asarray(token_ids, dtype=np.int64)
        if self.mode == "precomputed_file":
            if doc_index is None or doc_index not in self.doc_vectors:
                raise CorpusError(
                    f"no precomputed vectors for document {doc_index!r}")
            vecs = self.doc_vectors[doc_index]
            if len(token_ids) > len(vecs):
                raise CorpusError(
                    f"document {doc_index}: {len(token_ids)} tokens but only "
                    f"{len(vecs)} precomputed vectors")
            return ag.constant(vecs[:len(token_ids)])
        rows = ag.take_rows(self.table, token_ids)
        mask = (token_ids != PAD_ID).astype(np.float64)[:, None]
        return ag.mul(rows, ag.constant(mask))


class BisenseEmojiEmbedding:
    """Two sense vectors per emoji, mixed by additive attention on context.

    For emoji position t with context vector w: score each sense s_i via
    v . tanh(W @ [e_i ; w]), softmax over the two senses, and return the
    convex combination of the sense vectors.
    """

    def __init__(self, n_emoji: int, dim: int, rng: np.random.Generator):
        self.n_emoji = n_emoji
        self.dim = dim
        self.sense_pos = ag.param(rng.uniform(-0.1, 0.1, size=(n_emoji, dim)))
        self.sense_neg = ag.param(rng.uniform(-0.1, 0.1, size=(n_emoji, dim)))
        scale = 1.0 / np.sqrt(2 * dim)
        # attention projection stored input-major: [e ; w] @ att_w -> (dim,)
        self.att_w = ag.param(rng.uniform(-scale, scale, size=(2 * dim, dim)))
        self.att_v = ag.param(rng.uniform(-scale, scale, size=dim))

    def parameters(self) -> dict[str, Value]:
        return {"emoji_sense_pos": self.sense_pos,
                "emoji_sense_neg": self.sense_neg,
                "sense_att_w": self.att_w,
                "sense_att_v": self.att_v}

    def mix(self, emoji_ids, context: Value) -> tuple[Value, Value]:
        """(m,) emoji ids + (dim,) context -> ((m, dim) mixed vectors,
        (m, 2) sense attention weights)."""
        emoji_ids = np.asarray(emoji_ids, dtype=np.int64)
        if emoji_ids.size and emoji_ids.max() >= self.n_emoji:
            raise CorpusError(
                f"emoji id {emoji_ids.max()} outside closed vocabulary "
                f"of {self.n_emoji}")
        m = len(emoji_ids)
        e_pos = ag.take_rows(self.sense_pos, emoji_ids)  # (m, dim)
        e_neg = ag.take_rows(self.sense_neg, emoji_ids)
        ctx = ag.broadcast_to(ag.reshape(context, (1, self.dim)), (m, self.dim))
        score_pos = ag.matmul(
            ag.tanh(ag.matmul(ag.concat([e_pos, ctx], axis=1), self.att_w)),
            self.att_v)  # (m,)
        score_neg = ag.matmul(
            ag.tanh(ag.matmul(ag.concat([e_neg, ctx], axis=1), self.att_w)),
            self.att_v)
        scores = ag.concat([ag.reshape(score_pos, (m, 1)),
                            ag.reshape(score_neg, (m, 1))], axis=1)
        weights = ag.softmax(scores, axis=1)  # (m, 2)
        mixed = ag.add(ag.mul(ag.narrow(weights, 1, 0, 1), e_pos),
                       ag.mul(ag.narrow(weights, 1, 1, 1), e_neg))
        return mixed, weights


def load_pretrained_emoji_vectors(path: str, table: BisenseEmojiEmbedding,
                                  vocab: Vocab) -> dict[str, int]:
    """Initialize sense vectors from a word2vec-style text file.

    Format: header "count dim", then "token v1 ... v_dim" per line.  Tokens
    suffixed "_pos"/"_neg" initialize one sense; bare tokens set both senses
    to the same vector.  Entries not in the emoji vocabulary are counted and
    skipped.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorpusError("header must be 'count dim'", 1)
        try:
            _, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise CorpusError(f"bad header: {exc}", 1) from exc
        if dim != table.dim:
            raise CorpusError(
                f"file dimension {dim} != configured dimension {table.dim}", 1)
        loaded = 0
        ignored = 0
        for i, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dim + 1:
                raise CorpusError(
                    f"expected token + {dim} values, got {len(parts)} fields", i)
            token = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise CorpusError(f"bad number: {exc}", i) from exc
            sense = "both"
            base = token
            if token.endswith("_pos"):
                base, sense = token[:-4], "pos"
            elif token.endswith("_neg"):
                base, sense = token[:-4], "neg"
            if base not in vocab.emoji_to_id:
                ignored += 1
                continue
            eid = vocab.emoji_to_id[base]
            if sense in ("pos", "both"):
                table.sense_pos.data[eid] = vec
            if sense in ("neg", "both"):
                table.sense_neg.data[eid] = vec
            loaded += 1
    return {"loaded": loaded, "ignored": ignored}
