"""Full model assembly: embedding -> BiLSTM -> attention -> TextCNN.

Embedding and attention run per document; the BiLSTM and the TextCNN head
batch same-length documents through shared graph nodes, and batches
average per-document losses.  The "fine" variant runs the word-level
cross-attention; the "coarse" ablation variant replaces it with one pooled
attention over emojis, keeping the classifier input width identical
(6d per position) so head capacity stays comparable.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import autograd as ag
from .attention import (
    CoarseAttentionParams, FineAttentionParams, coarse_attention,
    fine_attention,
)
from .autograd import Value
from .classifier import TextCnnParams, predict_label, textcnn_forward_batch
from .corpus import Vocab
from .embedding import BisenseEmojiEmbedding, TextEncoder
from .encoder import LstmParams, bilstm_encode_batch
from .objective import LossConfig, alignment_loss, cross_entropy, total_loss

VARIANTS = ("fine", "coarse")


@dataclass
class TrainConfig:
    """Model and training hyperparameters.

    Defaults follow the reference setup where one exists: hidden size 200,
    dropout 0.2, batch size 64, 10 epochs, max text length 100, Adam at
    5e-4.  The rest (embedding dim, filter counts, alignment weight) are
    this artifact's own knobs.
    """

    d: int = 200
    d_w: int = 200
    n_filters: int = 64
    widths: tuple = (2, 3, 4)
    dropout: float = 0.2
    batch_size: int = 64
    epochs: int = 10
    max_len: int = 100
    lr: float = 5e-4
    lambda_align: float = 0.1
    label_smoothing: float = 0.0
    seed: int = 0
    encoder_mode: str = "trainable_table"
    variant: str = "fine"
    min_count: int = 1

    def __post_init__(self):
        self.widths = tuple(self.widths)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.encoder_mode not in ("trainable_table", "precomputed_file"):
            raise ValueError(f"unknown encoder_mode {self.encoder_mode!r}")
        for name in ("d", "d_w", "n_filters", "batch_size", "epochs", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def to_json_dict(self) -> dict:
        obj = asdict(self)
        obj["widths"] = list(self.widths)
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


@dataclass
class DocOutputs:
    """Everything one forward pass exposes for loss and inspection."""

    probs: Value
    logits: Value
    text_states: Value               # (n, 2d)
    sense_weights: Value | None      # (m, 2)
    attention: object | None = None  # AttentionOutputs for the fine variant
    coarse_weights: Value | None = None


class Model:
    """One trained classifier instance (either variant) plus its vocab."""

    def __init__(self, config: TrainConfig, vocab: Vocab,
                 text_encoder: TextEncoder | None = None):
        if vocab.n_emoji < 1:
            raise ValueError("emoji vocabulary is empty")
        self.config = config
        self.vocab = vocab
        seeds = np.random.SeedSequence([config.seed, 0]).spawn(6)
        rngs = [np.random.default_rng(s) for s in seeds]

        if text_encoder is not None:
            self.text_encoder = text_encoder
        elif config.encoder_mode == "trainable_table":
            self.text_encoder = TextEncoder(config.d_w, vocab.n_text, rngs[0])
        else:
            raise ValueError(
                "precomputed_file encoder mode needs an explicit TextEncoder")
        self.emoji_table = BisenseEmojiEmbedding(vocab.n_emoji, config.d_w,
                                                 rngs[1])
        self.lstm_fwd = LstmParams(config.d, config.d_w, rngs[2])
        self.lstm_bwd = LstmParams(config.d, config.d_w, rngs[3])

        hidden = 2 * config.d
        self.fine_params = None
        self.coarse_params = None
        if config.variant == "fine":
            self.fine_params = FineAttentionParams(hidden, rngs[4])
        else:
            self.coarse_params = CoarseAttentionParams(hidden, rngs[4])
        # per-position classifier input: [H_t ; 4d summary] either way
        self.cnn = TextCnnParams(hidden + 2 * hidden, config.n_filters,
                                 rngs[5], widths=config.widths)
        self.loss_config = LossConfig(lambda_align=config.lambda_align,
                                      label_smoothing=config.label_smoothing)

    def parameters(self) -> dict[str, Value]:
        params: dict[str, Value] = {}
        params.update(self.text_encoder.parameters())
        params.update(self.emoji_table.parameters())
        params.update(self.lstm_fwd.parameters("lstm_fwd"))
        params.update(self.lstm_bwd.parameters("lstm_bwd"))
        if self.fine_params is not None:
            params.update(self.fine_params.parameters())
        if self.coarse_params is not None:
            params.update(self.coarse_params.parameters())
        params.update(self.cnn.parameters())
        return params

    def state(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.parameters().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(state) != set(params):
            missing = set(params) ^ set(state)
            raise ValueError(f"state names do not match model: {sorted(missing)}")
        for name, arr in state.items():
            if params[name].data.shape != arr.shape:
                raise ValueError(
                    f"state shape {arr.shape} != model shape "
                    f"{params[name].data.shape} for {name!r}")
            params[name].data[...] = arr

    def forward_docs(self, docs: list[tuple], train: bool = False,
                     dropout_rng: np.random.Generator | None = None,
                     doc_indices: list[int] | None = None) -> list[DocOutputs]:
        """Forward a list of (text_ids, emoji_ids) documents.

        Ids must be the true (unpadded) prefixes; callers slice padded
        batches by the stored lengths.  Same-length sequences share one
        batched BiLSTM node; everything else is per-document.
        """
        cfg = self.config
        drop = cfg.dropout if (train and dropout_rng is not None) else 0.0

        seqs: list[ag.Value] = []
        metas: list[tuple[int, int]] = []        # (n, m) per doc
        senses: list[ag.Value | None] = []
        for k, (text_ids, emoji_ids) in enumerate(docs):
            text_ids = np.asarray(text_ids, dtype=np.int64)
            emoji_ids = np.asarray(emoji_ids, dtype=np.int64)
            doc_index = doc_indices[k] if doc_indices is not None else None
            embedded = self.text_encoder.embed(text_ids, doc_index)  # (n, d_w)
            context = ag.mean_along(embedded, axis=0)                # (d_w,)
            sense_weights = None
            if len(emoji_ids) > 0:
                emoji_vecs, sense_weights = self.emoji_table.mix(emoji_ids,
                                                                 context)
                seq = ag.concat([embedded, emoji_vecs], axis=0)  # (n+m, d_w)
            else:
                seq = embedded
            if drop > 0.0:
                seq = ag.dropout(seq, drop, dropout_rng)
            seqs.append(seq)
            metas.append((len(text_ids), len(emoji_ids)))
            senses.append(sense_weights)

        # equal-length groups (first-seen order) share one BiLSTM node and
        # one TextCNN pass
        groups: dict[int, list[int]] = {}
        for k, seq in enumerate(seqs):
            groups.setdefault(seq.shape[0], []).append(k)
        d2 = 2 * cfg.d
        states: list[ag.Value | None] = [None] * len(seqs)
        encoded_by_group: dict[int, ag.Value] = {}
        for length, members in groups.items():
            stacked = ag.concat([ag.reshape(seqs[k], (1, length, cfg.d_w))
                                 for k in members], axis=0)
            encoded = bilstm_encode_batch(stacked, self.lstm_fwd,
                                          self.lstm_bwd)  # (B, L, 2d)
            encoded_by_group[length] = encoded
            for row, k in enumerate(members):
                states[k] = ag.reshape(ag.narrow(encoded, 0, row, 1),
                                       (length, d2))

        summaries: list[ag.Value | None] = [None] * len(seqs)
        attentions: list = [None] * len(seqs)
        coarse_w: list = [None] * len(seqs)
        text_st: list = [None] * len(seqs)
        for k, (n, m) in enumerate(metas):
            text_states = ag.narrow(states[k], 0, 0, n)
            emoji_states = (ag.narrow(states[k], 0, n, m) if m > 0
                            else ag.constant(np.zeros((0, d2))))
            if self.fine_params is not None:
                att = fine_attention(text_states, emoji_states,
                                     self.fine_params)
                attentions[k] = att
                summary = att.fused                               # (4d,)
            else:
                ctx, weights = coarse_attention(text_states, emoji_states,
                                                self.coarse_params)
                coarse_w[k] = weights
                summary = ag.concat([ag.mean_along(text_states, axis=0), ctx],
                                    axis=0)                       # (4d,)
            if drop > 0.0:
                summary = ag.dropout(summary, drop, dropout_rng)
            summaries[k] = summary
            text_st[k] = text_states

        probs: list[ag.Value | None] = [None] * len(seqs)
        logits: list[ag.Value | None] = [None] * len(seqs)
        for length, members in groups.items():
            stacked_sum = ag.concat(
                [ag.reshape(summaries[k], (1, 4 * cfg.d)) for k in members],
                axis=0)
            p_batch, l_batch = textcnn_forward_batch(
                encoded_by_group[length], stacked_sum, self.cnn,
                dropout_rate=drop,
                dropout_rng=dropout_rng if drop > 0.0 else None)
            for row, k in enumerate(members):
                probs[k] = ag.reshape(ag.narrow(p_batch, 0, row, 1), (2,))
                logits[k] = ag.reshape(ag.narrow(l_batch, 0, row, 1), (2,))

        return [DocOutputs(probs=probs[k], logits=logits[k],
                           text_states=text_st[k], sense_weights=senses[k],
                           attention=attentions[k], coarse_weights=coarse_w[k])
                for k in range(len(seqs))]

    def forward_doc(self, text_ids, emoji_ids, train: bool = False,
                    dropout_rng: np.random.Generator | None = None,
                    doc_index: int | None = None) -> DocOutputs:
        """Single-document convenience wrapper over `forward_docs`."""
        return self.forward_docs(
            [(text_ids, emoji_ids)], train=train, dropout_rng=dropout_rng,
            doc_indices=None if doc_index is None else [doc_index])[0]

    def doc_losses(self, outputs: DocOutputs, label: int) -> tuple[Value, Value]:
        """(cross-entropy, alignment) for one document's outputs."""
        ce = cross_entropy(outputs.probs, label,
                           self.loss_config.label_smoothing)
        if outputs.attention is not None:
            align = alignment_loss(outputs.attention.word_emoji_weights,
                                   outputs.text_states,
                                   self.fine_params.distance_w)
        else:
            align = ag.constant(0.0)
        return ce, align

    def batch_loss(self, batch, train: bool = False,
                   dropout_rng: np.random.Generator | None = None) -> Value:
        """Mean cross-entropy plus weighted mean alignment over a batch."""
        rows = [(batch.text_ids[row, :batch.text_lengths[row]],
                 batch.emoji_ids[row, :batch.emoji_counts[row]])
                for row in range(len(batch))]
        outputs = self.forward_docs(rows, train=train, dropout_rng=dropout_rng)
        ce_terms = []
        align_terms = []
        for row, out in enumerate(outputs):
            ce, align = self.doc_losses(out, int(batch.labels[row]))
            ce_terms.append(ce)
            align_terms.append(align)
        inv = 1.0 / len(batch)
        ce_mean = _accumulate(ce_terms) * inv
        align_mean = _accumulate(align_terms) * inv
        return total_loss(ce_mean, align_mean, self.loss_config)

    def predict_doc(self, text_ids, emoji_ids, explain: bool = False,
                    doc_index: int | None = None) -> dict:
        """Inference on one document; with `explain`, attach attention dumps."""
        with ag.no_grad():
            out = self.forward_doc(text_ids, emoji_ids, train=False,
                                   doc_index=doc_index)
        result = {"probs": out.probs.data.tolist(),
                  "label": predict_label(out.probs)}
        if explain:
            explain_obj: dict = {}
            if out.sense_weights is not None:
                explain_obj["sense_weights"] = out.sense_weights.data.tolist()
            if out.attention is not None:
                att = out.attention
                explain_obj.update({
                    "interaction": att.interaction.data.tolist(),
                    "emoji_weights": att.emoji_weights.data.tolist(),
                    "text_weights": att.text_weights.data.tolist(),
                    "word_emoji_weights": att.word_emoji_weights.data.tolist(),
                })
            if out.coarse_weights is not None:
                explain_obj["coarse_weights"] = out.coarse_weights.data.tolist()
            result["explain"] = explain_obj
        return result


def _accumulate(terms: list[Value]) -> Value:
    acc = terms[0]
    for t in terms[1:]:
        acc = ag.add(acc, t)
    return acc
