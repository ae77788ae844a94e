"""Word-level cross-attention between text and emoji hidden states.

An interaction matrix scores every (text word, emoji) pair from the
concatenation [emoji ; word ; emoji*word].  Pooling it in both directions
gives an emoji-importance distribution (column max over text, then softmax)
and a text-importance distribution (row max over emojis, then softmax);
each weights its own hidden states into a summary vector and the two
summaries concatenate into the fused representation.  Row-softmaxed
interaction scores additionally provide each text word's distribution over
emojis, consumed by the alignment term of the objective.

A single pooled (coarse) attention over emojis is included as the ablation
variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import ShapeError, Value


class FineAttentionParams:
    """Interaction scorer over 6d pair features plus the 4d pair-distance
    weights used by the alignment loss."""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.hidden = hidden  # feature size per position (2d)
        self.interaction_w = ag.param(
            rng.uniform(-1, 1, 3 * hidden) / np.sqrt(3 * hidden))
        self.distance_w = ag.param(
            rng.uniform(-1, 1, 2 * hidden) / np.sqrt(2 * hidden))

    def parameters(self) -> dict[str, Value]:
        return {"interaction_w": self.interaction_w,
                "distance_w": self.distance_w}


class CoarseAttentionParams:
    """Sentence-conditioned attention over emoji states (ablation variant)."""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        scale = 1.0 / np.sqrt(2 * hidden)
        self.w = ag.param(rng.uniform(-scale, scale, (2 * hidden, hidden)))
        self.v = ag.param(rng.uniform(-scale, scale, hidden))

    def parameters(self) -> dict[str, Value]:
        return {"coarse_w": self.w, "coarse_v": self.v}


@dataclass
class AttentionOutputs:
    interaction: Value          # (n, m)
    emoji_weights: Value        # (m,) distribution over emojis
    text_weights: Value         # (n,) distribution over text words
    word_emoji_weights: Value   # (n, m) per-word distributions over emojis
    emoji_summary: Value        # (2d,)
    text_summary: Value         # (2d,)
    fused: Value                # (4d,) == [text_summary ; emoji_summary]


def interaction_matrix(text: Value, emoji: Value, weights: Value) -> Value:
    """(n, 2d) text states x (m, 2d) emoji states -> (n, m) scores.

    Entry (i, j) depends on exactly one pair: w . [E_j ; T_i ; E_j * T_i].
    """
    n, feat = text.shape
    m = emoji.shape[0]
    if emoji.shape[1] != feat:
        raise ShapeError(
            f"interaction: text features {feat} != emoji features {emoji.shape[1]}")
    if weights.shape != (3 * feat,):
        raise ShapeError(
            f"interaction: weight length {weights.shape} != 3*features "
            f"({3 * feat},)")
    t_grid = ag.broadcast_to(ag.reshape(text, (n, 1, feat)), (n, m, feat))
    e_grid = ag.broadcast_to(ag.reshape(emoji, (1, m, feat)), (n, m, feat))
    pair = ag.concat([e_grid, t_grid, ag.mul(e_grid, t_grid)], axis=2)
    return ag.reshape(ag.matmul(ag.reshape(pair, (n * m, 3 * feat)), weights),
                      (n, m))


def emoji_to_text(interaction: Value, emoji: Value) -> tuple[Value, Value]:
    """Column-max pooling over text words -> (emoji weights (m,),
    attended emoji summary (2d,)).

    With no emojis (predict mode only) the weights are empty and the
    summary is a zero vector.
    """
    m = interaction.shape[1]
    if m == 0:
        return (ag.constant(np.zeros(0)),
                ag.constant(np.zeros(emoji.shape[1] if emoji.ndim == 2 else 0)))
    scores = ag.max_along(interaction, axis=0)      # (m,)
    weights = ag.softmax(scores, axis=0)
    return weights, ag.matmul(weights, emoji)


def text_to_emoji(interaction: Value, text: Value) -> tuple[Value, Value]:
    """Row-max pooling over emojis -> (text weights (n,),
    attended text summary (2d,)).

    With no emojis there is nothing to score against: the weights fall back
    to uniform, making the summary the plain average of the text states.
    """
    n, m = interaction.shape
    if m == 0:
        weights = ag.softmax(ag.constant(np.zeros(n)), axis=0)
    else:
        weights = ag.softmax(ag.max_along(interaction, axis=1), axis=0)
    return weights, ag.matmul(weights, text)


def word_emoji_attention(interaction: Value) -> Value:
    """Row-softmax of the interaction matrix: each text word's distribution
    over the emojis (alignment-loss input)."""
    return ag.softmax(interaction, axis=1)


def fuse(text_summary: Value, emoji_summary: Value) -> Value:
    """[text_summary ; emoji_summary], length 4d."""
    if text_summary.shape != emoji_summary.shape:
        raise ShapeError(
            f"fuse: summary lengths differ: {text_summary.shape} vs "
            f"{emoji_summary.shape}")
    return ag.concat([text_summary, emoji_summary], axis=0)


def fine_attention(text: Value, emoji: Value,
                   params: FineAttentionParams) -> AttentionOutputs:
    """Full bidirectional pass over one document's hidden states."""
    if emoji.shape[0] == 0:
        n = text.shape[0]
        text_weights, text_summary = text_to_emoji(
            ag.constant(np.zeros((n, 0))), text)
        zero = ag.constant(np.zeros(text.shape[1]))
        return AttentionOutputs(
            interaction=ag.constant(np.zeros((n, 0))),
            emoji_weights=ag.constant(np.zeros(0)),
            text_weights=text_weights,
            word_emoji_weights=ag.constant(np.zeros((n, 0))),
            emoji_summary=zero,
            text_summary=text_summary,
            fused=fuse(text_summary, zero))
    interaction = interaction_matrix(text, emoji, params.interaction_w)
    emoji_weights, emoji_summary = emoji_to_text(interaction, emoji)
    text_weights, text_summary = text_to_emoji(interaction, text)
    return AttentionOutputs(
        interaction=interaction,
        emoji_weights=emoji_weights,
        text_weights=text_weights,
        word_emoji_weights=word_emoji_attention(interaction),
        emoji_summary=emoji_summary,
        text_summary=text_summary,
        fused=fuse(text_summary, emoji_summary))


def coarse_attention(text: Value, emoji: Value,
                     params: CoarseAttentionParams) -> tuple[Value, Value]:
    """Single sentence-conditioned attention over emoji states.

    Scores each emoji by v . tanh(W @ [E_j ; mean(T)]); returns the
    weighted emoji context (2d,) and the weights (m,).
    """
    m = emoji.shape[0]
    feat = text.shape[1]
    if m == 0:
        return ag.constant(np.zeros(feat)), ag.constant(np.zeros(0))
    sentence = ag.mean_along(text, axis=0)  # (2d,)
    sent_grid = ag.broadcast_to(ag.reshape(sentence, (1, feat)), (m, feat))
    scores = ag.matmul(
        ag.tanh(ag.matmul(ag.concat([emoji, sent_grid], axis=1), params.w)),
        params.v)  # (m,)
    weights = ag.softmax(scores, axis=0)
    return ag.matmul(weights, emoji), weights
