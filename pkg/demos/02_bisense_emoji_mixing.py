"""How one emoji gets two senses, and how context picks between them.

A crying emoji can mark grief or joyful relief.  The embedding layer keeps
two trainable vectors per emoji and mixes them through a small additive
attention network conditioned on the document context.  Here everything is
crafted by hand so the mechanism is visible: each sense and each context
polarity lights up its own coordinate, and because tanh is concave on
positive inputs, a negative readout vector scores a sense higher exactly
when it shares its coordinate with the context.
"""

import numpy as np

from faet import autograd as ag
from faet.embedding import BisenseEmojiEmbedding

DIM = 4
table = BisenseEmojiEmbedding(n_emoji=1, dim=DIM, rng=np.random.default_rng(0))

table.sense_pos.data[0] = [1.0, 0.0, 0.0, 0.0]   # coordinate 0 = positive
table.sense_neg.data[0] = [0.0, 1.0, 0.0, 0.0]   # coordinate 1 = negative

# score = v . tanh(W [sense ; context]) with W stacking two identities,
# so each tanh input is sense_k + context_k
table.att_w.data[...] = 0.0
table.att_w.data[:DIM, :DIM] = np.eye(DIM)
table.att_w.data[DIM:, :DIM] = np.eye(DIM)
table.att_v.data[...] = -1.0  # concavity: overlap scores higher under -v

for label, ctx in [("positive-ish", [1.0, 0.0, 0.0, 0.0]),
                   ("neutral", [0.0, 0.0, 0.5, 0.5]),
                   ("negative-ish", [0.0, 1.0, 0.0, 0.0])]:
    mixed, weights = table.mix([0], ag.constant(np.array(ctx)))
    print(f"{label:13s} context -> sense weights "
          f"{np.round(weights.data[0], 3)} mixed {np.round(mixed.data[0], 3)}")

print("""
A positive context pulls the mix toward the positive-sense vector and a
negative context toward the other; a neutral context leaves an even split.
The mixed vector is always a coordinate-wise convex combination of the two
senses, and during training both sense vectors and the attention
parameters receive gradients whenever the weights stay strictly between 0
and 1.
""")
