"""TextCNN head behavior and label decisions."""

import numpy as np

from faet import autograd as ag
from faet.classifier import Prediction, TextCnnParams, predict_label, textcnn_forward


def make_params(channels, n_filters=3, widths=(2, 3, 4), seed=0):
    return TextCnnParams(channels, n_filters, np.random.default_rng(seed),
                         widths=widths)


def rand_inputs(length, hidden_dim, fused_dim, seed):
    rng = np.random.default_rng(seed)
    return (ag.constant(rng.uniform(-1, 1, (length, hidden_dim))),
            ag.constant(rng.uniform(-1, 1, fused_dim)))


class TestForward:
    def test_all_zero_params_give_half_half(self):
        params = make_params(channels=10)
        for p in params.parameters().values():
            p.data[...] = 0.0
        hidden, fused = rand_inputs(5, 6, 4, seed=1)
        probs, logits = textcnn_forward(hidden, fused, params)
        np.testing.assert_allclose(probs.data, [0.5, 0.5], atol=1e-15)
        np.testing.assert_array_equal(logits.data, [0.0, 0.0])

    def test_prob_sums_on_fuzzed_inputs(self):
        rng = np.random.default_rng(2)
        params = make_params(channels=8, seed=3)
        for _ in range(200):
            length = int(rng.integers(1, 8))
            hidden = ag.constant(rng.uniform(-2, 2, (length, 5)))
            fused = ag.constant(rng.uniform(-2, 2, 3))
            with ag.no_grad():
                probs, _ = textcnn_forward(hidden, fused, params)
            assert np.all(probs.data >= 0)
            np.testing.assert_allclose(probs.data.sum(), 1.0, atol=1e-9)

    def test_width_one_kernels_are_permutation_invariant(self):
        params = make_params(channels=7, widths=(1,), seed=4)
        hidden, fused = rand_inputs(6, 4, 3, seed=5)
        probs, _ = textcnn_forward(hidden, fused, params)
        perm = np.random.default_rng(6).permutation(6)
        probs_p, _ = textcnn_forward(ag.constant(hidden.data[perm]), fused, params)
        np.testing.assert_allclose(probs.data, probs_p.data, atol=1e-12)

    def test_short_sequence_widths_contribute_zeros(self):
        params = make_params(channels=6, widths=(1, 3), seed=7)
        hidden, fused = rand_inputs(1, 4, 2, seed=8)  # too short for width 3
        probs, logits = textcnn_forward(hidden, fused, params)
        # manually: only the width-1 branch contributes pooled features
        conv = ag.relu(ag.conv1d(
            ag.concat([hidden, ag.reshape(fused, (1, 2))], axis=1),
            params.filters[1], params.filter_bias[1], width=1))
        feats = np.concatenate([np.max(conv.data, axis=0), np.zeros(3)])
        expected = feats @ params.out_w.data + params.out_b.data
        np.testing.assert_allclose(logits.data, expected, atol=1e-12)

    def test_logit_shift_invariance(self):
        params = make_params(channels=8, seed=9)
        hidden, fused = rand_inputs(5, 5, 3, seed=10)
        probs, _ = textcnn_forward(hidden, fused, params)
        params.out_b.data += 11.5  # same constant on both logits
        probs_shifted, _ = textcnn_forward(hidden, fused, params)
        np.testing.assert_allclose(probs.data, probs_shifted.data, atol=1e-12)

    def test_deterministic_without_dropout(self):
        params = make_params(channels=8, seed=11)
        hidden, fused = rand_inputs(4, 5, 3, seed=12)
        a, _ = textcnn_forward(hidden, fused, params)
        b, _ = textcnn_forward(hidden, fused, params)
        np.testing.assert_array_equal(a.data, b.data)

    def test_dropout_only_when_training(self):
        params = make_params(channels=8, seed=13)
        hidden, fused = rand_inputs(4, 5, 3, seed=14)
        base, _ = textcnn_forward(hidden, fused, params)
        dropped, _ = textcnn_forward(hidden, fused, params, dropout_rate=0.5,
                                     dropout_rng=np.random.default_rng(0))
        assert np.any(base.data != dropped.data)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(15)
        params = make_params(channels=6, n_filters=2, seed=16)
        hidden = ag.param(rng.uniform(-1, 1, (5, 4)))
        fused = ag.param(rng.uniform(-1, 1, 2))
        groups = {"hidden": hidden, "fused": fused}
        groups.update(params.parameters())

        def f():
            probs, _ = textcnn_forward(hidden, fused, params)
            return -ag.log(ag.matmul(probs, ag.constant([0.0, 1.0])))

        report = ag.finite_difference_check(f, groups, samples_per_group=5)
        assert max(report.values()) < 1e-4


class TestPredictLabel:
    def test_positive(self):
        assert predict_label(np.array([0.4, 0.6])) == 1

    def test_negative(self):
        assert predict_label(np.array([0.6, 0.4])) == 0

    def test_exact_tie_is_negative(self):
        assert predict_label(np.array([0.5, 0.5])) == 0

    def test_prediction_dataclass(self):
        pred = Prediction(probs=np.array([0.3, 0.7]), label=1,
                          logits=np.array([0.0, 0.85]))
        assert pred.label == predict_label(pred.probs)
