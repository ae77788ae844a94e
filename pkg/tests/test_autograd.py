"""Tensor core: forward values, backward rules, and the gradient oracle.

Every differentiable primitive is fuzzed against central finite
differences, which stay the independent reference throughout the suite.
"""

import numpy as np
import pytest

from faet import autograd as ag
from faet.autograd import ShapeError, Value
from faet.optim import Adam


def central_diff(f, x, i, h=1e-6):
    """Scalar central difference of f at coordinate i of flat array x."""
    flat = x.reshape(-1)
    orig = flat[i]
    flat[i] = orig + h
    fp = f()
    flat[i] = orig - h
    fm = f()
    flat[i] = orig
    return (fp - fm) / (2.0 * h)


class TestForwardValues:
    def test_softmax_equal_logits(self):
        out = ag.softmax(Value([0.0, 0.0]))
        np.testing.assert_allclose(out.data, [0.5, 0.5], atol=1e-15)

    def test_sigmoid_tanh_at_zero(self):
        assert ag.sigmoid(Value(0.0)).item() == 0.5
        assert ag.tanh(Value(0.0)).item() == 0.0

    def test_matmul_identity(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 5))
        out = ag.matmul(Value(np.eye(3)), Value(a))
        np.testing.assert_array_equal(out.data, a)

    def test_log_clamped_at_floor(self):
        out = ag.log(Value([0.0, 1.0]))
        np.testing.assert_allclose(out.data[0], np.log(1e-12))
        assert out.data[1] == 0.0

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-3, 3, size=(50, 7))
        p = ag.softmax(Value(z), axis=1).data
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(p >= 0)

    def test_softmax_shift_invariance(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(-3, 3, size=(4, 6))
        base = ag.softmax(Value(z), axis=1).data
        shifted = ag.softmax(Value(z + 17.3), axis=1).data
        np.testing.assert_allclose(base, shifted, atol=1e-12)

    def test_max_records_first_tie(self):
        x = ag.param([1.0, 3.0, 3.0, 0.0])
        out = ag.max_along(x, axis=0)
        out.backward()
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0, 0.0])

    def test_dropout_seeded_mask(self):
        x = Value(np.ones(1000))
        out1 = ag.dropout(x, 0.2, np.random.default_rng(7))
        out2 = ag.dropout(x, 0.2, np.random.default_rng(7))
        np.testing.assert_array_equal(out1.data, out2.data)
        kept = out1.data != 0.0
        np.testing.assert_allclose(out1.data[kept], 1.0 / 0.8)
        assert 0.7 < kept.mean() < 0.9

    def test_dropout_rate_zero_is_identity(self):
        x = Value(np.arange(4.0))
        assert ag.dropout(x, 0.0, np.random.default_rng(0)) is x


class TestShapeErrors:
    def test_matmul_mismatch_names_op_and_shapes(self):
        with pytest.raises(ShapeError, match=r"matmul.*\(2, 3\).*\(4,\)"):
            ag.matmul(Value(np.zeros((2, 3))), Value(np.zeros(4)))

    def test_add_mismatch(self):
        with pytest.raises(ShapeError, match="add"):
            ag.add(Value(np.zeros(3)), Value(np.zeros(4)))

    def test_concat_mismatch(self):
        with pytest.raises(ShapeError, match="concat"):
            ag.concat([Value(np.zeros((2, 3))), Value(np.zeros((2, 4)))], axis=0)

    def test_softmax_empty_axis(self):
        with pytest.raises(ShapeError, match="empty"):
            ag.softmax(Value(np.zeros((3, 0))), axis=1)

    def test_nonscalar_loss(self):
        x = ag.param(np.zeros(3))
        with pytest.raises(ShapeError, match="scalar"):
            (x * 2.0).backward()


class TestBackwardAnalytic:
    def test_square_at_three(self):
        x = ag.param(3.0)
        (x * x).backward()
        np.testing.assert_allclose(x.grad, 6.0)

    def test_sigmoid_grad_at_zero(self):
        x = ag.param(0.0)
        ag.sigmoid(x).backward()
        np.testing.assert_allclose(x.grad, 0.25)

    def test_cross_entropy_softmax_grad_is_p_minus_y(self):
        # d(-log softmax(z)[y])/dz == p - onehot(y), checked both ways
        rng = np.random.default_rng(3)
        z = ag.param(rng.uniform(-2, 2, size=4))
        y = 2
        p = ag.softmax(z)
        loss = -ag.log(ag.take_rows(ag.reshape(p, (4, 1)), [y]))
        ag.sum_along(loss).backward()
        expected = p.data - np.eye(4)[y]
        np.testing.assert_allclose(z.grad, expected, atol=1e-12)

        def f():
            pp = ag.softmax(z)
            return -float(np.log(pp.data[y]))
        for i in range(4):
            num = central_diff(f, z.data, i)
            np.testing.assert_allclose(z.grad[i], num, atol=1e-6)

    def test_unused_leaf_gets_exact_zero(self):
        x = ag.param([1.0, 2.0])
        unused = ag.param([5.0])
        ag.sum_along(x * x).backward()
        np.testing.assert_array_equal(unused.grad, [0.0])

    def test_backward_twice_accumulates_on_leaves(self):
        x = ag.param(3.0)
        loss = x * x
        loss.backward()
        loss.backward()
        np.testing.assert_allclose(x.grad, 12.0)

    def test_shared_subexpression_accumulates(self):
        x = ag.param(2.0)
        y = x * x  # used twice below
        (y + y).backward()
        np.testing.assert_allclose(x.grad, 8.0)

    def test_replay_is_bitwise_identical(self):
        def run():
            rng = np.random.default_rng(11)
            a = ag.param(rng.normal(size=(4, 3)))
            b = ag.param(rng.normal(size=(3, 2)))
            h = ag.tanh(ag.matmul(a, b))
            loss = ag.sum_along(ag.softmax(h, axis=1) * h)
            loss.backward()
            return loss.item(), a.grad.copy(), b.grad.copy()
        l1, ga1, gb1 = run()
        l2, ga2, gb2 = run()
        assert l1 == l2
        np.testing.assert_array_equal(ga1, ga2)
        np.testing.assert_array_equal(gb1, gb2)

    def test_no_grad_builds_no_graph(self):
        x = ag.param([1.0, 2.0])
        with ag.no_grad():
            out = ag.sum_along(x * x)
        assert not out.requires_grad
        assert out._prev == ()


def _fd_fuzz(make_inputs, forward, n_trials, seed, tol=1e-4, h=1e-6):
    """Fuzz one primitive: analytic grad vs central differences."""
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        arrays = make_inputs(rng)
        params = [ag.param(a) for a in arrays]
        loss = forward(*params)
        loss.backward()
        for p in params:
            flat = p.data.reshape(-1)
            for i in rng.choice(flat.size, size=min(3, flat.size), replace=False):
                def f(p=p):
                    with ag.no_grad():
                        fresh = forward(*params)
                    return float(fresh.data)
                num = central_diff(f, p.data, i, h=h)
                ana = p.grad.reshape(-1)[i]
                err = abs(ana - num) / max(1.0, abs(ana), abs(num))
                assert err < tol, f"rel err {err:.2e} at coord {i}"


class TestPrimitiveGradientFuzz:
    """Each primitive vs the finite-difference oracle, inputs in [-3, 3].

    Trial counts sum past 1000 fuzzed inputs across the primitive set.
    """

    def test_add(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 4)), r.uniform(-3, 3, (3, 4))),
                 lambda a, b: ag.sum_along(ag.tanh(a + b)), 90, seed=100)

    def test_add_broadcast(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 4)), r.uniform(-3, 3, (4,))),
                 lambda a, b: ag.sum_along(ag.tanh(a + b)), 80, seed=101)

    def test_mul(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (2, 5)), r.uniform(-3, 3, (2, 5))),
                 lambda a, b: ag.sum_along(ag.sigmoid(a * b)), 90, seed=102)

    def test_mul_broadcast_column(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (4, 1)), r.uniform(-3, 3, (4, 3))),
                 lambda a, b: ag.sum_along(ag.tanh(a * b)), 80, seed=103)

    def test_matmul_2d_2d(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 4)), r.uniform(-3, 3, (4, 2))),
                 lambda a, b: ag.sum_along(ag.tanh(ag.matmul(a, b))), 80, seed=104)

    def test_matmul_1d_2d(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (4,)), r.uniform(-3, 3, (4, 3))),
                 lambda a, b: ag.sum_along(ag.tanh(ag.matmul(a, b))), 80, seed=105)

    def test_matmul_2d_1d(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 4)), r.uniform(-3, 3, (4,))),
                 lambda a, b: ag.sum_along(ag.tanh(ag.matmul(a, b))), 80, seed=106)

    def test_concat(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (2, 3)), r.uniform(-3, 3, (4, 3))),
                 lambda a, b: ag.sum_along(ag.tanh(ag.concat([a, b], axis=0))),
                 80, seed=107)

    def test_sigmoid(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (7,)),),
                 lambda a: ag.sum_along(ag.sigmoid(a)), 80, seed=108)

    def test_tanh(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (7,)),),
                 lambda a: ag.sum_along(ag.tanh(a)), 80, seed=109)

    def test_exp(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (6,)),),
                 lambda a: ag.sum_along(ag.exp(a)), 80, seed=110)

    def test_log_positive_domain(self):
        _fd_fuzz(lambda r: (r.uniform(0.05, 3, (6,)),),
                 lambda a: ag.sum_along(ag.log(a)), 80, seed=111)

    def test_relu_away_from_kink(self):
        def mk(r):
            a = r.uniform(0.05, 3, (8,)) * r.choice([-1.0, 1.0], 8)
            return (a,)
        _fd_fuzz(mk, lambda a: ag.sum_along(ag.relu(a) * a), 80, seed=112)

    def test_softmax(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 5)),),
                 lambda a: ag.sum_along(ag.softmax(a, axis=1)
                                        * ag.constant(np.arange(5.0))),
                 80, seed=113)

    def test_max_along_distinct_entries(self):
        def mk(r):
            a = r.uniform(-3, 3, (4, 5))
            return (a + np.arange(20).reshape(4, 5) * 1e-3,)  # break near-ties
        _fd_fuzz(mk, lambda a: ag.sum_along(ag.max_along(a, axis=1)
                                            * ag.constant([1.0, -2.0, 0.5, 1.5])),
                 60, seed=114)

    def test_mean_along(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (3, 4)),),
                 lambda a: ag.sum_along(ag.tanh(ag.mean_along(a, axis=0))),
                 80, seed=115)

    def test_conv1d(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (6, 3)), r.uniform(-1, 1, (2, 9)),
                            r.uniform(-1, 1, (2,))),
                 lambda x, w, b: ag.sum_along(ag.tanh(ag.conv1d(x, w, b, width=3))),
                 50, seed=116)

    def test_take_rows_with_duplicates(self):
        ids = np.array([0, 2, 2, 1])
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (4, 3)),),
                 lambda t: ag.sum_along(ag.tanh(ag.take_rows(t, ids))),
                 60, seed=117)

    def test_narrow(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (6, 3)),),
                 lambda x: ag.sum_along(ag.tanh(ag.narrow(x, 0, 1, 3))),
                 60, seed=118)

    def test_reshape_broadcast(self):
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (4,)),),
                 lambda x: ag.sum_along(
                     ag.tanh(ag.broadcast_to(ag.reshape(x, (4, 1)), (4, 3)))),
                 60, seed=119)

    def test_dropout_fixed_mask(self):
        def fwd(x):
            return ag.sum_along(ag.tanh(ag.dropout(x, 0.3, np.random.default_rng(5))))
        _fd_fuzz(lambda r: (r.uniform(-3, 3, (5, 2)),), fwd, 40, seed=120)


class TestFiniteDifferenceHarness:
    def test_square_relative_error_tiny(self):
        x = ag.param(3.0)
        report = ag.finite_difference_check(lambda: x * x, {"x": x})
        assert report["x"] < 1e-8

    def test_covers_every_group(self):
        a = ag.param(np.full((5, 5), 0.3))
        b = ag.param(np.full(3, -0.2))
        report = ag.finite_difference_check(
            lambda: ag.sum_along(ag.tanh(a)) + ag.sum_along(ag.sigmoid(b)),
            {"a": a, "b": b}, samples_per_group=8)
        assert set(report) == {"a", "b"}
        assert all(err < 1e-6 for err in report.values())


class TestAdam:
    def test_first_step_delta_is_minus_lr(self):
        p = ag.param(np.zeros(4))
        p.grad[...] = 1.0
        opt = Adam({"p": p}, lr=5e-4)
        opt.step()
        np.testing.assert_allclose(p.data, -5e-4, rtol=1e-6)
        assert opt.step_count == 1

    def test_zero_gradient_leaves_params_unchanged(self):
        p = ag.param([1.0, -2.0, 3.0])
        opt = Adam({"p": p}, lr=0.1)
        for _ in range(5):
            opt.step()
        np.testing.assert_array_equal(p.data, [1.0, -2.0, 3.0])

    def test_identical_grads_give_identical_deltas(self):
        rng = np.random.default_rng(4)
        g = rng.normal(size=3)
        a = ag.param(np.zeros(3))
        b = ag.param(np.zeros(3))
        opt = Adam({"a": a, "b": b}, lr=1e-2)
        for _ in range(7):
            a.grad[...] = g
            b.grad[...] = g
            opt.step()
        np.testing.assert_array_equal(a.data, b.data)

    def test_step_counter_strictly_increments(self):
        p = ag.param(0.0)
        p.grad[...] = 0.5
        opt = Adam({"p": p})
        counts = []
        for _ in range(3):
            opt.step()
            counts.append(opt.step_count)
        assert counts == [1, 2, 3]

    def test_zero_grad_resets(self):
        p = ag.param([1.0])
        p.grad[...] = 9.0
        Adam({"p": p}).zero_grad()
        np.testing.assert_array_equal(p.grad, [0.0])
