import numpy as np
import pytest

from convsum.autodiff import Tensor
from convsum.errors import ContractError, NonFiniteError
from convsum.optim import OptimizerState, adam_noam_step, noam_rate, zero_grads


class TestSchedule:
    def test_closed_form_values(self):
        # d=256, warmup=4000, step=4000 -> 256^-0.5 * 4000^-0.5
        assert abs(noam_rate(256, 4000, 4000) - 256 ** -0.5 * 4000 ** -0.5) < 1e-15
        assert abs(noam_rate(256, 4000, 4000) - 9.8821e-4) < 1e-7
        assert abs(noam_rate(512, 100, 1) - 512 ** -0.5 * 100 ** -1.5) < 1e-18
        assert abs(noam_rate(512, 100, 1000) - 512 ** -0.5 * 1000 ** -0.5) < 1e-15

    def test_peak_at_warmup(self):
        warmup = 50
        peak = noam_rate(64, warmup, warmup)
        assert all(noam_rate(64, warmup, s) <= peak for s in range(1, 10 * warmup))

    def test_step_must_be_positive(self):
        with pytest.raises(ContractError):
            noam_rate(64, 100, 0)


class TestAdam:
    def test_update_matches_hand_rolled_adam(self, rng):
        p = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        g = rng.normal(size=(3, 2))
        p.grad = g.copy()
        before = p.data.copy()
        state = OptimizerState(d_model=64, warmup=10, beta1=0.9, beta2=0.98, eps=1e-9)
        lr = adam_noam_step(state, {"p": p})

        m = 0.1 * g
        v = 0.02 * g * g
        expected = before - lr * (m / 0.1) / (np.sqrt(v / 0.02) + 1e-9)
        assert np.allclose(p.data, expected, atol=1e-15)
        assert state.step == 1
        assert abs(lr - noam_rate(64, 10, 1)) < 1e-18

    def test_zero_gradient_leaves_param_unchanged_on_first_step(self):
        p = Tensor(np.ones((2, 2)), requires_grad=True)
        p.grad = np.zeros((2, 2))
        state = OptimizerState(d_model=64, warmup=10)
        adam_noam_step(state, {"p": p})
        assert np.array_equal(p.data, np.ones((2, 2)))

    def test_missing_gradient_skipped(self):
        p = Tensor(np.ones(3), requires_grad=True)
        state = OptimizerState(d_model=64, warmup=10)
        adam_noam_step(state, {"p": p})
        assert np.array_equal(p.data, np.ones(3))
        assert "p" not in state.m

    def test_nonfinite_gradient_aborts_whole_update(self):
        a = Tensor(np.ones(2), requires_grad=True)
        b = Tensor(np.ones(2), requires_grad=True)
        a.grad = np.ones(2)
        b.grad = np.array([np.nan, 1.0])
        state = OptimizerState(d_model=64, warmup=10)
        with pytest.raises(NonFiniteError, match="b"):
            adam_noam_step(state, {"a": a, "b": b})
        assert np.array_equal(a.data, np.ones(2))  # nothing was touched
        assert state.step == 0

    def test_step_counter_strictly_increments(self, rng):
        p = Tensor(rng.normal(size=(2,)), requires_grad=True)
        state = OptimizerState(d_model=64, warmup=10)
        for expected in (1, 2, 3):
            p.grad = rng.normal(size=(2,))
            adam_noam_step(state, {"p": p})
            assert state.step == expected

    def test_zero_grads(self):
        p = Tensor(np.ones(2), requires_grad=True)
        p.grad = np.ones(2)
        zero_grads({"p": p})
        assert p.grad is None
