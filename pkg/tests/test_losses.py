"""Loss catalog: closed-form values, invariances, stage objectives."""

import math

import numpy as np
import pytest

from aesust.aessa import channel_norm
from aesust.autodiff import Tensor
from aesust.errors import ShapeError
from aesust.losses import (
    CONTENT_LAYERS,
    LossWeights,
    STYLE_LAYERS,
    adv_loss_discriminator,
    adv_loss_generator,
    ar1_loss,
    ar2_loss,
    content_loss,
    identity_loss,
    l2_norm,
    stage1_generator_objective,
    stage2_generator_objective,
    style_loss,
)


def _pyramid(rng, channels=2, size=4):
    return {k: Tensor(rng.standard_normal((1, channels, size, size)))
            for k in STYLE_LAYERS}


class TestContentLoss:
    def test_identical_pyramids_zero(self, rng):
        pyr = _pyramid(rng)
        assert float(content_loss(pyr, pyr).data) == pytest.approx(0.0, abs=1e-9)

    def test_norm_removes_per_channel_affine(self, rng):
        """Scaling and shifting a channel does not change the loss."""
        pyr_a = _pyramid(rng)
        pyr_b = {k: Tensor(3.7 * t.data + 1.2) for k, t in pyr_a.items()}
        assert float(content_loss(pyr_a, pyr_b).data) == pytest.approx(0.0, abs=1e-4)

    def test_binary_channel_normalizes_like_wider_one(self):
        """Features [0,2] and [0,4] normalize to the same channel."""
        a = {k: Tensor(np.array([0.0, 2.0]).reshape(1, 1, 1, 2)) for k in CONTENT_LAYERS}
        b = {k: Tensor(np.array([0.0, 4.0]).reshape(1, 1, 1, 2)) for k in CONTENT_LAYERS}
        assert float(content_loss(a, b).data) == pytest.approx(0.0, abs=1e-4)

    def test_matches_manual_recomputation(self, rng):
        pyr_a, pyr_b = _pyramid(rng), _pyramid(rng)
        got = float(content_loss(pyr_a, pyr_b).data)
        want = 0.0
        for layer in CONTENT_LAYERS:
            diff = channel_norm(pyr_a[layer]).data - channel_norm(pyr_b[layer]).data
            want += math.sqrt(float((diff**2).sum()))
        assert got == pytest.approx(want, rel=1e-9)

    def test_uses_only_the_two_deep_layers(self, rng):
        pyr_a, pyr_b = _pyramid(rng), _pyramid(rng)
        base = float(content_loss(pyr_a, pyr_b).data)
        pyr_b_shallow = dict(pyr_b)
        pyr_b_shallow["relu1_1"] = Tensor(rng.standard_normal((1, 2, 4, 4)))
        assert float(content_loss(pyr_a, pyr_b_shallow).data) == pytest.approx(base)

    def test_shape_mismatch_rejected(self, rng):
        pyr_a = _pyramid(rng)
        pyr_b = {k: Tensor(rng.standard_normal((1, 2, 3, 3))) for k in STYLE_LAYERS}
        with pytest.raises(ShapeError):
            content_loss(pyr_a, pyr_b)


class TestStyleLoss:
    def test_identical_pyramids_zero(self, rng):
        pyr = _pyramid(rng)
        assert float(style_loss(pyr, pyr).data) == pytest.approx(0.0, abs=1e-9)

    def test_unit_mean_shift_single_layer(self):
        """One layer differing by a pure mean shift of 1 contributes exactly 1."""
        base = np.zeros((1, 1, 2, 2))
        pyr_a = {k: Tensor(base) for k in STYLE_LAYERS}
        shifted = dict(pyr_a)
        shifted["relu3_1"] = Tensor(base + 1.0)
        assert float(style_loss(shifted, pyr_a).data) == pytest.approx(1.0, abs=1e-6)

    def test_spatial_permutation_invariance(self, rng):
        pyr_a, pyr_b = _pyramid(rng), _pyramid(rng)
        base = float(style_loss(pyr_a, pyr_b).data)
        perm = rng.permutation(16)
        permuted = {
            k: Tensor(t.data.reshape(1, 2, 16)[:, :, perm].reshape(1, 2, 4, 4))
            for k, t in pyr_a.items()
        }
        assert float(style_loss(permuted, pyr_b).data) == pytest.approx(base, rel=1e-6)


class TestIdentityLoss:
    def test_fixed_point_zero(self, rng):
        a = Tensor(rng.random((1, 3, 4, 4)))
        b = Tensor(rng.random((1, 3, 4, 4)))
        assert float(identity_loss(a, a, b, b).data) == 0.0

    def test_unit_norm_perturbation(self, rng):
        a = Tensor(rng.random((1, 3, 4, 4)))
        delta = rng.standard_normal((1, 3, 4, 4))
        delta /= np.linalg.norm(delta)
        b = Tensor(a.data + delta)
        assert float(identity_loss(b, a, a, a).data) == pytest.approx(1.0, rel=1e-6)

    def test_symmetric_in_pairs(self, rng):
        a, b = Tensor(rng.random((1, 3, 4, 4))), Tensor(rng.random((1, 3, 4, 4)))
        c, d = Tensor(rng.random((1, 3, 4, 4))), Tensor(rng.random((1, 3, 4, 4)))
        lhs = float(identity_loss(a, b, c, d).data)
        rhs = float(identity_loss(c, d, a, b).data)
        assert lhs == pytest.approx(rhs, rel=1e-9)


class TestAdversarialLosses:
    def _logits(self, value, sizes=(4, 2, 1)):
        return [Tensor(np.full((1, 1, s, s), float(value))) for s in sizes]

    def test_perfect_critic_limit(self):
        loss = adv_loss_discriminator(self._logits(30.0), self._logits(-30.0))
        assert float(loss.data) == pytest.approx(0.0, abs=1e-6)

    def test_zero_logits_two_log_two(self):
        loss = adv_loss_discriminator(self._logits(0.0), self._logits(0.0))
        assert float(loss.data) == pytest.approx(2 * math.log(2), rel=1e-9)

    def test_generator_zero_logit_log_two(self):
        loss = adv_loss_generator(self._logits(0.0))
        assert float(loss.data) == pytest.approx(math.log(2), rel=1e-9)

    def test_log_clamp_keeps_losses_finite(self):
        loss = adv_loss_discriminator(self._logits(-1000.0), self._logits(1000.0))
        assert np.isfinite(float(loss.data))


class TestAestheticRegularizers:
    def test_ar1_fixed_point_and_unit(self, rng):
        img = Tensor(rng.random((1, 3, 4, 4)))
        assert float(ar1_loss(img, img).data) == 0.0
        delta = rng.standard_normal((1, 3, 4, 4))
        delta /= np.linalg.norm(delta)
        assert float(ar1_loss(Tensor(img.data + delta), img).data) == pytest.approx(1.0, rel=1e-6)
        assert float(ar1_loss(Tensor(rng.random((1, 3, 4, 4))), img).data) >= 0.0

    def test_ar2_identical_features_zero(self, rng):
        f = Tensor(rng.standard_normal((1, 4, 3, 3)))
        assert float(ar2_loss(f, f).data) == pytest.approx(0.0, abs=1e-9)

    def test_ar2_spatial_permutation_invariance(self, rng):
        a = Tensor(rng.standard_normal((1, 4, 3, 3)))
        b = Tensor(rng.standard_normal((1, 4, 3, 3)))
        base = float(ar2_loss(a, b).data)
        perm = rng.permutation(9)
        shuffled = Tensor(a.data.reshape(1, 4, 9)[:, :, perm].reshape(1, 4, 3, 3))
        assert float(ar2_loss(shuffled, b).data) == pytest.approx(base, rel=1e-6)

    def test_ar2_pure_mean_shift(self):
        a = Tensor(np.zeros((1, 1, 2, 2)))
        b = Tensor(np.full((1, 1, 2, 2), 2.0))
        assert float(ar2_loss(a, b).data) == pytest.approx(2.0, abs=1e-6)


class TestStageObjectives:
    def test_default_weights(self):
        w = LossWeights()
        assert (w.lambda1, w.lambda2, w.lambda3, w.lambda4) == (5.0, 1.0, 1.0, 50.0)
        assert (w.lambda5, w.lambda6, w.lambda7, w.lambda8, w.lambda9) == (5.0, 1.0, 1.0, 0.5, 500.0)

    def test_unit_terms_totals(self):
        w = LossWeights()
        stage1 = stage1_generator_objective(
            {"adv": 1.0, "content": 1.0, "style": 1.0, "identity": 1.0}, w)
        assert stage1 == 57.0
        stage2 = stage2_generator_objective(
            {"adv": 1.0, "content": 1.0, "style": 1.0, "ar1": 1.0, "ar2": 1.0}, w)
        assert stage2 == 507.5

    def test_zero_weights_zero_total(self):
        w = LossWeights(0, 0, 0, 0, 0, 0, 0, 0, 0)
        total = stage1_generator_objective(
            {"adv": 3.0, "content": 5.0, "style": 7.0, "identity": 9.0}, w)
        assert total == 0.0

    def test_linearity_in_each_term(self):
        w = LossWeights()
        base = {"adv": 1.0, "content": 2.0, "style": 3.0, "identity": 4.0}
        bumped = dict(base, style=4.0)
        delta = stage1_generator_objective(bumped, w) - stage1_generator_objective(base, w)
        assert delta == pytest.approx(w.lambda3 * 1.0)

    def test_missing_term_rejected(self):
        w = LossWeights()
        with pytest.raises(ValueError, match="identity"):
            stage1_generator_objective({"adv": 1.0, "content": 1.0, "style": 1.0}, w)
        with pytest.raises(ValueError, match="ar2"):
            stage2_generator_objective(
                {"adv": 1.0, "content": 1.0, "style": 1.0, "ar1": 1.0}, w)

    def test_stage1_ignores_ar_terms(self):
        w = LossWeights()
        base = {"adv": 1.0, "content": 1.0, "style": 1.0, "identity": 1.0}
        with_extras = dict(base, ar1=99.0, ar2=99.0)
        assert stage1_generator_objective(with_extras, w) == stage1_generator_objective(base, w)

    def test_stage2_ignores_identity(self):
        w = LossWeights()
        base = {"adv": 1.0, "content": 1.0, "style": 1.0, "ar1": 1.0, "ar2": 1.0}
        with_identity = dict(base, identity=99.0)
        assert stage2_generator_objective(with_identity, w) == stage2_generator_objective(base, w)


def test_l2_norm_whole_tensor_convention(rng):
    x = rng.standard_normal((2, 3, 4))
    assert float(l2_norm(Tensor(x)).data) == pytest.approx(np.linalg.norm(x.ravel()), rel=1e-9)
