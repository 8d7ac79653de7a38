"""Training driver: config parsing, batching, step invariants, resume."""

import numpy as np
import pytest
from PIL import Image

from aesust.autodiff import Tensor
from aesust.errors import ConfigError, NumericError, ShapeError
from aesust.losses import STAGE1_TERMS, STAGE2_TERMS
from aesust.models import StyleTransferModels
from aesust.nn import Adam
from aesust.persist import load_archive_file
from aesust.trainer import (
    Batch,
    TrainConfig,
    TrainState,
    _load_resized,
    prepare_batch,
    train,
    train_step,
)

from conftest import synth_image


def _desk_cfg(**overrides):
    base = dict(stage=1, batch_size=2, iterations=4, resize=72, crop=64,
                width_multiplier=0.125, seed=3, checkpoint_every=2)
    base.update(overrides)
    return TrainConfig(**base)


def _state(cfg, seed=None) -> TrainState:
    models = StyleTransferModels(cfg.width_multiplier,
                                 seed=cfg.seed if seed is None else seed,
                                 stage=cfg.stage)
    return TrainState(models,
                      Adam(models.generator_parameters(), cfg.lr, cfg.beta1, cfg.beta2),
                      Adam(models.discriminator_parameters(), cfg.lr, cfg.beta1, cfg.beta2))


def _random_batch(seed=0, size=64) -> Batch:
    rng = np.random.default_rng(seed)
    return Batch(rng.random((2, 3, size, size), dtype=np.float32),
                 rng.random((2, 3, size, size), dtype=np.float32))


def _param_bytes(params: dict) -> dict[str, bytes]:
    return {k: p.data.tobytes() for k, p in params.items()}


class TestTrainConfig:
    def test_full_scale_defaults(self):
        cfg = TrainConfig()
        assert (cfg.lr, cfg.batch_size, cfg.iterations) == (0.0001, 4, 80000)
        assert (cfg.resize, cfg.crop) == (512, 256)
        assert cfg.weights().lambda9 == 500.0

    def test_from_mapping_coerces_types(self):
        cfg = TrainConfig.from_mapping({
            "stage": "2", "lr": "0.001", "adv": "false", "crop": "64",
            "resize": "72", "width_multiplier": "0.125",
        })
        assert cfg.stage == 2 and cfg.lr == 0.001 and cfg.adv is False

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="learning_rate"):
            TrainConfig.from_mapping({"learning_rate": "0.1"})

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig.from_mapping({"adv": "maybe"})
        with pytest.raises(ConfigError):
            TrainConfig(stage=3)
        with pytest.raises(ConfigError):
            TrainConfig(crop=256, resize=128)

    def test_shipped_desk_profile_parses(self):
        cfg = TrainConfig.from_file("configs/desk.cfg")
        assert cfg.width_multiplier == 0.125
        assert cfg.crop == 64 and cfg.batch_size == 2 and cfg.iterations == 500


class TestPrepareBatch:
    def test_resize_geometry_600_by_900(self, tmp_path):
        arr = (synth_image(1, (600, 900)) * 255).astype(np.uint8).transpose(1, 2, 0)
        path = tmp_path / "wide.png"
        Image.fromarray(arr).save(path)
        resized = _load_resized(str(path), 512, 256)
        assert resized.shape == (3, 512, 768)

    def test_square_source_resize_is_identity(self, tmp_path):
        arr = (synth_image(2, (512, 512)) * 255).astype(np.uint8).transpose(1, 2, 0)
        path = tmp_path / "square.png"
        Image.fromarray(arr).save(path)
        resized = _load_resized(str(path), 512, 256)
        assert resized.shape == (3, 512, 512)
        np.testing.assert_allclose(resized, arr.transpose(2, 0, 1) / 255.0, atol=1e-6)

    def test_small_source_upscaled_to_crop(self, tmp_path):
        arr = (synth_image(3, (40, 200)) * 255).astype(np.uint8).transpose(1, 2, 0)
        path = tmp_path / "thin.png"
        Image.fromarray(arr).save(path)
        resized = _load_resized(str(path), 32, 64)
        assert min(resized.shape[1:]) >= 64

    def test_fixed_seed_reproduces_bytes(self, corpus_dirs):
        content_dir, style_dir = corpus_dirs
        cfg = _desk_cfg()
        a = prepare_batch(content_dir, style_dir, cfg, np.random.default_rng([7, 1]))
        b = prepare_batch(content_dir, style_dir, cfg, np.random.default_rng([7, 1]))
        assert a.content.tobytes() == b.content.tobytes()
        assert a.style.tobytes() == b.style.tobytes()
        assert a.content.shape == (2, 3, 64, 64)
        assert a.content.min() >= 0.0 and a.content.max() <= 1.0

    def test_empty_dir_rejected(self, tmp_path, corpus_dirs):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(FileNotFoundError):
            prepare_batch(str(empty), corpus_dirs[1], _desk_cfg(), np.random.default_rng(0))

    def test_undecodable_skipped_with_warning(self, tmp_path, caplog):
        good = tmp_path / "ok"
        good.mkdir()
        arr = (synth_image(4, (96, 96)) * 255).astype(np.uint8).transpose(1, 2, 0)
        Image.fromarray(arr).save(good / "good.png")
        (good / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        with caplog.at_level("WARNING"):
            batch = prepare_batch(str(good), str(good), _desk_cfg(), np.random.default_rng(5))
        assert batch.content.shape == (2, 3, 64, 64)

    def test_all_undecodable_rejected(self, tmp_path):
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "a.png").write_bytes(b"\x89PNG\r\n\x1a\nnope")
        with pytest.raises(FileNotFoundError, match="decodable"):
            prepare_batch(str(bad), str(bad), _desk_cfg(), np.random.default_rng(0))


class TestGeneratorForward:
    def test_stage1_aesthetic_input_is_the_style_taps(self):
        models = StyleTransferModels(0.125, seed=0, stage=1)
        style = Tensor(np.random.default_rng(1).random((1, 3, 64, 64), dtype=np.float32))
        taps = models.encoder.encode(style)
        aesthetic = models.aesthetic_by_level(style, taps_style=taps)
        for level in ("relu4_1", "relu5_1"):
            assert aesthetic[level] is taps[level]

    def test_stage2_aesthetic_input_from_critic(self):
        models = StyleTransferModels(0.125, seed=0, stage=2)
        style = Tensor(np.random.default_rng(2).random((1, 3, 64, 64), dtype=np.float32))
        aesthetic = models.aesthetic_by_level(style)
        features = models.discriminator.aesthetic_features(style).data
        assert aesthetic["relu4_1"].data.shape == (1, 64, 8, 8)
        np.testing.assert_array_equal(aesthetic["relu5_1"].data, features)
        np.testing.assert_array_equal(
            aesthetic["relu4_1"].data,
            features.repeat(2, axis=2).repeat(2, axis=3),
        )

    def test_output_shape_matches_content(self):
        models = StyleTransferModels(0.125, seed=0, stage=1)
        rng = np.random.default_rng(3)
        content = Tensor(rng.random((1, 3, 96, 64), dtype=np.float32))
        style = Tensor(rng.random((1, 3, 64, 64), dtype=np.float32))
        assert models.generator_forward(content, style).data.shape == content.data.shape


class TestTrainStep:
    def test_stage1_touches_exactly_stage1_terms(self):
        cfg = _desk_cfg(stage=1)
        state = _state(cfg)
        state.step = 1
        report = train_step(_random_batch(), cfg, state)
        assert set(report.terms) == set(STAGE1_TERMS)
        assert report.total == pytest.approx(
            sum({"adv": cfg.lambda1, "content": cfg.lambda2, "style": cfg.lambda3,
                 "identity": cfg.lambda4}[k] * v for k, v in report.terms.items()),
            rel=1e-5)

    def test_stage2_touches_exactly_stage2_terms(self):
        cfg = _desk_cfg(stage=2)
        state = _state(cfg)
        state.step = 1
        report = train_step(_random_batch(), cfg, state)
        assert set(report.terms) == set(STAGE2_TERMS)

    def test_adv_ablation_freezes_critic(self):
        cfg = _desk_cfg(adv=False)
        state = _state(cfg)
        before = _param_bytes(state.models.discriminator_parameters())
        state.step = 1
        report = train_step(_random_batch(), cfg, state)
        after = _param_bytes(state.models.discriminator_parameters())
        assert before == after
        assert report.terms["adv"] == 0.0

    def test_identity_ablation_zeroes_its_term(self):
        cfg = _desk_cfg(stage=1, identity=False)
        state = _state(cfg)
        state.step = 1
        report = train_step(_random_batch(), cfg, state)
        assert report.terms["identity"] == 0.0
        assert "identity_mse" not in report.extra

    def test_regularizer_ablations_zero_their_terms(self):
        for flag in ("ar1", "ar2"):
            cfg = _desk_cfg(stage=2, **{flag: False})
            state = _state(cfg)
            state.step = 1
            report = train_step(_random_batch(), cfg, state)
            assert report.terms[flag] == 0.0
            other = "ar2" if flag == "ar1" else "ar1"
            assert report.terms[other] > 0.0

    def test_critic_fixed_during_generator_update(self):
        """Stage 2 routes gradients through the critic, but only the adversarial
        step may move its weights."""
        cfg = _desk_cfg(stage=2, adv=False)
        state = _state(cfg)
        before = _param_bytes(state.models.discriminator_parameters())
        state.step = 1
        train_step(_random_batch(), cfg, state)
        assert _param_bytes(state.models.discriminator_parameters()) == before

    def test_encoder_frozen_across_steps(self):
        cfg = _desk_cfg()
        state = _state(cfg)
        before = _param_bytes(state.models.encoder.parameters())
        for step in range(1, 4):
            state.step = step
            train_step(_random_batch(step), cfg, state)
        assert _param_bytes(state.models.encoder.parameters()) == before

    def test_generator_actually_updates(self):
        cfg = _desk_cfg()
        state = _state(cfg)
        before = _param_bytes(state.models.generator_parameters())
        state.step = 1
        train_step(_random_batch(), cfg, state)
        assert _param_bytes(state.models.generator_parameters()) != before

    def test_first_step_bit_reproducible(self):
        cfg = _desk_cfg()
        reports = []
        for _ in range(2):
            state = _state(cfg)
            state.step = 1
            reports.append(train_step(_random_batch(), cfg, state))
        assert reports[0].terms == reports[1].terms
        assert reports[0].total == reports[1].total

    def test_nonfinite_loss_aborts_with_term_name(self):
        cfg = _desk_cfg()
        state = _state(cfg)
        weight = next(iter(state.models.discriminator_parameters().values()))
        weight.data[...] = np.nan
        state.step = 1
        with pytest.raises(NumericError, match="disc_adv"):
            train_step(_random_batch(), cfg, state)


class TestTrainLoop:
    def test_checkpoints_metrics_and_resume_equivalence(self, corpus_dirs, tmp_path):
        content_dir, style_dir = corpus_dirs
        cfg = _desk_cfg(iterations=4, checkpoint_every=2)
        straight = tmp_path / "straight.aesu"
        train(cfg, content_dir, style_dir, str(straight),
              metrics_path=str(tmp_path / "straight.log"))

        # interrupted at step 2, then resumed to step 4 with optimizer state
        half_cfg = _desk_cfg(iterations=2, checkpoint_every=2)
        partial = tmp_path / "partial.aesu"
        train(half_cfg, content_dir, style_dir, str(partial))
        resumed = tmp_path / "resumed.aesu"
        train(cfg, content_dir, style_dir, str(resumed), resume=str(partial))

        full = load_archive_file(str(straight))
        redo = load_archive_file(str(resumed))
        model_keys = [k for k in full if not k.startswith(("meta.", "optim."))]
        assert model_keys
        for key in model_keys:
            assert full[key].tobytes() == redo[key].tobytes(), key

        lines = (tmp_path / "straight.log").read_text().strip().splitlines()
        rows = [line.split("\t") for line in lines]
        assert all(len(r) == 3 for r in rows)
        assert {r[1] for r in rows} >= {"total", "content", "style"}

    def test_stage2_requires_checkpoint(self, corpus_dirs, tmp_path):
        cfg = _desk_cfg(stage=2, iterations=1)
        with pytest.raises(ConfigError, match="stage-1 checkpoint"):
            train(cfg, corpus_dirs[0], corpus_dirs[1], str(tmp_path / "x.aesu"))

    def test_stage2_loads_every_stage1_tensor(self, corpus_dirs, tmp_path):
        content_dir, style_dir = corpus_dirs
        stage1 = tmp_path / "s1.aesu"
        train(_desk_cfg(iterations=1, checkpoint_every=1), content_dir, style_dir, str(stage1))
        entries = load_archive_file(str(stage1))
        models = StyleTransferModels.from_entries(entries, stage=2)
        for name, param in models.all_parameters().items():
            assert param.data.tobytes() == entries[name].astype(np.float32).tobytes(), name

    def test_mismatched_width_checkpoint_rejected(self, corpus_dirs, tmp_path):
        content_dir, style_dir = corpus_dirs
        small = tmp_path / "small.aesu"
        train(_desk_cfg(iterations=1, checkpoint_every=1, width_multiplier=1 / 16),
              content_dir, style_dir, str(small))
        entries = load_archive_file(str(small))
        entries["meta.width_multiplier"] = np.array([0.125])
        with pytest.raises(ShapeError):
            StyleTransferModels.from_entries(entries)
