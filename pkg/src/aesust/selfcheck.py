"""Invariant and gradient self-checks runnable from the command line.

Every check builds its own desk-scale models, returns (passed, detail),
and is independent of training artifacts. ``run_selfcheck`` executes a
selection and reports one row per check; the CLI turns the results into a
table and an exit code.

The attention oracle here recomputes the module with explicit Python
loops and scalar math; it shares no code with the vectorized path it
verifies.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from . import aessa as aessa_mod
from .aessa import (
    AesSAParams,
    TwoLevelAesSA,
    aesthetic_attention,
    aesthetic_enhance,
    style_attention,
    style_integrate,
)
from .autodiff import Tensor, mean, tensor_sum
from .backbone import Decoder, Encoder
from .controls import RegionMaskSet, StyleBlend, color_preserve, interpolate_styles, spatial_stylize, stylize
from .discriminator import AestheticDiscriminator, ScaleEncoder
from .errors import ArchiveError
from .gradcheck import DEFAULT_TOLERANCE, gradient_check
from .losses import (
    LossWeights,
    STAGE1_TERMS,
    STAGE2_TERMS,
    adv_loss_discriminator,
    adv_loss_generator,
    ar1_loss,
    ar2_loss,
    content_loss,
    identity_loss,
    stage1_generator_objective,
    stage2_generator_objective,
    style_loss,
)
from .models import StyleTransferModels
from .nn import Adam
from .persist import load_archive, save_archive
from .trainer import Batch, TrainConfig, TrainState, train_step

__all__ = ["run_selfcheck", "CHECKS", "loop_attention_oracle"]


# -- explicit-loop oracle ------------------------------------------------------


def _loop_conv1x1(weight: np.ndarray, bias: np.ndarray, x: np.ndarray) -> np.ndarray:
    """x is (C_in, N); weight (C_out, C_in, 1, 1)."""
    c_out = weight.shape[0]
    c_in, n = x.shape
    out = np.zeros((c_out, n), dtype=np.float64)
    for o in range(c_out):
        for p in range(n):
            acc = float(bias[o])
            for i in range(c_in):
                acc += float(weight[o, i, 0, 0]) * float(x[i, p])
            out[o, p] = acc
    return out


def _loop_softmax_rows(scores: np.ndarray) -> np.ndarray:
    rows, cols = scores.shape
    out = np.zeros_like(scores)
    for r in range(rows):
        total = 0.0
        for c in range(cols):
            out[r, c] = math.exp(float(scores[r, c]))
            total += out[r, c]
        for c in range(cols):
            out[r, c] /= total
    return out


def _loop_norm(x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    c, n = x.shape
    out = np.zeros_like(x)
    for ch in range(c):
        m = sum(float(v) for v in x[ch]) / n
        var = sum((float(v) - m) ** 2 for v in x[ch]) / n
        scale = 1.0 / math.sqrt(var + eps)
        for p in range(n):
            out[ch, p] = (float(x[ch, p]) - m) * scale
    return out


def loop_attention_oracle(f_c: np.ndarray, f_s: np.ndarray, f_a: np.ndarray,
                          params: AesSAParams) -> np.ndarray:
    """Explicit-loop recomputation of the full attention module.

    Inputs are single-sample (C, H, W) float64 arrays; returns (C, Hc, Wc).
    """
    c, hs, ws = f_s.shape
    hc, wc = f_c.shape[1:]
    s_flat = f_s.reshape(c, hs * ws).astype(np.float64)
    a_flat = f_a.reshape(f_a.shape[0], hs * ws).astype(np.float64)
    c_flat = f_c.reshape(c, hc * wc).astype(np.float64)

    def p(name):
        conv = getattr(params, name)
        return conv.weight.data.astype(np.float64), conv.bias.data.astype(np.float64)

    # global enhancement
    a_hat = _loop_conv1x1(*p("f_a"), a_flat)
    s1_hat = _loop_conv1x1(*p("f_s1"), s_flat)
    s2_hat = _loop_conv1x1(*p("f_s2"), s_flat)
    scores_a = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            scores_a[i, j] = sum(a_hat[i, q] * s1_hat[j, q] for q in range(hs * ws))
    attn_a = _loop_softmax_rows(scores_a)
    mixed = np.zeros((c, hs * ws))
    for i in range(c):
        for q in range(hs * ws):
            mixed[i, q] = sum(attn_a[i, j] * s2_hat[j, q] for j in range(c))
    f_sa = _loop_conv1x1(*p("f_out1"), mixed) + s_flat

    # local integration
    q_hat = _loop_conv1x1(*p("f_c"), _loop_norm(c_flat))
    k_hat = _loop_conv1x1(*p("f_sa1"), _loop_norm(f_sa))
    v_hat = _loop_conv1x1(*p("f_sa2"), f_sa)
    scores_s = np.zeros((hc * wc, hs * ws))
    for pq in range(hc * wc):
        for sq in range(hs * ws):
            scores_s[pq, sq] = sum(q_hat[ch, pq] * k_hat[ch, sq] for ch in range(c))
    attn_s = _loop_softmax_rows(scores_s)
    pulled = np.zeros((c, hc * wc))
    for ch in range(c):
        for pq in range(hc * wc):
            pulled[ch, pq] = sum(v_hat[ch, sq] * attn_s[pq, sq] for sq in range(hs * ws))
    out = _loop_conv1x1(*p("f_out2"), pulled) + c_flat
    return out.reshape(c, hc, wc)


# -- helpers --------------------------------------------------------------------


def _randomize_biases(params: dict[str, Tensor], rng: np.random.Generator,
                      scale: float = 0.2):
    """Move biases off zero so ReLU kinks sit away from the FD step."""
    for name, p in params.items():
        if name.endswith("bias"):
            p.data[...] = rng.standard_normal(p.data.shape) * scale


def _row_sums_ok(matrix: np.ndarray, tol: float = 1e-5) -> bool:
    if np.any(matrix < 0):
        return False
    return bool(np.all(np.abs(matrix.sum(axis=-1) - 1.0) <= tol))


# -- checks ----------------------------------------------------------------------


def check_attention_row_stochasticity() -> tuple[bool, str]:
    """100 random shape/input triples: rows of both attentions are distributions."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case in range(100):
        c = int(rng.integers(1, 7))
        hs, ws = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        hc, wc = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        params = AesSAParams(c, rng=rng, dtype=np.float64)
        scale = float(rng.uniform(0.1, 10.0))
        f_s = Tensor(rng.standard_normal((1, c, hs, ws)) * scale)
        f_a = Tensor(rng.standard_normal((1, c, hs, ws)) * scale)
        f_c = Tensor(rng.standard_normal((1, c, hc, wc)) * scale)
        a_a = aesthetic_attention(f_s, f_a, params).data
        f_sa = aesthetic_enhance(f_s, f_a, params)
        a_s = style_attention(f_c, f_sa, params).data
        if not (_row_sums_ok(a_a) and _row_sums_ok(a_s)):
            return False, f"row sums broke at case {case} (C={c})"
        worst = max(worst,
                    float(np.abs(a_a.sum(axis=-1) - 1).max()),
                    float(np.abs(a_s.sum(axis=-1) - 1).max()))
    return True, f"100 triples, worst row-sum deviation {worst:.2e}"


def check_attention_oracle() -> tuple[bool, str]:
    """Vectorized module equals the explicit-loop oracle within 1e-6.

    Exhaustive over channels 1..4 and every content/style grid with H,W
    up to 3 (324 combinations).
    """
    rng = np.random.default_rng(77)
    worst = 0.0
    cases = 0
    for c in (1, 2, 3, 4):
        for hc, wc, hs, ws in itertools.product((1, 2, 3), repeat=4):
            params = AesSAParams(c, rng=rng, dtype=np.float64)
            f_c = rng.standard_normal((c, hc, wc))
            f_s = rng.standard_normal((c, hs, ws))
            f_a = rng.standard_normal((c, hs, ws))
            got = aessa_mod.aessa_forward(
                Tensor(f_c[None]), Tensor(f_s[None]), Tensor(f_a[None]), params
            ).data[0]
            want = loop_attention_oracle(f_c, f_s, f_a, params)
            err = float(np.abs(got - want).max())
            worst = max(worst, err)
            cases += 1
            if err > 1e-6:
                return False, f"C={c} content {hc}x{wc} style {hs}x{ws}: err {err:.2e}"
    return True, f"{cases} shape combos, max abs err {worst:.2e}"


def check_residual_identities() -> tuple[bool, str]:
    """Zeroed output projections turn both steps into exact passthroughs."""
    rng = np.random.default_rng(5)
    params = AesSAParams(4, rng=rng)
    f_s = Tensor(rng.standard_normal((2, 4, 3, 5)).astype(np.float32))
    f_a = Tensor(rng.standard_normal((2, 4, 3, 5)).astype(np.float32))
    f_c = Tensor(rng.standard_normal((2, 4, 4, 4)).astype(np.float32))
    params.f_out1.zero_init()
    enhanced = aesthetic_enhance(f_s, f_a, params)
    if not np.array_equal(enhanced.data, f_s.data):
        return False, "aesthetic_enhance is not an exact passthrough with zero f_out1"
    params.f_out2.zero_init()
    integrated = style_integrate(f_c, enhanced, params)
    if not np.array_equal(integrated.data, f_c.data):
        return False, "style_integrate is not an exact passthrough with zero f_out2"
    return True, "both residual branches bit-exact"


def check_multiscale_features() -> tuple[bool, str]:
    """Aesthetic features equal an independent per-scale composition."""
    rng = np.random.default_rng(9)
    disc = AestheticDiscriminator(0.125, rng=rng)
    img = Tensor(rng.random((2, 3, 64, 64), dtype=np.float32))
    got = disc.aesthetic_features(img).data
    # independent composition: run the pieces separately, numpy upsampling
    pyramid = disc.build_pyramid(img)
    e1 = disc.encoders[0].encode(pyramid[0]).data
    e2 = disc.encoders[1].encode(pyramid[1]).data
    e3 = disc.encoders[2].encode(pyramid[2]).data
    manual = (e1
              + e2.repeat(2, axis=2).repeat(2, axis=3)
              + e3.repeat(4, axis=2).repeat(4, axis=3))
    err = float(np.abs(got - manual).max())
    if err > 1e-6:
        return False, f"composition mismatch {err:.2e}"
    full = AestheticDiscriminator(1.0, rng=np.random.default_rng(1))
    shape = full.aesthetic_features(Tensor(np.random.default_rng(2).random((1, 3, 64, 64), dtype=np.float32))).data.shape
    if shape != (1, 512, 4, 4):
        return False, f"full-width feature shape {shape}, expected (1, 512, 4, 4)"
    return True, f"composition err {err:.2e}; full-width shape {shape}"


def check_loss_values() -> tuple[bool, str]:
    """Closed-form loss values at fixed points."""
    rng = np.random.default_rng(3)
    taps = {k: Tensor(rng.standard_normal((1, 2, 4, 4)).astype(np.float32))
            for k in ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")}
    checks = []
    checks.append(("content identical", abs(float(content_loss(taps, taps).data)) < 1e-6))
    checks.append(("style identical", abs(float(style_loss(taps, taps).data)) < 1e-6))
    img = Tensor(rng.random((1, 3, 8, 8), dtype=np.float32))
    checks.append(("identity zero", float(identity_loss(img, img, img, img).data) == 0.0))
    zeros = [Tensor(np.zeros((1, 1, 4, 4), dtype=np.float64))] * 3
    d0 = float(adv_loss_discriminator(zeros, zeros).data)
    checks.append(("critic at zero logits", abs(d0 - 2 * math.log(2)) < 1e-9))
    g0 = float(adv_loss_generator(zeros).data)
    checks.append(("generator at zero logits", abs(g0 - math.log(2)) < 1e-9))
    unit = {name: 1.0 for name in STAGE1_TERMS}
    checks.append(("stage-1 unit total", stage1_generator_objective(unit, LossWeights()) == 57.0))
    unit2 = {name: 1.0 for name in STAGE2_TERMS}
    checks.append(("stage-2 unit total", stage2_generator_objective(unit2, LossWeights()) == 507.5))
    perturbed = Tensor(img.data + (np.ones_like(img.data) / math.sqrt(img.data.size)))
    id_one = float(identity_loss(perturbed, img, img, img).data)
    checks.append(("identity unit perturbation", abs(id_one - 1.0) < 1e-5))
    failed = [name for name, ok in checks if not ok]
    if failed:
        return False, f"failed: {failed}"
    return True, f"{len(checks)} closed-form values reproduced"


def _tiny_state(stage: int) -> tuple[TrainConfig, TrainState, Batch]:
    cfg = TrainConfig(stage=stage, batch_size=1, iterations=1, resize=64, crop=64,
                      width_multiplier=1 / 16, seed=11, checkpoint_every=10)
    models = StyleTransferModels(cfg.width_multiplier, seed=cfg.seed, stage=stage)
    state = TrainState(models,
                       Adam(models.generator_parameters(), cfg.lr),
                       Adam(models.discriminator_parameters(), cfg.lr))
    rng = np.random.default_rng(4)
    batch = Batch(rng.random((1, 3, 64, 64), dtype=np.float32),
                  rng.random((1, 3, 64, 64), dtype=np.float32))
    return cfg, state, batch


def check_stage_gating() -> tuple[bool, str]:
    """Stage I reports exactly {adv, content, style, identity}; stage II swaps in the regularizers."""
    cfg1, state1, batch = _tiny_state(1)
    state1.step = 1
    report1 = train_step(batch, cfg1, state1)
    if set(report1.terms) != set(STAGE1_TERMS):
        return False, f"stage 1 terms {sorted(report1.terms)}"
    cfg2, state2, _ = _tiny_state(2)
    state2.step = 1
    report2 = train_step(batch, cfg2, state2)
    if set(report2.terms) != set(STAGE2_TERMS):
        return False, f"stage 2 terms {sorted(report2.terms)}"
    return True, "term sets match the stage objectives"


def check_gradients() -> tuple[bool, str]:
    """Finite-difference suite over attention, critic, decoder, and losses."""
    started = time.perf_counter()
    failures: list[str] = []
    worst = 0.0

    def run(tag, build, tensors, sample=None, seed=0):
        nonlocal worst
        res = gradient_check(build, tensors, sample=sample,
                             rng=np.random.default_rng(seed))
        worst = max(worst, res.max_error)
        if res.max_error >= DEFAULT_TOLERANCE:
            failures.append(f"{tag}: {res.worst()[0]} err {res.max_error:.2e}")

    # attention, both levels plus fusion, params and inputs
    rng = np.random.default_rng(21)
    attn = TwoLevelAesSA({"relu4_1": 3, "relu5_1": 3}, rng=rng, dtype=np.float64)
    _randomize_biases(attn.parameters(), rng)
    taps_c = {"relu4_1": Tensor(rng.standard_normal((1, 3, 4, 4)), requires_grad=True),
              "relu5_1": Tensor(rng.standard_normal((1, 3, 2, 2)), requires_grad=True)}
    taps_s = {"relu4_1": Tensor(rng.standard_normal((1, 3, 4, 4)), requires_grad=True),
              "relu5_1": Tensor(rng.standard_normal((1, 3, 2, 2)), requires_grad=True)}
    feats_a = {"relu4_1": Tensor(rng.standard_normal((1, 3, 4, 4)), requires_grad=True),
               "relu5_1": Tensor(rng.standard_normal((1, 3, 2, 2)), requires_grad=True)}
    tensors = dict(attn.parameters())
    for level in ("relu4_1", "relu5_1"):
        tensors[f"F_c.{level}"] = taps_c[level]
        tensors[f"F_s.{level}"] = taps_s[level]
        tensors[f"F_a.{level}"] = feats_a[level]
    run("aessa", lambda: tensor_sum(attn.fused_output(taps_c, taps_s, feats_a)), tensors)

    # critic: every parameter through its own scale path
    rng = np.random.default_rng(11)
    for k in range(3):
        enc = ScaleEncoder(1 / 32, rng=rng, dtype=np.float64)
        _randomize_biases(enc.parameters(), rng)
        enc.classifier.bias.data[...] = rng.standard_normal(1) * 0.2
        x = Tensor(rng.random((1, 3, 32, 32)))
        tensors = {f"E.{n}": p for n, p in enc.parameters().items()}
        tensors["C.weight"] = enc.classifier.weight
        tensors["C.bias"] = enc.classifier.bias
        run(f"critic scale {k + 1}",
            lambda e=enc, xx=x: mean(e.classify(e.encode(xx))), tensors)

    # critic: pyramid path, input gradient sampled
    disc = AestheticDiscriminator(1 / 32, rng=np.random.default_rng(31), dtype=np.float64)
    _randomize_biases(disc.parameters(), np.random.default_rng(32))
    img = Tensor(np.random.default_rng(33).random((1, 3, 64, 64)), requires_grad=True)

    def full_critic():
        logits = disc.discriminate(img)
        return (mean(logits[0]) + mean(logits[1]) + mean(logits[2])) * (1.0 / 3.0)

    run("critic pyramid input", full_critic, {"image": img}, sample=48, seed=7)
    run("critic features input",
        lambda: tensor_sum(disc.aesthetic_features(img)) * 1e-2,
        {"image": img}, sample=48, seed=8)

    # decoder: 8-channel 4x4 instance
    rng = np.random.default_rng(4)
    dec = Decoder(1 / 64, rng=rng, dtype=np.float64)
    _randomize_biases(dec.parameters(), rng)
    dec.convs["conv9"].bias.data[...] += 0.5
    feat = Tensor(rng.standard_normal((1, dec.in_channels, 4, 4)), requires_grad=True)
    tensors = dict(dec.parameters())
    tensors["feature"] = feat
    run("decoder", lambda: tensor_sum(dec.decode(feat)), tensors)

    # losses against their direct tensor inputs
    rng = np.random.default_rng(17)
    pyr_a = {k: Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True)
             for k in ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")}
    pyr_b = {k: Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True)
             for k in ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")}
    run("content_loss", lambda: content_loss(pyr_a, pyr_b),
        {"a4": pyr_a["relu4_1"], "b4": pyr_b["relu4_1"],
         "a5": pyr_a["relu5_1"], "b5": pyr_b["relu5_1"]})
    run("style_loss", lambda: style_loss(pyr_a, pyr_b),
        {f"a{i}": pyr_a[k] for i, k in enumerate(pyr_a)} |
        {f"b{i}": pyr_b[k] for i, k in enumerate(pyr_b)})
    imgs = [Tensor(rng.random((1, 3, 4, 4)), requires_grad=True) for _ in range(4)]
    run("identity_loss", lambda: identity_loss(*imgs),
        {f"img{i}": t for i, t in enumerate(imgs)})
    real = [Tensor(rng.standard_normal((1, 1, s, s)), requires_grad=True) for s in (4, 2, 1)]
    fake = [Tensor(rng.standard_normal((1, 1, s, s)), requires_grad=True) for s in (4, 2, 1)]
    run("adv_loss_discriminator", lambda: adv_loss_discriminator(real, fake),
        {f"r{i}": t for i, t in enumerate(real)} | {f"f{i}": t for i, t in enumerate(fake)})
    run("adv_loss_generator", lambda: adv_loss_generator(fake),
        {f"f{i}": t for i, t in enumerate(fake)})
    pair = [Tensor(rng.random((1, 3, 4, 4)), requires_grad=True) for _ in range(2)]
    run("ar1_loss", lambda: ar1_loss(*pair), {"a": pair[0], "b": pair[1]})
    feats = [Tensor(rng.standard_normal((1, 4, 3, 3)), requires_grad=True) for _ in range(2)]
    run("ar2_loss", lambda: ar2_loss(*feats), {"fa": feats[0], "fb": feats[1]})

    elapsed = time.perf_counter() - started
    if failures:
        return False, "; ".join(failures)
    if elapsed >= 60.0:
        return False, f"gradient suite took {elapsed:.1f}s (budget 60s)"
    return True, f"max rel err {worst:.2e}, {elapsed:.1f}s"


def check_controls_algebra() -> tuple[bool, str]:
    """Neutral control settings reproduce the plain forward byte for byte."""
    models = StyleTransferModels(0.125, seed=13, stage=1)
    models.set_trainable(False)
    rng = np.random.default_rng(6)
    content = Tensor(rng.random((1, 3, 64, 64), dtype=np.float32))
    style = Tensor(rng.random((1, 3, 64, 64), dtype=np.float32))
    style2 = Tensor(rng.random((1, 3, 64, 64), dtype=np.float32))
    plain = models.generator_forward(content, style).data
    if not np.array_equal(stylize(content, style, 1.0, models).data, plain):
        return False, "stylize(alpha=1) differs from the plain forward"
    blend = StyleBlend([style, style2], [1.0, 0.0])
    if not np.array_equal(interpolate_styles(content, blend, models).data, plain):
        return False, "interpolation with weights [1,0] differs from single style"
    masks = RegionMaskSet([np.ones((64, 64), dtype=np.float32)])
    if not np.array_equal(spatial_stylize(content, [style], masks, models).data, plain):
        return False, "single full-coverage mask differs from the plain forward"
    recon_feature = models.fused_feature(content, content)
    recon = models.decoder.decode(recon_feature).data
    if not np.array_equal(stylize(content, style, 0.0, models).data, recon):
        return False, "stylize(alpha=0) differs from the reconstruction branch"
    # mid-blend is an exact affine combination of the two features
    f_cs = models.fused_feature(content, style)
    half = 0.5 * f_cs.data + 0.5 * recon_feature.data
    blended = 0.5 * f_cs + 0.5 * models.fused_feature(content, content)
    if float(np.abs(blended.data - half).max()) > 1e-6:
        return False, "alpha=0.5 feature blend is not the elementwise mean"
    # color alignment moves channel statistics onto the content's
    s_img = (0.5 + 0.15 * rng.standard_normal((1, 3, 32, 32))).clip(0.05, 0.95).astype(np.float32)
    c_img = (0.5 + 0.10 * rng.standard_normal((1, 3, 32, 32))).clip(0.05, 0.95).astype(np.float32)
    aligned = color_preserve(s_img, c_img)
    mean_err = float(np.abs(aligned.mean(axis=(2, 3)) - c_img.mean(axis=(2, 3))).max())
    if mean_err > 1e-4:
        return False, f"color_preserve channel means off by {mean_err:.2e}"
    return True, f"bit-exact identities hold; color mean err {mean_err:.2e}"


def check_archive_roundtrip() -> tuple[bool, str]:
    """Random archives round-trip bit-exactly; malformed blobs are rejected."""
    rng = np.random.default_rng(123)
    for case in range(200):
        entries = {}
        for i in range(int(rng.integers(0, 6))):
            rank = int(rng.integers(0, 4))
            shape = tuple(int(rng.integers(1, 5)) for _ in range(rank))
            dtype = np.float32 if rng.random() < 0.5 else np.float64
            entries[f"t{case}_{i}"] = rng.standard_normal(shape).astype(dtype)
        blob = save_archive(entries)
        back = load_archive(blob)
        if set(back) != set(entries):
            return False, f"case {case}: name set changed"
        for name, arr in entries.items():
            if back[name].dtype != arr.dtype or back[name].shape != arr.shape:
                return False, f"case {case}: {name} header changed"
            if back[name].tobytes() != arr.tobytes():
                return False, f"case {case}: {name} payload changed"
    if len(save_archive({})) != 9:
        return False, "empty archive is not 9 bytes"
    for bad in (b"NOPE!", save_archive({"x": np.zeros(3, np.float32)})[:-4]):
        try:
            load_archive(bad)
            return False, "malformed blob accepted"
        except ArchiveError:
            pass
    return True, "200 fuzz cases bit-exact; malformed blobs rejected"


def check_encoder_contract() -> tuple[bool, str]:
    """Tap shapes, determinism, and frozen weights."""
    rng = np.random.default_rng(8)
    enc = Encoder(0.125, rng=rng)
    img = Tensor(rng.random((1, 3, 64, 48), dtype=np.float32))
    taps = enc.encode(img)
    for k, tap in enumerate(("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")):
        want = (64 // 2**k, 48 // 2**k)
        if taps[tap].data.shape[2:] != want:
            return False, f"{tap} grid {taps[tap].data.shape[2:]}, expected {want}"
    again = enc.encode(img)
    if not all(np.array_equal(taps[t].data, again[t].data) for t in taps):
        return False, "encode is not deterministic"
    return True, "tap grids follow the stride contract; deterministic"


CHECKS = {
    "attention-row-stochasticity": check_attention_row_stochasticity,
    "attention-loop-oracle": check_attention_oracle,
    "residual-identities": check_residual_identities,
    "multiscale-features": check_multiscale_features,
    "loss-values": check_loss_values,
    "stage-gating": check_stage_gating,
    "gradient-suite": check_gradients,
    "controls-algebra": check_controls_algebra,
    "archive-roundtrip": check_archive_roundtrip,
    "encoder-contract": check_encoder_contract,
}


def run_selfcheck(names: list[str] | None = None) -> list[tuple[str, bool, str]]:
    selected = names or list(CHECKS)
    results = []
    for name in selected:
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
