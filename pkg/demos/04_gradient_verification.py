"""Verify analytic gradients against central finite differences.

The training stack is differentiated by the package's own reverse-mode
tape, so every gradient used by the optimizer can be cross-checked against
an independent numerical derivative. This script runs the checks in
float64 with step 1e-5 and prints the worst relative error per component;
the gate used in CI is 1e-3.
"""

import numpy as np

from aesust.aessa import AesSAParams, aessa_forward
from aesust.autodiff import Tensor, mean, tensor_sum
from aesust.backbone import Decoder
from aesust.discriminator import ScaleEncoder
from aesust.gradcheck import gradient_check
from aesust.losses import ar2_loss, content_loss, style_loss

rng = np.random.default_rng(42)

print("attention module (params and all three inputs):")
params = AesSAParams(3, rng=rng, dtype=np.float64)
for name, p in params.parameters().items():
    if name.endswith("bias"):
        p.data[...] = rng.standard_normal(p.data.shape) * 0.2
f_c = Tensor(rng.standard_normal((1, 3, 2, 2)), requires_grad=True)
f_s = Tensor(rng.standard_normal((1, 3, 3, 2)), requires_grad=True)
f_a = Tensor(rng.standard_normal((1, 3, 3, 2)), requires_grad=True)
tensors = {n: p for n, p in params.parameters().items() if not n.startswith("fuse")}
tensors |= {"F_c": f_c, "F_s": f_s, "F_a": f_a}
res = gradient_check(lambda: tensor_sum(aessa_forward(f_c, f_s, f_a, params)), tensors)
print(f"  {sum(t.data.size for t in tensors.values())} coordinates, "
      f"max rel err {res.max_error:.2e} (worst: {res.worst()[0]})")

print("decoder (8-channel desk instance, pixel-sum objective):")
dec = Decoder(1 / 64, rng=rng, dtype=np.float64)
for name, p in dec.parameters().items():
    if name.endswith("bias"):
        p.data[...] = rng.standard_normal(p.data.shape) * 0.2
dec.convs["conv9"].bias.data[...] += 0.5
feat = Tensor(rng.standard_normal((1, 8, 4, 4)), requires_grad=True)
res = gradient_check(lambda: tensor_sum(dec.decode(feat)),
                     dict(dec.parameters()) | {"feature": feat})
print(f"  max rel err {res.max_error:.2e} (worst: {res.worst()[0]})")

print("one critic scale (every parameter):")
enc = ScaleEncoder(1 / 32, rng=rng, dtype=np.float64)
for name, p in enc.parameters().items():
    if name.endswith("bias"):
        p.data[...] = rng.standard_normal(p.data.shape) * 0.2
x = Tensor(rng.random((1, 3, 32, 32)))
res = gradient_check(lambda: mean(enc.classify(enc.encode(x))),
                     dict(enc.parameters()) | {"clf.weight": enc.classifier.weight,
                                               "clf.bias": enc.classifier.bias})
print(f"  max rel err {res.max_error:.2e} (worst: {res.worst()[0]})")

print("perceptual losses (content, style, feature statistics):")
taps = ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")
pyr_a = {k: Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True) for k in taps}
pyr_b = {k: Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True) for k in taps}
res = gradient_check(lambda: content_loss(pyr_a, pyr_b) + style_loss(pyr_a, pyr_b),
                     {f"a.{k}": pyr_a[k] for k in taps} | {f"b.{k}": pyr_b[k] for k in taps})
print(f"  content+style max rel err {res.max_error:.2e}")
fa = Tensor(rng.standard_normal((1, 4, 3, 3)), requires_grad=True)
fb = Tensor(rng.standard_normal((1, 4, 3, 3)), requires_grad=True)
res = gradient_check(lambda: ar2_loss(fa, fb), {"fa": fa, "fb": fb})
print(f"  feature-statistics max rel err {res.max_error:.2e}")
