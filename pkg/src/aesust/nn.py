"""Parameterized layers, initializers, and the Adam optimizer."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, conv2d, pad2d, mean

__all__ = ["Conv2d", "Adam", "spatial_norm", "he_normal", "orthogonal_matrix"]


def he_normal(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


def orthogonal_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Row-orthonormal (rows <= cols) or column-orthonormal matrix."""
    transpose = rows < cols
    n, m = (cols, rows) if transpose else (rows, cols)
    a = rng.standard_normal((n, m))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return q.T if transpose else q


class Conv2d:
    """2-d convolution layer with optional reflection padding."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int = 1,
        padding: int = 0,
        pad_mode: str = "zero",
        *,
        rng: np.random.Generator,
        dtype=np.float32,
        weight_scale: float | None = None,
        trainable: bool = True,
    ):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self.pad_mode = pad_mode
        fan_in = in_channels * kernel * kernel
        if weight_scale is None:
            w = he_normal(rng, (out_channels, in_channels, kernel, kernel), fan_in, dtype)
        else:
            w = (rng.standard_normal((out_channels, in_channels, kernel, kernel)) * weight_scale).astype(dtype)
        self.weight = Tensor(w, requires_grad=trainable)
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=trainable)

    def __call__(self, x) -> Tensor:
        if self.pad_mode == "reflect" and self.padding:
            x = pad2d(x, self.padding, "reflect")
            return conv2d(x, self.weight, self.bias, stride=self.stride, padding=0)
        return conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}

    def zero_init(self):
        """Zero both weight and bias (turns residual branches into identities)."""
        self.weight.data[...] = 0.0
        self.bias.data[...] = 0.0


def spatial_norm(x, eps: float = 1e-5) -> Tensor:
    """Standardize each (sample, channel) plane over its spatial positions.

    This is both the channel-wise mean-variance normalization used by the
    attention module and the parameter-free instance normalization of the
    discriminator.
    """
    m = mean(x, axis=(2, 3), keepdims=True)
    centered = x - m
    var = mean(centered * centered, axis=(2, 3), keepdims=True)
    return centered * ((var + eps) ** -0.5)


class Adam:
    """Adam with bias correction over a named parameter dict."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.step_count
        bc2 = 1.0 - b2**self.step_count
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def state_entries(self, prefix: str) -> dict[str, np.ndarray]:
        """Optimizer state as archive entries under ``prefix``."""
        entries = {f"{prefix}.step": np.array([float(self.step_count)], dtype=np.float64)}
        for name in self.params:
            entries[f"{prefix}.m.{name}"] = self.m[name]
            entries[f"{prefix}.v.{name}"] = self.v[name]
        return entries

    def load_state_entries(self, prefix: str, entries: dict[str, np.ndarray]):
        self.step_count = int(entries[f"{prefix}.step"][0])
        for name in self.params:
            self.m[name] = entries[f"{prefix}.m.{name}"].copy()
            self.v[name] = entries[f"{prefix}.v.{name}"].copy()
