"""Small feed-forward networks and an Adam optimizer, in plain numpy.

Policy and value heads share this MLP: tanh hidden layers, linear output.
The final layer starts at zero so an untrained policy is uniform and an
untrained value head predicts zero. Parameters are exposed as one flat
vector to support finite-difference checks.
"""

from __future__ import annotations

import numpy as np


class MLP:
    def __init__(self, in_dim: int, out_dim: int, hidden=(64, 64),
                 rng: np.random.Generator | None = None, zero_final: bool = True):
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = (in_dim, *hidden, out_dim)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            last = i == len(sizes) - 2
            if last and zero_final:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray):
        """Returns (output, cache). x has shape (batch, in_dim)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        h = x
        n = len(self.weights)
        for i in range(n):
            z = h @ self.weights[i] + self.biases[i]
            h = z if i == n - 1 else np.tanh(z)
            acts.append(h)
        return h, acts

    def backward(self, cache: list[np.ndarray], dout: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (weight_grads, bias_grads) in layer order.
        """
        n = len(self.weights)
        wg = [None] * n
        bg = [None] * n
        d = np.asarray(dout, dtype=float)
        for i in range(n - 1, -1, -1):
            h_in = cache[i]
            wg[i] = h_in.T @ d
            bg[i] = d.sum(axis=0)
            if i > 0:
                d = (d @ self.weights[i].T) * (1.0 - cache[i] ** 2)
        return wg, bg

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def set_flat(self, vec: np.ndarray) -> None:
        pos = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = vec[pos:pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[i] = vec[pos:pos + b.size].reshape(b.shape).copy()
            pos += b.size
        if pos != vec.size:
            raise ValueError(f"flat vector has {vec.size} entries, expected {pos}")

    @staticmethod
    def flatten_grads(wg, bg) -> np.ndarray:
        parts = []
        for w, b in zip(wg, bg):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


class Adam:
    def __init__(self, net: MLP, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = np.zeros_like(net.get_flat())
        self._v = np.zeros_like(self._m)

    def step(self, net: MLP, wg, bg) -> None:
        g = MLP.flatten_grads(wg, bg)
        self.t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * g
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * g * g
        m_hat = self._m / (1.0 - self.beta1 ** self.t)
        v_hat = self._v / (1.0 - self.beta2 ** self.t)
        theta = net.get_flat() - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        net.set_flat(theta)
