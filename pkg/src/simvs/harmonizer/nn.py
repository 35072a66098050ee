"""Minimal conv-net building blocks with explicit backward passes.

Plain numpy in channels-last (B,H,W,C) layout.  Convolutions lower to one
im2col GEMM per batch chunk; chunking keeps the window matrix cache-sized,
where the BLAS runs an order of magnitude faster than from RAM (numba loop
kernels were benchmarked and lose badly to BLAS here, so unlike the ray
kernels the convs have no numba path).  Layers cache what their backward
pass needs, so each layer instance must appear exactly once in a forward
graph.  Gradients accumulate into ``Param.grad`` until ``zero_grad``.
"""

import numpy as np


def _im2col(xp, h, w, k):
    # (B, h+k-1, w+k-1, C) -> (B*h*w, k*k*C) with channels fastest per tap
    b, c = xp.shape[0], xp.shape[3]
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(
        b * h * w, k * k * c
    )


class Param:
    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)


# Batch-chunk size in pixels for the im2col GEMMs: keeps the window matrix
# cache-resident (the machine's RAM bandwidth is far below its GEMM rate).
_CHUNK_PIXELS = 8192


def _chunk_rows(b, h, w):
    per_image = h * w
    rows = max(1, _CHUNK_PIXELS // per_image)
    return min(b, rows)


class Conv2d:
    """Stride-1 'same' convolution; weights (k, k, Cin, Cout), NHWC data."""

    def __init__(self, cin, cout, k=3, rng=None, dtype=np.float32, zero_init=False):
        self.cin, self.cout, self.k = cin, cout, k
        self.pad = k // 2
        if zero_init:
            w = np.zeros((k, k, cin, cout), dtype=dtype)
        else:
            std = 1.0 / np.sqrt(cin * k * k)
            w = (rng.standard_normal((k, k, cin, cout)) * std).astype(dtype)
        self.w = Param(w)
        self.b = Param(np.zeros(cout, dtype=dtype))
        self._xp = None
        self._shape = None

    def params(self, prefix):
        yield prefix + ".W", self.w
        yield prefix + ".b", self.b

    def _wmat(self):
        return self.w.value.reshape(-1, self.cout)

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, h, w, _ = x.shape
        k, p = self.k, self.pad
        if k == 1:
            self._xp = x
            self._shape = (b, h, w)
            y = x.reshape(-1, self.cin) @ self.w.value[0, 0] + self.b.value
            return y.reshape(b, h, w, self.cout)
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        self._xp = xp
        self._shape = (b, h, w)
        wmat = self._wmat()
        y = np.empty((b, h, w, self.cout), dtype=x.dtype)
        step = _chunk_rows(b, h, w)
        for c0 in range(0, b, step):
            c1 = min(c0 + step, b)
            cols = _im2col(xp[c0:c1], h, w, k)
            y[c0:c1] = (cols @ wmat + self.b.value).reshape(c1 - c0, h, w, self.cout)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, h, w = self._shape
        k, p = self.k, self.pad
        if k == 1:
            x = self._xp
            dy2 = np.ascontiguousarray(dy).reshape(-1, self.cout)
            self.b.grad += dy2.sum(axis=0)
            self.w.grad[0, 0] += x.reshape(-1, self.cin).T @ dy2
            dx = (dy2 @ self.w.value[0, 0].T).reshape(b, h, w, self.cin)
            self._xp = None
            return dx
        xp = self._xp
        q = k - 1 - p
        dyp = np.pad(dy, ((0, 0), (q, q), (q, q), (0, 0)))
        wflip = np.ascontiguousarray(
            self.w.value[::-1, ::-1].transpose(0, 1, 3, 2).reshape(-1, self.cin)
        )
        wgrad = self.w.grad.reshape(-1, self.cout)
        dx = np.empty((b, h, w, self.cin), dtype=dy.dtype)
        step = _chunk_rows(b, h, w)
        for c0 in range(0, b, step):
            c1 = min(c0 + step, b)
            dy2 = np.ascontiguousarray(dy[c0:c1]).reshape(-1, self.cout)
            self.b.grad += dy2.sum(axis=0)
            cols = _im2col(xp[c0:c1], h, w, k)
            wgrad += cols.T @ dy2
            # dx = full correlation of dy with the flipped kernel, io swapped
            dcols = _im2col(dyp[c0:c1], h, w, k)
            dx[c0:c1] = (dcols @ wflip).reshape(c1 - c0, h, w, self.cin)
        self._xp = None
        return dx


class Linear:
    def __init__(self, cin, cout, rng=None, dtype=np.float32, zero_init=False):
        if zero_init:
            w = np.zeros((cout, cin), dtype=dtype)
        else:
            w = (rng.standard_normal((cout, cin)) / np.sqrt(cin)).astype(dtype)
        self.w = Param(w)
        self.b = Param(np.zeros(cout, dtype=dtype))
        self._x = None

    def params(self, prefix):
        yield prefix + ".W", self.w
        yield prefix + ".b", self.b

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.value.T + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.w.grad += dy.T @ self._x
        self.b.grad += dy.sum(axis=0)
        dx = dy @ self.w.value
        self._x = None
        return dx


class SiLU:
    def __init__(self):
        self._x = None
        self._sig = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        self._sig = 1.0 / (1.0 + np.exp(-x))
        return x * self._sig

    def backward(self, dy: np.ndarray) -> np.ndarray:
        s = self._sig
        dx = dy * (s * (1.0 + self._x * (1.0 - s)))
        self._x = self._sig = None
        return dx


class AvgPool2:
    def forward(self, x: np.ndarray) -> np.ndarray:
        b, h, w, c = x.shape
        return x.reshape(b, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2) * 0.25


class UpsampleNearest2:
    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, h, w, c = dy.shape
        return dy.reshape(b, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


class ResBlock:
    """Pre-activation residual block with FiLM time conditioning.

    y = skip(x) + conv2(silu(film(conv1(silu(x)), temb)))
    conv2 is zero-initialized so the block starts as the identity/skip map.
    """

    def __init__(self, cin, cout, emb_dim, rng, dtype=np.float32):
        self.cin, self.cout = cin, cout
        self.act1 = SiLU()
        self.conv1 = Conv2d(cin, cout, rng=rng, dtype=dtype)
        self.film = Linear(emb_dim, 2 * cout, dtype=dtype, zero_init=True)
        self.act2 = SiLU()
        self.conv2 = Conv2d(cout, cout, dtype=dtype, zero_init=True)
        self.skip = Conv2d(cin, cout, k=1, rng=rng, dtype=dtype) if cin != cout else None
        self._h = None
        self._scale = None

    def params(self, prefix):
        yield from self.conv1.params(prefix + ".conv1")
        yield from self.film.params(prefix + ".film")
        yield from self.conv2.params(prefix + ".conv2")
        if self.skip is not None:
            yield from self.skip.params(prefix + ".skip")

    def forward(self, x: np.ndarray, temb: np.ndarray) -> np.ndarray:
        h = self.conv1.forward(self.act1.forward(x))
        sb = self.film.forward(temb)  # (B, 2*cout)
        scale = sb[:, None, None, : self.cout]
        shift = sb[:, None, None, self.cout :]
        self._h = h
        self._scale = scale
        h = h * (1.0 + scale) + shift
        h = self.conv2.forward(self.act2.forward(h))
        base = x if self.skip is None else self.skip.forward(x)
        return base + h

    def backward(self, dy: np.ndarray):
        """Returns (dx, dtemb)."""
        dh = self.act2.backward(self.conv2.backward(dy))
        dscale = (dh * self._h).sum(axis=(1, 2))
        dshift = dh.sum(axis=(1, 2))
        dtemb = self.film.backward(np.concatenate([dscale, dshift], axis=1))
        dh = dh * (1.0 + self._scale)
        dx = self.act1.backward(self.conv1.backward(dh))
        if self.skip is None:
            dx = dx + dy
        else:
            dx = dx + self.skip.backward(dy)
        self._h = self._scale = None
        return dx, dtemb


class CrossViewMean:
    """Adds a learned projection of the per-record view-mean feature map.

    The batch axis is records x views; this is the only place information
    crosses views.  The projection is zero-initialized (starts as a no-op).
    """

    def __init__(self, channels, n_views, dtype=np.float32):
        self.n_views = n_views
        self.proj = Conv2d(channels, channels, k=1, dtype=dtype, zero_init=True)

    def params(self, prefix):
        yield from self.proj.params(prefix + ".proj")

    def forward(self, x: np.ndarray) -> np.ndarray:
        bv, h, w, c = x.shape
        v = self.n_views
        m = x.reshape(bv // v, v, h, w, c).mean(axis=1)
        p = self.proj.forward(m)
        return x + np.repeat(p, v, axis=0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        bv, h, w, c = dy.shape
        v = self.n_views
        dp = dy.reshape(bv // v, v, h, w, c).sum(axis=1)
        dm = self.proj.backward(dp)
        return dy + np.repeat(dm / v, v, axis=0)


def sinusoidal_embedding(t: np.ndarray, dim: int, dtype=np.float32) -> np.ndarray:
    """Standard sin/cos embedding of integer timesteps, shape (B, dim)."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = np.asarray(t, dtype=np.float64)[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(angles), np.cos(angles)], axis=1)
    return emb.astype(dtype)
