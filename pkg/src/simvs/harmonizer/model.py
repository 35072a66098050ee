"""The multiview denoiser: a small conv U-Net with cross-view feature exchange.

Each of the 8 view slots is processed by shared weights; the bottleneck
exchanges a per-record view-mean feature so the views can agree on the
scene.  Data layout is channels-last (B*V, H, W, C).  Input channels per
view: noisy (or reference) latent, conditioning latent, 6 raymap channels,
the reference mask, and a drop flag.  Skip connections are additive to keep
full-resolution channel counts small.
"""

from dataclasses import dataclass

import numpy as np

from . import nn

RAYMAP_CHANNELS = 6
MASK_CHANNELS = 1
DROP_CHANNELS = 1


@dataclass(frozen=True)
class ModelConfig:
    n_views: int = 8
    latent_channels: int = 3
    base_width: int = 32
    emb_dim: int = 128
    dtype: str = "float32"

    @property
    def in_channels(self) -> int:
        return 2 * self.latent_channels + RAYMAP_CHANNELS + MASK_CHANNELS + DROP_CHANNELS

    def np_dtype(self):
        return np.dtype(self.dtype)

    def to_json_dict(self) -> dict:
        return {
            "n_views": self.n_views,
            "latent_channels": self.latent_channels,
            "base_width": self.base_width,
            "emb_dim": self.emb_dim,
            "dtype": self.dtype,
        }


class DenoiserModel:
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        dt = config.np_dtype()
        w = config.base_width
        e = config.emb_dim
        cin = config.in_channels
        c_out = config.latent_channels

        self.time_l1 = nn.Linear(e, e, rng=rng, dtype=dt)
        self.time_act = nn.SiLU()
        self.time_l2 = nn.Linear(e, e, rng=rng, dtype=dt)

        self.stem = nn.Conv2d(cin, w, rng=rng, dtype=dt)
        self.pool0 = nn.AvgPool2()
        self.rb_d1 = nn.ResBlock(w, 2 * w, e, rng, dtype=dt)
        self.pool1 = nn.AvgPool2()
        self.rb_m0 = nn.ResBlock(2 * w, 2 * w, e, rng, dtype=dt)
        self.xview = nn.CrossViewMean(2 * w, config.n_views, dtype=dt)
        self.rb_m1 = nn.ResBlock(2 * w, 2 * w, e, rng, dtype=dt)
        self.up1 = nn.UpsampleNearest2()
        self.rb_u1 = nn.ResBlock(2 * w, 2 * w, e, rng, dtype=dt)
        self.up0 = nn.UpsampleNearest2()
        self.proj0 = nn.Conv2d(2 * w, w, k=1, rng=rng, dtype=dt)
        self.rb_u0 = nn.ResBlock(w, w, e, rng, dtype=dt)
        self.out_act = nn.SiLU()
        self.out_conv = nn.Conv2d(w, c_out, rng=rng, dtype=dt, zero_init=True)

        self._blocks = [
            ("time_l1", self.time_l1),
            ("time_l2", self.time_l2),
            ("stem", self.stem),
            ("rb_d1", self.rb_d1),
            ("rb_m0", self.rb_m0),
            ("xview", self.xview),
            ("rb_m1", self.rb_m1),
            ("rb_u1", self.rb_u1),
            ("proj0", self.proj0),
            ("rb_u0", self.rb_u0),
            ("out_conv", self.out_conv),
        ]

    # --- parameter access ---------------------------------------------

    def named_params(self):
        for name, block in self._blocks:
            yield from block.params(name)

    def zero_grad(self):
        for _, p in self.named_params():
            p.grad[...] = 0.0

    @property
    def n_params(self) -> int:
        return sum(p.value.size for _, p in self.named_params())

    def state_arrays(self) -> dict:
        return {"param/" + name: p.value for name, p in self.named_params()}

    def load_state_arrays(self, arrays: dict) -> None:
        for name, p in self.named_params():
            key = "param/" + name
            if key not in arrays:
                raise KeyError("checkpoint missing parameter %s" % name)
            src = arrays[key]
            if src.shape != p.value.shape:
                raise ValueError("shape mismatch for %s" % name)
            p.value[...] = src.astype(p.value.dtype)

    # --- forward / backward --------------------------------------------

    def forward(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """x: (B*V, H, W, Cin) grouped per record; t: (B,) integer timesteps."""
        cfg = self.config
        v = cfg.n_views
        if x.shape[0] % v:
            raise ValueError("batch rows must be a multiple of n_views")
        b = x.shape[0] // v
        t = np.asarray(t)
        if t.shape != (b,):
            raise ValueError("need one timestep per record")
        dt = cfg.np_dtype()
        x = np.ascontiguousarray(x, dtype=dt)

        emb = nn.sinusoidal_embedding(t, cfg.emb_dim, dtype=dt)
        temb = self.time_l2.forward(self.time_act.forward(self.time_l1.forward(emb)))
        temb_v = np.repeat(temb, v, axis=0)
        self._n_records = b

        h0 = self.stem.forward(x)
        h1 = self.rb_d1.forward(self.pool0.forward(h0), temb_v)
        m = self.rb_m0.forward(self.pool1.forward(h1), temb_v)
        m = self.xview.forward(m)
        m = self.rb_m1.forward(m, temb_v)
        u1 = self.rb_u1.forward(self.up1.forward(m) + h1, temb_v)
        u0 = self.rb_u0.forward(self.proj0.forward(self.up0.forward(u1)) + h0, temb_v)
        return self.out_conv.forward(self.out_act.forward(u0))

    def backward(self, dout: np.ndarray) -> None:
        """Accumulate parameter gradients for the last forward pass."""
        v = self.config.n_views
        du0 = self.out_act.backward(self.out_conv.backward(dout))
        dsum0, dt0 = self.rb_u0.backward(du0)
        du1 = self.up0.backward(self.proj0.backward(dsum0))
        dh0_skip = dsum0
        dsum1, dt1 = self.rb_u1.backward(du1)
        dm = self.up1.backward(dsum1)
        dh1_skip = dsum1
        dm, dt2 = self.rb_m1.backward(dm)
        dm = self.xview.backward(dm)
        dp1, dt3 = self.rb_m0.backward(dm)
        dh1 = self.pool1.backward(dp1) + dh1_skip
        dp0, dt4 = self.rb_d1.backward(dh1)
        dh0 = self.pool0.backward(dp0) + dh0_skip
        self.stem.backward(dh0)

        dtemb_v = dt0 + dt1 + dt2 + dt3 + dt4
        dtemb = dtemb_v.reshape(self._n_records, v, -1).sum(axis=1)
        self.time_l1.backward(self.time_act.backward(self.time_l2.backward(dtemb)))
