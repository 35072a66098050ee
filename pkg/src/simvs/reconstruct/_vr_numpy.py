"""Vectorized numpy fallback for the volume-rendering kernels."""

import numpy as np


def _ray_box(rays_o, rays_d, bmin, bmax):
    """Entry/exit distances per ray; exit <= 0 marks a miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / rays_d
        ta = (bmin[None, :] - rays_o) * inv
        tb = (bmax[None, :] - rays_o) * inv
    lo = np.minimum(ta, tb)
    hi = np.maximum(ta, tb)
    parallel = np.abs(rays_d) < 1e-12
    outside = parallel & ((rays_o < bmin[None, :]) | (rays_o > bmax[None, :]))
    lo = np.where(parallel, -np.inf, lo)
    hi = np.where(parallel, np.inf, hi)
    t0 = np.maximum(lo.max(axis=1), 0.0)
    t1 = hi.min(axis=1)
    miss = (t1 <= t0) | outside.any(axis=1)
    t0 = np.where(miss, 0.0, t0)
    t1 = np.where(miss, -1.0, t1)
    return t0, t1


def _trilinear_setup(rays_o, rays_d, t0, t1, n_samples, d, bmin, bmax):
    dt = np.where(t1 > 0.0, (t1 - t0) / n_samples, 0.0)
    k = np.arange(n_samples)
    ts = t0[:, None] + (k[None, :] + 0.5) * dt[:, None]  # (N,S)
    pos = rays_o[:, None, :] + rays_d[:, None, :] * ts[..., None]
    scale = (d - 1) / (bmax - bmin)
    g = (pos - bmin[None, None, :]) * scale[None, None, :]
    g = np.clip(g, 0.0, d - 1 - 1e-9)
    i0 = g.astype(np.int64)
    f = g - i0
    return dt, ts, i0, f


def _corners(i0, f, d):
    """Flat indices and weights of the 8 trilinear corners, lists of (N,S)."""
    ix, iy, iz = i0[..., 0], i0[..., 1], i0[..., 2]
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    idx = []
    wts = []
    for ox, wx in ((0, 1 - fx), (1, fx)):
        for oy, wy in ((0, 1 - fy), (1, fy)):
            for oz, wz in ((0, 1 - fz), (1, fz)):
                idx.append(((ix + ox) * d + (iy + oy)) * d + (iz + oz))
                wts.append(wx * wy * wz)
    return idx, wts


def _gather(grid_flat, idx, wts):
    out = np.zeros(idx[0].shape + grid_flat.shape[1:], dtype=np.float64)
    for i, w in zip(idx, wts):
        vals = grid_flat[i]
        out += vals * (w[..., None] if vals.ndim > w.ndim else w)
    return out


def _march(rays_o, rays_d, density, color, bmin, bmax, n_samples, far):
    d = density.shape[0]
    t0, t1 = _ray_box(rays_o, rays_d, bmin, bmax)
    dt, ts, i0, f = _trilinear_setup(rays_o, rays_d, t0, t1, n_samples, d, bmin, bmax)
    idx, wts = _corners(i0, f, d)
    sigma = np.maximum(_gather(density.reshape(-1), idx, wts), 0.0)
    cols = _gather(color.reshape(-1, 3), idx, wts)
    alpha = 1.0 - np.exp(-sigma * dt[:, None])  # (N,S); zero for missed rays
    trans_excl = np.cumprod(1.0 - alpha, axis=1)
    t_final = trans_excl[:, -1]
    trans_excl = np.concatenate(
        [np.ones((alpha.shape[0], 1)), trans_excl[:, :-1]], axis=1
    )
    weights = trans_excl * alpha
    return dict(t0=t0, t1=t1, dt=dt, ts=ts, idx=idx, wts=wts, sigma=sigma,
                cols=cols, alpha=alpha, trans_excl=trans_excl,
                t_final=t_final, weights=weights)


def vr_forward(rays_o, rays_d, density, color, bmin, bmax, n_samples, bg, far):
    m = _march(rays_o, rays_d, density, color, bmin, bmax, n_samples, far)
    rgb = (m["weights"][..., None] * m["cols"]).sum(axis=1) + m["t_final"][:, None] * bg
    depth = (m["weights"] * m["ts"]).sum(axis=1) + m["t_final"] * far
    wsum = 1.0 - m["t_final"]
    return rgb, depth, wsum


def vr_backward(rays_o, rays_d, density, color, bmin, bmax, n_samples, bg, far,
                drgb, grad_density, grad_color, grad_bg):
    m = _march(rays_o, rays_d, density, color, bmin, bmax, n_samples, far)
    weights = m["weights"]
    cols = m["cols"]
    alpha = m["alpha"]
    trans = m["trans_excl"]
    dt = m["dt"]
    grad_bg += drgb.T @ m["t_final"]

    # suffix_k = sum_{j > k} w_j c_j + T_S * bg
    wc = weights[..., None] * cols
    suffix = np.flip(np.cumsum(np.flip(wc, axis=1), axis=1), axis=1) - wc
    suffix += (m["t_final"][:, None] * bg)[:, None, :]

    dcol = weights[..., None] * drgb[:, None, :]  # (N,S,3)
    core = (1.0 - alpha)[..., None] * trans[..., None] * cols - suffix
    dsig = dt[:, None] * np.einsum("nsc,nc->ns", core, drgb)
    dsig *= m["sigma"] > 0.0  # density clamp subgradient

    gd = grad_density.reshape(-1)
    gc = grad_color.reshape(-1, 3)
    for i, w in zip(m["idx"], m["wts"]):
        flat = i.reshape(-1)
        np.add.at(gd, flat, (dsig * w).reshape(-1))
        np.add.at(gc, flat, (dcol * w[..., None]).reshape(-1, 3))
