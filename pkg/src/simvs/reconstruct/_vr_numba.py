"""Numba kernels for emission-absorption volume rendering and its gradients."""

import math

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _ray_box(ox, oy, oz, dx, dy, dz, bmin, bmax):
    t0 = -np.inf
    t1 = np.inf
    for ax in range(3):
        if ax == 0:
            o, d = ox, dx
        elif ax == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        if abs(d) < 1e-12:
            if o < bmin[ax] or o > bmax[ax]:
                return 0.0, -1.0
        else:
            inv = 1.0 / d
            ta = (bmin[ax] - o) * inv
            tb = (bmax[ax] - o) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
    if t0 < 0.0:
        t0 = 0.0
    if t1 <= t0:
        return 0.0, -1.0
    return t0, t1


@numba.njit(cache=True, parallel=True)
def vr_forward(rays_o, rays_d, density, color, bmin, bmax, n_samples, bg, far):
    n = rays_o.shape[0]
    d = density.shape[0]
    rgb = np.empty((n, 3))
    depth = np.empty(n)
    wsum = np.empty(n)
    sx = (d - 1) / (bmax[0] - bmin[0])
    sy = (d - 1) / (bmax[1] - bmin[1])
    sz = (d - 1) / (bmax[2] - bmin[2])
    gmax = d - 1 - 1e-9
    for i in numba.prange(n):
        ox, oy, oz = rays_o[i, 0], rays_o[i, 1], rays_o[i, 2]
        dx, dy, dz = rays_d[i, 0], rays_d[i, 1], rays_d[i, 2]
        t0, t1 = _ray_box(ox, oy, oz, dx, dy, dz, bmin, bmax)
        cr = 0.0
        cg = 0.0
        cb = 0.0
        dep = 0.0
        trans = 1.0
        if t1 > 0.0:
            dt = (t1 - t0) / n_samples
            for k in range(n_samples):
                tk = t0 + (k + 0.5) * dt
                gx = (ox + tk * dx - bmin[0]) * sx
                gy = (oy + tk * dy - bmin[1]) * sy
                gz = (oz + tk * dz - bmin[2]) * sz
                if gx < 0.0:
                    gx = 0.0
                elif gx > gmax:
                    gx = gmax
                if gy < 0.0:
                    gy = 0.0
                elif gy > gmax:
                    gy = gmax
                if gz < 0.0:
                    gz = 0.0
                elif gz > gmax:
                    gz = gmax
                ix = int(gx)
                iy = int(gy)
                iz = int(gz)
                fx = gx - ix
                fy = gy - iy
                fz = gz - iz
                w000 = (1 - fx) * (1 - fy) * (1 - fz)
                w001 = (1 - fx) * (1 - fy) * fz
                w010 = (1 - fx) * fy * (1 - fz)
                w011 = (1 - fx) * fy * fz
                w100 = fx * (1 - fy) * (1 - fz)
                w101 = fx * (1 - fy) * fz
                w110 = fx * fy * (1 - fz)
                w111 = fx * fy * fz
                sig = (
                    w000 * density[ix, iy, iz]
                    + w001 * density[ix, iy, iz + 1]
                    + w010 * density[ix, iy + 1, iz]
                    + w011 * density[ix, iy + 1, iz + 1]
                    + w100 * density[ix + 1, iy, iz]
                    + w101 * density[ix + 1, iy, iz + 1]
                    + w110 * density[ix + 1, iy + 1, iz]
                    + w111 * density[ix + 1, iy + 1, iz + 1]
                )
                if sig < 0.0:
                    sig = 0.0
                alpha = 1.0 - math.exp(-sig * dt)
                if alpha > 0.0:
                    w = trans * alpha
                    for ch in range(3):
                        cch = (
                            w000 * color[ix, iy, iz, ch]
                            + w001 * color[ix, iy, iz + 1, ch]
                            + w010 * color[ix, iy + 1, iz, ch]
                            + w011 * color[ix, iy + 1, iz + 1, ch]
                            + w100 * color[ix + 1, iy, iz, ch]
                            + w101 * color[ix + 1, iy, iz + 1, ch]
                            + w110 * color[ix + 1, iy + 1, iz, ch]
                            + w111 * color[ix + 1, iy + 1, iz + 1, ch]
                        )
                        if ch == 0:
                            cr += w * cch
                        elif ch == 1:
                            cg += w * cch
                        else:
                            cb += w * cch
                    dep += w * tk
                    trans *= 1.0 - alpha
        rgb[i, 0] = cr + trans * bg[0]
        rgb[i, 1] = cg + trans * bg[1]
        rgb[i, 2] = cb + trans * bg[2]
        depth[i] = dep + trans * far
        wsum[i] = 1.0 - trans
    return rgb, depth, wsum


@numba.njit(cache=True)
def vr_backward(rays_o, rays_d, density, color, bmin, bmax, n_samples, bg, far,
                drgb, grad_density, grad_color, grad_bg):
    """Accumulates photometric gradients; serial so scatter adds never race."""
    n = rays_o.shape[0]
    d = density.shape[0]
    sx = (d - 1) / (bmax[0] - bmin[0])
    sy = (d - 1) / (bmax[1] - bmin[1])
    sz = (d - 1) / (bmax[2] - bmin[2])
    gmax = d - 1 - 1e-9
    alphas = np.empty(n_samples)
    transs = np.empty(n_samples)
    sigs = np.empty(n_samples)
    cols = np.empty((n_samples, 3))
    ixs = np.empty(n_samples, dtype=np.int64)
    iys = np.empty(n_samples, dtype=np.int64)
    izs = np.empty(n_samples, dtype=np.int64)
    fxs = np.empty(n_samples)
    fys = np.empty(n_samples)
    fzs = np.empty(n_samples)
    for i in range(n):
        ox, oy, oz = rays_o[i, 0], rays_o[i, 1], rays_o[i, 2]
        dx, dy, dz = rays_d[i, 0], rays_d[i, 1], rays_d[i, 2]
        t0, t1 = _ray_box(ox, oy, oz, dx, dy, dz, bmin, bmax)
        gr = drgb[i, 0]
        gg = drgb[i, 1]
        gb = drgb[i, 2]
        if t1 <= 0.0:
            grad_bg[0] += gr
            grad_bg[1] += gg
            grad_bg[2] += gb
            continue
        dt = (t1 - t0) / n_samples
        trans = 1.0
        # forward replay, caching per-sample quantities
        for k in range(n_samples):
            tk = t0 + (k + 0.5) * dt
            gx = (ox + tk * dx - bmin[0]) * sx
            gy = (oy + tk * dy - bmin[1]) * sy
            gz = (oz + tk * dz - bmin[2]) * sz
            if gx < 0.0:
                gx = 0.0
            elif gx > gmax:
                gx = gmax
            if gy < 0.0:
                gy = 0.0
            elif gy > gmax:
                gy = gmax
            if gz < 0.0:
                gz = 0.0
            elif gz > gmax:
                gz = gmax
            ix = int(gx)
            iy = int(gy)
            iz = int(gz)
            fx = gx - ix
            fy = gy - iy
            fz = gz - iz
            ixs[k] = ix
            iys[k] = iy
            izs[k] = iz
            fxs[k] = fx
            fys[k] = fy
            fzs[k] = fz
            w000 = (1 - fx) * (1 - fy) * (1 - fz)
            w001 = (1 - fx) * (1 - fy) * fz
            w010 = (1 - fx) * fy * (1 - fz)
            w011 = (1 - fx) * fy * fz
            w100 = fx * (1 - fy) * (1 - fz)
            w101 = fx * (1 - fy) * fz
            w110 = fx * fy * (1 - fz)
            w111 = fx * fy * fz
            sig = (
                w000 * density[ix, iy, iz]
                + w001 * density[ix, iy, iz + 1]
                + w010 * density[ix, iy + 1, iz]
                + w011 * density[ix, iy + 1, iz + 1]
                + w100 * density[ix + 1, iy, iz]
                + w101 * density[ix + 1, iy, iz + 1]
                + w110 * density[ix + 1, iy + 1, iz]
                + w111 * density[ix + 1, iy + 1, iz + 1]
            )
            if sig < 0.0:
                sig = 0.0
            alpha = 1.0 - math.exp(-sig * dt)
            alphas[k] = alpha
            transs[k] = trans
            sigs[k] = sig
            for ch in range(3):
                cols[k, ch] = (
                    w000 * color[ix, iy, iz, ch]
                    + w001 * color[ix, iy, iz + 1, ch]
                    + w010 * color[ix, iy + 1, iz, ch]
                    + w011 * color[ix, iy + 1, iz + 1, ch]
                    + w100 * color[ix + 1, iy, iz, ch]
                    + w101 * color[ix + 1, iy, iz + 1, ch]
                    + w110 * color[ix + 1, iy + 1, iz, ch]
                    + w111 * color[ix + 1, iy + 1, iz + 1, ch]
                )
            trans *= 1.0 - alpha
        t_final = trans
        grad_bg[0] += gr * t_final
        grad_bg[1] += gg * t_final
        grad_bg[2] += gb * t_final
        # suffix_k = sum_{j>k} w_j c_j + T_S * bg, built backwards
        sufr = t_final * bg[0]
        sufg = t_final * bg[1]
        sufb = t_final * bg[2]
        for k in range(n_samples - 1, -1, -1):
            alpha = alphas[k]
            tk_trans = transs[k]
            w = tk_trans * alpha
            ix, iy, iz = ixs[k], iys[k], izs[k]
            fx, fy, fz = fxs[k], fys[k], fzs[k]
            w000 = (1 - fx) * (1 - fy) * (1 - fz)
            w001 = (1 - fx) * (1 - fy) * fz
            w010 = (1 - fx) * fy * (1 - fz)
            w011 = (1 - fx) * fy * fz
            w100 = fx * (1 - fy) * (1 - fz)
            w101 = fx * (1 - fy) * fz
            w110 = fx * fy * (1 - fz)
            w111 = fx * fy * fz
            if w > 0.0:
                # color gradient: dC/dc_k = w_k
                for ch in range(3):
                    if ch == 0:
                        g = gr * w
                    elif ch == 1:
                        g = gg * w
                    else:
                        g = gb * w
                    grad_color[ix, iy, iz, ch] += g * w000
                    grad_color[ix, iy, iz + 1, ch] += g * w001
                    grad_color[ix, iy + 1, iz, ch] += g * w010
                    grad_color[ix, iy + 1, iz + 1, ch] += g * w011
                    grad_color[ix + 1, iy, iz, ch] += g * w100
                    grad_color[ix + 1, iy, iz + 1, ch] += g * w101
                    grad_color[ix + 1, iy + 1, iz, ch] += g * w110
                    grad_color[ix + 1, iy + 1, iz + 1, ch] += g * w111
            # dC/dsigma_k = dt * ((1-alpha) T_k c_k - suffix_k); clamped
            # density (sigma <= 0) contributes no gradient
            one_m = 1.0 - alpha
            dsig = dt * (
                gr * (one_m * tk_trans * cols[k, 0] - sufr)
                + gg * (one_m * tk_trans * cols[k, 1] - sufg)
                + gb * (one_m * tk_trans * cols[k, 2] - sufb)
            )
            if sigs[k] <= 0.0:
                dsig = 0.0
            grad_density[ix, iy, iz] += dsig * w000
            grad_density[ix, iy, iz + 1] += dsig * w001
            grad_density[ix, iy + 1, iz] += dsig * w010
            grad_density[ix, iy + 1, iz + 1] += dsig * w011
            grad_density[ix + 1, iy, iz] += dsig * w100
            grad_density[ix + 1, iy, iz + 1] += dsig * w101
            grad_density[ix + 1, iy + 1, iz] += dsig * w110
            grad_density[ix + 1, iy + 1, iz + 1] += dsig * w111
            sufr += w * cols[k, 0]
            sufg += w * cols[k, 1]
            sufb += w * cols[k, 2]
