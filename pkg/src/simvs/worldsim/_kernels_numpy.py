"""Pure-numpy vectorized fallback for the ray-cast render kernels."""

import numpy as np

from ._texture import hash01

_EPS = 1e-9
_SHADOW_EPS = 1e-4


def _ground_albedo(gx, gy, ground, seed):
    cell = ground[1]
    ix = np.floor(gx / cell).astype(np.int64)
    iy = np.floor(gy / cell).astype(np.int64)
    parity = ((ix + iy) & 1).astype(bool)
    base = np.where(parity[:, None], ground[5:8][None, :], ground[2:5][None, :])
    amp = ground[8]
    f = 1.0 - amp + 2.0 * amp * hash01(ix, iy, seed)
    return np.clip(base * f[:, None], 0.0, 1.0)


def _sphere_t(ox, oy, oz, dx, dy, dz, cx, cy, cz, r):
    px = ox - cx
    py = oy - cy
    pz = oz - cz
    b = px * dx + py * dy + pz * dz
    q = px * px + py * py + pz * pz - r * r
    disc = b * b - q
    hit = disc > 0.0
    s = np.sqrt(np.where(hit, disc, 0.0))
    t1 = -b - s
    t2 = -b + s
    t = np.where(t1 > _EPS, t1, np.where(t2 > _EPS, t2, np.inf))
    return np.where(hit, t, np.inf)


def _box_t(ox, oy, oz, dx, dy, dz, box):
    cx, cy, cz, hx, hy, hz, yaw = box[:7]
    c = np.cos(yaw)
    s = np.sin(yaw)
    px = ox - cx
    py = oy - cy
    pz = oz - cz
    lpx = c * px + s * py
    lpy = -s * px + c * py
    ldx = c * dx + s * dy
    ldy = -s * dx + c * dy
    tmin = np.full(np.broadcast(lpx, ldx).shape, -np.inf)
    tmax = np.full(tmin.shape, np.inf)
    miss = np.zeros(tmin.shape, dtype=bool)
    for lp, ld, h in ((lpx, ldx, hx), (lpy, ldy, hy), (pz, dz, hz)):
        lp = np.broadcast_to(lp, tmin.shape)
        ld = np.broadcast_to(ld, tmin.shape)
        parallel = np.abs(ld) < 1e-12
        miss |= parallel & (np.abs(lp) > h)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / ld
            t1 = (-h - lp) * inv
            t2 = (h - lp) * inv
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        np.maximum(tmin, np.where(parallel, -np.inf, lo), out=tmin)
        np.minimum(tmax, np.where(parallel, np.inf, hi), out=tmax)
    miss |= (tmax < tmin) | (tmax < _EPS)
    t = np.where(tmin > _EPS, tmin, tmax)
    t = np.where(miss, np.inf, t)

    # entry-face normal in local frame from the dominant hit coordinate
    qx = np.broadcast_to(lpx, t.shape) + t * np.broadcast_to(ldx, t.shape)
    qy = np.broadcast_to(lpy, t.shape) + t * np.broadcast_to(ldy, t.shape)
    qz = np.broadcast_to(pz, t.shape) + t * np.broadcast_to(dz, t.shape)
    with np.errstate(invalid="ignore"):
        rx = np.abs(qx) / hx
        ry = np.abs(qy) / hy
        rz = np.abs(qz) / hz
    pick_x = (rx >= ry) & (rx >= rz)
    pick_y = ~pick_x & (ry >= rz)
    pick_z = ~pick_x & ~pick_y
    nlx = np.where(pick_x, np.where(qx > 0, 1.0, -1.0), 0.0)
    nly = np.where(pick_y, np.where(qy > 0, 1.0, -1.0), 0.0)
    nlz = np.where(pick_z, np.where(qz > 0, 1.0, -1.0), 0.0)
    nx = c * nlx - s * nly
    ny = s * nlx + c * nly
    return t, nx, ny, nlz


def _occluded(px, py, pz, ldir, spheres, boxes):
    blocked = np.zeros(px.shape, dtype=bool)
    for k in range(spheres.shape[0]):
        t = _sphere_t(px, py, pz, ldir[0], ldir[1], ldir[2],
                      spheres[k, 0], spheres[k, 1], spheres[k, 2], spheres[k, 3])
        blocked |= np.isfinite(t)
    for k in range(boxes.shape[0]):
        t, _, _, _ = _box_t(px, py, pz, ldir[0], ldir[1], ldir[2], boxes[k])
        blocked |= np.isfinite(t)
    return blocked


def render_pixels(ro, dirs, spheres, sphere_ids, boxes, box_ids,
                  ground, ground_seed, light, sky):
    n = dirs.shape[0]
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    best_t = np.full(n, np.inf)
    best_id = np.full(n, -1, dtype=np.int32)
    normals = np.zeros((n, 3))
    albedo = np.zeros((n, 3))

    # ground quad at z = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = np.where(np.abs(dz) > 1e-12, -ro[2] / dz, np.inf)
    gx = ro[0] + tg * dx
    gy = ro[1] + tg * dy
    hit_g = (tg > _EPS) & (np.abs(gx) <= ground[0]) & (np.abs(gy) <= ground[0])
    upd = hit_g & (tg < best_t)
    if np.any(upd):
        best_t[upd] = tg[upd]
        best_id[upd] = 0
        normals[upd] = (0.0, 0.0, 1.0)
        albedo[upd] = _ground_albedo(gx[upd], gy[upd], ground, ground_seed)

    for k in range(spheres.shape[0]):
        t = _sphere_t(ro[0], ro[1], ro[2], dx, dy, dz,
                      spheres[k, 0], spheres[k, 1], spheres[k, 2], spheres[k, 3])
        upd = t < best_t
        if np.any(upd):
            best_t[upd] = t[upd]
            best_id[upd] = sphere_ids[k] + 1
            hit = ro[None, :] + t[upd, None] * dirs[upd]
            normals[upd] = (hit - spheres[k, :3]) / spheres[k, 3]
            albedo[upd] = spheres[k, 4:7]

    for k in range(boxes.shape[0]):
        t, bnx, bny, bnz = _box_t(ro[0], ro[1], ro[2], dx, dy, dz, boxes[k])
        upd = t < best_t
        if np.any(upd):
            best_t[upd] = t[upd]
            best_id[upd] = box_ids[k] + 1
            normals[upd, 0] = bnx[upd]
            normals[upd, 1] = bny[upd]
            normals[upd, 2] = bnz[upd]
            albedo[upd] = boxes[k, 7:10]

    rgb = np.empty((n, 3))
    sky_mask = best_id == -1
    rgb[sky_mask] = sky
    lit = ~sky_mask
    if np.any(lit):
        ldir = light[:3]
        intensity = light[3]
        ambient = light[4]
        diffuse = np.maximum(normals[lit] @ ldir, 0.0)
        vis = np.ones(diffuse.shape)
        needs_shadow = (diffuse > 0.0) & (intensity > 0.0)
        if np.any(needs_shadow):
            idx = np.flatnonzero(lit)[needs_shadow]
            hit = ro[None, :] + best_t[idx, None] * dirs[idx]
            p = hit + normals[idx] * _SHADOW_EPS
            blocked = _occluded(p[:, 0], p[:, 1], p[:, 2], ldir, spheres, boxes)
            vis[needs_shadow] = np.where(blocked, 0.0, 1.0)
        shade = ambient + intensity * diffuse * vis
        rgb[lit] = np.clip(albedo[lit] * shade[:, None], 0.0, 1.0)
    tdist = best_t
    return rgb, best_id, tdist
