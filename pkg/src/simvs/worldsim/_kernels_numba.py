"""Numba ray-cast kernels: one primary ray plus one shadow ray per pixel.

Scalar twins of the vectorized numpy fallback in ``_kernels_numpy``; both
must produce the same hit decisions and shading (see the parity tests).
"""

import math

import numba
import numpy as np

from ._texture import MIX_A, MIX_B, MIX_C

_EPS = 1e-9
_SHADOW_EPS = 1e-4
_INV_2_53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, inline="always")
def _hash01(ix, iy, seed):
    z = seed + np.uint64(ix) * np.uint64(MIX_A) + np.uint64(iy) * np.uint64(MIX_B)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_B)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_C)
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * _INV_2_53


@numba.njit(cache=True, inline="always")
def _ground_albedo(gx, gy, ground, seed):
    cell = ground[1]
    ix = np.int64(math.floor(gx / cell))
    iy = np.int64(math.floor(gy / cell))
    if (ix + iy) & 1 == 0:
        br, bg, bb = ground[2], ground[3], ground[4]
    else:
        br, bg, bb = ground[5], ground[6], ground[7]
    amp = ground[8]
    f = 1.0 - amp + 2.0 * amp * _hash01(ix, iy, seed)
    r = min(max(br * f, 0.0), 1.0)
    g = min(max(bg * f, 0.0), 1.0)
    b = min(max(bb * f, 0.0), 1.0)
    return r, g, b


@numba.njit(cache=True, inline="always")
def _sphere_t(ox, oy, oz, dx, dy, dz, cx, cy, cz, r):
    px = ox - cx
    py = oy - cy
    pz = oz - cz
    b = px * dx + py * dy + pz * dz
    q = px * px + py * py + pz * pz - r * r
    disc = b * b - q
    if disc <= 0.0:
        return np.inf
    s = math.sqrt(disc)
    t = -b - s
    if t > _EPS:
        return t
    t = -b + s
    if t > _EPS:
        return t
    return np.inf


@numba.njit(cache=True, inline="always")
def _box_t(ox, oy, oz, dx, dy, dz, cx, cy, cz, hx, hy, hz, yaw):
    """Returns (t, nx, ny, nz); t = inf on miss."""
    c = math.cos(yaw)
    s = math.sin(yaw)
    px = ox - cx
    py = oy - cy
    pz = oz - cz
    lpx = c * px + s * py
    lpy = -s * px + c * py
    ldx = c * dx + s * dy
    ldy = -s * dx + c * dy
    tmin = -np.inf
    tmax = np.inf
    if abs(ldx) < 1e-12:
        if abs(lpx) > hx:
            return np.inf, 0.0, 0.0, 0.0
    else:
        inv = 1.0 / ldx
        t1 = (-hx - lpx) * inv
        t2 = (hx - lpx) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if abs(ldy) < 1e-12:
        if abs(lpy) > hy:
            return np.inf, 0.0, 0.0, 0.0
    else:
        inv = 1.0 / ldy
        t1 = (-hy - lpy) * inv
        t2 = (hy - lpy) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if abs(dz) < 1e-12:
        if abs(pz) > hz:
            return np.inf, 0.0, 0.0, 0.0
    else:
        inv = 1.0 / dz
        t1 = (-hz - pz) * inv
        t2 = (hz - pz) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < tmin or tmax < _EPS:
        return np.inf, 0.0, 0.0, 0.0
    t = tmin if tmin > _EPS else tmax
    qx = lpx + t * ldx
    qy = lpy + t * ldy
    qz = pz + t * dz
    rx = abs(qx) / hx
    ry = abs(qy) / hy
    rz = abs(qz) / hz
    if rx >= ry and rx >= rz:
        nlx = 1.0 if qx > 0 else -1.0
        nly = 0.0
        nlz = 0.0
    elif ry >= rz:
        nlx = 0.0
        nly = 1.0 if qy > 0 else -1.0
        nlz = 0.0
    else:
        nlx = 0.0
        nly = 0.0
        nlz = 1.0 if qz > 0 else -1.0
    # rotate the local normal back by +yaw; z is unaffected
    nx = c * nlx - s * nly
    ny = s * nlx + c * nly
    return t, nx, ny, nlz


@numba.njit(cache=True, inline="always")
def _box_hit(ox, oy, oz, dx, dy, dz, box):
    t, nx, ny, nz = _box_t(
        ox, oy, oz, dx, dy, dz,
        box[0], box[1], box[2], box[3], box[4], box[5], box[6],
    )
    return t, nx, ny, nz


@numba.njit(cache=True, inline="always")
def _occluded(ox, oy, oz, dx, dy, dz, spheres, boxes):
    for k in range(spheres.shape[0]):
        t = _sphere_t(ox, oy, oz, dx, dy, dz,
                      spheres[k, 0], spheres[k, 1], spheres[k, 2], spheres[k, 3])
        if t < np.inf:
            return True
    for k in range(boxes.shape[0]):
        t, _, _, _ = _box_hit(ox, oy, oz, dx, dy, dz, boxes[k])
        if t < np.inf:
            return True
    return False


@numba.njit(cache=True, parallel=True)
def render_pixels(ro, dirs, spheres, sphere_ids, boxes, box_ids,
                  ground, ground_seed, light, sky):
    n = dirs.shape[0]
    rgb = np.empty((n, 3), dtype=np.float64)
    hit_id = np.empty(n, dtype=np.int32)
    tdist = np.empty(n, dtype=np.float64)
    lx, ly, lz = light[0], light[1], light[2]
    intensity = light[3]
    ambient = light[4]
    gext = ground[0]
    rox, roy, roz = ro[0], ro[1], ro[2]
    for i in numba.prange(n):
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        dz = dirs[i, 2]
        best_t = np.inf
        best_id = np.int32(-1)
        nx = 0.0
        ny = 0.0
        nz = 0.0
        ar = 0.0
        ag = 0.0
        ab = 0.0
        # ground quad at z = 0
        if abs(dz) > 1e-12:
            t = -roz / dz
            if t > _EPS:
                gx = rox + t * dx
                gy = roy + t * dy
                if abs(gx) <= gext and abs(gy) <= gext and t < best_t:
                    best_t = t
                    best_id = np.int32(0)
                    nx, ny, nz = 0.0, 0.0, 1.0
                    ar, ag, ab = _ground_albedo(gx, gy, ground, ground_seed)
        for k in range(spheres.shape[0]):
            t = _sphere_t(rox, roy, roz, dx, dy, dz,
                          spheres[k, 0], spheres[k, 1], spheres[k, 2], spheres[k, 3])
            if t < best_t:
                best_t = t
                best_id = np.int32(sphere_ids[k] + 1)
                inv_r = 1.0 / spheres[k, 3]
                nx = (rox + t * dx - spheres[k, 0]) * inv_r
                ny = (roy + t * dy - spheres[k, 1]) * inv_r
                nz = (roz + t * dz - spheres[k, 2]) * inv_r
                ar, ag, ab = spheres[k, 4], spheres[k, 5], spheres[k, 6]
        for k in range(boxes.shape[0]):
            t, bnx, bny, bnz = _box_hit(rox, roy, roz, dx, dy, dz, boxes[k])
            if t < best_t:
                best_t = t
                best_id = np.int32(box_ids[k] + 1)
                nx, ny, nz = bnx, bny, bnz
                ar, ag, ab = boxes[k, 7], boxes[k, 8], boxes[k, 9]
        if best_id == np.int32(-1):
            rgb[i, 0] = sky[0]
            rgb[i, 1] = sky[1]
            rgb[i, 2] = sky[2]
            hit_id[i] = -1
            tdist[i] = np.inf
        else:
            diffuse = nx * lx + ny * ly + nz * lz
            if diffuse < 0.0:
                diffuse = 0.0
            vis = 1.0
            if diffuse > 0.0 and intensity > 0.0:
                hx = rox + best_t * dx + nx * _SHADOW_EPS
                hy = roy + best_t * dy + ny * _SHADOW_EPS
                hz = roz + best_t * dz + nz * _SHADOW_EPS
                if _occluded(hx, hy, hz, lx, ly, lz, spheres, boxes):
                    vis = 0.0
            shade = ambient + intensity * diffuse * vis
            rgb[i, 0] = min(max(ar * shade, 0.0), 1.0)
            rgb[i, 1] = min(max(ag * shade, 0.0), 1.0)
            rgb[i, 2] = min(max(ab * shade, 0.0), 1.0)
            hit_id[i] = best_id
            tdist[i] = best_t
    return rgb, hit_id, tdist
