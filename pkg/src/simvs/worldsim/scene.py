"""Scene specifications, world states, and multiview record sampling.

A scene is a textured ground quad plus 1-4 primitives under one directional
light.  A state perturbs object poses (dynamics) or the light (lighting);
state 0 is always the unperturbed world.  Records pair renders of the same
cameras at state 0 ("consistent") with renders at per-view sampled states
("inconsistent").
"""

import colorsys
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..camera import CameraPose, look_at
from ..errors import InvalidSceneError

# Per-view probability of a non-identity state (view 0 always stays at the
# reference state).  Records are resampled until at least one view is
# perturbed, so the realized law is Binomial(n-1, p) conditioned on >= 1.
PER_VIEW_INCONSISTENCY_PROB = 0.75

# Dynamics deltas: translation radius factor relative to the summed object
# sizes.  Radii are drawn uniformly by area over the outer annulus
# [MIN_SHIFT_FRAC * R, R] instead of the full disc so every non-identity
# state moves silhouettes visibly.
DYNAMICS_RADIUS_FACTOR = 0.3
MIN_SHIFT_FRAC = 0.5
MAX_YAW_DELTA = math.pi / 6.0  # +/- 30 degrees

# Lighting deltas.
LIGHT_AZIMUTH_DELTA = math.pi / 2.0     # +/- 90 degrees
LIGHT_INTENSITY_GAIN = (0.3, 2.0)
LIGHT_ELEVATION_DELTA = 0.2
LIGHT_AMBIENT_DELTA = 0.1

STATE_FAMILY_SIZE = 6

_EL_MIN = 1e-3


@dataclass(frozen=True)
class Primitive:
    kind: str                 # "sphere" | "box"
    center: np.ndarray        # (3,) world units; resting on the ground at base
    half_extents: np.ndarray  # (3,); spheres use (r, r, r)
    yaw: float                # rad about +z (base orientation, boxes only)
    albedo: np.ndarray        # (3,) in [0,1]

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, dtype=np.float64)
        )
        object.__setattr__(self, "albedo", np.asarray(self.albedo, dtype=np.float64))
        if self.kind not in ("sphere", "box"):
            raise InvalidSceneError("primitive kind must be sphere or box")

    @property
    def size(self) -> float:
        """Characteristic diameter in world units."""
        return 2.0 * float(np.max(self.half_extents))


@dataclass(frozen=True)
class GroundPlane:
    half_extent: float
    cell_size: float
    color_a: np.ndarray
    color_b: np.ndarray
    noise_amp: float

    def __post_init__(self):
        object.__setattr__(self, "color_a", np.asarray(self.color_a, dtype=np.float64))
        object.__setattr__(self, "color_b", np.asarray(self.color_b, dtype=np.float64))


@dataclass(frozen=True)
class DirectionalLight:
    azimuth: float    # rad
    elevation: float  # rad, in (0, pi/2]
    intensity: float  # >= 0


@dataclass(frozen=True)
class SceneSpec:
    ground: GroundPlane
    objects: tuple
    light: DirectionalLight
    ambient: float
    sky_color: np.ndarray
    rng_seed: int

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(
            self, "sky_color", np.asarray(self.sky_color, dtype=np.float64)
        )
        validate_scene(self)


def validate_scene(scene: SceneSpec) -> None:
    if not 1 <= len(scene.objects) <= 4:
        raise InvalidSceneError("scene needs 1..4 objects")
    for obj in scene.objects:
        if obj.center[2] < obj.half_extents[2] - 1e-9:
            raise InvalidSceneError("object interpenetrates the ground plane")
    if not (0.0 < scene.light.elevation <= math.pi / 2 + 1e-12):
        raise InvalidSceneError("light elevation must lie in (0, pi/2]")
    if scene.light.intensity < 0:
        raise InvalidSceneError("light intensity must be >= 0")
    if not (0.0 <= scene.ambient <= 1.0):
        raise InvalidSceneError("ambient must lie in [0,1]")
    if scene.light.intensity + scene.ambient <= 0:
        raise InvalidSceneError("scene would be fully black")


@dataclass(frozen=True)
class SceneState:
    """Rigid per-object deltas plus a light delta; state_id 0 is the identity."""

    state_id: int
    object_deltas: tuple  # ((translation (3,), yaw_delta), ...) one per object
    light_delta: tuple    # (azimuth_off, elevation_off, intensity_gain, ambient_off)

    def __post_init__(self):
        deltas = tuple(
            (np.asarray(t, dtype=np.float64), float(y)) for t, y in self.object_deltas
        )
        object.__setattr__(self, "object_deltas", deltas)
        object.__setattr__(self, "light_delta", tuple(float(x) for x in self.light_delta))
        if self.state_id == 0 and not self.is_identity():
            raise InvalidSceneError("state_id 0 must be the identity state")

    def is_identity(self) -> bool:
        for t, y in self.object_deltas:
            if np.any(t != 0) or y != 0:
                return False
        daz, dele, gain, damb = self.light_delta
        return daz == 0 and dele == 0 and gain == 1.0 and damb == 0

    @classmethod
    def identity(cls, n_objects: int) -> "SceneState":
        return cls(
            state_id=0,
            object_deltas=tuple((np.zeros(3), 0.0) for _ in range(n_objects)),
            light_delta=(0.0, 0.0, 1.0, 0.0),
        )


def apply_state(scene: SceneSpec, state: SceneState) -> SceneSpec:
    """The perturbed scene; clamps keep every SceneSpec invariant satisfied."""
    if len(state.object_deltas) != len(scene.objects):
        raise InvalidSceneError("state has wrong number of object deltas")
    objects = []
    for obj, (dt, dyaw) in zip(scene.objects, state.object_deltas):
        center = obj.center + dt
        center[2] = max(center[2], obj.half_extents[2])
        objects.append(replace(obj, center=center, yaw=obj.yaw + dyaw))
    daz, dele, gain, damb = state.light_delta
    elevation = min(max(scene.light.elevation + dele, _EL_MIN), math.pi / 2)
    intensity = max(scene.light.intensity * gain, 0.0)
    ambient = min(max(scene.ambient + damb, 0.0), 1.0)
    if intensity + ambient <= 0:
        ambient = 1e-3
    light = DirectionalLight(
        azimuth=scene.light.azimuth + daz, elevation=elevation, intensity=intensity
    )
    return replace(scene, objects=tuple(objects), light=light, ambient=ambient)


@dataclass
class MultiviewRecord:
    """One scene's paired consistent/inconsistent views with exact poses."""

    consistent: list    # N images HxWx3 in [0,1], all at state 0
    inconsistent: list  # N images, view i rendered at states[i]
    poses: list         # N CameraPose
    states: list        # N ints indexing into (identity,) + family
    scene: SceneSpec
    kind: str = "none"  # "dynamics" | "lighting" | "none"
    family: tuple = ()  # non-identity SceneStates, ids 1..len(family)
    prompt: str = ""
    record_id: str = ""
    split: str = "train"

    def n_views(self) -> int:
        return len(self.poses)

    def state_of(self, i: int) -> SceneState:
        sid = self.states[i]
        if sid == 0:
            return SceneState.identity(len(self.scene.objects))
        return self.family[sid - 1]


# --- random scene construction -------------------------------------------

_GROUND_EXTENT = 8.0


def _random_albedo(rng) -> np.ndarray:
    h = rng.uniform(0.0, 1.0)
    s = rng.uniform(0.55, 0.9)
    v = rng.uniform(0.6, 0.95)
    return np.array(colorsys.hsv_to_rgb(h, s, v))


def sample_scene(rng: np.random.Generator, scene_seed: int,
                 min_objects: int = 2, max_objects: int = 3) -> SceneSpec:
    """Random desk-scale scene: textured ground, a few primitives, one light."""
    if not (1 <= min_objects <= max_objects <= 4):
        raise InvalidSceneError("object count bounds must satisfy 1 <= min <= max <= 4")
    n_obj = int(rng.integers(min_objects, max_objects + 1))
    objects = []
    placed = []
    for _ in range(n_obj):
        kind = "sphere" if rng.random() < 0.5 else "box"
        size = rng.uniform(0.55, 0.95)
        if kind == "sphere":
            half = np.full(3, size / 2.0)
        else:
            aspect = rng.uniform(0.55, 1.0, size=3)
            half = aspect / aspect.max() * (size / 2.0)
        # A few placement attempts for separation; overlap is allowed if they fail.
        for _ in range(8):
            xy = rng.uniform(-1.2, 1.2, size=2)
            if all(
                np.hypot(*(xy - p[:2])) > 0.8 * (size / 2 + p[2]) for p in placed
            ):
                break
        placed.append(np.array([xy[0], xy[1], size / 2.0]))
        center = np.array([xy[0], xy[1], half[2]])
        yaw = rng.uniform(0, 2 * math.pi) if kind == "box" else 0.0
        objects.append(
            Primitive(kind=kind, center=center, half_extents=half, yaw=yaw,
                      albedo=_random_albedo(rng))
        )
    base = rng.uniform(0.35, 0.6)
    tint = rng.uniform(0.9, 1.1, size=3)
    color_a = np.clip(base * tint, 0, 1)
    color_b = np.clip((base + rng.uniform(0.15, 0.3)) * tint, 0, 1)
    ground = GroundPlane(
        half_extent=_GROUND_EXTENT,
        cell_size=rng.uniform(0.5, 1.0),
        color_a=color_a,
        color_b=color_b,
        noise_amp=rng.uniform(0.08, 0.2),
    )
    light = DirectionalLight(
        azimuth=rng.uniform(0, 2 * math.pi),
        elevation=rng.uniform(0.5, 1.3),
        intensity=rng.uniform(0.7, 1.2),
    )
    sky = np.clip(np.array([0.62, 0.72, 0.88]) * rng.uniform(0.85, 1.1), 0, 1)
    return SceneSpec(
        ground=ground,
        objects=tuple(objects),
        light=light,
        ambient=rng.uniform(0.15, 0.3),
        sky_color=sky,
        rng_seed=int(scene_seed),
    )


def sample_state_family(scene: SceneSpec, kind: str, rng: np.random.Generator,
                        size: int = STATE_FAMILY_SIZE) -> tuple:
    """The record-level family of candidate non-identity states.

    All views of a record draw from one family, which correlates their
    inconsistencies the way frames of a single generated video would be.
    """
    n_obj = len(scene.objects)
    radius = DYNAMICS_RADIUS_FACTOR * sum(o.size for o in scene.objects)
    states = []
    for s in range(1, size + 1):
        if kind == "dynamics":
            deltas = []
            for _ in range(n_obj):
                theta = rng.uniform(0, 2 * math.pi)
                rho = radius * math.sqrt(rng.uniform(MIN_SHIFT_FRAC**2, 1.0))
                deltas.append(
                    (np.array([rho * math.cos(theta), rho * math.sin(theta), 0.0]),
                     rng.uniform(-MAX_YAW_DELTA, MAX_YAW_DELTA))
                )
            light_delta = (0.0, 0.0, 1.0, 0.0)
        elif kind == "lighting":
            deltas = [(np.zeros(3), 0.0) for _ in range(n_obj)]
            light_delta = (
                rng.uniform(-LIGHT_AZIMUTH_DELTA, LIGHT_AZIMUTH_DELTA),
                rng.uniform(-LIGHT_ELEVATION_DELTA, LIGHT_ELEVATION_DELTA),
                rng.uniform(*LIGHT_INTENSITY_GAIN),
                rng.uniform(-LIGHT_AMBIENT_DELTA, LIGHT_AMBIENT_DELTA),
            )
        else:
            raise ValueError("kind must be 'dynamics' or 'lighting'")
        states.append(
            SceneState(state_id=s, object_deltas=tuple(deltas), light_delta=light_delta)
        )
    return tuple(states)


def _orbit_poses(scene: SceneSpec, n_views: int, rng: np.random.Generator,
                 resolution: int) -> list:
    centers = np.stack([o.center for o in scene.objects])
    target = np.array([centers[:, 0].mean(), centers[:, 1].mean(), 0.4])
    radius = rng.uniform(3.8, 4.6)
    start = rng.uniform(0, 2 * math.pi)
    span = rng.uniform(1.8, 3.1)
    phi = rng.uniform(0.35, 0.6)
    ts = np.linspace(0.0, 1.0, n_views)
    focal = resolution / (2.0 * math.tan(math.radians(23.0)))
    poses = []
    for t in ts:
        theta = start + span * t + rng.uniform(-0.02, 0.02)
        el = phi + rng.uniform(-0.03, 0.03)
        eye = target + radius * np.array(
            [math.cos(el) * math.cos(theta), math.cos(el) * math.sin(theta), math.sin(el)]
        )
        poses.append(look_at(eye, target, focal=focal, resolution=(resolution, resolution)))
    return poses


def _assign_states(n_views: int, n_family: int, kind: str, layout: str,
                   rng: np.random.Generator) -> list:
    states = [0] * n_views
    if kind == "none":
        return states
    if layout == "train":
        while True:
            flags = rng.random(n_views - 1) < PER_VIEW_INCONSISTENCY_PROB
            if flags.any():
                break
        for i in range(1, n_views):
            states[i] = int(rng.integers(1, n_family + 1)) if flags[i - 1] else 0
    elif layout == "eval_dynamics":
        if n_views < 9:
            raise ValueError("eval_dynamics layout needs >= 9 views")
        for i in range(1, 8):
            states[i] = int(rng.integers(1, n_family + 1))
    elif layout == "eval_lighting":
        if n_views < 4:
            raise ValueError("eval_lighting layout needs >= 4 views")
        states[1] = 1
        states[2] = 2
    else:
        raise ValueError("unknown layout %r" % layout)
    return states


def sample_record(scene: SceneSpec, n_views: int, inconsistency_kind: str,
                  rng: np.random.Generator, resolution: int = 64,
                  layout: str = "train") -> MultiviewRecord:
    """Render one multiview record with per-view sampled states.

    Cameras sit on an orbit segment looking at the scene centroid.  View 0 is
    always at state 0; with ``layout='train'`` each other view is perturbed
    with probability 0.75 (conditioned on at least one perturbed view).  The
    eval layouts fix the state pattern instead: ``eval_dynamics`` perturbs
    views 1..7 and holds out the rest, ``eval_lighting`` gives views 1 and 2
    two distinct lighting states.
    """
    from .render import render  # local import to avoid a cycle

    if not 2 <= n_views <= 16:
        raise ValueError("n_views must lie in [2, 16]")
    if inconsistency_kind not in ("dynamics", "lighting", "none"):
        raise ValueError("unknown inconsistency kind %r" % inconsistency_kind)

    poses = _orbit_poses(scene, n_views, rng, resolution)
    if inconsistency_kind == "none":
        family = ()
    else:
        fam_size = 2 if layout == "eval_lighting" else STATE_FAMILY_SIZE
        family = sample_state_family(scene, inconsistency_kind, rng, size=fam_size)
    states = _assign_states(n_views, len(family), inconsistency_kind, layout, rng)

    identity = SceneState.identity(len(scene.objects))
    consistent = [render(scene, identity, p) for p in poses]
    inconsistent = []
    for i, p in enumerate(poses):
        if states[i] == 0:
            inconsistent.append(consistent[i].copy())
        else:
            inconsistent.append(render(scene, family[states[i] - 1], p))
    return MultiviewRecord(
        consistent=consistent,
        inconsistent=inconsistent,
        poses=poses,
        states=states,
        scene=scene,
        kind=inconsistency_kind,
        family=family,
    )
