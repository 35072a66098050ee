"""Prompt construction, frame sampling, and the video-model plugin boundary.

The deterministic pieces (prompt strings, frame selection, per-record prompt
reuse) live here; the actual generative video model is reached through a
small JSON protocol so it stays an integration point, not a dependency.

Plugin wire protocol (field names are fixed):
  request  = {"image_path", "positive_prompt", "negative_prompt",
              "num_frames", "sampling_steps", "guidance_weight"}
  response = {"frame_paths": [path, ...]}   # ordered video frames
"""

import json
import subprocess
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io_png
from .errors import PluginError, RecordSkipped

PROMPT_PREFIX = "static shot, "

NEGATIVE_PROMPT = (
    "frozen, photograph, fixed lighting, moving camera, zoom in, zoom out, "
    "bird view, panning view, 360-degree shot, orbit shot, arch shot"
)

LIGHTING_PROMPTS = (
    "a bright light casts shadows",
    "the light slowly dims from bright to dark",
    "an object flies around the room, casting hard shadows",
    "a transition from a bright day to a dark night",
    "the shadows and lights move",
    "a strobe light flashes",
)

# Meta-prompt handed to a captioner together with one representative frame.
# Asks for short, specific, motion-only captions.
CAPTION_META_PROMPT = (
    "Describe, in one short sentence, a plausible motion of the people or "
    "objects visible in this image. Be specific about who or what moves and "
    "how. Do not mention the camera, the viewpoint, or lighting."
)


@dataclass(frozen=True)
class InconsistencyPrompt:
    positive: str
    negative: str
    source_caption: str
    kind: str  # "dynamics" | "lighting"

    def __post_init__(self):
        if not self.positive.startswith(PROMPT_PREFIX):
            raise ValueError("positive prompt must start with %r" % PROMPT_PREFIX)
        if "panning view" not in self.negative or "orbit shot" not in self.negative:
            raise ValueError("negative prompt missing required camera phrases")
        if self.kind not in ("dynamics", "lighting"):
            raise ValueError("kind must be 'dynamics' or 'lighting'")


@dataclass(frozen=True)
class VideoPluginConfig:
    endpoint: str
    frames_per_video: int
    videos_per_capture: int = 1
    sampling_steps: int = 250
    guidance_weight: float = 6.0

    def __post_init__(self):
        if self.frames_per_video < 2:
            raise ValueError("frames_per_video must be >= 2")
        if self.videos_per_capture < 1:
            raise ValueError("videos_per_capture must be >= 1")


def build_dynamics_prompt(caption: str) -> InconsistencyPrompt:
    """Prefix a motion caption into the full dynamics prompt pair."""
    if not caption:
        raise ValueError("caption must be non-empty")
    return InconsistencyPrompt(
        positive=PROMPT_PREFIX + caption,
        negative=NEGATIVE_PROMPT,
        source_caption=caption,
        kind="dynamics",
    )


def sample_lighting_prompt(rng: np.random.Generator) -> InconsistencyPrompt:
    """Uniform draw from the predetermined lighting prompt set."""
    caption = LIGHTING_PROMPTS[int(rng.integers(0, len(LIGHTING_PROMPTS)))]
    return InconsistencyPrompt(
        positive=PROMPT_PREFIX + caption,
        negative=NEGATIVE_PROMPT,
        source_caption=caption,
        kind="lighting",
    )


def select_inconsistent_frame(frames, rng: np.random.Generator):
    """Uniform draw of one frame from a generated video."""
    frames = list(frames)
    if not frames:
        raise ValueError("cannot select a frame from an empty video")
    return frames[int(rng.integers(0, len(frames)))]


_COLOR_NAMES = (
    ("red", (0.8, 0.15, 0.15)),
    ("green", (0.15, 0.7, 0.2)),
    ("blue", (0.2, 0.3, 0.85)),
    ("yellow", (0.9, 0.85, 0.2)),
    ("orange", (0.95, 0.55, 0.15)),
    ("purple", (0.55, 0.25, 0.7)),
    ("white", (0.9, 0.9, 0.9)),
    ("gray", (0.5, 0.5, 0.5)),
)


def _nearest_color_name(rgb) -> str:
    rgb = np.asarray(rgb, dtype=np.float64)
    dists = [np.sum((rgb - np.asarray(c)) ** 2) for _, c in _COLOR_NAMES]
    return _COLOR_NAMES[int(np.argmin(dists))][0]


def rule_based_caption(scene, rng: np.random.Generator) -> str:
    """Offline stand-in for a multimodal captioner: describes one scene object."""
    obj = scene.objects[int(rng.integers(0, len(scene.objects)))]
    color = _nearest_color_name(obj.albedo)
    verb = ["slides sideways", "drifts across the ground", "shifts and turns"][
        int(rng.integers(0, 3))
    ]
    return "the %s %s %s" % (color, obj.kind, verb)


class SubprocessVideoPlugin:
    """Runs a command per request; JSON request on stdin, response on stdout."""

    def __init__(self, command):
        self.command = list(command)

    def generate(self, request: dict) -> list:
        try:
            proc = subprocess.run(
                self.command,
                input=json.dumps(request).encode("utf-8"),
                stdout=subprocess.PIPE,
                timeout=600,
                check=True,
            )
        except (subprocess.SubprocessError, OSError) as exc:
            raise PluginError("plugin process failed: %s" % exc) from exc
        return _parse_response(proc.stdout)


class HTTPVideoPlugin:
    """POSTs the request JSON to an HTTP endpoint."""

    def __init__(self, endpoint: str):
        self.endpoint = endpoint

    def generate(self, request: dict) -> list:
        req = urllib.request.Request(
            self.endpoint,
            data=json.dumps(request).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=600) as resp:
                body = resp.read()
        except OSError as exc:
            raise PluginError("plugin endpoint unreachable: %s" % exc) from exc
        return _parse_response(body)


def _parse_response(body: bytes) -> list:
    try:
        payload = json.loads(body.decode("utf-8"))
        paths = payload["frame_paths"]
    except (ValueError, KeyError) as exc:
        raise PluginError("malformed plugin response") from exc
    if not isinstance(paths, list) or not paths:
        raise PluginError("plugin returned no frames")
    return [str(p) for p in paths]


@dataclass
class PluginJobLog:
    """Per-record accounting of plugin calls; serialized next to the dataset."""

    prompt: str = ""
    views: list = field(default_factory=list)  # {"view", "candidates", "retries"}
    skipped: bool = False
    reason: str = ""

    def to_json_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "views": self.views,
            "skipped": self.skipped,
            "reason": self.reason,
        }


def _call_with_retry(plugin, request, log_entry):
    try:
        return plugin.generate(request)
    except PluginError:
        log_entry["retries"] += 1
    return plugin.generate(request)  # second failure propagates


def augment_capture_via_plugin(
    record,
    plugin,
    config: VideoPluginConfig,
    rng: np.random.Generator,
    workdir,
    captioner=None,
    kind: str = "dynamics",
):
    """Replace a record's inconsistent images with plugin-generated frames.

    One prompt is sampled per record and reused for every view.  Each view
    requests ``videos_per_capture`` videos of ``frames_per_video`` frames and
    draws one frame uniformly from the pooled candidates.  A failed view is
    retried once; a second failure skips the whole record (RecordSkipped) so
    consistent frames are never silently passed off as inconsistent ones.

    Returns ``(record, job_log)``.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    log = PluginJobLog()
    if kind == "dynamics":
        if captioner is None:
            captioner = lambda image, meta: rule_based_caption(record.scene, rng)
        rep_view = int(rng.integers(0, len(record.consistent)))
        caption = captioner(record.consistent[rep_view], CAPTION_META_PROMPT)
        prompt = build_dynamics_prompt(caption)
    else:
        prompt = sample_lighting_prompt(rng)
    log.prompt = prompt.positive

    new_inconsistent = [record.consistent[0].copy()]
    new_states = [0]
    try:
        for i in range(1, len(record.consistent)):
            image_path = workdir / ("cond_view_%02d.png" % i)
            io_png.write_rgb8(image_path, record.consistent[i])
            request = {
                "image_path": str(image_path),
                "positive_prompt": prompt.positive,
                "negative_prompt": prompt.negative,
                "num_frames": config.frames_per_video,
                "sampling_steps": config.sampling_steps,
                "guidance_weight": config.guidance_weight,
            }
            entry = {"view": i, "candidates": 0, "retries": 0}
            candidates = []
            for _ in range(config.videos_per_capture):
                candidates.extend(_call_with_retry(plugin, request, entry))
            entry["candidates"] = len(candidates)
            log.views.append(entry)
            chosen = select_inconsistent_frame(candidates, rng)
            new_inconsistent.append(io_png.read_rgb8(chosen).astype(np.float64))
            new_states.append(1)
    except PluginError as exc:
        log.skipped = True
        log.reason = str(exc)
        raise RecordSkipped("plugin failed twice for a view: %s" % exc) from exc

    out = replace(
        record,
        inconsistent=new_inconsistent,
        states=new_states,
        kind=kind,
        prompt=prompt.positive,
    )
    return out, log
