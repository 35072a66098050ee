"""Procedural multiview scene simulator: paired consistent/inconsistent renders."""

from .scene import (  # noqa: F401
    DirectionalLight,
    GroundPlane,
    MultiviewRecord,
    Primitive,
    SceneSpec,
    SceneState,
    apply_state,
    sample_record,
    sample_scene,
    sample_state_family,
)
from .render import render, render_aux, silhouette_mask  # noqa: F401
