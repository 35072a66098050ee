"""Shared fixtures: small scenes and records reused across test modules."""

import numpy as np
import pytest

from simvs.seeding import rng_for
from simvs.worldsim import sample_record, sample_scene


@pytest.fixture(scope="session")
def small_scene():
    return sample_scene(rng_for(7, "scene/fixture"), scene_seed=7)


@pytest.fixture(scope="session")
def dynamics_record(small_scene):
    return sample_record(small_scene, 8, "dynamics", rng_for(7, "record/dyn"),
                         resolution=32)


@pytest.fixture(scope="session")
def lighting_record(small_scene):
    return sample_record(small_scene, 8, "lighting", rng_for(7, "record/light"),
                         resolution=32)


@pytest.fixture(scope="session")
def consistent_record(small_scene):
    return sample_record(small_scene, 8, "none", rng_for(7, "record/none"),
                         resolution=32)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
