"""Multiview diffusion harmonization model: conditioning, loss, training, sampling."""

from .codec import LatentCodec  # noqa: F401
from .schedule import DiffusionSchedule, cosine_schedule  # noqa: F401
from .batch import HarmonizationBatch, pack_batch  # noqa: F401
from .model import DenoiserModel, ModelConfig  # noqa: F401
from .train import TrainConfig, train, training_loss  # noqa: F401
from .sampling import sample  # noqa: F401
