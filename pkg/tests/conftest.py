import numpy as np
import pytest

from kvflow.dit import Conditioning, DiTConfig, init_weights
from kvflow.synth import SyntheticVideoSpec, gen_synthetic_video
from kvflow.tensors import F32


@pytest.fixture(scope="session")
def small_config():
    return DiTConfig(
        num_layers=2,
        d_model=16,
        num_heads=2,
        frames=2,
        height=4,
        width=4,
        channels=3,
        time_dim=8,
        mlp_ratio=2,
    )


@pytest.fixture(scope="session")
def small_weights(small_config):
    return init_weights(small_config, 7)


@pytest.fixture(scope="session")
def small_video(small_config):
    spec = SyntheticVideoSpec(
        frames=small_config.frames,
        height=small_config.height,
        width=small_config.width,
        channels=small_config.channels,
        motif_size=1,
        motif_start=(1, 1),
        velocity=(0.5, 0.5),
        seed=7,
    )
    return gen_synthetic_video(spec)


@pytest.fixture(scope="session")
def small_src_cond(small_config, small_video):
    return Conditioning(small_video[0], np.zeros(small_config.d_model, dtype=F32))
