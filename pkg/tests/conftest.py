import numpy as np
import pytest

from posekit.autoencoder import PoseAutoencoder
from posekit.bvh import parse_bvh
from posekit.dataset import PoseDataset
from posekit.skeleton import JointMapping, retarget
from posekit.solver import LatentSolver, SolverSystem
from posekit.synth import generate_clip

HANDS = (8, 12)
ANKLES = (15, 19)
HEAD = (4,)


def make_clips(n_clips, n_frames, seed=0):
    clips = []
    for i in range(n_clips):
        text = generate_clip(seed=seed * 1000 + i, n_frames=n_frames)
        clips.append(
            retarget(parse_bvh(text), JointMapping.identity(), source_id=f"synth{i}")
        )
    return clips


@pytest.fixture(scope="session")
def small_dataset():
    """A few hundred poses; enough for plumbing tests."""
    return PoseDataset.build(make_clips(8, 120, seed=7), seed=0)


@pytest.fixture(scope="session")
def desk_dataset():
    """Desk-scale corpus: >=10k poses across 30 clips, 95/5 clip split."""
    ds = PoseDataset.build(make_clips(30, 400, seed=3), seed=0)
    assert ds.n_poses >= 10_000
    assert ds.validation_poses().shape[0] > 0
    return ds


@pytest.fixture(scope="session")
def desk_autoencoder(desk_dataset):
    """Paper-schedule training: 20 epochs, batch 256, lr 1e-4."""
    return PoseAutoencoder(seed=11).fit(desk_dataset)


@pytest.fixture(scope="session")
def desk_system(desk_dataset, desk_autoencoder):
    """Trained system with the standard solver catalog: hands, ankles, head."""
    solvers = [
        LatentSolver(target_joints=joints, seed=20 + i).fit(
            desk_dataset, desk_autoencoder
        )
        for i, joints in enumerate((HANDS, ANKLES, HEAD))
    ]
    return SolverSystem(desk_autoencoder, desk_dataset.stats, solvers)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
