"""posekit: data-driven character pose editing.

Learns skeleton constraints from motion-capture data. A tied-weight
autoencoder builds a latent pose space and small solver networks generate
plausible poses reaching user-specified joint targets, with FABRIK as a
baseline and a bone-length post-process.
"""

from posekit.bvh import BvhClip, BvhJoint, forward_kinematics, parse_bvh
from posekit.skeleton import (
    NUM_JOINTS,
    POSE_DIM,
    SkeletonTopology,
    bone_lengths,
    canonical_topology,
    retarget,
    to_root_relative,
)
from posekit.dataset import NormStats, PoseDataset, compute_stats, denormalize, normalize
from posekit.autoencoder import PoseAutoencoder
from posekit.solver import LatentSolver, TargetSpec, compose_solvers, solve_pose
from posekit.fabrik import (
    FabrikConfig,
    KinematicChain,
    bone_length_postprocess,
    fabrik_solve_chain,
    fabrik_solve_fullbody,
)

__all__ = [
    "BvhClip",
    "BvhJoint",
    "parse_bvh",
    "forward_kinematics",
    "NUM_JOINTS",
    "POSE_DIM",
    "SkeletonTopology",
    "canonical_topology",
    "retarget",
    "to_root_relative",
    "bone_lengths",
    "NormStats",
    "PoseDataset",
    "compute_stats",
    "normalize",
    "denormalize",
    "PoseAutoencoder",
    "LatentSolver",
    "TargetSpec",
    "solve_pose",
    "compose_solvers",
    "KinematicChain",
    "FabrikConfig",
    "fabrik_solve_chain",
    "fabrik_solve_fullbody",
    "bone_length_postprocess",
]

__version__ = "0.1.0"
