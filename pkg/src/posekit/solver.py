"""Latent-space IK solvers: per-target-set networks plus sequential composition.

A solver instance is trained for one fixed set of target joints. It maps
(latent code, normalized target positions) to a new latent code; larger
target sets are handled by running several instances in sequence on the
latent code before a single decode.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from posekit import nn
from posekit.autoencoder import PoseAutoencoder, TrainingDiverged
from posekit.dataset import NormStats, PoseDataset, denormalize, normalize
from posekit.fabrik import bone_length_postprocess
from posekit.skeleton import (
    NUM_JOINTS,
    POSE_DIM,
    SkeletonTopology,
    bone_lengths,
    canonical_topology,
)

REST_WEIGHT = 0.01  # relative weight of non-target joints in the solver loss


@dataclass(frozen=True)
class TargetSpec:
    """Joints a solver should drive, with their 3D targets (meters,
    root-relative)."""

    joint_indices: tuple[int, ...]
    positions: np.ndarray  # (n, 3)

    def __post_init__(self):
        idx = self.joint_indices
        if len(idx) == 0 or len(set(idx)) != len(idx):
            raise ValueError("target joints must be non-empty and distinct")
        if any(not 0 <= j < NUM_JOINTS for j in idx):
            raise ValueError(f"joint indices must be < {NUM_JOINTS}")
        pos = np.asarray(self.positions, dtype=np.float64).reshape(len(idx), 3)
        if not np.all(np.isfinite(pos)):
            raise ValueError("target positions must be finite")
        object.__setattr__(self, "positions", pos)


def target_columns(joint_indices: tuple[int, ...] | list[int]) -> np.ndarray:
    """Flat pose-vector column indices of the given joints (3 per joint)."""
    return np.array([3 * j + a for j in joint_indices for a in range(3)])


def solver_loss(
    x_hat: np.ndarray,
    x_prime: np.ndarray,
    target_joints: tuple[int, ...],
    k: float = REST_WEIGHT,
) -> tuple[float, np.ndarray]:
    """Weighted two-part MSE: full weight on target-joint coordinates,
    k on the rest. Returns (loss, gradient w.r.t. x_hat)."""
    if len(target_joints) == 0 or len(target_joints) >= NUM_JOINTS:
        raise ValueError("target joints must be a non-empty proper subset")
    p = np.atleast_2d(np.asarray(x_hat))
    t = np.atleast_2d(np.asarray(x_prime))
    if p.shape != t.shape or p.shape[1] != POSE_DIM:
        raise ValueError("pose shapes must match and have 63 features")
    cols = target_columns(target_joints)
    rest = np.setdiff1d(np.arange(POSE_DIM), cols)
    loss_t, grad_t = nn.mse(p[:, cols], t[:, cols])
    loss_r, grad_r = nn.mse(p[:, rest], t[:, rest])
    grad = np.zeros_like(p, dtype=np.float64)
    grad[:, cols] = grad_t
    grad[:, rest] = k * grad_r
    loss = loss_t + k * loss_r
    if np.asarray(x_hat).ndim == 1:
        grad = grad[0]
    return loss, grad


class LatentSolver:
    """Estimator for one fixed target-joint set.

    fit() trains against a frozen autoencoder; predict() maps latent codes
    and normalized targets to new latent codes.
    """

    def __init__(
        self,
        target_joints: tuple[int, ...],
        hidden_width: int = 126,
        hidden_layers: int = 3,
        latent_dim: int = 64,
        epochs: int = 5,
        batch_size: int = 256,
        learning_rate: float = 1e-4,
        k: float = REST_WEIGHT,
        seed: int = 0,
    ):
        target_joints = tuple(int(j) for j in target_joints)
        if len(target_joints) == 0 or len(set(target_joints)) != len(target_joints):
            raise ValueError("target joints must be non-empty and distinct")
        self.target_joints = target_joints
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.latent_dim = latent_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.k = k
        self.seed = seed
        self.model_: nn.MlpModel | None = None
        self.loss_history_: list[dict] = []
        self.stats_hash_: str | None = None

    _PARAM_NAMES = (
        "target_joints",
        "hidden_width",
        "hidden_layers",
        "latent_dim",
        "epochs",
        "batch_size",
        "learning_rate",
        "k",
        "seed",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "LatentSolver":
        for key, value in params.items():
            if key not in self._PARAM_NAMES:
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    @property
    def n_targets(self) -> int:
        return len(self.target_joints)

    @property
    def input_dim(self) -> int:
        return self.latent_dim + 3 * self.n_targets

    def _check_fitted(self):
        if self.model_ is None:
            raise RuntimeError("solver is not fitted")

    def fit(self, dataset: PoseDataset, autoencoder: PoseAutoencoder) -> "LatentSolver":
        """Train on same-clip (x, x') pairs. The autoencoder stays frozen:
        gradients flow through its decoder into this solver only."""
        if autoencoder.model_ is None:
            raise ValueError("autoencoder must be fitted first")
        rng = np.random.default_rng(self.seed)
        dims = [self.input_dim] + [self.hidden_width] * self.hidden_layers + [
            self.latent_dim
        ]
        self.model_ = nn.make_mlp(dims, ["relu"] * self.hidden_layers + ["linear"], rng)
        decoder = autoencoder.decoder_model()
        state = nn.AdamState.for_parameters(
            self.model_.parameters(), learning_rate=self.learning_rate
        )
        cols = target_columns(self.target_joints)
        n = dataset.train_poses().shape[0]
        steps_per_epoch = max(1, n // self.batch_size)
        self.loss_history_ = []
        for epoch in range(self.epochs):
            total = 0.0
            for step in range(steps_per_epoch):
                x, x_prime, _ = dataset.sample_training_pairs(rng, self.batch_size)
                xn = normalize(x, dataset.stats)
                xpn = normalize(x_prime, dataset.stats)
                z = autoencoder.transform(xn)
                inputs = np.concatenate([z, xpn[:, cols]], axis=1)
                z_hat, solver_cache = nn.forward(self.model_, inputs)
                x_hat, dec_cache = nn.forward(decoder, z_hat)
                loss, grad = solver_loss(x_hat, xpn, self.target_joints, self.k)
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite solver loss at epoch {epoch}, step {step}"
                    )
                _, dz = nn.backward(decoder, dec_cache, grad)
                grads, _ = nn.backward(self.model_, solver_cache, dz)
                self.model_.set_parameters(
                    nn.adam_step(self.model_.parameters(), grads, state)
                )
                total += loss
            self.loss_history_.append(
                {"epoch": epoch, "train_loss": total / steps_per_epoch}
            )
        self.stats_hash_ = stats_hash(dataset.stats)
        return self

    def predict(self, z: np.ndarray, targets_norm: np.ndarray) -> np.ndarray:
        """Latent codes (n, 64) + normalized targets (n, 3n_t) -> new codes."""
        self._check_fitted()
        z = np.atleast_2d(np.asarray(z, dtype=np.float32))
        t = np.atleast_2d(np.asarray(targets_norm, dtype=np.float32))
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"expected latent dim {self.latent_dim}, got {z.shape[1]}")
        if t.shape[1] != 3 * self.n_targets:
            raise ValueError(
                f"expected {3 * self.n_targets} target values, got {t.shape[1]}"
            )
        out, _ = nn.forward(self.model_, np.concatenate([z, t], axis=1))
        return out

    def save(self, path: str) -> None:
        """Weight blob plus a text sidecar (<path>.meta) recording the
        target joints, rest weight, and normalization-stats hash."""
        self._check_fitted()
        with open(path, "wb") as f:
            f.write(nn.save_weights(self.model_))
        with open(path + ".meta", "w") as f:
            f.write(f"target_joints = {','.join(map(str, self.target_joints))}\n")
            f.write(f"k = {self.k}\n")
            f.write(f"stats_hash = {self.stats_hash_ or ''}\n")

    @classmethod
    def load(cls, path: str) -> "LatentSolver":
        with open(path, "rb") as f:
            model = nn.load_weights(f.read())
        meta: dict[str, str] = {}
        with open(path + ".meta") as f:
            for line in f:
                if "=" in line:
                    key, value = line.split("=", 1)
                    meta[key.strip()] = value.strip()
        joints = tuple(int(v) for v in meta["target_joints"].split(","))
        solver = cls(
            target_joints=joints,
            hidden_width=model.layers[0].weights.shape[0],
            hidden_layers=len(model.layers) - 1,
            latent_dim=model.output_dim,
            k=float(meta.get("k", REST_WEIGHT)),
        )
        if model.input_dim != solver.input_dim:
            raise ValueError(
                f"weight file input width {model.input_dim} does not match "
                f"{len(joints)} target joints"
            )
        solver.model_ = model
        solver.stats_hash_ = meta.get("stats_hash") or None
        return solver


def stats_hash(stats: NormStats) -> str:
    payload = stats.mean.astype("<f4").tobytes() + stats.std.astype("<f4").tobytes()
    return hashlib.sha256(payload).hexdigest()[:16]


class SolverSystem:
    """A trained autoencoder, its normalization stats, and a catalog of
    solver instances keyed by target-joint set. The interactive solve
    pipeline lives here."""

    def __init__(
        self,
        autoencoder: PoseAutoencoder,
        stats: NormStats,
        solvers: list[LatentSolver],
        topology: SkeletonTopology | None = None,
    ):
        self.autoencoder = autoencoder
        self.stats = stats
        self.solvers = {tuple(sorted(s.target_joints)): s for s in solvers}
        self.topology = topology or canonical_topology()

    def solver_for(self, joint_indices: tuple[int, ...]) -> LatentSolver:
        key = tuple(sorted(int(j) for j in joint_indices))
        if key not in self.solvers:
            raise KeyError(f"no solver trained for joint set {key}")
        return self.solvers[key]

    def catalog(self) -> list[tuple[int, ...]]:
        return sorted(self.solvers.keys())

    def _normalize_targets(self, solver: LatentSolver, spec: TargetSpec) -> np.ndarray:
        # Target coordinates share the per-feature stats of the pose
        # features they replace, keeping solver inputs on one scale.
        flat = np.empty(3 * solver.n_targets, dtype=np.float64)
        order = {j: i for i, j in enumerate(spec.joint_indices)}
        for slot, j in enumerate(solver.target_joints):
            flat[3 * slot : 3 * slot + 3] = spec.positions[order[j]]
        cols = target_columns(solver.target_joints)
        return ((flat - self.stats.mean[cols]) / self.stats.std[cols]).astype(
            np.float32
        )

    def solve(
        self,
        pose: np.ndarray,
        specs: list[TargetSpec],
        post_process: bool = False,
    ) -> np.ndarray:
        """Sequential latent composition: one encode, one solver pass per
        spec in order, one decode, optional bone-length restoration using
        the input pose's own bone lengths."""
        pose = np.asarray(pose, dtype=np.float64).reshape(POSE_DIM)
        if not specs:
            return pose.astype(np.float32)
        seen: set[int] = set()
        for spec in specs:
            overlap = seen.intersection(spec.joint_indices)
            if overlap:
                raise ValueError(f"target joint sets overlap on {sorted(overlap)}")
            seen.update(spec.joint_indices)
        chain = [(self.solver_for(s.joint_indices), s) for s in specs]
        z = self.autoencoder.transform(normalize(pose, self.stats))
        for solver, spec in chain:
            z = solver.predict(z, self._normalize_targets(solver, spec)[None, :])
        out = denormalize(self.autoencoder.inverse_transform(z)[0], self.stats)
        out = out.astype(np.float64)
        if post_process:
            lengths = bone_lengths(pose, self.topology)
            out = bone_length_postprocess(out, lengths, self.topology)
        return out.astype(np.float32)

    # -- persistence ------------------------------------------------------
    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        self.autoencoder.save(os.path.join(directory, "autoencoder.npw"))
        with open(os.path.join(directory, "stats.json"), "w") as f:
            json.dump(
                {
                    "mean": [float(v) for v in self.stats.mean],
                    "std": [float(v) for v in self.stats.std],
                },
                f,
            )
        for key, solver in self.solvers.items():
            name = "solver_" + "_".join(map(str, key)) + ".npw"
            solver.save(os.path.join(directory, name))

    @classmethod
    def load(cls, directory: str) -> "SolverSystem":
        ae = PoseAutoencoder.load(os.path.join(directory, "autoencoder.npw"))
        with open(os.path.join(directory, "stats.json")) as f:
            raw = json.load(f)
        stats = NormStats(
            mean=np.array(raw["mean"], dtype=np.float32),
            std=np.array(raw["std"], dtype=np.float32),
        )
        solvers = []
        for entry in sorted(os.listdir(directory)):
            if entry.startswith("solver_") and entry.endswith(".npw"):
                solvers.append(LatentSolver.load(os.path.join(directory, entry)))
        return cls(autoencoder=ae, stats=stats, solvers=solvers)

    def weight_footprint_bytes(self) -> int:
        """Serialized size of every weight file in the system."""
        total = len(nn.save_weights(self.autoencoder.model_))
        for solver in self.solvers.values():
            total += len(nn.save_weights(solver.model_))
        return total


def solve_pose(
    pose: np.ndarray,
    spec: TargetSpec,
    system: SolverSystem,
    post_process: bool = False,
) -> np.ndarray:
    """One-spec solve through the full pipeline."""
    return system.solve(pose, [spec], post_process=post_process)


def compose_solvers(
    pose: np.ndarray,
    specs: list[TargetSpec],
    system: SolverSystem,
    post_process: bool = False,
) -> np.ndarray:
    """Sequential multi-spec solve; specs' joint sets must be disjoint."""
    return system.solve(pose, specs, post_process=post_process)
