"""Tied-weight pose autoencoder establishing the latent pose space.

Encoder: 63 -> 200 -> 200 -> 64 (ReLU hidden, linear output). The decoder
is the exact reversed chain and borrows the transposed encoder matrices;
only its biases are independent parameters.
"""

from __future__ import annotations

import numpy as np

from posekit import nn
from posekit.dataset import PoseDataset, normalize
from posekit.skeleton import POSE_DIM


class TrainingDiverged(RuntimeError):
    pass


class PoseAutoencoder:
    """Estimator with a fit/transform surface.

    transform() encodes normalized poses into the latent space,
    inverse_transform() decodes latent codes back to normalized poses.
    """

    def __init__(
        self,
        hidden_width: int = 200,
        hidden_layers: int = 2,
        latent_dim: int = 64,
        epochs: int = 20,
        batch_size: int = 256,
        learning_rate: float = 1e-4,
        seed: int = 0,
        tied_decoder: bool = True,
    ):
        if latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if min(hidden_width, hidden_layers, epochs, batch_size) <= 0:
            raise ValueError("all hyperparameters must be positive")
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.latent_dim = latent_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.tied_decoder = tied_decoder
        self.model_: nn.MlpModel | None = None
        self.loss_history_: list[dict] = []

    # -- sklearn-compatible parameter plumbing ---------------------------
    _PARAM_NAMES = (
        "hidden_width",
        "hidden_layers",
        "latent_dim",
        "epochs",
        "batch_size",
        "learning_rate",
        "seed",
        "tied_decoder",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "PoseAutoencoder":
        for key, value in params.items():
            if key not in self._PARAM_NAMES:
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    # -- model construction ---------------------------------------------
    def _encoder_dims(self) -> list[int]:
        return [POSE_DIM] + [self.hidden_width] * self.hidden_layers + [self.latent_dim]

    def _build(self, rng: np.random.Generator) -> nn.MlpModel:
        dims = self._encoder_dims()
        acts = ["relu"] * self.hidden_layers + ["linear"]
        encoder = nn.make_mlp(dims, acts, rng)
        n_enc = len(encoder.layers)
        layers = list(encoder.layers)
        for k in range(n_enc):
            source = n_enc - 1 - k
            out_dim = dims[source]
            if self.tied_decoder:
                weights, tie = None, source
            else:
                in_dim = dims[source + 1]
                limit = np.sqrt(6.0 / (in_dim + out_dim))
                weights = rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(
                    np.float32
                )
                tie = None
            layers.append(
                nn.DenseLayer(
                    weights=weights,
                    bias=np.zeros(out_dim, dtype=np.float32),
                    activation="linear" if k == n_enc - 1 else "relu",
                    tie=tie,
                )
            )
        return nn.MlpModel(layers=layers)

    @property
    def _n_encoder_layers(self) -> int:
        return self.hidden_layers + 1

    def _partial_forward(self, x: np.ndarray, start: int, stop: int) -> np.ndarray:
        model = self.model_
        x = np.atleast_2d(np.asarray(x, dtype=np.float32))
        for i in range(start, stop):
            layer = model.layers[i]
            x = x @ model.weight_of(i).T + layer.bias
            if layer.activation == "relu":
                x = np.maximum(x, 0)
        return x

    # -- estimator surface ------------------------------------------------
    def fit(self, dataset: PoseDataset) -> "PoseAutoencoder":
        """Train on the dataset's normalized train split; records per-epoch
        mean train and validation reconstruction loss in loss_history_."""
        rng = np.random.default_rng(self.seed)
        self.model_ = self._build(rng)
        x_train = normalize(dataset.train_poses(), dataset.stats)
        if x_train.shape[0] == 0:
            raise ValueError("dataset has no training poses")
        x_val = normalize(dataset.validation_poses(), dataset.stats)
        state = nn.AdamState.for_parameters(
            self.model_.parameters(), learning_rate=self.learning_rate
        )
        self.loss_history_ = []
        n = x_train.shape[0]
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            total, seen = 0.0, 0
            for start in range(0, n, self.batch_size):
                batch = x_train[order[start : start + self.batch_size]]
                out, cache = nn.forward(self.model_, batch)
                loss, grad = nn.mse(out, batch)
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}, step {start // self.batch_size}"
                    )
                grads, _ = nn.backward(self.model_, cache, grad)
                self.model_.set_parameters(
                    nn.adam_step(self.model_.parameters(), grads, state)
                )
                total += loss * batch.shape[0]
                seen += batch.shape[0]
            entry = {"epoch": epoch, "train_loss": total / seen}
            if x_val.shape[0] > 0:
                val_out, _ = nn.forward(self.model_, x_val)
                entry["val_loss"] = nn.mse(val_out, x_val)[0]
            self.loss_history_.append(entry)
        return self

    def _check_fitted(self):
        if self.model_ is None:
            raise RuntimeError("autoencoder is not fitted")

    def transform(self, x_norm: np.ndarray) -> np.ndarray:
        """Encode normalized poses (n, 63) -> latent codes (n, 64)."""
        self._check_fitted()
        x = np.atleast_2d(np.asarray(x_norm))
        if x.shape[1] != POSE_DIM:
            raise ValueError(f"expected {POSE_DIM} features, got {x.shape[1]}")
        return self._partial_forward(x, 0, self._n_encoder_layers)

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        """Decode latent codes (n, 64) -> normalized poses (n, 63)."""
        self._check_fitted()
        z = np.atleast_2d(np.asarray(z))
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"expected {self.latent_dim} latent dims, got {z.shape[1]}")
        return self._partial_forward(
            z, self._n_encoder_layers, 2 * self._n_encoder_layers
        )

    def encode(self, x_norm: np.ndarray) -> np.ndarray:
        """Single normalized pose -> latent code."""
        return self.transform(x_norm)[0]

    def decode(self, z: np.ndarray) -> np.ndarray:
        """Single latent code -> normalized pose."""
        return self.inverse_transform(z)[0]

    def decoder_model(self) -> nn.MlpModel:
        """Standalone decoder sharing the live parameter arrays (matrices
        as transposed views), for gradient flow through a frozen decoder."""
        self._check_fitted()
        n_enc = self._n_encoder_layers
        layers = []
        for i in range(n_enc, 2 * n_enc):
            src = self.model_.layers[i]
            layers.append(
                nn.DenseLayer(
                    weights=self.model_.weight_of(i),
                    bias=src.bias,
                    activation=src.activation,
                )
            )
        return nn.MlpModel(layers=layers)

    # -- persistence ------------------------------------------------------
    def save(self, path: str) -> None:
        self._check_fitted()
        with open(path, "wb") as f:
            f.write(nn.save_weights(self.model_))

    @classmethod
    def load(cls, path: str) -> "PoseAutoencoder":
        with open(path, "rb") as f:
            model = nn.load_weights(f.read())
        n_layers = len(model.layers)
        if n_layers % 2 != 0:
            raise ValueError("autoencoder weight file must hold an even layer count")
        hidden_layers = n_layers // 2 - 1
        ae = cls(
            hidden_width=model.layers[0].weights.shape[0],
            hidden_layers=hidden_layers,
            latent_dim=model.weight_of(hidden_layers).shape[0],
            tied_decoder=model.layers[n_layers - 1].tie is not None,
        )
        ae.model_ = model
        return ae
