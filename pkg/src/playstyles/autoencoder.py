"""CNN-BiLSTM sequence autoencoder over frame tensors.

Encoder: a time-agnostic frame encoder (two Conv/MaxPool/GELU blocks, shared
across timesteps) followed by two stacked bidirectional LSTM layers; the
latent vector concatenates the final forward and backward hidden states of
the top layer (half the latent size from each direction).

Decoder: the latent is repeated once per output step, passed through two
BiLSTM layers, projected per step, reshaped, and upsampled by a time-agnostic
transpose CNN; the head emits probabilities per categorical channel group
(softmax) and [0,1] predictions for numeric channels (sigmoid).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import codec
from .dataset import scheme_channels

_EPS = 1e-12


def channel_groups(scheme: str) -> tuple[list[tuple[int, int]], list[int]]:
    """(categorical group spans, numeric channel indices) for a scheme."""
    obs_groups = [(codec.OBS_OWNER, codec.OBS_OWNER + 3),
                  (codec.OBS_KIND, codec.OBS_KIND + 8),
                  (codec.OBS_ACTION, codec.OBS_ACTION + 6)]
    obs_numeric = [codec.OBS_HP, codec.OBS_RESOURCES]
    act_groups = [(codec.ACT_TYPE, codec.ACT_TYPE + 6),
                  (codec.ACT_DIRECTION, codec.ACT_DIRECTION + 4),
                  (codec.ACT_PRODUCE, codec.ACT_PRODUCE + 7)]
    act_numeric = [codec.ACT_ATTACK_DX, codec.ACT_ATTACK_DY]
    if scheme == "states":
        return obs_groups, obs_numeric
    if scheme == "actions":
        return act_groups, act_numeric
    if scheme == "joint":
        off = codec.OBS_CHANNELS
        return (obs_groups + [(s + off, e + off) for s, e in act_groups],
                obs_numeric + [c + off for c in act_numeric])
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class ModelConfig:
    scheme: str = "actions"
    seq_len: int = 32
    grid: int = 12
    latent: int = 1024
    conv_widths: tuple[int, int] = (32, 64)
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 50
    patience: int = 10
    seed: int = 0
    cat_weight: float = 1.0
    num_weight: float = 1.0
    max_batches_per_epoch: int | None = None

    def __post_init__(self):
        if self.latent % 2:
            raise ValueError("latent size must be even (two LSTM directions)")
        if self.grid % 4:
            raise ValueError("grid must survive two 2x poolings")
        self.conv_widths = tuple(self.conv_widths)

    @property
    def channels(self) -> int:
        return scheme_channels(self.scheme)

    @property
    def hidden(self) -> int:
        return self.latent // 2

    @property
    def frame_dim(self) -> int:
        return (self.grid // 4) ** 2 * self.conv_widths[1]

    def to_dict(self) -> dict:
        return asdict(self)


class SequenceAutoencoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c, (w1, w2) = config.channels, config.conv_widths
        self.frame_encoder = nn.Sequential(
            nn.Conv2d(c, w1, 3, padding=1), nn.MaxPool2d(2), nn.GELU(),
            nn.Conv2d(w1, w2, 3, padding=1), nn.MaxPool2d(2), nn.GELU(),
            nn.Flatten(),
        )
        self.enc_lstm = nn.LSTM(config.frame_dim, config.hidden, num_layers=2,
                                bidirectional=True, batch_first=True)
        self.dec_lstm = nn.LSTM(config.latent, config.hidden, num_layers=2,
                                bidirectional=True, batch_first=True)
        self.dec_dense = nn.Linear(2 * config.hidden, config.frame_dim)
        self.frame_decoder = nn.Sequential(
            nn.ConvTranspose2d(w2, w1, 2, stride=2), nn.GELU(),
            nn.ConvTranspose2d(w1, c, 2, stride=2),
        )
        self.groups, self.numeric = channel_groups(config.scheme)

    # -- encoder ---------------------------------------------------------

    def frame_embeddings(self, x: torch.Tensor) -> torch.Tensor:
        """(B, T, H, W, C) -> (B, T, frame_dim); weights shared across T."""
        b, t, h, w, c = x.shape
        self._check_frame_shape(h, w, c)
        flat = x.reshape(b * t, h, w, c).permute(0, 3, 1, 2)
        return self.frame_encoder(flat).reshape(b, t, -1)

    def frame_encode(self, frame) -> np.ndarray:
        """Embed a single (H, W, C) frame."""
        tensor = torch.as_tensor(np.asarray(frame), dtype=next(self.parameters()).dtype)
        with torch.no_grad():
            return self.frame_embeddings(tensor[None, None])[0, 0].numpy()

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """(B, T, H, W, C) -> (B, latent): top-layer final states, both directions."""
        if x.shape[1] != self.config.seq_len:
            raise ValueError(
                f"expected {self.config.seq_len} frames, got {x.shape[1]}")
        frames = self.frame_embeddings(x)
        _, (h_n, _) = self.enc_lstm(frames)
        return torch.cat([h_n[-2], h_n[-1]], dim=1)

    # -- decoder -----------------------------------------------------------

    def decode(self, z: torch.Tensor, length: int | None = None) -> torch.Tensor:
        """(B, latent) -> (B, T, H, W, C) probabilities/numeric predictions."""
        if z.shape[-1] != self.config.latent:
            raise ValueError(f"expected latent size {self.config.latent}, got {z.shape[-1]}")
        t = length or self.config.seq_len
        b = z.shape[0]
        repeated = z[:, None, :].expand(b, t, z.shape[-1])
        out, _ = self.dec_lstm(repeated)
        frames = self.dec_dense(out)
        side = self.config.grid // 4
        maps = frames.reshape(b * t, side, side, self.config.conv_widths[1])
        raw = self.frame_decoder(maps.permute(0, 3, 1, 2))
        raw = raw.permute(0, 2, 3, 1).reshape(
            b, t, self.config.grid, self.config.grid, self.config.channels)
        return self._heads(raw)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(x), x.shape[1])

    def _heads(self, raw: torch.Tensor) -> torch.Tensor:
        out = torch.empty_like(raw)
        for s, e in self.groups:
            out[..., s:e] = torch.softmax(raw[..., s:e], dim=-1)
        for ch in self.numeric:
            out[..., ch] = torch.sigmoid(raw[..., ch])
        return out

    def _check_frame_shape(self, h, w, c):
        want = (self.config.grid, self.config.grid, self.config.channels)
        if (h, w, c) != want:
            raise ValueError(f"frame shape {(h, w, c)} != expected {want}")


def reconstruction_loss(reconstruction: torch.Tensor, target: torch.Tensor,
                        scheme: str, cat_weight: float = 1.0,
                        num_weight: float = 1.0) -> torch.Tensor:
    """Cross-entropy per categorical group summed over cells, plus squared
    numeric error normalized by the full channel count; both averaged over
    batch and time."""
    if reconstruction.shape != target.shape:
        raise ValueError(f"shape mismatch {reconstruction.shape} vs {target.shape}")
    groups, numeric = channel_groups(scheme)
    b, t = target.shape[0], target.shape[1]
    h, w, c = target.shape[2], target.shape[3], target.shape[4]
    cat = reconstruction.new_zeros(())
    for s, e in groups:
        logp = torch.log(reconstruction[..., s:e].clamp_min(_EPS))
        cat = cat - (target[..., s:e] * logp).sum()
    cat = cat / (b * t)
    num = reconstruction.new_zeros(())
    for ch in numeric:
        num = num + ((reconstruction[..., ch] - target[..., ch]) ** 2).sum()
    num = num / (b * t * h * w * c)
    return cat_weight * cat + num_weight * num


def categorical_accuracy(reconstruction: torch.Tensor, target: torch.Tensor,
                         scheme: str) -> float:
    """Fraction of (cell, group) slots whose argmax matches the target,
    counted only where the target group is actually one-hot."""
    groups, _ = channel_groups(scheme)
    correct = total = 0
    for s, e in groups:
        present = target[..., s:e].sum(-1) > 0.5
        pred = reconstruction[..., s:e].argmax(-1)
        true = target[..., s:e].argmax(-1)
        correct += ((pred == true) & present).sum().item()
        total += present.sum().item()
    return correct / max(total, 1)


# -- training ---------------------------------------------------------------


class BatchSource:
    """Batches of scheme frames from in-memory samples or a sharded split."""

    def __init__(self, data, scheme: str, batch_size: int, *,
                 augment: bool = False, rng: np.random.Generator | None = None):
        self.data = data
        self.scheme = scheme
        self.batch_size = batch_size
        self.augment = augment
        self.rng = rng or np.random.default_rng(0)

    def __len__(self):
        samples = getattr(self.data, "samples", None)
        return len(samples) if samples is not None else len(self.data)

    def _assemble(self, obs: np.ndarray, act: np.ndarray) -> np.ndarray:
        if self.augment:
            flips = self.rng.random((obs.shape[0], 2)) < 0.5
            obs = obs.copy()
            act = act.copy()
            for i, (fh, fv) in enumerate(flips):
                if fh or fv:
                    obs[i] = codec.mirror_observation(obs[i], fh, fv)
                    act[i] = codec.mirror_actions(act[i], fh, fv)
        from .dataset import scheme_frames
        return scheme_frames(obs, act, self.scheme)

    def batches(self):
        samples = getattr(self.data, "samples", None)
        if samples is not None:  # in-memory SampleSet
            order = self.rng.permutation(len(samples))
            for start in range(0, len(order), self.batch_size):
                idx = order[start:start + self.batch_size]
                obs = np.stack([samples[i].observations for i in idx]).astype(np.float32)
                act = np.stack([samples[i].actions for i in idx]).astype(np.float32)
                yield self._assemble(obs, act)
            return
        shard_names = sorted(self.data.by_shard)  # ShardedSplit
        order = [shard_names[i] for i in self.rng.permutation(len(shard_names))]
        for _, obs, act in self.data.shards(order):
            perm = self.rng.permutation(obs.shape[0])
            for start in range(0, len(perm), self.batch_size):
                idx = perm[start:start + self.batch_size]
                yield self._assemble(obs[idx], act[idx])


@dataclass
class TrainResult:
    model: SequenceAutoencoder
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf


def train(config: ModelConfig, train_data, val_data,
          log=print) -> TrainResult:
    """Fit the autoencoder; keeps the best-validation weights.

    `train_data`/`val_data` are SampleSets or ShardedSplits.  Mirror
    augmentation is applied to training batches only.  Aborts on non-finite
    loss.
    """
    torch.manual_seed(config.seed)
    model = SequenceAutoencoder(config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    train_src = BatchSource(train_data, config.scheme, config.batch_size,
                            augment=getattr(train_data, "augment", True), rng=rng)
    val_src = BatchSource(val_data, config.scheme, config.batch_size,
                          augment=False, rng=np.random.default_rng(config.seed + 1))
    if len(train_src) == 0 or len(val_src) == 0:
        raise ValueError("train and val sets must be nonempty")
    result = TrainResult(model)
    best_state = None
    stale = 0
    for epoch in range(config.epochs):
        model.train()
        total = count = 0.0
        for i, batch in enumerate(train_src.batches()):
            if (config.max_batches_per_epoch is not None
                    and i >= config.max_batches_per_epoch):
                break
            x = torch.from_numpy(batch)
            optimizer.zero_grad()
            loss = reconstruction_loss(model(x), x, config.scheme,
                                       config.cat_weight, config.num_weight)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch} batch {i} "
                    f"(lr={config.lr}, scheme={config.scheme})")
            loss.backward()
            optimizer.step()
            total += loss.item() * x.shape[0]
            count += x.shape[0]
        train_loss = total / count
        val_loss = evaluate(model, val_src)
        result.history.append({"epoch": epoch, "train_loss": train_loss,
                               "val_loss": val_loss})
        if log:
            log(f"epoch {epoch}: train {train_loss:.4f} val {val_loss:.4f}")
        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return result


def evaluate(model: SequenceAutoencoder, source: BatchSource) -> float:
    model.eval()
    total = count = 0.0
    with torch.no_grad():
        for batch in source.batches():
            x = torch.from_numpy(batch)
            loss = reconstruction_loss(model(x), x, model.config.scheme,
                                       model.config.cat_weight,
                                       model.config.num_weight)
            total += loss.item() * x.shape[0]
            count += x.shape[0]
    return total / count


def encode_frames(model: SequenceAutoencoder, frames: np.ndarray,
                  batch_size: int = 64) -> np.ndarray:
    """(N, T, H, W, C) -> (N, latent) without gradients."""
    model.eval()
    out = []
    with torch.no_grad():
        for start in range(0, frames.shape[0], batch_size):
            x = torch.from_numpy(frames[start:start + batch_size].astype(np.float32))
            out.append(model.encode(x).numpy())
    return np.concatenate(out) if out else np.empty((0, model.config.latent))


def save_checkpoint(result: TrainResult, path: str | Path) -> None:
    payload = {"config": result.model.config.to_dict(),
               "state_dict": result.model.state_dict(),
               "history": result.history,
               "best_epoch": result.best_epoch,
               "best_val_loss": result.best_val_loss}
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> TrainResult:
    payload = torch.load(path, weights_only=False)
    config = ModelConfig(**payload["config"])
    model = SequenceAutoencoder(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return TrainResult(model, payload["history"], payload["best_epoch"],
                       payload["best_val_loss"])
