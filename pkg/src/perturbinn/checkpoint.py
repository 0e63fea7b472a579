"""Versioned model checkpoints: textual header plus raw float64 blocks.

The header is a single JSON line describing the architecture, every
parameter block's shape, and training metadata; the payload is the declared
blocks as little-endian 64-bit floats in order.  Loading validates the
version, the shapes, and the payload length, so truncated files fail loudly.
"""

import json

import numpy as np

from .network import MultiHeadModel, NetworkConfig

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint",
           "FORMAT_VERSION"]

MAGIC = b"PERTURBINN-CKPT"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, truncated, or incompatible checkpoint."""


def _config_to_dict(config):
    return dict(
        input_dim=config.input_dim,
        fourier_frequencies=[list(map(float, f))
                             for f in config.fourier_frequencies],
        hidden_layers=list(config.hidden_layers),
        activations=list(config.activations),
        latent_width=config.latent_width,
        state_components=config.state_components,
        seed=config.seed)


def _config_from_dict(d):
    return NetworkConfig(
        input_dim=d["input_dim"],
        fourier_frequencies=tuple(tuple(f) for f in d["fourier_frequencies"]),
        hidden_layers=tuple(d["hidden_layers"]),
        activations=tuple(d["activations"]),
        latent_width=d["latent_width"],
        state_components=d["state_components"],
        seed=d["seed"])


def save_checkpoint(model, path, preset=None):
    """Serialize backbone parameters and head weights with their metadata."""
    blocks = []
    for W, b in model.layers:
        blocks.extend([W, b])
    blocks.extend(model.head_weights)
    meta = {k: v for k, v in model.metadata.items() if k != "history"}
    header = dict(
        version=FORMAT_VERSION,
        config=_config_to_dict(model.config),
        preset=preset,
        n_layers=len(model.layers),
        n_heads=len(model.head_weights),
        shapes=[list(b.shape) for b in blocks],
        head_losses=[float(x) for x in model.head_losses],
        metadata=meta)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" v%d\n" % FORMAT_VERSION)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for block in blocks:
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())
    return path


def load_checkpoint(path):
    """Rebuild a model; outputs are bit-identical to the saved network's."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if not magic.startswith(MAGIC):
            raise CheckpointError(f"{path}: not a model checkpoint")
        try:
            version = int(magic.split(b"v")[-1])
        except ValueError as exc:
            raise CheckpointError(f"{path}: malformed version line") from exc
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: format version {version} is not "
                                  f"supported (expected {FORMAT_VERSION})")
        try:
            header = json.loads(fh.readline().decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: unreadable header") from exc
        payload = fh.read()

    shapes = [tuple(s) for s in header["shapes"]]
    expected = sum(int(np.prod(s)) if s else 1 for s in shapes) * 8
    if len(payload) != expected:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, "
                              f"expected {expected} (truncated or corrupt)")
    config = _config_from_dict(header["config"])
    flat = np.frombuffer(payload, dtype="<f8")
    blocks = []
    offset = 0
    for s in shapes:
        n = int(np.prod(s)) if s else 1
        blocks.append(flat[offset:offset + n].reshape(s).copy())
        offset += n

    n_layer_blocks = 2 * header["n_layers"]
    layers = [[blocks[2 * i], blocks[2 * i + 1]]
              for i in range(header["n_layers"])]
    heads = blocks[n_layer_blocks:]
    if len(heads) != header["n_heads"]:
        raise CheckpointError(f"{path}: head count mismatch")
    expected_dims = [(d_in, d_out) for d_in, d_out in config.layer_dims]
    for (W, b), (d_in, d_out) in zip(layers, expected_dims):
        if W.shape != (d_in, d_out) or b.shape != (d_out,):
            raise CheckpointError(f"{path}: layer shape {W.shape} does not "
                                  f"match the declared architecture {(d_in, d_out)}")
    metadata = dict(header.get("metadata") or {})
    metadata["preset"] = header.get("preset")
    model = MultiHeadModel(config=config, layers=layers, head_weights=heads,
                           head_losses=list(header.get("head_losses", [])),
                           metadata=metadata)
    return model
