"""
Versioned checkpoint files for trained detector networks.

A checkpoint is a YAML document holding a format version, the architecture
header (arch, depth, hidden size, window sizes) and every parameter as name,
shape and row-major values. Floats are written with round-trip precision so
save -> load -> save reproduces the file byte for byte.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import yaml

from src.models.nn_core import ParamStore
from src.models.registry import Network, network_from_params
from src.utils.constants import CHECKPOINT_FORMAT_VERSION

logger = logging.getLogger(__name__)

HEADER_INT_FIELDS = ("depth", "hidden_size", "l_I", "l_C", "stride")


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


def params_to_document(params: ParamStore) -> Dict[str, Any]:
    """Checkpoint document for a parameter store, in stable key order."""
    meta = dict(params.meta)
    arch = meta.pop("arch", None)
    if arch is None:
        raise CheckpointError("parameters carry no 'arch' header")
    header = {key: (int(value) if key in HEADER_INT_FIELDS else value) for key, value in sorted(meta.items())}
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "arch": arch,
        "header": header,
        "parameters": [
            {
                "name": name,
                "shape": [int(d) for d in value.shape],
                "values": [float(v) for v in value.reshape(-1)],
            }
            for name, value in params.items()
        ],
    }


def document_to_params(document: Any) -> ParamStore:
    """
    Rebuild a ParamStore from a checkpoint document.

    Raises:
        CheckpointError: On version, header or shape problems
    """
    if not isinstance(document, dict):
        raise CheckpointError("checkpoint must be a mapping")
    version = document.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {version!r}, expected {CHECKPOINT_FORMAT_VERSION}")
    arch = document.get("arch")
    if arch not in ("rnn", "lstm"):
        raise CheckpointError(f"unknown checkpoint arch {arch!r}")
    header = document.get("header") or {}
    if not isinstance(header, dict):
        raise CheckpointError("checkpoint header must be a mapping")
    entries = document.get("parameters")
    if not isinstance(entries, list) or not entries:
        raise CheckpointError("checkpoint holds no parameters")

    params = ParamStore(meta={"arch": arch, **header})
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or not {"name", "shape", "values"} <= set(entry):
            raise CheckpointError(f"parameter entry {i} needs name, shape and values")
        shape = tuple(int(d) for d in entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise CheckpointError(
                f"parameter '{entry['name']}' has {values.size} values, shape {shape} needs {int(np.prod(shape))}"
            )
        try:
            params.add(str(entry["name"]), values.reshape(shape))
        except ValueError as e:
            raise CheckpointError(str(e)) from e
    return params


def save_checkpoint(network: Network, path: Union[str, Path]) -> Path:
    """
    Write a trained network to a checkpoint file.

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = yaml.safe_dump(
        params_to_document(network.params), sort_keys=False, default_flow_style=None, width=100
    )
    path.write_text(text)
    logger.info(f"Saved {network.params.meta.get('arch')} checkpoint ({network.params.num_parameters} values) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Network:
    """
    Load a network from a checkpoint file.

    Raises:
        FileNotFoundError: If the file does not exist
        CheckpointError: If the file is not a valid checkpoint
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    try:
        document = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise CheckpointError(f"malformed checkpoint {path}: {e}") from e

    params = document_to_params(document)
    try:
        network = network_from_params(params)
    except ValueError as e:
        raise CheckpointError(f"inconsistent checkpoint {path}: {e}") from e
    logger.info(f"Loaded {params.meta['arch']} checkpoint from {path}")
    return network
