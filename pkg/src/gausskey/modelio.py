"""Model JSON input/output.

Model files are UTF-8 JSON with one top-level object.  A general model has
keys ``sigma_x``, ``b``, ``e``; an aligned model has keys ``sigma_x``,
``sigma_wy``, ``sigma_wz``.  Every matrix is a row-major nested array of
numbers.  Example::

    {"sigma_x": [[2.0, 0.0], [0.0, 2.0]],
     "b": [[1.0, 0.5]],
     "e": [[0.7, 0.35]]}
"""

import hashlib
import json

import numpy as np

from .errors import ModelFormatError
from .models import AlignedModel, GeneralModel

_GENERAL_KEYS = {"sigma_x", "b", "e"}
_ALIGNED_KEYS = {"sigma_x", "sigma_wy", "sigma_wz"}


def _matrix(obj, key):
    try:
        arr = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"key {key!r} is not a numeric matrix: {exc}") from exc
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ModelFormatError(f"key {key!r} must be a 2-d nested array")
    return arr


def model_from_dict(obj):
    """Build a model from a parsed JSON object.

    Raises ``ModelFormatError`` on schema problems; model invariant failures
    propagate as the usual validation errors.
    """
    if not isinstance(obj, dict):
        raise ModelFormatError("model JSON must be an object at top level")
    keys = set(obj)
    if keys == _GENERAL_KEYS:
        return GeneralModel(
            sigma_x=_matrix(obj, "sigma_x"), b=_matrix(obj, "b"), e=_matrix(obj, "e")
        )
    if keys == _ALIGNED_KEYS:
        return AlignedModel(
            sigma_x=_matrix(obj, "sigma_x"),
            sigma_wy=_matrix(obj, "sigma_wy"),
            sigma_wz=_matrix(obj, "sigma_wz"),
        )
    raise ModelFormatError(
        "model JSON must have exactly the keys {sigma_x, b, e} or "
        f"{{sigma_x, sigma_wy, sigma_wz}}; got {sorted(keys)}"
    )


def model_to_dict(m):
    if isinstance(m, GeneralModel):
        return {
            "sigma_x": m.sigma_x.tolist(),
            "b": m.b.tolist(),
            "e": m.e.tolist(),
        }
    if isinstance(m, AlignedModel):
        return {
            "sigma_x": m.sigma_x.tolist(),
            "sigma_wy": m.sigma_wy.tolist(),
            "sigma_wz": m.sigma_wz.tolist(),
        }
    raise TypeError(f"not a model: {type(m).__name__}")


def load_model(path):
    """Read and validate a model JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(obj)


def save_model(m, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m), fh, indent=2, sort_keys=True)
        fh.write("\n")


def model_digest(m):
    """Content hash of a model: sha256 over its canonical JSON form."""
    canon = json.dumps(model_to_dict(m), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
