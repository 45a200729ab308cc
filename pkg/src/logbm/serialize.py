"""JSON forms of bodies, pairs and grid densities, plus the canonical inputs hash."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .bodies import Body, DirectSum, HPolytope, VPolytope, make_box, make_cross
from .errors import InvalidParameter


def body_to_json(body: Body) -> dict:
    return body.to_json()


def body_from_json(obj) -> Body:
    """Build a body from its JSON dict (see :meth:`Body.to_json` for the kinds)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidParameter("body JSON needs a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "hpoly":
            return HPolytope(np.asarray(obj["normals"], float), np.asarray(obj["offsets"], float))
        if kind == "vpoly":
            return VPolytope(np.asarray(obj["vertices"], float))
        if kind == "box":
            return make_box(obj["halfwidths"])
        if kind == "cross":
            return make_cross(obj["scales"])
        if kind == "directsum":
            return DirectSum([(body_from_json(p["body"]), list(p["indices"])) for p in obj["parts"]])
        if kind in ("l0sum", "product"):
            from .logops import coordinatewise_product, l0_sum
            build = l0_sum if kind == "l0sum" else coordinatewise_product
            return build(body_from_json(obj["K"]), body_from_json(obj["C"]), float(obj["lambda"]))
    except KeyError as exc:
        raise InvalidParameter(f"{kind} body JSON is missing {exc}") from None
    raise InvalidParameter(f"unknown body kind {kind!r}")


def load_json(source):
    """Parse ``source`` as inline JSON text, or read it from a file path."""
    if isinstance(source, (dict, list)):
        return source
    text = str(source)
    if text.lstrip().startswith(("{", "[")):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"bad inline JSON: {exc}") from None
    path = Path(text)
    if not path.is_file():
        raise InvalidParameter(f"no such file: {text}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"{text}: {exc}") from None


def load_pair(source):
    """Read ``{"K": body, "C": body}``; returns ``(K, C, raw)``."""
    raw = load_json(source)
    if not isinstance(raw, dict) or "K" not in raw or "C" not in raw:
        raise InvalidParameter("pair JSON needs 'K' and 'C'")
    K, C = body_from_json(raw["K"]), body_from_json(raw["C"])
    if K.dim != C.dim:
        raise InvalidParameter("K and C differ in dimension")
    return K, C, raw


def plain(value):
    """Convert numpy scalars/arrays to Python types; non-finite floats become ``None``."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def inputs_hash(config) -> str:
    """SHA-256 of the compact canonical JSON of ``config``."""
    text = json.dumps(plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
