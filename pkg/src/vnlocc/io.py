"""JSON encoding of algebras, blockwise elements and protocols.

* Algebra: ``{"blocks": [{"dim": 2, "weight": 0.5}]}``.
* Element or vector: a list with one entry per block; each block is a
  row-major nested list of ``[re, im]`` pairs. Plain numbers are accepted as
  real entries, and a flat list of ``n^2`` entries is accepted per block.
* Protocol: ``{"direction", "algebra", "branches"}``. For ``right`` each branch
  has Alice's ``"a"`` and Bob's contraction ``"b"`` plus optional
  ``"bob_extra"`` Kraus operators completing Bob's channel; for ``left`` the
  roles swap (``"b"`` measures, ``"a"`` corrects, ``"alice_extra"``). When the
  extras are absent the channel is completed by ``(1 - b^* b)^{1/2}``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import Algebra, AlgElement, make_algebra
from .channels import Branch, OneWayProtocol, completion
from .exceptions import ValidationError

__all__ = [
    "encode_algebra",
    "decode_algebra",
    "encode_matrix",
    "decode_matrix",
    "encode_blocks",
    "decode_blocks",
    "encode_protocol",
    "decode_protocol",
    "read_json",
    "dumps",
]


def dumps(obj: Any) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, indent=None, separators=(",", ":"), allow_nan=False) + "\n"


def read_json(path: str) -> Any:
    """Load ``path``; ``path#key`` selects one top-level key of an object."""
    key = None
    if "#" in path and not Path(path).exists():
        path, key = path.rsplit("#", 1)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    if key is not None:
        if not isinstance(data, dict) or key not in data:
            raise ValidationError(f"{path}: no key {key!r}")
        data = data[key]
    return data


def encode_algebra(A: Algebra) -> dict:
    return {"blocks": [{"dim": d, "weight": w} for d, w in A.blocks]}


def decode_algebra(obj: Any) -> Algebra:
    if isinstance(obj, dict):
        if "blocks" in obj:
            obj = obj["blocks"]
        elif "algebra" in obj:
            return decode_algebra(obj["algebra"])
        else:
            raise ValidationError("algebra object needs a 'blocks' list")
    if not isinstance(obj, list):
        raise ValidationError("algebra must be a list of blocks")
    pairs = []
    for b in obj:
        if isinstance(b, dict):
            if "dim" not in b or "weight" not in b:
                raise ValidationError("each block needs 'dim' and 'weight'")
            pairs.append((b["dim"], b["weight"]))
        elif isinstance(b, (list, tuple)) and len(b) == 2:
            pairs.append(tuple(b))
        else:
            raise ValidationError(f"bad block entry {b!r}")
    for d, w in pairs:
        if not isinstance(d, (int, float)) or not isinstance(w, (int, float)):
            raise ValidationError("block dim and weight must be numbers")
    return make_algebra(pairs)


def _encode_scalar(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[_encode_scalar(z) for z in row] for row in m]


def _decode_scalar(x) -> complex:
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise ValidationError(f"bad complex entry {x!r}; expected [re, im]")


def decode_matrix(obj: Any, n: int | None = None) -> np.ndarray:
    """Decode rows of ``[re, im]`` pairs, rows of real numbers, or a flat entry list."""
    if not isinstance(obj, list) or not obj:
        raise ValidationError("matrix must be a non-empty list")
    if all(isinstance(r, list) for r in obj) and all(r and isinstance(r[0], list) for r in obj):
        rows = [[_decode_scalar(x) for x in row] for row in obj]
    elif all(isinstance(r, list) for r in obj) and all(len(r) == len(obj) for r in obj):
        rows = [[_decode_scalar(x) for x in row] for row in obj]
    else:
        flat = [_decode_scalar(x) for x in obj]
        k = math.isqrt(len(flat))
        if k * k != len(flat):
            raise ValidationError("flat block length is not a square")
        rows = [flat[i * k : (i + 1) * k] for i in range(k)]
    if len({len(r) for r in rows}) > 1:
        raise ValidationError("ragged matrix rows")
    m = np.array(rows, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"block must be square, got shape {m.shape}")
    if n is not None and m.shape != (n, n):
        raise ValidationError(f"block has shape {m.shape}, expected {(n, n)}")
    return m


def encode_blocks(x) -> list:
    return [encode_matrix(b) for b in x.data]


def decode_blocks(A: Algebra, obj: Any, cls=AlgElement):
    """Decode a block list (or an object with an element/vector/density key)."""
    if isinstance(obj, dict):
        for key in ("element", "vector", "density", "psi", "state"):
            if key in obj:
                obj = obj[key]
                break
        else:
            raise ValidationError("expected a block list or an object with a 'vector'/'element' key")
    if not isinstance(obj, list) or len(obj) != len(A.blocks):
        raise ValidationError(f"expected a list of {len(A.blocks)} block(s)")
    return cls(A, [decode_matrix(b, n) for b, n in zip(obj, A.dims)])


def encode_protocol(theta: OneWayProtocol) -> dict:
    branches = []
    for lab, br in zip(theta.labels, theta.branches):
        item: dict[str, Any] = {"label": lab if isinstance(lab, (int, str)) else str(lab)}
        first, extra = br.correct[0], br.correct[1:]
        if theta.direction == "right":
            item["a"], item["b"] = encode_blocks(br.measure), encode_blocks(first)
            if extra:
                item["bob_extra"] = [encode_blocks(e) for e in extra]
        else:
            item["b"], item["a"] = encode_blocks(br.measure), encode_blocks(first)
            if extra:
                item["alice_extra"] = [encode_blocks(e) for e in extra]
        branches.append(item)
    return {"direction": theta.direction, "algebra": encode_algebra(theta.parent), "branches": branches}


def decode_protocol(obj: Any, A: Algebra | None = None) -> OneWayProtocol:
    if not isinstance(obj, dict) or "branches" not in obj:
        raise ValidationError("protocol must be an object with 'branches'")
    if A is None:
        if "algebra" not in obj:
            raise ValidationError("protocol has no 'algebra' and none was supplied")
        A = decode_algebra(obj["algebra"])
    direction = obj.get("direction", "right")
    if direction not in ("right", "left"):
        raise ValidationError(f"bad direction {direction!r}")
    measure_key, correct_key, extra_key = ("a", "b", "bob_extra") if direction == "right" else ("b", "a", "alice_extra")
    branches, labels = [], []
    for i, item in enumerate(obj["branches"]):
        if measure_key not in item:
            raise ValidationError(f"branch {i} lacks {measure_key!r}")
        m = decode_blocks(A, item[measure_key])
        extra = [decode_blocks(A, e) for e in item.get(extra_key, [])]
        if correct_key not in item:
            correct = (AlgElement.identity(A), *extra)
        else:
            c = decode_blocks(A, item[correct_key])
            correct = (c, *extra) if extra_key in item else (c, completion(c))
        branches.append(Branch(m, correct))
        labels.append(item.get("label", i))
    return OneWayProtocol(A, direction, tuple(branches), tuple(labels))


def encode_vector(x) -> list:
    """Full coordinate vector as a list of ``[re, im]`` pairs."""
    return [_encode_scalar(z) for z in np.ravel(x)]


def decode_vector(obj: Any) -> np.ndarray:
    if not isinstance(obj, list):
        raise ValidationError("vector must be a list")
    return np.array([_decode_scalar(z) for z in obj], dtype=complex)


__all__ += ["encode_vector", "decode_vector"]
