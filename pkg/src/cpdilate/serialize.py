"""Versioned JSON formats for instances, dilations and reports.

Conventions shared by every format:

* complex scalars are ``[re, im]`` pairs of floats;
* matrices and tensors are nested lists in row-major order;
* every dimension is carried explicitly, so empty tensors round-trip;
* emission is deterministic (sorted keys, fixed separators, trailing
  newline, no timestamps), so ``parse(emit(x))`` returns ``x``
  bit-exactly and equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .algebra import AlgebraDescriptor, ModuleDescriptor
from .cpmaps import CPBlockMap, Instance, ModuleCPTuple
from .dilation import DilationData
from .errors import ParseError

__all__ = [
    "emit_instance",
    "parse_instance",
    "emit_dilation",
    "parse_dilation",
    "emit_json",
]

INSTANCE_FORMAT = "cpdilate/instance"
DILATION_FORMAT = "cpdilate/dilation"
FORMAT_VERSION = 1


def emit_json(payload: dict) -> str:
    """Deterministic JSON text used by every writer."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _encode_complex(arr: np.ndarray) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode_complex(data, shape: tuple[int, ...], what: str) -> np.ndarray:
    size = 1
    for s in shape:
        size *= s
    if size == 0:
        return np.zeros(shape, dtype=complex)
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: malformed complex tensor") from exc
    if arr.shape != shape + (2,):
        raise ParseError(f"{what}: shape {arr.shape} does not match declared {shape + (2,)}")
    # assign components instead of re + 1j*im, which would lose the sign
    # of negative zeros and break bit-exact round-trips
    out = np.empty(shape, dtype=complex)
    out.real = arr[..., 0]
    out.imag = arr[..., 1]
    return out


def _require(payload: dict, key: str, what: str):
    if key not in payload:
        raise ParseError(f"{what}: missing field '{key}'")
    return payload[key]


def _int_list(value, what: str) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise ParseError(f"{what}: expected a list of integers")
    return value


def _load(text: str, expected_format: str) -> dict:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("top-level JSON value must be an object")
    fmt = _require(payload, "format", expected_format)
    if fmt != expected_format:
        raise ParseError(f"format '{fmt}', expected '{expected_format}'")
    version = _require(payload, "version", expected_format)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version}")
    return payload


def emit_instance(inst: Instance) -> str:
    payload = {
        "format": INSTANCE_FORMAT,
        "version": FORMAT_VERSION,
        "n": inst.n,
        "h1": inst.h1,
        "h2": inst.h2,
        "block_dims": list(inst.algebra.block_dims),
        "mults": list(inst.module.mults),
        "cp_action": _encode_complex(inst.cp.action),
        "tuple_action": _encode_complex(inst.tup.action),
        "meta": inst.meta,
    }
    return emit_json(payload)


def parse_instance(text: str) -> Instance:
    payload = _load(text, INSTANCE_FORMAT)
    what = "instance"
    try:
        n = int(_require(payload, "n", what))
        h1 = int(_require(payload, "h1", what))
        h2 = int(_require(payload, "h2", what))
        block_dims = _int_list(_require(payload, "block_dims", what), what)
        mults = _int_list(_require(payload, "mults", what), what)
        algebra = AlgebraDescriptor(tuple(block_dims))
        module = ModuleDescriptor(algebra, tuple(mults))
        cp_action = _decode_complex(
            _require(payload, "cp_action", what), (n, n, algebra.dim, h1, h1), what
        )
        tuple_action = _decode_complex(
            _require(payload, "tuple_action", what), (n, module.dim, h2, h1), what
        )
        meta = payload.get("meta") or {}
        if not isinstance(meta, dict):
            raise ParseError(f"{what}: meta must be an object")
        return Instance(
            CPBlockMap(algebra, n, h1, cp_action),
            ModuleCPTuple(module, n, h1, h2, tuple_action),
            meta,
        )
    except ParseError:
        raise
    except Exception as exc:
        raise ParseError(f"{what}: {exc}") from exc


def emit_dilation(inst: Instance, data: DilationData) -> str:
    payload = {
        "format": DILATION_FORMAT,
        "version": FORMAT_VERSION,
        "n": inst.n,
        "h1": inst.h1,
        "h2": inst.h2,
        "block_dims": list(inst.algebra.block_dims),
        "mults": list(inst.module.mults),
        "r1": data.r1,
        "r2": data.r2,
        "pi_action": _encode_complex(data.pi_action),
        "s_ops": _encode_complex(data.s_ops),
        "psi_action": _encode_complex(data.psi_action),
        "k2_embed": _encode_complex(data.k2_embed),
        "k2i_dims": list(data.k2i_dims),
        "w_ops": [_encode_complex(w) for w in data.w_ops],
        "pi_welldef": data.pi_welldef,
        "psi_welldef": data.psi_welldef,
    }
    return emit_json(payload)


def parse_dilation(text: str) -> tuple[DilationData, dict]:
    """Returns the data plus the context dims recorded in the file."""
    payload = _load(text, DILATION_FORMAT)
    what = "dilation"
    try:
        n = int(_require(payload, "n", what))
        h1 = int(_require(payload, "h1", what))
        h2 = int(_require(payload, "h2", what))
        block_dims = _int_list(_require(payload, "block_dims", what), what)
        mults = _int_list(_require(payload, "mults", what), what)
        algebra = AlgebraDescriptor(tuple(block_dims))
        module = ModuleDescriptor(algebra, tuple(mults))
        r1 = int(_require(payload, "r1", what))
        r2 = int(_require(payload, "r2", what))
        k2i_dims = _int_list(_require(payload, "k2i_dims", what), what)
        if len(k2i_dims) != n:
            raise ParseError(f"{what}: expected {n} coisometries")
        w_raw = _require(payload, "w_ops", what)
        if not isinstance(w_raw, list) or len(w_raw) != n:
            raise ParseError(f"{what}: expected {n} coisometries")
        data = DilationData(
            r1=r1,
            r2=r2,
            pi_action=_decode_complex(
                _require(payload, "pi_action", what), (algebra.dim, r1, r1), what
            ),
            s_ops=_decode_complex(_require(payload, "s_ops", what), (n, r1, h1), what),
            psi_action=_decode_complex(
                _require(payload, "psi_action", what), (module.dim, r2, r1), what
            ),
            k2_embed=_decode_complex(_require(payload, "k2_embed", what), (h2, r2), what),
            w_ops=tuple(
                _decode_complex(w, (k, h2), what) for w, k in zip(w_raw, k2i_dims)
            ),
            k2i_dims=tuple(k2i_dims),
            pi_welldef=float(payload.get("pi_welldef", 0.0)),
            psi_welldef=float(payload.get("psi_welldef", 0.0)),
        )
        context = {
            "n": n,
            "h1": h1,
            "h2": h2,
            "block_dims": block_dims,
            "mults": mults,
        }
        return data, context
    except ParseError:
        raise
    except Exception as exc:
        raise ParseError(f"{what}: {exc}") from exc
