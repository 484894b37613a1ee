"""JSON input and output formats for channels, boxes and superchannels.

Complex matrices are row-major nested lists of ``[re, im]`` pairs and every dimension is
explicit. Malformed input raises :class:`SpecError` carrying the offending line or field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .linalg import HERMITICITY_TOL, HermitianOperator, LinalgError, from_pairs, to_pairs
from .qobjects import (
    SUPERCHANNEL_ORDER,
    Channel,
    ChannelBox,
    CQBox,
    QState,
    QuantumObjectError,
    Superchannel,
    channel_from_kraus,
    cq_channel,
    replacer,
    state_box,
    unitary_channel,
)


class SpecError(ValueError):
    """Raised for malformed spec documents; ``location`` is a line or a dotted field path."""

    def __init__(self, message: str, location: Optional[str] = None) -> None:
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ChannelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["kraus", "choi", "replacer", "cq", "unitary"]
    in_dim: int = Field(ge=1)
    out_dim: int = Field(ge=1)
    data: Any

    @model_validator(mode="after")
    def check_unitary_dims(self) -> "ChannelSpec":
        if self.kind == "unitary" and self.in_dim != self.out_dim:
            raise ValueError("unitary channels need in_dim == out_dim")
        return self


class BoxSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    first: ChannelSpec
    second: ChannelSpec


class CQBoxSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["cq_box"]
    pairs: List[Tuple[Any, Any]] = Field(min_length=1)


class StateBoxSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rho: Any
    sigma: Any
    in_dim: int = Field(default=1, ge=1)


class SuperchannelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: Tuple[int, int, int, int]
    order: Tuple[str, str, str, str] = SUPERCHANNEL_ORDER
    choi: Any

    @model_validator(mode="after")
    def check_order(self) -> "SuperchannelSpec":
        if tuple(self.order) != SUPERCHANNEL_ORDER:
            raise ValueError(f"factor order must be {list(SUPERCHANNEL_ORDER)}")
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        return self


@dataclass(frozen=True, eq=False)
class ParsedBox:
    """A channel box together with the cq or state form it was written in, if any."""

    box: ChannelBox
    cq: Optional[CQBox] = None
    states: Optional[Tuple[QState, QState]] = None


# ---------------------------------------------------------------------------
# reading


def parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc


def read_json(path: Union[str, Path]) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}", str(path)) from exc
    return parse_json(text)


def _validated(model: type, payload: Any, prefix: str = "") -> Any:
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors(include_url=False)[0]
        location = ".".join(str(part) for part in (prefix, *first["loc"]) if part != "")
        raise SpecError(first["msg"], location or None) from exc


def _matrix(data: Any, shape: Tuple[int, int], location: str) -> np.ndarray:
    try:
        matrix = from_pairs(data)
    except LinalgError as exc:
        raise SpecError(str(exc), location) from exc
    if matrix.shape != shape:
        raise SpecError(f"expected a {shape[0]}x{shape[1]} matrix, got shape {matrix.shape}", location)
    return matrix


def _hermitian(data: Any, dims: Sequence[int], location: str, tol: float) -> HermitianOperator:
    size = int(np.prod(dims))
    try:
        return HermitianOperator.from_matrix(_matrix(data, (size, size), location), dims, tol)
    except LinalgError as exc:
        raise SpecError(str(exc), location) from exc


def _state(data: Any, dim: int, location: str, tol: float = HERMITICITY_TOL) -> QState:
    try:
        return QState(_hermitian(data, (dim,), location, tol))
    except QuantumObjectError as exc:
        raise SpecError(str(exc), location) from exc


def _state_dim(data: Any, location: str) -> int:
    if not isinstance(data, list) or not data:
        raise SpecError("expected a non-empty matrix", location)
    return len(data)


def channel_from_spec(spec: ChannelSpec, prefix: str = "", tol: float = HERMITICITY_TOL) -> Channel:
    location = f"{prefix}.data" if prefix else "data"
    d_in, d_out = spec.in_dim, spec.out_dim
    try:
        if spec.kind == "kraus":
            if not isinstance(spec.data, list) or not spec.data:
                raise SpecError("expected a list of Kraus operators", location)
            kraus = [_matrix(k, (d_out, d_in), f"{location}.{i}") for i, k in enumerate(spec.data)]
            return channel_from_kraus(kraus, d_in, d_out)
        if spec.kind == "choi":
            return Channel.from_choi(_hermitian(spec.data, (d_in, d_out), location, tol), d_in, d_out)
        if spec.kind == "replacer":
            return replacer(_state(spec.data, d_out, location, tol), d_in)
        if spec.kind == "cq":
            if not isinstance(spec.data, list) or len(spec.data) != d_in:
                raise SpecError(f"expected {d_in} states, one per input symbol", location)
            return cq_channel([_state(s, d_out, f"{location}.{i}", tol) for i, s in enumerate(spec.data)])
        return unitary_channel(_matrix(spec.data, (d_in, d_in), location))
    except (QuantumObjectError, LinalgError) as exc:
        raise SpecError(str(exc), location) from exc


def parse_channel(payload: Any, tol: float = HERMITICITY_TOL) -> Channel:
    return channel_from_spec(_validated(ChannelSpec, payload), tol=tol)


def parse_box(payload: Any, tol: float = HERMITICITY_TOL) -> ParsedBox:
    """Accept a channel box, a cq box or a state box document.

    ``tol`` is the Hermiticity tolerance applied to every state and Choi matrix read.
    """

    if not isinstance(payload, dict):
        raise SpecError("expected a JSON object")
    if payload.get("kind") == "cq_box":
        spec = _validated(CQBoxSpec, payload)
        dim = _state_dim(spec.pairs[0][0], "pairs.0.0")
        pairs = tuple(
            (_state(rho, dim, f"pairs.{i}.0", tol), _state(sigma, dim, f"pairs.{i}.1", tol))
            for i, (rho, sigma) in enumerate(spec.pairs)
        )
        cq = CQBox(pairs)
        return ParsedBox(cq.as_box(), cq=cq)
    if "rho" in payload or "sigma" in payload:
        spec = _validated(StateBoxSpec, payload)
        dim = _state_dim(spec.rho, "rho")
        rho, sigma = _state(spec.rho, dim, "rho", tol), _state(spec.sigma, dim, "sigma", tol)
        return ParsedBox(state_box(rho, sigma, spec.in_dim), states=(rho, sigma))
    spec = _validated(BoxSpec, payload)
    first = channel_from_spec(spec.first, "first", tol)
    second = channel_from_spec(spec.second, "second", tol)
    try:
        return ParsedBox(ChannelBox(first, second))
    except QuantumObjectError as exc:
        raise SpecError(str(exc), "second") from exc


def parse_superchannel(payload: Any, tol: float = 1e-6, hermiticity_tol: float = HERMITICITY_TOL) -> Superchannel:
    spec = _validated(SuperchannelSpec, payload)
    choi = _hermitian(spec.choi, spec.dims, "choi", hermiticity_tol)
    try:
        return Superchannel.from_choi(choi, spec.dims, tol)
    except (QuantumObjectError, LinalgError) as exc:
        raise SpecError(str(exc), "choi") from exc


def load_box(path: Union[str, Path], tol: float = HERMITICITY_TOL) -> ParsedBox:
    return parse_box(read_json(path), tol)


def load_channel(path: Union[str, Path], tol: float = HERMITICITY_TOL) -> Channel:
    return parse_channel(read_json(path), tol)


def load_superchannel(
    path: Union[str, Path],
    tol: float = 1e-6,
    hermiticity_tol: float = HERMITICITY_TOL,
) -> Superchannel:
    return parse_superchannel(read_json(path), tol, hermiticity_tol)


# ---------------------------------------------------------------------------
# writing


def channel_to_json(channel: Channel) -> Dict[str, Any]:
    return {
        "kind": "choi",
        "in_dim": channel.in_dim,
        "out_dim": channel.out_dim,
        "data": to_pairs(channel.choi.matrix),
    }


def box_to_json(box: ChannelBox) -> Dict[str, Any]:
    return {"first": channel_to_json(box.first), "second": channel_to_json(box.second)}


def superchannel_to_json(theta: Superchannel) -> Dict[str, Any]:
    return {
        "dims": list(theta.dims),
        "order": list(SUPERCHANNEL_ORDER),
        "choi": to_pairs(theta.choi.matrix),
    }