"""
JSON report writer.

Reports are pydantic models; keys are written in field declaration order and
every float with 17 significant digits so a parse-back is exact.
"""

import json
import logging
import math
from typing import Any, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from app.errors import FormatError
from app.storage.binary import PathLike, atomic_write, read_bytes

logger = logging.getLogger(__name__)

ReportT = TypeVar("ReportT", bound=BaseModel)

INDENT = "  "


def format_float(value: float) -> str:
    if not math.isfinite(value):
        return "null"
    text = format(value, ".17g")
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _render(value: Any, depth: int) -> str:
    pad = INDENT * (depth + 1)
    close = INDENT * depth
    if isinstance(value, BaseModel):
        value = value.model_dump()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}{_render(v, depth + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if value is None:
        return "null"
    return json.dumps(str(value))


def render_report(report: BaseModel) -> str:
    return _render(report, 0) + "\n"


def write_report(path: PathLike, report: BaseModel) -> None:
    atomic_write(path, render_report(report).encode("utf-8"))
    logger.info(f"Wrote {type(report).__name__} to {path}")


def read_report(path: PathLike, model: Type[ReportT]) -> ReportT:
    try:
        return model.model_validate_json(read_bytes(path))
    except ValidationError as e:
        raise FormatError(f"{path}: not a valid {model.__name__}: {e}") from e
