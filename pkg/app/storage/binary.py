"""
Little-endian binary primitives shared by the dataset and checkpoint formats.
"""

import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from app.errors import FormatError

logger = logging.getLogger(__name__)

F8 = np.dtype("<f8")
PathLike = Union[str, Path]


class BinaryWriter:
    """Accumulates little-endian fields in write order."""

    def __init__(self):
        self._parts: List[bytes] = []

    def magic(self, tag: bytes) -> None:
        self._parts.append(tag)

    def u32(self, *values: int) -> None:
        self._parts.append(struct.pack(f"<{len(values)}I", *values))

    def u64(self, value: int) -> None:
        self._parts.append(struct.pack("<Q", value))

    def f64(self, values) -> None:
        self._parts.append(np.ascontiguousarray(values, dtype=F8).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class BinaryReader:
    """Sequential reader that reports byte offsets on every failure."""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.source = source
        self.offset = 0

    def _need(self, size: int, what: str) -> None:
        remaining = len(self.data) - self.offset
        if size > remaining:
            raise FormatError(
                f"{self.source}: truncated {what} at byte offset {self.offset}: "
                f"need {size} bytes, {remaining} remain"
            )

    def magic(self, expected: bytes) -> None:
        self._need(len(expected), "magic")
        found = self.data[self.offset:self.offset + len(expected)]
        if found != expected:
            raise FormatError(
                f"{self.source}: bad magic at byte offset 0: expected {expected.decode()!r}, found {found!r}"
            )
        self.offset += len(expected)

    def u32(self, count: int = 1) -> Tuple[int, ...]:
        size = 4 * count
        self._need(size, "u32 field")
        values = struct.unpack_from(f"<{count}I", self.data, self.offset)
        self.offset += size
        return values

    def u64(self) -> int:
        self._need(8, "u64 field")
        (value,) = struct.unpack_from("<Q", self.data, self.offset)
        self.offset += 8
        return value

    def f64(self, count: int, what: str = "f64 block") -> np.ndarray:
        size = 8 * count
        self._need(size, what)
        values = np.frombuffer(self.data, dtype=F8, count=count, offset=self.offset)
        self.offset += size
        return values.astype(np.float64)

    def finish(self) -> None:
        trailing = len(self.data) - self.offset
        if trailing:
            raise FormatError(f"{self.source}: {trailing} trailing bytes after byte offset {self.offset}")


def read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e


def atomic_write(path: PathLike, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over `path`."""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    try:
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=directory)
    except OSError as e:
        raise FormatError(f"cannot write {path}: {e}") from e
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {len(data)} bytes to {target}")
