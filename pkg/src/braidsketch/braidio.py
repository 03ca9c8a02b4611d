"""Plain-text braid files and atomic output.

A braid file starts with one header line::

    # braid v1 m=<m> U=<U> shift=<s> gen=<hash> [vals=real] [label=yes|no]

followed by one ``<stream_id> <value>`` record per line, in arrival order.
Readers are forward-only: :class:`BraidReader` refuses to seek, so any
consumer of it provably makes a single ordered pass.
"""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from .core import BraidFormatError, BraidItem
from .datagen import Braid

MAGIC = "# braid v1"
CHUNK_LINES = 1 << 18


@dataclass(frozen=True)
class BraidHeader:
    m: int
    U: int
    shift: int = 0
    gen: str = "-"
    real: bool = False
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        parts = [MAGIC, f"m={self.m}", f"U={self.U}", f"shift={self.shift}", f"gen={self.gen}"]
        if self.real:
            parts.append("vals=real")
        parts.extend(f"{k}={v}" for k, v in sorted(self.extra.items()))
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> "BraidHeader":
        line = line.rstrip("\n")
        if not line.startswith(MAGIC + " "):
            raise BraidFormatError(f"not a braid v1 header: {line[:60]!r}")
        fields_ = {}
        for token in line[len(MAGIC):].split():
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise BraidFormatError(f"malformed header token {token!r}")
            fields_[key] = value
        try:
            m, U, shift = int(fields_.pop("m")), int(fields_.pop("U")), int(fields_.pop("shift"))
        except KeyError as exc:
            raise BraidFormatError(f"header lacks {exc.args[0]}=") from None
        except ValueError:
            raise BraidFormatError(f"non-integer m/U/shift in header {line!r}") from None
        gen = fields_.pop("gen", "-")
        vals = fields_.pop("vals", "int")
        if vals not in ("int", "real"):
            raise BraidFormatError(f"unknown value type vals={vals}")
        if m < 1 or U < 1:
            raise BraidFormatError("header m and U must be positive")
        return cls(m, U, shift, gen, vals == "real", fields_)

    @classmethod
    def of(cls, braid: Braid) -> "BraidHeader":
        extra = {"label": braid.label} if braid.label else {}
        return cls(braid.m, braid.U, braid.shift, braid.gen, braid.real, extra)


class ForwardOnlyError(io.UnsupportedOperation):
    """Raised when something tries to rewind a single-pass braid reader."""


class BraidReader:
    """Single forward pass over a braid file, validating every record."""

    def __init__(self, source: TextIO, chunk_lines: int = CHUNK_LINES):
        self._src = source
        self._chunk_lines = chunk_lines
        self.header = BraidHeader.parse(source.readline())
        self.records = 0
        self._started = False

    @classmethod
    def open(cls, path, **kwargs) -> "BraidReader":
        return cls(open(path, "r", encoding="ascii"), **kwargs)

    def seek(self, *args):
        raise ForwardOnlyError("braid readers are forward-only")

    def tell(self):
        raise ForwardOnlyError("braid readers are forward-only")

    def close(self) -> None:
        self._src.close()

    def __enter__(self) -> "BraidReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (stream_ids, values) arrays of consecutive records, in order."""
        if self._started:
            raise ForwardOnlyError("a braid reader can be consumed only once")
        self._started = True
        dtype = float if self.header.real else np.int64
        while True:
            lines = []
            for line in self._src:
                if line.strip():
                    lines.append(line)
                    if len(lines) >= self._chunk_lines:
                        break
            if not lines:
                return
            yield self._parse(lines, dtype)

    def _parse(self, lines: list[str], dtype) -> tuple[np.ndarray, np.ndarray]:
        tokens = "".join(lines).split()
        if len(tokens) != 2 * len(lines):
            bad = next(ln for ln in lines if len(ln.split()) != 2)
            raise BraidFormatError(f"record after #{self.records} is not '<id> <value>': {bad!r}")
        try:
            ids = np.array(tokens[0::2], dtype=np.int64)
            values = np.array(tokens[1::2], dtype=dtype)
        except ValueError as exc:
            raise BraidFormatError(f"unparsable record near #{self.records}: {exc}") from None
        h = self.header
        if ids.min() < 1 or ids.max() > h.m:
            raise BraidFormatError(f"stream id outside [1, {h.m}] near record #{self.records}")
        if not h.real and (values.min() < 1 or values.max() > h.U):
            raise BraidFormatError(f"value outside [1, {h.U}] near record #{self.records}")
        self.records += ids.size
        return ids, values

    def __iter__(self) -> Iterator[BraidItem]:
        j = 0
        for ids, values in self.chunks():
            for sid, v in zip(ids.tolist(), values.tolist()):
                yield BraidItem(sid, v, j)
                j += 1


def read_braid(path) -> Braid:
    """Load a whole braid file into memory."""
    with BraidReader.open(path) as reader:
        parts = list(reader.chunks())
        h = reader.header
    if parts:
        ids = np.concatenate([p[0] for p in parts])
        values = np.concatenate([p[1] for p in parts])
    else:
        ids = np.zeros(0, dtype=np.int64)
        values = np.zeros(0, dtype=float if h.real else np.int64)
    return Braid(ids, values, h.m, h.U, h.shift, h.real, h.gen, h.extra.get("label"))


def format_braid(braid: Braid) -> str:
    header = BraidHeader.of(braid).line()
    if braid.real:
        body = [f"{sid} {v!r}" for sid, v in zip(braid.stream_ids.tolist(), braid.values.tolist())]
    else:
        body = [f"{sid} {v}" for sid, v in zip(braid.stream_ids.tolist(), braid.values.tolist())]
    return "\n".join([header, *body]) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_braid(path, braid: Braid) -> None:
    atomic_write_text(path, format_braid(braid))
