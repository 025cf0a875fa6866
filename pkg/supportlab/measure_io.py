"""
Versioned text format for discrete measures.

A file holds one or more blocks::

    # supportlab-measure v1
    space=sigma
    n=2
    count=3
    signed=0
    stderr=none
    label=Lambda_1
    <coordinates...> <weight>      (one row per atom, floats in hex notation)

Hex floats make reading and writing round-trip bit for bit.
"""
import logging
from pathlib import Path
from typing import IO, Dict, Iterable, List, Union

import numpy as np

from supportlab.errors import MeasureFormatError
from supportlab.models.measure import DiscreteMeasure, SpaceTag

logger = logging.getLogger(__name__)

HEADER = "# supportlab-measure v1"
_KEYS = ("space", "n", "count", "signed", "stderr", "label")


def _format_block(measure: DiscreteMeasure) -> List[str]:
    stderr = "none" if measure.stderr is None else float(measure.stderr).hex()
    lines = [
        HEADER,
        f"space={measure.space.value}",
        f"n={measure.dim}",
        f"count={len(measure)}",
        f"signed={int(measure.signed)}",
        f"stderr={stderr}",
        f"label={measure.label}",
    ]
    for row, w in zip(measure.locations, measure.weights):
        lines.append(" ".join(float(v).hex() for v in row) + " " + float(w).hex())
    return lines


def dumps(measures: Iterable[DiscreteMeasure]) -> str:
    lines: List[str] = []
    for m in measures:
        lines.extend(_format_block(m))
    return "\n".join(lines) + "\n"


def write_measures(measures: Iterable[DiscreteMeasure], target: Union[str, Path, IO[str]]) -> None:
    text = dumps(measures)
    if hasattr(target, "write"):
        target.write(text)
        return
    Path(target).write_text(text, encoding="utf-8")
    logger.info("Wrote measure file", extra={"path": str(target)})


def _parse_block(header: Dict[str, str], rows: List[str], line_no: int) -> DiscreteMeasure:
    missing = [k for k in _KEYS if k not in header]
    if missing:
        raise MeasureFormatError(f"block ending at line {line_no}: missing {', '.join(missing)}")
    try:
        space = SpaceTag(header["space"])
        n = int(header["n"])
        count = int(header["count"])
        signed = header["signed"] == "1"
        stderr = None if header["stderr"] == "none" else float.fromhex(header["stderr"])
    except ValueError as e:
        raise MeasureFormatError(f"block ending at line {line_no}: bad header value ({e})") from e
    if len(rows) != count:
        raise MeasureFormatError(f"block ending at line {line_no}: expected {count} rows, found {len(rows)}")
    width = (2 * n if space is SpaceTag.SIGMA else n) + 1
    data = np.zeros((count, width))
    for k, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != width:
            raise MeasureFormatError(f"row {k + 1} of block ending at line {line_no}: expected {width} values")
        try:
            data[k] = [float.fromhex(t) for t in tokens]
        except ValueError as e:
            raise MeasureFormatError(f"row {k + 1} of block ending at line {line_no}: {e}") from e
    try:
        return DiscreteMeasure(space, n, data[:, :-1], data[:, -1], signed=signed, stderr=stderr,
                               label=header["label"])
    except ValueError as e:
        raise MeasureFormatError(str(e)) from e


def loads(text: str) -> List[DiscreteMeasure]:
    measures: List[DiscreteMeasure] = []
    header: Dict[str, str] = {}
    rows: List[str] = []
    started = False
    line_no = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line != HEADER:
                raise MeasureFormatError(f"line {line_no}: unsupported header {line!r}")
            if started:
                measures.append(_parse_block(header, rows, line_no - 1))
            header, rows, started = {}, [], True
            continue
        if not started:
            raise MeasureFormatError(f"line {line_no}: data before the {HEADER!r} header")
        key, sep, value = line.partition("=")
        if sep and key in _KEYS and len(rows) == 0:
            header[key] = value
        else:
            rows.append(line)
    if not started:
        raise MeasureFormatError("no measure block found")
    measures.append(_parse_block(header, rows, line_no))
    return measures


def read_measures(source: Union[str, Path, IO[str]]) -> List[DiscreteMeasure]:
    if hasattr(source, "read"):
        return loads(source.read())
    path = Path(source)
    if not path.is_file():
        raise MeasureFormatError(f"measure file does not exist: {path}")
    return loads(path.read_text(encoding="utf-8"))
