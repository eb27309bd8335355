"""Path, JSON and CSV helpers shared by the commands and reports."""

import csv
import json
import os
import pathlib
from fractions import Fraction
from hashlib import blake2b
from typing import Any, Iterable, Sequence, Union

import numpy as np

AnyPath = Union[str, pathlib.Path]


def full_path(path: AnyPath) -> pathlib.Path:
    """Absolute path with environment variables expanded."""
    return pathlib.Path(os.path.abspath(os.path.expandvars(os.fspath(path))))


class NpEncoder(json.JSONEncoder):
    """
    JSON encoder aware of numpy scalars/arrays and exact fractions.

    See: https://stackoverflow.com/questions/50916422/python-typeerror-object-of-type-int64-is-not-json-serializable/50916741
    """

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, Fraction):
            return f"{obj.numerator}/{obj.denominator}"
        elif isinstance(obj, pathlib.PurePath):
            return str(obj)
        else:
            return super(NpEncoder, self).default(obj)


def fingerprint(keyed_data, digest_size=16):
    """
    Hex digest identifying ``keyed_data``.

    Values are JSON-encoded in sorted key order and hashed with blake2b, so
    equal inputs give equal digests regardless of insertion order.
    """
    h = blake2b(digest_size=digest_size)
    for key in sorted(keyed_data.keys()):
        val = keyed_data[key]
        s = json.dumps(val, sort_keys=True, cls=NpEncoder).encode()
        h.update(s)
    return h.hexdigest()


def format_value(value: Any) -> str:
    """
    Locale-independent, round-trippable text for one CSV cell.

    Floats use the shortest repr that round-trips, so identical inputs
    always produce identical bytes.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, Fraction):
        return repr(float(value))
    return str(value)


def write_csv(
    path: AnyPath, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> pathlib.Path:
    """
    Write rows to a CSV file with a fixed header.

    Parameters
    ----------
    path : str or pathlib.Path
    header : sequence of str
    rows : iterable of sequences
        Each row must have exactly ``len(header)`` cells.

    Returns
    -------
    pathlib.Path
        The path written.
    """
    path = full_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row has {len(row)} cells; header has {len(header)}")
            writer.writerow([format_value(cell) for cell in row])
    return path


def dumps_json(data: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(data, sort_keys=True, indent=2, cls=NpEncoder) + "\n"


def write_json(path: AnyPath, data: Any) -> pathlib.Path:
    path = full_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(dumps_json(data))
    return path
