"""Deterministic JSON/CSV output, manifests and the worker pool."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import hashlib
import json
import math
import os

import numpy as np

__all__ = ["format_float", "dumps", "Table", "emit_report", "sha256_file",
           "thread_count", "parallel_map"]


def format_float(x):
    """17 significant digits; non-finite values become strings."""
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 2**53:
        return f"{x:.1f}"
    return format(x, ".17g")


def _plain(obj):
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj, indent=2, _level=0):
    """JSON text with sorted keys and 17-digit floats.

    Complex numbers serialize as ``[re, im]``.
    """
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [dumps(v, indent, _level + 1) for v in obj]
        if all("\n" not in p for p in parts) and sum(map(len, parts)) < 100:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass(frozen=True)
class Table:
    """Plot-ready table with a fixed column order."""
    columns: tuple
    rows: list

    def to_csv(self):
        lines = [",".join(self.columns)]
        for row in self.rows:
            cells = []
            for v in row:
                v = _plain(v)
                if isinstance(v, float):
                    cells.append(format_float(v).strip('"'))
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def emit_report(results, fmt, directory, name):
    """Write ``results`` to ``directory/name.<fmt>``.

    Parameters
    ----------
    results : object
        JSON-serializable data for ``fmt="json"``; a :class:`Table` for
        ``fmt="csv"``.
    fmt : {"json", "csv"}
    directory : str
    name : str
        File stem.

    Returns
    -------
    str
        Path of the written file.
    """
    if fmt == "json":
        text = dumps(results) + "\n"
    elif fmt == "csv":
        if not isinstance(results, Table):
            raise TypeError("csv output needs a Table")
        text = results.to_csv()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(directory, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise OSError(f"output directory {directory!r} is not writable")
    path = os.path.join(directory, f"{name}.{fmt}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def thread_count(requested=None):
    """Worker count: explicit value, else ``LIDSKII_THREADS``, else 1."""
    if requested is None:
        requested = os.environ.get("LIDSKII_THREADS", 1)
    n = int(requested)
    if n < 1:
        raise ValueError("thread count must be positive")
    return n


def parallel_map(fn, items, threads=1):
    """``[fn(x) for x in items]`` on a thread pool; result order is fixed."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
