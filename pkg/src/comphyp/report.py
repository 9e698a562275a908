"""CSV and manifest writers for experiment output.

Files are written to a temporary name in the target directory and renamed
into place, so an interrupted run never leaves a partial CSV behind.
"""

import json
import math
import os
import tempfile
from pathlib import Path

ERRORS_HEADER = ("test", "n", "error", "half_width", "trials")
EXPONENTS_HEADER = ("test", "exponent", "r2")
BOUNDS_HEADER = ("test", "n", "bound", "log2_bound")


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def atomic_write(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _csv(header, rows) -> bytes:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return ("\n".join(lines) + "\n").encode("ascii")


def errors_csv(curves) -> bytes:
    rows = []
    for test, curve in curves.items():
        est, hw = curve.estimate, curve.half_width
        for i, n in enumerate(curve.n):
            rows.append((test, str(n), fmt_float(est[i]), fmt_float(hw[i]), str(curve.trials)))
    return _csv(ERRORS_HEADER, rows)


def exponents_csv(curves) -> bytes:
    rows = []
    for test, curve in curves.items():
        fit = curve.fit
        slope = (">=" if fit.lower_bound else "") + fmt_float(fit.slope)
        rows.append((test, slope, fmt_float(fit.r2)))
    return _csv(EXPONENTS_HEADER, rows)


def bounds_csv(curves) -> bytes:
    rows = [(test, str(n), fmt_float(b), fmt_float(lg))
            for test, points in curves.items() for n, b, lg in points]
    return _csv(BOUNDS_HEADER, rows)


def write_json(path, obj):
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())
