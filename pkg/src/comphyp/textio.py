"""Numeric-text sequence files.

One observation per line: a single number for scalar data, or
comma-separated numbers for vectors. Blank lines and lines starting with
``#`` are ignored.
"""

from pathlib import Path

import numpy as np


class SequenceFormatError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def read_sequence(path) -> np.ndarray:
    """Parse a sequence file into an ``(n, d)`` float array."""
    path = Path(path)
    rows = []
    dim = None
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in text.split(",")]
            except ValueError:
                raise SequenceFormatError(path, lineno, f"malformed number in {text!r}") from None
            if not np.all(np.isfinite(row)):
                raise SequenceFormatError(path, lineno, "non-finite value")
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise SequenceFormatError(path, lineno, f"dimension mismatch: expected {dim} values, got {len(row)}")
            rows.append(row)
    if not rows:
        raise SequenceFormatError(path, 0, "no observations")
    return np.asarray(rows, dtype=float)


def write_sequence(path, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    lines = [",".join(format(v, ".17g") for v in row) for row in x]
    Path(path).write_text("\n".join(lines) + "\n")
