"""CSV readers/writers for histograms, grid fields and Fourier tables.

All files are UTF-8 with '\\n' line endings and full-precision decimal
floats.  Metadata rides in '#'-prefixed header lines (gnuplot-friendly).
"""

from __future__ import annotations

import numpy as np

from .histograms import Histogram1D, Histogram2D


def _fmt(x: float) -> str:
    return repr(float(x))


def save_histogram1d(path, hist: Histogram1D) -> None:
    """Rows "bin_center,density"; the total count rides in the header."""
    if hist.density is None:
        raise ValueError("finalize the histogram before saving")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n_bins={hist.n_bins} total={hist.total}\n")
        fh.write("bin_center,density\n")
        for c, d in zip(hist.bin_centers, hist.density):
            fh.write(f"{_fmt(c)},{_fmt(d)}\n")


def load_histogram1d(path) -> Histogram1D:
    meta, rows = _read_csv(path)
    density = np.array([r[1] for r in rows])
    n_bins = int(meta.get("n_bins", len(rows)))
    total = int(meta.get("total", 0))
    counts = np.rint(density * total / n_bins).astype(np.int64) if total else None
    hist = Histogram1D(n_bins=n_bins, counts=counts)
    hist.density = density
    return hist


def save_histogram2d(path, hist: Histogram2D) -> None:
    """Dense density matrix, one row per line (gnuplot matrix compatible)."""
    if hist.density is None:
        raise ValueError("finalize the histogram before saving")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n_bins={hist.n_bins} total={hist.total}\n")
        for row in hist.density:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def load_histogram2d(path) -> Histogram2D:
    meta, rows = _read_csv(path, header_row=False)
    density = np.array(rows)
    n_bins = int(meta.get("n_bins", density.shape[0]))
    total = int(meta.get("total", 0))
    counts = np.rint(density * total / n_bins**2).astype(np.int64) if total else None
    hist = Histogram2D(n_bins=n_bins, counts=counts)
    hist.density = density
    return hist


def save_grid_field(path, values: np.ndarray) -> None:
    """Row-major dump with a "# n_points=G dims=D" header; for dims >= 2 the
    trailing axis runs along each CSV row."""
    values = np.asarray(values, dtype=float)
    g = values.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n_points={g} dims={values.ndim}\n")
        flat = values.reshape(-1, g) if values.ndim > 1 else values.reshape(1, g)
        for row in flat:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def load_grid_field(path) -> np.ndarray:
    meta, rows = _read_csv(path, header_row=False)
    g = int(meta["n_points"])
    dims = int(meta["dims"])
    arr = np.array(rows).reshape((g,) * dims)
    return arr


def _read_csv(path, header_row: bool = True):
    """Returns ({meta key: value}, [numeric rows]); skips one column-name row
    when ``header_row`` and the first data line is not numeric."""
    meta: dict = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split():
                    if "=" in item:
                        k, v = item.split("=", 1)
                        meta[k] = v
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if header_row and not rows:
                    continue
                raise
    return meta, rows
