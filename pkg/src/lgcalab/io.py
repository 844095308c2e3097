"""On-disk formats: CSV, PBM/PGM images, and the run manifest.

All CSV output is comma-separated with a header row, LF line endings and
UTF-8; floats are written with 17 significant digits so identical runs are
byte-identical.  Images use the binary netpbm formats (P4 bitmaps for
spacetime diagrams, P5 grayscale for lattice snapshots).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lattice import POPCOUNT8, LatticeState
from .observables import MacroField


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_matrix_csv(path) -> np.ndarray:
    """Numeric matrix from CSV; a non-numeric first row is taken as a header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    start = 0
    try:
        [float(v) for v in lines[0].split(",")]
    except ValueError:
        start = 1
    rows = [[float(v) for v in ln.split(",")] for ln in lines[start:]]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_pbm(path, bits: np.ndarray) -> Path:
    """Binary P4 bitmap; 1 renders black."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.max(initial=0) > 1:
        raise ValueError("PBM data must be a 2-d bit array")
    h, w = bits.shape
    packed = np.packbits(bits, axis=1)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())
    return path


def read_pbm(path) -> np.ndarray:
    """Inverse of write_pbm, for round-trip checks."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P4"):
        raise ValueError(f"{path}: not a binary PBM file")
    parts = raw.split(b"\n", 2)
    w, h = (int(v) for v in parts[1].split())
    row_bytes = (w + 7) // 8
    data = np.frombuffer(parts[2][: h * row_bytes], dtype=np.uint8).reshape(h, row_bytes)
    return np.unpackbits(data, axis=1)[:, :w]


def write_pgm(path, gray: np.ndarray) -> Path:
    """Binary P5 grayscale image, maxval 255."""
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError("PGM data must be a 2-d array")
    h, w = gray.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
    return path


def snapshot_pgm(path, state: LatticeState) -> Path:
    """Lattice occupancy as grayscale: value = popcount * 255 / z.

    Row 0 of the image is the top of the picture, i.e. the largest y.
    """
    pop = POPCOUNT8[state.occupations]
    gray = (pop.astype(np.uint16) * 255 // state.topology.z).astype(np.uint8)
    return write_pgm(path, gray[::-1])


def write_occupations_csv(path, state: LatticeState) -> Path:
    rows = [
        (x, y, int(state.occupations[y, x]))
        for y in range(state.topology.height)
        for x in range(state.topology.width)
    ]
    return write_csv(path, ("x", "y", "bitmask"), rows)


def write_macrofield_csv(path, field: MacroField) -> Path:
    ny, nx = field.rho.shape
    rows = []
    for y in range(ny):
        for x in range(nx):
            rows.append(
                (
                    x,
                    y,
                    field.rho[y, x],
                    field.u[y, x, 0],
                    field.u[y, x, 1],
                    field.pi[y, x, 0, 0],
                    field.pi[y, x, 0, 1],
                    field.pi[y, x, 1, 1],
                )
            )
    return write_csv(path, ("x", "y", "rho", "ux", "uy", "Pxx", "Pxy", "Pyy"), rows)


def write_diagram_csv(path, rows: np.ndarray) -> Path:
    header = ["t"] + [f"x{i}" for i in range(rows.shape[1])]
    return write_csv(path, header, [(t, *map(int, row)) for t, row in enumerate(rows)])


def write_pattern_table_csv(path, entries: np.ndarray) -> Path:
    header = ["pattern"] + [str(j) for j in range(entries.shape[1])]
    return write_csv(path, header, [(i, *map(int, row)) for i, row in enumerate(entries)])


def write_spectrum_csv(path, eigenvalues: np.ndarray) -> Path:
    return write_csv(
        path, ("rank", "eigenvalue"), [(k + 1, v) for k, v in enumerate(eigenvalues)]
    )


def write_loadings_csv(path, eigenvectors: np.ndarray, components: int = 7) -> Path:
    m = min(components, eigenvectors.shape[1])
    header = ["rule"] + [f"component{k + 1}" for k in range(m)]
    rows = [(j, *eigenvectors[j, :m]) for j in range(eigenvectors.shape[0])]
    return write_csv(path, header, rows)


def write_chain_csv(path, states, p: np.ndarray) -> Path:
    header = ["state"] + [f"to_{s}" for s in states]
    rows = [(states[i], *p[i]) for i in range(len(states))]
    return write_csv(path, header, rows)


def write_trajectories_csv(path, states, paths: np.ndarray) -> Path:
    rows = [
        (trial, t, states[paths[trial, t]])
        for trial in range(paths.shape[0])
        for t in range(paths.shape[1])
    ]
    return write_csv(path, ("trial", "t", "A_t"), rows)


@dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-identically, plus timing."""

    subcommand: str
    parameters: dict
    seed: int
    version: str
    started_at: str
    finished_at: str
    outputs: list[str]


def write_manifest(path, manifest: RunManifest) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    return path
