"""File formats shared by the CLI and the dataset generators.

Edge lists are two-column TSV (src, dst) with optional '#' comments.
Matrices are plain CSV with full round-trip float precision (repr), one
row per node for node tasks and one row per instance for graph tasks.
All writers are deterministic so byte-level reproducibility holds.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Iterable, Sequence, Tuple

import numpy as np


def format_float(x: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(x))


def write_edge_tsv(path, edges: Iterable[Tuple[int, int]]) -> None:
    with open(path, "w") as fh:
        fh.write("# src\tdst\n")
        for s, t in edges:
            fh.write(f"{s}\t{t}\n")


def read_edge_tsv(path):
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two tab-separated columns")
            edges.append((int(parts[0]), int(parts[1])))
    return edges


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(format_float(x) for x in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(x) for x in line.split(",")])
    return np.asarray(rows, dtype=np.float64)


def write_labels_csv(path, labels: Sequence[int]) -> None:
    with open(path, "w") as fh:
        for lab in labels:
            fh.write(f"{int(lab)}\n")


def read_labels_csv(path) -> np.ndarray:
    with open(path) as fh:
        return np.asarray([int(line.strip()) for line in fh if line.strip()], dtype=np.intp)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, doc) -> None:
    """Deterministic JSON written atomically (tmp file then rename)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
