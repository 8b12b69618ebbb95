"""Point-set ingestion, canonical scaling, distance evaluation and ball queries.

A metric is either a set of coordinate vectors with Euclidean distance or an
explicit symmetric distance matrix. After :func:`normalize` the minimum
pairwise distance is exactly 64, the convention every other module relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ftspan.errors import DegenerateMetricError, InputError

MIN_DISTANCE = 64.0


@dataclass
class Metric:
    """Finite metric over point ids 0..n-1.

    Exactly one of ``coords`` (n x d) or ``matrix`` (n x n) is set.
    ``scale_factor`` records the multiplier applied by normalization.
    ``dim_hint`` is the doubling-dimension value used in diagnostics for
    matrix inputs (for coordinates the dimension is taken from the data).
    """

    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None
    scale_factor: float = 1.0
    dim_hint: int | None = None
    _min_max: tuple[float, float] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        if self.coords is not None:
            return self.coords.shape[0]
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        if self.coords is not None:
            return self.coords.shape[1]
        return self.dim_hint if self.dim_hint is not None else 2

    def _check_id(self, u: int) -> None:
        if not 0 <= u < self.n:
            raise InputError(f"invalid point id {u} (n={self.n})")

    def distance(self, u: int, v: int) -> float:
        self._check_id(u)
        self._check_id(v)
        if u == v:
            return 0.0
        if self.coords is not None:
            diff = self.coords[u] - self.coords[v]
            return float(np.sqrt((diff * diff).sum()))
        return float(self.matrix[u, v])

    def dist_row(self, u: int) -> np.ndarray:
        """Distances from u to every point (float64, length n)."""
        self._check_id(u)
        if self.coords is not None:
            diff = self.coords - self.coords[u]
            return np.sqrt((diff * diff).sum(axis=1))
        return self.matrix[u].astype(np.float64, copy=True)

    def dist_block(self, ids_a: np.ndarray, ids_b: np.ndarray) -> np.ndarray:
        """Distance matrix between two id arrays (len(a) x len(b))."""
        if self.coords is not None:
            a = self.coords[ids_a]
            b = self.coords[ids_b]
            diff = a[:, None, :] - b[None, :, :]
            return np.sqrt((diff * diff).sum(axis=2))
        return self.matrix[np.ix_(ids_a, ids_b)]

    def pair_distances(self, iu: np.ndarray, iv: np.ndarray) -> np.ndarray:
        """Distances for parallel id arrays, chunked to bound memory."""
        out = np.empty(len(iu))
        step = 1 << 20
        for s in range(0, len(iu), step):
            e = min(s + step, len(iu))
            if self.coords is not None:
                diff = self.coords[iu[s:e]] - self.coords[iv[s:e]]
                out[s:e] = np.sqrt((diff * diff).sum(axis=1))
            else:
                out[s:e] = self.matrix[iu[s:e], iv[s:e]]
        return out

    def full_matrix(self) -> np.ndarray:
        """Dense n x n distance matrix (only call at audit scales)."""
        if self.matrix is not None:
            return np.ascontiguousarray(self.matrix, dtype=np.float64)
        ids = np.arange(self.n)
        return self.dist_block(ids, ids)

    def min_max_distance(self) -> tuple[float, float]:
        if self.n < 2:
            raise InputError("need at least 2 points")
        if self._min_max is None:
            lo, hi = np.inf, 0.0
            for u in range(self.n - 1):
                row = self.dist_row(u)[u + 1:]
                lo = min(lo, float(row.min()))
                hi = max(hi, float(row.max()))
            self._min_max = (lo, hi)
        return self._min_max


def normalize(raw: Metric) -> Metric:
    """Scale so the minimum pairwise distance is exactly 64.

    Rejects duplicate points: the construction assumes a strictly positive
    minimum distance, and merging duplicates would silently change n and the
    meaning of the fault budget f.
    """
    if raw.n < 2:
        raise InputError("normalize requires n >= 2")
    lo, _ = raw.min_max_distance()
    if lo <= 0.0:
        raise DegenerateMetricError("degenerate metric: duplicate points (zero distance)")
    factor = MIN_DISTANCE / lo
    if raw.coords is not None:
        m = Metric(coords=raw.coords * factor, scale_factor=raw.scale_factor * factor,
                   dim_hint=raw.dim_hint)
    else:
        m = Metric(matrix=raw.matrix * factor, scale_factor=raw.scale_factor * factor,
                   dim_hint=raw.dim_hint)
    return m


def spread(m: Metric) -> float:
    """Ratio of maximum to minimum pairwise distance."""
    lo, hi = m.min_max_distance()
    return hi / lo


def ball(m: Metric, center: int, radius: float) -> np.ndarray:
    """Closed ball: ids of points with distance(center, .) <= radius."""
    if radius < 0:
        raise InputError("radius must be nonnegative")
    return np.flatnonzero(m.dist_row(center) <= radius)


def _data_lines(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, stripped


def load_points(path: str, fmt: str = "coords") -> Metric:
    """Parse a metric file. Not yet normalized.

    fmt="coords": one point per line, whitespace-separated decimals.
    fmt="matrix": first line n, then n rows of n decimals.
    """
    if fmt == "coords":
        rows = []
        dim = None
        for lineno, text in _data_lines(path):
            try:
                vals = [float(tok) for tok in text.split()]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad coordinate: {exc}") from None
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise InputError(
                    f"{path}:{lineno}: expected {dim} coordinates, got {len(vals)}")
            rows.append(vals)
        if not rows:
            raise InputError(f"{path}: empty point file")
        return Metric(coords=np.asarray(rows, dtype=np.float64))

    if fmt == "matrix":
        lines = list(_data_lines(path))
        if not lines:
            raise InputError(f"{path}: empty matrix file")
        lineno0, head = lines[0]
        try:
            n = int(head.split()[0])
        except ValueError:
            raise InputError(f"{path}:{lineno0}: expected point count") from None
        if len(lines) - 1 != n:
            raise InputError(f"{path}: expected {n} matrix rows, got {len(lines) - 1}")
        mat = np.empty((n, n))
        for r, (lineno, text) in enumerate(lines[1:]):
            try:
                vals = [float(tok) for tok in text.split()]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad entry: {exc}") from None
            if len(vals) != n:
                raise InputError(f"{path}:{lineno}: expected {n} entries, got {len(vals)}")
            mat[r] = vals
        m = Metric(matrix=mat)
        validate_matrix(m)
        return m

    raise InputError(f"unknown format {fmt!r} (expected 'coords' or 'matrix')")


def validate_matrix(m: Metric, triangle_samples: int = 200, seed: int = 0) -> None:
    """Symmetry, zero diagonal, nonnegativity; probabilistic triangle check."""
    mat = m.matrix
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise InputError("distance matrix must be square")
    bad = np.argwhere(mat != mat.T)
    if bad.size:
        i, j = bad[0]
        raise InputError(f"asymmetric matrix: a[{i}][{j}] != a[{j}][{i}]")
    if (mat < 0).any():
        raise InputError("negative distance in matrix")
    if np.diagonal(mat).any():
        raise InputError("nonzero diagonal in matrix")
    if n >= 3:
        rng = np.random.default_rng(seed)
        tri = rng.integers(0, n, size=(triangle_samples, 3))
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        slack = 1e-9 * np.maximum(1.0, mat[a, b])
        if (mat[a, b] > mat[a, c] + mat[c, b] + slack).any():
            raise InputError("triangle inequality violated in matrix")


def save_points(path: str, coords: np.ndarray, header: str | None = None) -> None:
    """Write a coordinate file (one point per line, repr-exact floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for row in coords:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def sorted_pairs(m: Metric) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All unordered pairs sorted by (distance, min id, max id).

    The shared scan order of the MST and the path-greedy spanner; ties are
    broken identically in both so MST edges always enter the spanner.
    """
    n = m.n
    iu, iv = np.triu_indices(n, k=1)
    iu = iu.astype(np.int32)
    iv = iv.astype(np.int32)
    d = m.pair_distances(iu, iv)
    order = np.lexsort((iv, iu, d))
    return iu[order], iv[order], d[order]
