"""Finite-dimensional normed spaces, norm evaluation, and dual-ball nets.

Three space kinds are supported: coordinate l_p spaces, sup-norm spaces over a
finite point set, and d x d matrices with the spectral norm.  Values are
immutable after construction; every operation here is a pure function of its
inputs, so results may be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyFamilyError,
    GuardExceededError,
    NonFiniteEntryError,
)

REAL = "real"
COMPLEX = "complex"

LP = "lp"
SUP = "sup"
MATRIX = "matrix"

KRON_DIM_CAP = 4096
NET_REAL_DIM_CAP = 4

# Rayleigh-quotient residual target for the power iteration behind spectral norms.
SPECTRAL_RESIDUAL_TOL = 1e-12
_SPECTRAL_MAX_ITER = 50_000


@dataclass(frozen=True)
class FiniteNormedSpace:
    """A finite-dimensional normed space with an evaluable norm.

    ``dim`` counts coordinates for ``lp`` and ``sup`` spaces and the matrix
    side length for ``matrix`` spaces.  ``p`` is only meaningful for ``lp``
    (use ``math.inf`` for the sup norm on coordinates).
    """

    kind: str
    dim: int
    field: str = COMPLEX
    p: float | None = None

    def __post_init__(self):
        if self.kind not in (LP, SUP, MATRIX):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.field not in (REAL, COMPLEX):
            raise ValueError(f"unknown scalar field {self.field!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.kind == LP:
            if self.p is None or not (1.0 <= self.p):
                raise ValueError("lp spaces need an exponent p in [1, inf]")
        elif self.p is not None:
            raise ValueError("only lp spaces take an exponent")

    @property
    def coord_count(self) -> int:
        return self.dim * self.dim if self.kind == MATRIX else self.dim

    @property
    def real_dim(self) -> int:
        return self.coord_count * (2 if self.field == COMPLEX else 1)

    @property
    def dtype(self):
        return np.complex128 if self.field == COMPLEX else np.float64

    def dual_exponent(self) -> float:
        """Exponent q of the dual norm in coordinates (trace duality for 1x1 matrices)."""
        if self.kind == SUP:
            return 1.0
        if self.kind == MATRIX:
            if self.dim != 1:
                raise GuardExceededError("dual-ball machinery only covers 1x1 matrix spaces")
            return 1.0
        p = float(self.p)
        if p == 1.0:
            return math.inf
        if math.isinf(p):
            return 1.0
        return p / (p - 1.0)

    def check_vector(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=self.dtype)
        if arr.shape == (self.dim, self.dim) and self.kind == MATRIX:
            arr = arr.reshape(-1)
        if arr.shape != (self.coord_count,):
            raise DimensionMismatchError(
                f"expected {self.coord_count} coordinates, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr.view(np.float64) if arr.dtype == np.complex128 else arr)):
            raise NonFiniteEntryError("vector contains non-finite entries")
        return arr

    def norm(self, x) -> float:
        arr = self.check_vector(x)
        if self.kind == MATRIX:
            value, _residual = spectral_norm_certified(arr.reshape(self.dim, self.dim))
            return value
        return _coordinate_norm(np.abs(arr), self.p if self.kind == LP else math.inf)

    def batch_norms(self, rows: np.ndarray) -> np.ndarray:
        """Norms of many vectors at once; rows has shape (batch, coord_count)."""
        rows = np.asarray(rows, dtype=self.dtype)
        if rows.ndim != 2 or rows.shape[1] != self.coord_count:
            raise DimensionMismatchError("batch shape mismatch")
        if self.kind == MATRIX:
            mats = rows.reshape(-1, self.dim, self.dim)
            return _batch_spectral_norms(mats)
        return _coordinate_norm(np.abs(rows), self.p if self.kind == LP else math.inf, axis=1)


def _coordinate_norm(absvals, p, axis=None):
    if math.isinf(p):
        return np.max(absvals, axis=axis)
    if p == 1.0:
        return np.sum(absvals, axis=axis)
    if p == 2.0:
        return np.sqrt(np.sum(absvals * absvals, axis=axis))
    return np.sum(absvals**p, axis=axis) ** (1.0 / p)


def lp_space(p: float, dim: int, field: str = COMPLEX) -> FiniteNormedSpace:
    return FiniteNormedSpace(LP, dim, field, float(p))


def sup_space(points: int, field: str = COMPLEX) -> FiniteNormedSpace:
    return FiniteNormedSpace(SUP, points, field)


def matrix_space(d: int, field: str = COMPLEX) -> FiniteNormedSpace:
    return FiniteNormedSpace(MATRIX, d, field)


# ---------------------------------------------------------------------------
# spectral norm by power iteration
# ---------------------------------------------------------------------------

def _rayleigh_iterate(H: np.ndarray, v: np.ndarray, tol: float):
    lam = 0.0
    resid = math.inf
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0, math.inf
    v = v / nv
    for _ in range(_SPECTRAL_MAX_ITER):
        w = H @ v
        lam = float(np.real(np.vdot(v, w)))
        resid = float(np.linalg.norm(w - lam * v))
        if resid <= tol * max(abs(lam), 1.0):
            break
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v sits in the kernel of H; the caller retries from another start
            return 0.0, 0.0
        v = w / nw
    return max(lam, 0.0), resid


def spectral_norm_certified(m: np.ndarray, tol: float = SPECTRAL_RESIDUAL_TOL):
    """Largest singular value with a Rayleigh residual certificate.

    Power iteration on m*m with two deterministic starts (all ones, then a
    fixed cosine ramp that is never orthogonal to an eigenspace in practice);
    the larger converged Rayleigh quotient wins.  The residual r certifies
    that m*m has an eigenvalue within r of the returned quotient.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("spectral norm needs a square matrix")
    d = m.shape[0]
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if scale == 0.0:
        return 0.0, 0.0
    h = (m.conj().T @ m) / (scale * scale)
    starts = [np.ones(d), np.cos(1.0 + np.arange(d))]
    best_lam, best_resid = 0.0, math.inf
    for v0 in starts:
        lam, resid = _rayleigh_iterate(h, v0.astype(h.dtype), tol)
        if lam > best_lam:
            best_lam, best_resid = lam, resid
    return scale * math.sqrt(best_lam), best_resid


def _batch_spectral_norms(mats: np.ndarray, tol: float = SPECTRAL_RESIDUAL_TOL):
    """Vectorized power iteration over a stack of square matrices."""
    b, d, _ = mats.shape
    h = np.einsum("bji,bjk->bik", mats.conj(), mats)
    scale = np.max(np.abs(h), axis=(1, 2))
    safe = np.where(scale > 0.0, scale, 1.0)
    h = h / safe[:, None, None]
    out = np.zeros(b)
    for v0 in (np.ones(d), np.cos(1.0 + np.arange(d))):
        v = np.broadcast_to(v0, (b, d)).astype(h.dtype).copy()
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        lam = np.zeros(b)
        for _ in range(500):
            w = np.einsum("bik,bk->bi", h, v)
            lam = np.real(np.einsum("bi,bi->b", v.conj(), w))
            resid = np.linalg.norm(w - lam[:, None] * v, axis=1)
            if np.all(resid <= tol * np.maximum(np.abs(lam), 1.0)):
                break
            nw = np.linalg.norm(w, axis=1, keepdims=True)
            v = np.where(nw > 0, w / np.where(nw == 0, 1, nw), v)
        out = np.maximum(out, np.maximum(lam, 0.0))
    return np.sqrt(out * scale)


# ---------------------------------------------------------------------------
# Kronecker products
# ---------------------------------------------------------------------------

def kron(matrices) -> np.ndarray:
    """Kronecker product of square matrices, in list order."""
    mats = [np.asarray(m) for m in matrices]
    if not mats:
        raise EmptyFamilyError("kron of an empty list")
    total = 1
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("kron factors must be square")
        total *= m.shape[0]
        if total > KRON_DIM_CAP:
            raise GuardExceededError(f"kron dimension {total} exceeds cap {KRON_DIM_CAP}")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# vector families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorFamily:
    """An ordered finite probe set of vectors in one space.

    ``labels`` usually carry orbit times.  ``coefficient_field`` is the scalar
    field of the coefficient space used by basis-constant computations; a
    complex family may be analysed with real coefficients (realified span),
    which matters for spin and shift examples.
    """

    space: FiniteNormedSpace
    vectors: tuple
    labels: tuple | None = None
    coefficient_field: str | None = None

    def __post_init__(self):
        vecs = tuple(self.space.check_vector(v) for v in self.vectors)
        for v in vecs:
            v.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(vecs):
                raise DimensionMismatchError("labels and vectors disagree in length")
            object.__setattr__(self, "labels", labels)
        cf = self.coefficient_field or self.space.field
        if cf == COMPLEX and self.space.field == REAL:
            raise ValueError("complex coefficients over a real space are not defined")
        object.__setattr__(self, "coefficient_field", cf)

    def __len__(self):
        return len(self.vectors)

    def matrix(self) -> np.ndarray:
        """Vectors stacked as rows."""
        return np.array(self.vectors)

    def norms(self) -> np.ndarray:
        return self.space.batch_norms(self.matrix())

    def subfamily(self, indices) -> "VectorFamily":
        idx = list(indices)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return VectorFamily(
            self.space,
            tuple(self.vectors[i] for i in idx),
            labels,
            self.coefficient_field,
        )


# ---------------------------------------------------------------------------
# dual-ball nets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Functional:
    """A dual vector with a certified dual-norm bound; evaluation is the pairing sum."""

    space: FiniteNormedSpace
    coefficients: np.ndarray
    dual_norm_bound: float

    def __call__(self, x) -> complex:
        arr = self.space.check_vector(x)
        return complex(np.sum(self.coefficients * arr))


@dataclass(frozen=True)
class CoveringCertificate:
    mesh: float
    construction_step: float
    certificate_step: float
    certificate_points: int
    max_distance: float
    patched: int

    @property
    def covered(self) -> bool:
        return self.max_distance <= self.mesh * (1.0 + 1e-9)


def _dual_moduli(points_real: np.ndarray, space: FiniteNormedSpace) -> np.ndarray:
    if space.field == COMPLEX:
        n = points_real.shape[-1] // 2
        re = points_real[..., :n]
        im = points_real[..., n:]
        return np.sqrt(re * re + im * im)
    return np.abs(points_real)


def _dual_norm_rows(points_real: np.ndarray, space: FiniteNormedSpace) -> np.ndarray:
    return _coordinate_norm(_dual_moduli(points_real, space), space.dual_exponent(), axis=-1)


def _dual_dist(rows: np.ndarray, point: np.ndarray, space: FiniteNormedSpace) -> np.ndarray:
    return _dual_norm_rows(rows - point, space)


def _axis_points(step: float) -> np.ndarray:
    count = int(round(2.0 / step))
    return np.linspace(-1.0, 1.0, count + 1)


def _ball_grid(space: FiniteNormedSpace, step: float, cap: int | None = None) -> np.ndarray:
    """Deterministic sample of the closed dual ball: a box lattice restricted to
    the ball, together with the radial projections of a surrounding shell (so
    the dual sphere, which carries the extreme points, is sampled densely)."""
    rd = space.real_dim
    axis = _axis_points(step)
    if cap is not None:
        while (len(axis)) ** rd > cap and len(axis) > 9:
            step *= 2.0
            axis = _axis_points(step)
    grids = np.meshgrid(*([axis] * rd), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    dn = _dual_norm_rows(pts, space)
    inside = pts[dn <= 1.0 + 1e-12]
    shell_mask = (dn > 1.0 + 1e-12) & (dn <= 1.6)
    shell = pts[shell_mask] / dn[shell_mask][:, None]
    allpts = np.vstack([inside, shell]) if len(shell) else inside
    allpts = np.unique(np.round(allpts, 12), axis=0)
    order = np.lexsort(allpts.T[::-1])
    return allpts[order]


def _real_to_native(point_real: np.ndarray, space: FiniteNormedSpace) -> np.ndarray:
    if space.field == COMPLEX:
        n = space.coord_count
        return point_real[:n] + 1j * point_real[n:]
    return point_real.astype(np.float64)


def dual_ball_net(
    space: FiniteNormedSpace,
    mesh: float,
    construction_step: float | None = None,
    certificate_step: float | None = None,
):
    """Greedy net of the dual unit ball at covering radius ``mesh``.

    Returns ``(functionals, certificate)``.  Construction: scan a deterministic
    lattice sample of the ball in lexicographic order; for the first uncovered
    point, add the candidate lattice point that covers the most still-uncovered
    points (ties resolved lexicographically).  The certificate then verifies
    the covering on an independent, finer sample and greedily patches any
    stragglers, so ``certificate.max_distance <= mesh`` always holds on exit.
    """
    if mesh <= 0.0:
        raise ValueError("mesh must be positive")
    rd = space.real_dim
    if rd > NET_REAL_DIM_CAP:
        raise GuardExceededError(
            f"dual-ball nets are desk-scale: real dimension {rd} exceeds {NET_REAL_DIM_CAP}"
        )
    space.dual_exponent()  # raises for unsupported matrix sizes

    step = construction_step if construction_step is not None else mesh / 8.0
    cap = 30_000 if rd >= 3 else 30_000
    probes = _ball_grid(space, step, cap=cap)
    reach = mesh * (1.0 + 1e-12)

    uncovered = np.ones(len(probes), dtype=bool)
    centers: list[np.ndarray] = []
    while uncovered.any():
        first = int(np.argmax(uncovered))
        p = probes[first]
        cand_idx = np.nonzero(_dual_dist(probes, p, space) <= reach)[0]
        unc_idx = np.nonzero(uncovered)[0]
        dmat = _dual_norm_rows(
            probes[cand_idx][:, None, :] - probes[unc_idx][None, :, :], space
        )
        covered = dmat <= reach
        counts = covered.sum(axis=1)
        best_pos = int(np.argmax(counts))  # first max = lexicographically first candidate
        centers.append(probes[cand_idx[best_pos]])
        uncovered[unc_idx[covered[best_pos]]] = False

    # independent covering certificate on a finer sample, with greedy patching
    cert_step = certificate_step
    if cert_step is None:
        cert_step = max(mesh / 10.0, 2e-3 if rd <= 2 else 4e-2)
    cert_pts = _ball_grid(space, cert_step, cap=4_000_000 if rd <= 2 else 200_000)
    center_arr = np.array(centers)
    min_dist = _min_dist_to_centers(cert_pts, center_arr, space)
    patched = 0
    while float(min_dist.max()) > reach:
        bad = int(np.argmax(min_dist > reach))
        new_center = cert_pts[bad]
        center_arr = np.vstack([center_arr, new_center])
        min_dist = np.minimum(min_dist, _dual_dist(cert_pts, new_center, space))
        patched += 1

    cert = CoveringCertificate(
        mesh=float(mesh),
        construction_step=float(step),
        certificate_step=float(cert_step),
        certificate_points=int(len(cert_pts)),
        max_distance=float(min_dist.max()),
        patched=patched,
    )
    functionals = [
        Functional(space, _real_to_native(c, space), float(_dual_norm_rows(c, space)))
        for c in center_arr
    ]
    return functionals, cert


def _min_dist_to_centers(points, centers, space, chunk=200_000):
    out = np.full(len(points), np.inf)
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        d = _dual_norm_rows(block[:, None, :] - centers[None, :, :], space)
        out[start : start + chunk] = d.min(axis=1)
    return out


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def _parse_scalar(entry, field):
    if field == COMPLEX:
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise ValueError("complex entries must be [re, im] pairs")
        return complex(float(entry[0]), float(entry[1]))
    return float(entry)


def load_space(obj: dict) -> FiniteNormedSpace:
    """Build a space from the documented JSON description."""
    kind = obj.get("kind")
    fld = obj.get("field", "complex")
    dim = obj.get("dim")
    if kind == "lp":
        p = obj.get("p")
        p = math.inf if p in ("inf", "Infinity") else float(p)
        return lp_space(p, int(dim), fld)
    if kind == "sup":
        return sup_space(int(obj.get("points", dim)), fld)
    if kind == "matrix":
        return matrix_space(int(obj.get("d", dim)), fld)
    raise ValueError(f"unknown space kind {kind!r}")


def load_vector_family(obj) -> VectorFamily:
    """Load {"space": {...}, "vectors": [[...], ...]} from a dict or a JSON file path."""
    if isinstance(obj, (str, bytes)):
        with open(obj) as fh:
            obj = json.load(fh)
    space = load_space(obj["space"])
    vectors = []
    for raw in obj["vectors"]:
        vectors.append([_parse_scalar(e, space.field) for e in raw])
    labels = tuple(obj["labels"]) if "labels" in obj else None
    cf = obj.get("coefficient_field")
    return VectorFamily(space, tuple(np.array(v, dtype=space.dtype) for v in vectors), labels, cf)
