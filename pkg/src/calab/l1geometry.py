"""Basis constants of a vector family relative to the standard l1 basis.

For a family x_1..x_n the map gamma sends the i-th l1 basis vector to x_i.
The upper constant ||gamma|| is exact (attained at unimodular multiples of
basis vectors).  The lower constant ||gamma^{-1}||^{-1}, the minimum of
||sum c_i x_i|| over the l1 coefficient sphere, is enclosed two ways:

* ``lower_basis_constant`` - a Lipschitz-certified lattice scan over each
  sign-pattern face of the sphere (phases gridded in the complex case);
* ``lower_basis_constant_exact`` - exact certificates where structure allows
  (per-face linear programs for polyhedral norms, a spectral bound for
  Euclidean spaces, and a disjoint-support decomposition that makes long
  shift orbits tractable).

The witness search for dense, well-equivalent sub-orbits sits on top.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import (
    EmptyFamilyError,
    GuardExceededError,
    NotAnIsomorphismError,
    UnsupportedStructureError,
)
from .intervals import ANALYTIC, EXHAUSTIVE, LIPSCHITZ_GRID, Certificate, Interval
from .spaces import (
    COMPLEX,
    LP,
    MATRIX,
    REAL,
    SUP,
    FiniteNormedSpace,
    VectorFamily,
    _coordinate_norm,
)

GRID_EVALUATION_CAP = 150_000_000
LP_PATTERN_CAP = 4096
_LP_GUARD = 5e-10


def upper_basis_constant(family: VectorFamily) -> float:
    """max_i ||x_i||; exact, since the l1 ball's extreme points are unimodular basis multiples."""
    if len(family) == 0:
        raise EmptyFamilyError("upper basis constant of an empty family")
    return float(np.max(family.norms()))


# ---------------------------------------------------------------------------
# certified lattice enclosure
# ---------------------------------------------------------------------------

def _lattice_denominator(parts: int, mesh: float) -> int:
    # N = parts * 2^k keeps successive lattices nested when the mesh halves and
    # makes the covering radius parts/N <= mesh/2, which together guarantee
    # that refining the mesh never widens the certified interval.
    k = max(0, math.ceil(math.log2(2.0 / mesh))) if mesh < 2.0 else 0
    return parts * (1 << k)


def _composition_blocks(total: int, parts: int, chunk_rows: int = 4_000_000):
    """Yield blocks of compositions of ``total`` into ``parts`` nonnegative
    integers; the final two coordinates are vectorized, and for three parts the
    leading coordinate is chunked so each block carries millions of rows."""
    if parts == 1:
        yield np.array([[total]])
        return
    if parts == 2:
        k = np.arange(total + 1)
        yield np.stack([k, total - k], axis=1)
        return
    if parts == 3:
        k1 = 0
        while k1 <= total:
            hi = k1
            rows = 0
            while hi <= total and rows + (total - hi + 1) <= chunk_rows:
                rows += total - hi + 1
                hi += 1
            firsts = np.repeat(
                np.arange(k1, hi), [total - v + 1 for v in range(k1, hi)]
            )
            seconds = np.concatenate([np.arange(total - v + 1) for v in range(k1, hi)])
            block = np.stack([firsts, seconds, total - firsts - seconds], axis=1)
            yield block
            k1 = hi
        return
    for head in itertools.product(*(range(total + 1) for _ in range(parts - 2))):
        used = sum(head)
        if used > total:
            continue
        rem = total - used
        k = np.arange(rem + 1)
        block = np.empty((rem + 1, parts), dtype=np.int64)
        block[:, : parts - 2] = head
        block[:, parts - 2] = k
        block[:, parts - 1] = rem - k
        yield block


def _count_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def _phase_count(mesh: float, lipschitz: float) -> int:
    spacing = mesh / max(lipschitz, 1.0)
    return 1 << max(0, math.ceil(math.log2(2.0 * math.pi / spacing)))


def _row_closed_form_p(space) -> float | None:
    """Exponent usable by the closed-form row minimization, or None."""
    if space.field != REAL:
        return None
    if space.kind == SUP:
        return math.inf
    if space.kind == LP and space.p in (1.0, 2.0, math.inf):
        return float(space.p)
    return None


def _row_lattice_minimum(alpha: np.ndarray, beta: np.ndarray, m_caps: np.ndarray, p: float) -> float:
    """Exact min over integer u in [0, m_cap] of ||alpha_row + u * beta||_p.

    Each row is convex in u, so the integer minimum sits at the floor/ceil of a
    continuous vertex: the quadratic argmin for p = 2, coordinate roots for
    p = 1, and roots plus pairwise |line| crossings for the sup norm.
    """
    rows, dim = alpha.shape
    cands = [np.zeros(rows), m_caps.astype(np.float64)]
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 2.0:
            bb = float(beta @ beta)
            if bb > 0.0:
                u_star = -(alpha @ beta) / bb
                cands.append(u_star)
        else:
            for c in range(dim):
                if beta[c] != 0.0:
                    cands.append(-alpha[:, c] / beta[c])
            if math.isinf(p):
                for c in range(dim):
                    for d in range(c + 1, dim):
                        for sgn in (1.0, -1.0):
                            denom = beta[c] - sgn * beta[d]
                            if denom != 0.0:
                                cands.append(-(alpha[:, c] - sgn * alpha[:, d]) / denom)
    best = np.full(rows, np.inf)
    for cand in cands:
        cand = np.nan_to_num(cand, nan=0.0, posinf=0.0, neginf=0.0)
        for u in (np.floor(cand), np.ceil(cand)):
            u = np.clip(u, 0.0, m_caps)
            pts = alpha + u[:, None] * beta[None, :]
            vals = _coordinate_norm(np.abs(pts), p, axis=1)
            np.minimum(best, vals, out=best)
    return float(best.min())


def _face_minimum_closed_form(signed: np.ndarray, n_lat: int, p: float) -> float:
    """Exact lattice minimum over one sign-pattern face via per-row closed forms.

    Heads enumerate all but the last two lattice coordinates; the final
    coordinate pair reduces to 1-d convex minimization along beta."""
    s, dim = signed.shape
    w = signed / n_lat
    beta = w[s - 2] - w[s - 1]
    best = math.inf
    head_iter = (
        [()] if s == 2 else itertools.product(*(range(n_lat + 1) for _ in range(s - 2)))
    )
    chunk_alpha = []
    chunk_caps = []
    for head in head_iter:
        used = sum(head)
        if used > n_lat:
            continue
        alpha = (n_lat - used) * w[s - 1]
        for i, k in enumerate(head):
            alpha = alpha + k * w[i]
        chunk_alpha.append(alpha)
        chunk_caps.append(n_lat - used)
        if len(chunk_alpha) >= 200_000:
            best = min(
                best,
                _row_lattice_minimum(np.array(chunk_alpha), beta, np.array(chunk_caps), p),
            )
            chunk_alpha, chunk_caps = [], []
    if chunk_alpha:
        best = min(
            best,
            _row_lattice_minimum(np.array(chunk_alpha), beta, np.array(chunk_caps), p),
        )
    return best


def _grid_minimum(family: VectorFamily, mesh: float) -> float:
    space = family.space
    s = len(family)
    vecs = family.matrix()
    norms = family.norms()
    lip = float(np.max(norms))
    n_lat = _lattice_denominator(s, mesh)
    n_mag = _count_compositions(n_lat, s)

    complex_coeffs = family.coefficient_field == COMPLEX
    closed_p = None if complex_coeffs or s < 2 else _row_closed_form_p(space)
    if closed_p is not None and (closed_p == 2.0 or space.coord_count <= 12):
        # closed-form row minimization: same lattice, evaluated exactly
        heads = _count_compositions(n_lat, s - 2) if s > 2 else 1
        if heads * (1 << (s - 1)) <= GRID_EVALUATION_CAP:
            vreal = vecs.astype(np.float64)
            best = math.inf
            for sigma in itertools.product([1.0, -1.0], repeat=s - 1):
                signs = np.concatenate(([1.0], sigma))
                best = min(
                    best,
                    _face_minimum_closed_form(vreal * signs[:, None], n_lat, closed_p),
                )
            return best

    if complex_coeffs:
        pc = _phase_count(mesh, lip)
        total = n_mag * pc ** (s - 1)
    else:
        total = n_mag * (1 << (s - 1))
    if total > GRID_EVALUATION_CAP:
        raise GuardExceededError(
            f"lattice scan needs {total:.2e} evaluations (cap {GRID_EVALUATION_CAP:.1e}); "
            "use a coarser mesh or the exact engine"
        )

    best = math.inf
    if complex_coeffs:
        angles = 2.0 * math.pi * np.arange(pc) / pc
        unit = np.exp(1j * angles)
        for block in _composition_blocks(n_lat, s):
            t = block.astype(np.float64) / n_lat
            # first coefficient's phase is fixed by global-phase invariance
            for combo in itertools.product(range(pc), repeat=s - 1):
                phases = np.concatenate(([1.0 + 0j], unit[list(combo)])) if s > 1 else np.array([1.0 + 0j])
                coeffs = t * phases[None, :]
                vals = space.batch_norms(coeffs @ vecs)
                m = float(vals.min())
                if m < best:
                    best = m
    else:
        signs = np.array(list(itertools.product([1.0, -1.0], repeat=s - 1)))
        signs = np.hstack([np.ones((len(signs), 1)), signs]) if s > 1 else np.ones((1, 1))
        for block in _composition_blocks(n_lat, s):
            t = block.astype(np.float64) / n_lat
            for sigma in signs:
                coeffs = t * sigma[None, :]
                rows = coeffs.astype(space.dtype) @ vecs
                vals = space.batch_norms(rows)
                m = float(vals.min())
                if m < best:
                    best = m
    return best


def lower_basis_constant(family: VectorFamily, mesh: float) -> Interval:
    """Certified enclosure of min ||sum c_i x_i|| over the l1 coefficient sphere.

    The sphere is scanned per sign-pattern simplex face on a lattice whose
    covering radius is at most mesh/2 (complex coefficients additionally grid
    each free phase).  The combination map is L-Lipschitz in l1 coefficient
    distance with L = max ||x_i||, giving

        lo = grid minimum - L * mesh   (clamped at 0),   hi = grid minimum.
    """
    if len(family) == 0:
        raise EmptyFamilyError("lower basis constant of an empty family")
    if mesh <= 0.0:
        raise ValueError("mesh must be positive")
    gm = _grid_minimum(family, mesh)
    lip = float(np.max(family.norms()))
    lo = max(0.0, gm - lip * mesh)
    cert = Certificate(LIPSCHITZ_GRID, mesh=float(mesh), lipschitz=lip)
    return Interval(lo, gm, cert)


# ---------------------------------------------------------------------------
# exact engine
# ---------------------------------------------------------------------------

def _support_groups(family: VectorFamily):
    """Connected components of the coordinate-support overlap graph."""
    mats = family.matrix()
    supports = [set(np.nonzero(np.abs(row) > 0.0)[0]) for row in mats]
    n = len(supports)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    coord_owner: dict[int, int] = {}
    for i, sup in enumerate(supports):
        for c in sup:
            if c in coord_owner:
                ri, rj = find(i), find(coord_owner[c])
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
            else:
                coord_owner[c] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(v) for _, v in sorted(groups.items())]


def _face_lp_minimum(b_matrix: np.ndarray, norm_p: float) -> float:
    """Exact min of ||B t|| over the simplex, for the l1 or sup norm (B real)."""
    coords, s = b_matrix.shape
    if math.isinf(norm_p):
        # min z  s.t.  -z <= (Bt)_j <= z,  sum t = 1,  t >= 0
        c = np.zeros(s + 1)
        c[-1] = 1.0
        a_ub = np.vstack(
            [
                np.hstack([b_matrix, -np.ones((coords, 1))]),
                np.hstack([-b_matrix, -np.ones((coords, 1))]),
            ]
        )
        b_ub = np.zeros(2 * coords)
        a_eq = np.hstack([np.ones((1, s)), np.zeros((1, 1))])
    else:
        # min sum u  s.t.  -u <= Bt <= u
        c = np.concatenate([np.zeros(s), np.ones(coords)])
        eye = np.eye(coords)
        a_ub = np.vstack(
            [np.hstack([b_matrix, -eye]), np.hstack([-b_matrix, -eye])]
        )
        b_ub = np.zeros(2 * coords)
        a_eq = np.hstack([np.ones((1, s)), np.zeros((1, coords))])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], method="highs")
    if not res.success:
        raise UnsupportedStructureError(f"face LP failed: {res.message}")
    return float(res.fun)


def _combine_disjoint_groups(minima: list[float], p: float) -> float:
    """Minimum over the joint l1 sphere when groups occupy disjoint coordinates.

    Writing t_g for the l1 mass given to group g, the combination norm is the
    p-combination of t_g * m_g, and optimizing over the simplex gives
    min_g m_g for p = 1, (sum m_g^-r)^(-1/r) with r = p/(p-1) for 1 < p < inf,
    and the harmonic combination (sum 1/m_g)^-1 for the sup norm.
    """
    if any(m <= 0.0 for m in minima):
        return 0.0
    if p == 1.0:
        return min(minima)
    if math.isinf(p):
        return 1.0 / sum(1.0 / m for m in minima)
    r = p / (p - 1.0)
    return sum(m**-r for m in minima) ** (-1.0 / r)


def _exact_single_group(family: VectorFamily) -> Interval:
    space = family.space
    s = len(family)
    if s == 1:
        v = float(family.norms()[0])
        return Interval(max(0.0, v - _LP_GUARD), v + _LP_GUARD, Certificate(ANALYTIC))
    if family.coefficient_field == COMPLEX:
        raise UnsupportedStructureError("exact engine covers real coefficients only")

    polyhedral = space.kind == SUP or (space.kind == LP and space.p in (1.0, math.inf))
    if polyhedral and space.field == REAL:
        if 1 << (s - 1) > LP_PATTERN_CAP:
            raise UnsupportedStructureError(f"too many sign patterns for the LP engine ({s} vectors)")
        vecs = family.matrix().astype(np.float64)
        norm_p = 1.0 if (space.kind == LP and space.p == 1.0) else math.inf
        best = math.inf
        for sigma in itertools.product([1.0, -1.0], repeat=s - 1):
            signs = np.concatenate(([1.0], sigma))
            b = (vecs * signs[:, None]).T  # coords x s
            best = min(best, _face_lp_minimum(b, norm_p))
        return Interval(max(0.0, best - _LP_GUARD), best + _LP_GUARD, Certificate(ANALYTIC))

    if space.kind == LP and space.p == 2.0 and space.field == REAL:
        vecs = family.matrix().astype(np.float64)
        gram = vecs @ vecs.T
        eigs = np.linalg.eigvalsh(gram)
        sigma_min = math.sqrt(max(float(eigs[0]), 0.0))
        lo = max(0.0, sigma_min / math.sqrt(s) - _LP_GUARD)
        # any feasible point gives an upper endpoint; probe a few symmetric ones
        probes = [np.full(s, 1.0 / s)]
        alt = np.array([(-1.0) ** i for i in range(s)]) / s
        probes.append(alt)
        probes.extend(np.eye(s))
        hi = min(float(np.linalg.norm(p @ vecs)) for p in probes)
        return Interval(lo, hi + _LP_GUARD, Certificate(ANALYTIC))

    if s == 2 and space.kind != MATRIX:
        return _pair_lattice_interval(family)

    raise UnsupportedStructureError(
        f"no exact certificate for kind={space.kind!r} p={space.p} field={space.field}"
    )


def _pair_lattice_interval(family: VectorFamily, steps: int = 1 << 17) -> Interval:
    """Near-exact enclosure for a two-vector group with real coefficients.

    The sphere reduces to c = (t, +/-(1 - t)) for t in [0, 1]; a dense 1-d
    lattice plus the Lipschitz correction gives a width of about 2L/steps.
    """
    x, y = family.vectors
    t = np.linspace(0.0, 1.0, steps + 1)
    lip = float(np.max(family.norms()))
    best = math.inf
    for sign in (1.0, -1.0):
        coeffs = np.stack([t, sign * (1.0 - t)], axis=1).astype(family.space.dtype)
        vals = family.space.batch_norms(coeffs @ np.stack([x, y]))
        best = min(best, float(vals.min()))
    mesh = 2.0 / steps
    return Interval(max(0.0, best - lip * mesh), best, Certificate(LIPSCHITZ_GRID, mesh, lip))


def lower_basis_constant_exact(family: VectorFamily) -> Interval:
    """Exact/analytic enclosure of the lower basis constant where structure allows.

    Families whose vectors split into coordinate-disjoint groups reduce to the
    groups (mass allocation across groups optimizes in closed form, see
    ``_combine_disjoint_groups``); each group is then handled by
    per-sign-pattern LPs (l1/sup norms over the reals), a smallest singular
    value bound (Euclidean), a dense 1-d lattice for pairs, or directly for
    singletons.
    """
    if len(family) == 0:
        raise EmptyFamilyError("lower basis constant of an empty family")
    space = family.space
    if float(np.min(family.norms())) == 0.0:
        return Interval(0.0, 0.0, Certificate(ANALYTIC))
    if space.kind != MATRIX and len(family) > 1:
        groups = _support_groups(family)
        if len(groups) > 1:
            subs = [_group_interval(family, g) for g in groups]
            p = math.inf if space.kind == SUP else float(space.p)
            lo = _combine_disjoint_groups([iv.lo for iv in subs], p)
            hi = _combine_disjoint_groups([iv.hi for iv in subs], p)
            return Interval(lo, hi, Certificate(ANALYTIC))
    return _memoized_single_group(family)


_GROUP_CACHE: dict[tuple, Interval] = {}


def _memoized_single_group(family: VectorFamily) -> Interval:
    space = family.space
    key = (
        space.kind,
        space.p,
        space.field,
        family.coefficient_field,
        family.matrix().tobytes(),
    )
    hit = _GROUP_CACHE.get(key)
    if hit is None:
        hit = _exact_single_group(family)
        if len(_GROUP_CACHE) > 512:
            _GROUP_CACHE.clear()
        _GROUP_CACHE[key] = hit
    return hit


def _group_interval(family: VectorFamily, indices) -> Interval:
    """Group subfamily restricted to its own support columns; coordinate norms
    ignore zero coordinates, and the projection makes translated copies of the
    same geometry (shift orbits) share one cache entry."""
    sub = family.subfamily(indices)
    mat = sub.matrix()
    support = np.nonzero(np.any(np.abs(mat) > 0.0, axis=0))[0]
    space = family.space
    projected_space = FiniteNormedSpace(
        space.kind, len(support), space.field, space.p if space.kind == LP else None
    )
    projected = VectorFamily(
        projected_space,
        tuple(mat[:, support]),
        coefficient_field=family.coefficient_field,
    )
    return _memoized_single_group(projected)


# ---------------------------------------------------------------------------
# assembled constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisConstants:
    upper: float
    lower: Interval
    equivalence: Interval

    def __post_init__(self):
        if self.lower.hi > self.upper * (1.0 + 1e-9) + 1e-9:
            raise ValueError("lower constant cannot exceed the upper constant")


def _equivalence_from(upper: float, lower: Interval) -> Interval:
    if lower.hi <= 0.0:
        raise NotAnIsomorphismError("certified degenerate family: lower constant is zero")
    # a few ulps of slack keep the crosswise divisions enclosing despite rounding
    hi = (upper / lower.lo) * (1.0 + 4e-16) if lower.lo > 0.0 else math.inf
    lo = max(1.0, (upper / lower.hi) * (1.0 - 4e-16))
    return Interval(lo, hi, lower.certificate)


def basis_constants(
    family: VectorFamily, mesh: float | None = None, method: str = "auto"
) -> BasisConstants:
    """Upper constant, certified lower interval, and their crosswise quotient.

    ``method`` is one of ``"auto"`` (exact engine when the family qualifies,
    lattice scan otherwise), ``"exact"``, or ``"grid"`` (requires ``mesh``).
    """
    upper = upper_basis_constant(family)
    if method not in ("auto", "exact", "grid"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact":
        lower = lower_basis_constant_exact(family)
    elif method == "grid":
        if mesh is None:
            raise ValueError("grid method needs a mesh")
        lower = lower_basis_constant(family, mesh)
    else:
        try:
            lower = lower_basis_constant_exact(family)
        except UnsupportedStructureError:
            if mesh is None:
                raise
            lower = lower_basis_constant(family, mesh)
    lower = Interval(lower.lo, min(lower.hi, upper * (1.0 + 1e-12) + 1e-12), lower.certificate)
    return BasisConstants(upper, lower, _equivalence_from(upper, lower))


def equivalence_constant(
    family: VectorFamily, mesh: float | None = None, method: str = "auto"
) -> Interval:
    """Enclosure of ||gamma|| * ||gamma^{-1}||, endpoints divided crosswise."""
    return basis_constants(family, mesh=mesh, method=method).equivalence


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    found: bool
    indices: tuple
    density: Fraction
    constants: BasisConstants | None
    window_length: int
    evaluations: int
    budget_exhausted: bool
    note: str = ""

    def to_json(self) -> dict:
        eq = self.constants.equivalence if self.constants else None
        low = self.constants.lower if self.constants else None
        return {
            "I": list(self.indices),
            "density": {
                "num": self.density.numerator,
                "den": self.density.denominator,
            },
            "lower": [low.lo, low.hi] if low else None,
            "upper": self.constants.upper if self.constants else None,
            "K": [eq.lo, eq.hi if math.isfinite(eq.hi) else None] if eq else None,
        }


EXHAUSTIVE_WINDOW_CAP = 16


def _has_duplicates(family: VectorFamily, idx) -> bool:
    seen = set()
    for i in idx:
        key = family.vectors[i].tobytes()
        if key in seen:
            return True
        seen.add(key)
    return False


def _constants_for_search(family, idx, method, mesh):
    sub = family.subfamily(idx)
    try:
        return basis_constants(sub, mesh=mesh, method=method)
    except NotAnIsomorphismError:
        return None
    except UnsupportedStructureError:
        if mesh is None:
            # fall back to a size-aware coarse lattice the guard will accept
            fallback = 1e-3 if len(idx) <= 3 else (1e-2 if len(idx) == 4 else None)
            if fallback is None:
                raise
            return basis_constants(sub, mesh=fallback, method="grid")
        return basis_constants(sub, mesh=mesh, method="grid")


def find_l1_witness(
    orbit: VectorFamily,
    k_bound: float,
    min_density: Fraction | float,
    budget: int = 20_000,
    method: str = "auto",
    mesh: float | None = None,
) -> WitnessReport:
    """Search orbit time labels for a dense l1-equivalent sub-family.

    A subset I passes when the certified equivalence interval of
    {x_i : i in I} has hi <= k_bound and |I| / window >= min_density.
    Windows of at most 16 labels are searched exhaustively from the densest
    subsets downward; larger windows use greedy growth restarted from every
    singleton.  Exhausting the budget is reported, not raised.
    """
    if len(orbit) == 0:
        raise EmptyFamilyError("witness search over an empty orbit")
    if k_bound < 1.0:
        raise ValueError("equivalence constants are never below 1")
    labels = orbit.labels if orbit.labels is not None else tuple(range(len(orbit)))
    if len(set(labels)) != len(labels) or min(labels) < 0:
        raise ValueError("orbit labels must be distinct nonnegative integers")
    window = max(labels) + 1
    min_density = Fraction(min_density).limit_denominator(10**9)
    order = sorted(range(len(orbit)), key=lambda i: labels[i])

    evaluations = 0
    best: tuple[Fraction, float, tuple, BasisConstants] | None = None

    def consider(idx_tuple):
        nonlocal evaluations, best
        cands = _constants_for_search(orbit, idx_tuple, method, mesh)
        evaluations += 1
        if cands is None:
            return None
        dens = Fraction(len(idx_tuple), window)
        hi = cands.equivalence.hi
        if best is None or (dens, -hi) > (best[0], -best[1]):
            best = (dens, hi, idx_tuple, cands)
        if hi <= k_bound and dens >= min_density:
            return cands
        return None

    exhausted = False
    if window <= EXHAUSTIVE_WINDOW_CAP:
        s_min = max(1, math.ceil(min_density * window))
        for size in range(len(order), s_min - 1, -1):
            for combo in itertools.combinations(order, size):
                if evaluations >= budget:
                    exhausted = True
                    break
                if _has_duplicates(orbit, combo):
                    continue
                hit = consider(combo)
                if hit is not None:
                    labels_i = tuple(labels[i] for i in combo)
                    return WitnessReport(
                        True, labels_i, Fraction(size, window), hit, window, evaluations, False
                    )
            if exhausted:
                break
    else:
        for seed in order:
            if exhausted:
                break
            current = [seed]
            while len(current) < len(order):
                if evaluations >= budget:
                    exhausted = True
                    break
                scores = []
                for j in order:
                    if j in current:
                        continue
                    trial = tuple(sorted(current + [j]))
                    if _has_duplicates(orbit, trial):
                        continue
                    cands = _constants_for_search(orbit, trial, method, mesh)
                    evaluations += 1
                    if cands is None:
                        continue
                    scores.append((cands.lower.lo, -labels[j], j, trial, cands))
                    if evaluations >= budget:
                        exhausted = True
                        break
                if not scores:
                    break
                scores.sort(reverse=True)
                _, _, j, trial, cands = scores[0]
                dens = Fraction(len(trial), window)
                hi = cands.equivalence.hi
                if best is None or (dens, -hi) > (best[0], -best[1]):
                    best = (dens, hi, trial, cands)
                if hi > k_bound:
                    break
                current = list(trial)
        if best is not None and best[1] <= k_bound and best[0] >= min_density:
            dens, _, idx, cands = best
            labels_i = tuple(labels[i] for i in idx)
            return WitnessReport(True, labels_i, dens, cands, window, evaluations, exhausted)

    if best is not None:
        dens, _, idx, cands = best
        labels_i = tuple(labels[i] for i in idx)
        return WitnessReport(
            False, labels_i, dens, cands, window, evaluations, exhausted, note="best candidate"
        )
    return WitnessReport(
        False, (), Fraction(0, 1), None, window, evaluations, exhausted, note="no usable subset"
    )
