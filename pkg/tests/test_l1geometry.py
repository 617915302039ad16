import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from calab.errors import (
    EmptyFamilyError,
    GuardExceededError,
    NotAnIsomorphismError,
    UnsupportedStructureError,
)
from calab.l1geometry import (
    basis_constants,
    equivalence_constant,
    find_l1_witness,
    lower_basis_constant,
    lower_basis_constant_exact,
    upper_basis_constant,
)
from calab.spaces import COMPLEX, REAL, VectorFamily, lp_space, matrix_space, sup_space

PAULI_Z = np.array([1.0, 0.0, 0.0, -1.0])
PAULI_X = np.array([0.0, 1.0, 1.0, 0.0])


def full_shift_orbit_family(n):
    """Orbit of the 0th-coordinate function under the full 2-shift, as vectors
    of values over all 2^n length-n sign sequences."""
    points = np.array([[1 - 2 * ((w >> k) & 1) for k in range(n)] for w in range(2**n)])
    vectors = tuple(points[:, k].astype(float) for k in range(n))
    return VectorFamily(sup_space(2**n, REAL), vectors, labels=tuple(range(n)))


# ---------------------------------------------------------------------------
# upper constant
# ---------------------------------------------------------------------------

def test_upper_examples():
    assert upper_basis_constant(VectorFamily(lp_space(1, 3, REAL), tuple(np.eye(3)))) == 1.0
    assert upper_basis_constant(
        VectorFamily(lp_space(2, 2, REAL), (np.array([3.0, 4.0]),))
    ) == pytest.approx(5.0)
    pauli = VectorFamily(matrix_space(2, REAL), (PAULI_Z, PAULI_X))
    assert upper_basis_constant(pauli) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(EmptyFamilyError):
        upper_basis_constant(VectorFamily(lp_space(1, 2, REAL), ()))


# ---------------------------------------------------------------------------
# lower constant, lattice path
# ---------------------------------------------------------------------------

def test_lower_standard_l1_basis():
    fam = VectorFamily(lp_space(1, 4, REAL), tuple(np.eye(4)))
    iv = lower_basis_constant(fam, 0.05)
    assert iv.hi == pytest.approx(1.0, abs=1e-12)
    assert iv.contains(1.0, slack=1e-12)


def test_lower_cancelling_pair():
    x = np.array([0.6, 0.8])
    fam = VectorFamily(lp_space(2, 2, REAL), (x, -x))
    iv = lower_basis_constant(fam, 0.02)
    assert iv.lo == 0.0
    assert iv.hi <= 1.0 * 0.02 + 1e-12


def test_lower_linf_basis_symmetry():
    for n in (2, 3):
        fam = VectorFamily(lp_space(math.inf, n, REAL), tuple(np.eye(n)))
        iv = lower_basis_constant(fam, 5e-3)
        assert iv.contains(1.0 / n, slack=1e-12)


def test_lower_pauli_pair_grid():
    fam = VectorFamily(matrix_space(2, REAL), (PAULI_Z, PAULI_X))
    iv = lower_basis_constant(fam, 1e-3)
    assert iv.contains(2**-0.5)
    assert iv.width <= 1e-3 + 1e-9


def test_lower_complex_phases_coarse():
    # {1, i} in the complex scalars: the sphere minimum is |c1 + i c2| -> 0
    space = lp_space(1, 1, COMPLEX)
    fam = VectorFamily(space, (np.array([1.0 + 0j]), np.array([1j])))
    iv = lower_basis_constant(fam, 0.05)
    assert iv.lo == 0.0 and iv.hi <= 0.05


def test_lower_mesh_guard():
    fam = VectorFamily(lp_space(2, 6, REAL), tuple(np.eye(6)))
    with pytest.raises(GuardExceededError):
        lower_basis_constant(fam, 1e-4)


def test_scale_equivariance(rng):
    space = lp_space(2, 3, REAL)
    vecs = tuple(rng.normal(size=3) for _ in range(2))
    fam = VectorFamily(space, vecs)
    scaled = VectorFamily(space, tuple(3.0 * v for v in vecs))
    a = lower_basis_constant(fam, 0.02)
    b = lower_basis_constant(scaled, 0.02)
    assert b.lo == pytest.approx(3.0 * a.lo, rel=1e-12, abs=1e-12)
    assert b.hi == pytest.approx(3.0 * a.hi, rel=1e-12)
    assert upper_basis_constant(scaled) == pytest.approx(3.0 * upper_basis_constant(fam), rel=1e-12)


def test_refinement_never_widens(rng):
    space = lp_space(2, 2, REAL)
    fam = VectorFamily(space, (rng.normal(size=2), rng.normal(size=2)))
    for mesh in (0.4, 0.2, 0.1, 0.05):
        coarse = lower_basis_constant(fam, mesh)
        fine = lower_basis_constant(fam, mesh / 2)
        assert fine.lo >= coarse.lo - 1e-12
        assert fine.hi <= coarse.hi + 1e-12


def test_duplicate_vector_forces_zero():
    x = np.array([1.0, 2.0, 0.0])
    fam = VectorFamily(lp_space(1, 3, REAL), (x, x, np.array([0.0, 0.0, 1.0])))
    iv = lower_basis_constant(fam, 0.05)
    assert iv.lo == 0.0 and iv.hi <= 1e-12
    # removing the repeat restores a positive certified floor
    trimmed = VectorFamily(lp_space(1, 3, REAL), (x, np.array([0.0, 0.0, 1.0])))
    assert lower_basis_constant(trimmed, 0.05).lo > 0.5


# ---------------------------------------------------------------------------
# exact engine
# ---------------------------------------------------------------------------

def test_exact_matches_known_values():
    l1 = VectorFamily(lp_space(1, 4, REAL), tuple(np.eye(4)))
    assert lower_basis_constant_exact(l1).contains(1.0)
    linf = VectorFamily(lp_space(math.inf, 5, REAL), tuple(np.eye(5)))
    assert lower_basis_constant_exact(linf).contains(0.2)
    l2 = VectorFamily(lp_space(2, 4, REAL), tuple(np.eye(4)))
    iv = lower_basis_constant_exact(l2)
    assert iv.contains(0.5) and iv.width < 1e-6


def test_exact_realified_phase_pair():
    space = lp_space(1, 4, COMPLEX)
    e0 = np.zeros(4, complex)
    e0[0] = 1.0
    fam = VectorFamily(space, (e0, 1j * e0), coefficient_field=REAL)
    iv = lower_basis_constant_exact(fam)
    assert iv.contains(2**-0.5, slack=1e-9)
    assert iv.width < 1e-4


def test_exact_unsupported_structures():
    pauli = VectorFamily(matrix_space(2, REAL), (PAULI_Z, PAULI_X, PAULI_Z + PAULI_X))
    with pytest.raises(UnsupportedStructureError):
        lower_basis_constant_exact(pauli)
    cx = VectorFamily(lp_space(1, 1, COMPLEX), (np.array([1.0 + 0j]), np.array([1j])))
    with pytest.raises(UnsupportedStructureError):
        lower_basis_constant_exact(cx)


def test_exact_agrees_with_grid(rng):
    space = sup_space(4, REAL)
    for _ in range(10):
        fam = VectorFamily(space, tuple(rng.normal(size=4) for _ in range(3)))
        exact = lower_basis_constant_exact(fam)
        grid = lower_basis_constant(fam, 2e-3)
        assert grid.lo - 1e-9 <= exact.lo and exact.hi <= grid.hi + 1e-9


# ---------------------------------------------------------------------------
# equivalence constants
# ---------------------------------------------------------------------------

def test_equivalence_standard_basis():
    fam = VectorFamily(lp_space(1, 4, REAL), tuple(np.eye(4)))
    iv = equivalence_constant(fam, method="exact")
    assert iv.contains(1.0) and iv.lo >= 1.0


def test_equivalence_full_shift_orbit_is_isometric():
    fam = full_shift_orbit_family(8)
    iv = equivalence_constant(fam, method="exact")
    assert iv.contains(1.0)
    assert iv.hi <= 1.0 + 1e-9


def test_equivalence_orthonormal_grid_oracle():
    for n in (2, 3):
        fam = VectorFamily(lp_space(2, n, REAL), tuple(np.eye(n)))
        iv = equivalence_constant(fam, mesh=2e-3, method="grid")
        assert iv.contains(math.sqrt(n))


def test_equivalence_degenerate_raises():
    x = np.array([1.0, 0.0])
    fam = VectorFamily(lp_space(1, 2, REAL), (x, -x))
    with pytest.raises(NotAnIsomorphismError):
        equivalence_constant(fam, mesh=0.05, method="grid")


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------

def test_witness_full_shift_orbit():
    fam = full_shift_orbit_family(8)
    report = find_l1_witness(fam, 1.01, Fraction(1, 1))
    assert report.found
    assert report.indices == tuple(range(8))
    assert report.density == 1
    payload = report.to_json()
    assert set(payload) == {"I", "density", "lower", "upper", "K"}
    assert payload["density"] == {"num": 1, "den": 1}


def test_witness_constant_orbit_not_found():
    e = np.eye(3)[0]
    fam = VectorFamily(lp_space(1, 3, REAL), (e,) * 6, labels=tuple(range(6)))
    report = find_l1_witness(fam, 10.0, Fraction(1, 3))
    assert not report.found


def test_witness_orthonormal_orbit_not_found():
    fam = VectorFamily(lp_space(2, 8, REAL), tuple(np.eye(8)), labels=tuple(range(8)))
    report = find_l1_witness(fam, 1.2, Fraction(1, 2))
    assert not report.found
    assert report.note == "best candidate"
    assert report.constants is not None


def test_witness_budget_reported_not_raised():
    fam = VectorFamily(lp_space(2, 8, REAL), tuple(np.eye(8)), labels=tuple(range(8)))
    report = find_l1_witness(fam, 1.2, Fraction(1, 2), budget=5)
    assert report.budget_exhausted and not report.found


def test_witness_greedy_large_window():
    vecs = tuple(np.eye(20))
    fam = VectorFamily(lp_space(1, 20, REAL), vecs, labels=tuple(range(20)))
    report = find_l1_witness(fam, 1.05, Fraction(1, 2))
    assert report.found and report.density >= Fraction(1, 2)


# ---------------------------------------------------------------------------
# oracle agreement (library lattice vs finer independent scan)
# ---------------------------------------------------------------------------

def _oracle_row_min(base, direction, caps, p):
    """Exact min over integers u in [0, caps] of ||base + u*direction||_p per row.

    The norm is convex along u, so it is enough to examine the integer
    neighbours of every vertex of the piecewise structure (quadratic argmin
    for p=2, coordinate roots for p=1, roots and pairwise crossings for sup)
    plus the endpoints.  Implemented here independently of the library.
    """
    dim = base.shape[1]
    candidate_lists = [np.zeros(len(base)), caps.astype(float)]
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 2.0:
            dd = float(direction @ direction)
            if dd > 0:
                candidate_lists.append(-(base @ direction) / dd)
        else:
            for c in range(dim):
                if direction[c] != 0.0:
                    candidate_lists.append(-base[:, c] / direction[c])
            if math.isinf(p):
                for c in range(dim):
                    for d in range(c + 1, dim):
                        for sg in (1.0, -1.0):
                            den = direction[c] - sg * direction[d]
                            if den != 0.0:
                                candidate_lists.append(-(base[:, c] - sg * base[:, d]) / den)
    best = np.full(len(base), np.inf)
    for cand in candidate_lists:
        cand = np.nan_to_num(cand)
        for u in (np.floor(cand), np.ceil(cand)):
            u = np.clip(u, 0, caps)
            pts = np.abs(base + u[:, None] * direction)
            if math.isinf(p):
                vals = pts.max(axis=1)
            elif p == 1.0:
                vals = pts.sum(axis=1)
            else:
                vals = np.sqrt((pts * pts).sum(axis=1))
            best = np.minimum(best, vals)
    return float(best.min())


def brute_force_sphere_minimum(vectors, space, denominator):
    """Independent minimum over the dense simplex lattice of the l1 sphere.

    Sizes one and two are enumerated outright.  For three vectors the lattice
    minimum is taken exactly row by row, sweeping the *first* coordinate pair
    against the third (the library organizes the sweep the other way around).
    """
    mats = np.stack(vectors)
    s = len(vectors)
    p = float(space.p) if space.kind == "lp" else math.inf
    best = math.inf
    for signs in itertools.product([1.0, -1.0], repeat=s - 1):
        sigma = np.array((1.0,) + signs)
        w = (mats * sigma[:, None]) / denominator
        if s == 1:
            best = min(best, float(space.batch_norms(sigma[None, :] @ mats).min()))
            continue
        if s == 2:
            k = np.arange(denominator + 1)
            t = np.stack([k, denominator - k], axis=1) / denominator
            best = min(best, float(space.batch_norms((t * sigma) @ mats).min()))
            continue
        # rows indexed by the third coordinate k3; u sweeps the first
        k3 = np.arange(denominator + 1)
        base = np.outer(denominator - k3, w[1]) + np.outer(k3, w[2])
        direction = w[0] - w[1]
        best = min(best, _oracle_row_min(base, direction, denominator - k3, p))
    return best


def test_interval_contains_independent_minimum(rng):
    for trial in range(12):
        size = [1, 2, 2, 3][trial % 4]
        dim = int(rng.integers(1, 4))
        space = lp_space(float(rng.choice([1.0, 2.0, math.inf])), dim, REAL)
        fam = VectorFamily(space, tuple(rng.normal(size=dim) for _ in range(size)))
        iv = lower_basis_constant(fam, 1e-3)
        denominator = size * 2048 * 5  # refines the library lattice five-fold
        oracle = brute_force_sphere_minimum(fam.vectors, space, denominator)
        assert iv.lo - 1e-12 <= oracle <= iv.hi + 1e-12
