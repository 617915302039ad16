"""Operator norm identities for spin systems and the Hamming packing bound.

Three exactly checkable facts drive this module: the span of one
diagonal/off-diagonal Pauli pair per tensor factor is isometric to an l1-sum
of Euclidean planes (norm sum of sqrt(c_k^2 + d_k^2)); anticommuting
self-adjoint unitary families square-sum like an orthonormal basis while
their tensor squares are isometrically l1; and greedy word packings at
Hamming distance 3*n*delta are large enough to force exponentially many
coordinates in any contractive factorization of a shifted probe set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .approximation import GrowthPoint, GrowthSequence
from .errors import GuardExceededError
from .spaces import kron, spectral_norm_certified

PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.int64)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.int64)
_I2 = np.eye(2, dtype=np.int64)

PAULI_CROSSCHECK_CAP = 10   # 2^10 = 1024 matrix rows
CAR_FACTOR_CAP = 10
CAR_TENSOR_CAP = 5          # 4^5 = 1024
PACKING_STATE_CAP = 10**6


def _factor_embed(op: np.ndarray, k: int, n: int, left=_I2) -> np.ndarray:
    """left^(k-1) (x) op (x) I^(n-k) on n tensor factors, 1-based k."""
    factors = [left] * (k - 1) + [op] + [_I2] * (n - k)
    return kron(factors)


def pauli_block_sum(coeffs) -> np.ndarray:
    """sum_k c_k Z_k + d_k X_k with each pair acting on its own tensor factor."""
    pairs = [(float(c), float(d)) for c, d in coeffs]
    n = len(pairs)
    dim = 2**n
    out = np.zeros((dim, dim))
    for k, (c, d) in enumerate(pairs, start=1):
        out += c * _factor_embed(PAULI_Z, k, n) + d * _factor_embed(PAULI_X, k, n)
    return out


def pauli_span_norm(coeffs, crosscheck: bool = False):
    """Norm of sum_k (c_k Z_k + d_k X_k): the l1-sum-of-planes value
    sum_k sqrt(c_k^2 + d_k^2).

    With ``crosscheck`` the 2^n x 2^n matrix is built explicitly and its
    spectral norm must agree within 1e-9; returns (formula, matrix_norm) then.
    """
    pairs = [(float(c), float(d)) for c, d in coeffs]
    if not pairs:
        raise ValueError("need at least one coefficient pair")
    formula = sum(math.hypot(c, d) for c, d in pairs)
    if not crosscheck:
        return formula
    if len(pairs) > PAULI_CROSSCHECK_CAP:
        raise GuardExceededError(f"crosscheck limited to {PAULI_CROSSCHECK_CAP} factors")
    matrix_norm, _resid = spectral_norm_certified(pauli_block_sum(pairs))
    if abs(matrix_norm - formula) > 1e-9 * max(1.0, formula):
        raise AssertionError(
            f"span-norm identity violated: formula {formula} vs matrix {matrix_norm}"
        )
    return formula, matrix_norm


# ---------------------------------------------------------------------------
# anticommuting self-adjoint unitaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CliffordFamily:
    """Anticommuting self-adjoint unitaries built from Pauli tensor words."""

    n: int
    matrices: tuple

    def __iter__(self):
        return iter(self.matrices)


def car_generators(n: int) -> CliffordFamily:
    """u_k = Z^(k-1) (x) X (x) I^(n-k), verified exactly in integer arithmetic."""
    if not (1 <= n <= CAR_FACTOR_CAP):
        raise GuardExceededError(f"generator count must be in [1, {CAR_FACTOR_CAP}]")
    mats = []
    dim = 2**n
    for k in range(1, n + 1):
        u = _factor_embed(PAULI_X, k, n, left=PAULI_Z)
        mats.append(u)
    eye = np.eye(dim, dtype=np.int64)
    for i, u in enumerate(mats):
        if not np.array_equal(u @ u, eye):
            raise AssertionError(f"generator {i + 1} is not an involution")
        for v in mats[i + 1 :]:
            if np.any(u @ v + v @ u):
                raise AssertionError("generators fail to anticommute exactly")
    return CliffordFamily(n, tuple(mats))


@dataclass(frozen=True)
class IdentityCheck:
    passed: bool
    norm_value: float
    expected: float
    residual: float


def car_l2_identity(family: CliffordFamily, c) -> IdentityCheck:
    """(sum c_k u_k)^2 = (sum c_k^2) * 1, hence norm sqrt(sum c_k^2)."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (family.n,):
        raise ValueError("one real coefficient per generator")
    s = sum(ck * uk for ck, uk in zip(c, family.matrices))
    dim = s.shape[0]
    residual_mat = s @ s - float(c @ c) * np.eye(dim)
    residual = float(np.linalg.norm(residual_mat))  # Frobenius dominates spectral
    norm_value, _ = spectral_norm_certified(s)
    expected = math.sqrt(float(c @ c))
    passed = residual <= 1e-12 * max(1.0, float(c @ c)) and abs(norm_value - expected) <= 1e-9
    return IdentityCheck(passed, norm_value, expected, residual)


def car_tensor_l1_identity(family: CliffordFamily, c) -> IdentityCheck:
    """norm of sum c_k (u_k (x) u_k) equals sum |c_k|: the tensor squares are
    an isometric real l1 basis."""
    if family.n > CAR_TENSOR_CAP:
        raise GuardExceededError(f"tensor-square check limited to {CAR_TENSOR_CAP} generators")
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (family.n,):
        raise ValueError("one real coefficient per generator")
    s = sum(ck * kron([uk, uk]) for ck, uk in zip(c, family.matrices))
    norm_value, resid = spectral_norm_certified(s)
    expected = float(np.sum(np.abs(c)))
    passed = abs(norm_value - expected) <= 1e-9 * max(1.0, expected)
    return IdentityCheck(passed, norm_value, expected, resid)


# ---------------------------------------------------------------------------
# Hamming packings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PackingResult:
    m: int
    n: int
    delta: float
    hamming_floor: int
    words: np.ndarray
    ball_volume: int
    bound_rhs: float
    stirling_rhs: float

    @property
    def size(self) -> int:
        return len(self.words)

    def verify(self) -> bool:
        """Re-check the pairwise floor and the counting bound from scratch."""
        if self.size < math.ceil(self.bound_rhs):
            return False
        radius = self.hamming_floor - 1
        ranks = _word_ranks(self.words, self.m)
        chosen = np.zeros(self.m**self.n, dtype=bool)
        chosen[ranks] = True
        if int(chosen.sum()) != self.size:
            return False
        for w, r in zip(self.words, ranks):
            ball = _ball_ranks(w, int(r), radius, self.m, self.n)
            if int(chosen[ball].sum()) > 1:
                return False
        if self.size <= 4000:
            for i in range(self.size):
                d = (self.words[i + 1 :] != self.words[i]).sum(axis=1)
                if len(d) and int(d.min()) < self.hamming_floor:
                    return False
        return True


def _word_ranks(words: np.ndarray, m: int) -> np.ndarray:
    n = words.shape[1]
    weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return words.astype(np.int64) @ weights


_COMBO_CACHE: dict[tuple, tuple] = {}


def _ball_templates(m: int, n: int, radius: int):
    """Cached (positions, deltas) index arrays per distance k <= radius."""
    key = (m, n, radius)
    hit = _COMBO_CACHE.get(key)
    if hit is None:
        templates = []
        for k in range(1, radius + 1):
            pos = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
            deltas = np.array(list(itertools.product(range(1, m), repeat=k)), dtype=np.int64)
            templates.append((pos, deltas))
        hit = tuple(templates)
        if len(_COMBO_CACHE) > 64:
            _COMBO_CACHE.clear()
        _COMBO_CACHE[key] = hit
    return hit


def _ball_ranks(word: np.ndarray, rank: int, radius: int, m: int, n: int) -> np.ndarray:
    """Ranks of all words within the given Hamming radius (including the word)."""
    if radius < 1:
        return np.array([rank], dtype=np.int64)
    weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    parts = [np.array([rank], dtype=np.int64)]
    w64 = word.astype(np.int64)
    for pos, deltas in _ball_templates(m, n, radius):
        dw = w64[pos]                      # (combos, k)
        wts = weights[pos]                 # (combos, k)
        changed = (dw[None, :, :] + deltas[:, None, :]) % m
        offsets = ((changed - dw[None, :, :]) * wts[None, :, :]).sum(axis=2)
        parts.append(rank + offsets.reshape(-1))
    return np.concatenate(parts)


def hamming_ball_volume(m: int, n: int, radius: int) -> int:
    return sum((m - 1) ** k * math.comb(n, k) for k in range(max(radius, -1) + 1))


def hamming_packing(m: int, n: int, delta: float) -> PackingResult:
    """Greedy lexicographic maximal packing of m-ary words at pairwise Hamming
    distance >= ceil(3 n delta).

    Maximality forces size >= m^n / ball_volume(floor - 1) (any word sits in
    some chosen word's open ball).  ``stirling_rhs`` reports the closed
    entropy-form version of that bound, m^{n(1-3 delta)} (1-3 delta)^n
    (3 delta / (1-3 delta))^{3 n delta}, whose asymptotic slope is
    log m + C(delta) with C(delta) -> 0.
    """
    if not (0.0 < delta < 1.0 / 6.0):
        raise GuardExceededError("the packing bound needs 0 < delta < 1/6")
    total = m**n
    if total > PACKING_STATE_CAP:
        raise GuardExceededError(f"{m}^{n} words exceed the packing cap")
    floor = math.ceil(3.0 * n * delta)
    radius = floor - 1

    alive = np.ones(total, dtype=bool)
    chosen_ranks = []
    words = []
    base_digits = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    ptr = 0
    while True:
        nxt = int(np.argmax(alive[ptr:]))
        if not alive[ptr + nxt]:
            break
        rank = ptr + nxt
        ptr = rank  # alive never resurrects left of the pointer
        word = ((rank // base_digits) % m).astype(np.uint8)
        chosen_ranks.append(rank)
        words.append(word)
        if radius >= 1:
            kill = np.fromiter(
                _ball_ranks(word, rank, radius, m, n), dtype=np.int64
            )
            alive[kill] = False
        else:
            alive[rank] = False

    q = np.array(words, dtype=np.uint8).reshape(len(words), n)
    vol = hamming_ball_volume(m, n, radius)
    bound_rhs = total / vol
    three_nd = 3.0 * n * delta
    stirling_rhs = (
        m ** (n - three_nd)
        * (1.0 - 3.0 * delta) ** n
        * ((3.0 * delta) / (1.0 - 3.0 * delta)) ** three_nd
    )
    result = PackingResult(m, n, float(delta), floor, q, vol, bound_rhs, stirling_rhs)
    if result.size < math.ceil(bound_rhs):
        raise AssertionError("greedy packing fell below the counting bound")
    return result


# ---------------------------------------------------------------------------
# the shift experiment
# ---------------------------------------------------------------------------

SHIFT_PHASE_CAP = 8
SHIFT_HORIZON_CAP = 12
_LOG_2PI = math.log(2.0 * math.pi)


def shift_probe_angles(m: int, field: str = "complex") -> np.ndarray:
    if field == "real":
        if m > 2:
            raise GuardExceededError("the real unit sphere has two points")
        return np.array([0.0, math.pi][:m])
    return 2.0 * math.pi * np.arange(m) / m


def shift_growth_experiment(
    m: int,
    n_max: int,
    delta: float,
    field: str = "complex",
    verify: bool = True,
) -> GrowthSequence:
    """Certified lower-bound growth for a tensor-factor shift probed by m unit
    vectors on the circle of one diagonal/off-diagonal Pauli plane.

    Per horizon n the greedy packing Q_n at Hamming distance 3 n delta forces
    any factorization within delta^2 to use d >= delta^2 / (2 pi) * |Q_n|
    coordinates (``dim_floor`` in the point extras, never below 1).  The
    normalized column reports log|Q_n| / n, whose limit equals the limiting
    slope of log(d)/n since the additive constant log(delta^2 / 2 pi) washes
    out; it approaches log m - |C(delta)|.
    """
    if not (1 <= m <= SHIFT_PHASE_CAP):
        raise GuardExceededError(f"phase count must be in [1, {SHIFT_PHASE_CAP}]")
    if not (1 <= n_max <= SHIFT_HORIZON_CAP):
        raise GuardExceededError(f"horizon must be in [1, {SHIFT_HORIZON_CAP}]")
    angles = shift_probe_angles(m, field)
    if m >= 2:
        gaps = [abs(2.0 * math.cos((angles[i] - angles[j]) / 2.0))
                for i in range(m) for j in range(i + 1, m)]
        if delta >= 2.0 - max(gaps):
            raise GuardExceededError(
                f"delta must stay below 2 - max||x + y|| = {2.0 - max(gaps):.4f} for m={m}"
            )
    points = packing_growth_points(
        m, n_max, delta,
        per_n_check=(lambda n, p: _verify_shift_hypotheses(angles, n, p)) if verify else None,
    )
    return GrowthSequence(
        tuple(points), "lower", float(delta), 1.0,
        description=f"tensor shift probed by {m} circle points ({field} scalars)",
    )


def packing_growth_points(m: int, n_max: int, delta: float, per_n_check=None) -> list:
    """Per-horizon packing exponents: bound = log|Q_n|, normalized = log|Q_n|/n,
    with the rigorous coordinate floor max(1, ceil(delta^2/(2 pi) |Q_n|)) in the
    extras.  Shared by the tensor-shift experiment and the sequence-space
    corroboration runs, whose probe alphabets have the same combinatorics."""
    points = []
    for n in range(1, n_max + 1):
        packing = hamming_packing(m, n, delta)
        if per_n_check is not None:
            per_n_check(n, packing)
        log_q = math.log(packing.size)
        dim_floor = max(1, math.ceil(delta * delta / (2.0 * math.pi) * packing.size))
        points.append(
            GrowthPoint(
                n,
                log_q,
                log_q / n,
                {
                    "packing_size": packing.size,
                    "dim_floor": dim_floor,
                    "log_dim_floor": math.log(dim_floor),
                    "bound_rhs": packing.bound_rhs,
                },
            )
        )
    return points


def _verify_shift_hypotheses(angles: np.ndarray, n: int, packing: PackingResult):
    """Spot-check the two norm identities the packing bound relies on."""
    m = len(angles)
    if m >= 2:
        for i in range(m):
            for j in range(i + 1, m):
                s = abs(2.0 * math.cos((angles[i] - angles[j]) / 2.0))
                if s >= 2.0 - 1e-12:
                    raise AssertionError("probe vectors are not uniformly non-aligned")
    # orbit sums of any word of probe vectors have norm exactly n
    sample_rows = [0, packing.size // 2, packing.size - 1]
    for r in sample_rows:
        word = packing.words[r]
        coeffs = [(math.cos(angles[s]), math.sin(angles[s])) for s in word]
        formula = pauli_span_norm(coeffs, crosscheck=(n <= 8))
        value = formula[0] if isinstance(formula, tuple) else formula
        if abs(value - n) > 1e-9 * n:
            raise AssertionError("orbit word norm differs from the horizon length")
