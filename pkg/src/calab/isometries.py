"""Entropy classification of permutation-and-phase isometries of sequence spaces.

Every isometric automorphism of l_infty or l_1 acts as alpha(x)(s) =
lambda(s) x(sigma(s)) for a unimodular sequence lambda and a permutation sigma
of the integers.  The presentation language here makes the three relevant
orbit shapes expressible and decidable: explicit finite cycles, an increasing
family of blocks carrying one cycle of every length, and a default rule
(identity or a global shift) on the remaining integers.

Verdicts depend only on the permutation:

* l_infty: zero entropy iff orbit cardinalities are bounded;
* l_1: zero entropy iff there is no infinite orbit, so the increasing-block
  family separates the two spaces (infinite for l_infty, zero for l_1).

``empirical_corroboration`` backs the verdicts with finite computations:
packing growth sequences for infinite/unbounded cases, a failed witness
search for zero cases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .approximation import GrowthSequence
from .errors import (
    GuardExceededError,
    InsufficientWindowError,
    MalformedSpecError,
)
from .l1geometry import WitnessReport, find_l1_witness
from .spaces import COMPLEX, REAL, FiniteNormedSpace, VectorFamily, lp_space, sup_space
from .spin import packing_growth_points, shift_probe_angles

ZERO = "zero"
INFINITE = "infinite"

CENSUS_WINDOW_CAP = 10**6

IDENTITY = "identity"
SHIFT = "shift"


def _block_index(s: int) -> int:
    # blocks tile the nonnegative integers: block i occupies [i(i-1)/2, i(i+1)/2)
    i = int((1 + math.isqrt(1 + 8 * s)) // 2)
    while i * (i - 1) // 2 > s:
        i -= 1
    while i * (i + 1) // 2 <= s:
        i += 1
    return i


def _block_start(i: int) -> int:
    return i * (i - 1) // 2


@dataclass(frozen=True)
class PermutationSpec:
    """Finitely presented permutation of the integers.

    ``cycles`` are explicit finite cycles; ``blocks`` switches on the
    increasing-block family (one cycle of length i on the i-th block of the
    nonnegative integers, so finite cycles must then live on the negatives);
    ``default`` is ("identity",) or ("shift", t) and governs everything else.
    A shift default only assembles into a bijection on its own, so combining
    it with cycles or blocks is rejected.
    """

    cycles: tuple = ()
    blocks: bool = False
    default: tuple = (IDENTITY,)

    def __post_init__(self):
        cycles = tuple(tuple(int(v) for v in c) for c in self.cycles)
        object.__setattr__(self, "cycles", cycles)
        seen: set[int] = set()
        for c in cycles:
            if not c:
                raise MalformedSpecError("empty cycle")
            for v in c:
                if v in seen:
                    raise MalformedSpecError(f"integer {v} appears in two cycles")
                seen.add(v)
        if self.default[0] not in (IDENTITY, SHIFT):
            raise MalformedSpecError(f"unknown default rule {self.default!r}")
        if self.default[0] == SHIFT:
            if len(self.default) != 2 or int(self.default[1]) == 0:
                raise MalformedSpecError("shift default needs a nonzero step")
            if cycles or self.blocks:
                raise MalformedSpecError(
                    "a shift default does not assemble into a bijection "
                    "alongside cycles or blocks"
                )
            object.__setattr__(self, "default", (SHIFT, int(self.default[1])))
        if self.blocks and any(v >= 0 for c in cycles for v in c):
            raise MalformedSpecError("blocks reserve the nonnegative integers")
        succ = {}
        for c in cycles:
            for j, v in enumerate(c):
                succ[v] = c[(j + 1) % len(c)]
        object.__setattr__(self, "_successor", succ)

    def sigma(self, s: int) -> int:
        nxt = self._successor.get(s)
        if nxt is not None:
            return nxt
        if self.blocks and s >= 0:
            i = _block_index(s)
            start = _block_start(i)
            return start if s == start + i - 1 else s + 1
        if self.default[0] == SHIFT:
            return s + self.default[1]
        return s

    def sigma_inverse(self, s: int) -> int:
        pred = {v: k for k, v in self._successor.items()}.get(s)
        if pred is not None:
            return pred
        if self.blocks and s >= 0:
            i = _block_index(s)
            start = _block_start(i)
            return start + i - 1 if s == start else s - 1
        if self.default[0] == SHIFT:
            return s - self.default[1]
        return s

    def orbit_size(self, s: int):
        """Exact orbit cardinality through s (math.inf for shift orbits)."""
        if s in self._successor:
            cur, size = self.sigma(s), 1
            while cur != s:
                cur, size = self.sigma(cur), size + 1
            return size
        if self.blocks and s >= 0:
            return _block_index(s)
        if self.default[0] == SHIFT:
            return math.inf
        return 1

    @property
    def has_infinite_orbit(self) -> bool:
        return self.default[0] == SHIFT

    @property
    def orbits_bounded(self) -> bool:
        return self.default[0] == IDENTITY and not self.blocks


@dataclass(frozen=True)
class PhaseSpec:
    """Rule producing the unimodular multiplier lambda(s).

    kinds: "constant" (one value), "periodic" (values cycled over s mod len),
    "per_cycle" (one value on each finite cycle's support, 1 elsewhere).
    """

    kind: str = "constant"
    values: tuple = (1.0 + 0j,)

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.values)
        if not vals:
            raise MalformedSpecError("phase rule needs at least one value")
        for v in vals:
            if abs(abs(v) - 1.0) > 1e-12:
                raise MalformedSpecError(f"phase {v} is not unimodular")
        if self.kind not in ("constant", "periodic", "per_cycle"):
            raise MalformedSpecError(f"unknown phase rule {self.kind!r}")
        object.__setattr__(self, "values", vals)

    def lambda_at(self, s: int, spec: PermutationSpec | None = None) -> complex:
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "periodic":
            return self.values[s % len(self.values)]
        if spec is not None:
            for i, c in enumerate(spec.cycles):
                if s in c:
                    return self.values[i % len(self.values)]
        return 1.0 + 0j


TRIVIAL_PHASES = PhaseSpec()


# ---------------------------------------------------------------------------
# census and classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitCensus:
    window: tuple
    cycle_lengths: tuple
    block_lengths: tuple
    identity_points: int
    shift_points: int
    bounded: bool
    max_finite_orbit: int | None
    has_infinite_orbit: bool
    summary: str


def orbit_census(spec: PermutationSpec, window: tuple) -> OrbitCensus:
    """Orbit statistics over the window, with global flags read off the
    presentation itself (not just the window sample)."""
    lo, hi = int(window[0]), int(window[1])
    if hi - lo < 1 or hi - lo > CENSUS_WINDOW_CAP:
        raise GuardExceededError(f"window length must be in [1, {CENSUS_WINDOW_CAP}]")
    cycle_lengths = sorted(
        {len(c) for c in spec.cycles if any(lo <= v < hi for v in c)}
    )
    block_lengths: list[int] = []
    if spec.blocks:
        i = 1
        while _block_start(i) < hi:
            if _block_start(i) + i > lo:
                block_lengths.append(i)
            i += 1
    in_cycles = {v for c in spec.cycles for v in c}
    rest = 0
    for s in range(lo, hi):
        if s in in_cycles:
            continue
        if spec.blocks and s >= 0:
            continue
        rest += 1
    identity_points = rest if spec.default[0] == IDENTITY else 0
    shift_points = rest if spec.default[0] == SHIFT else 0

    if spec.has_infinite_orbit:
        summary = "infinite orbit"
        max_finite = None
    elif spec.blocks:
        summary = "finite orbits, unbounded lengths"
        max_finite = None
    else:
        max_finite = max([len(c) for c in spec.cycles], default=1)
        summary = f"orbits bounded by {max_finite}"
    return OrbitCensus(
        (lo, hi),
        tuple(cycle_lengths),
        tuple(block_lengths),
        identity_points,
        shift_points,
        spec.orbits_bounded,
        max_finite,
        spec.has_infinite_orbit,
        summary,
    )


@dataclass(frozen=True)
class Classification:
    verdict: str
    space: str
    reason: str
    evidence: dict = field(default_factory=dict)


def _sample_orbit(spec: PermutationSpec, seed: int, count: int) -> list[int]:
    out = [seed]
    for _ in range(count - 1):
        out.append(spec.sigma(out[-1]))
    return out


def classify_linfty(spec: PermutationSpec) -> Classification:
    """Zero entropy iff the permutation's orbit cardinalities are bounded."""
    if spec.orbits_bounded:
        bound = max([len(c) for c in spec.cycles], default=1)
        return Classification(
            ZERO, "linf", f"orbit sizes bounded by {bound}", {"max_orbit": bound}
        )
    if spec.has_infinite_orbit:
        t = spec.default[1]
        return Classification(
            INFINITE,
            "linf",
            "shift default yields an infinite orbit",
            {"orbit_seed": 0, "first_iterates": _sample_orbit(spec, 0, 5), "step": t},
        )
    sample = 5
    return Classification(
        INFINITE,
        "linf",
        "increasing blocks carry finite orbits of every length",
        {
            "sample_block": sample,
            "sample_orbit": _sample_orbit(spec, _block_start(sample), sample),
        },
    )


def classify_ell1(spec: PermutationSpec) -> Classification:
    """Infinite entropy iff the permutation has an infinite orbit; unbounded
    finite orbits (the block family) still give zero here, unlike l_infty."""
    if spec.has_infinite_orbit:
        t = spec.default[1]
        return Classification(
            INFINITE,
            "ell1",
            "shift default yields an infinite orbit",
            {"orbit_seed": 0, "first_iterates": _sample_orbit(spec, 0, 5), "step": t},
        )
    reason = (
        "all orbits finite (unbounded lengths do not matter for l1)"
        if spec.blocks
        else "all orbits finite"
    )
    return Classification(ZERO, "ell1", reason, {"has_infinite_orbit": False})


# ---------------------------------------------------------------------------
# empirical corroboration
# ---------------------------------------------------------------------------

class WindowIsometry:
    """Truncation of alpha(x)(s) = lambda(s) x(sigma(s)) to a coordinate window."""

    def __init__(self, spec, phases, window, space_kind="ell1", field=COMPLEX):
        self.spec = spec
        self.phases = phases
        self.lo, self.hi = int(window[0]), int(window[1])
        n = self.hi - self.lo
        if n < 1 or n > CENSUS_WINDOW_CAP:
            raise GuardExceededError("window out of range")
        p = 1.0 if space_kind == "ell1" else math.inf
        self.space = lp_space(p, n, field)
        self._lambda = np.array(
            [phases.lambda_at(s, spec) for s in range(self.lo, self.hi)]
        )
        if field == REAL:
            if np.max(np.abs(self._lambda.imag)) > 1e-12:
                raise MalformedSpecError("complex phases over a real space")
            self._lambda = self._lambda.real

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = self.space.check_vector(x)
        y = np.zeros_like(x)
        moved = 0.0
        for offset in range(len(x)):
            s = self.lo + offset
            src = self.spec.sigma(s)
            if self.lo <= src < self.hi:
                y[offset] = self._lambda[offset] * x[src - self.lo]
                moved += abs(x[src - self.lo])
        if abs(float(np.sum(np.abs(x))) - moved) > 1e-9 * max(1.0, float(np.sum(np.abs(x)))):
            raise GuardExceededError("orbit leaves the window; enlarge the truncation")
        return y

    def basis_vector(self, s: int) -> np.ndarray:
        e = np.zeros(self.space.dim, dtype=self.space.dtype)
        e[s - self.lo] = 1.0
        return e


@dataclass(frozen=True)
class CorroborationReport:
    kind: str  # "growth" or "witness"
    classification_linf: Classification
    classification_ell1: Classification
    growth: GrowthSequence | None = None
    witness: WitnessReport | None = None
    details: dict = field(default_factory=dict)


def _corroborate_l1_shift(spec, phases, window, delta, probe_points, field, n_max):
    t = spec.default[1]
    iso = WindowIsometry(spec, phases, window, "ell1", field)
    length = iso.hi - iso.lo
    horizon_cap = (length - 1) // abs(t)
    m = probe_points
    limit = min(n_max, horizon_cap, 12, int(math.log(10**6) / math.log(max(m, 2))))
    if limit < 1:
        raise InsufficientWindowError("window too small for even one shift step")
    angles = shift_probe_angles(m, "real" if field == REAL else "complex")
    if m >= 2:
        worst = max(
            abs(complex(np.exp(1j * a) + np.exp(1j * b)))
            for i, a in enumerate(angles)
            for b in angles[i + 1 :]
        )
        if delta >= 2.0 - worst:
            raise GuardExceededError("delta too large for the chosen probe phases")
    # probe vectors: phase multiples of one basis vector on the infinite orbit,
    # placed so backward/forward shifts stay inside the window
    s0 = iso.hi - 1 if t > 0 else iso.lo
    unimodular = np.exp(1j * angles) if field == COMPLEX else np.cos(angles)
    probes = [u * iso.basis_vector(s0) for u in unimodular]

    def check(n, packing):
        # truncated norm identities behind the packing bound
        iterates = [probes]
        for _ in range(n - 1):
            iterates.append([iso.apply(v) for v in iterates[-1]])
        for row in (0, packing.size - 1):
            word = packing.words[row]
            total = sum(iterates[k][int(word[k])] for k in range(n))
            norm = float(np.sum(np.abs(total)))
            if abs(norm - n) > 1e-9 * n:
                raise AssertionError("truncated orbit word norm differs from horizon")
        for i in range(m):
            for j in range(i + 1, m):
                s = float(np.sum(np.abs(probes[i] + probes[j])))
                if s >= 2.0 - 1e-12:
                    raise AssertionError("probe pair is aligned")

    points = packing_growth_points(m, limit, delta, per_n_check=check)
    return GrowthSequence(
        tuple(points), "lower", float(delta), 1.0,
        description=f"l1 window shift, {m} probe phases",
    )


def _allocate_runs(spec, window, m, requested):
    """Disjoint shift-runs (sigma(s) = s+1 along each run) for every word of
    every length up to the horizon; returns {(level, word_rank): start}.

    For a global shift the supports of iterated probes travel, so a margin of
    ``requested`` coordinates is left at both window ends."""
    lo, hi = window
    runs = {}
    if spec.default[0] == SHIFT and abs(spec.default[1]) == 1:
        step = abs(spec.default[1])
        cursor = lo + requested * step
        limit = hi - requested * step
        level = 1
        while level <= requested:
            needed = m**level
            if cursor + needed * level > limit:
                break
            for r in range(needed):
                runs[(level, r)] = cursor
                cursor += level
            level += 1
        return runs, level - 1
    if spec.blocks:
        level = 1
        next_block = 1
        while level <= requested:
            needed = m**level
            starts = []
            b = next_block
            while len(starts) < needed:
                if b - 1 >= level and _block_start(b) + b <= hi and _block_start(b) >= max(lo, 0):
                    starts.append(_block_start(b))
                b += 1
                if _block_start(b) > hi:
                    break
            if len(starts) < needed:
                break
            for r, s in enumerate(starts):
                runs[(level, r)] = s
            next_block = b
            level += 1
        return runs, level - 1
    return {}, 0


def _corroborate_linf_unbounded(spec, phases, window, delta, probe_points, field, n_max):
    iso = WindowIsometry(spec, phases, window, "linf", field)
    m = probe_points
    if delta >= 1.0 or delta >= 1.0 / 6.0:
        raise GuardExceededError("delta must be below 1/6 for the counting bound")
    cap = min(n_max, 8, int(math.log(10**6) / math.log(max(m, 2))))
    runs, achieved = _allocate_runs(spec, (iso.lo, iso.hi), m, cap)
    if achieved < 1:
        raise InsufficientWindowError("window does not contain enough shift runs")

    # indicator probes with conjugated phase products, one value set per symbol
    probes = [np.zeros(iso.space.dim, dtype=iso.space.dtype) for _ in range(m)]
    for (level, rank), start in runs.items():
        word = [(rank // m**(level - 1 - k)) % m for k in range(level)]
        for k, symbol in enumerate(word):
            prod = 1.0 + 0j
            for j in range(k):
                prod *= phases.lambda_at(start + j, spec)
            value = np.conj(prod)
            probes[symbol][start + k - iso.lo] = (
                value.real if field == REAL else value
            )

    def check(n, packing):
        iterates = [probes]
        for _ in range(n - 1):
            iterates.append([iso.apply(v) for v in iterates[-1]])
        for row in (0, packing.size - 1):
            word = packing.words[row]
            total = sum(iterates[k][int(word[k])] for k in range(n))
            norm = float(np.max(np.abs(total)))
            if abs(norm - n) > 1e-9 * n:
                raise AssertionError("level-n indicator sums must peak at exactly n")
        for i in range(m):
            for j in range(i + 1, m):
                s = float(np.max(np.abs(probes[i] + probes[j])))
                if s >= 2.0 - 1e-12:
                    raise AssertionError("indicator probes overlap")

    points = packing_growth_points(m, achieved, delta, per_n_check=check)
    return GrowthSequence(
        tuple(points), "lower", float(delta), 1.0,
        description=f"linf window, {m} indicator probes on disjoint shift runs",
    )


def _corroborate_zero(spec, phases, window, field, k_bound=1.5, min_density=Fraction(1, 4)):
    iso = WindowIsometry(spec, phases, window, "ell1", field)
    horizon = min(12, iso.hi - iso.lo)
    seed = iso.lo if not spec.blocks else max(iso.lo, 0)
    x = iso.basis_vector(seed)
    vectors = [x]
    for _ in range(horizon - 1):
        vectors.append(iso.apply(vectors[-1]))
    fam = VectorFamily(
        iso.space, tuple(vectors), labels=tuple(range(horizon)),
        coefficient_field=REAL if field == REAL else None,
    )
    return find_l1_witness(fam, k_bound, min_density)


def empirical_corroboration(
    spec: PermutationSpec,
    phases: PhaseSpec,
    window: tuple,
    delta: float,
    space_kind: str = "ell1",
    probe_points: int = 2,
    field: str = COMPLEX,
    n_max: int = 12,
) -> CorroborationReport:
    """Back the classifier verdict with a finite computation on the window.

    Infinite verdicts run the packing growth pipeline on proof-style probe
    vectors (phase multiples of one basis vector for l_1, phase-corrected
    indicators on disjoint shift runs for l_infty) and report certified lower
    slopes; zero verdicts run the witness search and report its failure.
    """
    if space_kind not in ("ell1", "linf"):
        raise ValueError("space_kind is 'ell1' or 'linf'")
    linf_cls = classify_linfty(spec)
    ell1_cls = classify_ell1(spec)
    verdict = (ell1_cls if space_kind == "ell1" else linf_cls).verdict
    if verdict == INFINITE:
        if space_kind == "ell1":
            growth = _corroborate_l1_shift(
                spec, phases, window, delta, probe_points, field, n_max
            )
        else:
            growth = _corroborate_linf_unbounded(
                spec, phases, window, delta, probe_points, field, n_max
            )
        return CorroborationReport(
            "growth", linf_cls, ell1_cls, growth=growth,
            details={"space": space_kind, "probe_points": probe_points},
        )
    witness = _corroborate_zero(spec, phases, window, field)
    return CorroborationReport(
        "witness", linf_cls, ell1_cls, witness=witness,
        details={"space": space_kind, "witness_found": witness.found},
    )


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def load_permutation_spec(obj) -> PermutationSpec:
    """Load {"cycles": [[...]], "blocks": "increasing"|null, "default": {...}}."""
    if isinstance(obj, (str, bytes)):
        with open(obj) as fh:
            obj = json.load(fh)
    cycles = tuple(tuple(c) for c in obj.get("cycles", []))
    blocks = obj.get("blocks")
    if blocks not in (None, "increasing"):
        raise MalformedSpecError("blocks is either null or \"increasing\"")
    default = obj.get("default", {"kind": "identity"})
    kind = default.get("kind", "identity")
    if kind == "shift":
        rule = (SHIFT, int(default.get("t", 1)))
    elif kind == "identity":
        rule = (IDENTITY,)
    else:
        raise MalformedSpecError(f"unknown default rule {kind!r}")
    return PermutationSpec(cycles, blocks == "increasing", rule)


def load_phase_spec(obj) -> PhaseSpec:
    if obj is None:
        return TRIVIAL_PHASES
    if isinstance(obj, (str, bytes)):
        with open(obj) as fh:
            obj = json.load(fh)
    kind = obj.get("kind", "constant")

    def parse(v):
        return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)

    if kind == "constant":
        return PhaseSpec("constant", (parse(obj.get("value", 1.0)),))
    values = tuple(parse(v) for v in obj.get("values", [1.0]))
    return PhaseSpec(kind, values)
