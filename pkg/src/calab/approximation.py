"""Upper and lower bounds on the contractive-approximation rank rc(Omega, delta)
and finite-horizon growth sequences for iterated probe sets.

The upper route factors evaluation at dual-ball net points through a sup-norm
space of dimension d = net size (valid whenever the net mesh is strictly below
delta / max ||x||).  The lower route turns a certified l1 lower basis constant
into the exponential bound

    log rc(Omega, delta) >= n * a * upper^-2 * (lower - delta)^2,

reported in units of the universal constant a, which is an explicit parameter
defaulting to 1 and never silently calibrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GuardExceededError, HypothesisNotMetError
from .l1geometry import BasisConstants, basis_constants
from .spaces import COMPLEX, FiniteNormedSpace, VectorFamily, dual_ball_net

UPPER_VIA_NET = "upper-via-net"
LOWER_VIA_L1 = "lower-via-l1"

HC_HORIZON_CAP = 24


@dataclass(frozen=True)
class RcBound:
    kind: str
    value: float
    delta: float
    family_size: int
    mesh: float | None = None
    a: float | None = None
    constants: BasisConstants | None = None

    def __post_init__(self):
        if self.kind == UPPER_VIA_NET and self.value < 1:
            raise ValueError("a rank upper bound counts at least one coordinate")
        if self.kind == LOWER_VIA_L1 and self.value < 0:
            raise ValueError("the exponential lower bound is nonnegative")


def rc_upper(space: FiniteNormedSpace, omega: VectorFamily, delta: float) -> RcBound:
    """Smallest dual-ball net certifying a contractive factorization within delta.

    Evaluation at the net functionals is a contraction into the sup-norm space
    of dimension d = net size, and a partition of unity subordinate to the net
    balls maps back within mesh * max ||x|| < delta on Omega.  When delta
    exceeds every probe norm the zero maps already work and d = 1.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if omega.space != space:
        raise ValueError("probe family lives in a different space")
    max_norm = float(np.max(omega.norms())) if len(omega) else 0.0
    if delta > max_norm:
        return RcBound(UPPER_VIA_NET, 1.0, delta, len(omega))
    mesh = (delta / max_norm) * (1.0 - 1e-9)
    net, cert = dual_ball_net(space, mesh)
    if not cert.covered:
        raise GuardExceededError("net construction failed its own covering certificate")
    return RcBound(UPPER_VIA_NET, float(len(net)), delta, len(omega), mesh=mesh)


def rc_lower(
    family: VectorFamily,
    delta: float,
    a: float = 1.0,
    constants: BasisConstants | None = None,
    method: str = "auto",
    mesh: float | None = None,
) -> RcBound:
    """Exponential lower bound on log rc from l1-equivalence of the probe set.

    Uses the certified lower endpoint, so the reported value is conservative.
    Raises HypothesisNotMetError when delta is not strictly below the certified
    lower basis constant (the bound then says nothing).
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if a <= 0.0:
        raise ValueError("the universal constant a must be positive")
    if constants is None:
        constants = basis_constants(family, mesh=mesh, method=method)
    lower = constants.lower.lo
    if delta >= lower:
        raise HypothesisNotMetError(
            f"delta={delta} is not below the certified lower constant {lower}"
        )
    n = len(family)
    value = n * a * constants.upper**-2 * (lower - delta) ** 2
    return RcBound(LOWER_VIA_L1, value, delta, n, a=a, constants=constants)


# ---------------------------------------------------------------------------
# iterated isometries on finite truncations
# ---------------------------------------------------------------------------

class IdentityIsometry:
    """The identity automorphism of any space."""

    def __init__(self, space: FiniteNormedSpace):
        self.space = space

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.space.check_vector(x)


class CoordinateShiftIsometry:
    """Coordinate shift with unimodular phases on a window [0, dim).

    alpha(e_j) = lambda(j + step) * e_{j + step}; applying it to a vector with
    mass in the last ``step`` coordinates would push mass off the window, which
    raises instead of silently breaking the isometry.
    """

    def __init__(self, space: FiniteNormedSpace, step: int = 1, phases=None):
        if space.kind == "matrix":
            raise ValueError("coordinate shifts act on coordinate spaces")
        if step == 0:
            raise ValueError("step must be nonzero")
        self.space = space
        self.step = step
        if phases is None:
            self.phases = np.ones(space.dim, dtype=space.dtype)
        else:
            self.phases = np.asarray(phases, dtype=space.dtype)
            if self.phases.shape != (space.dim,):
                raise ValueError("need one phase per coordinate")
            if not np.allclose(np.abs(self.phases), 1.0, atol=1e-12):
                raise ValueError("phases must be unimodular")

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = self.space.check_vector(x)
        d, t = self.space.dim, self.step
        lost = x[d - t :] if t > 0 else x[: -t]
        if np.any(np.abs(lost) > 0.0):
            raise GuardExceededError("orbit leaves the coordinate window; enlarge the truncation")
        y = np.zeros_like(x)
        if t > 0:
            y[t:] = x[: d - t]
        else:
            y[:t] = x[-t:]
        return y * self.phases


class PowerIsometry:
    """alpha^k of a base isometry, for the entropy scaling checks."""

    def __init__(self, base, k: int):
        if k < 1:
            raise ValueError("power must be at least 1")
        self.base = base
        self.k = k
        self.space = base.space

    def apply(self, x: np.ndarray) -> np.ndarray:
        for _ in range(self.k):
            x = self.base.apply(x)
        return x


def orbit_family(system, omega: VectorFamily, horizon: int) -> VectorFamily:
    """Omega union alpha(Omega) union ... union alpha^{horizon-1}(Omega), duplicates dropped."""
    vectors = []
    labels = []
    seen = set()
    current = [np.array(v) for v in omega.vectors]
    for time_idx in range(horizon):
        for v in current:
            key = v.tobytes()
            if key not in seen:
                seen.add(key)
                vectors.append(v)
                labels.append(time_idx)
        if time_idx < horizon - 1:
            current = [system.apply(v) for v in current]
    return VectorFamily(omega.space, tuple(vectors), tuple(labels), omega.coefficient_field)


def fattened_probe(system, omega: VectorFamily, k: int) -> VectorFamily:
    """Probe set Omega union ... union alpha^{k-1}(Omega) used when comparing
    alpha^k against alpha: iterating it under alpha^k sweeps the full alpha
    orbit, which is what the entropy scaling hc(alpha^k) = k hc(alpha) sees."""
    return orbit_family(system, omega, k)


# ---------------------------------------------------------------------------
# growth sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthPoint:
    n: int
    bound: float
    normalized: float
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GrowthSequence:
    points: tuple
    mode: str
    delta: float
    a: float
    description: str = ""

    def normalized_values(self) -> list[float]:
        return [p.normalized for p in self.points]

    @property
    def final_slope(self) -> float:
        return self.points[-1].normalized

    def to_csv(self) -> str:
        lines = ["n,bound,normalized,mode,delta,a"]
        for p in self.points:
            lines.append(
                f"{p.n},{p.bound!r},{p.normalized!r},{self.mode},{self.delta!r},{self.a!r}"
            )
        return "\n".join(lines) + "\n"


def hc_growth(
    system,
    omega: VectorFamily,
    delta: float,
    n_max: int,
    mode: str,
    a: float = 1.0,
    method: str = "auto",
    mesh: float | None = None,
) -> GrowthSequence:
    """Per-horizon normalized rank bounds for the iterated probe set.

    mode "upper": log of the dual-ball net size for the accumulated probe set;
    mode "lower": the l1 lower bound (already a bound on log rc).  Both are
    divided by the horizon so limiting slopes can be read off directly.
    """
    if n_max < 1 or n_max > HC_HORIZON_CAP:
        raise GuardExceededError(f"horizon must be in [1, {HC_HORIZON_CAP}]")
    if mode not in ("upper", "lower"):
        raise ValueError("mode is 'upper' or 'lower'")
    points = []
    for n in range(1, n_max + 1):
        fam = orbit_family(system, omega, n)
        if mode == "upper":
            bound = math.log(rc_upper(omega.space, fam, delta).value)
            extras = {"family_size": len(fam)}
        else:
            rb = rc_lower(fam, delta, a=a, method=method, mesh=mesh)
            bound = rb.value
            extras = {
                "family_size": len(fam),
                "lower_constant": rb.constants.lower.lo,
                "upper_constant": rb.constants.upper,
            }
        points.append(GrowthPoint(n, bound, bound / n, extras))
    return GrowthSequence(tuple(points), mode, delta, a)
