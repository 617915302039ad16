"""Separated/spanning counts and entropy estimation for subshifts.

A subshift is given by a 0/1 transition matrix or a forbidden-word list.  The
finite-horizon counts use admissible words of length n as stand-ins for points:
two words are (n, eps)-separated when some shift of the window pushes them at
least eps apart in the chosen pseudometric, and a set spans when every word
stays within eps of some member along the whole window.  For shifts of finite
type the log of the Perron eigenvalue of the transition matrix serves as an
independent entropy oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import EmptySystemError, GuardExceededError

COORDINATE0 = "coordinate0"
WEIGHTED = "weighted"

EXACT_STATE_CAP = 10**6
PAIRWISE_WORD_CAP = 4096
CLIQUE_COMPONENT_CAP = 64


@dataclass(frozen=True)
class SymbolicSystem:
    alphabet: int
    transition: tuple | None = None
    forbidden: tuple | None = None
    metric: str = COORDINATE0

    def __post_init__(self):
        if self.alphabet < 1:
            raise ValueError("alphabet must have at least one symbol")
        if self.metric not in (COORDINATE0, WEIGHTED):
            raise ValueError(f"unknown pseudometric {self.metric!r}")
        if self.transition is not None and self.forbidden is not None:
            raise ValueError("give a transition matrix or forbidden words, not both")
        if self.transition is not None:
            t = np.asarray(self.transition)
            if t.shape != (self.alphabet, self.alphabet) or not np.isin(t, (0, 1)).all():
                raise ValueError("transition must be a 0/1 matrix over the alphabet")
            object.__setattr__(self, "transition", tuple(map(tuple, t.tolist())))
        if self.forbidden is not None:
            words = tuple(tuple(int(c) for c in w) for w in self.forbidden)
            for w in words:
                if not w or any(c < 0 or c >= self.alphabet for c in w):
                    raise ValueError("forbidden words must be nonempty words over the alphabet")
            object.__setattr__(self, "forbidden", words)

    def transition_array(self) -> np.ndarray | None:
        return None if self.transition is None else np.array(self.transition, dtype=np.int64)

    def admissible_words(self, n: int) -> np.ndarray:
        """All admissible words of length n as an (N, n) array, lexicographic order."""
        if n < 1:
            raise ValueError("word length must be positive")
        if self.alphabet**n > EXACT_STATE_CAP:
            raise GuardExceededError(f"{self.alphabet}^{n} words exceed the exact-mode cap")
        words = np.arange(self.alphabet, dtype=np.uint8).reshape(-1, 1)
        if self.forbidden is not None:
            words = words[self._forbidden_mask(words)]
        trans = self.transition_array()
        for _ in range(n - 1):
            if len(words) == 0:
                break
            if trans is not None:
                allowed = trans[words[:, -1]]  # (N, m)
                reps = allowed.sum(axis=1)
                base = np.repeat(words, reps, axis=0)
                nxt = np.concatenate([np.nonzero(row)[0] for row in allowed]).astype(np.uint8)
                words = np.hstack([base, nxt.reshape(-1, 1)])
            else:
                m = self.alphabet
                base = np.repeat(words, m, axis=0)
                nxt = np.tile(np.arange(m, dtype=np.uint8), len(words)).reshape(-1, 1)
                words = np.hstack([base, nxt])
                if self.forbidden is not None:
                    words = words[self._forbidden_mask(words)]
        return words

    def _forbidden_mask(self, words: np.ndarray) -> np.ndarray:
        keep = np.ones(len(words), dtype=bool)
        n = words.shape[1]
        for f in self.forbidden:
            ell = len(f)
            if ell <= n:
                keep &= ~(words[:, n - ell :] == np.array(f, dtype=np.uint8)).all(axis=1)
        return keep

    def word_count(self, n: int) -> int:
        return len(self.admissible_words(n))

    def effective_transition(self) -> np.ndarray:
        """Transition matrix of an equivalent shift of finite type.

        Forbidden-word systems are recoded on (L-1)-blocks, L being the longest
        forbidden word, which preserves entropy."""
        if self.transition is not None:
            return self.transition_array()
        if not self.forbidden:
            return np.ones((self.alphabet, self.alphabet), dtype=np.int64)
        ell = max(len(f) for f in self.forbidden)
        if ell == 1:
            alive = [a for a in range(self.alphabet) if (a,) not in self.forbidden]
            t = np.zeros((self.alphabet, self.alphabet), dtype=np.int64)
            for a in alive:
                for b in alive:
                    t[a, b] = 1
            return t
        states = self.admissible_words(ell - 1)
        if len(states) == 0:
            return np.zeros((1, 1), dtype=np.int64)
        index = {tuple(s): i for i, s in enumerate(states.tolist())}
        t = np.zeros((len(states), len(states)), dtype=np.int64)
        forbidden_set = set(self.forbidden)
        for i, s in enumerate(states.tolist()):
            for c in range(self.alphabet):
                w = tuple(s) + (c,)
                if any(w[len(w) - len(f) :] == f for f in forbidden_set if len(f) <= len(w)):
                    continue
                j = index.get(w[1:])
                if j is not None:
                    t[i, j] = 1
        return t


def full_shift(m: int, metric: str = COORDINATE0) -> SymbolicSystem:
    return SymbolicSystem(m, transition=tuple(map(tuple, np.ones((m, m), dtype=int).tolist())), metric=metric)


def golden_mean_shift(metric: str = COORDINATE0) -> SymbolicSystem:
    return SymbolicSystem(2, transition=((1, 1), (1, 0)), metric=metric)


# ---------------------------------------------------------------------------
# separation structure
# ---------------------------------------------------------------------------

def _max_metric_value(metric: str) -> float:
    return 1.0 if metric == COORDINATE0 else 2.0


def _separation_matrix(words: np.ndarray, metric: str, eps: float) -> np.ndarray:
    """Boolean (N, N) matrix: separated over the length-n window at scale eps."""
    n_words, n = words.shape
    if n_words > PAIRWISE_WORD_CAP:
        raise GuardExceededError(
            f"pairwise separation over {n_words} words exceeds the cap {PAIRWISE_WORD_CAP}"
        )
    if metric == COORDINATE0:
        differ = np.zeros((n_words, n_words), dtype=bool)
        for j in range(n):
            differ |= words[:, j][:, None] != words[:, j][None, :]
        return differ if eps <= 1.0 else np.zeros_like(differ)
    # weighted: d_j(x, y) = sum_k 2^-k [x_{j+k} != y_{j+k}], window-truncated
    weights = np.zeros((n, n))
    for j in range(n):
        weights[j, j:] = 2.0 ** -(np.arange(n - j))
    out = np.zeros((n_words, n_words), dtype=bool)
    for i in range(n_words):
        diffs = (words != words[i][None, :]).astype(np.float64)  # (N, n)
        dmax = (diffs @ weights.T).max(axis=1)
        out[i] = dmax >= eps
    np.fill_diagonal(out, False)
    return out


def _components(adjacency: np.ndarray):
    n_comp, labels = connected_components(adjacency.astype(np.int8), directed=False)
    return [np.nonzero(labels == c)[0] for c in range(n_comp)]


def _max_clique_bitset(neighbors: list[int], order: list[int]) -> int:
    """Deterministic branch-and-bound maximum clique on <= 64-vertex graphs."""
    best = 0

    def expand(candidates: int, size: int):
        nonlocal best
        if candidates == 0:
            best = max(best, size)
            return
        if size + bin(candidates).count("1") <= best:
            return
        while candidates:
            v = (candidates & -candidates).bit_length() - 1
            if size + bin(candidates).count("1") <= best:
                return
            candidates &= ~(1 << v)
            expand(candidates & neighbors[v], size + 1)

    expand(sum(1 << v for v in order), 0)
    return best


def _min_dominating_bitset(closed: list[int], n: int) -> int:
    """Exact minimum dominating set via branch-and-bound over closed neighborhoods."""
    best = [n]
    full = (1 << n) - 1

    def search(covered: int, used: int):
        if used >= best[0]:
            return
        if covered == full:
            best[0] = used
            return
        uncovered = (~covered) & full
        v = (uncovered & -uncovered).bit_length() - 1
        # some chosen center must dominate v; candidates are v's closed neighborhood
        cands = closed[v]
        while cands:
            u = (cands & -cands).bit_length() - 1
            cands &= cands - 1
            search(covered | closed[u], used + 1)

    search(0, 0)
    return best[0]


def sep_count(system: SymbolicSystem, n: int, eps: float, mode: str = "exact") -> int:
    """Largest (mode "exact") or maximal-greedy (mode "greedy", a lower bound)
    (n, eps)-separated set of admissible words."""
    if mode not in ("exact", "greedy"):
        raise ValueError("mode is 'exact' or 'greedy'")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    words = system.admissible_words(n)
    if len(words) == 0:
        return 0
    if eps > _max_metric_value(system.metric):
        return 1
    if eps <= 1.0:
        # any coordinate difference already separates in both metrics
        return len(words)
    sep = _separation_matrix(words, system.metric, eps)
    if mode == "greedy":
        chosen: list[int] = []
        for i in range(len(words)):
            if all(sep[i, j] for j in chosen):
                chosen.append(i)
        return len(chosen)
    total = 0
    for comp in _components(~sep & ~np.eye(len(words), dtype=bool)):
        if len(comp) == 1:
            total += 1
            continue
        if len(comp) > CLIQUE_COMPONENT_CAP:
            raise GuardExceededError("separation component too large for exact mode; use greedy")
        sub = sep[np.ix_(comp, comp)]
        neigh = [int(sum(1 << j for j in range(len(comp)) if sub[i, j])) for i in range(len(comp))]
        total += _max_clique_bitset(neigh, list(range(len(comp))))
    return total


def spn_count(system: SymbolicSystem, n: int, eps: float, mode: str = "exact") -> int:
    """Smallest (n, eps)-spanning set (mode "exact"); mode "greedy" returns the
    size of a maximal separated set, which spans and so upper-bounds it."""
    if mode not in ("exact", "greedy"):
        raise ValueError("mode is 'exact' or 'greedy'")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    words = system.admissible_words(n)
    if len(words) == 0:
        return 0
    if eps > _max_metric_value(system.metric):
        return 1
    if eps <= 1.0:
        return len(words)
    sep = _separation_matrix(words, system.metric, eps)
    if mode == "greedy":
        chosen = []
        for i in range(len(words)):
            if all(sep[i, j] for j in chosen):
                chosen.append(i)
        return len(chosen)
    shadow = ~sep  # includes the diagonal
    total = 0
    for comp in _components(~sep & ~np.eye(len(words), dtype=bool)):
        if len(comp) == 1:
            total += 1
            continue
        if len(comp) > CLIQUE_COMPONENT_CAP:
            raise GuardExceededError("shadowing component too large for exact mode; use greedy")
        sub = shadow[np.ix_(comp, comp)]
        closed = [int(sum(1 << j for j in range(len(comp)) if sub[i, j])) for i in range(len(comp))]
        total += _min_dominating_bitset(closed, len(comp))
    return total


# ---------------------------------------------------------------------------
# spectral oracle
# ---------------------------------------------------------------------------

def sft_entropy_oracle(transition, tol: float = 1e-10) -> float:
    """log of the Perron eigenvalue of a 0/1 transition matrix.

    Strongly connected components are handled separately; within a component
    the iteration runs on A + I (killing periodicity) and stops when the
    Collatz-Wielandt ratio bounds agree to ``tol``, which encloses the Perron
    eigenvalue rigorously for positive iterates.
    """
    a = np.asarray(transition, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.isin(a, (0.0, 1.0)).all():
        raise ValueError("need a square 0/1 matrix")
    n_comp, labels = connected_components(a.astype(np.int8), directed=True, connection="strong")
    lam_max = 0.0
    for c in range(n_comp):
        idx = np.nonzero(labels == c)[0]
        sub = a[np.ix_(idx, idx)]
        if len(idx) == 1 and sub[0, 0] == 0.0:
            continue  # transient vertex, no cycle through it
        shifted = sub + np.eye(len(idx))
        v = np.ones(len(idx))
        lam = 1.0
        for _ in range(200_000):
            w = shifted @ v
            ratios = w / v
            lo, hi = float(ratios.min()), float(ratios.max())
            lam = 0.5 * (lo + hi)
            if hi - lo <= tol * max(lam, 1.0):
                break
            v = w / w.sum()
        lam_max = max(lam_max, lam - 1.0)
    if lam_max <= 0.0:
        raise EmptySystemError("nilpotent transition matrix: the subshift is empty")
    return math.log(lam_max)


# ---------------------------------------------------------------------------
# entropy estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyCell:
    n: int
    eps: float
    sep: int
    spn: int
    sep_rate: float
    spn_rate: float
    mode: str


@dataclass(frozen=True)
class EntropyEstimate:
    cells: tuple
    extrapolated: float
    oracle: float | None

    def to_csv(self) -> str:
        lines = ["n,eps,sep,spn,sep_rate,spn_rate,mode"]
        for c in self.cells:
            lines.append(
                f"{c.n},{c.eps!r},{c.sep},{c.spn},{c.sep_rate!r},{c.spn_rate!r},{c.mode}"
            )
        return "\n".join(lines) + "\n"


def entropy_estimate(
    system: SymbolicSystem, n_schedule, eps_schedule, mode: str = "exact"
) -> EntropyEstimate:
    """Separated/spanning table over the schedules with last-value extrapolation.

    The extrapolated value is the normalized separated count at the largest
    horizon and the smallest eps; the spectral oracle is attached whenever an
    equivalent finite-type presentation is available.
    """
    n_schedule = list(n_schedule)
    eps_schedule = list(eps_schedule)
    if not n_schedule or not eps_schedule:
        raise ValueError("schedules must be nonempty")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        pass  # nonincreasing is conventional but not required for the table
    cells = []
    for n in sorted(n_schedule):
        for eps in eps_schedule:
            s = sep_count(system, n, eps, mode)
            p = spn_count(system, n, eps, mode)
            cells.append(
                EntropyCell(
                    n,
                    float(eps),
                    s,
                    p,
                    math.log(s) / n if s > 0 else -math.inf,
                    math.log(p) / n if p > 0 else -math.inf,
                    mode,
                )
            )
    last_n = max(n_schedule)
    last_eps = eps_schedule[-1]
    final = next(c for c in cells if c.n == last_n and c.eps == float(last_eps))
    oracle = None
    try:
        oracle = sft_entropy_oracle(system.effective_transition())
    except EmptySystemError:
        oracle = None
    return EntropyEstimate(tuple(cells), final.sep_rate, oracle)


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def load_symbolic_system(obj) -> SymbolicSystem:
    """Load {"alphabet": m, "transition": [[...]]} or {"forbidden": ["11", ...]}."""
    if isinstance(obj, (str, bytes)):
        with open(obj) as fh:
            obj = json.load(fh)
    metric = obj.get("metric", COORDINATE0)
    if "transition" in obj:
        t = obj["transition"]
        return SymbolicSystem(len(t), transition=tuple(map(tuple, t)), metric=metric)
    if "forbidden" in obj:
        words = [str(w) for w in obj["forbidden"]]
        alphabet = obj.get("alphabet")
        if alphabet is None:
            alphabet = max((int(c) for w in words for c in w), default=0) + 1
        return SymbolicSystem(int(alphabet), forbidden=tuple(words), metric=metric)
    if "alphabet" in obj:
        return full_shift(int(obj["alphabet"]), metric=metric)
    raise ValueError("subshift JSON needs 'transition', 'forbidden', or 'alphabet'")
