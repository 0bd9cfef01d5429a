"""Exact finite-state computations: reachable-set enumeration, certified
uniformization, transience probabilities, total-variation curves and mixing
times, and exact integer generator powers.

Everything here shares the transition rules in ``dynamics.rules`` with the
simulators, so the oracle and the Monte Carlo engines cannot drift apart
silently. Uniformization bounds its own truncation error through the Poisson
tail: results come back with the neglected probability mass, which dominates
the approximation error for any bounded observable.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from .configs import Config, SwtConfig, classify_swt
from .dynamics import rules

DEFAULT_CAP = 2_000_000


class CapExceeded(RuntimeError):
    def __init__(self, partial_count: int, cap: int):
        super().__init__(f"reachable set exceeded cap {cap} "
                         f"(at least {partial_count} states)")
        self.partial_count = partial_count
        self.cap = cap


@dataclass
class StateSpace:
    process: str
    seed: tuple[int, ...]
    states: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int]

    def __len__(self) -> int:
        return len(self.states)


def enumerate_reachable(seed, process: str | None = None,
                        cap: int = DEFAULT_CAP) -> StateSpace:
    """Breadth-first closure of a seed under the enabled transitions, with a
    deterministic lexicographic ordering of the result."""
    if isinstance(seed, tuple):
        if process is None:
            raise ValueError("process tag required for raw tuples")
        seed_t = seed
    else:
        from .configs import process_name
        process = process or process_name(seed)
        seed_t = seed.sites
    seen = {seed_t}
    queue = deque([seed_t])
    while queue:
        state = queue.popleft()
        for nxt in rules.transitions(process, state):
            if nxt not in seen:
                if len(seen) >= cap:
                    raise CapExceeded(len(seen) + 1, cap)
                seen.add(nxt)
                queue.append(nxt)
    states = sorted(seen)
    return StateSpace(process, seed_t, states, {s: i for i, s in enumerate(states)})


@dataclass
class GeneratorMatrix:
    """Rate matrix over a StateSpace: integer multiplicities off-diagonal
    (each enabled clock contributes rate 1), diagonal minus the row sum."""

    space: StateSpace
    rows: list[list[tuple[int, int]]]   # row i: [(j, multiplicity), ...]
    exit_rates: list[int]
    uniformization_rate: int
    _uniform_csr: sparse.csr_matrix | None = field(default=None, repr=False)
    _uniform_t_csr: sparse.csr_matrix | None = field(default=None, repr=False)

    @property
    def uniformized(self) -> sparse.csr_matrix:
        """P = I + Q / Lambda, a stochastic matrix."""
        if self._uniform_csr is None:
            n = len(self.space)
            lam = float(self.uniformization_rate)
            data, indices, indptr = [], [], [0]
            for i, row in enumerate(self.rows):
                diag = 1.0 - self.exit_rates[i] / lam
                cols = dict(row)
                cols[i] = cols.get(i, 0)  # placeholder slot for the diagonal
                for j in sorted(cols):
                    indices.append(j)
                    data.append(cols[j] / lam + (diag if j == i else 0.0))
                indptr.append(len(indices))
            self._uniform_csr = sparse.csr_matrix(
                (np.array(data), np.array(indices), np.array(indptr)),
                shape=(n, n))
        return self._uniform_csr

    @property
    def uniformized_transpose(self) -> sparse.csr_matrix:
        if self._uniform_t_csr is None:
            self._uniform_t_csr = self.uniformized.T.tocsr()
        return self._uniform_t_csr


def build_generator(space: StateSpace) -> GeneratorMatrix:
    rows, exits = [], []
    for state in space.states:
        counts = Counter(space.index[nxt]
                         for nxt in rules.transitions(space.process, state))
        rows.append(sorted(counts.items()))
        exits.append(sum(counts.values()))
    lam = max(max(exits, default=0), 1)
    return GeneratorMatrix(space, rows, exits, lam)


def _poisson_window(lam_t: float, tol: float) -> tuple[int, int]:
    """[lo, hi] such that the Poisson(lam_t) mass outside is below tol."""
    if lam_t <= 0:
        return 0, 0
    lo = max(int(poisson.ppf(tol / 4.0, lam_t)) - 2, 0)
    hi = int(poisson.ppf(1.0 - tol / 4.0, lam_t)) + 2
    while poisson.sf(hi, lam_t) > tol / 2.0:
        hi += 10
    while lo > 0 and poisson.cdf(lo - 1, lam_t) > tol / 2.0:
        lo = max(lo - 10, 0)
    return lo, hi


def evolve_distributions(gen: GeneratorMatrix, mu0: np.ndarray,
                         ts: Sequence[float], tol: float = 1e-10):
    """Distributions of the chain at each time for each starting row of mu0.

    Returns (list of arrays shaped like mu0, one per time; neglected-mass
    error bounds per time). One uniformization sweep serves every requested
    time: the step distributions are shared, only the Poisson weights differ.
    """
    ts = [float(t) for t in ts]
    if any(t < 0 for t in ts):
        raise ValueError("times must be >= 0")
    lam = float(gen.uniformization_rate)
    windows = [_poisson_window(lam * t, tol) for t in ts]
    weights = []
    for t, (lo, hi) in zip(ts, windows):
        ns = np.arange(lo, hi + 1)
        weights.append(np.exp(poisson.logpmf(ns, lam * t)) if lam * t > 0
                       else np.ones(1))
    errs = [float(max(1.0 - w.sum(), 0.0)) for w in weights]
    m_max = max(hi for _, hi in windows)
    single = mu0.ndim == 1
    mu_t = (mu0[None, :] if single else mu0).T.copy()   # states x rows
    pt = gen.uniformized_transpose
    acc = [np.zeros_like(mu_t) for _ in ts]
    for n in range(m_max + 1):
        for idx, (lo, hi) in enumerate(windows):
            if lo <= n <= hi:
                acc[idx] += weights[idx][n - lo] * mu_t
        if n < m_max:
            mu_t = pt @ mu_t
    out = [(a.T[0] if single else a.T.copy()) for a in acc]
    return out, errs


def _seed_row(space: StateSpace, seed) -> np.ndarray:
    seed_t = seed.sites if hasattr(seed, "sites") else tuple(seed)
    mu = np.zeros(len(space))
    mu[space.index[seed_t]] = 1.0
    return mu


def _transient_mask(space: StateSpace) -> np.ndarray:
    from .dynamics.trajectory import is_transient
    return np.array([1.0 if is_transient(space.process, list(s)) else 0.0
                     for s in space.states])


def exact_transient_prob(seed, t: float, process: str | None = None,
                         tol: float = 1e-10, cap: int = DEFAULT_CAP):
    """P(state at time t is transient), with a certified truncation bound."""
    if t < 0:
        raise ValueError("time must be >= 0")
    space = enumerate_reachable(seed, process, cap)
    gen = build_generator(space)
    (dist,), (err,) = evolve_distributions(gen, _seed_row(space, seed), [t], tol)
    p = float(dist @ _transient_mask(space))
    return p, err


def observable_vector(space: StateSpace, f: Callable) -> np.ndarray:
    return np.array([float(f(s)) for s in space.states])


def semigroup_value(seed, f: Callable, t: float, process: str | None = None,
                    tol: float = 1e-12, cap: int = DEFAULT_CAP):
    """(P_t f)(seed) by uniformization; the error bound is the neglected
    Poisson mass times the sup-norm of f on the reachable set."""
    space = enumerate_reachable(seed, process, cap)
    gen = build_generator(space)
    fv = observable_vector(space, f)
    (dist,), (err,) = evolve_distributions(gen, _seed_row(space, seed), [t], tol)
    scale = float(np.max(np.abs(fv))) if len(fv) else 0.0
    return float(dist @ fv), err * scale


def generator_power_value(seed, f: Callable, n: int,
                          process: str | None = None,
                          cap: int = DEFAULT_CAP) -> int:
    """(L^n f)(seed) in exact integer arithmetic (f must be integer-valued)."""
    return generator_power_sequence(seed, f, n, process, cap)[n]


def generator_power_sequence(seed, f: Callable, n_max: int,
                             process: str | None = None,
                             cap: int = DEFAULT_CAP) -> list[int]:
    """[(L^n f)(seed) for n = 0..n_max] with Python-integer exactness."""
    space = enumerate_reachable(seed, process, cap)
    gen = build_generator(space)
    seed_t = seed.sites if hasattr(seed, "sites") else tuple(seed)
    i0 = space.index[seed_t]
    vec = [int(f(s)) for s in space.states]
    out = [vec[i0]]
    for _ in range(n_max):
        vec = [sum(c * vec[j] for j, c in row) - ex * v
               for row, ex, v in zip(gen.rows, gen.exit_rates, vec)]
        out.append(vec[i0])
    return out


def max_exit_rate(seed, process: str | None = None,
                  cap: int = DEFAULT_CAP) -> int:
    space = enumerate_reachable(seed, process, cap)
    return build_generator(space).uniformization_rate


def segment_survival_tail(scale: int, t: float, threshold: float,
                          tol: float = 1e-10, cap: int = DEFAULT_CAP):
    """P(|sigma(t)| > threshold) for the reservoir segment at the given scale
    (scale-1 sites), started full. Exact up to the certified truncation."""
    from .configs import SegmentSsepConfig
    full = SegmentSsepConfig((1,) * (scale - 1))
    space = enumerate_reachable(full)
    if len(space) > cap:
        raise CapExceeded(len(space), cap)
    gen = build_generator(space)
    mask = np.array([1.0 if sum(st) > threshold else 0.0
                     for st in space.states])
    (dist,), (err,) = evolve_distributions(gen, _seed_row(space, full), [t], tol)
    return float(dist @ mask), err


# ---------------------------------------------------------------------------
# Exact transience and mixing times over a fixed excess class
# ---------------------------------------------------------------------------

def _compositions(total: int, slots: int):
    """Nonnegative integer vectors of the given length summing to total."""
    if slots == 0:
        if total == 0:
            yield ()
        return
    if slots == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, slots - 1):
            yield (head,) + rest


def excess_class(K: int, s: int) -> list[tuple[int, ...]]:
    """Every trap-process state on K sites with excess exactly s >= 0.

    Finite because the trap depth is pinned to (particles - s); the class is
    closed under the dynamics.
    """
    if s < 0:
        raise ValueError("excess classes are enumerated for s >= 0 only")
    if s > K:
        return []
    out = []
    for p in range(s, K + 1):
        depth = p - s
        if p == K and depth > 0:
            continue
        for particle_sites in itertools.combinations(range(K), p):
            holes = [k for k in range(K) if k not in particle_sites]
            for comp in _compositions(depth, len(holes)):
                state = [0] * K
                for k in particle_sites:
                    state[k] = 1
                for k, d in zip(holes, comp):
                    state[k] = -d
                out.append(tuple(state))
    return sorted(out)


def _class_space(K: int, s: int) -> tuple[StateSpace, GeneratorMatrix]:
    states = excess_class(K, s)
    space = StateSpace("swt", states[0], states,
                       {st: i for i, st in enumerate(states)})
    return space, build_generator(space)


def _monotone_crossing(grid_fn, eps: float, t_hi: float, rounds: int = 3,
                       points: int = 13) -> tuple[float, float, float]:
    """Root of a non-increasing curve against eps: (point, lo, hi).

    grid_fn maps an array of times to curve values. The initial upper end is
    doubled until the curve is below eps there; each refinement round shrinks
    the bracket by the grid factor, and the reported point interpolates
    linearly inside the final bracket.
    """
    if grid_fn(np.array([0.0]))[0] <= eps:
        return 0.0, 0.0, 0.0
    hi = t_hi
    for _ in range(60):
        if grid_fn(np.array([hi]))[0] <= eps:
            break
        hi *= 2.0
    else:
        raise RuntimeError("curve failed to drop below epsilon")
    lo = 0.0
    v_lo, v_hi = None, None
    for _ in range(rounds):
        ts = np.linspace(lo, hi, points)
        vals = grid_fn(ts)
        k = int(np.argmax(vals <= eps))
        lo, hi = ts[k - 1], ts[k]
        v_lo, v_hi = vals[k - 1], vals[k]
    if v_hi == v_lo:
        point = hi
    else:
        point = lo + (hi - lo) * (v_lo - eps) / (v_lo - v_hi)
    return float(point), float(lo), float(hi)


@dataclass
class ExactTvMixing:
    """Exact epsilon-times for the excess-s class on K sites.

    ``theta`` is the worst-seed transience time, ``ssep_mixing_time`` the
    worst ergodic seed's mixing time, ``mixing_time`` the worst seed over the
    whole class; each comes with the final bisection bracket.
    """

    K: int
    s: int
    eps: float
    tol: float
    theta: float
    theta_bracket: tuple[float, float]
    ssep_mixing_time: float
    ssep_bracket: tuple[float, float]
    mixing_time: float
    mixing_bracket: tuple[float, float]
    _space: StateSpace = field(repr=False, default=None)
    _gen: GeneratorMatrix = field(repr=False, default=None)
    _pi: np.ndarray = field(repr=False, default=None)

    def d_tv(self, t: float, worst: bool = True) -> float | np.ndarray:
        dists, _ = evolve_distributions(
            self._gen, np.eye(len(self._space)), [t], self.tol)
        vals = 0.5 * np.abs(dists[0] - self._pi[None, :]).sum(axis=1)
        return float(vals.max()) if worst else vals

    def transient_prob(self, t: float) -> float:
        mask = _transient_mask(self._space)
        dists, _ = evolve_distributions(
            self._gen, np.eye(len(self._space)), [t], self.tol)
        return float((dists[0] @ mask).max())


def exact_ssep_mixing(K: int, s: int, eps: float, tol: float = 1e-10,
                      cap: int = DEFAULT_CAP) -> float:
    """Exact eps-mixing time of the ring exclusion process with s particles,
    computed over the exclusion states alone (the worst seed over that class).
    """
    if not 0 <= s <= K:
        raise ValueError("need 0 <= s <= K")
    if s in (0, K):
        return 0.0
    seed = SwtConfig(tuple(1 if k < s else 0 for k in range(K)))
    space = enumerate_reachable(seed)
    if len(space) > cap:
        raise CapExceeded(len(space), cap)
    gen = build_generator(space)
    n = len(space)
    pi = np.full(n, 1.0 / n)
    eye = np.eye(n)

    def tv_curve(ts):
        dists, _ = evolve_distributions(gen, eye, ts, tol)
        return np.array([np.abs(d - pi[None, :]).sum(axis=1).max() * 0.5
                         for d in dists])

    guess = max(K * K * math.log(max(K, 2)), 1.0)
    value, _, _ = _monotone_crossing(tv_curve, eps, guess)
    return value


def exact_tv_and_mixing(K: int, s: int, eps: float, tol: float = 1e-10,
                        cap: int = DEFAULT_CAP) -> ExactTvMixing:
    """Exact worst-seed distance curves and their eps-crossings for excess s.

    The stationary target is uniform over the exclusion states with s
    particles, or the point mass at the empty state when s = 0 (then total
    variation to it equals the transience probability, and the mixing time
    coincides with theta).
    """
    if not 0 <= s <= K:
        raise ValueError("need 0 <= s <= K")
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    space, gen = _class_space(K, s)
    n = len(space)
    if n > cap:
        raise CapExceeded(n, cap)
    ergodic = np.array([all(v >= 0 for v in st) for st in space.states])
    pi = np.zeros(n)
    if s == 0:
        pi[space.index[(0,) * K]] = 1.0
    else:
        pi[ergodic] = 1.0 / ergodic.sum()
    transient_mask = _transient_mask(space)
    eye = np.eye(n)

    def theta_curve(ts):
        dists, _ = evolve_distributions(gen, eye, ts, tol)
        return np.array([(d @ transient_mask).max() for d in dists])

    def tv_curve_all(ts):
        dists, _ = evolve_distributions(gen, eye, ts, tol)
        return np.array([np.abs(d - pi[None, :]).sum(axis=1).max() * 0.5
                         for d in dists])

    ssep_rows = eye[ergodic]

    def tv_curve_ssep(ts):
        dists, _ = evolve_distributions(gen, ssep_rows, ts, tol)
        return np.array([np.abs(d - pi[None, :]).sum(axis=1).max() * 0.5
                         for d in dists])

    guess = max(K * K * math.log(max(K, 2)), 1.0)
    theta, th_lo, th_hi = _monotone_crossing(theta_curve, eps, guess)
    if s == 0:
        ssep_time, ss_lo, ss_hi = 0.0, 0.0, 0.0
        mix, mx_lo, mx_hi = theta, th_lo, th_hi
    else:
        ssep_time, ss_lo, ss_hi = _monotone_crossing(tv_curve_ssep, eps, guess)
        mix, mx_lo, mx_hi = _monotone_crossing(tv_curve_all, eps, guess)
    return ExactTvMixing(K, s, eps, tol, theta, (th_lo, th_hi), ssep_time,
                         (ss_lo, ss_hi), mix, (mx_lo, mx_hi), space, gen, pi)
