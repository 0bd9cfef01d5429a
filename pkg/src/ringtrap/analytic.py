"""Closed-form and semi-closed-form quantities for the reservoir segment and
the transience/mixing bound envelopes.

The segment of K-1 sites with empty reservoirs diagonalizes in the sine basis
phi_l(k) = sqrt(2) sin(pi l k / K) with eigenvalues lambda_l = 2(1 - cos(pi l/K)).
Writing c'_l = <1, phi_l> (zero for even l), the expected particle count is

    started full:             E[|sigma(t)|] = K * sum_l (c'_l)^2 exp(-lambda_l t)
    started from one particle
    at the midpoint m = K/2:  E[|sigma(t)|] = K * sum_l c_l c'_l exp(-lambda_l t),
                              c_l = (sqrt(2)/K) sin(pi l m / K)

The full-start series is a sum of squares (no cancellation); the single-start
series alternates in sign over odd l and is summed term-by-term with
compensated summation. The single-mode bound (2/K) e^{-lambda_1 t}/tan(pi/2K)
dominates the single-start occupation at every t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .dynamics.fast import walk_zero_hit_late_fraction

PI = math.pi

#: Constant in the continuous-time walk exit bound C * exp(-s/K^2),
#: C = 1/cos(sqrt(24/11)) (~10.687), from the cosine-martingale argument with
#: lambda = sqrt(24/11)/K.
RW_BOUND_C = 1.0 / math.cos(math.sqrt(24.0 / 11.0))

_CALIBRATION_SEED = 20260810
_CALIBRATION_K = 64
_CALIBRATION_WALKS = 20000


class AnalyticError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralSummary:
    """Eigen-data of the reservoir segment at scale K (K-1 sites)."""

    K: int
    lam: tuple[float, ...]        # lambda_l, l = 1..K-1
    c_single: tuple[float, ...]   # <1_{midpoint}, phi_l>
    c_prime: tuple[float, ...]    # <1, phi_l>

    def occupation_full(self, t: float) -> float:
        K = self.K
        return math.fsum(K * cp * cp * math.exp(-lam * t)
                         for lam, cp in zip(self.lam, self.c_prime) if cp != 0.0)

    def occupation_single(self, t: float) -> float:
        K = self.K
        return math.fsum(K * c * cp * math.exp(-lam * t)
                         for lam, c, cp in zip(self.lam, self.c_single, self.c_prime)
                         if c != 0.0 and cp != 0.0)

    def single_mode_bound(self, t: float) -> float:
        K = self.K
        return (2.0 / K) * math.exp(-self.lam[0] * t) / math.tan(PI / (2 * K))


@lru_cache(maxsize=None)
def spectral_summary(K: int, midpoint: int | None = None) -> SpectralSummary:
    if K < 2:
        raise AnalyticError("segment scale K must be >= 2")
    m = K // 2 if midpoint is None else midpoint
    lam, c_single, c_prime = [], [], []
    s2 = math.sqrt(2.0)
    for l in range(1, K):
        lam.append(2.0 * (1.0 - math.cos(PI * l / K)))
        c_single.append((s2 / K) * math.sin(PI * l * m / K))
        if l % 2 == 1:
            c_prime.append((s2 / K) / math.tan(PI * l / (2 * K)))
        else:
            c_prime.append(0.0)
    return SpectralSummary(K, tuple(lam), tuple(c_single), tuple(c_prime))


@dataclass(frozen=True)
class OccupationValue:
    value: float               # full-start expected count, K-1 at t=0
    single_particle: float     # midpoint single-particle expected count
    single_mode_bound: float   # dominates single_particle at every t


def spectral_occupation(K: int, t: float) -> OccupationValue:
    """Expected particle count of the reservoir segment at time t.

    ``value`` is for the full initial configuration (the quantity behind
    tau_star); ``single_particle`` for one particle started at the midpoint,
    together with its one-mode upper bound.
    """
    if K < 2:
        raise AnalyticError("segment scale K must be >= 2")
    if t < 0:
        raise AnalyticError("time must be >= 0")
    summary = spectral_summary(K)
    return OccupationValue(summary.occupation_full(t),
                           summary.occupation_single(t),
                           summary.single_mode_bound(t))


@dataclass(frozen=True)
class TauStarResult:
    time: float
    degenerate: bool = False


def tau_star(K: int, s: float = 0.0, rel_tol: float = 1e-8) -> TauStarResult:
    """Smallest t with full-start occupation <= max(s, 1), by bisection.

    For s >= K-1 the threshold is met at t = 0 already; that degenerate case
    is returned flagged rather than rejected so sweeps over s stay total.
    """
    if K < 2:
        raise AnalyticError("segment scale K must be >= 2")
    if s < 0:
        raise AnalyticError("target s must be >= 0")
    threshold = max(float(s), 1.0)
    summary = spectral_summary(K)
    # the t=0 value is exactly K-1 in exact arithmetic; absorb roundoff
    if summary.occupation_full(0.0) <= threshold * (1.0 + 1e-9):
        return TauStarResult(0.0, degenerate=True)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if summary.occupation_full(hi) <= threshold:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise AnalyticError("occupation failed to drop below threshold")
    while hi - lo > rel_tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if summary.occupation_full(mid) <= threshold:
            hi = mid
        else:
            lo = mid
    return TauStarResult(0.5 * (lo + hi))


def t_star(K: int) -> float:
    """The cutoff location K^2 log K / pi^2."""
    if K < 2:
        raise AnalyticError("K must be >= 2")
    return K * K * math.log(K) / PI**2


@lru_cache(maxsize=None)
def default_envelope_constant(master_seed: int = _CALIBRATION_SEED,
                              K: int = _CALIBRATION_K,
                              walks: int = _CALIBRATION_WALKS) -> float:
    """Calibration constant max(2/c, 2) with c = -log P_K(T_0 >= 2K^2).

    The hitting probability is estimated once by Monte Carlo for the per-edge
    rate-1 walk on {0..K} reflected at K (its worst starting point); the
    estimate lands around 0.01, so the default works out to 2.
    """
    p_late = walk_zero_hit_late_fraction(K, 2.0 * K * K, walks, master_seed)
    p_late = max(p_late, 1.0 / walks)
    c = -math.log(p_late)
    return max(2.0 / c, 2.0)


@dataclass(frozen=True)
class BoundEnvelope:
    lower: float
    upper: float
    leading: float
    constant: float


def transience_bounds(K: int, s: float, eps: float,
                      C: float | None = None) -> BoundEnvelope:
    """Lower/upper envelope for the epsilon-transience time with s excess
    particles: leading term (K^2/pi^2) log(K/(s v 1)), correction windows
    C K^2 (1 + log 1/(1-eps)) below and C K^2 (1 + log(3 log K / eps)) above.
    """
    if K < 2:
        raise AnalyticError("K must be >= 2")
    if not 0 < eps < 1:
        raise AnalyticError("epsilon must lie in (0, 1)")
    if not 0 <= s <= K:
        raise AnalyticError("s must lie in [0, K]")
    if C is None:
        C = default_envelope_constant()
    if C <= 0:
        raise AnalyticError("calibration constant must be positive")
    leading = (K * K / PI**2) * math.log(K / max(s, 1.0))
    lower = leading - C * K * K * (1.0 + math.log(1.0 / (1.0 - eps)))
    upper = leading + C * K * K * (1.0 + math.log(3.0 * math.log(K) / eps))
    return BoundEnvelope(max(lower, 0.0), max(upper, 0.0), leading, C)


@dataclass(frozen=True)
class SsepMixingBounds:
    lower: float
    upper_loose: float
    upper_sharp_leading: float
    lower_is_asymptotic: bool
    o1_dropped: bool = True


def ssep_mixing_bounds(K: int, s: float, eps: float) -> SsepMixingBounds:
    """Ring-exclusion mixing bounds for s particles out of K sites.

    lower = (1/8pi^2) K^2 log(s ^ (K-s)) — sharp only as s ^ (K-s) grows, so
    it carries an asymptotic-regime flag when that minimum is small;
    upper_loose = (K^2/2pi^2)(log((s ^ (K-s))/eps) + log(4/pi)), the meeting
    coupling bound with its o(1) term dropped; upper_sharp_leading reports the
    (1/8pi^2) K^2 log(s ^ (K-s)) leading term whose additive constant the
    envelope does not pin down.
    """
    if K < 1:
        raise AnalyticError("K must be >= 1")
    if not 0 <= s <= K:
        raise AnalyticError("s must lie in [0, K]")
    if not 0 < eps < 1:
        raise AnalyticError("epsilon must lie in (0, 1)")
    m = min(s, K - s)
    if m <= 0:
        return SsepMixingBounds(0.0, 0.0, 0.0, True)
    lower = (K * K / (8 * PI**2)) * math.log(m)
    upper_loose = (K * K / (2 * PI**2)) * (math.log(m / eps) + math.log(4.0 / PI))
    sharp = (K * K / (8 * PI**2)) * math.log(m)
    return SsepMixingBounds(max(lower, 0.0), max(upper_loose, 0.0),
                            max(sharp, 0.0), lower_is_asymptotic=m < 16)


@dataclass(frozen=True)
class MixingRegime:
    row: str
    cutoff: str      # "yes" or "?"
    dominant: str    # "transience", "ssep", "balanced", "diffusive"


def classify_mixing_regime(K: int, s: int, macroscopic_fraction: float = 0.2,
                           constant_band: int = 4) -> MixingRegime:
    """Place (K, s) in the regime table for the mixing sandwich.

    The table is asymptotic in kind; at finite K the rows are separated by two
    conventions documented here: counts up to ``constant_band`` play the role
    of O(1), and fractions of at least ``macroscopic_fraction`` the role of a
    macroscopic density delta.
    """
    if s == 0:
        return MixingRegime("s = 0", "yes", "transience")
    if s < K / 2:
        if s <= constant_band:
            return MixingRegime("s = O(1)", "yes", "transience")
        if s >= macroscopic_fraction * K:
            return MixingRegime("s = dK < K/2", "yes", "ssep")
        return MixingRegime("s = K^a < K/2", "?", "balanced")
    if K - s <= constant_band:
        return MixingRegime("s = K - O(1)", "?", "diffusive")
    if K - s >= macroscopic_fraction * K:
        return MixingRegime("s = dK > K/2", "yes", "ssep")
    return MixingRegime("s = K - K^a", "yes", "ssep")


@dataclass(frozen=True)
class MixingSandwich:
    lower: float
    upper: float
    regime: MixingRegime
    transience: BoundEnvelope
    ssep_at_eps: SsepMixingBounds
    ssep_at_half_eps: SsepMixingBounds


def swt_mixing_sandwich(K: int, s: int, eps: float,
                        C: float | None = None) -> MixingSandwich:
    """Assembled mixing sandwich: max of the transience and exclusion lower
    bounds below, transience(eps/2) + exclusion-loose(eps/2) above, plus the
    regime classification of (K, s)."""
    tr_eps = transience_bounds(K, s, eps, C)
    tr_half = transience_bounds(K, s, eps / 2.0, C)
    ssep_eps = ssep_mixing_bounds(K, s, eps)
    ssep_half = ssep_mixing_bounds(K, s, eps / 2.0)
    lower = max(tr_eps.lower, ssep_eps.lower)
    upper = tr_half.upper + ssep_half.upper_loose
    return MixingSandwich(lower, upper, classify_mixing_regime(K, s),
                          tr_eps, ssep_eps, ssep_half)


def rw_exit_bound_discrete(K: int, n: int, lam: float | None = None) -> float:
    """cos(lam)^n / cos(lam K): tail bound for the discrete walk to stay in
    (-K, K) for n steps, valid for 0 < lam < pi/(2K)."""
    if K < 1:
        raise AnalyticError("K must be >= 1")
    if n < 0:
        raise AnalyticError("n must be >= 0")
    if lam is None:
        lam = math.sqrt(24.0 / 11.0) / K
    if not 0 < lam < PI / (2 * K):
        raise AnalyticError(f"lambda must lie in (0, pi/(2K)) = (0, {PI/(2*K):.6g})")
    return math.cos(lam) ** n / math.cos(lam * K)


def rw_exit_bound_continuous(K: int, s: float) -> float:
    """C exp(-s/K^2) with C = 1/cos(sqrt(24/11)): tail bound for the rate-1
    continuous walk to stay in (-K, K) up to time s (needs K >= 2 so that the
    cosine expansion step applies)."""
    if K < 2:
        raise AnalyticError("K must be >= 2")
    if s < 0:
        raise AnalyticError("s must be >= 0")
    return RW_BOUND_C * math.exp(-s / (K * K))
