"""Aggregate next-event kernels for bulk estimation.

Where the clock-stream engines replay every Poisson ring (including idle
ones), these kernels track the set of enabled moves and sample the next event
directly at the total enabled rate, which is the same jump chain with far less
work per unit of simulated time. The hot loops are numba-compiled; each
trajectory consumes one 32-bit seed so a batch is reproducible regardless of
how it is chunked across workers.

Statistical agreement between the two engines is asserted in the test suite.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..configs import FepConfig, FzrConfig, SegmentSsepConfig, SwtConfig


def _seed_block(master_seed: int, n: int, key=(), start: int = 0) -> np.ndarray:
    """Replica seeds start..start+n-1 under (master_seed, key); the expansion
    is prefix-stable, so chunked workers draw the same seeds as a single one."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return seq.generate_state(start + n, dtype=np.uint32)[start:]


@njit(cache=True)
def _swt_exit_one(sites, horizon):
    K = sites.shape[0]
    particles = 0
    depth = 0
    for k in range(K):
        if sites[k] == 1:
            particles += 1
        elif sites[k] < 0:
            depth -= sites[k]
    if particles == 0 or depth == 0:
        return 0.0
    m = 2 * K
    enabled = np.empty(m, np.int64)
    where = np.full(m, -1, np.int64)
    n_en = 0
    for d in range(m):
        k = d >> 1
        j = (k + 1) % K if (d & 1) == 0 else (k - 1) % K
        if sites[k] == 1 and sites[j] <= 0:
            enabled[n_en] = d
            where[d] = n_en
            n_en += 1
    t = 0.0
    while True:
        if n_en == 0:
            return np.inf
        t += np.random.exponential(1.0 / n_en)
        if t > horizon:
            return np.inf
        idx = int(np.random.random() * n_en)
        if idx == n_en:
            idx -= 1
        d = enabled[idx]
        k = d >> 1
        j = (k + 1) % K if (d & 1) == 0 else (k - 1) % K
        target = sites[j]
        sites[k] = 0
        sites[j] = target + 1
        if target < 0:
            particles -= 1
            depth -= 1
            if particles == 0 or depth == 0:
                return t
        for x in (k - 1, k, k + 1, j - 1, j, j + 1):
            xm = x % K
            for d2 in (2 * xm, 2 * xm + 1):
                kk = d2 >> 1
                jj = (kk + 1) % K if (d2 & 1) == 0 else (kk - 1) % K
                ok = sites[kk] == 1 and sites[jj] <= 0
                w = where[d2]
                if ok and w == -1:
                    enabled[n_en] = d2
                    where[d2] = n_en
                    n_en += 1
                elif not ok and w != -1:
                    last = enabled[n_en - 1]
                    enabled[w] = last
                    where[last] = w
                    where[d2] = -1
                    n_en -= 1


@njit(cache=True)
def _swt_exit_batch(sites0, seeds, horizon):
    out = np.empty(seeds.shape[0])
    scratch = np.empty_like(sites0)
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        scratch[:] = sites0
        out[i] = _swt_exit_one(scratch, horizon)
    return out


@njit(cache=True)
def _fep_pairs(sites):
    n = sites.shape[0]
    pp = 0
    ee = 0
    for x in range(n):
        a = sites[x]
        b = sites[(x + 1) % n]
        if a == 1 and b == 1:
            pp += 1
        elif a == 0 and b == 0:
            ee += 1
    return pp, ee


@njit(cache=True)
def _fep_exit_one(sites, horizon):
    n = sites.shape[0]
    pp, ee = _fep_pairs(sites)
    if pp == 0 or ee == 0:
        return 0.0
    m = 2 * n
    enabled = np.empty(m, np.int64)
    where = np.full(m, -1, np.int64)
    n_en = 0
    for d in range(m):
        x = d >> 1
        if (d & 1) == 0:
            ok = (sites[(x - 1) % n] == 1 and sites[x] == 1
                  and sites[(x + 1) % n] == 0)
        else:
            ok = (sites[(x + 1) % n] == 1 and sites[x] == 1
                  and sites[(x - 1) % n] == 0)
        if ok:
            enabled[n_en] = d
            where[d] = n_en
            n_en += 1
    t = 0.0
    edges = np.empty(4, np.int64)
    while True:
        if n_en == 0:
            return np.inf
        t += np.random.exponential(1.0 / n_en)
        if t > horizon:
            return np.inf
        idx = int(np.random.random() * n_en)
        if idx == n_en:
            idx -= 1
        d = enabled[idx]
        src = d >> 1
        dst = (src + 1) % n if (d & 1) == 0 else (src - 1) % n
        # pair counts on the distinct edges touching src or dst, before/after
        edges[0] = (src - 1) % n
        edges[1] = src
        edges[2] = (dst - 1) % n
        edges[3] = dst
        for i in range(4):
            dup = False
            for q in range(i):
                if edges[q] == edges[i]:
                    dup = True
            if dup:
                continue
            e = edges[i]
            a = sites[e]
            b = sites[(e + 1) % n]
            if a == 1 and b == 1:
                pp -= 1
            elif a == 0 and b == 0:
                ee -= 1
        sites[src] = 0
        sites[dst] = 1
        for i in range(4):
            dup = False
            for q in range(i):
                if edges[q] == edges[i]:
                    dup = True
            if dup:
                continue
            e = edges[i]
            a = sites[e]
            b = sites[(e + 1) % n]
            if a == 1 and b == 1:
                pp += 1
            elif a == 0 and b == 0:
                ee += 1
        if pp == 0 or ee == 0:
            return t
        for x0 in (src - 2, src - 1, src, src + 1, dst - 1, dst, dst + 1, dst + 2):
            xm = x0 % n
            for d2 in (2 * xm, 2 * xm + 1):
                x = d2 >> 1
                if (d2 & 1) == 0:
                    ok = (sites[(x - 1) % n] == 1 and sites[x] == 1
                          and sites[(x + 1) % n] == 0)
                else:
                    ok = (sites[(x + 1) % n] == 1 and sites[x] == 1
                          and sites[(x - 1) % n] == 0)
                w = where[d2]
                if ok and w == -1:
                    enabled[n_en] = d2
                    where[d2] = n_en
                    n_en += 1
                elif not ok and w != -1:
                    last = enabled[n_en - 1]
                    enabled[w] = last
                    where[last] = w
                    where[d2] = -1
                    n_en -= 1


@njit(cache=True)
def _fep_exit_batch(sites0, seeds, horizon):
    out = np.empty(seeds.shape[0])
    scratch = np.empty_like(sites0)
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        scratch[:] = sites0
        out[i] = _fep_exit_one(scratch, horizon)
    return out


@njit(cache=True)
def _fzr_exit_one(sites, horizon):
    p = sites.shape[0]
    active = 0
    zeros = 0
    for y in range(p):
        if sites[y] >= 2:
            active += 1
        elif sites[y] == 0:
            zeros += 1
    if active == 0 or zeros == 0:
        return 0.0
    t = 0.0
    while True:
        n_en = 2 * active
        t += np.random.exponential(1.0 / n_en)
        if t > horizon:
            return np.inf
        # pick the r-th active site and a direction
        u = np.random.random() * n_en
        r = int(u / 2.0)
        if r >= active:
            r = active - 1
        direction = 1 if (u - 2.0 * r) >= 1.0 else -1
        y = -1
        seen = -1
        for q in range(p):
            if sites[q] >= 2:
                seen += 1
                if seen == r:
                    y = q
                    break
        dst = (y + direction) % p
        sites[y] -= 1
        sites[dst] += 1
        if sites[y] == 1:
            active -= 1
        if sites[dst] == 2:
            active += 1
        if sites[dst] == 1:
            zeros -= 1
        if active == 0 or zeros == 0:
            return t


@njit(cache=True)
def _fzr_exit_batch(sites0, seeds, horizon):
    out = np.empty(seeds.shape[0])
    scratch = np.empty_like(sites0)
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        scratch[:] = sites0
        out[i] = _fzr_exit_one(scratch, horizon)
    return out


@njit(cache=True)
def _segment_enabled(sites, e):
    n = sites.shape[0]
    if e == 0:
        return sites[0] == 1
    if e == n:
        return sites[n - 1] == 1
    return sites[e - 1] != sites[e]


@njit(cache=True)
def _segment_run(sites, checkpoints, counts_out, horizon):
    """Evolve the reservoir segment, recording the particle count at each
    checkpoint; returns the absorption time (inf if not absorbed)."""
    n = sites.shape[0]
    m = n + 1
    enabled = np.empty(m, np.int64)
    where = np.full(m, -1, np.int64)
    n_en = 0
    count = 0
    for k in range(n):
        count += sites[k]
    for e in range(m):
        if _segment_enabled(sites, e):
            enabled[n_en] = e
            where[e] = n_en
            n_en += 1
    t = 0.0
    ci = 0
    n_cp = checkpoints.shape[0]
    absorbed_at = np.inf
    while True:
        if n_en == 0:
            break
        dt = np.random.exponential(1.0 / n_en)
        if t + dt > horizon:
            break
        t += dt
        while ci < n_cp and checkpoints[ci] < t:
            counts_out[ci] = count
            ci += 1
        idx = int(np.random.random() * n_en)
        if idx == n_en:
            idx -= 1
        e = enabled[idx]
        if e == 0:
            sites[0] = 0
            count -= 1
            lo, hi = 0, 0
        elif e == n:
            sites[n - 1] = 0
            count -= 1
            lo, hi = n - 1, n - 1
        else:
            tmp = sites[e - 1]
            sites[e - 1] = sites[e]
            sites[e] = tmp
            lo, hi = e - 1, e
        if count == 0:
            absorbed_at = t
            break
        # edge e covers sites (e-1, e), so sites lo..hi touch edges lo..hi+1
        for e2 in range(lo, hi + 2):
            if e2 < 0 or e2 >= m:
                continue
            ok = _segment_enabled(sites, e2)
            w = where[e2]
            if ok and w == -1:
                enabled[n_en] = e2
                where[e2] = n_en
                n_en += 1
            elif not ok and w != -1:
                last = enabled[n_en - 1]
                enabled[w] = last
                where[last] = w
                where[e2] = -1
                n_en -= 1
    while ci < n_cp:
        counts_out[ci] = count
        ci += 1
    return absorbed_at


@njit(cache=True)
def _segment_batch(sites0, seeds, checkpoints, counts_out, horizon):
    out = np.empty(seeds.shape[0])
    scratch = np.empty_like(sites0)
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        scratch[:] = sites0
        out[i] = _segment_run(scratch, checkpoints, counts_out[i], horizon)
    return out


@njit(cache=True)
def _walk_exit_batch(K, seeds, horizon):
    """Rate-1 symmetric walk from 0 on the integers; time of first |Y| >= K."""
    out = np.empty(seeds.shape[0])
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        t = 0.0
        y = 0
        while True:
            t += np.random.exponential(1.0)
            if t > horizon:
                out[i] = np.inf
                break
            y += 1 if np.random.random() < 0.5 else -1
            if y >= K or y <= -K:
                out[i] = t
                break
    return out


@njit(cache=True)
def _walk_hit_zero_batch(K, seeds, deadline):
    """Walk on {0..K} with per-edge rate 1 (reflecting at K), started at K:
    indicator that hitting 0 takes at least the deadline."""
    out = np.empty(seeds.shape[0], np.uint8)
    for i in range(seeds.shape[0]):
        np.random.seed(seeds[i])
        t = 0.0
        y = K
        late = np.uint8(1)
        while True:
            rate = 1.0 if y == K else 2.0
            t += np.random.exponential(1.0 / rate)
            if t >= deadline:
                break
            if y == K:
                y -= 1
            else:
                y += 1 if np.random.random() < 0.5 else -1
            if y == 0:
                late = np.uint8(0)
                break
        out[i] = late
    return out


def sample_swt_exit_times(xi: SwtConfig, n: int, master_seed: int,
                          horizon: float, key=(), start: int = 0) -> np.ndarray:
    """Exit times of n independent trap-process replicas (inf = censored)."""
    seeds = _seed_block(master_seed, n, key, start)
    sites = np.array(xi.sites, dtype=np.int64)
    return _swt_exit_batch(sites, seeds, float(horizon))


def sample_fep_exit_times(eta, n, master_seed, horizon, key=(),
                          start: int = 0) -> np.ndarray:
    seeds = _seed_block(master_seed, n, key, start)
    sites = np.array(eta.sites, dtype=np.int64)
    return _fep_exit_batch(sites, seeds, float(horizon))


def sample_fzr_exit_times(omega, n, master_seed, horizon, key=(),
                          start: int = 0) -> np.ndarray:
    seeds = _seed_block(master_seed, n, key, start)
    sites = np.array(omega.sites, dtype=np.int64)
    return _fzr_exit_batch(sites, seeds, float(horizon))


def sample_exit_times(cfg, n, master_seed, horizon, key=(),
                      start: int = 0) -> np.ndarray:
    if isinstance(cfg, SwtConfig):
        return sample_swt_exit_times(cfg, n, master_seed, horizon, key, start)
    if isinstance(cfg, FepConfig):
        return sample_fep_exit_times(cfg, n, master_seed, horizon, key, start)
    if isinstance(cfg, FzrConfig):
        return sample_fzr_exit_times(cfg, n, master_seed, horizon, key, start)
    if isinstance(cfg, SegmentSsepConfig):
        return sample_segment_absorption_times(cfg, n, master_seed, horizon,
                                               key, start)
    raise TypeError(f"no fast sampler for {type(cfg).__name__}")


def sample_segment_counts(sigma: SegmentSsepConfig, times, n: int,
                          master_seed: int, key=()) -> np.ndarray:
    """|sigma(t)| for each requested time, one row per replica."""
    times = np.asarray(sorted(times), dtype=np.float64)
    seeds = _seed_block(master_seed, n, key)
    sites = np.array(sigma.sites, dtype=np.int64)
    counts = np.zeros((n, len(times)), dtype=np.int64)
    _segment_batch(sites, seeds, times, counts, float(times[-1]))
    return counts


def sample_segment_absorption_times(sigma: SegmentSsepConfig, n, master_seed,
                                    horizon, key=(), start: int = 0) -> np.ndarray:
    seeds = _seed_block(master_seed, n, key, start)
    sites = np.array(sigma.sites, dtype=np.int64)
    counts = np.zeros((n, 1), dtype=np.int64)
    cps = np.array([horizon], dtype=np.float64)
    return _segment_batch(sites, seeds, cps, counts, float(horizon))


def sample_walk_exit_times(K: int, n: int, master_seed: int, horizon: float,
                           key=()) -> np.ndarray:
    seeds = _seed_block(master_seed, n, key)
    return _walk_exit_batch(int(K), seeds, float(horizon))


def walk_zero_hit_late_fraction(K: int, deadline: float, n: int,
                                master_seed: int, key=()) -> float:
    """MC estimate of P_K(T_0 >= deadline) for the reflecting segment walk."""
    seeds = _seed_block(master_seed, n, key)
    flags = _walk_hit_zero_batch(int(K), seeds, float(deadline))
    return float(flags.sum()) / n
