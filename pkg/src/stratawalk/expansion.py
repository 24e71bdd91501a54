"""Power-series coefficient tables for the quadratic excursion forms.

Write eta'_k = u . eta_k for a fixed direction u and consider the
denominator-minus-numerator polynomial of the directional fraction,

    X_k(y) = (b_k + eta'_k y) X_{k-1}(y) - a_k X_{k-2}(y),
    X_{-1} = X_0 = 1,

so that X_n(-it) is the value produced by the complex recurrence with
d_k = b_k - it eta'_k.  With Delta_r^n the coefficients of X_n, the
squared modulus expands as |X_n(-it)|^2 = sum_r K_r(n) t^{2r},

    K_r(n) = sum_p (-1)^p Delta_{r+p}^n Delta_{r-p}^n.

The same K_r(n) (and two companion families) come out of a combinatorial
recursion over flux windows: with the shifted window variances
T1[b, k] = rho_b rho_{b+k} (P_{b+k} - P_b)^2 and weights

    w[b, l] = (rho_{b+l}/rho_b) (2 sum_{k<l} T1[b, k] + T1[b, l]),

the base-offset coefficients satisfy K_0^(b) = 1 and

    K_r^(b)(m) = sum_{l=1}^{m} w[b, l] K_{r-1}^(b+l)(m - l),

with K_r(n) = K_r^(0)(n), and the summed families

    L_r(n) = sum_{l=0}^{n} rho_l (2 v_+(l-1) + rho_l) K_r^(l)(n - l),
    M_r(n) = sum_{k=0}^{n} rho_k K_r^(k)(n - k),
    N_r(n) = sum_{l=0}^{n} rho_l (2 SR_{l-1} + R_1^l) K_r^(l)(n - l),

where R_1^l = rho_l P_l and SR_j = sum_{i<=j} R_1^i (v_+(-1) = SR_{-1}
= 0).  Sanity anchors: L_0(n) = v_+(n)^2, M_0(n) = v_+(n), and for the
flat unit-drift environment K_1(2) = 7.

Tables are O(n^3 r) to build and are capped at n = 64; the polynomial
route has no such cap and serves as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flux import FluxProfile
from .sequences import SequenceSet

__all__ = [
    "CoefficientTable",
    "flux_tables",
    "delta_poly",
    "kappa_from_delta",
    "direct_quadratic",
    "series_value",
    "verify_against_direct",
    "v1_lower_bound",
]

MAX_TABLE_N = 64


def _base_arrays(seq: SequenceSet, profile: FluxProfile, n: int):
    rho = np.array([seq.rho(i) for i in range(n + 1)])
    pv = np.array([profile.P(i) for i in range(n + 1)])
    return rho, pv


def _window_weights(rho: np.ndarray, pv: np.ndarray, n: int) -> np.ndarray:
    """w[b, l] for 1 <= l <= n - b; zero elsewhere."""
    t1 = np.zeros((n + 1, n + 1))
    for b in range(n + 1):
        k = np.arange(1, n - b + 1)
        if k.size:
            t1[b, k] = rho[b] * rho[b + k] * (pv[b + k] - pv[b]) ** 2
    st = np.cumsum(t1, axis=1)
    w = np.zeros((n + 1, n + 1))
    for b in range(n + 1):
        l = np.arange(1, n - b + 1)
        if l.size:
            w[b, l] = (rho[b + l] / rho[b]) * (2.0 * st[b, l - 1] + t1[b, l])
    return w


@dataclass
class CoefficientTable:
    n: int
    r_max: int
    K: np.ndarray  # (r_max+1, n+1, n+1); K[r, b, m] valid on b + m <= n
    L: np.ndarray  # (r_max+1, n+1)
    M: np.ndarray
    N: np.ndarray

    def K_series(self, r: int, n: int | None = None) -> float:
        """K_r(n) at base 0."""
        return float(self.K[r, 0, self.n if n is None else n])


def flux_tables(
    seq: SequenceSet, profile: FluxProfile, n: int, r_max: int
) -> CoefficientTable:
    if n > MAX_TABLE_N:
        raise ValueError(f"coefficient tables are capped at n = {MAX_TABLE_N}")
    if n < 0 or r_max < 0:
        raise ValueError("n and r_max must be nonnegative")
    rho, pv = _base_arrays(seq, profile, n)
    w = _window_weights(rho, pv, n)

    kk = np.zeros((r_max + 1, n + 1, n + 1))
    b_idx, m_idx = np.indices((n + 1, n + 1))
    mask = b_idx + m_idx <= n
    kk[0][mask] = 1.0
    for r in range(1, r_max + 1):
        cur, prev = kk[r], kk[r - 1]
        for l in range(1, n + 1):
            for b in range(0, n + 1 - l):
                cur[b, l : n - b + 1] += w[b, l] * prev[b + l, 0 : n - b + 1 - l]

    vprev = np.array([0.0] + [seq.vplus.value(i) for i in range(n)])  # v_+(l-1)
    r1 = rho * pv
    sr_prev = np.concatenate([[0.0], np.cumsum(r1)[:-1]])  # SR_{l-1}
    wl_l = rho * (2.0 * vprev + rho)
    wl_n = rho * (2.0 * sr_prev + r1)

    ll = np.zeros((r_max + 1, n + 1))
    mm = np.zeros((r_max + 1, n + 1))
    nn = np.zeros((r_max + 1, n + 1))
    for r in range(r_max + 1):
        for np_ in range(n + 1):
            l = np.arange(np_ + 1)
            diag = kk[r, l, np_ - l]
            ll[r, np_] = float(np.dot(wl_l[: np_ + 1], diag))
            mm[r, np_] = float(np.dot(rho[: np_ + 1], diag))
            nn[r, np_] = float(np.dot(wl_n[: np_ + 1], diag))
    return CoefficientTable(n=n, r_max=r_max, K=kk, L=ll, M=mm, N=nn)


def delta_poly(seq: SequenceSet, profile: FluxProfile, n: int) -> np.ndarray:
    """Coefficients Delta_0..Delta_n of X_n(y), ascending powers."""
    u = profile.direction.u
    x_prev = np.array([1.0])  # X_{-1}
    x_cur = np.array([1.0])  # X_0
    for k in range(1, n + 1):
        etap = float(u @ seq.env.stratum(k).eta)
        new = np.zeros(k + 1)
        new[: x_cur.size] += seq.b(k) * x_cur
        new[1 : x_cur.size + 1] += etap * x_cur
        new[: x_prev.size] -= seq.a(k) * x_prev
        x_prev, x_cur = x_cur, new
    out = np.zeros(n + 1)
    out[: x_cur.size] = x_cur
    return out


def kappa_from_delta(delta: np.ndarray) -> np.ndarray:
    """K_r = sum_p (-1)^p Delta_{r+p} Delta_{r-p}, r = 0..len(delta)-1."""
    delta = np.asarray(delta, dtype=float)
    n = delta.size - 1
    out = np.zeros(n + 1)
    for r in range(n + 1):
        acc = delta[r] * delta[r]
        for p in range(1, min(r, n - r) + 1):
            acc += 2.0 * (-1.0) ** p * delta[r + p] * delta[r - p]
        out[r] = acc
    return out


def direct_quadratic(seq: SequenceSet, profile: FluxProfile, n: int, t: float) -> float:
    """|X_n(-it)|^2 by the complex three-term recurrence (oracle route)."""
    u = profile.direction.u
    x_prev = 1.0 + 0.0j
    x_cur = 1.0 + 0.0j
    for k in range(1, n + 1):
        etap = float(u @ seq.env.stratum(k).eta)
        d = seq.b(k) - 1j * t * etap
        x_cur, x_prev = d * x_cur - seq.a(k) * x_prev, x_cur
    return float(abs(x_cur) ** 2)


def series_value(
    table: CoefficientTable, n: int, t: float, r_terms: int | None = None
) -> float:
    """sum_{r<=r_terms} K_r(n) t^{2r}."""
    rmax = table.r_max if r_terms is None else min(r_terms, table.r_max)
    tt = t * t
    acc = 0.0
    for r in range(rmax, -1, -1):
        acc = acc * tt + table.K_series(r, n)
    return acc


def verify_against_direct(
    seq: SequenceSet,
    profile: FluxProfile,
    n: int,
    ts,
    r_max: int | None = None,
) -> dict[str, float]:
    """Cross-validate the table recursion on one environment.

    Returns the worst relative errors of (a) the full t^2-series against
    the complex-recurrence value |X_n(-it)|^2 and (b) the recursion
    coefficients K_r(n) against the polynomial product route.
    """
    r_max = n if r_max is None else r_max
    table = flux_tables(seq, profile, n, r_max)
    kd = kappa_from_delta(delta_poly(seq, profile, n))
    rec = np.array([table.K_series(r, n) for r in range(min(r_max, n) + 1)])
    ref = kd[: rec.size]
    scale = np.maximum(np.abs(ref), 1e-300)
    coeff_err = float(np.max(np.abs(rec - ref) / scale))
    series_err = 0.0
    for t in ts:
        direct = direct_quadratic(seq, profile, n, float(t))
        ours = series_value(table, n, float(t))
        series_err = max(series_err, abs(ours - direct) / max(abs(direct), 1e-300))
    return {"series_vs_direct": series_err, "recursion_vs_delta": coeff_err}


def v1_lower_bound(seq: SequenceSet, profile: FluxProfile, n: int) -> float:
    """Lower bound for the two-window sum V_1(n).

    V_1(n) counts ordered pairs of disjoint windows
    1 <= k_1 <= l_1 < k_2 <= l_2 <= n with weight
    2^{H} T_{k_1}^{l_1} T_{k_2}^{l_2}, H = 1 when the windows are
    separated by a gap (l_1 + 1 < k_2).  Dropping the doubling factor
    gives the computable bound returned here.
    """
    if n > MAX_TABLE_N:
        raise ValueError(f"coefficient tables are capped at n = {MAX_TABLE_N}")
    rho, pv = _base_arrays(seq, profile, n)
    t_win = np.zeros((n + 1, n + 1))  # T_k^l on 1 <= k <= l
    for k in range(1, n + 1):
        l = np.arange(k, n + 1)
        t_win[k, l] = rho[k - 1] * rho[l] * (pv[l] - pv[k - 1]) ** 2
    u = t_win.sum(axis=0)  # U(l) = sum_k T_k^l
    cu = np.cumsum(u)  # CU(j) = sum_{l<=j} U(l)
    total = 0.0
    for k2 in range(2, n + 1):
        total += cu[k2 - 1] * float(t_win[k2, k2:].sum())
    return float(total)
