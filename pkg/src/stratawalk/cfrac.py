"""Sleszynski-Pringsheim continued fractions for stratified walks.

A continued fraction [(c_1, d_1); (c_2, d_2); ...] denotes
c_1/(d_1 + c_2/(d_2 + ...)), with convergents A_n/B_n following

    A_n = d_n A_{n-1} + c_n A_{n-2},   A_{-1} = 1, A_0 = 0,
    B_n = d_n B_{n-1} + c_n B_{n-2},   B_{-1} = 0, B_0 = 1.

The Sleszynski-Pringsheim condition |c_k| + 1 <= |d_k| (and c_k != 0)
guarantees |B_n| >= |B_{n-1}| + |c_1 ... c_n| and convergence of the
alternating series A_n/B_n = sum_k (-1)^{k+1} c_1...c_k / (B_k B_{k-1}).

Walk-type coefficients attach to a sequence set: c_1 = a_1, c_k = -a_k
for k >= 2, d_k = b_k/gamma_k with weights 0 < |gamma_k| <= 1.  Then
|c_1 ... c_k| = rho_k, |B_n| >= v_+(n), and the truncation error obeys

    |value - A_n/B_n| <= sum_{k>n} rho_k/|B_k B_{k-1}| <= v_+(n)/|B_n|^2,

which is the stopping rule used by :func:`evaluate`.  Evaluation runs in
chunks of transfer matrices M_k = [[d_k, c_k], [1, 0]] combined by
pairwise products with per-level rescaling, so deep fractions (small
frequency t means depth growing like 1/t) cost O(depth) numpy work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import count

import numpy as np

from .sequences import SequenceSet

__all__ = [
    "SPViolation",
    "SPCoefficients",
    "WalkCoefficients",
    "ConvergentPair",
    "convergents",
    "EvalResult",
    "evaluate",
    "weighted_excursion_gf",
    "reverse_check",
    "gw_gf",
    "gw_extinction",
    "ExtinctionEstimate",
]

SP_SLACK = 1e-12


class SPViolation(ValueError):
    """A partial quotient fails |c_k| + 1 <= |d_k| or has c_k = 0."""

    def __init__(self, index: int, c: complex, d: complex, reason: str):
        self.index = index
        self.c = c
        self.d = d
        self.reason = reason
        super().__init__(
            f"Sleszynski-Pringsheim violation at k={index}: {reason} "
            f"(c={c!r}, d={d!r})"
        )


class SPCoefficients:
    """Lazily checked partial quotients (c_k, d_k), k >= 1.

    `pairs` is an iterable of (c, d).  Every coefficient drawn from it is
    validated against the Sleszynski-Pringsheim condition (with additive
    slack 1e-12 for boundary families) before being stored.
    """

    def __init__(self, pairs, check: bool = True):
        self._it = iter(pairs)
        self._c: list[complex] = []
        self._d: list[complex] = []
        self.check = check

    def _validate(self, k: int, c: complex, d: complex):
        if c == 0:
            raise SPViolation(k, c, d, "zero partial numerator")
        if abs(c) + 1.0 > abs(d) + SP_SLACK:
            raise SPViolation(k, c, d, "|c| + 1 > |d|")

    def extend_to(self, k: int):
        while len(self._c) < k:
            c, d = next(self._it)
            c, d = complex(c), complex(d)
            if self.check:
                self._validate(len(self._c) + 1, c, d)
            self._c.append(c)
            self._d.append(d)

    def c(self, k: int) -> complex:
        if k < 1:
            raise IndexError("partial quotients are indexed from 1")
        self.extend_to(k)
        return self._c[k - 1]

    def d(self, k: int) -> complex:
        if k < 1:
            raise IndexError("partial quotients are indexed from 1")
        self.extend_to(k)
        return self._d[k - 1]

    def block(self, k1: int, k2: int) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (c_{k1..k2}, d_{k1..k2}), inclusive."""
        self.extend_to(k2)
        return (
            np.array(self._c[k1 - 1 : k2], dtype=complex),
            np.array(self._d[k1 - 1 : k2], dtype=complex),
        )


class WalkCoefficients(SPCoefficients):
    """Walk-type partial quotients c_1 = a_1, c_k = -a_k, d_k = b_k/gamma_k.

    `gamma` maps a stratum index k >= 1 to a weight with 0 < |gamma| <= 1.
    An optional vectorized provider `gamma_block(ks)` (or a `block`
    attribute on `gamma`) accelerates chunked evaluation; it must agree
    with the scalar callable.
    """

    def __init__(self, seq: SequenceSet, gamma, gamma_block=None):
        self.seq = seq
        self.gamma = gamma
        self._gamma_block = gamma_block or getattr(gamma, "block", None)
        super().__init__(self._pairs())

    def _gammas(self, k1: int, k2: int) -> np.ndarray:
        ks = np.arange(k1, k2 + 1)
        if self._gamma_block is not None:
            g = np.asarray(self._gamma_block(ks), dtype=complex)
        else:
            g = np.array([complex(self.gamma(int(k))) for k in ks], dtype=complex)
        mag = np.abs(g)
        bad = (mag == 0.0) | (mag > 1.0 + 1e-12)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                f"excursion weight gamma({k1 + i}) = {g[i]!r} is outside 0 < |gamma| <= 1"
            )
        return g

    def _pairs(self):
        for k in count(1):
            a = self.seq.a(k)
            g = self._gammas(k, k)[0]
            yield (a if k == 1 else -a, (1.0 + a) / g)

    def block(self, k1: int, k2: int) -> tuple[np.ndarray, np.ndarray]:
        a = self.seq.a_plus_array(k2)[k1 - 1 : k2].astype(complex)
        g = self._gammas(k1, k2)
        c = -a
        if k1 == 1:
            c[0] = a[0]
        d = (1.0 + a) / g
        bad = (c == 0) | (np.abs(c) + 1.0 > np.abs(d) + SP_SLACK)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SPViolation(k1 + i, complex(c[i]), complex(d[i]), "walk-type check")
        return c, d


@dataclass
class ConvergentPair:
    k: int
    A: complex
    B: complex

    @property
    def value(self) -> complex:
        return self.A / self.B


def convergents(coeffs: SPCoefficients, n: int):
    """Yield ConvergentPair(k, A_k, B_k) for k = 1..n, without rescaling.

    Intended for identity checks at moderate depth; A and B overflow for
    deep rapidly growing fractions, where :func:`evaluate` applies.
    """
    a_prev, a_cur = 1.0 + 0.0j, 0.0 + 0.0j
    b_prev, b_cur = 0.0 + 0.0j, 1.0 + 0.0j
    for k in range(1, n + 1):
        c, d = coeffs.c(k), coeffs.d(k)
        a_cur, a_prev = d * a_cur + c * a_prev, a_cur
        b_cur, b_prev = d * b_cur + c * b_prev, b_cur
        yield ConvergentPair(k, a_cur, b_cur)


def _chain_product(c: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, float]:
    """Product M_{k2} ... M_{k1} of transfer matrices [[d, c], [1, 0]].

    Pairwise reduction with per-matrix sup-norm rescaling; returns the
    rescaled product and the total extracted log scale.  Every extracted
    scalar divides the final product exactly once, so the accumulated
    log is exact bookkeeping.
    """
    n = len(c)
    mats = np.zeros((n, 2, 2), dtype=complex)
    mats[:, 0, 0] = d
    mats[:, 0, 1] = c
    mats[:, 1, 0] = 1.0
    log_scale = 0.0
    eye = np.eye(2, dtype=complex)
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, eye[None]])
        prod = np.matmul(mats[1::2], mats[0::2])
        norms = np.max(np.abs(prod), axis=(1, 2))
        norms = np.maximum(norms, 1e-300)
        prod /= norms[:, None, None]
        log_scale += float(np.sum(np.log(norms)))
        mats = prod
    return mats[0], log_scale


@dataclass
class EvalResult:
    value: complex
    n_used: int
    tail_bound: float
    converged: bool
    probes: dict[int, tuple[complex, float]] = field(default_factory=dict)


def evaluate(
    coeffs: WalkCoefficients,
    tol: float = 1e-10,
    max_depth: int = 1_000_000,
    probe_depths=None,
) -> EvalResult:
    """Evaluate a walk-type fraction to truncation error <= tol.

    Stops at the first chunk boundary n with v_+(n)/|B_n|^2 <= tol (the
    alternating-series tail bound), or at max_depth with converged set
    to False.  `probe_depths` forces chunk boundaries at the given
    depths and records (value, tail bound) there.
    """
    seq = getattr(coeffs, "seq", None)
    if seq is None:
        raise TypeError("evaluate needs walk-type coefficients carrying a sequence set")
    probe_set = sorted(set(int(p) for p in probe_depths)) if probe_depths else []
    probes: dict[int, tuple[complex, float]] = {}

    # columns: [[A_k, B_k], [A_{k-1}, B_{k-1}]]
    state = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    log_scale = 0.0
    log_v = 0.0  # log v_+(k)
    k = 0
    chunk = 256
    tail = math.inf
    while k < max_depth:
        k2 = min(k + chunk, max_depth)
        for p in probe_set:
            if k < p < k2:
                k2 = p
                break
        c, d = coeffs.block(k + 1, k2)
        prod, lsc = _chain_product(c, d)
        state = prod @ state
        log_scale += lsc
        nb = float(np.max(np.abs(state)))
        if nb > 1e100 or (0.0 < nb < 1e-100):
            state /= nb
            log_scale += math.log(nb)
        lr = seq.logrho_plus_array(k2)[k:k2]
        log_v = float(np.logaddexp(log_v, np.logaddexp.reduce(lr)))
        k = k2
        babs = abs(state[0, 1])
        if babs == 0.0:
            tail = math.inf
        else:
            tail = math.exp(min(log_v - 2.0 * (math.log(babs) + log_scale), 700.0))
        if k in probe_set:
            probes[k] = (complex(state[0, 0] / state[0, 1]), tail)
        if tail <= tol:
            return EvalResult(complex(state[0, 0] / state[0, 1]), k, tail, True, probes)
        chunk = min(chunk * 2, 65536)
    return EvalResult(complex(state[0, 0] / state[0, 1]), k, tail, False, probes)


def weighted_excursion_gf(
    seq: SequenceSet,
    gamma,
    tol: float = 1e-10,
    max_depth: int = 1_000_000,
    gamma_block=None,
    probe_depths=None,
) -> EvalResult:
    """Evaluate [(a_1, b_1/gamma_1); (-a_2, b_2/gamma_2); ...]."""
    return evaluate(
        WalkCoefficients(seq, gamma, gamma_block=gamma_block),
        tol=tol,
        max_depth=max_depth,
        probe_depths=probe_depths,
    )


def reverse_check(cs, ds) -> tuple[complex, complex]:
    """Denominator reversal identity V_n = c_1...c_n * Vtilde_n.

    V follows V_k = d_k V_{k-1} - c_k V_{k-2} (V_0 = 1, V_{-1} = 0) for
    the sign-flipped fraction [(-c_1, d_1); ...]; Vtilde runs the same
    recurrence on the reversed, c-scaled coefficients
    (1/c_{n-k+1}, d_{n-k+1}/c_{n-k+1}).  Returns (V_n, prod * Vtilde_n);
    agreement of the two is the checkable identity.
    """
    cs = [complex(c) for c in cs]
    ds = [complex(d) for d in ds]
    if len(cs) != len(ds) or not cs:
        raise ValueError("need equal-length nonempty coefficient lists")

    def _run(cseq, dseq):
        v_prev, v_cur = 0.0 + 0.0j, 1.0 + 0.0j
        for c, d in zip(cseq, dseq):
            v_cur, v_prev = d * v_cur - c * v_prev, v_cur
        return v_cur

    direct = _run(cs, ds)
    rev_c = [1.0 / c for c in reversed(cs)]
    rev_d = [d / c for c, d in zip(reversed(cs), reversed(ds))]
    prod = 1.0 + 0.0j
    for c in cs:
        prod *= c
    return direct, prod * _run(rev_c, rev_d)


def gw_gf(seq: SequenceSet, s: float, n: int) -> float:
    """Generating function E(s^{Z_n}) of the embedded branching count.

    Finite continued fraction [(a_1, b_1); (-a_2, b_2); ...;
    (-a_{n-1}, b_{n-1} - s)], evaluated backwards; n >= 2.
    """
    if n < 2:
        raise ValueError("the branching generating function needs depth n >= 2")
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    t = 0.0
    for k in range(n - 1, 1, -1):
        dk = seq.b(k) - (s if k == n - 1 else 0.0)
        t = -seq.a(k) / (dk + t)
    d1 = seq.b(1) - (s if n == 2 else 0.0)
    return seq.a(1) / (d1 + t)


@dataclass
class ExtinctionEstimate:
    value: float
    error_bound: float
    window: int


def gw_extinction(
    seq: SequenceSet,
    tol: float = 1e-8,
    margin: float = 0.01,
    max_window: int = 1 << 22,
) -> ExtinctionEstimate:
    """Extinction limit lim_n P(Z_n = 0) = (v - 1)/v with v = v_+(infinity).

    Brackets v by v_+(K) <= v <= v_+(K) + rho_K abar/(1 - abar), where
    abar bounds a_j for j > K: exact when family metadata pins the
    vertical tail ratio, otherwise the max over the sampled window
    (K/2, K] provided it stays below 1 - margin.  K doubles until the
    induced bracket on (v-1)/v is narrower than 2 tol.
    """
    info = seq.env.family_info or {}
    tail_meta = info.get("vertical_tail")
    K = 16
    if tail_meta is not None:
        if not tail_meta["a_plus"] < 1.0:
            raise ValueError("v_+ does not converge: tail ratio a_plus >= 1")
        K = max(K, int(tail_meta["n0"]) + 1)
    while True:
        if tail_meta is not None and K >= tail_meta["n0"]:
            abar = float(tail_meta["a_plus"])
        else:
            abar = max(seq.a(j) for j in range(K // 2 + 1, K + 1))
            if abar > 1.0 - margin:
                raise ValueError(
                    "no geometric tail certificate: sampled ratios reach "
                    f"{abar:.6g} > 1 - margin"
                )
        v_lo = seq.vplus.value(K)
        v_hi = v_lo + seq.rho(K) * abar / (1.0 - abar)
        lo = (v_lo - 1.0) / v_lo
        hi = (v_hi - 1.0) / v_hi
        if hi - lo <= 2.0 * tol or K >= max_window:
            return ExtinctionEstimate(0.5 * (lo + hi), 0.5 * (hi - lo), K)
        K *= 2
