"""Directional flux variances and the dispersion family phi.

For a unit direction u (first coordinate nonnegative) and the stratum
drifts eta_s = r_s m_s / p_s, the weighted flux across strata k..l is

    R_k^l(u) = sum_{s=k}^{l} (r_s / p_s) (rho_l / rho_s) m_s . u,
    T_k^l(u) = (rho_{k-1} / rho_l) * (R_k^l(u))^2
             = rho_{k-1} rho_l (P_l - P_{k-1})^2,

where P is the flux prefix P_j = sum_{s<=j} (u . eta_s) / rho_s anchored
at P_0 = 0 (so that P_l - P_{k-1} telescopes across zero).  The variance
aggregates

    kappa_{u,+}(n) = sum_{1 <= k <= l <= n} T_k^l,
    kappa_{u,-}(m) = sum_{-m <= k <= l <= -1} T_k^l,
    kappa_u(-m, n) = sum_{-m <= k <= l <= n} T_k^l,

are maintained by running prefix sums (O(1) amortized per extension),
and combine with the vertical dispersion psi into

    phi_u^2(n)     = psi^2(-n, n) + kappa_u(v_-^{-1}(n), v_+^{-1}(n)),
    phi_{u,+}^2(n) = psi^2(-n, n) + kappa_+(v_+^{-1}(n)) + kappa_-(v_-^{-1}(n)),
    phi_{u,++}^2(n) = n w_+(v_+^{-1}(n)) + kappa_+(v_+^{-1}(n)),
    phi_{u,+-}^2(n) = n w_-(v_-^{-1}(n)) + kappa_-(v_-^{-1}(n)),

exposed as the four monotone variants "full", "plus", "pp", "pm" of
:class:`PhiFamily`, each cached with generalized inverses.
"""

from __future__ import annotations

import math
from itertools import count

import numpy as np

from .environment import StratifiedEnvironment
from .sequences import LOG_SAT, MonotoneCache, SequenceSet

__all__ = [
    "Direction",
    "u_grid",
    "eta",
    "R",
    "T",
    "FluxProfile",
    "PhiFamily",
    "phi_family",
]


def _exp(x: float) -> float:
    return math.exp(x) if x <= LOG_SAT else math.inf


class Direction:
    """Unit vector in R^d with u_1 >= 0 (half sphere of directions)."""

    def __init__(self, u):
        arr = np.asarray(u, dtype=float).reshape(-1)
        nrm = float(np.linalg.norm(arr))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"direction norm {nrm!r} is not 1 within 1e-12")
        arr = arr / nrm
        if arr[0] < -1e-12:
            raise ValueError("directions are restricted to the half sphere u_1 >= 0")
        arr[0] = max(arr[0], 0.0)
        self.u = arr
        self.d = int(arr.size)

    @classmethod
    def axis(cls, d: int = 1) -> "Direction":
        e = np.zeros(d)
        e[0] = 1.0
        return cls(e)

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        return cls([math.cos(theta), math.sin(theta)])

    @property
    def angle(self) -> float:
        if self.d != 2:
            raise ValueError("angle is defined for d = 2 only")
        return math.atan2(self.u[1], self.u[0])

    def __repr__(self):
        return f"Direction({np.array2string(self.u, precision=6)})"


def u_grid(d: int, nodes: int = 64) -> list[tuple[Direction, float]]:
    """Quadrature grid on the half sphere S_+^{d-1}.

    d = 1: the single point u = +1 with weight 1.  d = 2: composite
    midpoint rule in the angle theta over (-pi/2, pi/2), weights pi/nodes.
    """
    if d == 1:
        return [(Direction([1.0]), 1.0)]
    if d == 2:
        h = math.pi / nodes
        return [
            (Direction.from_angle(-math.pi / 2.0 + (j + 0.5) * h), h)
            for j in range(nodes)
        ]
    raise ValueError("direction grids are defined for d in {1, 2}")


def eta(env: StratifiedEnvironment, s: int) -> np.ndarray:
    """Stratum drift r_s m_s / p_s."""
    return env.stratum(s).eta


def R(seq: SequenceSet, u: Direction, k: int, l: int) -> float:
    """Directional flux R_k^l(u), by direct summation."""
    if k > l:
        raise ValueError(f"flux window [{k}, {l}] is empty")
    lr_l = seq.logrho(l)
    tot = 0.0
    for s in range(k, l + 1):
        law = seq.env.stratum(s)
        tot += (law.r / law.p) * _exp(lr_l - seq.logrho(s)) * float(u.u @ law.mu.mean)
    return tot


def T(seq: SequenceSet, u: Direction, k: int, l: int) -> float:
    """Flux variance contribution T_k^l(u) = rho_{k-1} rho_l (zeta_k^l)^2."""
    if k > l:
        raise ValueError(f"flux window [{k}, {l}] is empty")
    z = 0.0
    for s in range(k, l + 1):
        law = seq.env.stratum(s)
        z += float(u.u @ law.eta) * _exp(-seq.logrho(s))
    return _exp(seq.logrho(k - 1) + seq.logrho(l)) * z * z


class FluxProfile:
    """Flux prefix P and the kappa aggregates for one direction.

    One-sided kappas are monotone caches; the two-sided kappa keeps a
    forward-moving frontier with running sums A = sum rho_i,
    B = sum rho_i P_i, C = sum rho_i P_i^2 over the active index range,
    so monotone query streams cost O(1) amortized per step.  Queries
    behind the frontier are recomputed fresh (vectorized) to keep the
    frontier state untouched.
    """

    def __init__(self, seq: SequenceSet, direction: Direction):
        if direction.d != seq.env.d:
            raise ValueError("direction dimension does not match the environment")
        self.seq = seq
        self.direction = direction
        self._Pp = [0.0]  # P_j, j >= 0
        self._Pm = [0.0]  # P_{-k}, k >= 0
        self.kappa_plus_cache = MonotoneCache(self._gen_kappa_plus(), name="kappa_plus")
        self.kappa_minus_cache = MonotoneCache(self._gen_kappa_minus(), name="kappa_minus")
        self._frontier = None  # (m, n, A, B, C, kappa)
        self._phi: "PhiFamily | None" = None

    def _etadot(self, s: int) -> float:
        return float(self.direction.u @ self.seq.env.stratum(s).eta)

    def P(self, j: int) -> float:
        j = int(j)
        if j >= 0:
            while len(self._Pp) <= j:
                i = len(self._Pp)
                self._Pp.append(self._Pp[-1] + self._etadot(i) * self.seq.rho_inv(i))
            return self._Pp[j]
        k = -j
        while len(self._Pm) <= k:
            i = len(self._Pm)  # P_{-i} = P_{-(i-1)} - dP_{-(i-1)}
            s = -(i - 1)
            self._Pm.append(self._Pm[-1] - self._etadot(s) * self.seq.rho_inv(s))
        return self._Pm[k]

    # -- one-sided aggregates -------------------------------------------------

    def _gen_kappa_plus(self):
        seq = self.seq
        A, B, C = seq.rho(0), 0.0, 0.0  # j = 0 term; P_0 = 0
        kap = 0.0
        yield kap  # n = 0: empty sum
        for l in count(1):
            rl, pl = seq.rho(l), self.P(l)
            kap += rl * (pl * pl * A - 2.0 * pl * B + C)
            yield kap
            A += rl
            B += rl * pl
            C += rl * pl * pl

    def _gen_kappa_minus(self):
        seq = self.seq
        A = B = C = 0.0  # sums over l in [-m, -1]
        kap = 0.0
        yield kap  # m = 0: empty sum
        for m in count(1):
            rl, pl = seq.rho(-m), self.P(-m)
            A += rl
            B += rl * pl
            C += rl * pl * pl
            r0, p0 = seq.rho(-m - 1), self.P(-m - 1)
            kap += r0 * (C - 2.0 * p0 * B + p0 * p0 * A)
            yield kap

    def kappa_plus(self, n: int) -> float:
        return self.kappa_plus_cache.value(n)

    def kappa_minus(self, m: int) -> float:
        return self.kappa_minus_cache.value(m)

    # -- two-sided aggregate ----------------------------------------------------

    def kappa(self, m: int, n: int) -> float:
        """kappa_u(-m, n) = sum over -m <= k <= l <= n of T_k^l."""
        m, n = int(m), int(n)
        if m < 0 or n < 0:
            raise ValueError("kappa window half-widths must be >= 0")
        if self._frontier is None:
            seq = self.seq
            r1, p1 = seq.rho(-1), self.P(-1)
            r0 = seq.rho(0)
            kap = r0 * r1 * p1 * p1  # the single pair (j, l) = (-1, 0)
            self._frontier = [0, 0, r1 + r0, r1 * p1, r1 * p1 * p1, kap]
        fm, fn = self._frontier[0], self._frontier[1]
        if m >= fm and n >= fn:
            while self._frontier[1] < n:
                self._extend_right()
            while self._frontier[0] < m:
                self._extend_left()
            return self._frontier[5]
        return self._kappa_fresh(m, n)

    def _extend_right(self):
        f = self._frontier
        l = f[1] + 1
        rl, pl = self.seq.rho(l), self.P(l)
        f[5] += rl * (pl * pl * f[2] - 2.0 * pl * f[3] + f[4])
        f[2] += rl
        f[3] += rl * pl
        f[4] += rl * pl * pl
        f[1] = l

    def _extend_left(self):
        f = self._frontier
        j0 = -f[0] - 2
        r0, p0 = self.seq.rho(j0), self.P(j0)
        f[5] += r0 * (f[4] - 2.0 * p0 * f[3] + p0 * p0 * f[2])
        f[2] += r0
        f[3] += r0 * p0
        f[4] += r0 * p0 * p0
        f[0] += 1

    def _kappa_fresh(self, m: int, n: int) -> float:
        idx = range(-m - 1, n + 1)
        lr = np.array([self.seq.logrho(i) for i in idx])
        pv = np.array([self.P(i) for i in idx])
        r = np.where(lr <= LOG_SAT, np.exp(np.minimum(lr, LOG_SAT)), np.inf)
        pref_a = np.cumsum(r)
        pref_b = np.cumsum(r * pv)
        pref_c = np.cumsum(r * pv * pv)
        incr = r[1:] * (pv[1:] ** 2 * pref_a[:-1] - 2.0 * pv[1:] * pref_b[:-1] + pref_c[:-1])
        return float(np.sum(incr))

    def phi(self) -> "PhiFamily":
        if self._phi is None:
            self._phi = PhiFamily(self)
        return self._phi


class PhiFamily:
    """The four dispersion variants, cached monotonically with inverses.

    Variant names: "full" (two-sided flux window), "plus" (one-sided
    kappas, two-sided psi), "pp" and "pm" (single-sided psi and kappa).
    Pointwise phi_full >= phi_plus >= phi_pp, phi_pm, hence the inverses
    satisfy the reverse ordering.
    """

    VARIANTS = ("full", "plus", "pp", "pm")

    def __init__(self, profile: FluxProfile):
        self.profile = profile
        self.seq = profile.seq
        self._caches = {
            v: MonotoneCache(self._gen(v), name=f"phi_{v}") for v in self.VARIANTS
        }

    def phi_squared(self, variant: str, n: int) -> float:
        seq = self.seq
        prof = self.profile
        ip, ip_ok = seq.vplus.inverse_flagged(float(n))
        im, im_ok = seq.vminus.inverse_flagged(float(n))
        if variant == "full":
            if math.isinf(ip) or math.isinf(im):
                return math.inf
            return seq.psi_squared(n, n) + prof.kappa(int(im), int(ip))
        if variant == "plus":
            if math.isinf(ip) or math.isinf(im):
                return math.inf
            return (
                seq.psi_squared(n, n)
                + prof.kappa_plus(int(ip))
                + prof.kappa_minus(int(im))
            )
        if variant == "pp":
            if math.isinf(ip):
                return math.inf
            return seq.psi_squared(0, n) + prof.kappa_plus(int(ip))
        if variant == "pm":
            if math.isinf(im):
                return math.inf
            return seq.psi_squared(n, 0) + prof.kappa_minus(int(im))
        raise ValueError(f"unknown phi variant {variant!r}")

    def _gen(self, variant: str):
        for n in count(0):
            yield math.sqrt(self.phi_squared(variant, n))

    def value(self, variant: str, n: int) -> float:
        return self._caches[variant].value(n)

    def inverse(self, variant: str, x: float) -> float:
        return self._caches[variant].inverse(x)

    def inverse_flagged(self, variant: str, x: float) -> tuple[float, bool]:
        return self._caches[variant].inverse_flagged(x)

    def cache(self, variant: str) -> MonotoneCache:
        return self._caches[variant]


def phi_family(seq: SequenceSet, profile: FluxProfile, variant: str, n: int) -> float:
    """Dispersion phi_{u,variant}(n) for the direction carried by profile."""
    if profile.seq is not seq:
        raise ValueError("profile was built from a different sequence set")
    return profile.phi().value(variant, n)
