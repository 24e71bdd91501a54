"""Stratified environments on Z^{d+1}.

An environment assigns to every level n in Z a stratum law (p_n, q_n, r_n,
mu_n): the walk at (x, n) moves to (x, n+1) with probability p_n, to
(x, n-1) with probability q_n, and to (x+k, n) with probability
r_n * mu_n(k), where mu_n is a finite-support probability measure on Z^d.

Standing hypotheses, checked by :func:`validate` against a declared
uniformity constant delta in (0, 1/3]:

  1. min(p_n, q_n, r_n) >= delta,
  2. sum_k ||k||^max(d,3) mu_n(k) <= 1/delta,
  3. the smallest eigenvalue of sum_k k k^T mu_n(k) is >= delta.

Environments are immutable after construction and stratum lookups are
cached, so repeated queries are pure and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "HorizontalLaw",
    "StratumLaw",
    "StratifiedEnvironment",
    "ConditionCheck",
    "ValidationReport",
    "validate",
    "family",
    "CampaninoPetritis",
    "AntisymPowerLaw",
    "HalfPipe",
    "Homogeneous",
    "Tabulated",
    "environment_from_config",
    "perturb_one_stratum",
]

PROB_TOL = 1e-12
DELTA_MAX = 1.0 / 3.0

# window scanned when computing a family's default delta; contains the
# extremal strata of every built-in family (their probabilities are
# monotone in |n|), and a sub-window minimum can only be larger
_FLOOR_SCAN = 600


class ConfigError(ValueError):
    """Malformed environment configuration (schema or probability errors)."""


class HorizontalLaw:
    """Finite-support probability measure on Z^d with cached moments."""

    def __init__(self, points, masses):
        pts = np.asarray(points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigError("support must be a nonempty list of lattice points")
        w = np.asarray(masses, dtype=float)
        if w.shape != (pts.shape[0],):
            raise ConfigError("one mass per support point required")
        if np.any(w < 0.0):
            raise ConfigError("masses must be nonnegative")
        s = float(w.sum())
        if abs(s - 1.0) > PROB_TOL:
            raise ConfigError(f"masses sum to {s!r}, not 1 within {PROB_TOL}")
        seen = {tuple(int(v) for v in row) for row in pts}
        if len(seen) != pts.shape[0]:
            raise ConfigError("support points must be distinct")
        self.points = pts
        self.masses = w / s
        self.d = int(pts.shape[1])
        self.mean = self.masses @ pts
        self.second_moment = (pts * self.masses[:, None]).T @ pts

    @classmethod
    def point_mass(cls, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        return cls(k.reshape(1, -1), [1.0])

    @classmethod
    def symmetric_pair(cls, k):
        """(delta_k + delta_{-k}) / 2."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        return cls(np.stack([k, -k]), [0.5, 0.5])

    def moment_sum(self, power: float) -> float:
        norms = np.sqrt(np.sum(self.points.astype(float) ** 2, axis=1))
        return float(np.sum(norms**power * self.masses))

    def fourier(self, w) -> complex:
        """E exp(i w . k) over the support; w is a real d-vector."""
        w = np.asarray(w, dtype=float)
        return complex(np.sum(self.masses * np.exp(1j * (self.points @ w))))

    def canonical(self):
        order = sorted(range(len(self.masses)), key=lambda i: tuple(self.points[i]))
        return tuple(
            (tuple(int(v) for v in self.points[i]), float(self.masses[i]))
            for i in order
        )

    def same_as(self, other: "HorizontalLaw", tol: float = 1e-12) -> bool:
        a, b = self.canonical(), other.canonical()
        if len(a) != len(b):
            return False
        return all(
            pa == pb and abs(wa - wb) <= tol for (pa, wa), (pb, wb) in zip(a, b)
        )

    def __repr__(self):
        rows = ", ".join(f"{tuple(p)}:{w:.4g}" for p, w in zip(self.points, self.masses))
        return f"HorizontalLaw({rows})"


class StratumLaw:
    """One stratum: vertical probabilities p, q, r and horizontal law mu."""

    __slots__ = ("p", "q", "r", "mu")

    def __init__(self, p: float, q: float, r: float, mu: HorizontalLaw):
        for name, v in (("p", p), ("q", q), ("r", r)):
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name}={v!r} outside [0, 1]")
        s = p + q + r
        if abs(s - 1.0) > PROB_TOL:
            raise ConfigError(f"p+q+r = {s!r}, not 1 within {PROB_TOL}")
        self.p = p / s
        self.q = q / s
        self.r = r / s
        self.mu = mu

    @property
    def a(self) -> float:
        """Odds ratio q/p of the embedded vertical chain."""
        return self.q / self.p if self.p > 0.0 else math.inf

    @property
    def b(self) -> float:
        return 1.0 + self.a

    @property
    def drift(self) -> np.ndarray:
        """Mean horizontal jump m = sum_k k mu(k)."""
        return self.mu.mean

    @property
    def eta(self) -> np.ndarray:
        """Stratum drift r m / p."""
        return (self.r / self.p) * self.mu.mean

    def __repr__(self):
        return f"StratumLaw(p={self.p:.6g}, q={self.q:.6g}, r={self.r:.6g}, mu={self.mu!r})"


class StratifiedEnvironment:
    """The map n -> StratumLaw plus dimension d and declared delta.

    ``stratum`` is memoized; the underlying rule must be deterministic, so
    two queries at the same level always agree.  ``family_info`` carries
    structural metadata for environments built from closed-form families
    (exact tail behaviour, symmetry certificates); it is None for ad-hoc
    rules.
    """

    def __init__(
        self,
        d: int,
        stratum_fn: Callable[[int], StratumLaw],
        delta: float,
        family_info: Optional[dict] = None,
        label: str = "",
    ):
        if not (isinstance(d, (int, np.integer)) and d >= 1):
            raise ConfigError(f"dimension d={d!r} must be a positive integer")
        if not (0.0 < delta <= DELTA_MAX + 1e-15):
            raise ConfigError(f"delta={delta!r} outside (0, 1/3]")
        self.d = int(d)
        self.delta = float(delta)
        self.family_info = family_info
        self.label = label
        self._fn = stratum_fn
        self._cache: dict[int, StratumLaw] = {}

    def stratum(self, n: int) -> StratumLaw:
        n = int(n)
        law = self._cache.get(n)
        if law is None:
            law = self._fn(n)
            if not isinstance(law, StratumLaw):
                raise ConfigError(f"stratum rule returned {type(law)} at n={n}")
            if law.mu.d != self.d:
                raise ConfigError(
                    f"stratum {n}: horizontal law lives in Z^{law.mu.d}, not Z^{self.d}"
                )
            self._cache[n] = law
        return law

    def window(self, lo: int, hi: int) -> list[StratumLaw]:
        return [self.stratum(n) for n in range(lo, hi + 1)]

    def __repr__(self):
        name = (self.family_info or {}).get("name", self.label or "custom")
        return f"StratifiedEnvironment(d={self.d}, delta={self.delta:.4g}, {name})"


@dataclass
class ConditionCheck:
    ok: bool
    worst_n: Optional[int]
    margin: float


@dataclass
class ValidationReport:
    checked_range: tuple[int, int]
    condition1: ConditionCheck
    condition2: ConditionCheck
    condition3: ConditionCheck
    group_full_rank: bool
    delta: float

    @property
    def condition1_ok(self) -> bool:
        return self.condition1.ok

    @property
    def condition2_ok(self) -> bool:
        return self.condition2.ok

    @property
    def condition3_ok(self) -> bool:
        return self.condition3.ok

    @property
    def passed(self) -> bool:
        return (
            self.condition1.ok
            and self.condition2.ok
            and self.condition3.ok
            and self.group_full_rank
        )

    def render(self) -> str:
        lo, hi = self.checked_range
        lines = [f"validation on n in [{lo}, {hi}] at delta = {self.delta:.6g}"]
        for i, cond, what in (
            (1, self.condition1, "min(p,q,r) - delta"),
            (2, self.condition2, "1/delta - sum ||k||^max(d,3) mu(k)"),
            (3, self.condition3, "lambda_min(sum k k^T mu(k)) - delta"),
        ):
            state = "ok" if cond.ok else "FAIL"
            at = f" at n={cond.worst_n}" if cond.worst_n is not None else ""
            lines.append(
                f"  condition {i}: {state}  worst margin {cond.margin:.6g} ({what}){at}"
            )
        lines.append(
            f"  horizontal supports span Z^d: {'yes' if self.group_full_rank else 'NO'}"
        )
        return "\n".join(lines)


def _lambda_min(mat: np.ndarray, d: int) -> float:
    if d == 1:
        return float(mat[0, 0])
    if d == 2:
        a, b, c = float(mat[0, 0]), float(mat[0, 1]), float(mat[1, 1])
        disc = math.sqrt((a - c) ** 2 + 4.0 * b * b)
        return 0.5 * (a + c - disc)
    return float(np.linalg.eigvalsh(mat)[0])


def validate(env: StratifiedEnvironment, n_range: tuple[int, int]) -> ValidationReport:
    """Check the three standing hypotheses for every n in the range.

    Malformed stratum laws raise; delta violations are reported, not
    thrown.  Margins are nonnegative exactly when the condition holds.
    """
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo > hi:
        raise ValueError("empty validation range")
    delta = env.delta
    power = max(env.d, 3)
    worst = [(math.inf, None), (math.inf, None), (math.inf, None)]
    all_points = []
    for n in range(lo, hi + 1):
        law = env.stratum(n)
        m1 = min(law.p, law.q, law.r) - delta
        m2 = 1.0 / delta - law.mu.moment_sum(power)
        m3 = _lambda_min(law.mu.second_moment, env.d) - delta
        for i, m in enumerate((m1, m2, m3)):
            if m < worst[i][0]:
                worst[i] = (m, n)
        all_points.append(law.mu.points)
    stacked = np.concatenate(all_points, axis=0)
    full_rank = np.linalg.matrix_rank(stacked.astype(float)) == env.d
    checks = [ConditionCheck(m >= 0.0, n, m) for m, n in worst]
    return ValidationReport((lo, hi), checks[0], checks[1], checks[2], bool(full_rank), delta)


# ---------------------------------------------------------------------------
# named families


@dataclass(frozen=True)
class CampaninoPetritis:
    """d = 1, p_n = q_n = p, horizontal point mass at eps_n.

    ``eps`` is "alternating" (eps_n = (-1)^n), "split"
    (eps_n = 1 for n >= 0, else -1), or an explicit periodic pattern of
    nonzero integers applied as eps_n = pattern[n mod len].
    """

    p: float = 1.0 / 3.0
    eps: object = "alternating"


@dataclass(frozen=True)
class AntisymPowerLaw:
    """Antisymmetric power-law family: rho_n = max(1, |n|)^alpha exactly,
    rho_{-n} = rho_n, horizontal drift m_n = c * sign(n), m_0 = 0."""

    d: int = 1
    alpha: float = 2.0
    c: int = 1
    r: float = 1.0 / 3.0


@dataclass(frozen=True)
class HalfPipe:
    """Geometric vertical trap: sum_n 1/rho_n < infinity.

    Plain variant: rho_n = base^|n|, horizontal point mass at m everywhere.
    Symmetric variant: a_0 = 1, a_n = base (n >= 1), a_{-n} = 1/base, so
    rho_{-n} = rho_{n-1} and p_{-n} = q_n for all n, with the symmetric
    two-point law (delta_m + delta_{-m})/2 at every stratum (zero drift).
    """

    base: float = 2.0
    m: int = 1
    r: float = 1.0 / 3.0
    symmetric: bool = False


@dataclass(frozen=True)
class Homogeneous:
    p: float = 1.0 / 3.0
    q: float = 1.0 / 3.0
    r: float = 1.0 / 3.0
    mu: object = None  # HorizontalLaw; default (delta_1 + delta_{-1})/2


@dataclass(frozen=True)
class Tabulated:
    """Explicit rows on a window with a declared extension rule.

    ``extension`` is "periodic", "constant" (clamp to the boundary rows)
    or "reject" (queries outside the window raise).
    """

    window: tuple[int, int] = (0, 0)
    rows: tuple = ()
    extension: str = "periodic"


def _floor_scan(env: StratifiedEnvironment, width: int = _FLOOR_SCAN):
    """Worst-case margins of the three conditions over [-width, width],
    ignoring delta (returns the raw floors delta must sit below)."""
    power = max(env.d, 3)
    floor1 = math.inf
    floor2 = math.inf  # 1 / moment sum
    floor3 = math.inf
    for n in range(-width, width + 1):
        law = env.stratum(n)
        floor1 = min(floor1, law.p, law.q, law.r)
        ms = law.mu.moment_sum(power)
        floor2 = min(floor2, 1.0 / ms if ms > 0 else math.inf)
        floor3 = min(floor3, _lambda_min(law.mu.second_moment, env.d))
    return floor1, floor2, floor3


def _resolve_delta(env: StratifiedEnvironment, declared: Optional[float]) -> float:
    f1, f2, f3 = _floor_scan(env)
    ceiling = min(DELTA_MAX, f1, f2, f3)
    if declared is None:
        if ceiling <= 0.0:
            raise ConfigError(
                "family violates the standing hypotheses for every delta "
                f"(floors: probabilities {f1:.3g}, moments {f2:.3g}, eigenvalue {f3:.3g})"
            )
        # set back from the exact ceiling so revalidating the resolved
        # delta cannot flip sign on reciprocal round-off
        return ceiling * (1.0 - 1e-12)
    if declared > ceiling:
        raise ConfigError(
            f"declared delta={declared!r} exceeds what the family supports "
            f"({ceiling:.6g}); probabilities or odds ratios leave [delta, 1-2*delta]"
        )
    return declared


def _with_delta(d, fn, declared, info, label):
    probe = StratifiedEnvironment(d, fn, DELTA_MAX, family_info=info, label=label)
    delta = _resolve_delta(probe, declared)
    env = StratifiedEnvironment(d, fn, delta, family_info=info, label=label)
    env._cache = probe._cache  # reuse the scan's memoized strata
    return env


def _law_from_a(a: float, r: float, mu: HorizontalLaw) -> StratumLaw:
    p = (1.0 - r) / (1.0 + a)
    q = (1.0 - r) * a / (1.0 + a)
    return StratumLaw(p, q, r, mu)


def family(spec, delta: Optional[float] = None) -> StratifiedEnvironment:
    """Build a StratifiedEnvironment realizing a named family spec.

    When ``delta`` is omitted, the largest admissible value (capped at 1/3)
    is computed from the family's extremal strata; a declared delta that
    the family cannot support is rejected.
    """
    if isinstance(spec, CampaninoPetritis):
        return _family_cp(spec, delta)
    if isinstance(spec, AntisymPowerLaw):
        return _family_antisym(spec, delta)
    if isinstance(spec, HalfPipe):
        return _family_halfpipe(spec, delta)
    if isinstance(spec, Homogeneous):
        return _family_homogeneous(spec, delta)
    if isinstance(spec, Tabulated):
        return _family_tabulated(spec, delta)
    raise ConfigError(f"unknown family spec {type(spec)!r}")


def _family_cp(spec: CampaninoPetritis, delta) -> StratifiedEnvironment:
    p = float(spec.p)
    if not (0.0 < p < 0.5):
        raise ConfigError("CampaninoPetritis requires 0 < p < 1/2")
    r = 1.0 - 2.0 * p
    if spec.eps == "alternating":
        kind, pattern = "alternating", (1, -1)
        eps_fn = lambda n: 1 if n % 2 == 0 else -1
    elif spec.eps == "split":
        kind, pattern = "split", None
        eps_fn = lambda n: 1 if n >= 0 else -1
    else:
        pattern = tuple(int(e) for e in spec.eps)
        if not pattern or any(e == 0 for e in pattern):
            raise ConfigError("eps pattern must be nonempty with nonzero entries")
        kind = "periodic"
        eps_fn = lambda n: pattern[n % len(pattern)]
    laws = {
        e: StratumLaw(p, p, r, HorizontalLaw.point_mass(e))
        for e in sorted({eps_fn(n) for n in range(-16, 16)} | set(pattern or ()))
    }

    def fn(n: int) -> StratumLaw:
        return laws[eps_fn(n)]

    info = {
        "name": "CampaninoPetritis",
        "p": p,
        "kind": kind,
        "pattern": pattern,
        "pattern_zero_mean": (sum(pattern) == 0) if pattern else False,
        "p_equals_q": True,
        "rho_flat": True,
        "logrho": lambda n: 0.0,
        "vertical_tail": {"n0": 0, "a_plus": 1.0, "a_minus": 1.0},
    }
    return _with_delta(1, fn, delta, info, f"CampaninoPetritis({kind})")


def _antisym_mu(d: int, c: int, sign: int) -> HorizontalLaw:
    if d == 1:
        if sign == 0:
            return HorizontalLaw.symmetric_pair([c])
        return HorizontalLaw.point_mass([sign * c])
    if sign == 0:
        pts = [[c, 1], [c, -1], [-c, 1], [-c, -1]]
        return HorizontalLaw(pts, [0.25] * 4)
    return HorizontalLaw([[sign * c, 1], [sign * c, -1]], [0.5, 0.5])


def _family_antisym(spec: AntisymPowerLaw, delta) -> StratifiedEnvironment:
    d, alpha, c, r = int(spec.d), float(spec.alpha), int(spec.c), float(spec.r)
    if d not in (1, 2):
        raise ConfigError("AntisymPowerLaw supports d in {1, 2}")
    if c == 0:
        raise ConfigError("AntisymPowerLaw requires c != 0")
    if not (0.0 < r < 1.0):
        raise ConfigError("AntisymPowerLaw requires 0 < r < 1")

    def a_of(n: int) -> float:
        # rho_n = max(1, |n|)^alpha on both sides; consecutive ratios
        if n >= 2:
            return (n / (n - 1.0)) ** alpha
        if n >= 0:  # rho = 1 on [-1, 1], so a_0 = a_1 = 1
            return 1.0
        k = -n  # a_{-k} = rho_{-k} / rho_{-k-1} = (k / (k+1))^alpha, k >= 1
        return (k / (k + 1.0)) ** alpha

    mus = {s: _antisym_mu(d, c, s) for s in (-1, 0, 1)}

    def fn(n: int) -> StratumLaw:
        return _law_from_a(a_of(n), r, mus[int(np.sign(n))])

    info = {
        "name": "AntisymPowerLaw",
        "alpha": alpha,
        "c": c,
        "r": r,
        "antisymmetric": True,
        "p_equals_q": alpha == 0.0,
        "rho_flat": alpha == 0.0,
        "rho_power": alpha,
        "logrho": lambda n: alpha * math.log(max(1, abs(n))),
    }
    return _with_delta(d, fn, delta, info, f"AntisymPowerLaw(alpha={alpha})")


def _family_halfpipe(spec: HalfPipe, delta) -> StratifiedEnvironment:
    base, m, r = float(spec.base), int(spec.m), float(spec.r)
    if base <= 1.0:
        raise ConfigError("HalfPipe requires base > 1 so that sum 1/rho_n converges")
    if not (0.0 < r < 1.0):
        raise ConfigError("HalfPipe requires 0 < r < 1")
    if spec.symmetric:
        mu = HorizontalLaw.symmetric_pair([max(1, abs(m))])

        def a_of(n: int) -> float:
            if n == 0:
                return 1.0
            return base if n >= 1 else 1.0 / base

        def logrho(n: int) -> float:
            # rho_n = base^n for n >= 0, rho_{-n} = rho_{n-1}
            return (n if n >= 0 else -n - 1) * math.log(base)

    else:
        mu = HorizontalLaw.point_mass([m])

        def a_of(n: int) -> float:
            return base if n >= 1 else 1.0 / base

        def logrho(n: int) -> float:
            return abs(n) * math.log(base)

    def fn(n: int) -> StratumLaw:
        return _law_from_a(a_of(n), r, mu)

    info = {
        "name": "HalfPipe",
        "base": base,
        "m": m,
        "r": r,
        "symmetric": bool(spec.symmetric),
        "halfpipe": True,
        "p_equals_q": False,
        "logrho": logrho,
        "vertical_tail": {"n0": 1, "a_plus": base, "a_minus": 1.0 / base},
    }
    return _with_delta(1, fn, delta, info, "HalfPipe")


def _family_homogeneous(spec: Homogeneous, delta) -> StratifiedEnvironment:
    mu = spec.mu if spec.mu is not None else HorizontalLaw.symmetric_pair([1])
    if not isinstance(mu, HorizontalLaw):
        raise ConfigError("Homogeneous.mu must be a HorizontalLaw")
    law = StratumLaw(float(spec.p), float(spec.q), float(spec.r), mu)
    a = law.a
    info = {
        "name": "Homogeneous",
        "p_equals_q": law.p == law.q,
        "rho_flat": law.p == law.q,
        "mean_zero": bool(np.all(mu.mean == 0.0)),
        "vertical_tail": {"n0": 0, "a_plus": a, "a_minus": a},
    }
    if 0.0 < a < math.inf:
        info["logrho"] = lambda n, _la=math.log(a): n * _la
    return _with_delta(mu.d, lambda n: law, delta, info, "Homogeneous")


def _parse_mu_entries(entries, d=None) -> HorizontalLaw:
    pts, ws = [], []
    for entry in entries:
        if len(entry) != 2:
            raise ConfigError(f"mu entry {entry!r} is not [point, mass]")
        k, w = entry
        k = [k] if isinstance(k, (int, float)) else list(k)
        pts.append([int(v) for v in k])
        ws.append(float(w))
    law = HorizontalLaw(pts, ws)
    if d is not None and law.d != d:
        raise ConfigError(f"mu support lives in Z^{law.d}, expected Z^{d}")
    return law


def _family_tabulated(spec: Tabulated, delta) -> StratifiedEnvironment:
    lo, hi = int(spec.window[0]), int(spec.window[1])
    rows = list(spec.rows)
    if hi - lo + 1 != len(rows):
        raise ConfigError(
            f"window [{lo}, {hi}] holds {hi - lo + 1} levels but {len(rows)} rows given"
        )
    if not rows:
        raise ConfigError("tabulated environment needs at least one row")
    if spec.extension not in ("periodic", "constant", "reject"):
        raise ConfigError(f"unknown extension rule {spec.extension!r}")
    laws = []
    for row in rows:
        if isinstance(row, StratumLaw):
            laws.append(row)
        else:
            p, q, r = (float(v) for v in row[:3])
            laws.append(StratumLaw(p, q, r, _parse_mu_entries(row[3:])))
    d = laws[0].mu.d
    if any(law.mu.d != d for law in laws):
        raise ConfigError("all rows must share one horizontal dimension")
    L = len(laws)

    if spec.extension == "periodic":
        fn = lambda n: laws[(n - lo) % L]
    elif spec.extension == "constant":
        fn = lambda n: laws[min(max(n, lo), hi) - lo]
    else:

        def fn(n: int) -> StratumLaw:
            if lo <= n <= hi:
                return laws[n - lo]
            raise ConfigError(f"level {n} outside tabulated window [{lo}, {hi}]")

    p_eq_q = all(law.p == law.q for law in laws)
    info = {
        "name": "Tabulated",
        "window": (lo, hi),
        "extension": spec.extension,
        "p_equals_q": p_eq_q and spec.extension != "reject",
        "rho_flat": p_eq_q and spec.extension != "reject",
    }
    if spec.extension == "periodic":
        info["period"] = L
        if p_eq_q:
            drift = np.sum([law.drift for law in laws], axis=0)
            info["pattern_zero_mean"] = bool(np.all(np.abs(drift) < 1e-15))
    if spec.extension == "constant":
        info["vertical_tail"] = {
            "n0": max(abs(lo), abs(hi)) + 1,
            "a_plus": laws[-1].a,
            "a_minus": laws[0].a,
        }
    if spec.extension == "reject":
        # delta scan would query outside the window; clamp it
        probe = StratifiedEnvironment(d, lambda n: laws[min(max(n, lo), hi) - lo], DELTA_MAX)
        resolved = _resolve_delta(probe, delta)
        return StratifiedEnvironment(d, fn, resolved, family_info=info, label="Tabulated")
    return _with_delta(d, fn, delta, info, "Tabulated")


def environment_from_config(cfg: dict) -> StratifiedEnvironment:
    """Build an environment from the documented JSON-style config schema.

    {"d": int,
     "family": {"name": ..., ...params} | "table": {"window": [lo, hi],
        "rows": [[p, q, r, [[k...], mass], ...], ...],
        "extension": "periodic"|"constant"},
     "delta": float (optional)}
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    if "d" not in cfg:
        raise ConfigError("config is missing 'd'")
    d = cfg["d"]
    if not isinstance(d, int) or d < 1:
        raise ConfigError(f"'d' must be a positive integer, got {d!r}")
    delta = cfg.get("delta")
    if delta is not None:
        delta = float(delta)

    if ("family" in cfg) == ("table" in cfg):
        raise ConfigError("config needs exactly one of 'family' or 'table'")

    if "table" in cfg:
        tab = cfg["table"]
        try:
            spec = Tabulated(
                window=(int(tab["window"][0]), int(tab["window"][1])),
                rows=tuple(tuple(row) for row in tab["rows"]),
                extension=tab.get("extension", "periodic"),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"malformed table section: {exc}") from exc
        env = family(spec, delta)
        if env.d != d:
            raise ConfigError(f"table rows live in Z^{env.d}, config says d={d}")
        return env

    fam = dict(cfg["family"])
    name = fam.pop("name", None)
    try:
        if name == "CampaninoPetritis":
            if d != 1:
                raise ConfigError("CampaninoPetritis is a d=1 family")
            eps = fam.pop("eps", "alternating")
            if isinstance(eps, list):
                eps = tuple(eps)
            spec = CampaninoPetritis(eps=eps, **fam)
        elif name == "AntisymPowerLaw":
            spec = AntisymPowerLaw(d=d, **fam)
        elif name == "HalfPipe":
            if d != 1:
                raise ConfigError("HalfPipe is a d=1 family")
            spec = HalfPipe(**fam)
        elif name == "Homogeneous":
            mu = fam.pop("mu", None)
            if mu is not None:
                mu = _parse_mu_entries(mu, d)
            spec = Homogeneous(mu=mu, **fam)
        else:
            raise ConfigError(f"unknown family name {name!r}")
    except TypeError as exc:
        raise ConfigError(f"bad parameters for family {name!r}: {exc}") from exc
    env = family(spec, delta)
    if env.d != d:
        raise ConfigError(f"family produces d={env.d}, config says d={d}")
    return env


def perturb_one_stratum(
    env: StratifiedEnvironment, n0: int, law: StratumLaw
) -> StratifiedEnvironment:
    """Return a copy of env with the single stratum at n0 replaced.

    Structural certificates that only constrain strata beyond |n0| are
    kept; everything else in the metadata is dropped.
    """
    n0 = int(n0)

    def fn(n: int) -> StratumLaw:
        return law if n == n0 else env.stratum(n)

    info = {"name": "Perturbed", "perturbed_at": n0}
    base = env.family_info or {}
    tail = base.get("vertical_tail")
    if tail is not None and abs(n0) < tail["n0"]:
        info["vertical_tail"] = tail
    return StratifiedEnvironment(env.d, fn, env.delta, family_info=info, label="Perturbed")
