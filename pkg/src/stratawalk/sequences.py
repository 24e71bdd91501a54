"""Derived scalar sequences of a stratified environment.

For a_n = q_n / p_n the level-ratio cocycle is

    rho_0 = 1,   rho_n = a_1 ... a_n (n >= 1),
    rho_n = (1/a_{n+1}) ... (1/a_0) (n <= -1),

so rho_{n-1} = rho_n / a_n for every n.  From it the four growth
sequences

    v_+(n) = sum_{0 <= k <= n} rho_k,
    v_-(n) = a_0 * sum_{-n-1 <= k <= -1} rho_k,
    w_+(n) = sum_{0 <= k <= n} 1/rho_k,
    w_-(n) = (1/a_0) * sum_{-n-1 <= k <= -1} 1/rho_k,

all normalized to 1 at n = 0, and the dispersion

    psi^2(-m, n) = n * w_+(v_+^{-1}(n)) + m * w_-(v_-^{-1}(m)).

Generalized inverses follow the convention f^{-1}(x) = sup{n : f(n) <= x}
with sup(empty) = 0 and sup(N) = +inf.

rho is carried in the log domain; |log rho| beyond ~700 marks the
sequence set as saturated and overflowing values degrade to +inf rather
than raising.
"""

from __future__ import annotations

import bisect
import math
from itertools import count
from typing import Callable, Iterable, Optional

import numpy as np

from .environment import StratifiedEnvironment

__all__ = [
    "MonotonicityError",
    "MonotoneCache",
    "generalized_inverse",
    "SequenceSet",
    "build",
    "vertical_classification",
]

LOG_SAT = 700.0


class MonotonicityError(RuntimeError):
    """A sequence declared non-decreasing actually decreased."""


class MonotoneCache:
    """Lazy cache of a non-decreasing sequence f(0), f(1), ... with inverse.

    Values come from an infinite generator.  Rounding-level decreases
    (relative size up to 1e-12) are clamped to the running maximum;
    larger decreases raise MonotonicityError.  +inf is absorbing.

    ``limit_hint`` is a certified finite upper bound on sup f; it lets
    ``inverse`` return a provable +inf instead of extending forever.
    """

    def __init__(
        self,
        generator: Iterable[float],
        name: str = "",
        limit_hint: Optional[float] = None,
        max_len: int = 2_000_000,
    ):
        self._gen = iter(generator)
        self.values: list[float] = []
        self.name = name
        self.limit_hint = limit_hint
        self.max_len = max_len
        self._inf_reached = False

    def __len__(self) -> int:
        return len(self.values)

    def _append_next(self) -> None:
        if self._inf_reached:
            self.values.append(math.inf)
            return
        x = float(next(self._gen))
        if math.isnan(x):
            raise MonotonicityError(f"{self.name or 'sequence'}: NaN at index {len(self.values)}")
        if self.values:
            prev = self.values[-1]
            if x < prev:
                if x >= prev - 1e-12 * max(1.0, abs(prev)):
                    x = prev
                else:
                    raise MonotonicityError(
                        f"{self.name or 'sequence'} decreased at index "
                        f"{len(self.values)}: {prev!r} -> {x!r}"
                    )
        if math.isinf(x):
            self._inf_reached = True
        self.values.append(x)

    def extend_to(self, n: int) -> None:
        while len(self.values) <= n:
            self._append_next()

    def value(self, n: int) -> float:
        n = int(n)
        if n < 0:
            raise IndexError("monotone caches are indexed by n >= 0")
        self.extend_to(n)
        return self.values[n]

    def inverse_flagged(self, x: float) -> tuple[float, bool]:
        """sup{n : f(n) <= x} and whether the answer is certified.

        Returns (+inf, True) when the whole sequence provably stays <= x,
        (+inf, False) when the extension budget ran out first.
        """
        if math.isnan(x):
            raise ValueError("inverse of NaN")
        if math.isinf(x) and x > 0:
            return math.inf, True
        if not self.values:
            self.extend_to(0)
        if self.values[0] > x:
            return 0.0, True  # empty set; sup(empty) = 0 convention
        while self.values[-1] <= x:
            if self.limit_hint is not None and self.limit_hint <= x:
                return math.inf, True
            if len(self.values) >= self.max_len:
                return math.inf, False
            self._append_next()
        idx = bisect.bisect_right(self.values, x) - 1
        return float(max(idx, 0)), True

    def inverse(self, x: float) -> float:
        return self.inverse_flagged(x)[0]


def generalized_inverse(f, x: float) -> float:
    """sup{n in N : f(n) <= x} with sup(empty) = 0, sup(N) = +inf.

    Accepts a MonotoneCache or any nondecreasing callable on N.
    """
    if not isinstance(f, MonotoneCache):
        fn = f
        f = MonotoneCache((float(fn(n)) for n in count(0)), name="adhoc")
    return f.inverse(x)


class SequenceSet:
    """All derived sequences of one environment, built lazily.

    rho is stored as log rho, extended by the ratio recursion; families
    that publish an exact closed form for log rho (via family metadata)
    use it instead, which keeps declared symmetries such as
    rho_{-n} = rho_n exact to the last bit.
    """

    def __init__(self, env: StratifiedEnvironment):
        self.env = env
        info = env.family_info or {}
        self._logrho_exact: Optional[Callable[[int], float]] = info.get("logrho")
        self._lr_plus = [0.0]  # log rho_j, j >= 0
        self._lr_minus = [0.0]  # log rho_{-k}, k >= 0
        self._a_plus: list[float] = []  # a_k, k >= 1 (index k-1)
        self.saturated = False
        self.vplus = MonotoneCache(self._gen_v_plus(), name="v_plus")
        self.vminus = MonotoneCache(self._gen_v_minus(), name="v_minus")
        self.wplus = MonotoneCache(self._gen_w_plus(), name="w_plus")
        self.wminus = MonotoneCache(self._gen_w_minus(), name="w_minus")
        self._psi_caches: dict[str, MonotoneCache] = {}

    # -- stratum scalars ----------------------------------------------------

    def a(self, n: int) -> float:
        law = self.env.stratum(n)
        return law.q / law.p if law.p > 0.0 else math.inf

    def b(self, n: int) -> float:
        return 1.0 + self.a(n)

    def a_plus_array(self, n: int) -> np.ndarray:
        """a_1 .. a_n as a vector (plus-side continued-fraction blocks)."""
        while len(self._a_plus) < n:
            self._a_plus.append(self.a(len(self._a_plus) + 1))
        return np.asarray(self._a_plus[:n])

    # -- rho in the log domain ----------------------------------------------

    def logrho(self, n: int) -> float:
        n = int(n)
        if self._logrho_exact is not None:
            val = self._logrho_exact(n)
        elif n >= 0:
            while len(self._lr_plus) <= n:
                j = len(self._lr_plus)
                self._lr_plus.append(self._lr_plus[-1] + math.log(self.a(j)))
            val = self._lr_plus[n]
        else:
            k = -n
            while len(self._lr_minus) <= k:
                j = len(self._lr_minus)  # log rho_{-j} = log rho_{-(j-1)} - log a_{-(j-1)}
                self._lr_minus.append(self._lr_minus[-1] - math.log(self.a(-(j - 1))))
            val = self._lr_minus[k]
        if abs(val) > LOG_SAT:
            self.saturated = True
        return val

    def logrho_plus_array(self, n: int) -> np.ndarray:
        """log rho_1 .. log rho_n as a vector."""
        return np.asarray([self.logrho(k) for k in range(1, n + 1)])

    def rho(self, n: int) -> float:
        lr = self.logrho(n)
        return math.exp(lr) if lr <= LOG_SAT else math.inf

    def rho_inv(self, n: int) -> float:
        lr = self.logrho(n)
        return math.exp(-lr) if lr >= -LOG_SAT else math.inf

    # -- growth sequences ---------------------------------------------------

    def _gen_v_plus(self):
        s = 0.0
        for n in count(0):
            s += self.rho(n)
            yield s

    def _gen_v_minus(self):
        a0 = self.a(0)
        s = 0.0
        for n in count(0):
            s += self.rho(-(n + 1))
            yield a0 * s

    def _gen_w_plus(self):
        s = 0.0
        for n in count(0):
            s += self.rho_inv(n)
            yield s

    def _gen_w_minus(self):
        a0 = self.a(0)
        s = 0.0
        for n in count(0):
            s += self.rho_inv(-(n + 1))
            yield s / a0

    # -- dispersion ----------------------------------------------------------

    def psi_squared(self, m: int, n: int) -> float:
        """psi^2(-m, n) = n w_+(v_+^{-1}(n)) + m w_-(v_-^{-1}(m)); m, n >= 0."""
        if m < 0 or n < 0:
            raise ValueError("psi_squared takes window half-widths m, n >= 0")
        total = 0.0
        if n > 0:
            idx = self.vplus.inverse(float(n))
            total += math.inf if math.isinf(idx) else n * self.wplus.value(int(idx))
        if m > 0:
            idx = self.vminus.inverse(float(m))
            total += math.inf if math.isinf(idx) else m * self.wminus.value(int(idx))
        return total

    def psi(self, n: int) -> float:
        return math.sqrt(self.psi_squared(n, n))

    def psi_plus(self, n: int) -> float:
        return math.sqrt(self.psi_squared(0, n))

    def psi_minus(self, n: int) -> float:
        return math.sqrt(self.psi_squared(n, 0))

    def psi_cache(self, which: str = "sym") -> MonotoneCache:
        """Monotone cache over n -> psi variant, for inverse queries."""
        cache = self._psi_caches.get(which)
        if cache is None:
            fn = {"sym": self.psi, "plus": self.psi_plus, "minus": self.psi_minus}[which]
            cache = MonotoneCache((fn(n) for n in count(0)), name=f"psi_{which}")
            self._psi_caches[which] = cache
        return cache


def build(env: StratifiedEnvironment) -> SequenceSet:
    return SequenceSet(env)


def vertical_classification(
    seq: SequenceSet,
    horizon: int = 512,
    margin: float = 0.01,
    divergence_threshold: float = 1e9,
    increment_floor: Optional[float] = None,
) -> str:
    """Classify the embedded vertical chain: Recurrent, Transient, Undetermined.

    The chain is recurrent iff both v_+ and v_- diverge.  Families with
    structural tail metadata are classified exactly.  Otherwise window
    certificates are used: a geometric-decay certificate
    (a_n <= 1 - margin, resp. a_{-k} >= 1 + margin, across the tail of
    the window) proves one-sided boundedness, and divergence is certified
    by a_n on the correct side of 1 across the tail with rho bounded away
    from zero, or by v exceeding the divergence threshold with the same
    floor.  Mixed evidence returns Undetermined.
    """
    env = seq.env
    if increment_floor is None:
        increment_floor = env.delta * 1e-3
    info = env.family_info or {}

    alpha = info.get("rho_power")
    if alpha is not None:
        # rho_n ~ |n|^alpha both sides: v diverges iff alpha >= -1
        return "Recurrent" if alpha >= -1.0 else "Transient"

    tail = info.get("vertical_tail")
    if tail is not None:
        plus_div = tail["a_plus"] >= 1.0
        minus_div = tail["a_minus"] <= 1.0
        return "Recurrent" if (plus_div and minus_div) else "Transient"

    if horizon < 16:
        raise ValueError("vertical classification needs horizon >= 16")
    t0 = horizon // 2
    ap = np.array([seq.a(n) for n in range(t0, horizon + 1)])
    am = np.array([seq.a(-k) for k in range(t0, horizon + 1)])
    rp = np.array([seq.rho(n) for n in range(t0, horizon + 1)])
    rm = np.array([seq.rho(-k) for k in range(t0, horizon + 1)])

    if np.max(ap) <= 1.0 - margin or np.min(am) >= 1.0 + margin:
        return "Transient"

    plus_floor = np.min(rp) >= increment_floor
    minus_floor = np.min(rm) >= increment_floor
    plus_div = (np.min(ap) >= 1.0 and plus_floor) or (
        seq.vplus.value(horizon) >= divergence_threshold and plus_floor
    )
    minus_div = (np.max(am) <= 1.0 and minus_floor) or (
        seq.vminus.value(horizon) >= divergence_threshold and minus_floor
    )
    if plus_div and minus_div:
        return "Recurrent"
    return "Undetermined"
