"""Directional characteristic functions of the stratified walk.

For a frequency t in (0, 1/2] and a unit direction u, each stratum
carries the horizontal-round weight

    phi_n(t u) = (1 - r_n) / (1 - r_n muhat_n(t u)),

the characteristic function of the horizontal displacement accumulated
during the geometric number of horizontal moves made before the next
vertical step.  The positive-excursion transform chi^+ is the walk-type
continued fraction with gamma_k = phi_k(t u); the negative side chi^-
is the same construction on the reflected environment (strata mirrored
through 0 with p and q swapped).  They assemble into

    chi_D(t u) = phi_0(t u) (p'_0 chi^+ + q'_0 chi^-),

with p'_0 = p_0/(p_0 + q_0) the probability that the first vertical
move goes up.  The drift surrogate

    psi_n(t u) = 1 / (1 - i t (u . eta_n) / b_n)

replaces phi in the comparison fractions f^+/f^-; (u . eta_n)/b_n is
invariant under swapping p and q, so the reflected side reuses it.

Smallness guard: under the standing hypotheses |phi_n(t u)| stays below
1 - (delta^3/4) t^2 unless the stratum is horizontally degenerate
(|phi| = 1 up to roundoff, which is legal for the fraction); magnitudes
in between indicate a hypothesis violation and raise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cfrac import EvalResult, weighted_excursion_gf
from .environment import StratifiedEnvironment, StratumLaw
from .flux import Direction
from .sequences import SequenceSet, build, vertical_classification

__all__ = [
    "FREQ_WINDOW",
    "SmallnessViolation",
    "phi_stratum",
    "psi_stratum",
    "reflect",
    "ChiEvaluation",
    "ChiEvaluator",
    "chi_D",
    "R_error",
]

FREQ_WINDOW = 0.5  # admissible frequencies are 0 < t <= FREQ_WINDOW
DEGENERATE_TOL = 1e-14


class SmallnessViolation(ValueError):
    """A stratum weight lands in the forbidden band below |phi| = 1."""


def phi_stratum(law: StratumLaw, t: float, u: np.ndarray) -> complex:
    """Horizontal-round weight (1 - r)/(1 - r muhat(t u))."""
    e = law.mu.fourier(t * np.asarray(u, dtype=float))
    return (1.0 - law.r) / (1.0 - law.r * e)


def psi_stratum(law: StratumLaw, t: float, u: np.ndarray) -> complex:
    """Drift surrogate 1/(1 - i t (u . eta)/b)."""
    x = t * float(np.asarray(u, dtype=float) @ law.eta) / law.b
    return 1.0 / (1.0 - 1j * x)


def reflect(env: StratifiedEnvironment) -> StratifiedEnvironment:
    """Mirror strata through level 0 and swap the up/down probabilities.

    The reflected ladder ratios are a'_k = 1/a_{-k}, so its rho sequence
    is rho'_n = a_0 rho_{-n-1}; when the source environment carries an
    exact log-rho rule the reflected one does too.
    """

    def fn(k: int) -> StratumLaw:
        law = env.stratum(-k)
        return StratumLaw(law.q, law.p, law.r, law.mu)

    info = None
    base = env.family_info
    if base is not None:
        info = {k: v for k, v in base.items() if k not in ("logrho", "vertical_tail")}
        info["name"] = base.get("name", "custom") + "-reflected"
        lr = base.get("logrho")
        a0 = env.stratum(0).a
        if lr is not None and 0.0 < a0 < math.inf:
            la0 = math.log(a0)
            info["logrho"] = lambda n, _lr=lr, _la0=la0: _lr(-n - 1) + _la0
        tail = base.get("vertical_tail")
        if tail is not None:
            info["vertical_tail"] = {
                "n0": tail["n0"],
                "a_plus": 1.0 / tail["a_minus"],
                "a_minus": 1.0 / tail["a_plus"],
            }
    return StratifiedEnvironment(
        env.d, fn, env.delta, family_info=info, label=(env.label or "custom") + "-reflected"
    )


class _StratumWeights:
    """gamma provider for one (t, u): scalar calls and vectorized blocks.

    Values are cached per weight class: phi depends on (mu, r) only and
    psi on (mu, r, p + q), so environments with finitely many horizontal
    laws evaluate a handful of Fourier transforms regardless of depth.
    """

    def __init__(self, env, t: float, u: np.ndarray, kind: str, c_floor: float):
        self.env = env
        self.t = t
        self.u = u
        self.kind = kind
        self.c_floor = c_floor
        self._cache: dict[tuple, complex] = {}

    def _value(self, law: StratumLaw, k: int) -> complex:
        if self.kind == "phi":
            key = (id(law.mu), law.r)
        else:
            key = (id(law.mu), law.r, law.p + law.q)
        val = self._cache.get(key)
        if val is None:
            if self.kind == "phi":
                val = phi_stratum(law, self.t, self.u)
            else:
                val = psi_stratum(law, self.t, self.u)
            mag = abs(val)
            if 1.0 - DEGENERATE_TOL > mag > 1.0 - self.c_floor:
                raise SmallnessViolation(
                    f"stratum {k}: |{self.kind}| = {mag!r} exceeds the smallness "
                    f"bound 1 - (delta^3/4) t^2 = {1.0 - self.c_floor!r} without "
                    "being degenerate"
                )
            self._cache[key] = val
        return val

    def __call__(self, k: int) -> complex:
        return self._value(self.env.stratum(k), k)

    def block(self, ks) -> np.ndarray:
        out = np.empty(len(ks), dtype=complex)
        for i, k in enumerate(ks):
            out[i] = self._value(self.env.stratum(int(k)), int(k))
        return out


@dataclass
class ChiEvaluation:
    t: float
    u: np.ndarray
    value: complex
    phi0: complex
    p_up: float
    chi_plus: EvalResult
    chi_minus: EvalResult
    f_plus: EvalResult | None
    f_minus: EvalResult | None
    vertical: str

    @property
    def tail_bound(self) -> float:
        """Truncation bound on |value| error (|phi_0| <= 1)."""
        return (
            self.p_up * self.chi_plus.tail_bound
            + (1.0 - self.p_up) * self.chi_minus.tail_bound
        )

    @property
    def f_value(self) -> complex | None:
        if self.f_plus is None or self.f_minus is None:
            return None
        return self.phi0 * (
            self.p_up * self.f_plus.value + (1.0 - self.p_up) * self.f_minus.value
        )


class ChiEvaluator:
    """Evaluates chi_D and the drift surrogates on one environment.

    Vertical transience (negative excursions escape with positive
    probability, the excursion transform no longer determines the walk)
    is refused; an undetermined vertical type proceeds and is flagged on
    the result.
    """

    def __init__(
        self,
        env: StratifiedEnvironment,
        tol: float = 1e-10,
        max_depth: int = 1_000_000,
        check_vertical: bool = True,
    ):
        self.env = env
        self.tol = tol
        self.max_depth = max_depth
        self.seq_plus = build(env)
        self.env_minus = reflect(env)
        self.seq_minus = build(self.env_minus)
        self.vertical = vertical_classification(self.seq_plus)
        if check_vertical and self.vertical == "Transient":
            raise ValueError(
                "vertical chain is transient; excursion transforms do not apply"
            )

    def _direction(self, u) -> np.ndarray:
        if u is None:
            return Direction.axis(self.env.d).u
        if isinstance(u, Direction):
            vec = u.u
        else:
            vec = Direction(u).u
        if vec.size != self.env.d:
            raise ValueError("direction dimension does not match the environment")
        return vec

    def evaluate(self, t: float, u=None, with_surrogate: bool = True) -> ChiEvaluation:
        if not 0.0 < t <= FREQ_WINDOW:
            raise ValueError(f"frequency t={t!r} outside (0, {FREQ_WINDOW}]")
        uv = self._direction(u)
        c_floor = 0.25 * self.env.delta**3 * t * t
        gp = _StratumWeights(self.env, t, uv, "phi", c_floor)
        gm = _StratumWeights(self.env_minus, t, uv, "phi", c_floor)
        chi_plus = weighted_excursion_gf(
            self.seq_plus, gp, tol=self.tol, max_depth=self.max_depth, gamma_block=gp.block
        )
        chi_minus = weighted_excursion_gf(
            self.seq_minus, gm, tol=self.tol, max_depth=self.max_depth, gamma_block=gm.block
        )
        f_plus = f_minus = None
        if with_surrogate:
            sp = _StratumWeights(self.env, t, uv, "psi", c_floor)
            sm = _StratumWeights(self.env_minus, t, uv, "psi", c_floor)
            f_plus = weighted_excursion_gf(
                self.seq_plus, sp, tol=self.tol, max_depth=self.max_depth, gamma_block=sp.block
            )
            f_minus = weighted_excursion_gf(
                self.seq_minus, sm, tol=self.tol, max_depth=self.max_depth, gamma_block=sm.block
            )
        law0 = self.env.stratum(0)
        p_up = law0.p / (law0.p + law0.q)
        phi0 = phi_stratum(law0, t, uv)
        value = phi0 * (p_up * chi_plus.value + (1.0 - p_up) * chi_minus.value)
        return ChiEvaluation(
            t=t,
            u=uv,
            value=value,
            phi0=phi0,
            p_up=p_up,
            chi_plus=chi_plus,
            chi_minus=chi_minus,
            f_plus=f_plus,
            f_minus=f_minus,
            vertical=self.vertical,
        )


def chi_D(
    env: StratifiedEnvironment,
    t: float,
    u=None,
    tol: float = 1e-10,
    max_depth: int = 1_000_000,
) -> complex:
    """chi_D(t u) alone, without the surrogate fractions."""
    ev = ChiEvaluator(env, tol=tol, max_depth=max_depth)
    return ev.evaluate(t, u, with_surrogate=False).value


def R_error(
    seq: SequenceSet,
    t: float,
    tol: float = 1e-10,
    max_depth: int = 1_000_000,
) -> tuple[float, float]:
    """Error-rate functionals R^+(t), R^-(t).

    R^+ is 1 minus the value of the walk-type fraction with the constant
    weight gamma = 1 - t^2 on the positive side; R^- uses the reflected
    environment.  They calibrate how fast the excursion fractions settle
    at frequency t.
    """
    if not 0.0 < t <= FREQ_WINDOW:
        raise ValueError(f"frequency t={t!r} outside (0, {FREQ_WINDOW}]")
    if vertical_classification(seq) == "Transient":
        raise ValueError(
            "vertical chain is transient; excursion transforms do not apply"
        )
    g = 1.0 - t * t
    out = []
    for s in (seq, build(reflect(seq.env))):
        res = weighted_excursion_gf(
            s,
            lambda k: g,
            tol=tol,
            max_depth=max_depth,
            gamma_block=lambda ks: np.full(np.shape(ks), g, dtype=complex),
        )
        if not res.converged:
            raise RuntimeError(
                f"constant-weight fraction did not converge within depth {max_depth}"
            )
        out.append(1.0 - res.value.real)
    return out[0], out[1]
