"""Monte Carlo oracles for the stratified walk.

Counter-based randomness (Philox) keyed by (seed, stream) so that
top-up batches and parallel experiments never share a stream.  The
walk at level n moves horizontally with probability r_n (jump drawn
from mu_n) and vertically otherwise (up with the embedded probability
p_n/(p_n + q_n) among vertical moves); an excursion from level 0 is
the path between two consecutive visits to 0, and its accumulated
horizontal displacement D has characteristic function chi_D.

Excursion sampling is vectorized over a batch of slots: at each
vertical step every active slot draws its geometric run of horizontal
moves, whose summed displacement is sampled in closed form per
horizontal-law class (binomial thinning), so the cost per vertical
step is O(active slots) numpy work.  Excursions exceeding the step cap
are discarded and counted; conditioning on completion biases the
empirical characteristic function by at most 2 f/(1 - f) in absolute
value, where f is the truncation frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import HorizontalLaw, StratifiedEnvironment

__all__ = [
    "make_rng",
    "WalkPath",
    "simulate",
    "ExcursionBatch",
    "sample_excursions",
    "empirical_chf",
    "gw_extinction_mc",
    "vertical_path",
    "collect_run_lengths",
    "transition_counts",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _MuSampler:
    """Draws from a horizontal law: cumulative search for small supports,
    alias table beyond 8 points."""

    def __init__(self, mu: HorizontalLaw):
        self.points = mu.points
        self.masses = mu.masses
        n = len(self.masses)
        if n <= 8:
            self._cum = np.cumsum(self.masses)
            self._cum[-1] = 1.0
            self._alias = None
        else:
            prob = np.array(self.masses) * n
            alias = np.zeros(n, dtype=np.int64)
            small = [i for i, v in enumerate(prob) if v < 1.0]
            large = [i for i, v in enumerate(prob) if v >= 1.0]
            while small and large:
                s, l = small.pop(), large.pop()
                alias[s] = l
                prob[l] -= 1.0 - prob[s]
                (small if prob[l] < 1.0 else large).append(l)
            self._alias = alias
            self._prob = np.clip(prob, 0.0, 1.0)

    def indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self._alias is None:
            return np.searchsorted(self._cum, rng.random(size), side="right")
        n = len(self._prob)
        i = rng.integers(0, n, size)
        keep = rng.random(size) < self._prob[i]
        return np.where(keep, i, self._alias[i])

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.points[self.indices(rng, size)]


def _law_kind(mu: HorizontalLaw):
    """Closed-form classification of the run-sum distribution."""
    pts, ms = mu.points, mu.masses
    if len(ms) == 1:
        return ("point", pts[0])
    if (
        len(ms) == 2
        and np.array_equal(pts[0], -pts[1])
        and abs(ms[0] - 0.5) <= 1e-12
    ):
        return ("pair", pts[0])
    return ("general", (pts, np.array(ms)))


def _run_sum(rng: np.random.Generator, kind, payload, g: np.ndarray) -> np.ndarray:
    """Summed displacement of g[i] i.i.d. horizontal jumps, per slot."""
    if kind == "point":
        return g[:, None] * payload
    if kind == "pair":
        b = rng.binomial(g, 0.5)
        return (2 * b - g)[:, None] * payload
    pts, ms = payload
    rem = g.astype(np.int64).copy()
    wrem = 1.0
    out = np.zeros((g.size, pts.shape[1]), dtype=np.int64)
    for j in range(len(ms) - 1):
        nj = rng.binomial(rem, min(ms[j] / wrem, 1.0))
        out += nj[:, None] * pts[j]
        rem -= nj
        wrem -= ms[j]
    out += rem[:, None] * pts[-1]
    return out


class _LevelParams:
    """Per-level cache of (r, up fraction, run-sum recipe)."""

    def __init__(self, env: StratifiedEnvironment):
        self.env = env
        self._cache: dict[int, tuple] = {}
        self._kinds: dict[int, tuple] = {}

    def get(self, n: int) -> tuple:
        got = self._cache.get(n)
        if got is None:
            law = self.env.stratum(n)
            kinds = self._kinds.get(id(law.mu))
            if kinds is None:
                kinds = _law_kind(law.mu)
                self._kinds[id(law.mu)] = kinds
            got = (law.r, law.p / (law.p + law.q), kinds[0], kinds[1])
            self._cache[n] = got
        return got


@dataclass
class ExcursionBatch:
    displacements: np.ndarray  # (n, d) completed excursion displacements
    steps: np.ndarray  # (n,) total steps per completed excursion
    truncated: int
    cap: int

    @property
    def truncated_fraction(self) -> float:
        total = len(self.steps) + self.truncated
        return self.truncated / total if total else 0.0

    @property
    def bias_bound(self) -> float:
        """|E e^{i<t u, D>} - conditional estimate| <= 2f/(1-f)."""
        f = self.truncated_fraction
        return 2.0 * f / (1.0 - f) if f < 1.0 else np.inf


class _ParamTable:
    """Stratum parameters on the band of visited levels.

    Slots move by +-1 from level 0, so the set of levels ever seen is a
    contiguous integer interval; rows are indexed by offset from its low
    end and a lookup is pure arithmetic.  General horizontal laws get a
    shared sampler per distinct law so run sums can be drawn law by law.
    """

    _KIND_CODE = {"point": 0, "pair": 1, "general": 2}

    def __init__(self, env, params: _LevelParams):
        self.env = env
        self.params = params
        self.lo: int | None = None
        self.r = np.empty(0)
        self.pf = np.empty(0)
        self.kind = np.empty(0, dtype=np.int64)
        self.pt = np.empty((0, env.d), dtype=np.int64)
        self.group = np.empty(0, dtype=np.int64)
        self.samplers: list[_MuSampler] = []
        self._law_group: dict[int, int] = {}

    def _build(self, levels):
        d = self.pt.shape[1]
        zero = np.zeros(d, dtype=np.int64)
        rr, pp, kk, tt, gg = [], [], [], [], []
        for val in levels:
            r, pf, kind, payload = self.params.get(int(val))
            code = self._KIND_CODE[kind]
            gid = -1
            if code == 2:
                gid = self._law_group.get(id(payload))
                if gid is None:
                    gid = len(self.samplers)
                    self.samplers.append(_MuSampler(self.env.stratum(int(val)).mu))
                    self._law_group[id(payload)] = gid
            rr.append(r)
            pp.append(pf)
            kk.append(code)
            tt.append(np.asarray(payload, dtype=np.int64) if code < 2 else zero)
            gg.append(gid)
        return (
            np.array(rr),
            np.array(pp),
            np.array(kk, dtype=np.int64),
            np.array(tt, dtype=np.int64).reshape(len(rr), d),
            np.array(gg, dtype=np.int64),
        )

    def _splice(self, parts, before: bool) -> None:
        names = ("r", "pf", "kind", "pt", "group")
        for name, new in zip(names, parts):
            old = getattr(self, name)
            pair = (new, old) if before else (old, new)
            setattr(self, name, np.concatenate(pair))

    def rows(self, lv: np.ndarray) -> np.ndarray:
        m, top = int(lv.min()), int(lv.max())
        if self.lo is None:
            self._splice(self._build(range(m, top + 1)), before=False)
            self.lo = m
        else:
            if m < self.lo:
                self._splice(self._build(range(m, self.lo)), before=True)
                self.lo = m
            hi = self.lo + self.r.size
            if top >= hi:
                self._splice(self._build(range(hi, top + 1)), before=False)
        return lv - self.lo


def _excursion_slots(env, params, n_slots, rng, cap):
    d = env.d
    table = _ParamTable(env, params)
    level = np.zeros(n_slots, dtype=np.int64)
    disp = np.zeros((n_slots, d), dtype=np.int64)
    steps = np.zeros(n_slots, dtype=np.int64)
    out_d, out_s = [], []
    trunc = 0
    while level.size:
        li = table.rows(level)
        g = rng.geometric(1.0 - table.r[li]) - 1
        kinds = table.kind[li]
        pnt = kinds == 0
        if pnt.any():
            disp[pnt] += table.pt[li[pnt]] * g[pnt, None]
        pair = kinds == 1
        if pair.any():
            b = rng.binomial(g[pair], 0.5)
            disp[pair] += table.pt[li[pair]] * (2 * b - g[pair])[:, None]
        gen = np.flatnonzero(kinds == 2)
        if gen.size:
            grp = table.group[li[gen]]
            for gid in np.unique(grp):
                m = gen[grp == gid]
                gm = g[m]
                pos = gm > 0
                if not pos.any():
                    continue
                gp = gm[pos]
                jumps = table.samplers[gid].draw(rng, int(gp.sum()))
                starts = np.concatenate([[0], np.cumsum(gp[:-1])])
                disp[m[pos]] += np.add.reduceat(jumps, starts, axis=0)
        steps += g + 1
        up = rng.random(level.size) < table.pf[li]
        level += np.where(up, 1, -1)
        fin = level == 0
        over = ~fin & (steps > cap)
        if fin.any():
            out_d.append(disp[fin])
            out_s.append(steps[fin])
        trunc += int(np.count_nonzero(over))
        keep = ~fin & ~over
        if not keep.all():
            level = level[keep]
            disp = disp[keep]
            steps = steps[keep]
    dd = np.concatenate(out_d) if out_d else np.zeros((0, d), dtype=np.int64)
    ss = np.concatenate(out_s) if out_s else np.zeros(0, dtype=np.int64)
    return dd, ss, trunc


def sample_excursions(
    env: StratifiedEnvironment,
    n: int,
    seed: int = 0,
    cap: int = 100_000,
    max_batches: int = 64,
) -> ExcursionBatch:
    """Collect n completed excursions, topping up truncated slots from
    fresh streams."""
    params = _LevelParams(env)
    all_d, all_s = [], []
    have = 0
    trunc = 0
    for batch in range(max_batches):
        need = n - have
        if need <= 0:
            break
        rng = make_rng(seed, stream=batch)
        dd, ss, tr = _excursion_slots(env, params, need, rng, cap)
        trunc += tr
        all_d.append(dd)
        all_s.append(ss)
        have += len(ss)
    if have < n:
        raise RuntimeError(
            f"collected only {have}/{n} excursions in {max_batches} batches; "
            "raise the cap or the batch limit"
        )
    return ExcursionBatch(
        displacements=np.concatenate(all_d),
        steps=np.concatenate(all_s),
        truncated=trunc,
        cap=cap,
    )


def empirical_chf(displacements: np.ndarray, t: float, u) -> tuple[complex, float]:
    """Empirical characteristic function at frequency t u, with its
    standard error sqrt((var Re + var Im)/N)."""
    uv = np.asarray(u, dtype=float).reshape(-1)
    z = np.exp(1j * t * (displacements @ uv))
    n = len(z)
    if n < 2:
        raise ValueError("need at least two samples")
    val = complex(z.mean())
    stderr = float(np.sqrt((z.real.var(ddof=1) + z.imag.var(ddof=1)) / n))
    return val, stderr


def gw_extinction_mc(
    p_up: float,
    generations: int = 64,
    reps: int = 1_000_000,
    seed: int = 0,
    cap: int = 1_000_000,
) -> tuple[float, float]:
    """Extinction frequency of the embedded branching count.

    Homogeneous vertical chain with up-probability p_up: generation
    sizes follow Z_{g+1} = sum of Z_g i.i.d. Geometric_0 offspring with
    success probability 1 - p_up, drawn as a negative binomial.  Lines
    exceeding the cap are retired as survivors.  Returns (extinct
    fraction, binomial standard error).
    """
    if not 0.0 < p_up < 1.0:
        raise ValueError("p_up must lie in (0, 1)")
    rng = make_rng(seed, stream=0)
    z = np.ones(reps, dtype=np.int64)
    for _ in range(generations):
        act = (z > 0) & (z <= cap)
        if not np.any(act):
            break
        z[act] = rng.negative_binomial(z[act], 1.0 - p_up)
        z[z > cap] = cap + 1
    f = float(np.mean(z == 0))
    return f, float(np.sqrt(f * (1.0 - f) / reps))


@dataclass
class WalkPath:
    x: np.ndarray  # (steps+1, d) horizontal component
    level: np.ndarray  # (steps+1,) vertical component
    horizontal: np.ndarray  # (steps,) True where the step was horizontal


def simulate(
    env: StratifiedEnvironment,
    steps: int,
    seed: int = 0,
    start_level: int = 0,
) -> WalkPath:
    """Step-by-step trajectory of the full walk."""
    rng = make_rng(seed, stream=1)
    d = env.d
    xs = np.zeros((steps + 1, d), dtype=np.int64)
    lv = np.zeros(steps + 1, dtype=np.int64)
    lv[0] = start_level
    hor = np.zeros(steps, dtype=bool)
    samplers: dict[int, _MuSampler] = {}
    laws: dict[int, tuple] = {}
    buf = np.empty(0)
    pos = 0
    for i in range(steps):
        n = int(lv[i])
        got = laws.get(n)
        if got is None:
            law = env.stratum(n)
            smp = samplers.get(id(law.mu))
            if smp is None:
                smp = _MuSampler(law.mu)
                samplers[id(law.mu)] = smp
            got = (law.r, law.r + law.p, smp)
            laws[n] = got
        if pos >= buf.size:
            buf = rng.random(4096)
            pos = 0
        uu = buf[pos]
        pos += 1
        r, rp, smp = got
        if uu < r:
            xs[i + 1] = xs[i] + smp.draw(rng, 1)[0]
            lv[i + 1] = n
            hor[i] = True
        elif uu < rp:
            xs[i + 1] = xs[i]
            lv[i + 1] = n + 1
        else:
            xs[i + 1] = xs[i]
            lv[i + 1] = n - 1
    return WalkPath(x=xs, level=lv, horizontal=hor)


def vertical_path(
    env: StratifiedEnvironment,
    seed: int = 0,
    cap: int = 1_000_000,
    first_step: int = 1,
) -> np.ndarray:
    """Levels of one vertical excursion from 0 (first step forced).

    Only vertical moves are simulated (horizontal rounds do not change
    the level).  Returns the level sequence including both endpoints.
    """
    if first_step not in (1, -1):
        raise ValueError("first_step must be +1 or -1")
    rng = make_rng(seed, stream=2)
    levels = [0, first_step]
    n = first_step
    pf: dict[int, float] = {}
    for _ in range(cap):
        if n == 0:
            return np.array(levels, dtype=np.int64)
        f = pf.get(n)
        if f is None:
            law = env.stratum(n)
            f = law.p / (law.p + law.q)
            pf[n] = f
        n += 1 if rng.random() < f else -1
        levels.append(n)
    raise RuntimeError(f"excursion did not close within {cap} vertical steps")


def collect_run_lengths(horizontal: np.ndarray) -> np.ndarray:
    """Lengths of horizontal runs terminated by each vertical step."""
    flags = np.asarray(horizontal, dtype=bool)
    vidx = np.flatnonzero(~flags)
    return np.diff(np.concatenate([[-1], vidx])) - 1


def transition_counts(path: WalkPath) -> dict[int, np.ndarray]:
    """Per-level counts of (horizontal, up, down) moves along a path."""
    lv = path.level[:-1]
    dlv = np.diff(path.level)
    typ = np.where(path.horizontal, 0, np.where(dlv > 0, 1, 2))
    out: dict[int, np.ndarray] = {}
    uniq, inv = np.unique(lv, return_inverse=True)
    acc = np.zeros((uniq.size, 3), dtype=np.int64)
    np.add.at(acc, (inv, typ), 1)
    for i, val in enumerate(uniq):
        out[int(val)] = acc[i]
    return out
