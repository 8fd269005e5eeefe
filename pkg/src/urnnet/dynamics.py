"""The two-phase urn process: sampling and balanced reinforcement.

Each step, every urn draws s balls (with or without replacement) from itself
with probability p, otherwise from a uniformly chosen in-neighbour, and the
drawn colour counts trigger reinforcement of the urn itself, its
out-neighbours, or both. Ball counts are exact 64-bit integers; fractions
are derived on demand, so trajectories accumulate no floating-point drift.
Totals are deterministic: T_t(i) = T_0(i) + C*s*omega_i*t.

Replicas are simulated in lock-step as (replicas, n) integer arrays. All
randomness is consumed from a single numpy Generator in a fixed
(step, urn-block) order, so results are bit-reproducible for a given
(seed, config, graph, replicas) regardless of the snapshot schedule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError
from .graphs import GraphSpec, matrices

__all__ = [
    "ModelConfig",
    "DerivedParams",
    "UrnState",
    "DrawOutcome",
    "Trajectory",
    "EnsembleTrajectories",
    "MODEL_CODES",
    "derive_params",
    "initial_state",
    "sample_step",
    "draw_batch",
    "expected_chi",
    "reinforce",
    "run",
    "simulate_ensemble",
    "parse_schedule",
]

SCHEMES = ("polya", "friedman")
NEIGHBOURHOODS = ("self", "neighbour", "self_and_neighbour")

MODEL_CODES = {
    "ptsr": ("polya", "self"),
    "ptnr": ("polya", "neighbour"),
    "ptsnr": ("polya", "self_and_neighbour"),
    "ftsr": ("friedman", "self"),
    "ftnr": ("friedman", "neighbour"),
    "ftsnr": ("friedman", "self_and_neighbour"),
}

# Uniform blocks are pre-generated for this many steps at a time (capped so a
# block stays small); the cap depends only on (replicas, n, s), never on the
# schedule, which keeps the stream layout reproducible.
_BLOCK_BUDGET = 4_000_000


@dataclass(frozen=True)
class ModelConfig:
    """Model choice plus initial composition.

    T0 and W0 are per-urn vectors; every urn must start with at least one
    ball of each colour. Sampling without replacement additionally requires
    s <= min(T0) (totals only grow, so the condition holds for all t).
    """

    scheme: str
    neighbourhood: str
    p: float
    s: int
    C: int
    sampling: str
    T0: np.ndarray
    W0: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.neighbourhood not in NEIGHBOURHOODS:
            raise ConfigError(f"unknown neighbourhood {self.neighbourhood!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p={self.p} outside [0, 1]")
        if self.s < 1 or self.C < 1:
            raise ConfigError("s and C must be positive integers")
        if self.sampling not in ("with", "without"):
            raise ConfigError(f"sampling must be 'with' or 'without', got {self.sampling!r}")
        T0 = np.atleast_1d(np.asarray(self.T0, dtype=np.int64))
        W0 = np.atleast_1d(np.asarray(self.W0, dtype=np.int64))
        if T0.shape != W0.shape:
            raise ConfigError("T0 and W0 must have the same length")
        if np.any(W0 <= 0) or np.any(W0 >= T0):
            raise ConfigError("need 0 < W0_i < T0_i: each urn starts with both colours")
        if self.sampling == "without" and self.s > int(T0.min()):
            raise ConfigError(f"sampling without replacement needs s <= min(T0) = {int(T0.min())}")
        object.__setattr__(self, "T0", T0)
        object.__setattr__(self, "W0", W0)

    @classmethod
    def from_code(cls, code: str, *, p, s, C, t0, w0, n, sampling="with", seed=0):
        """Build from a four-letter model code, broadcasting scalar t0/w0."""
        code = code.lower()
        if code not in MODEL_CODES:
            raise ConfigError(f"unknown model code {code!r}")
        scheme, neigh = MODEL_CODES[code]
        T0 = np.full(n, t0, dtype=np.int64) if np.isscalar(t0) else np.asarray(t0, np.int64)
        W0 = np.full(n, w0, dtype=np.int64) if np.isscalar(w0) else np.asarray(w0, np.int64)
        return cls(scheme, neigh, float(p), int(s), int(C), sampling, T0, W0, int(seed))

    @property
    def model_code(self) -> str:
        for code, pair in MODEL_CODES.items():
            if pair == (self.scheme, self.neighbourhood):
                return code
        raise AssertionError

    @property
    def is_friedman(self) -> bool:
        return self.scheme == "friedman"

    @property
    def uniform_t0(self) -> bool:
        return bool(np.all(self.T0 == self.T0[0]))


@dataclass(frozen=True)
class DerivedParams:
    """Reinforcement switches eta/kappa and per-urn total growth omega."""

    eta: int
    kappa: int
    omega: np.ndarray


def derive_params(cfg: ModelConfig, g: GraphSpec) -> DerivedParams:
    """eta/kappa per neighbourhood mode; omega_i in {1, d_i, d_i + 1}.

    Degrees are in-degrees on directed graphs (reinforcement arrives from
    in-neighbours, one packet per incoming edge).
    """
    _, deg = matrices(g)
    deg = deg.astype(np.int64)
    if cfg.neighbourhood == "self":
        return DerivedParams(1, 0, np.ones(g.n, np.int64))
    if cfg.neighbourhood == "neighbour":
        return DerivedParams(0, 1, deg)
    return DerivedParams(1, 1, deg + 1)


@dataclass(frozen=True)
class UrnState:
    """Integer ball counts at one time step; Z is derived, never stored."""

    t: int
    W: np.ndarray
    T: np.ndarray

    @property
    def Z(self) -> np.ndarray:
        return self.W / self.T


@dataclass(frozen=True)
class DrawOutcome:
    source: np.ndarray  # urn each sample was drawn from
    Y: np.ndarray       # white balls in each sample
    chi: np.ndarray     # Y for Polya, s - Y for Friedman


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray   # (K,)
    Z: np.ndarray       # (K, n)
    W: np.ndarray       # (K, n) int64
    T: np.ndarray       # (K, n) int64


@dataclass(frozen=True)
class EnsembleTrajectories:
    times: np.ndarray   # (K,)
    Z: np.ndarray       # (K, R, n)
    W: np.ndarray       # (K, R, n) int64
    T: np.ndarray       # (K, n) int64, identical across replicas


def initial_state(cfg: ModelConfig, g: GraphSpec) -> UrnState:
    if len(cfg.T0) != g.n:
        raise ConfigError(f"config is for {len(cfg.T0)} urns, graph has {g.n}")
    return UrnState(t=0, W=cfg.W0.copy(), T=cfg.T0.copy())


class _SimTables:
    """Per-graph lookup tables shared by every step of a run."""

    def __init__(self, cfg: ModelConfig, g: GraphSpec):
        A, deg = matrices(g)
        self.A_int = A.astype(np.int64)
        self.deg = deg.astype(np.int64)
        lists = [np.flatnonzero(A[:, j]) for j in range(g.n)]
        self.nbr_flat = np.concatenate(lists)
        self.nbr_off = np.concatenate([[0], np.cumsum([len(l) for l in lists])])[:-1]
        dp = derive_params(cfg, g)
        self.eta, self.kappa, self.omega = dp.eta, dp.kappa, dp.omega
        self.idx = np.arange(g.n)


def _draw_sources_Y(W2, T1, cfg, tab, coin, pick, draws):
    """Vectorised sampling phase on a (R, n) state block.

    coin decides self vs neighbour, pick selects the in-neighbour, and the s
    uniforms in draws realise the sample as sequential Bernoulli comparisons:
    with replacement the urn composition is held fixed, without replacement
    drawn balls are removed between comparisons (exact hypergeometric).
    """
    src = np.where(coin < cfg.p, tab.idx[None, :],
                   tab.nbr_flat[tab.nbr_off[None, :] + (pick * tab.deg[None, :]).astype(np.int64)])
    Wsrc = np.take_along_axis(W2, src, axis=1)
    Tsrc = T1[src]
    if cfg.sampling == "with":
        Y = (draws < (Wsrc / Tsrc)[..., None]).sum(axis=-1, dtype=np.int64)
    else:
        w_rem = Wsrc.astype(np.float64)
        t_rem = Tsrc.astype(np.float64)
        Y = np.zeros(W2.shape, np.int64)
        for k in range(cfg.s):
            take = draws[..., k] < (w_rem / t_rem)
            Y += take
            w_rem -= take
            t_rem -= 1.0
    return src, Y


def _chi(Y, cfg):
    return Y if cfg.scheme == "polya" else cfg.s - Y


def sample_step(state: UrnState, cfg: ModelConfig, g: GraphSpec, rng) -> DrawOutcome:
    """One sampling phase from a fixed state (no reinforcement applied)."""
    src, Y, chi = draw_batch(state, cfg, g, rng, 1)
    return DrawOutcome(source=src[0], Y=Y[0], chi=chi[0])


def draw_batch(state: UrnState, cfg: ModelConfig, g: GraphSpec, rng, ndraws: int):
    """ndraws independent sampling phases from one fixed state.

    Returns (source, Y, chi), each of shape (ndraws, n). Used for Monte
    Carlo checks of the conditional reinforcement mean.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    tab = _SimTables(cfg, g)
    n = g.n
    W2 = np.broadcast_to(state.W, (ndraws, n))
    coin = rng.random((ndraws, n))
    pick = rng.random((ndraws, n))
    draws = rng.random((ndraws, n, cfg.s))
    src, Y = _draw_sources_Y(W2, state.T, cfg, tab, coin, pick, draws)
    return src, Y, _chi(Y, cfg)


def expected_chi(state: UrnState, cfg: ModelConfig, g: GraphSpec) -> np.ndarray:
    """Conditional mean of chi given the state; same for both sampling modes."""
    A, deg = matrices(g)
    Z = state.Z
    mix = cfg.p * Z + (1.0 - cfg.p) * (Z @ (A / deg[None, :]))
    if cfg.scheme == "polya":
        return cfg.s * mix
    return cfg.s * (1.0 - mix)


def reinforce(state: UrnState, out: DrawOutcome, cfg: ModelConfig, g: GraphSpec) -> UrnState:
    """Apply one balanced reinforcement: integer-exact ball accounting."""
    tab = _SimTables(cfg, g)
    add = tab.eta * out.chi + tab.kappa * (out.chi @ tab.A_int)
    W = state.W + cfg.C * add
    T = state.T + cfg.C * cfg.s * tab.omega
    return UrnState(t=state.t + 1, W=W, T=T)


def parse_schedule(schedule, steps: int) -> np.ndarray:
    """Snapshot times: 'all', 'geometric(r)' / ('geometric', r), or a list.

    Always includes t=0 and t=steps. Default is geometric(1.2).
    """
    if schedule is None:
        schedule = ("geometric", 1.2)
    if isinstance(schedule, str):
        txt = schedule.strip().lower()
        if txt == "all":
            return np.arange(steps + 1)
        if txt.startswith("geometric"):
            inner = txt[len("geometric"):].strip("():")
            schedule = ("geometric", float(inner) if inner else 1.2)
        else:
            schedule = [int(x) for x in txt.replace(",", " ").split()]
    if isinstance(schedule, tuple) and schedule and schedule[0] == "geometric":
        r = float(schedule[1])
        if r <= 1.0:
            raise ConfigError("geometric schedule ratio must exceed 1")
        ts = {0, steps}
        t = 1.0
        while t <= steps:
            ts.add(int(t))
            t *= r
        return np.array(sorted(ts))
    ts = sorted(set(int(t) for t in schedule) | {0, steps})
    if ts[0] < 0 or ts[-1] > steps:
        raise ConfigError("schedule times must lie in [0, steps]")
    return np.array(ts)


def simulate_ensemble(cfg: ModelConfig, g: GraphSpec, steps: int,
                      schedule=None, replicas: int = 1,
                      rng: Union[None, int, np.random.Generator] = None,
                      ) -> EnsembleTrajectories:
    """Run `replicas` independent copies of the process in lock-step.

    Every replica starts from (W0, T0) and owns an independent slice of the
    random stream at each step. Snapshots of (W, T, Z) are taken at the
    scheduled times.
    """
    if replicas < 1:
        raise ConfigError("need at least one replica")
    if rng is None:
        rng = cfg.seed
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    n = g.n
    if len(cfg.T0) != n:
        raise ConfigError(f"config is for {len(cfg.T0)} urns, graph has {g.n}")
    tab = _SimTables(cfg, g)
    times = parse_schedule(schedule, steps)
    snap_at = {int(t): i for i, t in enumerate(times)}

    W = np.tile(cfg.W0, (replicas, 1))
    T = cfg.T0.copy()
    dT = cfg.C * cfg.s * tab.omega

    K = len(times)
    Zs = np.empty((K, replicas, n))
    Ws = np.empty((K, replicas, n), np.int64)
    Ts = np.empty((K, n), np.int64)

    def snapshot(t):
        i = snap_at[t]
        Zs[i] = W / T
        Ws[i] = W
        Ts[i] = T

    if 0 in snap_at:
        snapshot(0)

    block = max(1, min(128, _BLOCK_BUDGET // max(1, replicas * n * (2 + cfg.s))))
    t = 0
    while t < steps:
        b = min(block, steps - t)
        coin = rng.random((b, replicas, n))
        pick = rng.random((b, replicas, n))
        draws = rng.random((b, replicas, n, cfg.s))
        for j in range(b):
            src, Y = _draw_sources_Y(W, T, cfg, tab, coin[j], pick[j], draws[j])
            chi = _chi(Y, cfg)
            add = tab.eta * chi + tab.kappa * (chi @ tab.A_int)
            W += cfg.C * add
            T = T + dT
            t += 1
            if t in snap_at:
                snapshot(t)
    return EnsembleTrajectories(times=times, Z=Zs, W=Ws, T=Ts)


def run(cfg: ModelConfig, g: GraphSpec, steps: int, schedule=None, rng=None) -> Trajectory:
    """Single-replica trajectory with scheduled snapshots."""
    if steps < 0:
        raise ConfigError("steps must be >= 0")
    if steps == 0:
        st = initial_state(cfg, g)
        return Trajectory(times=np.array([0]), Z=st.Z[None, :],
                          W=st.W[None, :], T=st.T[None, :])
    ens = simulate_ensemble(cfg, g, steps, schedule=schedule, replicas=1, rng=rng)
    K = len(ens.times)
    Tfull = ens.T
    return Trajectory(times=ens.times, Z=ens.Z[:, 0, :], W=ens.W[:, 0, :], T=Tfull)
