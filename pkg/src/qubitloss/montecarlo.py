"""Monte Carlo estimate of the logical failure rate under random loss and leakage.

Time runs in abstract cycles. In every cycle each present, unleaked atom is
lost with probability ``p_loss`` or, failing that, leaks with probability
``p_leak`` to one of the six non-qubit sublevels. Every ``sweep_period``
cycles (and after the last cycle) a QND sweep looks at the register:

* no erasure: nothing to do;
* one erasure: refill / return the atom and run the recovery circuit;
* two or more: the 4-qubit code cannot recover, the trial is marked failed.

Random streams: trial ``i`` of a run with master seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(i,)))``, so results do
not depend on how trials are split across workers. Every cycle consumes the
same number of draws whether or not events happen.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .correction import MeasurementMode, correct_after_loss
from .errors import DomainError, ValidationError
from .gbp import LogicalQubit, logical_state
from .leakage import LEAKED_LEVELS, LevelLabel, handle_leak
from .loss import apply_loss, compensate_qnd_phase, insert_fresh, qnd_phase, qnd_sweep
from .qstate import DensityMatrix, PureState, fidelity

N_SITES = 4


@dataclass(frozen=True)
class Event:
    cycle: int
    site: int
    kind: str  # "loss" or "leak"
    level: LevelLabel | None = None

    def __post_init__(self):
        if self.kind not in ("loss", "leak"):
            raise ValidationError(f"event kind must be 'loss' or 'leak', got {self.kind!r}")
        if not 1 <= self.site <= N_SITES:
            raise DomainError(f"site {self.site} out of range 1..{N_SITES}")
        if self.kind == "leak" and self.level is not None and self.level.is_qubit:
            raise ValidationError("a leak must end in a non-qubit level")


@dataclass(frozen=True)
class TrialConfig:
    p_loss: float = 0.0
    p_leak: float = 0.0
    cycles: int = 1
    sweep_period: int = 1
    seed: int = 0
    c0: complex = 1.0
    c1: complex = 0.0
    mode: str = MeasurementMode.PROJECTIVE.value
    qnd_phase: float = 0.0
    forced: tuple[Event, ...] = ()

    def __post_init__(self):
        for name in ("p_loss", "p_leak"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {p}")
        if self.cycles < 1:
            raise ValidationError(f"cycles must be >= 1, got {self.cycles}")
        if self.sweep_period < 1:
            raise ValidationError(f"sweep_period must be >= 1, got {self.sweep_period}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        MeasurementMode(self.mode)
        LogicalQubit(self.c0, self.c1)
        object.__setattr__(self, "forced", tuple(self.forced))

    def logical(self) -> LogicalQubit:
        return LogicalQubit(self.c0, self.c1)


@dataclass(frozen=True)
class TrialResult:
    failed: bool
    n_losses: int
    n_leaks: int
    n_corrections: int
    final_fidelity: float
    events: tuple[Event, ...] = field(default=(), repr=False)


@functools.lru_cache(maxsize=8)
def _encoded(ref: PureState) -> DensityMatrix:
    return ref.density()


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _sweep_due(cfg: TrialConfig, cycle: int) -> bool:
    return (cycle + 1) % cfg.sweep_period == 0 or cycle == cfg.cycles - 1


def _refill(rho: DensityMatrix | None, vacant: list[int], leaked: list[int]) -> DensityMatrix:
    """Put fresh |0> atoms on every vacant and leaked site."""
    if rho is None:
        return DensityMatrix.basis("0" * N_SITES)
    for site in vacant:
        rho = insert_fresh(rho, site)
    for site in leaked:
        rho = insert_fresh(apply_loss(rho, site), site)
    return rho


def run_trial(cfg: TrialConfig, trial: int = 0, reference: PureState | None = None) -> TrialResult:
    """Simulate one logical qubit through ``cfg.cycles`` cycles."""
    rng = trial_rng(cfg.seed, trial)
    ref = logical_state(cfg.logical()) if reference is None else reference
    rho = _encoded(ref)
    forced = {(e.cycle, e.site): e for e in cfg.forced}

    present = {s: True for s in range(1, N_SITES + 1)}
    leaked: dict[int, LevelLabel] = {}
    events: list[Event] = []
    n_corrections = 0
    failed = False

    for cycle in range(cfg.cycles):
        u_loss = rng.random(N_SITES)
        u_leak = rng.random(N_SITES)
        which = rng.integers(len(LEAKED_LEVELS), size=N_SITES)
        for site in range(1, N_SITES + 1):
            if not present[site] or site in leaked:
                continue
            ev = forced.get((cycle, site))
            if ev is None:
                if u_loss[site - 1] < cfg.p_loss:
                    ev = Event(cycle, site, "loss")
                elif u_leak[site - 1] < cfg.p_leak:
                    ev = Event(cycle, site, "leak", LEAKED_LEVELS[which[site - 1]])
            elif ev.kind == "leak" and ev.level is None:
                ev = Event(cycle, site, "leak", LEAKED_LEVELS[which[site - 1]])
            if ev is None:
                continue
            events.append(ev)
            if ev.kind == "loss":
                # losing the last atom leaves nothing to hold a state
                rho = None if rho is None or rho.n_qubits == 1 else apply_loss(rho, site)
                present[site] = False
            else:
                leaked[site] = ev.level

        if not _sweep_due(cfg, cycle):
            continue
        vacant = [e.site for e in qnd_sweep(present)]
        if cfg.qnd_phase:
            rho = compensate_qnd_phase(qnd_phase(rho, cfg.qnd_phase), cfg.qnd_phase)
        erased = sorted(vacant + list(leaked))
        if len(erased) >= 2:
            # more erasures than the code can take: refill and stop
            rho = _refill(rho, vacant, list(leaked))
            failed = True
            break
        if erased:
            (site,) = erased
            if site in leaked:
                rho, _ = handle_leak(rho, site, leaked[site])
            else:
                rho = insert_fresh(rho, site)
            outcome = correct_after_loss(rho.with_sites(None), site, cfg.mode, rng=rng)
            rho = outcome.output.with_sites(None)
            n_corrections += 1
        present = {s: True for s in present}
        leaked = {}

    return TrialResult(
        failed=failed,
        n_losses=sum(e.kind == "loss" for e in events),
        n_leaks=sum(e.kind == "leak" for e in events),
        n_corrections=n_corrections,
        final_fidelity=fidelity(rho.with_sites(None), ref),
        events=tuple(events),
    )


@dataclass(frozen=True)
class FailureEstimate:
    p_fail_hat: float
    stderr: float
    n_trials: int
    n_failed: int


def _run_block(cfg: TrialConfig, start: int, stop: int) -> list[TrialResult]:
    ref = logical_state(cfg.logical())
    return [run_trial(cfg, i, ref) for i in range(start, stop)]


def run_trials(cfg: TrialConfig, n_trials: int, n_jobs: int = 1) -> list[TrialResult]:
    """All trial results in trial order; ``n_jobs > 1`` spreads blocks over processes."""
    if n_trials < 1:
        raise ValidationError(f"n_trials must be >= 1, got {n_trials}")
    if n_jobs <= 1:
        return _run_block(cfg, 0, n_trials)
    bounds = np.linspace(0, n_trials, n_jobs + 1).astype(int)
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        futures = [pool.submit(_run_block, cfg, a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        return [r for f in futures for r in f.result()]


def summarize(results: list[TrialResult]) -> FailureEstimate:
    n = len(results)
    k = sum(r.failed for r in results)
    p = k / n
    return FailureEstimate(p, math.sqrt(p * (1 - p) / n), n, k)


def estimate_failure(cfg: TrialConfig, n_trials: int, n_jobs: int = 1) -> FailureEstimate:
    """Fraction of failed trials with its binomial standard error."""
    return summarize(run_trials(cfg, n_trials, n_jobs))


def interval_failure_probability(q: float, n: int = N_SITES) -> float:
    """P(at least two of ``n`` sites erased) when each is erased independently with prob ``q``."""
    return 1 - (1 - q) ** n - n * q * (1 - q) ** (n - 1)


def analytic_failure(cfg: TrialConfig) -> float:
    """Closed-form trial failure probability for ideal operations."""
    per_cycle = cfg.p_loss + (1 - cfg.p_loss) * cfg.p_leak
    survive = 1.0
    start = 0
    while start < cfg.cycles:
        length = min(cfg.sweep_period, cfg.cycles - start)
        q = 1 - (1 - per_cycle) ** length
        survive *= 1 - interval_failure_probability(q)
        start += length
    return 1 - survive
