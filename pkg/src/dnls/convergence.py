"""Cross-box-size approximation experiments and uniqueness diagnostics.

Two trajectories started from truncations of one Z^d sample to nested
boxes agree on the overlap at t=0 and start to disagree as differences
propagate inward from where the periodic wraps differ.  The sweep runs
pairs of consecutive box sizes, measures the supremum-in-time disagreement
on a fixed observation window, and fits the exponential decay base: beyond
a threshold the disagreement drops below 2^-L.

Sites are identified across lattices by their literal coordinates; the
observation window is contained in both boxes as-is.

Sweeps default to the RK4/stencil scheme: its arithmetic at a window site
is a pure function of values in the site's dependency cone, so the only
source of disagreement is the genuine boundary signal.  An FFT-based step
mixes rounding noise from the whole box into every site, which floors the
measurable decay near 1e-14.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import BlowUpError, SchemeConfig, Trajectory, integrate
from .hopping import HoppingPotential
from .lattice import InitialDataGenerator, LatticeShape, truncate


def _require_common_grid(a: Trajectory, b: Trajectory) -> None:
    if len(a.times) != len(b.times) or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories do not share a time grid")


def _window_slices(shape: LatticeShape, k: int) -> tuple[slice, ...]:
    if k > shape.L:
        raise ValueError(f"window half-width {k} exceeds box half-width {shape.L}")
    return (slice(shape.L - k, shape.L + k + 1),) * shape.d


def pointwise_disagreement(
    traj_big: Trajectory,
    traj_small: Trajectory,
    x: Sequence[int],
    t: float,
) -> float:
    """max over grid times s <= t of |psi_s^big(x) - psi_s^small(x)|."""
    _require_common_grid(traj_big, traj_small)
    if traj_big.shape.L <= traj_small.shape.L:
        raise ValueError("first trajectory must live on the larger box")
    site = traj_small.shape.require_site(x)
    m = traj_small.time_index(t)
    big_idx = traj_big.shape.index(site)
    small_idx = traj_small.shape.index(site)
    best = 0.0
    for j in range(m + 1):
        diff = abs(traj_big.snapshots[j].values[big_idx] - traj_small.snapshots[j].values[small_idx])
        best = max(best, float(diff))
    return best


def window_disagreement(
    traj_big: Trajectory,
    traj_small: Trajectory,
    k: int,
    t: float,
) -> float:
    """Supremum of pointwise disagreement over the centered window of half-width k."""
    _require_common_grid(traj_big, traj_small)
    if traj_big.shape.L <= traj_small.shape.L:
        raise ValueError("first trajectory must live on the larger box")
    big_sl = _window_slices(traj_big.shape, k)
    small_sl = _window_slices(traj_small.shape, k)
    m = traj_small.time_index(t)
    best = 0.0
    for j in range(m + 1):
        diff = np.abs(traj_big.snapshots[j].values[big_sl] - traj_small.snapshots[j].values[small_sl])
        best = max(best, float(diff.max()))
    return best


def drift(traj: Trajectory, t: float) -> float:
    """max over grid s <= t and sites of |psi_s(x) - psi_0(x)|."""
    m = traj.time_index(t)
    base = traj.snapshots[0].values
    best = 0.0
    for j in range(m + 1):
        best = max(best, float(np.max(np.abs(traj.snapshots[j].values - base))))
    return best


def scheme_disagreement(
    traj_a: Trajectory,
    traj_b: Trajectory,
    n: int,
    ell: int,
    t: float | None = None,
) -> float:
    """Two-scheme discrepancy sup over |x|_inf <= 2*n*ell and grid s <= t.

    Both trajectories must share the lattice, the grid, and the initial
    snapshot; the window radius is capped at the box half-width.
    """
    if traj_a.shape != traj_b.shape:
        raise ValueError("trajectories live on different lattices")
    _require_common_grid(traj_a, traj_b)
    if not np.array_equal(traj_a.snapshots[0].values, traj_b.snapshots[0].values):
        raise ValueError("trajectories start from different fields")
    if n < 0 or ell < 1:
        raise ValueError("need n >= 0 and ell >= 1")
    if t is None:
        t = float(traj_a.times[-1])
    radius = min(2 * n * ell, traj_a.shape.L)
    sl = _window_slices(traj_a.shape, radius)
    m = traj_a.time_index(t)
    best = 0.0
    for j in range(m + 1):
        diff = np.abs(traj_a.snapshots[j].values[sl] - traj_b.snapshots[j].values[sl])
        best = max(best, float(diff.max()))
    return best


@dataclass(frozen=True)
class SweepConfig:
    """One Z^d sample run at a list of box sizes with a shared scheme."""

    generator: InitialDataGenerator
    L_list: tuple[int, ...]
    k: int
    scheme: SchemeConfig

    def __post_init__(self) -> None:
        ls = tuple(int(v) for v in self.L_list)
        if not ls or any(b <= a for a, b in zip(ls, ls[1:])):
            raise ValueError("L_list must be nonempty and strictly increasing")
        if not (0 <= self.k <= min(ls)):
            raise ValueError(f"window half-width {self.k} must be <= min(L_list)")
        object.__setattr__(self, "L_list", ls)


@dataclass(frozen=True)
class SweepEntry:
    L: int
    delta_bar: float
    drift: float
    runtime: float
    error: str | None = None


@dataclass(frozen=True)
class DisagreementReport:
    entries: tuple[SweepEntry, ...]
    fit_A: float | None
    fit_L0: int | None
    flagged: bool

    def as_dict(self) -> dict:
        return {
            "entries": [
                {
                    "L": e.L,
                    "delta_bar": e.delta_bar,
                    "drift": e.drift,
                    "runtime": e.runtime,
                    **({"error": e.error} if e.error else {}),
                }
                for e in self.entries
            ],
            "fit": {"A": self.fit_A, "L0": self.fit_L0},
            "flagged": self.flagged,
        }


def _fit_decay_base(entries: Sequence[SweepEntry]) -> float | None:
    """Least-squares slope of log(delta_bar) on the tail half of the sweep."""
    clean = [e for e in entries if e.error is None and e.delta_bar > 0.0]
    tail = clean[len(clean) // 2 :]
    if len(tail) < 4:
        return None
    ls = np.array([e.L for e in tail], dtype=float)
    logs = np.log([e.delta_bar for e in tail])
    slope = np.polyfit(ls, logs, 1)[0]
    return float(np.exp(-slope))


def _fit_threshold(entries: Sequence[SweepEntry]) -> int | None:
    """Smallest listed L0 with delta_bar <= 2^-L for every listed L >= L0."""
    clean = [e for e in entries if e.error is None]
    for i, entry in enumerate(clean):
        if all(e.delta_bar <= 2.0 ** (-e.L) for e in clean[i:]):
            return entry.L
    return None


def run_box_sweep(
    config: SweepConfig,
    pot: HoppingPotential,
    max_workers: int = 1,
) -> DisagreementReport:
    """Run consecutive-size pairs (L, L+1) for each listed L and report decay.

    Per-size runs are independent and may execute in parallel; aggregation
    is deterministic regardless of worker count.
    """
    t_end = config.scheme.t_end
    sizes = sorted({L for L in config.L_list} | {L + 1 for L in config.L_list})

    def run_one(L: int) -> Trajectory | BlowUpError:
        field0 = truncate(config.generator, LatticeShape(d=pot.d, L=L))
        try:
            return integrate(field0, pot, config.scheme)
        except BlowUpError as err:
            return err

    runs: dict[int, Trajectory | BlowUpError] = {}
    timings: dict[int, float] = {}
    if max_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
            starts = {L: time.perf_counter() for L in sizes}
            futures = {L: pool.submit(run_one, L) for L in sizes}
            for L in sizes:
                runs[L] = futures[L].result()
                timings[L] = time.perf_counter() - starts[L]
    else:
        for L in sizes:
            start = time.perf_counter()
            runs[L] = run_one(L)
            timings[L] = time.perf_counter() - start

    entries = []
    flagged = False
    for L in config.L_list:
        small, big = runs[L], runs[L + 1]
        runtime = timings[L] + timings[L + 1]
        if isinstance(small, BlowUpError) or isinstance(big, BlowUpError):
            err = small if isinstance(small, BlowUpError) else big
            entries.append(SweepEntry(L=L, delta_bar=float("nan"), drift=float("nan"),
                                      runtime=runtime, error=str(err)))
            flagged = True
            continue
        entries.append(
            SweepEntry(
                L=L,
                delta_bar=window_disagreement(big, small, config.k, t_end),
                drift=drift(small, t_end),
                runtime=runtime,
            )
        )
    return DisagreementReport(
        entries=tuple(entries),
        fit_A=_fit_decay_base(entries),
        fit_L0=_fit_threshold(entries),
        flagged=flagged,
    )
