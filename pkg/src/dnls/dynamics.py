"""Time evolution of the finite lattice equation and solution-quality checks.

The equation of motion is i dpsi/dt = (alpha * psi)(x) + lam |psi(x)|^2 psi(x)
on the periodic box.  Two one-step methods are provided:

* Strang splitting composes the exactly solvable onsite phase rotation with
  the Fourier-diagonalized linear flow.  Both substeps preserve the squared
  l2 norm, so particle number is conserved to rounding and energy drifts at
  second order in dt.
* Classical RK4 on the raw right-hand side, kept as a structurally
  independent scheme for cross-validation of uniqueness.

Duhamel residuals quantify how well a computed trajectory satisfies the
first and second order integral reformulations of the equation; they mix
quadrature error (order 4 in the snapshot spacing, composite Simpson) with
the scheme's own defect, and refinement studies separate the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hopping import Dispersion, HoppingPotential, convolve_values, dispersion, require_fits, validate
from .lattice import FieldL, LatticeShape

Observer = Callable[[float, FieldL], None]

SCHEMES = ("strang", "rk4")


class BlowUpError(RuntimeError):
    """Non-finite value produced during integration."""

    def __init__(self, time: float, step: int):
        super().__init__(f"non-finite field value at t={time!r} (step {step})")
        self.time = time
        self.step = step


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "strang"
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_stride: int = 1
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot stride must be >= 1, got {self.snapshot_stride}")

    def n_steps(self) -> int:
        steps = int(round(self.t_end / self.dt))
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(self.dt, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        if steps % self.snapshot_stride != 0:
            raise ValueError(
                f"{steps} steps not divisible by snapshot stride {self.snapshot_stride}"
            )
        return steps


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of one run on the uniform grid t_j = j * dt * stride."""

    shape: LatticeShape
    times: np.ndarray
    snapshots: tuple[FieldL, ...]
    dt: float
    stride: int
    scheme: str
    lam: float

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        if len(times) != len(self.snapshots) or len(times) == 0:
            raise ValueError("times and snapshots must align and be nonempty")
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if any(s.shape != self.shape for s in self.snapshots):
            raise ValueError("all snapshots must share the trajectory's shape")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def spacing(self) -> float:
        return self.dt * self.stride

    def time_index(self, t: float) -> int:
        """Index of a grid time; rejects off-grid times."""
        idx = int(round(t / self.spacing)) if self.spacing > 0 else 0
        if idx < 0 or idx >= len(self.times) or abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the snapshot grid")
        return idx

    @property
    def final(self) -> FieldL:
        return self.snapshots[-1]


def energy_gradient(field: FieldL, pot: HoppingPotential, lam: float) -> np.ndarray:
    """(alpha * psi)(x) + lam |psi(x)|^2 psi(x) over the box."""
    validate(pot)
    require_fits(pot, field.shape)
    psi = field.values
    return convolve_values(pot, field.shape, psi) + lam * (np.abs(psi) ** 2) * psi


def g_site(field: FieldL, pot: HoppingPotential, lam: float, x: Sequence[int]) -> complex:
    """Single-site evolution polynomial; depends on values within the kernel range."""
    return complex(energy_gradient(field, pot, lam)[field.shape.index(x)])


def rhs(field: FieldL, pot: HoppingPotential, lam: float) -> FieldL:
    """dpsi/dt = -i * (hopping + cubic) as a field."""
    return FieldL(field.shape, -1j * energy_gradient(field, pot, lam))


def second_time_derivative(field: FieldL, pot: HoppingPotential, lam: float) -> np.ndarray:
    """The five-term polynomial giving d^2 psi/dt^2 pointwise.

    Depends on values within twice the kernel range of each site.
    """
    validate(pot)
    require_fits(pot, field.shape)
    shape = field.shape
    psi = field.values
    conv = convolve_values(pot, shape, psi)
    mod2 = np.abs(psi) ** 2
    out = -convolve_values(pot, shape, conv)
    out -= lam * convolve_values(pot, shape, mod2 * psi)
    out -= 2.0 * lam * mod2 * conv
    out -= lam * lam * mod2 * mod2 * psi
    out += lam * psi * psi * np.conj(conv)
    return out


def p_site(field: FieldL, pot: HoppingPotential, lam: float, x: Sequence[int]) -> complex:
    return complex(second_time_derivative(field, pot, lam)[field.shape.index(x)])




def step_strang(
    field: FieldL,
    pot: HoppingPotential,
    lam: float,
    dt: float,
    disp: Dispersion | None = None,
) -> FieldL:
    """One Strang step: half onsite rotation, full linear flow, half rotation.

    A vanishing dispersion makes the linear flow the identity; the Fourier
    round trip is skipped then, so purely onsite runs carry no FFT rounding.
    """
    if disp is None:
        disp = dispersion(pot, field.shape)
    linear_phase = None if np.all(disp.values == 0.0) else np.exp(-1j * dt * disp.values)
    psi = field.values * np.exp(-0.5j * lam * dt * np.abs(field.values) ** 2)
    if linear_phase is not None:
        psi = np.fft.ifftn(linear_phase * np.fft.fftn(psi))
    psi = psi * np.exp(-0.5j * lam * dt * np.abs(psi) ** 2)
    return FieldL(field.shape, psi)


def step_rk4(field: FieldL, pot: HoppingPotential, lam: float, dt: float) -> FieldL:
    """One classical fourth-order step on the raw right-hand side."""
    validate(pot)
    require_fits(pot, field.shape)
    shape = field.shape

    def f(values: np.ndarray) -> np.ndarray:
        return -1j * (convolve_values(pot, shape, values) + lam * (np.abs(values) ** 2) * values)

    y = field.values
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return FieldL(shape, y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def integrate(
    field0: FieldL,
    pot: HoppingPotential,
    config: SchemeConfig,
    observers: Sequence[Observer] = (),
) -> Trajectory:
    """Advance field0 to t_end, snapshotting every stride steps.

    Observers are called with (t, field) at t=0 and after every step.
    A non-finite value aborts the run with the offending time stamp.
    """
    validate(pot)
    require_fits(pot, field0.shape)
    steps = config.n_steps()
    shape = field0.shape
    lam = config.lam
    dt = config.dt

    if config.scheme == "strang":
        disp = dispersion(pot, shape)
        trivial_linear = bool(np.all(disp.values == 0.0))
        linear_phase = np.exp(-1j * dt * disp.values)
        half_rate = -0.5j * lam * dt

        def advance(values: np.ndarray) -> np.ndarray:
            psi = values * np.exp(half_rate * np.abs(values) ** 2)
            if not trivial_linear:
                psi = np.fft.ifftn(linear_phase * np.fft.fftn(psi))
            return psi * np.exp(half_rate * np.abs(psi) ** 2)

    else:

        def advance(values: np.ndarray) -> np.ndarray:
            def f(v: np.ndarray) -> np.ndarray:
                return -1j * (convolve_values(pot, shape, v) + lam * (np.abs(v) ** 2) * v)

            k1 = f(values)
            k2 = f(values + 0.5 * dt * k1)
            k3 = f(values + 0.5 * dt * k2)
            k4 = f(values + dt * k3)
            return values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    snapshots = [field0]
    times = [0.0]
    for obs in observers:
        obs(0.0, field0)

    values = field0.values
    current: FieldL = field0
    for step in range(1, steps + 1):
        values = advance(values)
        t = step * dt
        if not np.isfinite(values).all():
            raise BlowUpError(time=t, step=step)
        need_field = bool(observers) or step % config.snapshot_stride == 0
        if need_field:
            current = FieldL(shape, values)
            values = current.values
        for obs in observers:
            obs(t, current)
        if step % config.snapshot_stride == 0:
            snapshots.append(current)
            times.append(t)

    return Trajectory(
        shape=shape,
        times=np.asarray(times),
        snapshots=tuple(snapshots),
        dt=dt,
        stride=config.snapshot_stride,
        scheme=config.scheme,
        lam=lam,
    )


def _quadrature_weights(n_intervals: int, spacing: float) -> np.ndarray:
    """Composite Simpson for an even interval count, trapezoid fallback."""
    if n_intervals == 0:
        return np.zeros(1)
    if n_intervals >= 2 and n_intervals % 2 == 0:
        w = np.ones(n_intervals + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (spacing / 3.0)
    w = np.ones(n_intervals + 1)
    w[0] = w[-1] = 0.5
    return w * spacing


def duhamel_defect_first(
    traj: Trajectory,
    pot: HoppingPotential,
    lam: float,
    x: Sequence[int],
    t: float,
) -> complex:
    """psi_t(x) - psi_0(x) + i * integral_0^t G_x(psi_s) ds, signed."""
    m = traj.time_index(t)
    idx = traj.shape.index(x)
    if m == 0:
        return 0.0j
    weights = _quadrature_weights(m, traj.spacing)
    samples = np.array(
        [energy_gradient(traj.snapshots[j], pot, lam)[idx] for j in range(m + 1)]
    )
    integral = np.sum(weights * samples)
    return complex(traj.snapshots[m].values[idx] - traj.snapshots[0].values[idx] + 1j * integral)


def duhamel_residual_first(
    traj: Trajectory,
    pot: HoppingPotential,
    lam: float,
    x: Sequence[int],
    t: float,
) -> float:
    """| psi_t(x) - psi_0(x) + i * integral_0^t G_x(psi_s) ds |."""
    return abs(duhamel_defect_first(traj, pot, lam, x, t))


def duhamel_defect_second(
    traj: Trajectory,
    pot: HoppingPotential,
    lam: float,
    x: Sequence[int],
    t: float,
) -> complex:
    """psi_t(x) - psi_0(x) + i t G_x(psi_0) - integral_0^t (t-s) P_x(psi_s) ds."""
    m = traj.time_index(t)
    idx = traj.shape.index(x)
    if m == 0:
        return 0.0j
    weights = _quadrature_weights(m, traj.spacing)
    samples = np.array(
        [
            (t - traj.times[j]) * second_time_derivative(traj.snapshots[j], pot, lam)[idx]
            for j in range(m + 1)
        ]
    )
    integral = np.sum(weights * samples)
    g0 = energy_gradient(traj.snapshots[0], pot, lam)[idx]
    return complex(
        traj.snapshots[m].values[idx]
        - traj.snapshots[0].values[idx]
        + 1j * t * g0
        - integral
    )


def duhamel_residual_second(
    traj: Trajectory,
    pot: HoppingPotential,
    lam: float,
    x: Sequence[int],
    t: float,
) -> float:
    """| psi_t(x) - psi_0(x) + i t G_x(psi_0) - integral_0^t (t-s) P_x(psi_s) ds |."""
    return abs(duhamel_defect_second(traj, pot, lam, x, t))


def subsample(traj: Trajectory, factor: int) -> Trajectory:
    """Coarser snapshot view of the same run (every factor-th snapshot).

    Requires the snapshot count to cover t_end at the coarser spacing.
    """
    if factor < 1 or (len(traj) - 1) % factor != 0:
        raise ValueError(f"cannot subsample {len(traj)} snapshots by {factor}")
    return Trajectory(
        shape=traj.shape,
        times=traj.times[::factor].copy(),
        snapshots=traj.snapshots[::factor],
        dt=traj.dt,
        stride=traj.stride * factor,
        scheme=traj.scheme,
        lam=traj.lam,
    )
