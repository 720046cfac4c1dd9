"""Random initial data: translation-invariant Gaussian fields and Gibbs chains.

The Gaussian sampler draws independent complex normal Fourier modes with a
prescribed spectral density and transforms back, so samples are exactly
translation invariant in law and the covariance is the inverse transform of
the density.

The equilibrium sampler targets the grand-canonical density
exp(-beta * (H - mu * N)) on the box with a defocusing quartic term
(lam > 0, otherwise the density is not normalizable).  It is a single-site
Metropolis random walk on the real and imaginary parts, swept in systematic
site order, with a globally tuned proposal width.  Statistics helpers back
the moment and power-law-growth checks used on the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hopping import HoppingPotential, clipped_offsets, validate
from .lattice import FieldL, LatticeShape, Site


class MeasureError(ValueError):
    """Initial-data distribution is invalid (negative/asymmetric density, ...)."""


@dataclass(frozen=True)
class GaussianSpec:
    """Mean-zero translation-invariant Gaussian law given by a spectral density.

    density may be a nonnegative float (flat), a callable taking a stacked
    integer mode-coordinate array of shape (d, side, ..., side) in centered
    representation, or a tabulated array in FFT index order.
    """

    density: float | Callable[[np.ndarray], np.ndarray] | np.ndarray

    def density_grid(self, shape: LatticeShape) -> np.ndarray:
        if isinstance(self.density, (int, float)):
            grid = np.full(shape.dims, float(self.density))
        elif callable(self.density):
            side = shape.side
            js = np.arange(side)
            centered = ((js + shape.L) % side) - shape.L
            mesh = np.meshgrid(*(centered,) * shape.d, indexing="ij")
            grid = np.asarray(self.density(np.stack(mesh)), dtype=np.float64)
            if grid.shape != shape.dims:
                raise MeasureError(f"density callable returned shape {grid.shape}")
        else:
            grid = np.asarray(self.density, dtype=np.float64)
            if grid.shape != shape.dims:
                raise MeasureError(
                    f"tabulated density has shape {grid.shape}, box needs {shape.dims}"
                )
        if not np.isfinite(grid).all() or np.any(grid < 0):
            raise MeasureError("spectral density must be finite and nonnegative")
        reflected = grid
        for axis in range(shape.d):
            reflected = np.roll(np.flip(reflected, axis=axis), 1, axis=axis)
        if not np.allclose(grid, reflected, rtol=0, atol=1e-12 * max(1.0, float(grid.max()))):
            raise MeasureError("spectral density must be symmetric under mode negation")
        return grid


def sample_gaussian(spec: GaussianSpec, shape: LatticeShape, seed: int) -> FieldL:
    """One sample; deterministic given the seed.

    Per-site variance equals the mean of the density over modes; a flat
    density sigma2 gives i.i.d. complex normals with E|psi|^2 = sigma2.
    """
    rho = spec.density_grid(shape)
    rng = np.random.default_rng(seed)
    noise = (rng.standard_normal(shape.dims) + 1j * rng.standard_normal(shape.dims)) / math.sqrt(2.0)
    modes = np.sqrt(rho) * noise
    values = math.sqrt(shape.volume) * np.fft.ifftn(modes)
    return FieldL(shape, values)


@dataclass(frozen=True)
class GibbsSpec:
    """Grand-canonical equilibrium parameters plus chain settings.

    burn_in and thinning are measured in full sweeps over the box.
    """

    beta: float
    mu: float
    lam: float
    proposal_sigma: float
    burn_in: int = 200
    thinning: int = 5

    def __post_init__(self) -> None:
        if not (self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not (self.lam > 0):
            raise MeasureError(
                "lam must be > 0: the focusing equilibrium density is not normalizable"
            )
        if not (self.proposal_sigma > 0):
            raise ValueError(f"proposal sigma must be > 0, got {self.proposal_sigma}")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValueError("need burn_in >= 0 and thinning >= 1")


@dataclass(frozen=True)
class GibbsChain:
    """Record of one Metropolis run: retained samples plus acceptance counts."""

    spec: GibbsSpec
    shape: LatticeShape
    seed: int
    samples: tuple[FieldL, ...]
    n_proposed: int
    n_accepted: int


def _neighbor_tables(pot: HoppingPotential, shape: LatticeShape):
    """Flat-index neighbor lists for the box-restricted kernel."""
    offsets = clipped_offsets(pot, shape)
    side = shape.side
    strides = [side**k for k in range(shape.d - 1, -1, -1)]
    volume = shape.volume

    coeffs = np.array([c for _, c in offsets])
    nbr = np.empty((volume, len(offsets)), dtype=np.int64)
    for flat in range(volume):
        rem = flat
        coord = []
        for s in strides:
            coord.append(rem // s)
            rem %= s
        for j, (off, _) in enumerate(offsets):
            target = 0
            for axis in range(shape.d):
                target += ((coord[axis] - off[axis]) % side) * strides[axis]
            nbr[flat, j] = target
    return nbr, coeffs


def run_gibbs_chain(
    spec: GibbsSpec,
    pot: HoppingPotential,
    shape: LatticeShape,
    seed: int,
    n_samples: int,
) -> GibbsChain:
    """Metropolis chain for exp(-beta (H - mu N)); deterministic given seed."""
    validate(pot)
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    nbr, coeffs = _neighbor_tables(pot, shape)
    n_off = len(coeffs)
    coeff_list = [float(c) for c in coeffs]
    nbr_list = [list(map(int, row)) for row in nbr]
    alpha0 = pot.at((0,) * pot.d)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    volume = shape.volume
    beta = spec.beta
    mu = spec.mu
    half_lam = 0.5 * spec.lam
    sigma = spec.proposal_sigma

    # random-phase start of unit modulus, as flat python complex list
    phases = rng.uniform(0.0, 2.0 * math.pi, size=volume)
    state = [complex(math.cos(p), math.sin(p)) for p in phases]

    samples: list[FieldL] = []
    n_proposed = 0
    n_accepted = 0
    total_sweeps = spec.burn_in + n_samples * spec.thinning

    for sweep in range(total_sweeps):
        re = rng.standard_normal(volume)
        im = rng.standard_normal(volume)
        us = rng.random(volume)
        for i in range(volume):
            delta = complex(sigma * re[i], sigma * im[i])
            h = 0.0j
            row = nbr_list[i]
            for j in range(n_off):
                h += coeff_list[j] * state[row[j]]
            old = state[i]
            old2 = old.real * old.real + old.imag * old.imag
            new = old + delta
            new2 = new.real * new.real + new.imag * new.imag
            d2 = delta.real * delta.real + delta.imag * delta.imag
            cross = delta.real * h.real + delta.imag * h.imag
            d_quad = 2.0 * cross + alpha0 * d2
            d_energy = d_quad + half_lam * (new2 * new2 - old2 * old2) - mu * (new2 - old2)
            n_proposed += 1
            if d_energy <= 0.0 or us[i] < math.exp(-beta * d_energy):
                state[i] = new
                n_accepted += 1
        if sweep >= spec.burn_in and (sweep - spec.burn_in + 1) % spec.thinning == 0:
            samples.append(FieldL(shape, np.array(state).reshape(shape.dims)))

    return GibbsChain(
        spec=spec,
        shape=shape,
        seed=int(seed),
        samples=tuple(samples[:n_samples]),
        n_proposed=n_proposed,
        n_accepted=n_accepted,
    )


def sample_gibbs(
    spec: GibbsSpec,
    pot: HoppingPotential,
    shape: LatticeShape,
    seed: int,
    n_samples: int,
) -> list[FieldL]:
    return list(run_gibbs_chain(spec, pot, shape, seed, n_samples).samples)


def acceptance_fraction(chain: GibbsChain) -> float:
    """Accepted fraction of all proposals in the chain."""
    if chain.n_proposed == 0:
        return 0.0
    return chain.n_accepted / chain.n_proposed


def tune_proposal_sigma(
    spec: GibbsSpec,
    pot: HoppingPotential,
    shape: LatticeShape,
    seed: int,
    target: float = 0.3,
    rounds: int = 12,
    sweeps_per_round: int = 20,
) -> float:
    """Multiplicative proposal-width adaptation toward a target acceptance.

    Runs short disposable chains; the returned width can then drive a fixed
    production kernel so stationarity arguments stay clean.
    """
    sigma = spec.proposal_sigma
    tune_seeds = np.random.SeedSequence(seed).spawn(rounds)
    for rnd in range(rounds):
        probe = GibbsSpec(
            beta=spec.beta, mu=spec.mu, lam=spec.lam,
            proposal_sigma=sigma, burn_in=sweeps_per_round, thinning=1,
        )
        chain = run_gibbs_chain(probe, pot, shape, int(tune_seeds[rnd].generate_state(1)[0]), 0)
        acc = acceptance_fraction(chain)
        sigma *= math.exp(1.5 * (acc - target))
    return sigma


@dataclass
class SampleStats:
    """Aggregated per-site statistics; fields are filled by their producers."""

    n_samples: int
    moment_order: float | None = None
    per_site_moments: np.ndarray | None = None
    per_site_se: np.ndarray | None = None
    max_moment: float | None = None
    max_moment_site: Site | None = None
    two_point: np.ndarray | None = None
    violation_exponent: float | None = None
    violations_total: int | None = None
    violation_sites: tuple[Site, ...] | None = None
    violations_by_radius: dict[int, int] | None = None
    sites_by_radius: dict[int, int] | None = None


def site_moments(samples: Sequence[FieldL], xi: float) -> SampleStats:
    """Empirical E|psi(x)|^xi per site with standard errors, plus the max."""
    if len(samples) < 2:
        raise ValueError("need at least 2 samples for standard errors")
    if not (xi > 0):
        raise ValueError(f"moment order must be > 0, got {xi}")
    shape = samples[0].shape
    if any(s.shape != shape for s in samples):
        raise ValueError("samples live on different lattices")
    stack = np.stack([np.abs(s.values) ** xi for s in samples])
    n = stack.shape[0]
    means = stack.mean(axis=0)
    ses = stack.std(axis=0, ddof=1) / math.sqrt(n)
    flat_argmax = int(np.argmax(means))
    max_idx = np.unravel_index(flat_argmax, shape.dims)
    max_site = tuple(int(i) - shape.L for i in max_idx)
    return SampleStats(
        n_samples=n,
        moment_order=float(xi),
        per_site_moments=means,
        per_site_se=ses,
        max_moment=float(means[max_idx]),
        max_moment_site=max_site,
    )


def site_uniformity_z(stats: SampleStats) -> float:
    """Largest |per-site moment - cross-site mean| in units of the site's SE."""
    if stats.per_site_moments is None or stats.per_site_se is None:
        raise ValueError("stats carry no per-site moments")
    center = float(stats.per_site_moments.mean())
    se = np.maximum(stats.per_site_se, 1e-300)
    return float(np.max(np.abs(stats.per_site_moments - center) / se))


def two_point_function(samples: Sequence[FieldL]) -> np.ndarray:
    """E psi(x+r) psi(x)^* averaged over sites and samples, FFT offset order."""
    if not samples:
        raise ValueError("need at least one sample")
    shape = samples[0].shape
    acc = np.zeros(shape.dims, dtype=np.complex128)
    for s in samples:
        f = np.fft.fftn(s.values)
        acc += np.fft.ifftn(f * np.conj(f))
    return acc / (len(samples) * shape.volume)


def _radius_grid(shape: LatticeShape) -> np.ndarray:
    coords = np.abs(np.arange(-shape.L, shape.L + 1))
    return np.maximum.reduce(np.meshgrid(*(coords,) * shape.d, indexing="ij"))


def power_law_violations(sample: FieldL, a: float) -> SampleStats:
    """Sites where |psi(x)| exceeds <x>^(1/a), with counts per sup-norm radius.

    Uses the true coordinates of the box sites.
    """
    if not (a > 0):
        raise ValueError(f"exponent a must be > 0, got {a}")
    shape = sample.shape
    coords = np.arange(-shape.L, shape.L + 1).astype(np.float64)
    sq = np.meshgrid(*(coords**2,) * shape.d, indexing="ij")
    threshold = (1.0 + sum(sq)) ** (1.0 / (2.0 * a))
    mask = np.abs(sample.values) > threshold
    radii = _radius_grid(shape)
    violations_by_radius: dict[int, int] = {}
    sites_by_radius: dict[int, int] = {}
    for r in range(shape.L + 1):
        at_r = radii == r
        sites_by_radius[r] = int(at_r.sum())
        violations_by_radius[r] = int((mask & at_r).sum())
    sites = tuple(
        tuple(int(i) - shape.L for i in idx) for idx in np.argwhere(mask)
    )
    return SampleStats(
        n_samples=1,
        violation_exponent=float(a),
        violations_total=int(mask.sum()),
        violation_sites=sites,
        violations_by_radius=violations_by_radius,
        sites_by_radius=sites_by_radius,
    )


def weighted_sup(sample: FieldL, exponent: float) -> float:
    """max over the box of |psi(x)| <x>^(-exponent), true coordinates."""
    shape = sample.shape
    coords = np.arange(-shape.L, shape.L + 1).astype(np.float64)
    sq = np.meshgrid(*(coords**2,) * shape.d, indexing="ij")
    weight = (1.0 + sum(sq)) ** (-exponent / 2.0)
    return float(np.max(weight * np.abs(sample.values)))


def median_with_se(values: Sequence[float]) -> tuple[float, float]:
    """Sample median and its large-sample standard error (normal approximation)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("need at least 2 values")
    med = float(np.median(arr))
    se = 1.2533 * float(np.std(arr, ddof=1)) / math.sqrt(arr.size)
    return med, se
