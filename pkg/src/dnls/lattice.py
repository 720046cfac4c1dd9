"""Periodic lattice geometry, fields, and deterministic initial data.

The simulation box is the d-dimensional cube {-L, ..., L}^d with site
addition taken modulo the odd side length 2L+1.  Field values are stored
row-major over coordinates shifted to [0, 2L+1); the text dump format and
all FFT-based code rely on this order.

Initial data lives on the infinite lattice: a generator is a pure function
of (site, seed) so that truncations to different box sizes agree on their
overlap, which is what every cross-L experiment requires.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

Site = tuple[int, ...]


class InvalidSiteError(ValueError):
    """Site coordinates do not fit the lattice box."""


class DataError(ValueError):
    """Field data is malformed (wrong size, NaN or Inf values)."""


@dataclass(frozen=True)
class LatticeShape:
    """Geometry of the periodic box {-L, ..., L}^d.

    L = 0 (a single site) is allowed; it is needed by the single-site
    equilibrium sampler oracle.
    """

    d: int
    L: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.L < 0:
            raise ValueError(f"half-width must be >= 0, got {self.L}")

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def volume(self) -> int:
        return self.side**self.d

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.d and all(-self.L <= int(c) <= self.L for c in x)

    def require_site(self, x: Sequence[int]) -> Site:
        """Validate and normalize a site to a tuple of ints."""
        site = tuple(int(c) for c in x)
        if len(site) != self.d or not all(-self.L <= c <= self.L for c in site):
            raise InvalidSiteError(f"site {x!r} outside {{-{self.L},...,{self.L}}}^{self.d}")
        return site

    def index(self, x: Sequence[int]) -> tuple[int, ...]:
        """ndarray index (coordinates shifted to [0, side)) of a valid site."""
        site = self.require_site(x)
        return tuple(c + self.L for c in site)

    def sites(self) -> Iterator[Site]:
        """All sites in storage order (row-major over shifted coordinates)."""
        for idx in np.ndindex(self.dims):
            yield tuple(int(i) - self.L for i in idx)


def wrap_coord(c: int, side: int) -> int:
    """Representative of c modulo side in [-(side-1)/2, (side-1)/2]."""
    half = (side - 1) // 2
    return (c + half) % side - half


def wrap_add(shape: LatticeShape, x: Sequence[int], y: Sequence[int]) -> Site:
    """Coordinatewise sum reduced modulo 2L+1 back into the box."""
    xs = shape.require_site(x)
    ys = shape.require_site(y)
    return tuple(wrap_coord(a + b, shape.side) for a, b in zip(xs, ys))


def torus_dist_inf(shape: LatticeShape, x: Sequence[int], y: Sequence[int]) -> int:
    """Minimum-image sup-norm distance on the torus; value in [0, L]."""
    xs = shape.require_site(x)
    ys = shape.require_site(y)
    dist = 0
    for a, b in zip(xs, ys):
        delta = abs(a - b)
        dist = max(dist, min(delta, shape.side - delta))
    return dist


def ball(shape: LatticeShape, x: Sequence[int], r: int) -> list[Site]:
    """All sites within torus sup-distance r of x, without duplicates."""
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    xs = shape.require_site(x)
    reach = min(r, shape.L)
    offsets = range(-reach, reach + 1)
    out: list[Site] = []
    for idx in np.ndindex((2 * reach + 1,) * shape.d):
        delta = tuple(offsets[i] for i in idx)
        out.append(tuple(wrap_coord(a + o, shape.side) for a, o in zip(xs, delta)))
    return out


@dataclass(frozen=True)
class FieldL:
    """Complex amplitude per lattice site; the state of the finite system.

    The value array is frozen after construction so snapshots can be shared
    across threads and trajectories without defensive copies.
    """

    shape: LatticeShape
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.complex128)
        if arr.shape != self.shape.dims:
            if arr.size == self.shape.volume:
                arr = arr.reshape(self.shape.dims)
            else:
                raise DataError(
                    f"expected {self.shape.volume} values for {self.shape}, got {arr.size}"
                )
        if not np.isfinite(arr).all():
            raise DataError("field contains non-finite values")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def at(self, x: Sequence[int]) -> complex:
        return complex(self.values[self.shape.index(x)])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @classmethod
    def zero(cls, shape: LatticeShape) -> "FieldL":
        return cls(shape, np.zeros(shape.dims, dtype=np.complex128))


def regularized_abs(z: Sequence[int]) -> float:
    """<z> = (1 + |z|^2)^(1/2) with the Euclidean norm."""
    return math.sqrt(1.0 + sum(float(c) * float(c) for c in z))


@dataclass(frozen=True)
class InitialDataGenerator:
    """Pure function from Z^d sites to amplitudes, with a declared envelope.

    Purity means identical (site, seed) inputs give identical amplitudes, so
    truncations to nested boxes agree on the overlap.  The declared envelope
    guarantees |gen(z)| <= envelope_constant * <z>^envelope_exponent, i.e.
    the sample lies in the corresponding power-law bounded space.
    """

    kind: str
    fn: Callable[[Site], complex]
    envelope_exponent: float
    envelope_constant: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.envelope_exponent < 0:
            raise ValueError("envelope exponent must be >= 0")

    def __call__(self, z: Sequence[int]) -> complex:
        return complex(self.fn(tuple(int(c) for c in z)))


def constant_generator(value: complex) -> InitialDataGenerator:
    value = complex(value)
    return InitialDataGenerator(
        kind="closed-form",
        fn=lambda z: value,
        envelope_exponent=0.0,
        envelope_constant=abs(value),
    )


def point_source(amplitude: complex, site: Sequence[int] = ()) -> InitialDataGenerator:
    """Amplitude at one Z^d site (origin by default), zero elsewhere."""
    amplitude = complex(amplitude)
    target = tuple(int(c) for c in site)

    def fn(z: Site) -> complex:
        probe = target if target else (0,) * len(z)
        return amplitude if z == probe else 0.0j

    return InitialDataGenerator(
        kind="closed-form",
        fn=fn,
        envelope_exponent=0.0,
        envelope_constant=abs(amplitude),
    )


def closed_form_generator(
    fn: Callable[[Site], complex],
    envelope_exponent: float,
    envelope_constant: float,
) -> InitialDataGenerator:
    return InitialDataGenerator(
        kind="closed-form",
        fn=fn,
        envelope_exponent=float(envelope_exponent),
        envelope_constant=float(envelope_constant),
    )


def _site_uniforms(seed: int, z: Site) -> tuple[float, float]:
    """Two uniforms in [0, 1) derived from a keyed hash of the coordinates."""
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    payload = b",".join(str(c).encode("ascii") for c in z)
    digest = hashlib.blake2b(payload, digest_size=16, key=key).digest()
    a = int.from_bytes(digest[:8], "little")
    b = int.from_bytes(digest[8:], "little")
    return a / 2.0**64, b / 2.0**64


def hashed_noise_generator(
    seed: int,
    envelope_exponent: float = 0.0,
    amplitude: float = 1.0,
) -> InitialDataGenerator:
    """Seeded site-hash noise with magnitude <= amplitude * <z>^p.

    The modulus is amplitude * <z>^p * sqrt(u) with u uniform, the phase is
    uniform, both drawn from a counter-based hash of (seed, coordinates), so
    every box size sees the same underlying Z^d sample.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    p = float(envelope_exponent)

    def fn(z: Site) -> complex:
        u_phase, u_radial = _site_uniforms(seed, z)
        modulus = amplitude * regularized_abs(z) ** p * math.sqrt(u_radial)
        return modulus * complex(math.cos(2 * math.pi * u_phase), math.sin(2 * math.pi * u_phase))

    return InitialDataGenerator(
        kind="site-hash",
        fn=fn,
        envelope_exponent=p,
        envelope_constant=float(amplitude),
        seed=int(seed),
    )


def truncate(gen: InitialDataGenerator | Callable[[Site], complex], shape: LatticeShape) -> FieldL:
    """Restrict a Z^d generator to the box: field(x) = gen(x) for x in the box."""
    values = np.empty(shape.dims, dtype=np.complex128)
    for site in shape.sites():
        values[tuple(c + shape.L for c in site)] = complex(gen(site))
    if not np.isfinite(values).all():
        raise DataError("generator produced non-finite values")
    return FieldL(shape, values)


def embed_lookup(field: FieldL, z: Sequence[int]) -> complex:
    """Periodic extension: value at the representative of z modulo 2L+1."""
    shape = field.shape
    if len(z) != shape.d:
        raise InvalidSiteError(f"expected {shape.d} coordinates, got {len(z)}")
    rep = tuple(wrap_coord(int(c), shape.side) for c in z)
    return field.at(rep)


def dump_field(field: FieldL, path) -> None:
    """Write the text dump: 'd L' header, then 'x1 .. xd re im' per site.

    Floats are written with shortest round-trip precision; load_field
    restores the exact doubles.
    """
    shape = field.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{shape.d} {shape.L}\n")
        for site in shape.sites():
            v = field.values[tuple(c + shape.L for c in site)]
            coords = " ".join(str(c) for c in site)
            fh.write(f"{coords} {float(v.real)!r} {float(v.imag)!r}\n")


def load_field(path) -> FieldL:
    with open(path, "r") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"bad field dump header in {path}")
        shape = LatticeShape(d=int(header[0]), L=int(header[1]))
        values = np.empty(shape.dims, dtype=np.complex128)
        count = 0
        for line, site in zip(fh, shape.sites()):
            parts = line.split()
            if len(parts) != shape.d + 2:
                raise DataError(f"bad field dump line: {line!r}")
            coords = tuple(int(c) for c in parts[: shape.d])
            if coords != site:
                raise DataError(f"dump out of storage order: saw {coords}, expected {site}")
            values[tuple(c + shape.L for c in coords)] = complex(
                float(parts[shape.d]), float(parts[shape.d + 1])
            )
            count += 1
        if count != shape.volume:
            raise DataError(f"expected {shape.volume} sites, found {count}")
    return FieldL(shape, values)
