"""Channel statistics and fading realizations for the two-hop relay network.

All arrays follow the convention that the relay index runs along the last
axis, so a batch of ``N`` realizations for ``R`` relays has shape ``(N, R)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelStats",
    "ChannelRealization",
    "draw_realization",
    "place_relays_geometry",
    "sample_disk_positions",
    "make_rng",
]


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for ``seed`` and an optional stream key.

    Streams with distinct keys are statistically independent, which lets
    every (SNR point, batch) pair own its own generator.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _complex_normal(rng, shape, mean, var):
    z = rng.standard_normal(shape + (2,))
    return mean + np.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])


@dataclass(frozen=True)
class ChannelStats:
    """Per-relay first and second order statistics of ``f`` and ``g``.

    ``f_i ~ CN(mu_f[i], var_f[i])`` is the source-to-relay link and
    ``g_i ~ CN(mu_g[i], var_g[i])`` the relay-to-destination link.
    """

    mu_f: np.ndarray
    var_f: np.ndarray
    mu_g: np.ndarray
    var_g: np.ndarray

    def __post_init__(self):
        mu_f = np.atleast_1d(np.asarray(self.mu_f, dtype=complex))
        mu_g = np.atleast_1d(np.asarray(self.mu_g, dtype=complex))
        var_f = np.atleast_1d(np.asarray(self.var_f, dtype=float))
        var_g = np.atleast_1d(np.asarray(self.var_g, dtype=float))
        shapes = {a.shape for a in (mu_f, mu_g, var_f, var_g)}
        if len(shapes) != 1 or mu_f.ndim != 1:
            raise ValueError("mu_f, var_f, mu_g, var_g must be 1-D arrays of equal length")
        if mu_f.size == 0:
            raise ValueError("at least one relay is required")
        if np.any(var_f <= 0) or np.any(var_g <= 0):
            raise ValueError("channel variances must be strictly positive")
        for name, arr in (("mu_f", mu_f), ("mu_g", mu_g), ("var_f", var_f), ("var_g", var_g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def rayleigh(cls, num_relays: int, var: float = 1.0) -> "ChannelStats":
        """Zero-mean, equal-variance statistics for ``num_relays`` relays."""
        z = np.zeros(num_relays, dtype=complex)
        v = np.full(num_relays, float(var))
        return cls(z, v, z.copy(), v.copy())

    @property
    def num_relays(self) -> int:
        return self.mu_f.size

    @property
    def m_f(self) -> np.ndarray:
        """``E|f_i|^2``."""
        return np.abs(self.mu_f) ** 2 + self.var_f

    @property
    def m_g(self) -> np.ndarray:
        """``E|g_i|^2``."""
        return np.abs(self.mu_g) ** 2 + self.var_g

    @property
    def phi_f(self) -> np.ndarray:
        """Rice factor of ``f``."""
        return np.abs(self.mu_f) ** 2 / self.var_f

    @property
    def phi_g(self) -> np.ndarray:
        """Rice factor of ``g``."""
        return np.abs(self.mu_g) ** 2 / self.var_g

    def to_records(self) -> list[dict]:
        """Per-relay records with complex means stored as ``[re, im]``."""
        return [
            {
                "mu_f": [float(self.mu_f[i].real), float(self.mu_f[i].imag)],
                "var_f": float(self.var_f[i]),
                "mu_g": [float(self.mu_g[i].real), float(self.mu_g[i].imag)],
                "var_g": float(self.var_g[i]),
            }
            for i in range(self.num_relays)
        ]

    @classmethod
    def from_records(cls, records) -> "ChannelStats":
        def cplx(v):
            if isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise ValueError("complex values must be [re, im] pairs")
                return complex(float(v[0]), float(v[1]))
            return complex(float(v), 0.0)

        records = list(records)
        return cls(
            mu_f=np.array([cplx(r["mu_f"]) for r in records]),
            var_f=np.array([float(r["var_f"]) for r in records]),
            mu_g=np.array([cplx(r["mu_g"]) for r in records]),
            var_g=np.array([float(r["var_g"]) for r in records]),
        )


@dataclass(frozen=True)
class ChannelRealization:
    """One draw (or a batch of draws) of the fading coefficients.

    ``h = f * g`` elementwise; the conjugation used by the even relays of an
    Alamouti pair is applied by :mod:`afrelay.coding`, not here.
    """

    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        g = np.asarray(self.g, dtype=complex)
        if f.shape != g.shape or f.ndim == 0:
            raise ValueError("f and g must have the same non-scalar shape")
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def h(self) -> np.ndarray:
        return self.f * self.g

    @property
    def num_relays(self) -> int:
        return self.f.shape[-1]

    def __len__(self):
        return self.f.shape[-1]


def draw_realization(stats: ChannelStats, rng: np.random.Generator, size: int | None = None) -> ChannelRealization:
    """Draw circularly-symmetric complex Gaussian ``f`` and ``g``.

    With ``size=None`` a single realization of shape ``(R,)`` is returned,
    otherwise a batch of shape ``(size, R)``.
    """
    shape = (stats.num_relays,) if size is None else (int(size), stats.num_relays)
    f = _complex_normal(rng, shape, stats.mu_f, stats.var_f)
    g = _complex_normal(rng, shape, stats.mu_g, stats.var_g)
    return ChannelRealization(f, g)


def sample_disk_positions(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` points drawn uniformly by area from the disk of ``radius`` centred at the origin."""
    r = radius * np.sqrt(rng.uniform(size=n))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def place_relays_geometry(
    num_relays: int,
    circle_radius: float = 0.5,
    src_dst_distance: float = 2.0,
    path_loss_exponent: float = 3.0,
    rng: np.random.Generator | None = None,
    los: bool = False,
    positions: np.ndarray | None = None,
) -> ChannelStats:
    """Channel statistics for relays scattered in a disk between source and destination.

    The disk is centred midway between the source at ``(-d/2, 0)`` and the
    destination at ``(d/2, 0)``. Mean powers follow
    ``m = (d_ref / d)**path_loss_exponent`` with ``d_ref = d/2`` so that a
    relay at the centre has ``m_f = m_g = 1``.

    Parameters
    ----------
    num_relays : int
    circle_radius, src_dst_distance, path_loss_exponent : float
        Geometry; all must be positive.
    rng : Generator
        Used for uniform-by-area placement when ``positions`` is not given.
    los : bool
        Line of sight: Rice factor 1 on every link (``|mu|^2 = var = m/2``).
        Otherwise Rayleigh (``mu = 0``, ``var = m``).
    positions : array of shape (num_relays, 2), optional
        Explicit relay coordinates, overriding random placement.

    Returns
    -------
    ChannelStats
    """
    if circle_radius <= 0 or src_dst_distance <= 0 or path_loss_exponent <= 0:
        raise ValueError("circle_radius, src_dst_distance and path_loss_exponent must be positive")
    if num_relays < 1:
        raise ValueError("num_relays must be >= 1")
    if positions is None:
        if rng is None:
            raise ValueError("rng is required for random relay placement")
        positions = sample_disk_positions(num_relays, circle_radius, rng)
    positions = np.asarray(positions, dtype=float).reshape(num_relays, 2)

    half = src_dst_distance / 2.0
    d_f = np.hypot(positions[:, 0] + half, positions[:, 1])
    d_g = np.hypot(positions[:, 0] - half, positions[:, 1])
    if np.any(d_f == 0) or np.any(d_g == 0):
        raise ValueError("a relay cannot sit on the source or the destination")
    m_f = (half / d_f) ** path_loss_exponent
    m_g = (half / d_g) ** path_loss_exponent

    if los:
        # phi = |mu|^2 / var = 1 splits m evenly; phase of the mean is immaterial
        return ChannelStats(np.sqrt(m_f / 2).astype(complex), m_f / 2, np.sqrt(m_g / 2).astype(complex), m_g / 2)
    return ChannelStats(np.zeros(num_relays, complex), m_f, np.zeros(num_relays, complex), m_g)
