"""Monte Carlo BER/BLER experiments over SNR sweeps.

Every trial draws one quasi-static channel realization, selects the feedback
bits, optionally corrupts them on the feedback link, transmits
``block_symbols`` QPSK symbols through the two-hop model and tallies the
decision errors.  Random streams are derived from ``(seed, stream, batch)``
so runs are reproducible bit for bit, and channel draws are shared between
SNR points and between schemes run with the same seed.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, ChannelStats, draw_realization, make_rng, place_relays_geometry
from .coding import (
    QPSK,
    alamouti_equivalent,
    alamouti_ml_decode,
    alamouti_relay_maps,
    diff_alamouti_decode,
    diff_alamouti_encode,
    diff_decode,
    diff_encode,
    nearest_index,
)
from .powerload import DEFAULT_THETA_BAR, build_alamouti_matrices, build_scalar_matrices, optimize_loading
from .schemes import (
    BitAlgorithm,
    Scheme,
    brs_select,
    flip_feedback,
    is_differential,
    scheme_profile,
    select_bits,
    uses_pairs,
)
from .sigmodel import FeedbackState, PowerProfile, amplification, power_vector, simulate_two_hop

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SnrPoint",
    "CurveResult",
    "CSV_COLUMNS",
    "run_experiment",
    "run_point",
    "brs_select",
    "build_stats",
    "build_profile",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("snr_db", "trials", "bit_errors", "ber", "ber_stderr", "block_errors", "bler")

# stream ids for make_rng(seed, stream, batch)
_CHANNEL, _NOISE, _SOLVER, _FEEDBACK, _TRAINING, _GEOMETRY, _DATA = range(7)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending field."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: Scheme = Scheme.SCALAR_FEEDBACK
    bit_algorithm: BitAlgorithm = BitAlgorithm.SDR
    R: int = 4
    power_split: object = "Equal"
    snr_grid: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    target_errors: int = 200
    max_trials: int = 10_000_000
    feedback_error_prob: float = 0.0
    loading: object = None
    seed: int = 0
    geometry: dict | None = None
    channel: tuple | None = None
    block_symbols: int = 4
    batch_size: int = 2000
    noisy_training: bool = True
    weighting: str = "weighted"
    randomization_rounds: int = 200

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        except ValueError:
            raise ConfigError("scheme", f"unknown scheme {self.scheme!r}") from None
        try:
            object.__setattr__(self, "bit_algorithm", BitAlgorithm(self.bit_algorithm))
        except ValueError:
            raise ConfigError("bit_algorithm", f"unknown algorithm {self.bit_algorithm!r}") from None
        if not isinstance(self.R, (int, np.integer)) or self.R < 1:
            raise ConfigError("R", "must be a positive integer")
        if uses_pairs(self.scheme) and self.R % 2:
            raise ConfigError("R", "paired schemes need an even number of relays")
        grid = tuple(float(v) for v in np.atleast_1d(self.snr_grid))
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("snr_grid", "must be nonempty and strictly ascending")
        object.__setattr__(self, "snr_grid", grid)
        if self.target_errors < 1:
            raise ConfigError("target_errors", "must be positive")
        if self.max_trials < 1:
            raise ConfigError("max_trials", "must be positive")
        if not 0.0 <= self.feedback_error_prob <= 1.0:
            raise ConfigError("feedback_error_prob", "must lie in [0, 1]")
        if self.block_symbols < 1 or (uses_pairs(self.scheme) and self.block_symbols % 2):
            raise ConfigError("block_symbols", "must be positive (and even for paired schemes)")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be positive")
        if self.weighting not in ("weighted", "raw"):
            raise ConfigError("weighting", "must be 'weighted' or 'raw'")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        split = self.power_split
        if isinstance(split, str):
            if split not in ("Equal", "DstcOptimal"):
                raise ConfigError("power_split", "must be 'Equal', 'DstcOptimal' or a list of R + 1 fractions")
        else:
            lam = np.asarray(split, dtype=float)
            if lam.shape != (self.R + 1,) or np.any(lam < 0) or abs(lam.sum() - 1) > 1e-12:
                raise ConfigError("power_split", "explicit fractions need R + 1 nonnegative entries summing to 1")
            object.__setattr__(self, "power_split", tuple(lam.tolist()))
        loading = self.loading
        if loading in (None, "None", "none"):
            object.__setattr__(self, "loading", None)
        else:
            if not isinstance(loading, dict):
                raise ConfigError("loading", "must be 'None' or a mapping with theta_bar and epsilon")
            unknown = set(loading) - {"theta_bar", "epsilon"}
            if unknown:
                raise ConfigError("loading", f"unknown entries {sorted(unknown)}")
            tb = float(loading.get("theta_bar", DEFAULT_THETA_BAR))
            eps = float(loading.get("epsilon", 1e-4))
            if not 0 <= tb <= 1 or eps <= 0:
                raise ConfigError("loading", "need 0 <= theta_bar <= 1 and epsilon > 0")
            object.__setattr__(self, "loading", {"theta_bar": tb, "epsilon": eps})
        if self.channel is not None and self.geometry is not None:
            raise ConfigError("channel", "give either channel statistics or a geometry, not both")

    @property
    def K(self) -> int:
        return self.R // 2

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SnrPoint:
    snr_db: float
    trials: int = 0
    bits: int = 0
    bit_errors: int = 0
    symbols: int = 0
    symbol_errors: int = 0
    blocks: int = 0
    block_errors: int = 0
    theta: tuple | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols if self.symbols else float("nan")

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else float("nan")

    @property
    def ber_stderr(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits) if self.bits else float("nan")

    @property
    def ser_stderr(self) -> float:
        p = self.ser
        return math.sqrt(p * (1 - p) / self.symbols) if self.symbols else float("nan")

    @property
    def bler_stderr(self) -> float:
        p = self.bler
        return math.sqrt(p * (1 - p) / self.blocks) if self.blocks else float("nan")


@dataclass
class CurveResult:
    config: ExperimentConfig
    points: list = field(default_factory=list)

    @property
    def snr_db(self):
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self):
        return np.array([p.ber for p in self.points])

    @property
    def ber_stderr(self):
        return np.array([p.ber_stderr for p in self.points])

    @property
    def ser(self):
        return np.array([p.ser for p in self.points])

    @property
    def bler(self):
        return np.array([p.bler for p in self.points])

    @property
    def bler_stderr(self):
        return np.array([p.bler_stderr for p in self.points])

    def rows(self):
        for p in self.points:
            yield (p.snr_db, p.trials, p.bit_errors, p.ber, p.ber_stderr, p.block_errors, p.bler)

    def to_csv(self, label: str | None = None, header: bool = True) -> str:
        out = io.StringIO()
        if header:
            out.write(",".join((("label",) if label is not None else ()) + CSV_COLUMNS) + "\n")
        for row in self.rows():
            cells = [_fmt(v) for v in row]
            if label is not None:
                cells.insert(0, label)
            out.write(",".join(cells) + "\n")
        return out.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def build_stats(config: ExperimentConfig) -> ChannelStats:
    """Channel statistics from explicit records, a geometry, or unit Rayleigh fading."""
    if config.channel is not None:
        try:
            stats = ChannelStats.from_records(config.channel)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("channel", f"invalid relay records ({exc})") from None
        if stats.num_relays != config.R:
            raise ConfigError("channel", f"expected {config.R} relay records, got {stats.num_relays}")
        return stats
    if config.geometry is not None:
        g = dict(config.geometry)
        allowed = {"circle_radius", "src_dst_distance", "path_loss_exponent", "los", "positions"}
        unknown = set(g) - allowed
        if unknown:
            raise ConfigError("geometry", f"unknown entries {sorted(unknown)}")
        try:
            return place_relays_geometry(config.R, rng=make_rng(config.seed, _GEOMETRY), **g)
        except (TypeError, ValueError) as exc:
            raise ConfigError("geometry", str(exc)) from None
    return ChannelStats.rayleigh(config.R)


def build_profile(config: ExperimentConfig, snr_db: float) -> PowerProfile:
    P = 10.0 ** (snr_db / 10.0)
    if config.power_split == "Equal":
        return PowerProfile.equal(P, config.R)
    if config.power_split == "DstcOptimal":
        return PowerProfile.dstc_optimal(P, config.R)
    return PowerProfile(P, np.asarray(config.power_split))


def _loading(config, stats, profile):
    if config.loading is None or is_differential(config.scheme) or config.scheme is Scheme.BRS:
        return None
    if uses_pairs(config.scheme):
        mats = build_alamouti_matrices(stats, profile.with_T(2))
    else:
        mats = build_scalar_matrices(stats, profile)
    return optimize_loading(mats, config.loading["theta_bar"], config.loading["epsilon"],
                            rng=make_rng(config.seed, _SOLVER, 2**32 - 1))


def _bits_of(idx):
    idx = np.asarray(idx)
    return np.stack([(idx >> 1) & 1, idx & 1], axis=-1)


def _expand(real: ChannelRealization) -> ChannelRealization:
    """Insert a symbol axis so one realization spans several transmitted blocks."""
    return ChannelRealization(real.f[:, None, :], real.g[:, None, :])


def _single_relay_transmit(u, real, relay, profile, stats, rng):
    """Only ``relay`` (per realization) forwards the scalar stream ``u`` of shape ``(N, L)``."""
    n = np.arange(u.shape[0])
    f = real.f[n, relay][:, None]
    g = real.g[n, relay][:, None]
    a = amplification(profile, stats)[relay][:, None]
    v = _cnoise(rng, u.shape)
    w = _cnoise(rng, u.shape)
    return a * g * (math.sqrt(profile.P0) * f * u + v) + w


def _cnoise(rng, shape):
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _flip_relay_index(idx, R, prob, rng):
    nbits = max(1, int(math.ceil(math.log2(R)))) if R > 1 else 0
    if prob <= 0 or nbits == 0:
        return idx
    mask = (rng.uniform(size=idx.shape + (nbits,)) < prob) @ (1 << np.arange(nbits))
    out = idx ^ mask
    return np.where(out < R, out, idx)


def _simulate_batch(config: ExperimentConfig, stats, profile, theta, n, batch):
    """Run ``n`` trials; returns (bit_errors, symbol_errors, block_errors)."""
    seed = config.seed
    scheme = config.scheme
    R = stats.num_relays
    L = config.block_symbols
    real = draw_realization(stats, make_rng(seed, _CHANNEL, batch), size=n)
    noise_rng = make_rng(seed, _NOISE, batch)
    data_rng = make_rng(seed, _DATA, batch)
    fb_rng = make_rng(seed, _FEEDBACK, batch)
    idx = data_rng.integers(0, 4, size=(n, L))
    s = QPSK[idx]

    if scheme in (Scheme.BRS, Scheme.DIFF_BRS):
        prof = profile.with_T(1)
        if scheme is Scheme.BRS:
            relay = _flip_relay_index(brs_select(real, prof, stats), R, config.feedback_error_prob, fb_rng)
            x = _single_relay_transmit(s, real, relay, prof, stats, noise_rng)
            nn = np.arange(n)
            c = math.sqrt(prof.P0) * amplification(prof, stats)[relay] * real.h[nn, relay]
            dec = nearest_index(x / c[:, None])
        else:
            train_rng = make_rng(seed, _TRAINING, batch)
            u0 = np.ones((n, R))
            # every relay in turn forwards the reference symbol alone
            probe = np.stack([
                _single_relay_transmit(u0[:, :1], real, np.full(n, i), prof, stats, train_rng)[:, 0]
                for i in range(R)], axis=-1)
            relay = _flip_relay_index(np.argmax(np.abs(probe) ** 2, axis=-1), R, config.feedback_error_prob, fb_rng)
            x = _single_relay_transmit(diff_encode(s), real, relay, prof, stats, noise_rng)
            dec = diff_decode(x)
        return _tally(idx, dec, L)

    prof = scheme_profile(scheme, profile)
    pairs = uses_pairs(scheme)
    nb = R // 2 if pairs else R
    th = np.ones(nb) if theta is None else np.asarray(theta)
    b = select_bits(scheme, config.bit_algorithm, real, profile, stats, th,
                    rng=make_rng(seed, _SOLVER if config.bit_algorithm is not BitAlgorithm.SEQUENTIAL_TRAINING
                                 else _TRAINING, batch),
                    weighting=config.weighting, noisy_training=config.noisy_training,
                    randomization_rounds=config.randomization_rounds)
    b = flip_feedback(b, config.feedback_error_prob, fb_rng)
    state = FeedbackState(b[:, None, :], th)
    ereal = _expand(real)

    if scheme is Scheme.SCALAR_FEEDBACK:
        x = simulate_two_hop(s[..., None], ereal, state, prof, stats, noise_rng)[..., 0]
        c = np.sum(power_vector(FeedbackState(b, th), prof, stats) * real.h, axis=-1)
        dec = nearest_index(x / c[:, None])
    elif scheme is Scheme.ALAMOUTI_PAIRS:
        blocks = s.reshape(n, L // 2, 2) / math.sqrt(2)
        x = simulate_two_hop(blocks, ereal, state, prof, stats, noise_rng, relay_maps=alamouti_relay_maps(R))
        H = alamouti_equivalent(real, FeedbackState(b, th), prof, stats).H
        dec = alamouti_ml_decode(x, H[:, None]).reshape(n, L)
    elif scheme is Scheme.DIFF_SCALAR:
        u = diff_encode(s)
        x = simulate_two_hop(u[..., None], ereal, state, prof, stats, noise_rng)[..., 0]
        dec = diff_decode(x)
    else:
        u = diff_alamouti_encode(s)
        x = simulate_two_hop(u, ereal, state, prof, stats, noise_rng, relay_maps=alamouti_relay_maps(R))
        dec = diff_alamouti_decode(x)
    return _tally(idx, dec, L)


def _tally(idx, dec, L):
    wrong_sym = idx != dec
    bit_err = int(np.sum(_bits_of(idx) != _bits_of(dec)))
    return bit_err, int(wrong_sym.sum()), int(np.any(wrong_sym, axis=-1).sum())


def run_point(config: ExperimentConfig, snr_db: float, stats: ChannelStats | None = None) -> SnrPoint:
    """Simulate one SNR point until the error target or the trial cap is reached."""
    stats = build_stats(config) if stats is None else stats
    profile = build_profile(config, snr_db)
    theta = _loading(config, stats, profile)
    pt = SnrPoint(snr_db, theta=None if theta is None else tuple(float(t) for t in theta))
    L = config.block_symbols
    batch = 0
    while pt.bit_errors < config.target_errors and pt.trials < config.max_trials:
        n = min(config.batch_size, config.max_trials - pt.trials)
        be, se, ble = _simulate_batch(config, stats, profile, theta, n, batch)
        pt.trials += n
        pt.bits += 2 * L * n
        pt.symbols += L * n
        pt.blocks += n
        pt.bit_errors += be
        pt.symbol_errors += se
        pt.block_errors += ble
        batch += 1
    log.debug("snr %.1f dB: %d trials, ber %.3g", snr_db, pt.trials, pt.ber)
    return pt


def _run_point_args(args):
    return run_point(*args)


def run_experiment(config: ExperimentConfig, n_jobs: int = 1) -> CurveResult:
    """Simulate the whole SNR grid; ``n_jobs > 1`` spreads SNR points over processes."""
    stats = build_stats(config)
    jobs = [(config, snr, stats) for snr in config.snr_grid]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            points = list(pool.map(_run_point_args, jobs))
    else:
        points = [run_point(*job) for job in jobs]
    return CurveResult(config, points)
