"""Synthetic ground-truth mixtures, including instantaneous source moves.

Sources are unit-RMS white noise amplitude-modulated by slowly varying
log-normal envelopes (2-8 Hz), a stand-in for speech that keeps the
spherical super-Gaussian structure the separator assumes.  Mixing is
either an instantaneous matrix or a per-pair FIR filter bank; a "move"
switches the moving source's mixing column (or filter set) at a given
time, realised by masking the source into pre/post segments so that the
per-source images always sum exactly to the mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import ContractViolationError

#: Mixing columns whose first-microphone gain falls below this are
#: rejected when sampling random matrices, so every source stays audible
#: in the reference channel used for scoring.
MIN_MIC1_GAIN = 0.2


@dataclass(frozen=True)
class ScenarioConfig:
    """Ground-truth generation parameters.

    ``mixing`` may be ``None`` (seeded random operator), a (K, K) matrix
    for instantaneous mixing, or a (K, K, L) FIR bank ``h[mic, src, tap]``
    for convolutive mixing.  When ``move_source`` is set, that source's
    column (or filter row) switches at ``move_time_s``; the replacement
    comes from ``post_mixing`` or is sampled from the same seed stream.
    """

    n_src: int = 3
    duration_s: float = 60.0
    sample_rate: int = 16000
    seed: int = 0
    mixing_mode: str = "instantaneous"
    mixing: np.ndarray | None = None
    move_source: int | None = None
    move_time_s: float | None = None
    post_mixing: np.ndarray | None = None
    max_condition: float = 10.0
    envelope_band_hz: tuple[float, float] = (2.0, 8.0)

    def __post_init__(self):
        if self.n_src < 1:
            raise ContractViolationError("n_src must be >= 1")
        if self.duration_s <= 0:
            raise ContractViolationError("duration_s must be positive")
        if self.mixing_mode not in ("instantaneous", "convolutive"):
            raise ContractViolationError(f"unknown mixing mode {self.mixing_mode!r}")
        if (self.move_source is None) != (self.move_time_s is None):
            raise ContractViolationError("move_source and move_time_s must be set together")
        if self.move_time_s is not None and not 0.0 < self.move_time_s < self.duration_s:
            raise ContractViolationError("move_time_s must lie strictly inside the duration")
        if self.move_source is not None and not 0 <= self.move_source < self.n_src:
            raise ContractViolationError("move_source out of range")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


@dataclass
class GroundTruth:
    """Clean sources, microphone mixtures and per-source mic images."""

    sources: np.ndarray          # (K, N)
    mixtures: np.ndarray         # (K, N), sum over sources of images
    images: np.ndarray           # (K source, K mic, N)
    sample_rate: int
    mixing_pre: np.ndarray
    mixing_post: np.ndarray | None = None
    move_source: int | None = None
    move_sample: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def images_mic1(self) -> np.ndarray:
        """Per-source contribution at the first microphone (K, N)."""
        return self.images[:, 0, :]


def _smooth_envelope(rng: np.random.Generator, n: int, sample_rate: int, band: tuple[float, float]) -> np.ndarray:
    cutoff = rng.uniform(*band)
    z = rng.standard_normal(n)
    spectrum = np.fft.rfft(z)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[freqs > cutoff] = 0.0
    z = np.fft.irfft(spectrum, n)
    z /= max(np.std(z), np.finfo(float).tiny)
    # clip guards degenerate sub-second signals where the band is empty
    return np.exp(0.75 * np.clip(z, -6.0, 6.0))


def synth_sources(
    n_src: int,
    duration_s: float,
    sample_rate: int = 16000,
    seed: int = 0,
    envelope_band_hz: tuple[float, float] = (2.0, 8.0),
) -> np.ndarray:
    """Independent super-Gaussian test signals, unit RMS, seed-deterministic."""
    if duration_s <= 0:
        raise ContractViolationError("duration_s must be positive")
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng([seed, 0])
    out = np.empty((n_src, n))
    for k in range(n_src):
        carrier = rng.standard_normal(n)
        env = _smooth_envelope(rng, n, sample_rate, envelope_band_hz)
        sig = carrier * env
        out[k] = sig / np.sqrt(np.mean(sig**2))
    return out


def _sample_unit_column(rng: np.random.Generator, k: int) -> np.ndarray:
    col = rng.standard_normal(k)
    col /= np.linalg.norm(col)
    return col


def _sample_mixing_matrix(rng: np.random.Generator, k: int, max_condition: float) -> np.ndarray:
    for _ in range(10000):
        a = rng.standard_normal((k, k))
        a /= np.linalg.norm(a, axis=0)
        if np.linalg.cond(a) <= max_condition and np.min(np.abs(a[0])) >= MIN_MIC1_GAIN:
            return a
    raise ContractViolationError("could not sample a well-conditioned mixing matrix")


def _random_fir_bank(rng: np.random.Generator, k: int, sample_rate: int) -> np.ndarray:
    """Sparse synthetic echoes: 3-5 taps per pair within 64 ms."""
    max_len = min(1024, sample_rate * 64 // 1000)
    bank = np.zeros((k, k, max_len))
    for m in range(k):
        for s in range(k):
            n_taps = rng.integers(3, 6)
            delays = np.sort(rng.integers(0, max_len, size=n_taps))
            delays[0] = rng.integers(0, 32)
            gains = rng.uniform(0.1, 0.5, size=n_taps) * np.exp(-delays / (0.25 * max_len))
            gains[0] = rng.uniform(0.7, 1.0) * (1.0 if m == s else rng.choice([-1.0, 1.0]) * 0.7)
            bank[m, s, delays] = gains
    return bank


def _validate_matrix(a: np.ndarray, k: int, label: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (k, k):
        raise ContractViolationError(f"{label} must have shape ({k}, {k}), got {a.shape}")
    if not np.all(np.isfinite(a)) or np.linalg.matrix_rank(a) < k:
        raise ContractViolationError(f"{label} must be finite and nonsingular")
    return a


def mix(cfg: ScenarioConfig, sources: np.ndarray) -> GroundTruth:
    """Apply the configured mixing operator, tracking per-source images.

    The moving source is split into pre/post masked segments which are
    mixed with the pre/post operators and summed, so superposition of the
    images is exact by construction in both modes.
    """
    sources = np.asarray(sources, dtype=np.float64)
    if sources.ndim != 2 or sources.shape[0] != cfg.n_src:
        raise ContractViolationError(
            f"sources must have shape ({cfg.n_src}, N), got {sources.shape}"
        )
    n = sources.shape[1]
    k = cfg.n_src
    rng = np.random.default_rng([cfg.seed, 1])
    move_sample = None
    if cfg.move_source is not None:
        move_sample = int(np.floor(cfg.move_time_s * cfg.sample_rate))

    if cfg.mixing_mode == "instantaneous":
        if cfg.mixing is None:
            a_pre = _sample_mixing_matrix(rng, k, cfg.max_condition)
        else:
            a_pre = _validate_matrix(cfg.mixing, k, "mixing")
        a_post = None
        if cfg.move_source is not None:
            a_post = a_pre.copy()
            if cfg.post_mixing is not None:
                col = np.asarray(cfg.post_mixing, dtype=np.float64).reshape(k)
                a_post[:, cfg.move_source] = col
                _validate_matrix(a_post, k, "post-move mixing")
            else:
                for _ in range(10000):
                    a_post[:, cfg.move_source] = _sample_unit_column(rng, k)
                    if (
                        np.linalg.cond(a_post) <= cfg.max_condition
                        and abs(a_post[0, cfg.move_source]) >= MIN_MIC1_GAIN
                    ):
                        break
                else:
                    raise ContractViolationError("could not sample a post-move column")
        images = np.empty((k, k, n))
        for s in range(k):
            if s == cfg.move_source:
                pre = sources[s].copy()
                post = sources[s].copy()
                pre[move_sample:] = 0.0
                post[:move_sample] = 0.0
                images[s] = np.outer(a_pre[:, s], pre) + np.outer(a_post[:, s], post)
            else:
                images[s] = np.outer(a_pre[:, s], sources[s])
        mixing_pre, mixing_post = a_pre, a_post
    else:
        if cfg.mixing is None:
            h_pre = _random_fir_bank(rng, k, cfg.sample_rate)
        else:
            h_pre = np.asarray(cfg.mixing, dtype=np.float64)
            if h_pre.ndim != 3 or h_pre.shape[:2] != (k, k):
                raise ContractViolationError(
                    f"FIR bank must have shape ({k}, {k}, L), got {h_pre.shape}"
                )
        h_post = None
        if cfg.move_source is not None:
            if cfg.post_mixing is not None:
                post_filters = np.asarray(cfg.post_mixing, dtype=np.float64)
                if post_filters.shape[0] != k:
                    raise ContractViolationError("post-move filters must have one row per mic")
            else:
                post_filters = _random_fir_bank(rng, k, cfg.sample_rate)[:, cfg.move_source]
            h_post = h_pre.copy()
            length = min(h_post.shape[2], post_filters.shape[1])
            h_post[:, cfg.move_source, :] = 0.0
            h_post[:, cfg.move_source, :length] = post_filters[:, :length]
        images = np.empty((k, k, n))
        for s in range(k):
            segments = [(h_pre, sources[s])]
            if s == cfg.move_source:
                pre = sources[s].copy()
                post = sources[s].copy()
                pre[move_sample:] = 0.0
                post[:move_sample] = 0.0
                segments = [(h_pre, pre), (h_post, post)]
            images[s] = 0.0
            for bank, sig in segments:
                for m in range(k):
                    images[s, m] += fftconvolve(sig, bank[m, s])[:n]
        mixing_pre, mixing_post = h_pre, h_post

    mixtures = images.sum(axis=0)
    return GroundTruth(
        sources=sources,
        mixtures=mixtures,
        images=images,
        sample_rate=cfg.sample_rate,
        mixing_pre=mixing_pre,
        mixing_post=mixing_post,
        move_source=cfg.move_source,
        move_sample=move_sample,
        meta={"seed": cfg.seed, "mixing_mode": cfg.mixing_mode},
    )


def build(cfg: ScenarioConfig, sources: np.ndarray | None = None) -> GroundTruth:
    """Synthesise sources (unless supplied) and mix them per the config."""
    if sources is None:
        sources = synth_sources(
            cfg.n_src, cfg.duration_s, cfg.sample_rate, cfg.seed, cfg.envelope_band_hz
        )
    return mix(cfg, sources)
