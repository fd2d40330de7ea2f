"""Streaming auxiliary-function IVA with IP or ISS demixing updates.

The engine processes one STFT frame at a time:

```text
   carry W from the previous frame
   for iter = 1..n_iter:                      (only 1 pass on skip frames)
       r_k   <- sqrt(sum_f |w_k^H x_f|^2)                 for every source
       U_k,f <- alpha * U_k,f[prev frame]
                + (1 - alpha) * phi(r_k) * x_f x_f^H      for every source
       for k in the scheduled index set:
           ISS:  W_f <- W_f - v_k,f w_k,f^H   (rank-1, no solves)
           IP:   row k of W_f <- normalised solve of (W_f U_k,f) w = e_k
   persist the last pass's U; emit y_f = W_f x_f
```

Notes on conventions:

* Demixing matrices are stored with row ``k`` equal to ``w_k^H``, so the
  separated frame is simply ``W @ x``.
* Source and frequency indices are 0-based throughout the Python API.
* On a degenerate update (singular solve, nonpositive quadratic form,
  vanishing ``1 - v_k``) the affected bins keep their previous demixing
  rows and the event is recorded in :class:`DiagnosticsLog`; a streaming
  system must not halt on a transiently bad bin.
* The ISS path performs no linear solves or inversions; back-projection
  (the only inversion user) lives outside :meth:`OnlineAuxIva.process_frame`.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import ContractViolationError, DegenerateUpdateError
from .stft import Spectrogram

#: Denominator floor for the ISS coefficient ratios.
DENOMINATOR_FLOOR = 1e-32

#: Minimum |1 - v_k| below which the rank-1 update would make W singular.
ISS_DIAGONAL_FLOOR = 1e-12


@dataclass(frozen=True)
class ContrastModel:
    """Source-prior selector supplying the covariance weighting phi(r).

    ``laplace`` uses ``phi(r) = 1/(2r)``; ``gauss`` (time-varying Gaussian)
    uses ``phi(r) = F/r**2`` with ``F = n_bins``.  Activities are floored
    at ``r_floor`` before weighting, since both weights diverge at r = 0.
    """

    kind: str = "laplace"
    n_bins: int = 1
    r_floor: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("laplace", "gauss"):
            raise ContractViolationError(f"unknown contrast model {self.kind!r}")
        if self.r_floor <= 0:
            raise ContractViolationError("r_floor must be positive")
        if self.n_bins < 1:
            raise ContractViolationError("n_bins must be >= 1")

    def weight(self, r):
        """phi(r), vectorised; input is floored at ``r_floor``."""
        r = np.maximum(np.asarray(r, dtype=np.float64), self.r_floor)
        if self.kind == "laplace":
            return 0.5 / r
        return self.n_bins / (r * r)

    def contrast(self, r):
        """G(r) for cost reporting (up to an additive constant for gauss)."""
        r = np.maximum(np.asarray(r, dtype=np.float64), self.r_floor)
        if self.kind == "laplace":
            return r
        return 2.0 * self.n_bins * np.log(r)


@dataclass(frozen=True)
class UpdateSchedule:
    """Step schedule mapping a frame index t (1-based) to updated sources.

    ``before`` is used while ``t < switch_frame`` (or always when no switch
    is configured); ``after`` applies from ``switch_frame`` on.
    """

    before: tuple[int, ...]
    after: tuple[int, ...] = ()
    switch_frame: int | None = None

    @classmethod
    def all_sources(cls, n_src: int) -> "UpdateSchedule":
        return cls(before=tuple(range(n_src)))

    @classmethod
    def switch_to(cls, n_src: int, moving: int | Sequence[int], switch_frame: int) -> "UpdateSchedule":
        """All sources up to ``switch_frame``, then only the moving one(s)."""
        after = (moving,) if isinstance(moving, int) else tuple(moving)
        if not after:
            raise ContractViolationError("the post-switch update set must be nonempty")
        if any(not 0 <= k < n_src for k in after):
            raise ContractViolationError(f"moving source indices {after} out of range")
        return cls(before=tuple(range(n_src)), after=after, switch_frame=int(switch_frame))

    def indices(self, t: int) -> tuple[int, ...]:
        if self.switch_frame is not None and t >= self.switch_frame:
            return self.after
        return self.before


@dataclass(frozen=True)
class OnlineConfig:
    """Streaming engine parameters (defaults follow the reference setup)."""

    alpha: float = 0.99
    n_iter: int = 2
    method: str = "iss"
    update_period: int = 1
    selector: UpdateSchedule | Callable[[int], Sequence[int]] | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ContractViolationError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.n_iter < 1:
            raise ContractViolationError("n_iter must be >= 1")
        if self.method not in ("ip", "iss"):
            raise ContractViolationError(f"method must be 'ip' or 'iss', got {self.method!r}")
        if self.update_period < 1:
            raise ContractViolationError("update_period must be >= 1")


@dataclass
class FlopCounter:
    """Analytic complex multiply-add counts, attributed per phase.

    ``ip_update`` covers the full IP row update (matrix product, LU solve,
    normalisation), ``iss_apply`` the rank-1 demixing update, and
    ``iss_coefficients`` the quadratic forms feeding it.  The demixing
    update proper therefore costs Theta(K^3 F) per source for IP and
    Theta(K^2 F) for ISS; the ISS coefficient statistics are Theta(K^3 F)
    and are tallied separately.
    """

    activity: int = 0
    covariance: int = 0
    iss_coefficients: int = 0
    iss_apply: int = 0
    ip_update: int = 0

    def reset(self) -> None:
        self.activity = self.covariance = 0
        self.iss_coefficients = self.iss_apply = self.ip_update = 0

    @staticmethod
    def activity_flops(k: int, f: int) -> int:
        return f * k * k + f * k

    @staticmethod
    def covariance_flops(k: int, f: int) -> int:
        # rank-1 outer product + scaled blend, per source, all bins
        return 3 * k * k * f

    @staticmethod
    def iss_coefficient_flops(k: int, f: int) -> int:
        # K matrix-vector products plus 2K dot products per bin
        return f * (k**3 + 2 * k * k)

    @staticmethod
    def iss_apply_flops(k: int, f: int) -> int:
        # rank-1 outer product and subtraction over the K x K matrix
        return 2 * k * k * f

    @staticmethod
    def ip_update_flops(k: int, f: int) -> int:
        product = k**3
        factor = sum((k - 1 - j) + (k - 1 - j) ** 2 for j in range(k))
        substitution = k * (k - 1) + k
        normalize = k * k + 2 * k
        return f * (product + factor + substitution + normalize)


@dataclass
class DiagnosticsLog:
    """Freeze-and-log record of degenerate per-bin updates."""

    max_events: int = 10000
    events: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def record(self, kind: str, t: int, k: int, bins: np.ndarray) -> None:
        self.counts[kind] = self.counts.get(kind, 0) + int(bins.size)
        room = self.max_events - len(self.events)
        for f in bins[:room]:
            self.events.append({"kind": kind, "t": int(t), "f": int(f), "k": int(k)})

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def source_activity(W: np.ndarray, frame: np.ndarray, k: int | None = None, r_floor: float = 1e-8):
    """Per-source activity ``r_k = sqrt(sum_f |w_k,f^H x_f|^2)``, floored.

    ``W`` is (F, K, K), ``frame`` is (F, K).  Returns a scalar for a given
    ``k`` or the full length-K vector when ``k`` is None.
    """
    y = np.einsum("fkj,fj->fk", W, frame)
    r = np.sqrt(np.sum(np.abs(y) ** 2, axis=0))
    r = np.maximum(r, r_floor)
    return float(r[k]) if k is not None else r


def update_covariance(prev_U: np.ndarray, alpha: float, phi_r, x: np.ndarray) -> np.ndarray:
    """One step of the autoregressive weighted-covariance recursion.

    The blend base must be the covariance persisted at the *previous
    frame*; within a frame's inner iterations the base is never the
    partially updated value.
    """
    return linalg.rank1_blend(prev_U, alpha, phi_r, x)


def ip_update_row(W: np.ndarray, U_k: np.ndarray, k: int) -> np.ndarray:
    """Iterative-projection row update: solve ``(W U_k) w = e_k``, normalise.

    Returns the demixing *vector* w (its conjugate is stored as row k).
    Batched over leading axes.
    """
    product = np.asarray(W, dtype=np.complex128) @ np.asarray(U_k, dtype=np.complex128)
    z = linalg.solve_unit(product, k)
    quad = np.einsum("...i,...ij,...j->...", np.conj(z), np.asarray(U_k), z).real
    if np.any(quad <= 0):
        raise DegenerateUpdateError(
            f"nonpositive quadratic form in IP update for source {k}", context=(k,)
        )
    return z / np.sqrt(quad)[..., None]


def iss_vector(W: np.ndarray, U_all: np.ndarray, k: int) -> np.ndarray:
    """Source-steering coefficients for index ``k`` (one per source m).

    ``W`` is (F, K, K) with rows ``w_m^H``; ``U_all`` is (K, F, K, K) with
    the per-source weighted covariances.  ``v_m = (w_m^H U_m w_k)/(w_k^H
    U_m w_k)`` for m != k and ``v_k = 1 - (w_k^H U_k w_k)^{-1/2}``.
    """
    W = np.asarray(W, dtype=np.complex128)
    U_all = np.asarray(U_all, dtype=np.complex128)
    single = W.ndim == 2
    if single:
        W, U_all = W[None], U_all[:, None]
    v, ok = _masked_iss_vector(W, U_all, k)
    if not np.all(ok):
        bad = np.flatnonzero(~ok)
        raise DegenerateUpdateError(
            f"nonpositive denominator in ISS coefficients for source {k} "
            f"at bins {tuple(int(b) for b in bad[:16])}",
            context=(k, tuple(int(b) for b in bad[:16])),
        )
    return v[0] if single else v


def _masked_iss_vector(W: np.ndarray, U_all: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    wk_conj = np.conj(W[:, k, :])
    # p[m, f, :] = U_m,f w_k,f  (in row storage: U @ conj(row k))
    p = np.einsum("mfij,fj->mfi", U_all, wk_conj)
    num = np.einsum("fmi,mfi->fm", W, p)
    den = np.einsum("fi,mfi->fm", W[:, k, :], p).real
    ok = np.all(den > 0, axis=1)
    den = np.maximum(den, DENOMINATOR_FLOOR)
    v = num / den
    diag = 1.0 / np.sqrt(den[:, k])
    v[:, k] = 1.0 - diag
    ok &= diag >= ISS_DIAGONAL_FLOOR
    return v, ok


def iss_apply(W: np.ndarray, v: np.ndarray, k: int) -> np.ndarray:
    """Rank-1 demixing update ``W <- W - v w_k^H`` (pre-update row k).

    Raises when ``|1 - v_k|`` vanishes, which would make W singular.
    """
    W = np.asarray(W, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if not np.all(np.isfinite(v)):
        raise ContractViolationError("steering coefficients must be finite")
    if np.any(np.abs(1.0 - v[..., k]) < ISS_DIAGONAL_FLOOR):
        raise DegenerateUpdateError(
            f"ISS update for source {k} would annihilate its own row", context=(k,)
        )
    return W - v[..., :, None] * W[..., k, :][..., None, :]


def project_back(W: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Back-project separated bins onto microphone 1.

    Per bin, ``A = W^{-1}`` and output ``k`` is scaled by ``A[0, k]`` (the
    image of source k at the first microphone), so the outputs sum back to
    the first mixture channel.  ``y`` may be (F, K) or (F, T, K).
    """
    a_row = linalg.inverse(W)[..., 0, :]
    if y.ndim == W.ndim:  # (F, T, K) against (F, K, K)
        return a_row[:, None, :] * y
    return a_row * y


class OnlineAuxIva:
    """Frame-streaming auxiliary-function IVA engine.

    Parameters
    ----------
    n_bins:
        Number of retained STFT bins F.
    n_src:
        Number of sources = microphones K (determined case).
    config:
        :class:`OnlineConfig`; ``selector=None`` updates every source.
    model:
        :class:`ContrastModel`; defaults to Laplace with ``n_bins`` bins.
    n_threads:
        When > 1, per-frame bin work is split into contiguous bin slices
        handled by a thread pool.  Runs with the same thread count are
        bit-identical; changing the count perturbs only the summation
        order of the activity reduction (last-ulp differences).
    init_covariance_scale:
        Diagonal loading of the initial covariances (identity times this).

    State is owned by one stream; run independent streams on independent
    instances.
    """

    def __init__(
        self,
        n_bins: int,
        n_src: int,
        config: OnlineConfig = OnlineConfig(),
        model: ContrastModel | None = None,
        *,
        n_threads: int = 1,
        init_covariance_scale: float = 1e-3,
    ) -> None:
        if n_bins < 1 or n_src < 1:
            raise ContractViolationError("n_bins and n_src must be >= 1")
        self.n_bins = int(n_bins)
        self.n_src = int(n_src)
        self.config = config
        self.model = model if model is not None else ContrastModel("laplace", n_bins=n_bins)
        self.init_covariance_scale = float(init_covariance_scale)
        self.n_threads = max(1, int(n_threads))
        self._pool = ThreadPoolExecutor(self.n_threads) if self.n_threads > 1 else None
        self._slices = [
            slice(b[0], b[-1] + 1)
            for b in np.array_split(np.arange(self.n_bins), self.n_threads)
            if b.size
        ]
        sel = config.selector
        if sel is None:
            sel = UpdateSchedule.all_sources(self.n_src)
        self._indices_at = sel.indices if isinstance(sel, UpdateSchedule) else sel
        self.flops = FlopCounter()
        self.reset()

    def reset(self) -> None:
        """Reinitialise demixing matrices, covariances and counters."""
        eye = np.eye(self.n_src, dtype=np.complex128)
        self.demix = np.tile(eye, (self.n_bins, 1, 1))
        self.covariance = np.tile(
            eye * self.init_covariance_scale, (self.n_src, self.n_bins, 1, 1)
        )
        self._cov_next = np.empty_like(self.covariance)
        self.diagnostics = DiagnosticsLog()
        self.flops.reset()
        self._t = 0

    # -- per-slice kernels -------------------------------------------------

    def _activity_partial(self, x: np.ndarray, sl: slice) -> np.ndarray:
        y = np.einsum("fkj,fj->fk", self.demix[sl], x[sl])
        return np.sum(np.abs(y) ** 2, axis=0)

    def _refresh_covariance(self, x: np.ndarray, phi: np.ndarray, sl: slice) -> None:
        xs = x[sl]
        outer = xs[:, :, None] * np.conj(xs[:, None, :])
        blended = (
            self.config.alpha * self.covariance[:, sl]
            + ((1.0 - self.config.alpha) * phi)[:, None, None, None] * outer
        )
        np.copyto(
            self._cov_next[:, sl],
            0.5 * (blended + np.conj(np.swapaxes(blended, -1, -2))),
        )

    def _iss_step(self, k: int, t: int, sl: slice) -> None:
        W = self.demix[sl]
        v, ok = _masked_iss_vector(W, self._cov_next[:, sl], k)
        updated = W - v[:, :, None] * W[:, k, :][:, None, :]
        if np.all(ok):
            np.copyto(W, updated)
        else:
            np.copyto(W, np.where(ok[:, None, None], updated, W))
            self.diagnostics.record("iss_degenerate", t, k, np.flatnonzero(~ok) + sl.start)

    def _ip_step(self, k: int, t: int, sl: slice) -> None:
        W = self.demix[sl]
        U_k = self._cov_next[k, sl]
        z, ok = linalg.masked_solve_unit(W @ U_k, k)
        quad = np.einsum("fi,fij,fj->f", np.conj(z), U_k, z).real
        ok &= quad > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            row = np.conj(z) / np.sqrt(np.maximum(quad, np.finfo(float).tiny))[:, None]
        if np.all(ok):
            W[:, k, :] = row
        else:
            W[:, k, :] = np.where(ok[:, None], row, W[:, k, :])
            self.diagnostics.record("ip_degenerate", t, k, np.flatnonzero(~ok) + sl.start)

    def _map(self, fn, *args):
        if self._pool is None:
            return [fn(*args, self._slices[0])]
        futures = [self._pool.submit(fn, *args, sl) for sl in self._slices]
        return [f.result() for f in futures]

    # -- public streaming API ----------------------------------------------

    def process_frame(self, frame: np.ndarray) -> np.ndarray:
        """Consume one (F, K) spectral frame, return the separated frame.

        Runs the configured number of inner iterations (demixing updates
        happen only on frames where ``(t - 1) % update_period == 0``; other
        frames still refresh the covariances once) and persists the final
        covariance as this frame's state.
        """
        x = np.asarray(frame, dtype=np.complex128)
        if x.shape != (self.n_bins, self.n_src):
            raise ContractViolationError(
                f"frame must have shape ({self.n_bins}, {self.n_src}), got {x.shape}"
            )
        self._t += 1
        t = self._t
        k, f = self.n_src, self.n_bins
        update_frame = (t - 1) % self.config.update_period == 0
        passes = self.config.n_iter if update_frame else 1
        for _ in range(passes):
            partials = self._map(self._activity_partial, x)
            r = np.sqrt(np.sum(partials, axis=0))
            phi = self.model.weight(r)
            self.flops.activity += FlopCounter.activity_flops(k, f)
            self._map(self._refresh_covariance, x, phi)
            self.flops.covariance += k * FlopCounter.covariance_flops(k, f)
            if update_frame:
                for idx in self._indices_at(t):
                    if not 0 <= idx < k:
                        raise ContractViolationError(f"selector produced index {idx}")
                    if self.config.method == "iss":
                        self._map(self._iss_step, idx, t)
                        self.flops.iss_coefficients += FlopCounter.iss_coefficient_flops(k, f)
                        self.flops.iss_apply += FlopCounter.iss_apply_flops(k, f)
                    else:
                        self._map(self._ip_step, idx, t)
                        self.flops.ip_update += FlopCounter.ip_update_flops(k, f)
        self.covariance, self._cov_next = self._cov_next, self.covariance
        return np.einsum("fkj,fj->fk", self.demix, x)

    def separate(self, spectrogram, project: bool = True):
        """Stream a whole spectrogram through the engine.

        Returns ``(separated Spectrogram, timing dict)``.  Timing separates
        the update loop (everything inside :meth:`process_frame`) from
        back-projection, which is the only step that inverts matrices.
        """
        data = spectrogram.data if isinstance(spectrogram, Spectrogram) else np.asarray(spectrogram)
        if data.ndim != 3 or data.shape[0] != self.n_src or data.shape[2] != self.n_bins:
            raise ContractViolationError(
                f"expected (K={self.n_src}, T, F={self.n_bins}) spectrogram, got {data.shape}"
            )
        n_frames = data.shape[1]
        out = np.empty_like(data)
        update_s = 0.0
        project_s = 0.0
        for t in range(n_frames):
            x = np.ascontiguousarray(data[:, t, :].T)
            tic = time.perf_counter()
            y = self.process_frame(x)
            update_s += time.perf_counter() - tic
            if project:
                tic = time.perf_counter()
                y = project_back(self.demix, y)
                project_s += time.perf_counter() - tic
            out[:, t, :] = y.T
        timing = {"update_loop_s": update_s, "projection_s": project_s, "frames": n_frames}
        return Spectrogram(out), timing

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
