"""Weighted Gerchberg-Saxton synthesis of one phase pattern serving several Fresnel targets.

The overlap of an estimate with target i is the normalized inner product

    V_i = (1/B) sum_xy exp(j [phi_est(x, y) - phi_i(x, y)])

and the merit is T = sum_i |V_i|. Each iteration re-weights the targets
(w_i <- w_i <|V|> / |V_i|) and recomposes the estimate as the phase of
sum_i w_i (V_i / |V_i|) exp(j phi_i), which is the maximizer of
sum_i w_i Re(conj(V_i_old / |V_i_old|) V_i) for fixed weights.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .phase import PhaseMap, principal_angle

_TINY = 1e-15


def _overlap_phasors(est_phasor: np.ndarray, target_phasors: Sequence[np.ndarray]) -> np.ndarray:
    # np.mean reduces pairwise, so the result does not depend on threading
    return np.array([np.mean(est_phasor * np.conj(t)) for t in target_phasors])


def overlap(est: PhaseMap, target: PhaseMap) -> complex:
    """Normalized complex overlap V between an estimate and a target phase."""
    if est.shape != target.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {target.shape}")
    return complex(np.mean(np.exp(1j * (est.values - target.values))))


def overlaps(est: PhaseMap, targets: Sequence[PhaseMap]) -> np.ndarray:
    for t in targets:
        if t.shape != est.shape:
            raise ValueError(f"shape mismatch {est.shape} vs {t.shape}")
    e = np.exp(1j * est.values)
    return _overlap_phasors(e, [np.exp(1j * t.values) for t in targets])


def merit(est: PhaseMap, targets: Sequence[PhaseMap]) -> float:
    """T = sum_i |V_i|."""
    if not targets:
        raise ValueError("merit needs at least one target")
    return float(np.sum(np.abs(overlaps(est, targets))))


@dataclass(frozen=True)
class WgsParams:
    max_iters: int = 30
    tolerance: float = 0.0
    seed: int = 0
    init: str = "uniform_superposition"
    feedback_exponent: float = 1.0
    adaptive: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if not self.feedback_exponent > 0:
            raise ValueError("feedback_exponent must be > 0")
        if self.init not in ("uniform_superposition", "random"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class WgsTrace:
    merits: list = field(default_factory=list)
    amplitudes: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    best_iteration: int = -1

    def __len__(self):
        return len(self.merits)

    def append(self, T, amps, w):
        self.merits.append(float(T))
        self.amplitudes.append(np.asarray(amps, dtype=float).copy())
        self.weights.append(np.asarray(w, dtype=float).copy())

    @property
    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(np.asarray(self.merits))

    def to_csv(self, path=None) -> str:
        """Rows of iteration, T, |V_1|..|V_A|, w_1..w_A."""
        A = len(self.amplitudes[0]) if self.amplitudes else 0
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "T"] + [f"V{i + 1}" for i in range(A)]
                        + [f"w{i + 1}" for i in range(A)])
        for k, (T, a, w) in enumerate(zip(self.merits, self.amplitudes, self.weights)):
            writer.writerow([k + 1, repr(T)] + [repr(float(v)) for v in a] + [repr(float(v)) for v in w])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def wgs_optimize(targets: Sequence[PhaseMap], params: WgsParams = WgsParams()) -> tuple[PhaseMap, WgsTrace]:
    """Optimize one phase pattern against several target phase profiles.

    Returns the iterate with the highest merit (not necessarily the last) and
    the per-iteration trace. Iteration stops after ``max_iters`` or when the
    merit changes by no more than ``tolerance`` between iterations.
    """
    if not targets:
        raise ValueError("wgs_optimize needs at least one target")
    shape, pitch = targets[0].shape, targets[0].pitch
    for t in targets:
        if t.shape != shape:
            raise ValueError(f"shape mismatch {shape} vs {t.shape}")

    phasors = [np.exp(1j * t.values) for t in targets]
    if params.init == "random":
        rng = np.random.default_rng(params.seed)
        est = rng.uniform(-np.pi, np.pi, size=shape)
    else:
        est = principal_angle(np.sum(phasors, axis=0))

    A = len(targets)
    w = np.ones(A)
    gain = params.feedback_exponent
    prev_dev = None
    V = _overlap_phasors(np.exp(1j * est), phasors)
    T_prev = float(np.sum(np.abs(V)))
    trace = WgsTrace()
    best_T, best_est = -np.inf, est

    for k in range(params.max_iters):
        amp = np.abs(V)
        live = amp >= _TINY
        if live.any():
            ratio = np.ones(A)
            ratio[live] = amp[live].mean() / amp[live]
            dev = 1 / ratio - 1
            if (params.adaptive and prev_dev is not None and dev @ prev_dev < 0
                    and dev @ dev > prev_dev @ prev_dev):
                # the last correction overshot and grew: soften the feedback
                gain *= 0.5
            prev_dev = dev
            # bounded step keeps one starved target from running away
            w = w * np.clip(ratio ** gain, 0.5, 2.0)
        w[~live] = w[live].mean() if live.any() else 1.0
        unit = np.ones(A, dtype=np.complex128)
        unit[live] = V[live] / amp[live]

        field_sum = np.zeros(shape, dtype=np.complex128)
        for wi, ui, p in zip(w, unit, phasors):
            field_sum += (wi * ui) * p
        est = principal_angle(field_sum)

        V = _overlap_phasors(np.exp(1j * est), phasors)
        T = float(np.sum(np.abs(V)))
        trace.append(T, np.abs(V), w)
        if T > best_T:
            best_T, best_est = T, est
            trace.best_iteration = k
        if abs(T - T_prev) <= params.tolerance:
            break
        T_prev = T

    return PhaseMap(best_est, pitch), trace


def uniformity(amplitudes) -> float:
    """Coefficient of variation std/mean of the overlap amplitudes."""
    a = np.asarray(amplitudes, dtype=float)
    return float(a.std() / a.mean())
