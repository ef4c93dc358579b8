"""ECG ingestion, beat detection and the two-threshold BCM heart-rate classifier."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .engine import SpikeTrain
from .synapse import BCM_THETA1, BCM_THETA2, StdpParams, bcm_drift

LOW, NORMAL, HIGH = "LOW", "NORMAL", "HIGH"


class NoBeatsError(ValueError):
    pass


@dataclass
class EcgRecord:
    sample_rate: float
    samples: np.ndarray  # millivolts
    label: str | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.ndim != 1:
            raise ValueError("ECG samples must be one-dimensional")
        if self.duration < 2.0:
            raise ValueError("need at least 2 s of ECG for rate estimation")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def scaled(self, factor: float) -> "EcgRecord":
        return EcgRecord(self.sample_rate, self.samples * factor, self.label)


def load_ecg_csv(path, sample_rate: float | None = None) -> EcgRecord:
    """Read a ``time_s,amplitude_mv`` CSV (header required).

    The sample rate comes from the time column unless given explicitly.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().strip("'\"") for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    try:
        ia = header.index("amplitude_mv")
    except ValueError:
        raise ValueError(f"{path}: missing amplitude_mv column") from None
    amp = np.array([float(r[ia]) for r in rows])
    if sample_rate is None:
        if "time_s" not in header:
            raise ValueError(f"{path}: need a time_s column or an explicit sample rate")
        it = header.index("time_s")
        t = np.array([float(r[it]) for r in rows])
        steps = np.diff(t)
        if len(steps) == 0 or not np.all(steps > 0):
            raise ValueError(f"{path}: time_s must be strictly increasing")
        sample_rate = 1.0 / float(np.median(steps))
    return EcgRecord(sample_rate, amp, path.stem)


def save_ecg_csv(path, rec: EcgRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "amplitude_mv"])
        for n, a in enumerate(rec.samples):
            w.writerow([repr(n / rec.sample_rate), repr(float(a))])


# P, Q, R, S, T waves: (offset from R in s, amplitude in mV, width in s)
_WAVES = ((-0.20, 0.15, 0.025), (-0.03, -0.15, 0.010), (0.0, 1.2, 0.010),
          (0.03, -0.25, 0.010), (0.28, 0.35, 0.045))


def synthetic_ecg(bpm: float, duration: float = 60.0, sample_rate: float = 360.0,
                  seed: int = 0, rr_jitter: float = 0.03, noise_mv: float = 0.02,
                  wander_mv: float = 0.1):
    """Gaussian-wave ECG with jittered RR intervals.

    The RR intervals are rescaled so that the annotated rate, ``(n - 1) /
    (last - first)`` over the returned beat times, equals ``bpm`` exactly.
    Returns ``(record, beat_times)``.
    """
    rng = np.random.default_rng(seed)
    rr = 60.0 / bpm
    n = int(duration / rr) + 2
    intervals = rr * (1 + rr_jitter * rng.standard_normal(n))
    intervals *= rr / intervals.mean()
    beats = 0.5 + np.concatenate([[0.0], np.cumsum(intervals)])
    beats = beats[beats < duration - 0.5]
    # re-anchor: keep the annotated mean RR exact after truncation
    if len(beats) > 1:
        span = (len(beats) - 1) * rr
        beats = beats[0] + (beats - beats[0]) * span / (beats[-1] - beats[0])
    t = np.arange(int(duration * sample_rate)) / sample_rate
    x = np.zeros_like(t)
    for b in beats:
        for off, amp, width in _WAVES:
            x += amp * np.exp(-0.5 * ((t - b - off) / width) ** 2)
    x += wander_mv * np.sin(2 * np.pi * 0.25 * t + rng.uniform(0, 2 * np.pi))
    x += noise_mv * rng.standard_normal(len(t))
    return EcgRecord(sample_rate, x, f"synthetic-{bpm:g}bpm"), beats


def _qrs_band(x: np.ndarray, fs: float) -> np.ndarray:
    nyq = 0.5 * fs
    hi = min(20.0, 0.9 * nyq)
    b, a = signal.butter(2, [5.0 / nyq, hi / nyq], btype="band")
    return signal.filtfilt(b, a, x)


def detect_beats(rec: EcgRecord, refractory: float = 0.25, rel_height: float = 0.4,
                 width: float = 1e-3) -> SpikeTrain:
    """One spike per heartbeat at the QRS extremum.

    The record is band-passed (5-20 Hz) and rectified.  Candidate peaks must
    exceed ``median + 2 * MAD`` of the rectified signal and be separated by
    ``refractory`` (larger peaks win).  Candidates smaller than ``rel_height``
    times the 95th-percentile candidate height are dropped, which removes T
    waves and noise bumps that clear the noise-relative threshold.  Every threshold is relative to
    the data, so scaling the record leaves the result unchanged.
    """
    fs = rec.sample_rate
    x = rec.samples - np.median(rec.samples)
    r = np.abs(_qrs_band(x, fs)) if len(x) > 15 else np.abs(x)
    med = np.median(r)
    mad = np.median(np.abs(r - med))
    thr = med + 2 * mad
    if not np.any(r > thr):
        raise NoBeatsError("no beats detected")
    distance = max(1, int(math.ceil(refractory * fs)))
    peaks, props = signal.find_peaks(r, height=thr, distance=distance)
    peaks = peaks[r[peaks] > thr]
    if len(peaks) == 0:
        raise NoBeatsError("no beats detected")
    heights = r[peaks]
    peaks = peaks[heights >= rel_height * np.percentile(heights, 95)]
    times = peaks / fs
    return SpikeTrain(tuple(times), width=min(width, 0.5 / fs))


def mean_rate(beats: SpikeTrain) -> float:
    """Beat rate in Hz from the mean inter-beat interval."""
    ts = beats.as_array()
    if len(ts) < 2:
        raise ValueError("need at least two beats for a rate")
    return (len(ts) - 1) / (ts[-1] - ts[0])


@dataclass(frozen=True)
class HrClassifierConfig:
    theta_low: StdpParams = BCM_THETA1
    theta_high: StdpParams = BCM_THETA2
    mode: str = "analytic"
    boundary_tol: float = 0.02
    min_beats: int = 10
    # simulated mode
    events: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("analytic", "simulated"):
            raise ValueError(f"unknown classifier mode {self.mode!r}")
        if not self.theta_low.theta() < self.theta_high.theta():
            raise ValueError("low threshold must sit below the high threshold")

    @property
    def thresholds(self) -> tuple[float, float]:
        return self.theta_low.theta(), self.theta_high.theta()


@dataclass
class HrResult:
    label: str
    rate_hz: float
    dw_low: float
    dw_high: float
    theta_low: float
    theta_high: float
    boundary: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def bpm(self) -> float:
        return 60.0 * self.rate_hz


def weight_changes(cfg: HrClassifierConfig, f: float) -> tuple[float, float]:
    """Weight change of the low- and high-threshold synapses at beat rate ``f``."""
    th1, th2 = cfg.thresholds
    if cfg.mode == "analytic":
        return f * (f - th1), f * (f - th2)
    return (bcm_drift(cfg.theta_low, f, events=cfg.events, seed=cfg.seed),
            bcm_drift(cfg.theta_high, f, events=cfg.events, seed=cfg.seed))


def classify_rate(cfg: HrClassifierConfig, f: float) -> HrResult:
    th1, th2 = cfg.thresholds
    dw1, dw2 = weight_changes(cfg, f)
    if dw1 < 0 and dw2 > 0:
        raise RuntimeError("impossible classifier state: low synapse depresses while high potentiates")
    if dw1 > 0 and dw2 < 0:
        label = NORMAL
    elif dw2 >= 0 and dw1 > 0:
        label = HIGH
    else:
        label = LOW
    res = HrResult(label, f, dw1, dw2, th1, th2)
    for name, th, dw in (("theta_low", th1, dw1), ("theta_high", th2, dw2)):
        if dw == 0 or abs(f - th) <= cfg.boundary_tol * th:
            res.boundary = True
            res.notes.append(f"rate {f:.4f} Hz within {cfg.boundary_tol:.0%} of {name}={th:.4f} Hz")
    if res.boundary:
        warnings.warn("; ".join(res.notes), stacklevel=2)
    return res


def classify_heart_rate(cfg: HrClassifierConfig, beats: SpikeTrain) -> HrResult:
    if len(beats) < cfg.min_beats:
        raise ValueError(f"need at least {cfg.min_beats} beats, got {len(beats)}")
    return classify_rate(cfg, mean_rate(beats))
