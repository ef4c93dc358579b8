"""Fixed-timestep simulation kernel.

Components are stepped in registration order once per time step.  They talk
to each other through a shared ``bus`` dict that is rebuilt from the stimuli
at the start of every step.  A component that emits spikes publishes two
entries: ``"<name>.spike"`` (boolean onset flags) and ``"<name>.t_spike"``
(onset times in seconds, ``nan`` where no onset occurred).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

DEFAULT_DT = 10e-9


class SimulationError(RuntimeError):
    """A component produced a non-finite state value."""

    def __init__(self, component: str, time: float, key: str):
        self.component = component
        self.time = time
        self.key = key
        super().__init__(f"non-finite value in {component}.{key} at t={time!r} s")


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    duration: float = 10e-6
    seed: int = 0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.duration >= self.dt * (1 - 1e-9):
            raise ValueError(f"duration {self.duration} shorter than dt {self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class SpikeTrain:
    """Spike onset times with a common rectangular pulse width."""

    times: tuple[float, ...] = ()
    width: float = 100e-9

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if self.width <= 0:
            raise ValueError("pulse width must be positive")
        ts = self.times
        for a, b in zip(ts, ts[1:]):
            if not b > a:
                raise ValueError("spike times must be strictly increasing")
            # small slack: onsets are quantised to the step grid
            if b - a < self.width * (1 - 1e-9):
                raise ValueError("consecutive onsets closer than the pulse width")
        if ts and ts[0] < 0:
            raise ValueError("spike times must be non-negative")

    def __len__(self) -> int:
        return len(self.times)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def shifted(self, offset: float) -> "SpikeTrain":
        return SpikeTrain(tuple(t + offset for t in self.times), self.width)


def rate_of(train: SpikeTrain, window: tuple[float, float]) -> float:
    """Onset count inside ``[start, stop)`` divided by the window length (Hz)."""
    start, stop = window
    length = stop - start
    if not length > 0:
        raise ValueError("rate window must have positive length")
    ts = train.as_array()
    count = np.count_nonzero((ts >= start) & (ts < stop))
    return count / length


@dataclass
class TraceLog:
    """Sampled waveforms on a shared, monotone time axis."""

    decimation: int = 1
    time: list[float] = field(default_factory=list)
    signals: dict[str, list[np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")

    def record(self, t: float, values: Mapping[str, np.ndarray]) -> None:
        if self.time and t <= self.time[-1]:
            raise ValueError("trace time axis must be strictly increasing")
        self.time.append(t)
        for key, value in values.items():
            self.signals.setdefault(key, []).append(np.array(value, dtype=float, copy=True))

    def __len__(self) -> int:
        return len(self.time)

    def array(self, key: str) -> np.ndarray:
        return np.stack(self.signals[key]) if self.signals.get(key) else np.empty(0)

    def columns(self) -> list[tuple[str, np.ndarray]]:
        """Flatten every signal into named scalar columns (``name[i,j]`` for arrays)."""
        cols = []
        for key, samples in self.signals.items():
            arr = np.stack(samples)
            if arr.ndim == 1:
                cols.append((key, arr))
                continue
            flat = arr.reshape(arr.shape[0], -1)
            for k, idx in enumerate(np.ndindex(*arr.shape[1:])):
                cols.append((f"{key}[{','.join(map(str, idx))}]", flat[:, k]))
        return cols

    def to_csv(self, fh=None) -> str:
        cols = self.columns()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_s"] + [name for name, _ in cols])
        for n, t in enumerate(self.time):
            writer.writerow([repr(float(t))] + [repr(float(c[n])) for _, c in cols])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


class Component:
    """Base class for anything the engine steps.

    Subclasses override :meth:`step` and :meth:`state`.  ``state`` returns the
    arrays that the engine checks for finiteness and can trace.
    """

    name: str = "component"

    def reset(self) -> None:
        pass

    def step(self, t: float, dt: float, bus: dict) -> None:
        raise NotImplementedError

    def state(self) -> dict[str, np.ndarray]:
        return {}


Stimulus = Callable[[float], object] | np.ndarray | float


@dataclass
class RunResult:
    spikes: dict[str, list[SpikeTrain]]
    trace: TraceLog
    n_steps: int


def _stimulus_value(stim, n: int, t: float):
    if callable(stim):
        return stim(t)
    if isinstance(stim, np.ndarray) and stim.ndim >= 1 and stim.dtype != object:
        return stim[n] if stim.shape[0] > n else stim[-1]
    return stim


def run(
    config: SimConfig,
    components: Sequence[Component],
    stimuli: Mapping[str, Stimulus] | None = None,
    probes: Iterable[str] = (),
    trace: Iterable[str] = (),
    decimation: int = 1,
    spike_width: float = 100e-9,
) -> RunResult:
    """Step ``components`` for ``config.n_steps`` steps.

    ``stimuli`` values may be constants, callables of time, or arrays indexed
    by step.  ``probes`` name spiking components whose onsets are collected
    into one :class:`SpikeTrain` per element.  ``trace`` lists bus keys or
    ``"<component>.<state key>"`` entries to sample every ``decimation`` steps.
    """
    stimuli = dict(stimuli or {})
    probes = list(probes)
    trace_keys = list(trace)
    log = TraceLog(decimation=decimation)
    onsets: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {p: [] for p in probes}
    shapes: dict[str, tuple] = {}
    by_name = {c.name: c for c in components}

    dt = config.dt
    n_steps = config.n_steps
    for n in range(1, n_steps + 1):
        t = n * dt
        bus: dict = {key: _stimulus_value(s, n - 1, t) for key, s in stimuli.items()}
        for comp in components:
            comp.step(t, dt, bus)
            for key, arr in comp.state().items():
                if not np.all(np.isfinite(arr)):
                    raise SimulationError(comp.name, t, key)
        for p in probes:
            flags = np.asarray(bus[f"{p}.spike"])
            shapes[p] = flags.shape
            if flags.any():
                idx = np.flatnonzero(flags)
                onsets[p].append((idx, np.asarray(bus[f"{p}.t_spike"]).ravel()[idx]))
        if trace_keys and n % decimation == 0:
            values = {}
            for key in trace_keys:
                if key in bus:
                    values[key] = bus[key]
                else:
                    comp_name, _, field_name = key.partition(".")
                    values[key] = by_name[comp_name].state()[field_name]
            log.record(t, values)

    spikes: dict[str, list[SpikeTrain]] = {}
    for p in probes:
        size = int(np.prod(shapes.get(p, (0,))))
        per: list[list[float]] = [[] for _ in range(size)]
        for idx, times in onsets[p]:
            for i, tt in zip(idx, times):
                per[i].append(float(tt))
        spikes[p] = [SpikeTrain(tuple(ts), spike_width) for ts in per]
    return RunResult(spikes=spikes, trace=log, n_steps=n_steps)
