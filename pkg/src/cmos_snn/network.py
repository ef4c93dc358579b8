"""15x6 crossbar system: column-wise STDP training and winner-take-all inference.

Training (learning switch of column ``j`` closed, output layer detached):
every input neuron's spikes are the pre spikes of synapse ``(i, j)`` and a
copy delayed by ``delay`` is its post spike, so black-pixel rows potentiate.

Inference (learning switches open): column currents are summed into the
drive voltage of the output neurons; the first output spike wins and an OR
gate resets every other output neuron.

Columns and digits are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import engine
from .engine import Component, SimConfig, SpikeTrain
from .neuron import (INPUT_NEURON, OUTPUT_NEURON, V_BLACK, V_WHITE, LifParams, LifState,
                     cancel_spike, encode_pixel, lif_step)
from .synapse import (DEFAULT_MAP, DEFAULT_STDP, StdpParams, SynapseState, WeightMap,
                      apply_spikes, conductance, decay_traces)

N_ROWS = 15
N_COLS = 6

# Summing-stage transimpedance (V/A).  Calibrated with calibrate_gain() over
# every pattern within three flips of a digit; see the function docstring.
DEFAULT_GAIN = 18_400.0


@dataclass(frozen=True)
class SummingStage:
    gain: float = DEFAULT_GAIN
    v_cm: float = 0.9

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("summing gain must be positive")


@dataclass(frozen=True)
class NetworkParams:
    input_neuron: LifParams = INPUT_NEURON
    output_neuron: LifParams = OUTPUT_NEURON
    stdp: StdpParams = DEFAULT_STDP
    wmap: WeightMap = DEFAULT_MAP
    summing: SummingStage = field(default_factory=SummingStage)
    delay: float = 1e-6
    v_spike: float = 1.8  # amplitude of an input neuron's output pulse
    v_black: float = V_BLACK
    v_white: float = V_WHITE
    train_duration: float = 20e-6
    infer_duration: float = 10e-6
    dt: float = engine.DEFAULT_DT
    # relative crossing-time window inside which two output onsets are a tie
    tie_tol: float = 1e-6

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be non-negative")


DEFAULT_PARAMS = NetworkParams()


@dataclass
class Crossbar:
    synapses: SynapseState
    mode: str = "train"
    column: int | None = None
    delay: float = 1e-6

    @classmethod
    def fresh(cls, params: NetworkParams = DEFAULT_PARAMS, rows=N_ROWS, cols=N_COLS):
        """All synapses at HRS."""
        return cls(SynapseState.initial(params.wmap, (rows, cols)), "train", None, params.delay)

    @property
    def shape(self) -> tuple[int, int]:
        return self.synapses.v_g.shape

    @property
    def v_g(self) -> np.ndarray:
        return self.synapses.v_g

    def set_mode(self, mode: str, column: int | None = None) -> "Crossbar":
        if mode == "train":
            if column is None or not 0 <= column < self.shape[1]:
                raise IndexError(f"training column {column} out of range")
        elif mode == "infer":
            column = None
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return replace(self, mode=mode, column=column)

    def conductances(self, wmap: WeightMap = DEFAULT_MAP) -> np.ndarray:
        return conductance(wmap, self.v_g)

    def copy(self) -> "Crossbar":
        return replace(self, synapses=self.synapses.copy())


def delay_line(train: SpikeTrain, delta_t: float) -> SpikeTrain:
    if delta_t < 0:
        raise ValueError("delay must be non-negative")
    return train.shifted(delta_t)


def wta_fanout(spikes) -> np.ndarray:
    """OR-gate inhibition: neuron ``j`` is inhibited when any other neuron spikes."""
    s = np.asarray(spikes, dtype=bool)
    n_active = s.sum(axis=-1, keepdims=True)
    return (n_active - s) > 0


def resolve_coincident(onset, t_onset, tol: float):
    """Keep only the earliest onsets of each row.

    Returns ``(keep, tie)``: ``keep`` marks onsets within ``tol`` of the row's
    earliest onset time, ``tie`` marks rows where more than one onset is kept.
    """
    onset = np.asarray(onset, dtype=bool)
    t = np.where(onset, t_onset, np.inf)
    first = t.min(axis=-1, keepdims=True)
    keep = onset & (t <= first + tol)
    tie = keep.sum(axis=-1) > 1
    return keep, tie


# ---------------------------------------------------------------------------
# engine components


class InputLayer(Component):
    """Rate-coding input neurons driven by per-pixel voltages."""

    def __init__(self, params: LifParams, drive: np.ndarray, off_after: float | None = None,
                 name: str = "input"):
        self.name = name
        self.params = params
        self.drive = np.asarray(drive, dtype=float)
        self.off_after = off_after
        self.reset()

    def reset(self):
        self.s = LifState.initial(self.params, self.drive.shape)

    def step(self, t, dt, bus):
        v_ff = self.drive
        if self.off_after is not None and t > self.off_after + 0.5 * dt:
            v_ff = np.zeros_like(self.drive)
        self.s, spike = lif_step(self.params, self.s, v_ff, False, dt, t)
        bus[f"{self.name}.spike"] = spike
        bus[f"{self.name}.t_spike"] = np.where(spike, self.s.t_last_spike, np.nan)
        bus[f"{self.name}.out"] = self.s.output(dt)

    def state(self):
        return {"v_u": self.s.v_u}


class DelayUnit(Component):
    """Shift register delaying onset flags by a whole number of steps."""

    def __init__(self, delay: float, dt: float, source: str = "input", name: str = "delay"):
        self.name = name
        self.source = source
        self.lag = int(round(delay / dt))
        self.reset()

    def reset(self):
        self.buffer: list[tuple[np.ndarray, np.ndarray]] = []

    def step(self, t, dt, bus):
        spike = np.asarray(bus[f"{self.source}.spike"])
        t_spike = np.asarray(bus[f"{self.source}.t_spike"])
        if self.lag == 0:
            out, t_out = spike, t_spike
        else:
            self.buffer.append((spike, t_spike))
            if len(self.buffer) > self.lag:
                out, t_out = self.buffer.pop(0)
            else:
                out, t_out = np.zeros_like(spike), np.full(spike.shape, np.nan)
        bus[f"{self.name}.spike"] = out
        bus[f"{self.name}.t_spike"] = t_out + self.lag * dt


class LearningSynapses(Component):
    """Crossbar synapses with learning enabled.

    ``pre`` and ``post`` onset arrays arrive shaped ``(cycles, rows)``; cycle
    ``c`` drives column ``columns[c]`` only.
    """

    def __init__(self, synapses: SynapseState, stdp: StdpParams, wmap: WeightMap,
                 columns: Sequence[int], name: str = "synapses"):
        self.name = name
        self.syn = synapses
        self.stdp = stdp
        self.wmap = wmap
        self.columns = list(columns)

    def _route(self, flags):
        out = np.zeros(self.syn.v_g.shape, dtype=bool)
        for c, col in enumerate(self.columns):
            out[:, col] |= flags[c]
        return out

    def step(self, t, dt, bus):
        self.syn = decay_traces(self.syn, self.stdp, dt)
        pre = self._route(bus["input.spike"])
        post = self._route(bus["delay.spike"])
        if pre.any() or post.any():
            self.syn = apply_spikes(self.syn, self.stdp, self.wmap, t, pre, post)

    def state(self):
        return {"v_g": self.syn.v_g}


class SummingAmplifier(Component):
    """Column current to output-neuron drive voltage."""

    def __init__(self, g: np.ndarray, stage: SummingStage, v_spike: float, v_dd: float,
                 name: str = "sum"):
        self.name = name
        self.g = np.asarray(g, dtype=float)
        self.stage = stage
        self.v_spike = v_spike
        self.v_dd = v_dd
        self.v_ff = None

    def step(self, t, dt, bus):
        active = np.asarray(bus["input.out"], dtype=float)
        current = (active @ self.g) * (self.v_spike - self.stage.v_cm)
        self.v_ff = np.clip(self.stage.gain * current, 0.0, self.v_dd)
        bus[f"{self.name}.v_ff"] = self.v_ff

    def state(self):
        return {} if self.v_ff is None else {"v_ff": self.v_ff}


class OutputLayer(Component):
    def __init__(self, params: LifParams, shape, name: str = "output"):
        self.name = name
        self.params = params
        self.shape = shape
        self.reset()

    def reset(self):
        self.s = LifState.initial(self.params, self.shape)
        self.inhibit = np.zeros(self.shape, dtype=bool)

    def step(self, t, dt, bus):
        self.s, spike = lif_step(self.params, self.s, bus["sum.v_ff"], self.inhibit, dt, t)
        bus[f"{self.name}.spike"] = spike
        bus[f"{self.name}.t_spike"] = np.where(spike, self.s.t_last_spike, np.nan)

    def state(self):
        return {"v_u": self.s.v_u}


class WinnerTakeAll(Component):
    """OR-gate fan-out plus bookkeeping of the first output spike per pattern."""

    def __init__(self, layer: OutputLayer, tol: float, name: str = "wta"):
        self.name = name
        self.layer = layer
        self.tol = tol
        batch = layer.shape[:-1]
        self.first_time = np.full(batch, np.nan)
        self.winner = np.full(batch, -1)
        self.tie = np.zeros(batch, dtype=bool)
        self.counts = np.zeros(layer.shape, dtype=int)

    def step(self, t, dt, bus):
        key = f"{self.layer.name}.spike"
        onset = np.asarray(bus[key])
        if onset.any():
            keep, tie = resolve_coincident(onset, bus[f"{self.layer.name}.t_spike"],
                                           self.tol * dt)
            dropped = onset & ~keep
            if dropped.any():
                self.layer.s = cancel_spike(self.layer.params, self.layer.s, dropped)
                bus[key] = keep
                bus[f"{self.layer.name}.t_spike"] = np.where(keep, bus[f"{self.layer.name}.t_spike"], np.nan)
            fresh = keep.any(axis=-1) & (self.winner < 0)
            if fresh.any():
                t_row = np.min(np.where(keep, bus[f"{self.layer.name}.t_spike"], np.inf), axis=-1)
                self.winner = np.where(fresh, np.argmax(keep, axis=-1), self.winner)
                self.tie = np.where(fresh, tie, self.tie)
                self.first_time = np.where(fresh, t_row, self.first_time)
            self.counts += keep
        self.layer.inhibit = wta_fanout(self.layer.s.output(dt))
        bus[f"{self.name}.inhibit"] = self.layer.inhibit


# ---------------------------------------------------------------------------
# training


def _pattern_array(patterns) -> np.ndarray:
    arr = np.asarray(patterns, dtype=int)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != N_ROWS or not np.all((arr == 0) | (arr == 1)):
        raise ValueError("patterns must be 0/1 vectors of length 15")
    return arr


def _train_columns(xb: Crossbar, patterns: np.ndarray, columns: Sequence[int],
                   params: NetworkParams, duration: float | None) -> Crossbar:
    duration = params.train_duration if duration is None else duration
    drive = encode_pixel(patterns, params.v_black, params.v_white)
    layer = InputLayer(params.input_neuron, drive, off_after=duration)
    delay = DelayUnit(xb.delay, params.dt)
    syn = LearningSynapses(xb.synapses.copy(), params.stdp, params.wmap, columns)
    # run past the end of the input so the last delayed spikes still arrive
    total = duration + delay.lag * params.dt + params.dt
    engine.run(SimConfig(dt=params.dt, duration=total), [layer, delay, syn])
    return replace(xb, synapses=syn.syn, mode="train", column=columns[-1])


def train_pattern(xb: Crossbar, pattern, j: int, duration: float | None = None,
                  params: NetworkParams = DEFAULT_PARAMS) -> Crossbar:
    """One learning cycle: present ``pattern`` with only column ``j`` learning."""
    xb = xb.set_mode("train", j)
    return _train_columns(xb, _pattern_array(pattern), [j], params, duration)


def train_all(xb: Crossbar, patterns, duration: float | None = None,
              params: NetworkParams = DEFAULT_PARAMS) -> Crossbar:
    """Train column ``j`` on ``patterns[j]`` for every column.

    The learning cycles touch disjoint columns and start from rested neurons,
    so they are simulated side by side in one run; the result equals running
    them one after another.
    """
    pats = _pattern_array(patterns)
    if len(pats) != xb.shape[1]:
        raise ValueError(f"need {xb.shape[1]} patterns, got {len(pats)}")
    return _train_columns(xb, pats, list(range(len(pats))), params, duration)


# ---------------------------------------------------------------------------
# inference


@dataclass
class InferenceResult:
    winner: np.ndarray  # column of the first output spike, -1 if none
    tie: np.ndarray  # first output spikes were coincident
    latency: np.ndarray  # time of the first output spike (nan if none)
    counts: np.ndarray  # output spikes per column

    @property
    def verdict(self) -> np.ndarray:
        """Winner column, or -1 for no spike or a tie."""
        return np.where(self.tie, -1, self.winner)

    def __getitem__(self, i) -> "InferenceResult":
        return InferenceResult(self.winner[i], self.tie[i], self.latency[i], self.counts[i])


def infer_batch(xb: Crossbar, patterns, duration: float | None = None,
                params: NetworkParams = DEFAULT_PARAMS, trace: Sequence[str] = (),
                decimation: int = 1):
    """Present each pattern to its own copy of the network.

    Returns an :class:`InferenceResult` with one entry per pattern, plus the
    engine's run result when ``trace`` is requested.
    """
    duration = params.infer_duration if duration is None else duration
    pats = _pattern_array(patterns)
    g = conductance(params.wmap, xb.v_g)
    layer = InputLayer(params.input_neuron, encode_pixel(pats, params.v_black, params.v_white))
    summing = SummingAmplifier(g, params.summing, params.v_spike, params.output_neuron.v_dd)
    out = OutputLayer(params.output_neuron, (len(pats), xb.shape[1]))
    wta = WinnerTakeAll(out, params.tie_tol)
    res = engine.run(SimConfig(dt=params.dt, duration=duration), [layer, summing, out, wta],
                     probes=("output",) if trace else (), trace=trace, decimation=decimation)
    result = InferenceResult(wta.winner.copy(), wta.tie.copy(), wta.first_time.copy(),
                             wta.counts.copy())
    return (result, res) if trace else result


def infer(xb: Crossbar, pattern, duration: float | None = None,
          params: NetworkParams = DEFAULT_PARAMS) -> InferenceResult:
    """Single-pattern inference.  ``result.verdict`` is the winning column or -1."""
    xb = xb.set_mode("infer")
    return infer_batch(xb, pattern, duration, params)[0]


def column_drive(xb: Crossbar, patterns, params: NetworkParams = DEFAULT_PARAMS) -> np.ndarray:
    """Steady drive voltage of each output neuron while all black inputs are high."""
    pats = _pattern_array(patterns).astype(float)
    g = conductance(params.wmap, xb.v_g)
    v = params.summing.gain * (pats @ g) * (params.v_spike - params.summing.v_cm)
    return np.clip(v, 0.0, params.output_neuron.v_dd)


def calibrate_gain(patterns, corpus, params: NetworkParams = DEFAULT_PARAMS,
                   iters: int = 30) -> tuple[float, float]:
    """Admissible summing-gain interval for the given probe patterns.

    Lower end: smallest gain (bisection) at which every probe pattern with a
    unique best-overlap digit makes an output neuron fire within the
    inference window.  Upper end: largest gain at which no runner-up column
    saturates at ``v_dd`` (two saturated columns would tie).  The shipped
    default sits inside the interval computed over every pattern within
    three flips of a digit.
    """
    pats = _pattern_array(patterns)
    corpus = _pattern_array(corpus)
    xb = ideal_crossbar(corpus, params)
    g = conductance(params.wmap, xb.v_g)
    overlap = pats @ corpus.T
    top = np.sort(overlap, axis=1)
    unique = top[:, -1] > top[:, -2]
    pats = pats[unique]
    sums = np.sort(pats @ g, axis=1)
    swing = params.v_spike - params.summing.v_cm
    hi = params.output_neuron.v_dd / (sums[:, -2].max() * swing)

    def fires(gain):
        p = replace(params, summing=replace(params.summing, gain=gain))
        r = infer_batch(xb, pats, params=p)
        return bool(np.all(r.winner >= 0))

    lo_g, hi_g = 0.0, hi
    if not fires(hi_g):
        raise ValueError("no admissible gain: weakest pattern cannot fire below saturation")
    for _ in range(iters):
        mid = 0.5 * (lo_g + hi_g)
        if fires(mid):
            hi_g = mid
        else:
            lo_g = mid
    return hi_g, hi


def ideal_crossbar(corpus, params: NetworkParams = DEFAULT_PARAMS) -> Crossbar:
    """Crossbar holding the fully trained weight image (LRS on black pixels)."""
    pats = _pattern_array(corpus)
    v = np.where(pats.T == 1, params.wmap.v_hi, params.wmap.v_lo)
    syn = SynapseState.initial(params.wmap, v.shape)
    syn.v_g = v.astype(float)
    return Crossbar(syn, "infer", None, params.delay)


# ---------------------------------------------------------------------------
# weight files


def save_weights(path, xb: Crossbar) -> None:
    """15 rows x 6 columns of gate voltages, full precision, no header."""
    with open(path, "w") as fh:
        for row in xb.v_g:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_weights(path, params: NetworkParams = DEFAULT_PARAMS) -> Crossbar:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(x) for x in line.split(",")])
    v = np.array(rows, dtype=float)
    if v.ndim != 2 or len({len(r) for r in rows}) != 1:
        raise ValueError("weight file must be a rectangular CSV of gate voltages")
    if np.any(v < params.wmap.v_lo) or np.any(v > params.wmap.v_hi):
        raise ValueError("weight file holds gate voltages outside [v_lo, v_hi]")
    syn = SynapseState.initial(params.wmap, v.shape)
    syn.v_g = v
    return Crossbar(syn, "infer", None, params.delay)
