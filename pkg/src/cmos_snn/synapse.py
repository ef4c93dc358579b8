"""Memristive STDP synapse: exponential pre/post traces sampled onto a gate voltage.

A post spike samples the pre trace and charges the state capacitor
(potentiation); a pre spike samples the post trace and discharges it
(depression).  Each arriving spike resets its own trace to full amplitude,
which makes the pairing nearest-neighbour.  All operations are vectorised, so
a ``SynapseState`` may hold a single synapse or a whole crossbar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class StdpParams:
    a_plus: float = 1.8
    a_minus: float = 1.8  # magnitude; depression sign is applied in on_pre
    tau_plus: float = 1e-6  # R_p * C_p
    tau_minus: float = 1e-6  # R_m * C_m
    g_m: float = 18e-6
    c_1: float = 1e-12
    t_pulse: float = 20e-9
    v_cm: float = 0.9
    t_max_pot: float | None = None  # None -> 5 * tau_plus
    t_max_dep: float | None = None  # None -> 5 * tau_minus

    def __post_init__(self):
        for name in ("a_plus", "a_minus", "tau_plus", "tau_minus", "g_m", "c_1", "t_pulse"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def step_gain(self) -> float:
        """Gate-voltage change per volt of sampled trace."""
        return self.g_m * self.t_pulse / self.c_1

    @property
    def pot_cutoff(self) -> float:
        return 5 * self.tau_plus if self.t_max_pot is None else self.t_max_pot

    @property
    def dep_cutoff(self) -> float:
        return 5 * self.tau_minus if self.t_max_dep is None else self.t_max_dep

    def theta(self) -> float:
        return bcm_theta(self.a_plus, -self.a_minus, self.tau_plus, self.tau_minus)


@dataclass(frozen=True)
class WeightMap:
    """Linear gate-voltage to conductance map anchored at the HRS/LRS endpoints."""

    v_lo: float = 1.1
    v_hi: float = 1.6
    g_hrs: float = 1 / 1.6e6
    g_lrs: float = 1 / 114e3

    def __post_init__(self):
        if not self.v_lo < self.v_hi:
            raise ValueError("v_lo must be below v_hi")
        if not 0 < self.g_hrs < self.g_lrs:
            raise ValueError("need 0 < g_hrs < g_lrs")

    @property
    def k_gain(self) -> float:
        return (self.g_lrs - self.g_hrs) / (self.v_hi - self.v_lo)


DEFAULT_STDP = StdpParams()
DEFAULT_MAP = WeightMap()

# BCM units: dimensionless curve amplitudes, time constants in seconds and a
# unit sampling gain, so a trace sample maps one-to-one onto a weight change.
# Rate-based pairing has no cutoff window.
BCM_THETA1 = StdpParams(a_plus=0.267, a_minus=0.175, tau_plus=0.7, tau_minus=1.7,
                        g_m=1e-6, c_1=1e-12, t_pulse=1e-6, t_max_pot=math.inf,
                        t_max_dep=math.inf)
BCM_THETA2 = StdpParams(a_plus=0.19, a_minus=0.138, tau_plus=0.7, tau_minus=1.7,
                        g_m=1e-6, c_1=1e-12, t_pulse=1e-6, t_max_pot=math.inf,
                        t_max_dep=math.inf)


@dataclass
class SynapseState:
    v_g: np.ndarray
    trace_pre: np.ndarray
    trace_post: np.ndarray
    t_last_pre: np.ndarray
    t_last_post: np.ndarray

    @classmethod
    def initial(cls, wmap: WeightMap = DEFAULT_MAP, shape=(), v_g: float | None = None):
        return cls(
            v_g=np.full(shape, wmap.v_lo if v_g is None else v_g, dtype=float),
            trace_pre=np.zeros(shape),
            trace_post=np.zeros(shape),
            t_last_pre=np.full(shape, np.nan),
            t_last_post=np.full(shape, np.nan),
        )

    def copy(self) -> "SynapseState":
        return SynapseState(*(np.array(a, copy=True) for a in (
            self.v_g, self.trace_pre, self.trace_post, self.t_last_pre, self.t_last_post)))


def _clamp(v, wmap: WeightMap | None):
    return v if wmap is None else np.clip(v, wmap.v_lo, wmap.v_hi)


def decay_traces(s: SynapseState, p: StdpParams, dt: float) -> SynapseState:
    return replace(
        s,
        trace_pre=s.trace_pre * math.exp(-dt / p.tau_plus),
        trace_post=s.trace_post * math.exp(-dt / p.tau_minus),
    )


def on_pre(s: SynapseState, p: StdpParams, wmap: WeightMap | None, t: float, mask=True):
    """Pre spike: sample the post trace (depression), then reset the pre trace.

    A post spike older than the depression window no longer counts.
    """
    mask = np.asarray(mask, dtype=bool)
    live = mask & (t - s.t_last_post < p.dep_cutoff)
    v_g = np.where(live, _clamp(s.v_g - p.step_gain * s.trace_post, wmap), s.v_g)
    return replace(
        s,
        v_g=v_g,
        trace_pre=np.where(mask, p.a_plus, s.trace_pre),
        t_last_pre=np.where(mask, t, s.t_last_pre),
    )


def on_post(s: SynapseState, p: StdpParams, wmap: WeightMap | None, t: float, mask=True):
    """Post spike: sample the pre trace (potentiation), then reset the post trace.

    A pre spike older than the potentiation window no longer counts.
    """
    mask = np.asarray(mask, dtype=bool)
    live = mask & (t - s.t_last_pre < p.pot_cutoff)
    v_g = np.where(live, _clamp(s.v_g + p.step_gain * s.trace_pre, wmap), s.v_g)
    return replace(
        s,
        v_g=v_g,
        trace_post=np.where(mask, p.a_minus, s.trace_post),
        t_last_post=np.where(mask, t, s.t_last_post),
    )


def apply_spikes(s, p, wmap, t, pre, post) -> SynapseState:
    """Process one step's pre/post arrivals.  Coincident pairs change no weight."""
    pre = np.asarray(pre, dtype=bool)
    post = np.asarray(post, dtype=bool)
    both = pre & post
    s = on_pre(s, p, wmap, t, pre & ~post)
    s = on_post(s, p, wmap, t, post & ~pre)
    if np.any(both):
        s = replace(
            s,
            trace_pre=np.where(both, p.a_plus, s.trace_pre),
            trace_post=np.where(both, p.a_minus, s.trace_post),
            t_last_pre=np.where(both, t, s.t_last_pre),
            t_last_post=np.where(both, t, s.t_last_post),
        )
    return s


def delta_w_curve(p: StdpParams, delta_t):
    """Gate-voltage change of one isolated pair, ``delta_t = t_post - t_pre``."""
    dt = np.asarray(delta_t, dtype=float)
    g = p.step_gain
    with np.errstate(over="ignore"):
        pot = g * p.a_plus * np.exp(-dt / p.tau_plus)
        dep = -g * p.a_minus * np.exp(dt / p.tau_minus)
    out = np.where(dt > 0, np.where(dt < p.pot_cutoff, pot, 0.0),
                   np.where((dt < 0) & (-dt < p.dep_cutoff), dep, 0.0))
    return float(out) if out.ndim == 0 else out


def simulate_pair(p: StdpParams, wmap: WeightMap | None, delta_t: float, dt: float = 10e-9,
                  v0: float | None = None) -> float:
    """Run one pre/post pair through the stepped state machine; return the change in v_g.

    ``delta_t`` is rounded to the step grid.  Starting from mid-range keeps the
    clamp out of the way.
    """
    if v0 is None:
        v0 = 0.0 if wmap is None else 0.5 * (wmap.v_lo + wmap.v_hi)
    lag = int(round(delta_t / dt))
    pre_step, post_step = (0, lag) if lag >= 0 else (-lag, 0)
    s = SynapseState.initial(wmap or DEFAULT_MAP, v_g=v0)
    for n in range(max(pre_step, post_step) + 1):
        if n:
            s = decay_traces(s, p, dt)
        s = apply_spikes(s, p, wmap, n * dt, n == pre_step, n == post_step)
    return float(s.v_g) - v0


def conductance(wmap: WeightMap, v_g):
    """Conductance of the synapse transistor for gate voltage ``v_g``.

    Linear between the endpoints, which are returned exactly.
    """
    v = np.asarray(v_g, dtype=float)
    tol = 1e-12 * (wmap.v_hi - wmap.v_lo)
    if np.any(v < wmap.v_lo - tol) or np.any(v > wmap.v_hi + tol):
        raise ValueError("gate voltage outside [v_lo, v_hi]")
    g = wmap.g_hrs + wmap.k_gain * (v - wmap.v_lo)
    g = np.where(v >= wmap.v_hi, wmap.g_lrs, np.where(v <= wmap.v_lo, wmap.g_hrs, g))
    return float(g) if g.ndim == 0 else g


def bcm_theta(a_plus: float, a_minus_signed: float, tau_plus: float, tau_minus: float) -> float:
    """Rate at which nearest-neighbour STDP switches from depression to potentiation.

    ``a_minus_signed`` is the depression amplitude carrying its negative sign.
    """
    den = a_plus + a_minus_signed
    if den == 0:
        raise ZeroDivisionError("a_plus + a_minus must be non-zero")
    return -(a_plus / tau_minus + a_minus_signed / tau_plus) / den


def pairing_drift(p: StdpParams, pre_times, post_times, wmap: WeightMap | None = None) -> float:
    """Net weight change from driving one synapse with the given spike times.

    Event driven: traces decay in closed form between events, so the result
    does not depend on a step size.  Same rules as ``apply_spikes`` on a
    single synapse, written on plain floats because trains can be long.
    """
    pre = np.asarray(pre_times, dtype=float)
    post = np.asarray(post_times, dtype=float)
    times = np.concatenate([pre, post])
    kind = np.concatenate([np.zeros(len(pre), int), np.ones(len(post), int)])
    order = np.lexsort((kind, times))
    times = times[order].tolist()
    kind = kind[order].tolist()

    gain = p.step_gain
    lo, hi = (-math.inf, math.inf) if wmap is None else (wmap.v_lo, wmap.v_hi)
    v = 0.0 if wmap is None else wmap.v_lo
    v_start = v
    x_pre = x_post = 0.0
    last_pre = last_post = -math.inf
    t_prev = times[0] if times else 0.0
    n = len(times)
    i = 0
    while i < n:
        t = times[i]
        gap = t - t_prev
        if gap:
            x_pre *= math.exp(-gap / p.tau_plus)
            x_post *= math.exp(-gap / p.tau_minus)
        t_prev = t
        is_pre = is_post = False
        while i < n and times[i] == t:
            if kind[i]:
                is_post = True
            else:
                is_pre = True
            i += 1
        if is_pre and not is_post and t - last_post < p.dep_cutoff:
            v = min(max(v - gain * x_post, lo), hi)
        elif is_post and not is_pre and t - last_pre < p.pot_cutoff:
            v = min(max(v + gain * x_pre, lo), hi)
        if is_pre:
            x_pre = p.a_plus
            last_pre = t
        if is_post:
            x_post = p.a_minus
            last_post = t
    return v - v_start


def poisson_train(rate: float, window: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson onsets in ``[0, window)``.

    Draws unit-rate intervals and rescales them, so the same generator state
    gives time-rescaled copies of one sample path at different rates.
    """
    n_max = int(rate * window + 10 * math.sqrt(rate * window + 1) + 20)
    isi = rng.standard_exponential(n_max) / rate
    times = np.cumsum(isi)
    return times[times < window]


def periodic_train(rate: float, window: float, phase: float = 0.0) -> np.ndarray:
    period = 1.0 / rate
    n = int(math.floor((window - phase * period) / period)) + 1
    times = (np.arange(n) + phase) * period
    return times[(times >= 0) & (times < window)]


def bcm_drift(p: StdpParams, f: float, protocol: str = "poisson", window: float | None = None,
              seed: int = 0, offset: float = 0.5, events: int = 20000) -> float:
    """Mean gate-voltage drift per second when pre and post both fire at ``f``.

    ``poisson``: independent Poisson trains (seeded).  ``periodic-offset``:
    regular trains with the post train lagging by ``offset`` of a period.
    Without an explicit ``window`` the window holds ``events`` expected spikes
    per train, so one seed yields a single rescaled sample path for all ``f``
    and the resulting curve is smooth in ``f``.
    """
    if not f > 0:
        raise ValueError("frequency must be positive")
    if window is None:
        window = events / f
    if f * window < 20:
        raise ValueError("window too short to contain >= 20 events")
    if protocol == "poisson":
        rng = np.random.default_rng(seed)
        pre = poisson_train(f, window, rng)
        post = poisson_train(f, window, rng)
    elif protocol == "periodic-offset":
        pre = periodic_train(f, window)
        post = periodic_train(f, window, phase=offset)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return pairing_drift(p, pre, post) / window


def bcm_curve(p: StdpParams, freqs, **kwargs) -> np.ndarray:
    return np.array([bcm_drift(p, float(f), **kwargs) for f in freqs])


def find_zero_crossing(freqs, drift) -> float | None:
    """Linear interpolation of the first sign change from negative to positive."""
    f = np.asarray(freqs, float)
    d = np.asarray(drift, float)
    for k in range(len(f) - 1):
        if d[k] < 0 <= d[k + 1]:
            return float(f[k] - d[k] * (f[k + 1] - f[k]) / (d[k + 1] - d[k]))
    return None


def scaled(p, factors: dict[str, float]):
    return replace(p, **{k: getattr(p, k) * f for k, f in factors.items()})
