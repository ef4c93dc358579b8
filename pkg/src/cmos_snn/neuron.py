"""Behavioural leaky integrate-and-fire neuron with a Schmitt-trigger threshold.

Membrane update per step (vectorised over any array shape)::

    v <- clip(v + t_int * (i_gain * max(0, v_ff - v_onset) - i_leak) / c_u, floor, v_dd)

``t_int`` is the part of the step not covered by the post-spike hold, and the
leak never pulls the membrane below ``v_reset``.  Threshold crossings are
located inside the step by linear interpolation, so onset times do not snap
to the step grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

V_DD = 1.8
V_ONSET = 0.5
V_BLACK = 1.2
V_WHITE = 0.0

# remaining-time values below this fraction of dt count as expired
_EPS = 1e-6


@dataclass(frozen=True)
class SchmittDesign:
    R: float = 1.0  # sqrt(beta_n2 / beta_p2)
    R_n: float = 1.0  # sqrt(beta_n1 / beta_n2)
    v_dd: float = V_DD
    v_th: float = 0.4

    def __post_init__(self):
        if not self.R > 0 or not self.R_n > 0:
            raise ValueError("transistor ratios R and R_n must be positive")
        if not 0 <= self.v_th < self.v_dd:
            raise ValueError("device threshold must lie in [0, v_dd)")


def schmitt_threshold(d: SchmittDesign) -> float:
    """Switching voltage of the Schmitt trigger (the neuron's firing threshold).

    Both denominators are kept as derived; they differ in the sign of ``R``.
    """
    den_supply = d.R_n * (d.R + 1) + 1
    den_th = d.R_n * (d.R - 1) + 1
    if den_supply == 0:
        raise ZeroDivisionError("singular Schmitt design: R_n*(R+1)+1 == 0")
    if den_th == 0:
        raise ZeroDivisionError("singular Schmitt design: R_n*(R-1)+1 == 0")
    return d.v_dd * (d.R_n + 1) / den_supply + d.v_th * (d.R_n * (2 * d.R - 1) - 1) / den_th


def _default_threshold() -> float:
    return schmitt_threshold(SchmittDesign())


@dataclass(frozen=True)
class LifParams:
    """Neuron constants.  Defaults describe the input-layer neuron.

    The input current law is rectified-linear above ``v_onset``; ``i_leak``
    defaults to 1% of the full-scale drive ``i_gain * (v_dd - v_onset)``.
    """

    c_u: float = 1e-12
    i_gain: float = 0.54e-6
    v_onset: float = V_ONSET
    i_leak: float = 0.01 * 0.54e-6 * (V_DD - V_ONSET)
    v_sv: float = field(default_factory=_default_threshold)
    v_reset: float = 0.2
    spike_width: float = 100e-9
    t_refr: float = 0.0
    v_dd: float = V_DD

    def __post_init__(self):
        if not 0 < self.v_reset < self.v_sv < self.v_dd:
            raise ValueError(
                f"need 0 < v_reset < v_sv < v_dd, got {self.v_reset}, {self.v_sv}, {self.v_dd}"
            )
        if not (self.c_u > 0 and self.spike_width > 0 and self.i_gain > 0):
            raise ValueError("c_u, spike_width and i_gain must be positive")
        if self.i_leak < 0 or self.t_refr < 0:
            raise ValueError("i_leak and t_refr must be non-negative")

    @property
    def full_scale_current(self) -> float:
        return self.i_gain * (self.v_dd - self.v_onset)


INPUT_NEURON = LifParams()

# Output layer: it only integrates while input pulses are present, so it needs
# a much larger gain and a smaller leak (0.1% of full scale) to accumulate
# across the gaps between input spikes.
OUTPUT_NEURON = LifParams(i_gain=25e-6, i_leak=0.001 * 25e-6 * (V_DD - V_ONSET))


@dataclass
class LifState:
    v_u: np.ndarray
    t_last_spike: np.ndarray  # nan until the first spike
    emitting: np.ndarray  # remaining output pulse time (s)
    refractory: np.ndarray  # remaining hold time (s); membrane pinned at v_reset

    @classmethod
    def initial(cls, p: LifParams, shape=()) -> "LifState":
        return cls(
            v_u=np.full(shape, p.v_reset, dtype=float),
            t_last_spike=np.full(shape, np.nan),
            emitting=np.zeros(shape),
            refractory=np.zeros(shape),
        )

    def output(self, dt: float) -> np.ndarray:
        """Instantaneous pulse output (True while the spike pulse is high)."""
        return self.emitting > _EPS * dt

    def copy(self) -> "LifState":
        return LifState(*(np.array(a, copy=True) for a in
                          (self.v_u, self.t_last_spike, self.emitting, self.refractory)))


def lif_step(p: LifParams, s: LifState, v_ff, inhibit, dt: float, t: float | None = None):
    """Advance the neuron by one step ending at time ``t``.

    Returns ``(new_state, spike)`` where ``spike`` flags an onset this step.
    The onset time is stored in ``new_state.t_last_spike``.  An asserted
    ``inhibit`` resets the membrane and suppresses any onset in the same step.
    """
    t_end = dt if t is None else t
    v_ff = np.clip(v_ff, 0.0, p.v_dd)
    v = s.v_u

    active = np.maximum(dt - s.refractory, 0.0)
    refractory = np.maximum(s.refractory - dt, 0.0)
    emitting = np.maximum(s.emitting - dt, 0.0)

    current = p.i_gain * np.maximum(0.0, v_ff - p.v_onset) - p.i_leak
    slope = current / p.c_u
    v_new = v + active * slope
    v_new = np.maximum(v_new, np.minimum(v, p.v_reset))
    v_new = np.clip(v_new, 0.0, p.v_dd)

    spike = (v_new >= p.v_sv) & (active > _EPS * dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        to_cross = np.where(slope > 0, (p.v_sv - v) / slope, 0.0)
    t_cross = (t_end - active) + np.clip(to_cross, 0.0, active)

    inhibit = np.asarray(inhibit, dtype=bool)
    spike = spike & ~inhibit
    v_new = np.where(inhibit | spike, p.v_reset, v_new)

    since = t_end - t_cross
    refractory = np.where(spike, p.spike_width + p.t_refr - since, refractory)
    emitting = np.where(spike, p.spike_width - since, emitting)
    t_last = np.where(spike, t_cross, s.t_last_spike)

    return LifState(v_new, t_last, emitting, refractory), spike


def cancel_spike(p: LifParams, s: LifState, mask) -> LifState:
    """Undo onsets flagged by ``mask`` that were emitted in the current step."""
    return LifState(
        v_u=np.where(mask, p.v_reset, s.v_u),
        t_last_spike=s.t_last_spike,
        emitting=np.where(mask, 0.0, s.emitting),
        refractory=np.where(mask, 0.0, s.refractory),
    )


def encode_pixel(bit, v_black: float = V_BLACK, v_white: float = V_WHITE):
    """Map a binary pixel (1 = black) to the input drive voltage."""
    bit = np.asarray(bit)
    if not np.all((bit == 0) | (bit == 1)):
        raise ValueError("pixels must be 0 or 1")
    out = np.where(bit == 1, v_black, v_white).astype(float)
    return float(out) if out.ndim == 0 else out


def simulate_constant(p: LifParams, v_ff: float, duration: float, dt: float = 10e-9):
    """Onset times of a single neuron held at a constant drive from rest."""
    s = LifState.initial(p)
    times = []
    n = int(round(duration / dt))
    for k in range(1, n + 1):
        s, spike = lif_step(p, s, v_ff, False, dt, k * dt)
        if spike:
            times.append(float(s.t_last_spike))
    return times


def scaled(p: LifParams, factors: dict[str, float]) -> LifParams:
    """Copy of ``p`` with the named fields multiplied by the given factors."""
    return replace(p, **{k: getattr(p, k) * f for k, f in factors.items()})
