import csv
import io
import math

import numpy as np
import pytest

from cmos_snn.engine import (Component, SimConfig, SimulationError, SpikeTrain, TraceLog,
                             rate_of, run)


class Counter(Component):
    def __init__(self, name, log):
        self.name = name
        self.log = log
        self.n = 0

    def step(self, t, dt, bus):
        self.n += 1
        self.log.append((self.name, t))
        bus[f"{self.name}.count"] = self.n

    def state(self):
        return {"n": np.array(float(self.n))}


class Blinker(Component):
    """Fires every ``period`` steps."""

    def __init__(self, period, name="blink"):
        self.name = name
        self.period = period
        self.k = 0

    def step(self, t, dt, bus):
        self.k += 1
        fire = self.k % self.period == 0
        bus[f"{self.name}.spike"] = np.array([fire])
        bus[f"{self.name}.t_spike"] = np.array([t if fire else np.nan])


class Poison(Component):
    name = "poison"

    def __init__(self, at):
        self.at = at
        self.k = 0

    def step(self, t, dt, bus):
        self.k += 1

    def state(self):
        return {"x": np.array(np.nan if self.k >= self.at else 0.0)}


def test_sim_config_validation():
    assert SimConfig(dt=1e-8, duration=1e-6).n_steps == 100
    with pytest.raises(ValueError):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(dt=1e-8, duration=1e-9)


def test_components_stepped_in_order_every_step():
    log = []
    a, b = Counter("a", log), Counter("b", log)
    res = run(SimConfig(dt=1e-8, duration=1e-7), [a, b])
    assert res.n_steps == 10 and a.n == b.n == 10
    assert [name for name, _ in log[:4]] == ["a", "b", "a", "b"]
    times = [t for name, t in log if name == "a"]
    assert times == pytest.approx([k * 1e-8 for k in range(1, 11)])


def test_empty_component_set_is_a_vacuous_run():
    res = run(SimConfig(dt=1e-8, duration=1e-6), [], trace=())
    assert res.n_steps == 100 and len(res.trace) == 0 and res.spikes == {}


def test_probe_collects_onsets():
    res = run(SimConfig(dt=1e-8, duration=1e-6), [Blinker(20)], probes=["blink"],
              spike_width=1e-7)
    train = res.spikes["blink"][0]
    assert len(train) == 5
    assert np.allclose(np.diff(train.as_array()), 2e-7)


def test_stimuli_reach_the_bus():
    seen = []

    class Reader(Component):
        name = "reader"

        def step(self, t, dt, bus):
            seen.append(bus["drive"])

    run(SimConfig(dt=1.0, duration=3.0), [Reader()], stimuli={"drive": np.array([5, 6, 7])})
    assert seen == [5, 6, 7]


def test_non_finite_state_raises_with_location():
    with pytest.raises(SimulationError) as info:
        run(SimConfig(dt=1e-8, duration=1e-6), [Poison(at=3)])
    err = info.value
    assert err.component == "poison" and err.key == "x"
    assert err.time == pytest.approx(3e-8)


def test_trace_decimation_and_csv():
    log = []
    res = run(SimConfig(dt=1e-8, duration=1e-7), [Counter("a", log)], trace=["a.count", "a.n"],
              decimation=5)
    assert len(res.trace) == 2
    text = res.trace.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "time_s,a.count,a.n"
    t, count, n = lines[2].split(",")
    assert float(t) == pytest.approx(1e-7) and float(count) == 10.0 == float(n)


def test_trace_csv_flattens_arrays_and_round_trips():
    tl = TraceLog()
    tl.record(0.1, {"v": np.array([[1.0, 2.0]])})
    tl.record(0.2, {"v": np.array([[3.0, 1 / 3]])})
    buf = io.StringIO()
    tl.to_csv(buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["time_s", "v[0,0]", "v[0,1]"]
    assert float(rows[2][2]) == 1 / 3
    with pytest.raises(ValueError):
        tl.record(0.2, {"v": np.zeros((1, 2))})


def test_spike_train_invariants():
    SpikeTrain((0.0, 1e-7, 3e-7), 1e-7)
    with pytest.raises(ValueError):
        SpikeTrain((1e-6, 1e-6))
    with pytest.raises(ValueError):
        SpikeTrain((0.0, 5e-8), 1e-7)
    with pytest.raises(ValueError):
        SpikeTrain((-1.0,))
    assert SpikeTrain((1.0, 2.0), 0.1).shifted(0.5).times == (1.5, 2.5)


def test_rate_of():
    train = SpikeTrain(tuple(np.arange(10) * 0.1), 0.01)
    assert rate_of(train, (0.0, 1.0)) == pytest.approx(10.0)
    assert rate_of(train, (0.0, 0.5)) == pytest.approx(10.0)
    assert rate_of(SpikeTrain(), (0.0, 1.0)) == 0.0
    with pytest.raises(ValueError):
        rate_of(train, (1.0, 1.0))


def test_run_is_deterministic():
    def once():
        return run(SimConfig(dt=1e-8, duration=2e-6), [Blinker(7)], probes=["blink"],
                   spike_width=5e-8).spikes

    a, b = once(), once()
    assert a["blink"][0].times == b["blink"][0].times
    assert all(math.isfinite(t) for t in a["blink"][0].times)
