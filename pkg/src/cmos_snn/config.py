"""YAML configuration: defaults, strict key checking and conversion to parameter objects."""
from __future__ import annotations

import copy
import math
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .ecg import HrClassifierConfig
from .network import NetworkParams, SummingStage
from .neuron import LifParams, SchmittDesign, schmitt_threshold
from .patterns import DIGITS, DigitCorpus, load_corpus
from .synapse import StdpParams, WeightMap


class ConfigError(ValueError):
    pass


def default_document() -> dict:
    text = resources.files("cmos_snn").joinpath("default_config.yaml").read_text()
    return yaml.safe_load(text)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            if isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be a scalar")
            out[key] = value
    return out


def _num(doc: dict, key: str, where: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{where}.{key}' must be a number, got {value!r}")
    return float(value)


def _nums(doc: dict, where: str, skip=()) -> dict:
    return {k: _num(doc, k, where) for k in doc if k not in skip}


@dataclass(frozen=True)
class Settings:
    network: NetworkParams
    hr: HrClassifierConfig
    corpus: DigitCorpus
    seed: int
    beat_refractory: float
    beat_rel_height: float
    document: dict

    @property
    def digest(self) -> str:
        """SHA-256 of the resolved configuration in canonical JSON form."""
        blob = json.dumps(self.document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def settings_from_document(doc: dict, base_dir: Path | None = None) -> Settings:
    """Build parameter objects from a fully merged configuration document."""
    try:
        eng = doc["engine"]
        dt = _num(eng, "dt", "engine")
        seed = eng["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError("config key 'engine.seed' must be a non-negative integer")

        nd = doc["neuron"]
        schmitt = SchmittDesign(**_nums(nd["schmitt"], "neuron.schmitt"))
        v_sv = schmitt_threshold(schmitt) if nd["v_sv"] is None else _num(nd, "v_sv", "neuron")
        v_dd = schmitt.v_dd
        neurons = {}
        for role in ("input", "output"):
            d = _nums(nd[role], f"neuron.{role}")
            leak = d.pop("leak_fraction")
            i_leak = leak * d["i_gain"] * (v_dd - d["v_onset"])
            neurons[role] = LifParams(v_sv=v_sv, v_dd=v_dd, i_leak=i_leak, **d)

        sd = doc["synapse"]
        stdp = StdpParams(**_nums(sd["stdp"], "synapse.stdp"))
        wm = _nums(sd["weight_map"], "synapse.weight_map")
        wmap = WeightMap(v_lo=wm["v_lo"], v_hi=wm["v_hi"], g_hrs=1 / wm["r_hrs"],
                         g_lrs=1 / wm["r_lrs"])
        unit = dict(g_m=1e-6, c_1=1e-12, t_pulse=1e-6, t_max_pot=math.inf, t_max_dep=math.inf)
        bcm_low = StdpParams(**_nums(sd["bcm_low"], "synapse.bcm_low"), **unit)
        bcm_high = StdpParams(**_nums(sd["bcm_high"], "synapse.bcm_high"), **unit)

        net = doc["network"]
        n = _nums(net, "network")
        params = NetworkParams(
            input_neuron=neurons["input"], output_neuron=neurons["output"], stdp=stdp,
            wmap=wmap, summing=SummingStage(gain=n["summing_gain"], v_cm=n["v_cm"]),
            delay=n["delay"], v_spike=n["v_spike"],
            v_black=_num(nd, "v_black", "neuron"), v_white=_num(nd, "v_white", "neuron"),
            train_duration=n["train_duration"], infer_duration=n["infer_duration"],
            dt=dt, tie_tol=n["tie_tol"],
        )
        if not dt > 0:
            raise ConfigError("config key 'engine.dt' must be positive")

        td = doc["tasks"]
        hr = HrClassifierConfig(theta_low=bcm_low, theta_high=bcm_high, mode=td["hr_mode"],
                                boundary_tol=_num(td, "boundary_tol", "tasks"),
                                events=int(_num(td, "bcm_events", "tasks")), seed=seed)
        if td["corpus"] is None:
            corpus = DIGITS
        else:
            path = Path(td["corpus"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            corpus = load_corpus(path)
    except ConfigError:
        raise
    except (ValueError, TypeError, ZeroDivisionError, OSError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    return Settings(params, hr, corpus, seed, _num(td, "beat_refractory", "tasks"),
                    _num(td, "beat_rel_height", "tasks"), doc)


def load_settings(path=None, seed: int | None = None) -> Settings:
    """Defaults, overlaid by the YAML file at ``path`` and then by ``seed``."""
    doc = default_document()
    base_dir = None
    if path is not None:
        path = Path(path)
        try:
            user = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}") from exc
        if user is not None:
            if not isinstance(user, dict):
                raise ConfigError("config file must hold a mapping at top level")
            doc = _merge(doc, user)
        base_dir = path.parent
    if seed is not None:
        doc["engine"]["seed"] = seed
    return settings_from_document(doc, base_dir)
