"""Experiment harnesses: noisy-pattern recognition sweeps and parameter-perturbation Monte Carlo."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .network import (DEFAULT_PARAMS, Crossbar, NetworkParams, infer_batch, train_all)
from .patterns import TIE, DigitCorpus, noisy_array, oracle_classify_many

JUDGES = ("oracle", "circuit")


@dataclass(frozen=True)
class SweepCase:
    digit: int
    flips: tuple[int, ...]
    judged: int  # -1 for a tie or no output spike
    correct: bool


@dataclass
class SweepResult:
    k: int
    judge: str
    cases: list[SweepCase]

    @property
    def total(self) -> int:
        return len(self.cases)

    @property
    def correct(self) -> int:
        return sum(c.correct for c in self.cases)

    @property
    def rate_pct(self) -> float:
        return 100.0 * self.correct / self.total

    def summary(self) -> dict:
        return {"k": self.k, "total": self.total, "correct": self.correct,
                "rate_pct": self.rate_pct}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["digit", "flipped", "judged", "correct"])
            for c in sorted(self.cases, key=lambda c: (c.digit, c.flips)):
                w.writerow([c.digit, ";".join(map(str, c.flips)), c.judged, int(c.correct)])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def judge_patterns(corpus: DigitCorpus, patterns: np.ndarray, judge: str,
                   xb: Crossbar | None = None,
                   params: NetworkParams = DEFAULT_PARAMS) -> np.ndarray:
    """Digit index (or ``TIE``) assigned to each pattern by the oracle or the circuit."""
    if judge == "oracle":
        return oracle_classify_many(corpus, patterns)
    if judge == "circuit":
        if xb is None:
            xb = train_all(Crossbar.fresh(params), corpus.array(), params=params)
        return infer_batch(xb.set_mode("infer"), patterns, params=params).verdict
    raise ValueError(f"unknown judge {judge!r}; expected one of {JUDGES}")


def recognition_sweep(corpus: DigitCorpus, k: int, judge: str = "oracle",
                      xb: Crossbar | None = None,
                      params: NetworkParams = DEFAULT_PARAMS) -> SweepResult:
    """Judge every pattern with exactly ``k`` flipped pixels.

    Ties and silent outputs count as misses.  The circuit judge trains a
    fresh crossbar on the corpus unless ``xb`` is supplied.
    """
    digits, sets, pats = noisy_array(corpus, k)
    judged = judge_patterns(corpus, pats, judge, xb, params)
    cases = [SweepCase(int(d), tuple(fl), int(j), bool(j == d and j != TIE))
             for d, fl, j in zip(digits, sets, judged)]
    return SweepResult(k, judge, cases)


# ---------------------------------------------------------------------------
# perturbation Monte Carlo

# parameters drawn per seed, grouped by the NetworkParams field holding them
PERTURBED = {
    "input_neuron": ("c_u", "i_gain", "i_leak", "v_onset", "v_sv", "v_reset", "spike_width"),
    "output_neuron": ("c_u", "i_gain", "i_leak", "v_onset", "v_sv", "v_reset", "spike_width"),
    "stdp": ("a_plus", "a_minus", "tau_plus", "tau_minus", "g_m", "c_1", "t_pulse"),
    "wmap": ("v_lo", "v_hi", "g_hrs", "g_lrs"),
    "summing": ("gain", "v_cm"),
    None: ("delay",),
}


def perturbation_factors(pct: float, rng: np.random.Generator) -> dict[str, float]:
    """One uniform factor in ``[1 - pct, 1 + pct]`` per parameter, drawn in a fixed order."""
    out = {}
    for group, names in PERTURBED.items():
        for name in names:
            key = name if group is None else f"{group}.{name}"
            out[key] = float(rng.uniform(1 - pct, 1 + pct))
    return out


def perturb_params(params: NetworkParams, factors: dict[str, float]) -> NetworkParams:
    """Apply ``group.name -> factor`` scalings.  Raises ValueError for an invalid result."""
    updates = {}
    for group, names in PERTURBED.items():
        if group is None:
            for name in names:
                updates[name] = getattr(params, name) * factors.get(name, 1.0)
            continue
        obj = getattr(params, group)
        changes = {n: getattr(obj, n) * factors.get(f"{group}.{n}", 1.0) for n in names}
        updates[group] = replace(obj, **changes)
    return replace(params, **updates)


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    verdicts: tuple[int, ...]
    survived: bool
    error: str = ""


def _run_seed(args) -> SeedOutcome:
    index, seq, pct, params, corpus = args
    rng = np.random.default_rng(seq)
    try:
        p = perturb_params(params, perturbation_factors(pct, rng))
    except ValueError as exc:
        return SeedOutcome(index, (), False, str(exc))
    pats = corpus.array()
    xb = train_all(Crossbar.fresh(p), pats, params=p)
    verdict = tuple(int(v) for v in infer_batch(xb.set_mode("infer"), pats, params=p).verdict)
    return SeedOutcome(index, verdict, verdict == tuple(range(len(corpus))))


@dataclass
class PerturbResult:
    pct: float
    outcomes: list[SeedOutcome]

    @property
    def survival(self) -> float:
        return sum(o.survived for o in self.outcomes) / len(self.outcomes)

    def summary(self) -> dict:
        return {"pct": self.pct, "seeds": len(self.outcomes),
                "survived": sum(o.survived for o in self.outcomes),
                "survival": self.survival}


def perturb_sweep(corpus: DigitCorpus, pct: float, n_seeds: int, seed: int = 0,
                  params: NetworkParams = DEFAULT_PARAMS, threads: int = 1) -> PerturbResult:
    """Fraction of perturbed systems that still recognise every clean digit.

    Each seed scales every neuron, synapse, summing and delay parameter by
    its own uniform factor (shared by all instances of that parameter),
    retrains from scratch and presents the clean corpus.  Seeds come from
    ``SeedSequence(seed).spawn``, so results do not depend on ``threads``.
    """
    if not 0 <= pct <= 0.3:
        raise ValueError("pct must lie in [0, 0.3]")
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    seqs = np.random.SeedSequence(seed).spawn(n_seeds)
    jobs = [(i, s, pct, params, corpus) for i, s in enumerate(seqs)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_seed, jobs))
    else:
        outcomes = [_run_seed(j) for j in jobs]
    return PerturbResult(pct, sorted(outcomes, key=lambda o: o.seed))
