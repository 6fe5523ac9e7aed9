"""Seeded synthetic cohort generation.

Scenario files use a flat ``key = value`` grammar, one entry per line;
``#`` comments and blank lines are ignored::

    n = 51
    intercept = -3.9
    intercept_m12 = -3.5        # optional; defaults to intercept
    rate = 0.3                  # base per-item score rate
    rate.item_22 = 0.5          # per-item override
    coef.item_13 = 2.6          # causal item log-odds per score point
    severity = 0.0              # shared latent factor inducing item correlation

Item scores are Binomial(max_score, rate_i); with ``severity`` s > 0 each
participant draws a latent u ~ N(0,1) and the per-item rate becomes
expit(logit(rate_i) + s*u), which correlates items without changing the
marginal shape much. Fall labels are Bernoulli with
logit = intercept + sum_j coef_j * score_j, drawn independently per horizon.
The generator is a pure function of (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .cohort import CohortDataset, ItemSchema, ParticipantRecord, reference_schema
from .errors import InvalidConfig


@dataclass
class ScenarioConfig:
    n: int = 51
    intercept: float = 0.0
    intercept_m12: float | None = None
    rate: float = 0.3
    item_rates: dict[int, float] = field(default_factory=dict)
    coefficients: dict[int, float] = field(default_factory=dict)
    severity: float = 0.0

    def validate(self, schema: list[ItemSchema]):
        ids = {s.item_id for s in schema}
        if self.n < 1:
            raise InvalidConfig(f"n must be >= 1, got {self.n}")
        if not (0.0 < self.rate < 1.0):
            raise InvalidConfig(f"rate must be in (0,1), got {self.rate}")
        for item_id in self.coefficients:
            if item_id not in ids:
                raise InvalidConfig(f"coef references unknown item {item_id}")
        for item_id, r in self.item_rates.items():
            if item_id not in ids:
                raise InvalidConfig(f"rate override references unknown item {item_id}")
            if not (0.0 < r < 1.0):
                raise InvalidConfig(f"rate.item_{item_id} must be in (0,1), got {r}")
        if self.severity < 0.0:
            raise InvalidConfig("severity must be >= 0")


def _item_key(key, prefix):
    tail = key[len(prefix):]
    if not tail.startswith("item_"):
        raise InvalidConfig(f"expected {prefix}item_<id>, got {key!r}")
    try:
        return int(tail[5:])
    except ValueError:
        raise InvalidConfig(f"bad item id in {key!r}") from None


def parse_scenario(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key == "n":
                cfg.n = int(value)
            elif key == "intercept":
                cfg.intercept = float(value)
            elif key == "intercept_m12":
                cfg.intercept_m12 = float(value)
            elif key == "rate":
                cfg.rate = float(value)
            elif key == "severity":
                cfg.severity = float(value)
            elif key.startswith("rate."):
                cfg.item_rates[_item_key(key, "rate.")] = float(value)
            elif key.startswith("coef."):
                cfg.coefficients[_item_key(key, "coef.")] = float(value)
            else:
                raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
        except ValueError:
            raise InvalidConfig(f"line {lineno}: bad value {value!r} for {key!r}") from None
    return cfg


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def generate_synthetic(config: ScenarioConfig, seed: int,
                       schema: list[ItemSchema] | None = None) -> CohortDataset:
    """Draw a cohort from the scenario. Identical (config, seed) pairs yield
    identical datasets; the draw order per participant is fixed (demographics,
    latent factor, items in id order, then the two labels)."""
    if schema is None:
        schema = reference_schema()
    config.validate(schema)
    rng = np.random.default_rng(seed)
    b0_m6 = config.intercept
    b0_m12 = config.intercept_m12 if config.intercept_m12 is not None else b0_m6

    records = []
    for i in range(config.n):
        gender = "male" if rng.random() < 0.5 else "female"
        age = round(float(np.clip(rng.normal(66.0, 9.0), 40.0, 90.0)), 1)
        living = "alone" if rng.random() < 0.2 else "with_family"
        duration = round(float(rng.gamma(2.0, 3.0)), 1)
        prev_falls = int(rng.poisson(0.8))
        hy = float(rng.choice((1.0, 1.5, 2.0, 2.5, 3.0)))
        u = rng.normal() if config.severity > 0 else 0.0

        scores = {}
        for s in schema:
            base = config.item_rates.get(s.item_id, config.rate)
            p = expit(logit(base) + config.severity * u) if config.severity > 0 else base
            scores[s.item_id] = s.min_score + int(
                rng.binomial(s.max_score - s.min_score, p))

        eta = sum(c * scores[j] for j, c in config.coefficients.items())
        fell_6m = int(rng.random() < expit(b0_m6 + eta))
        fell_12m = int(rng.random() < expit(b0_m12 + eta))

        records.append(ParticipantRecord(
            participant_id=f"P{i + 1:03d}",
            gender=gender,
            age_years=age,
            living=living,
            duration_years=duration,
            previous_falls=prev_falls,
            hy_score=hy,
            item_scores=scores,
            fell_6m=fell_6m,
            fell_12m=fell_12m,
        ))
    return CohortDataset(schema=schema, records=records)
