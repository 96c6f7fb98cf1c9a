"""Regulator policies and secondary-user prioritization.

A policy set is a declarative YAML document per band: interference
thresholds keyed by weather class, exclusion-zone stepping parameters, and
the weighted-sum priority machinery (aspect weights plus score tables).
The engine holds no band logic of its own; everything that differs between
bands lives in the policy file.

Weights are normalized at load, so scaling every weight by the same
positive factor changes nothing downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import yaml

from .context import ContextSnapshot, WeatherKind


class PolicyError(Exception):
    pass


class UserClass(str, Enum):
    FEDERAL = "federal"
    PRIORITY = "priority"
    GENERAL = "general"


class GeneralSubclass(str, Enum):
    EDUCATIONAL = "educational"
    SCIENTIFIC = "scientific"
    GOVERNMENTAL = "governmental"
    COMMERCIAL = "commercial"


class TrafficType(str, Enum):
    REALTIME_VOICE = "realtime_voice"
    STREAMING_VIDEO = "streaming_video"
    EMERGENCY_VIDEO = "emergency_video"
    BULK = "bulk"


@dataclass(frozen=True)
class SecondaryUser:
    id: str
    user_class: UserClass
    traffic_type: TrafficType
    first_responder: bool = False
    general_subclass: GeneralSubclass | None = None

    def __post_init__(self) -> None:
        if self.user_class is UserClass.GENERAL and self.general_subclass is None:
            raise PolicyError(f"user {self.id}: general class requires a subclass")
        if self.user_class is not UserClass.GENERAL and self.general_subclass is not None:
            raise PolicyError(f"user {self.id}: subclass only applies to general users")

    def class_key(self) -> str:
        if self.user_class is UserClass.GENERAL:
            assert self.general_subclass is not None
            return f"general_{self.general_subclass.value}"
        return self.user_class.value


@dataclass(frozen=True)
class PriorityRecord:
    user_id: str
    score: float
    context_snapshot_id: str
    computed_at: float

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "score": self.score,
            "context_snapshot_id": self.context_snapshot_id,
            "computed_at": self.computed_at,
        }


DEFAULT_THRESHOLDS_DB: Mapping[WeatherKind, float] = MappingProxyType(
    {
        WeatherKind.CLEAR: -8.5,
        WeatherKind.CLOUDY: -8.5,
        WeatherKind.RAIN_SNOW: -12.0,
        WeatherKind.EXTREME: -12.0,
    }
)

DEFAULT_WEIGHTS: Mapping[str, float] = MappingProxyType(
    {"weather": 0.25, "traffic": 0.25, "user_class": 0.25, "first_responder": 0.25}
)

DEFAULT_SCORE_TABLES: Mapping[str, Mapping[str, float]] = MappingProxyType(
    {
        "weather": MappingProxyType(
            {"clear": 0.25, "cloudy": 0.5, "rain_snow": 0.75, "extreme": 1.0}
        ),
        "traffic": MappingProxyType(
            {
                "emergency_video": 1.0,
                "realtime_voice": 0.6,
                "streaming_video": 0.2,
                "bulk": 0.1,
            }
        ),
        "user_class": MappingProxyType(
            {
                "federal": 1.0,
                "priority": 0.7,
                "general_educational": 0.5,
                "general_scientific": 0.45,
                "general_governmental": 0.4,
                "general_commercial": 0.3,
            }
        ),
        "first_responder": MappingProxyType({"true": 1.0, "false": 0.0}),
    }
)


@dataclass(frozen=True)
class PolicySet:
    band: str = "12.2-12.7GHz"
    policy_id: str = "default"
    schema_version: int = 1
    thresholds_db: Mapping[WeatherKind, float] = DEFAULT_THRESHOLDS_DB
    ez_min_m: float = 500.0
    ez_max_m: float = 5000.0
    ez_step_m: float = 500.0
    individual_excess_offset_db: float = 0.0
    weights: Mapping[str, float] = DEFAULT_WEIGHTS
    score_tables: Mapping[str, Mapping[str, float]] = DEFAULT_SCORE_TABLES

    def __post_init__(self) -> None:
        for kind, value in self.thresholds_db.items():
            if not math.isfinite(value):
                raise PolicyError(f"threshold for {kind} must be finite")
        clear = self.thresholds_db.get(WeatherKind.CLEAR)
        rainy = self.thresholds_db.get(WeatherKind.RAIN_SNOW)
        if clear is not None and rainy is not None and rainy > clear:
            raise PolicyError(
                f"rainy threshold {rainy} dB must not exceed clear threshold "
                f"{clear} dB (rain demands more protection)"
            )
        if not 0.0 < self.ez_min_m <= self.ez_max_m:
            raise PolicyError("need 0 < ez_min <= ez_max")
        if self.ez_step_m <= 0.0:
            raise PolicyError("ez step must be positive")
        weights = dict(self.weights)
        if not weights:
            raise PolicyError("at least one aspect weight required")
        total = math.fsum(weights.values())
        if total <= 0.0 or any(w < 0.0 for w in weights.values()):
            raise PolicyError("weights must be non-negative with a positive sum")
        normalized = {k: w / total for k, w in weights.items()}
        object.__setattr__(self, "weights", MappingProxyType(normalized))
        object.__setattr__(
            self,
            "thresholds_db",
            MappingProxyType({WeatherKind(k): float(v) for k, v in self.thresholds_db.items()}),
        )
        tables = {}
        for aspect, table in self.score_tables.items():
            for key, score in table.items():
                if not 0.0 <= float(score) <= 1.0:
                    raise PolicyError(
                        f"score table {aspect}[{key}] = {score} outside [0, 1]"
                    )
            tables[aspect] = MappingProxyType({str(k): float(v) for k, v in table.items()})
        object.__setattr__(self, "score_tables", MappingProxyType(tables))

    def max_iterations(self) -> int:
        return int(math.ceil((self.ez_max_m - self.ez_min_m) / self.ez_step_m)) + 1


def threshold_for(context: ContextSnapshot, policy: PolicySet) -> float:
    """Tolerable aggregate I/N threshold under the context's weather."""
    try:
        return policy.thresholds_db[context.weather_kind]
    except KeyError:
        raise PolicyError(
            f"policy gap: no threshold for weather {context.weather_kind.value!r} "
            f"in band {policy.band}"
        ) from None


def _aspect_score(aspect: str, user: SecondaryUser, context: ContextSnapshot, policy: PolicySet) -> float:
    table = policy.score_tables.get(aspect)
    if table is None:
        raise PolicyError(f"missing score table for aspect {aspect!r}")
    if aspect == "weather":
        key = context.weather_kind.value
    elif aspect == "traffic":
        key = user.traffic_type.value
    elif aspect == "user_class":
        key = user.class_key()
    elif aspect == "first_responder":
        key = "true" if user.first_responder else "false"
    else:
        raise PolicyError(f"unknown aspect {aspect!r}")
    try:
        return table[key]
    except KeyError:
        raise PolicyError(f"missing score table entry {aspect}[{key}]") from None


def priority_score(user: SecondaryUser, context: ContextSnapshot, policy: PolicySet) -> float:
    """Weighted sum of the per-aspect scores; lands in [0, 1] by construction."""
    return math.fsum(
        weight * _aspect_score(aspect, user, context, policy)
        for aspect, weight in policy.weights.items()
    )


def priority_record(
    user: SecondaryUser, context: ContextSnapshot, policy: PolicySet, computed_at: float
) -> PriorityRecord:
    return PriorityRecord(
        user_id=user.id,
        score=priority_score(user, context, policy),
        context_snapshot_id=context.snapshot_id,
        computed_at=computed_at,
    )


def load_policy(path: str | Path) -> PolicySet:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise PolicyError(f"cannot read policy {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise PolicyError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise PolicyError(f"{path}: policy must be a mapping")
    return policy_from_dict(doc, default_id=path.stem)


def policy_from_dict(doc: dict, default_id: str = "default") -> PolicySet:
    try:
        thresholds = {
            WeatherKind(k): float(v)
            for k, v in (doc.get("thresholds_db") or dict(DEFAULT_THRESHOLDS_DB)).items()
        }
        ez = doc.get("exclusion_zone") or {}
        return PolicySet(
            band=str(doc.get("band", "12.2-12.7GHz")),
            policy_id=str(doc.get("policy_id", default_id)),
            schema_version=int(doc.get("schema_version", 1)),
            thresholds_db=thresholds,
            ez_min_m=float(ez.get("min_m", 500.0)),
            ez_max_m=float(ez.get("max_m", 5000.0)),
            ez_step_m=float(ez.get("step_m", 500.0)),
            individual_excess_offset_db=float(doc.get("individual_excess_offset_db", 0.0)),
            weights=doc.get("weights") or dict(DEFAULT_WEIGHTS),
            score_tables=doc.get("score_tables")
            or {k: dict(v) for k, v in DEFAULT_SCORE_TABLES.items()},
        )
    except (TypeError, ValueError) as exc:
        raise PolicyError(f"invalid policy document: {exc}") from exc


def policy_to_dict(policy: PolicySet) -> dict:
    return {
        "schema_version": policy.schema_version,
        "policy_id": policy.policy_id,
        "band": policy.band,
        "thresholds_db": {k.value: v for k, v in policy.thresholds_db.items()},
        "exclusion_zone": {
            "min_m": policy.ez_min_m,
            "max_m": policy.ez_max_m,
            "step_m": policy.ez_step_m,
        },
        "individual_excess_offset_db": policy.individual_excess_offset_db,
        "weights": dict(policy.weights),
        "score_tables": {k: dict(v) for k, v in policy.score_tables.items()},
    }


def format_policy(policy: PolicySet) -> str:
    """Pretty text rendering for the CLI's validate --print."""
    lines = [
        f"policy {policy.policy_id} (schema v{policy.schema_version}) band {policy.band}",
        "thresholds:",
    ]
    for kind, value in policy.thresholds_db.items():
        lines.append(f"  {kind.value:<10} {value:+.1f} dB")
    lines.append(
        f"exclusion zone: {policy.ez_min_m:.0f}..{policy.ez_max_m:.0f} m "
        f"in {policy.ez_step_m:.0f} m steps"
    )
    lines.append("weights: " + ", ".join(f"{k}={v:.3f}" for k, v in policy.weights.items()))
    for aspect, table in policy.score_tables.items():
        lines.append(f"scores[{aspect}]: " + ", ".join(f"{k}={v}" for k, v in table.items()))
    return "\n".join(lines) + "\n"
