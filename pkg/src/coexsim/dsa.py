"""Closed-loop exclusion-zone control.

The loop grows the exclusion zone from the policy minimum in fixed steps.
Each iteration first silences every station inside the current radius, then
revokes any remaining station whose individual I/N exceeds the threshold
(plus a configurable offset), and finally checks the aggregate against the
context-dependent threshold. Revocations accumulate, so the active set and
the aggregate are both non-increasing along the trace, and the iteration
count is hard-capped by the policy's radius grid.

If the zone reaches its maximum without meeting the threshold, the loop
shuts every station down and reports non-convergence instead of raising,
keeping what-if exploration responsive.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

from .context import ContextSnapshot
from .interference import (
    InterferenceReport,
    RadioParams,
    World,
    aggregate_from_watts,
    evaluate,
)
from .policy import PolicySet, threshold_for


class RevocationReason(str, Enum):
    INSIDE_EZ = "inside_ez"
    INDIVIDUAL_EXCESS = "individual_excess"
    POLICY = "policy"


class UnknownMbsError(ValueError):
    def __init__(self, ids) -> None:
        self.ids = sorted(ids)
        super().__init__(f"unknown mbs ids: {self.ids}")


@dataclass(frozen=True)
class IterationRecord:
    ez_radius_m: float
    aggregate_in_db: float | None
    active_count: int
    elapsed_ms: float


@dataclass(frozen=True)
class DsaDecision:
    ez_radius_m: float
    revoked: tuple[tuple[str, RevocationReason], ...]
    trace: tuple[IterationRecord, ...]
    converged: bool
    threshold_db: float
    context_id: str

    @property
    def revoked_ids(self) -> frozenset[str]:
        return frozenset(mid for mid, _ in self.revoked)

    def revocation_reason(self, mbs_id: str) -> RevocationReason | None:
        for mid, reason in self.revoked:
            if mid == mbs_id:
                return reason
        return None

    def to_dict(self) -> dict:
        return {
            "ez_radius_m": self.ez_radius_m,
            "converged": self.converged,
            "threshold_db": self.threshold_db,
            "context_id": self.context_id,
            "revoked": [
                {"mbs_id": mid, "reason": reason.value} for mid, reason in self.revoked
            ],
            "trace": [
                {
                    "iteration": i,
                    "ez_radius_m": rec.ez_radius_m,
                    "aggregate_in_db": rec.aggregate_in_db,
                    "active_count": rec.active_count,
                    "elapsed_ms": rec.elapsed_ms,
                }
                for i, rec in enumerate(self.trace)
            ],
        }


@dataclass(frozen=True)
class ControlSet:
    """Explicit what-if controls: a zone radius and per-station overrides."""

    ez_radius_m: float | None = None
    mbs_overrides: Mapping[str, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class StepResult:
    report: InterferenceReport
    threshold_db: float
    passed: bool
    ez_radius_m: float | None
    active_ids: tuple[str, ...]


def _inside_zone(world: World, radius_m: float) -> set[str]:
    return {
        mid for mid, link in world.links.items() if link.distance_2d_m < radius_m
    }


def run_feedback_loop(
    world: World,
    context: ContextSnapshot,
    policy: PolicySet,
    params: RadioParams | None = None,
    on_report: Callable[[InterferenceReport], None] | None = None,
) -> DsaDecision:
    """Iterate zone growth + revocation until the aggregate meets threshold."""
    threshold = threshold_for(context, policy)
    excess_threshold = threshold + policy.individual_excess_offset_db
    radius = policy.ez_min_m
    excess_revoked: dict[str, RevocationReason] = {}
    trace: list[IterationRecord] = []
    converged = False
    final_active: list[str] = []

    while radius <= policy.ez_max_m + 1e-9:
        iter_start = time.perf_counter()
        inside = _inside_zone(world, radius)
        candidate_ids = [
            mid
            for mid in world.order
            if mid in world.active and mid not in inside and mid not in excess_revoked
        ]
        report = evaluate(world.with_active(candidate_ids), context, params)
        if on_report is not None:
            on_report(report)
        offenders = {
            c.mbs_id
            for c in report.contributions
            if c.individual_in_db is not None and c.individual_in_db > excess_threshold
        }
        for mid in offenders:
            excess_revoked[mid] = RevocationReason.INDIVIDUAL_EXCESS
        remaining = {
            c.mbs_id: c.power_w
            for c in report.contributions
            if c.mbs_id not in offenders
        }
        aggregate = aggregate_from_watts(remaining, report.noise_floor_dbw)
        final_active = [mid for mid in candidate_ids if mid not in offenders]
        trace.append(
            IterationRecord(
                ez_radius_m=radius,
                aggregate_in_db=aggregate,
                active_count=len(final_active),
                elapsed_ms=(time.perf_counter() - iter_start) * 1000.0,
            )
        )
        if aggregate is None or aggregate <= threshold:
            converged = True
            break
        radius += policy.ez_step_m

    revoked: dict[str, RevocationReason] = dict(excess_revoked)
    if converged:
        final_radius = trace[-1].ez_radius_m
    else:
        # Zone exhausted: shut everything down but stay usable for what-ifs.
        final_radius = policy.ez_max_m
        for mid in final_active:
            revoked[mid] = RevocationReason.POLICY
        final_active = []
    for mid in _inside_zone(world, final_radius):
        if mid in world.active:
            revoked.setdefault(mid, RevocationReason.INSIDE_EZ)

    ordered = tuple(
        (mid, revoked[mid]) for mid in world.order if mid in revoked
    )
    return DsaDecision(
        ez_radius_m=final_radius,
        revoked=ordered,
        trace=tuple(trace),
        converged=converged,
        threshold_db=threshold,
        context_id=context.snapshot_id,
    )


def active_ids_for_decision(world: World, decision: DsaDecision) -> list[str]:
    revoked = decision.revoked_ids
    return [mid for mid in world.order if mid in world.active and mid not in revoked]


def de_exclusion_check(
    world: World,
    decision: DsaDecision,
    context: ContextSnapshot,
    policy: PolicySet,
    margin_db: float = 3.0,
    params: RadioParams | None = None,
) -> DsaDecision:
    """Try shrinking the zone one step when the aggregate has headroom.

    The headroom test runs under the *current* context (weather may have
    improved since the decision), so the threshold is re-resolved here.
    Stations revoked for individual excess stay revoked; only zone-distance
    revocations are reconsidered. The shrink is kept only if the re-evaluated
    aggregate still meets the threshold. At most one step per call.
    """
    if not decision.converged:
        return decision
    threshold = threshold_for(context, policy)
    excess = {
        mid: reason
        for mid, reason in decision.revoked
        if reason is RevocationReason.INDIVIDUAL_EXCESS
    }
    current = evaluate(
        world.with_active(active_ids_for_decision(world, decision)), context, params
    )
    current_agg = current.aggregate_i_over_n_db
    if current_agg is not None and current_agg > threshold - margin_db:
        return decision
    new_radius = decision.ez_radius_m - policy.ez_step_m
    if new_radius < policy.ez_min_m - 1e-9:
        return decision

    inside = _inside_zone(world, new_radius)
    candidate_ids = [
        mid
        for mid in world.order
        if mid in world.active and mid not in inside and mid not in excess
    ]
    iter_start = time.perf_counter()
    report = evaluate(world.with_active(candidate_ids), context, params)
    aggregate = report.aggregate_i_over_n_db
    if aggregate is not None and aggregate > threshold:
        return decision

    revoked: dict[str, RevocationReason] = dict(excess)
    for mid in inside:
        if mid in world.active:
            revoked.setdefault(mid, RevocationReason.INSIDE_EZ)
    record = IterationRecord(
        ez_radius_m=new_radius,
        aggregate_in_db=aggregate,
        active_count=len(candidate_ids),
        elapsed_ms=(time.perf_counter() - iter_start) * 1000.0,
    )
    return DsaDecision(
        ez_radius_m=new_radius,
        revoked=tuple((mid, revoked[mid]) for mid in world.order if mid in revoked),
        trace=decision.trace + (record,),
        converged=True,
        threshold_db=threshold,
        context_id=context.snapshot_id,
    )


def single_step(
    world: World,
    controls: ControlSet,
    context: ContextSnapshot,
    policy: PolicySet,
    params: RadioParams | None = None,
) -> StepResult:
    """Apply an explicit control set, evaluate once, and report the verdict."""
    unknown = set(controls.mbs_overrides) - set(world.order)
    if unknown:
        raise UnknownMbsError(unknown)
    threshold = threshold_for(context, policy)
    active: list[str] = []
    for mid in world.order:
        on = mid in world.active
        if controls.ez_radius_m is not None:
            on = on and world.links[mid].distance_2d_m >= controls.ez_radius_m
        if mid in controls.mbs_overrides:
            on = controls.mbs_overrides[mid]
        if on:
            active.append(mid)
    report = evaluate(world.with_active(active), context, params)
    return StepResult(
        report=report,
        threshold_db=threshold,
        passed=report.meets(threshold),
        ez_radius_m=controls.ez_radius_m,
        active_ids=tuple(active),
    )


def trace_csv(decision: DsaDecision) -> str:
    """Deterministic trace rows for plotting; wall-clock timings stay in the
    experiment record so repeated runs are byte-identical."""
    lines = ["iteration,ez_m,aggregate_in_db,active_count"]
    for i, rec in enumerate(decision.trace):
        agg = "" if rec.aggregate_in_db is None else repr(rec.aggregate_in_db)
        lines.append(f"{i},{rec.ez_radius_m!r},{agg},{rec.active_count}")
    return "\n".join(lines) + "\n"


def max_iterations(policy: PolicySet) -> int:
    return int(math.ceil((policy.ez_max_m - policy.ez_min_m) / policy.ez_step_m)) + 1
