"""Request/response models for the bidding-session API."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class SolveLimitsModel(BaseModel):
    time_limit: float = Field(default=300.0, gt=0)
    node_limit: int = Field(default=2_000_000, gt=0)
    gap_target: float = Field(default=1e-6, gt=0)


class SessionSettings(BaseModel):
    model_kind: Literal["machinist", "forger", "integrated", "two-phase"] = "two-phase"
    solver: Literal["exact", "ga", "pso", "aco"] = "exact"
    seed: int = 0
    limits: SolveLimitsModel = Field(default_factory=SolveLimitsModel)


class CreateSessionRequest(BaseModel):
    instance: dict[str, Any]
    settings: SessionSettings = Field(default_factory=SessionSettings)


class CreateSessionResponse(BaseModel):
    id: str
    settings: SessionSettings


class DeltaEntry(BaseModel):
    table: Literal["machining_unit_cost", "machining_transport_cost",
                   "forging_unit_cost", "forging_transport_cost"]
    kind: Literal["part_blue", "part_llv", "forging_blue", "forging_llv"]
    index: int = Field(ge=0)
    tier1: int = Field(ge=0)
    tier2: Optional[int] = Field(default=None, ge=0)
    value: float = Field(ge=0)


class SubmitRoundRequest(BaseModel):
    delta: list[DeltaEntry] = Field(default_factory=list)
    label: str = ""
    skip_unsolved: bool = False


class SubmitRoundResponse(BaseModel):
    number: int


class SolveRoundRequest(BaseModel):
    solver: Optional[Literal["exact", "ga", "pso", "aco"]] = None
    limits: Optional[SolveLimitsModel] = None
    seed: Optional[int] = None


class WhatIfMutation(BaseModel):
    type: Literal["remove_supplier", "force_assignment", "forbid_assignment",
                  "shift_order", "change_penalty"]
    tier: Optional[Literal["tier1", "tier2"]] = None
    index: Optional[int] = None
    kind: Optional[str] = None
    tier1: Optional[int] = None
    tier2: Optional[int] = None
    from_supplier: Optional[int] = None
    to_supplier: Optional[int] = None
    threshold: Optional[float] = None
    factor: Optional[float] = None


class WhatIfRequest(BaseModel):
    base_round: int = Field(ge=1)
    mutation: WhatIfMutation


class ErrorBody(BaseModel):
    detail: str
