"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ConstructRequest(BaseModel):
    name: str
    params: dict = Field(default_factory=dict)


class ConstructResponse(BaseModel):
    family: dict
    metadata: dict
    desk_substitutions: List[str]


class ClassifyRequest(BaseModel):
    family: dict
    config: dict = Field(default_factory=dict)


class ClassifyResponse(BaseModel):
    report: dict


class SimulateRequest(BaseModel):
    family: dict
    stat: str  # lattice | recurrence | flip | permflow
    windows: List[int] = Field(default_factory=lambda: [4, 8, 16, 32])
    samples: int = 1000
    seed: int = 20240601
    threads: int = 1
    params: dict = Field(default_factory=dict)


class SimulateResponse(BaseModel):
    report: dict


class TailflowRequest(BaseModel):
    spec: dict
    criterion: str  # semifinite | eigenvalue | ore | walk
    params: dict = Field(default_factory=dict)


class TailflowResponse(BaseModel):
    report: dict


class SuiteRequest(BaseModel):
    manifest: str | dict = "paper-examples"
    seed: Optional[int] = None


class SuiteResponse(BaseModel):
    ok: bool
    results: List[dict]
    reports: Dict[str, dict]
