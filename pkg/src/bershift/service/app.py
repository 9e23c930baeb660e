"""FastAPI service wrapping the core package; the CLI is a thin client."""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import montecarlo, tailflow
from ..classify import ClassifyConfig, classify, load_manifest, run_suite
from ..constructions import ConstructionError, construct_by_name, family_from_json
from .schemas import (
    ClassifyRequest,
    ClassifyResponse,
    ConstructRequest,
    ConstructResponse,
    SimulateRequest,
    SimulateResponse,
    SuiteRequest,
    SuiteResponse,
    TailflowRequest,
    TailflowResponse,
)

app = FastAPI(title="bershift", description="numerical criteria for nonsingular Bernoulli shifts")


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/construct", response_model=ConstructResponse)
def construct(req: ConstructRequest) -> ConstructResponse:
    try:
        fam = construct_by_name(req.name, req.params)
    except (ConstructionError, KeyError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return ConstructResponse(
        family=fam.to_json(),
        metadata=_jsonable(fam.metadata),
        desk_substitutions=list(fam.desk_substitutions),
    )


@app.post("/classify", response_model=ClassifyResponse)
def classify_endpoint(req: ClassifyRequest) -> ClassifyResponse:
    try:
        fam = family_from_json(req.family)
        cfg = ClassifyConfig.from_json(req.config)
        report = classify(fam, cfg)
    except (ConstructionError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return ClassifyResponse(report=report.to_json())


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        fam = family_from_json(req.family)
        if req.stat == "lattice":
            p = req.params.get("p")
            if p is None:
                info = fam.lattice_info()
                if info is None:
                    raise ValueError("no lattice gap: pass params.p")
                p = info.p
            rep = montecarlo.lattice_stat(fam, float(p), req.windows,
                                          req.samples, req.seed, req.threads)
            return SimulateResponse(report=rep.to_json())
        if req.stat == "recurrence":
            rep = montecarlo.recurrence_norm_estimates(fam, req.windows,
                                                       req.samples, req.seed, req.threads)
            return SimulateResponse(report=rep.to_json())
        if req.stat == "flip":
            n0 = req.params.get("n0", None)
            horizon = req.params.get("horizon", 5000)
            if n0 is None:
                n0 = fam.probe_start()
            rep = montecarlo.run_flip_probes(fam, int(n0), req.samples, req.seed,
                                             int(horizon), req.threads)
            return SimulateResponse(report=rep.to_json())
        if req.stat == "permflow":
            rep = _permflow(fam, req)
            return SimulateResponse(report=rep)
        raise ValueError(f"unknown stat {req.stat!r}")
    except (ConstructionError, ValueError, AttributeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _permflow(fam, req: SimulateRequest) -> dict:
    windows = sorted(req.windows)
    big = fam.group.ball(windows[-1])
    nu = fam.reference()
    U_of = getattr(fam, "witness_U_of", None)
    rho_of = getattr(fam, "rho", None)
    if U_of is None and rho_of is None:
        raise ValueError("permflow needs a witness (U_g) or a lattice family (rho_g)")
    p = req.params.get("p")
    if p is None and rho_of is not None:
        info = fam.lattice_info()
        p = info.p if info is not None else None
    nu_w = getattr(fam, "witness_nu", None) or nu
    stable = 0
    rows = []
    for i in range(req.samples):
        rng = montecarlo.derive_rng(req.seed, 3, i)
        x = montecarlo.sample_configuration(fam, big, rng)
        if U_of is not None:
            out = montecarlo.perm_flow_sum(fam, nu_w, x, windows, U_of=U_of)
        else:
            out = montecarlo.perm_flow_sum(fam, nu, x, windows, rho_of=rho_of,
                                           p=float(p) if p is not None else None)
        rows.append(out)
        parts = out["partials"]
        if len(parts) >= 2 and abs(parts[-1] - parts[-2]) < 1e-3:
            stable += 1
    return {
        "windows": windows,
        "samples": req.samples,
        "stable_fraction": stable / max(1, req.samples),
        "first_rows": rows[:10],
        "seed": req.seed,
    }


@app.post("/tailflow", response_model=TailflowResponse)
def tailflow_endpoint(req: TailflowRequest) -> TailflowResponse:
    try:
        spec = tailflow.TailWalkSpec.from_json(req.spec)
        par = req.params
        if req.criterion == "semifinite":
            rep = tailflow.semifinite_criterion(spec, float(par.get("kappa", 1.0)),
                                                int(par.get("N", 256)))
            return TailflowResponse(report=rep.to_json())
        if req.criterion == "eigenvalue":
            rep = tailflow.eigenvalue_criterion(spec, float(par["p"]), int(par.get("N", 256)))
            return TailflowResponse(report=rep.to_json())
        if req.criterion == "ore":
            rep = tailflow.ore_periodicity(spec, float(par.get("C", 2.0)),
                                           int(par.get("N", 256)))
            return TailflowResponse(report=rep.to_json())
        if req.criterion == "walk":
            rng = montecarlo.derive_rng(int(par.get("seed", 20240601)), 4)
            traj = tailflow.simulate_walk(spec, int(par.get("steps", 100)), rng,
                                          int(par.get("paths", 1)))
            return TailflowResponse(report={"trajectories": traj.tolist()})
        raise ValueError(f"unknown criterion {req.criterion!r}")
    except (KeyError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/suite", response_model=SuiteResponse)
def suite(req: SuiteRequest) -> SuiteResponse:
    try:
        manifest = load_manifest(req.manifest)
        result = run_suite(manifest, req.seed)
    except (ConstructionError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return SuiteResponse(ok=result.ok, results=result.results, reports=result.reports)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
