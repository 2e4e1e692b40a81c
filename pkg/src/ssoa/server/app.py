"""HTTP face of the bidding-conference service.

Thin FastAPI layer over the session store: validation and shaping live in
pydantic models, business rules and persistence in the store.  Solves run
synchronously under the per-session lock (desk-scale models answer within
the round's time limit); a concurrent solve on the same session is
rejected rather than queued so the operator always knows what is running.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from ..instance import BidDeltaError, SchemaError, SsoaError
from .schemas import (
    CreateSessionRequest,
    CreateSessionResponse,
    SolveRoundRequest,
    SubmitRoundRequest,
    SubmitRoundResponse,
    WhatIfRequest,
)
from .store import SessionError, SessionStore

API_PREFIX = "/v1"


def create_app(data_dir: str) -> FastAPI:
    app = FastAPI(title="ssoa bidding service", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    store = SessionStore(data_dir)
    app.state.store = store

    def get_session(session_id: str):
        try:
            return store.get(session_id)
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc

    @app.post(API_PREFIX + "/sessions", response_model=CreateSessionResponse,
              status_code=201)
    def create_session(request: CreateSessionRequest):
        try:
            session = store.create(request.instance,
                                   request.settings.model_dump())
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        except SchemaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return CreateSessionResponse(id=session.id, settings=request.settings)

    @app.get(API_PREFIX + "/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.get(API_PREFIX + "/sessions/{session_id}")
    def session_meta(session_id: str):
        return get_session(session_id).meta()

    @app.get(API_PREFIX + "/sessions/{session_id}/summary")
    def session_summary(session_id: str):
        return get_session(session_id).summary()

    @app.post(API_PREFIX + "/sessions/{session_id}/rounds",
              response_model=SubmitRoundResponse, status_code=201)
    def submit_round(session_id: str, request: SubmitRoundRequest):
        session = get_session(session_id)
        try:
            number = session.submit_round(
                [entry.model_dump(exclude_none=True) for entry in request.delta],
                label=request.label,
                skip_unsolved=request.skip_unsolved,
            )
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        except BidDeltaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SubmitRoundResponse(number=number)

    @app.get(API_PREFIX + "/sessions/{session_id}/rounds/{number}")
    def round_info(session_id: str, number: int):
        session = get_session(session_id)
        try:
            doc = session.round_doc(number)
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        report = session.report_doc(number)
        return {"round": doc, "solved": report is not None, "report": report}

    @app.post(API_PREFIX + "/sessions/{session_id}/rounds/{number}/solve")
    def solve_round(session_id: str, number: int, request: SolveRoundRequest):
        session = get_session(session_id)
        try:
            report = session.solve_round(
                number,
                solver=request.solver,
                limits_doc=None if request.limits is None
                else request.limits.model_dump(),
                seed=request.seed,
            )
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        except SsoaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return report

    @app.get(API_PREFIX + "/sessions/{session_id}/rounds/{number}/allocation")
    def round_allocation(session_id: str, number: int):
        session = get_session(session_id)
        try:
            session.round_doc(number)
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        report = session.report_doc(number)
        if report is None:
            raise HTTPException(status_code=409,
                                detail=f"round {number} is not solved yet")
        return {
            "round": number,
            "status": report.get("status"),
            "objective": report.get("objective"),
            "allocation": report.get("allocation"),
            "breakdown": report.get("breakdown"),
        }

    @app.post(API_PREFIX + "/sessions/{session_id}/whatif")
    def what_if(session_id: str, request: WhatIfRequest):
        session = get_session(session_id)
        try:
            return session.what_if(
                request.base_round,
                request.mutation.model_dump(exclude_none=True),
            )
        except SessionError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        except SsoaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    return app


def default_app() -> FastAPI:
    return create_app(os.environ.get("SSOA_DATA_DIR", "./ssoa-sessions"))
