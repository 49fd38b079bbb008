"""HTTP facade over the simulation, replay, and comparison pipeline.

All failures of the domain kind map to HTTP 400 with a structured error
list; each item names the config field at fault when one is known.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..exceptions import RailwarnError, ScenarioError
from ..geo import GeoPoint
from ..pipeline import (
    CompareOutputs,
    RunOutputs,
    compare_outputs,
    replay_outputs,
    run_outputs,
)
from ..scenario import scenario_from_dict, with_seed
from ..sim import stats_to_dict
from .schemas import (
    ArtifactFiles,
    CompareLeg,
    CompareRequest,
    CompareResponse,
    ErrorResponse,
    ReplayRequest,
    RunRequest,
    RunResponse,
)


def _run_response(out: RunOutputs) -> RunResponse:
    return RunResponse(
        scenario_hash=out.scenario_hash,
        stats=stats_to_dict(out.stats) if out.stats is not None else None,
        files=ArtifactFiles(
            packets_csv=out.packets_csv,
            trace_kml=out.trace_kml,
            stats_json=out.stats_json,
        ),
        warnings=list(out.warnings),
    )


def _compare_response(out: CompareOutputs) -> CompareResponse:
    return CompareResponse(
        axis=out.axis,
        legs=[
            CompareLeg(
                label=label,
                scenario_hash=leg.scenario_hash,
                stats=stats_to_dict(leg.stats) if leg.stats is not None else None,
                files=ArtifactFiles(
                    packets_csv=leg.packets_csv,
                    trace_kml=leg.trace_kml,
                    stats_json=leg.stats_json,
                ),
                warnings=list(leg.warnings),
            )
            for label, leg in out.legs
        ],
        deltas=out.deltas,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="railwarn", version=__version__)

    @app.exception_handler(ScenarioError)
    async def scenario_error(_: Request, exc: ScenarioError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={
                "errors": [{"field": i.field, "message": i.message} for i in exc.issues]
            },
        )

    @app.exception_handler(RailwarnError)
    async def domain_error(_: Request, exc: RailwarnError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"errors": [{"field": "", "message": str(exc)}]},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/run", response_model=RunResponse, responses={400: {"model": ErrorResponse}})
    def post_run(req: RunRequest) -> RunResponse:
        sc = scenario_from_dict(req.scenario)
        if req.seed is not None:
            sc = with_seed(sc, req.seed)
        return _run_response(run_outputs(sc, decimate=req.decimate))

    @app.post(
        "/replay", response_model=RunResponse, responses={400: {"model": ErrorResponse}}
    )
    def post_replay(req: ReplayRequest) -> RunResponse:
        rsu = GeoPoint(*req.rsu_position) if req.rsu_position else None
        obu = GeoPoint(*req.obu_position) if req.obu_position else None
        return _run_response(
            replay_outputs(
                req.packets_csv,
                nmea_text=req.nmea,
                strict=req.strict,
                rsu_position=rsu,
                obu_position=obu,
                decimate=req.decimate,
            )
        )

    @app.post(
        "/compare",
        response_model=CompareResponse,
        responses={400: {"model": ErrorResponse}},
    )
    def post_compare(req: CompareRequest) -> CompareResponse:
        sc = scenario_from_dict(req.scenario)
        if req.seed is not None:
            sc = with_seed(sc, req.seed)
        return _compare_response(compare_outputs(sc, req.axis, decimate=req.decimate))

    return app


app = create_app()
