"""FastAPI service wrapping the tracking, identification, and eval stages.

The service is stateless: every request carries its data and optional config
overrides (dotted keys, same names as the config file). Domain errors map to
HTTP 400 with the exception class name in the body.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..config import Config
from ..errors import CagetrackError
from ..simulator import generate
from ..types import validate_detection
from .schemas import (
    DetectionModel,
    EvaluateRequest,
    EvaluateResponse,
    GroundTruthEntryModel,
    HealthResponse,
    IdentifyRequest,
    IdentifyResponse,
    SimulateRequest,
    SimulateResponse,
    TrackletModel,
    TrackRequest,
    TrackResponse,
    ground_truth_to_domain,
)


def create_app() -> FastAPI:
    app = FastAPI(title="cagetrack", version=__version__)

    @app.exception_handler(CagetrackError)
    async def domain_error(_: Request, exc: CagetrackError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/track", response_model=TrackResponse)
    def track(req: TrackRequest) -> TrackResponse:
        cfg = Config(req.config)
        dim = int(cfg["io.embedding_dim"])
        detections = [m.to_domain() for m in req.detections]
        for d in detections:
            validate_detection(d, dim)
        tracklets = pipeline.track_detections(detections, cfg)
        return TrackResponse(tracklets=[TrackletModel.from_domain(t, None) for t in tracklets])

    @app.post("/v1/identify", response_model=IdentifyResponse)
    def identify(req: IdentifyRequest) -> IdentifyResponse:
        cfg = Config(req.config)
        tracklets = [m.to_domain()[0] for m in req.tracklets]
        final, assignment = pipeline.identify_tracklets(tracklets, cfg, req.window_minutes)
        return IdentifyResponse(
            tracklets=[TrackletModel.from_domain(t, assignment.assignment[t.id]) for t in final],
            objective=assignment.objective,
        )

    @app.post("/v1/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest) -> EvaluateResponse:
        cfg = Config(req.config)
        gt = ground_truth_to_domain(req.ground_truth)
        pairs = [m.to_domain() for m in req.tracklets]
        tracklets = [t for t, _ in pairs]
        identity_map = {t.id: identity for t, identity in pairs}
        report = pipeline.evaluate_tracklets(gt, tracklets, identity_map, cfg, req.iou_threshold)
        return EvaluateResponse.from_report(report)

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        cfg = Config({f"scene.{k}" if "." not in k else k: v for k, v in req.scene.items()})
        scene = cfg.scene_config()
        if req.seed is not None:
            scene.seed = req.seed
        gt, detections = generate(scene)
        entries = [
            GroundTruthEntryModel(
                frame=frame,
                gt_id=e.gt_id,
                box=e.box.as_list(),
                identity=e.identity.value if e.identity is not None else None,
            )
            for frame in sorted(gt.frames)
            for e in gt.frames[frame]
        ]
        return SimulateResponse(
            seed=scene.seed,
            detections=[DetectionModel.from_domain(d) for d in detections],
            ground_truth=entries,
        )

    return app


app = create_app()
