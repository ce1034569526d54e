"""HTTP service for the interactive scribble loop.

JSON everywhere except images, which are PNG bodies. A session wraps
one light field; POSTing scribbles runs the data-term-onward pipeline
against the session's warm caches and returns the energy trace plus
URLs for the overlay / mask / label images.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from PIL import Image
from pydantic import BaseModel, Field

from .energy import EnergyParams
from .evaluation import accuracy
from .lightfield import extract_epi
from .render import epi_pair, label_mask, label_palette, overlay
from .session import SessionError, SessionManager
from .superpixels import ScribbleMap, rasterize_strokes


class SessionCreateRequest(BaseModel):
    lf_path: str = Field(description="light-field directory on the server")
    disparity: str = Field(default="gt", description="gt | estimate | path.pfm")
    m: int = Field(default=20, ge=4)


class SessionInfo(BaseModel):
    session_id: str
    status: str
    error: str | None = None
    lfsp_count: int | None = None
    width: int | None = None
    height: int | None = None
    u_count: int | None = None
    v_count: int | None = None
    central_u: int | None = None
    central_v: int | None = None
    has_ground_truth: bool = False
    preprocess_timings_ms: dict = {}


class Stroke(BaseModel):
    label: int = Field(ge=1)
    radius: float = Field(default=2.0, gt=0)
    points: list[list[float]]


class ScribbleRequest(BaseModel):
    """Either a stroke list or a base64 PNG label map."""

    strokes: list[Stroke] | None = None
    label_map_png: str | None = None


class ParamsModel(BaseModel):
    lambda_p: float | None = None
    lambda_d: float | None = None
    lambda_s: float | None = None
    lambda_a: float | None = None
    alpha: float | None = None
    seed_aggregation: str | None = None
    color_metric: str | None = None
    m: int | None = None


class SegmentResponse(BaseModel):
    status: str
    label_count: int
    lfsp_count: int
    energy: list[float]
    timings_ms: dict
    overlay_url: str
    mask_urls: dict[int, str]
    labels_url: str
    accuracy: float | None = None


def _png_response(array: np.ndarray) -> Response:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return Response(content=buf.getvalue(), media_type="image/png")


def create_app(manager: SessionManager | None = None) -> FastAPI:
    app = FastAPI(title="lfseg", description="interactive light-field segmentation")
    sessions = manager or SessionManager()
    app.state.sessions = sessions

    def _get(session_id: str):
        try:
            return sessions.get(session_id)
        except SessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def _info(session) -> SessionInfo:
        info = SessionInfo(session_id=session.id, status=session.status,
                           error=session.error,
                           has_ground_truth=session.gt is not None,
                           preprocess_timings_ms=session.preprocess_timings)
        if session.lf is not None:
            info.width = session.lf.width
            info.height = session.lf.height
            info.u_count = session.lf.u_count
            info.v_count = session.lf.v_count
            info.central_u, info.central_v = session.lf.central
        if session.cache is not None:
            info.lfsp_count = session.cache.seg.lfsp_count
        return info

    @app.post("/session", response_model=SessionInfo)
    def create_session(req: SessionCreateRequest):
        session = sessions.create(req.lf_path, disparity=req.disparity, m=req.m)
        return _info(session)

    @app.get("/session/{session_id}", response_model=SessionInfo)
    def session_status(session_id: str):
        return _info(_get(session_id))

    @app.delete("/session/{session_id}")
    def drop_session(session_id: str):
        sessions.drop(session_id)
        return {"status": "dropped"}

    @app.get("/session/{session_id}/central")
    def central_view(session_id: str):
        session = _get(session_id)
        if session.lf is None:
            raise HTTPException(status_code=409, detail="light field not loaded yet")
        return _png_response(session.lf.central_srgb())

    @app.post("/session/{session_id}/scribbles", response_model=SegmentResponse)
    def post_scribbles(session_id: str, req: ScribbleRequest):
        session = _get(session_id)
        if session.status != "ready":
            raise HTTPException(status_code=409,
                                detail=f"session not ready (status: {session.status})")
        lf = session.lf
        try:
            if req.strokes is not None:
                labels = rasterize_strokes([s.model_dump() for s in req.strokes],
                                           lf.height, lf.width)
            elif req.label_map_png is not None:
                raw = base64.b64decode(req.label_map_png)
                labels = np.asarray(Image.open(io.BytesIO(raw))).astype(np.int32)
            else:
                raise HTTPException(status_code=422, detail="need strokes or label_map_png")
            scribbles = ScribbleMap.from_array(labels)
            if scribbles.label_count < 2:
                raise HTTPException(status_code=422,
                                    detail="[seeds] nothing to segment: need at least 2 labels")
            result = session.run_scribbles(scribbles)
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

        acc = None
        if session.gt is not None:
            acc, _ = accuracy(session.pixel_labels, session.gt)
        base = f"/session/{session_id}"
        return SegmentResponse(
            status="done",
            label_count=result.label_field.label_count,
            lfsp_count=result.seg.lfsp_count,
            energy=[float(t["energy"]) for t in result.trace],
            timings_ms=result.timings,
            overlay_url=f"{base}/overlay",
            mask_urls={k: f"{base}/mask/{k}"
                       for k in range(1, result.label_field.label_count + 1)},
            labels_url=f"{base}/labels",
            accuracy=acc,
        )

    def _require_result(session):
        if session.result is None or session.pixel_labels is None:
            raise HTTPException(status_code=409, detail="no segmentation yet")

    @app.get("/session/{session_id}/overlay")
    def overlay_image(session_id: str):
        session = _get(session_id)
        _require_result(session)
        u0, v0 = session.lf.central
        return _png_response(overlay(session.lf.srgb[u0, v0],
                                     session.pixel_labels[u0, v0]))

    @app.get("/session/{session_id}/mask/{label}")
    def mask_image(session_id: str, label: int):
        session = _get(session_id)
        _require_result(session)
        u0, v0 = session.lf.central
        return _png_response(label_mask(session.pixel_labels[u0, v0], label))

    @app.get("/session/{session_id}/label/{u}/{v}")
    def label_image(session_id: str, u: int, v: int):
        session = _get(session_id)
        _require_result(session)
        if not (0 <= u < session.lf.u_count and 0 <= v < session.lf.v_count):
            raise HTTPException(status_code=404, detail="view out of range")
        return _png_response(session.pixel_labels[u, v].astype(np.uint8))

    @app.get("/session/{session_id}/labels")
    def labels_json(session_id: str):
        session = _get(session_id)
        _require_result(session)
        return {"label_count": session.result.label_field.label_count,
                "lfsp_labels": session.result.label_field.labels.tolist()}

    @app.get("/session/{session_id}/trace")
    def trace_json(session_id: str):
        session = _get(session_id)
        _require_result(session)
        return {"energy": [float(t["energy"]) for t in session.result.trace],
                "moves": session.result.trace,
                "timings_ms": session.result.timings}

    @app.get("/session/{session_id}/epi")
    def epi_image(session_id: str, orientation: str = "h", index: int = 0,
                  at_view: int | None = None, scale: int = 2):
        session = _get(session_id)
        if session.lf is None:
            raise HTTPException(status_code=409, detail="light field not loaded yet")
        lf = session.lf
        orientation = {"h": "horizontal", "v": "vertical"}.get(orientation, orientation)
        if at_view is None:
            at_view = lf.central[1] if orientation == "horizontal" else lf.central[0]
        try:
            raw = extract_epi(lf, orientation, (at_view, index))
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        if session.pixel_labels is not None:
            palette = label_palette(int(session.pixel_labels.max()) + 1)
            lab = extract_epi(lf, orientation, (at_view, index),
                              labels=session.pixel_labels, palette=palette)
            return _png_response(epi_pair(raw.pixels, lab.pixels, scale=scale))
        img = np.repeat(np.repeat(raw.pixels, scale, 0), scale, 1)
        return _png_response(img)

    @app.get("/session/{session_id}/params")
    def get_params(session_id: str):
        session = _get(session_id)
        params = session.params.to_dict()
        params["m"] = session.m
        return params

    @app.put("/session/{session_id}/params")
    def put_params(session_id: str, req: ParamsModel):
        session = _get(session_id)
        changes = {k: v for k, v in req.model_dump().items() if v is not None}
        rebuilt = session.update_params(**changes)
        params = session.params.to_dict()
        params["m"] = session.m
        return {"params": params, "caches_rebuilt": rebuilt, "status": session.status}

    return app
