"""Loopback HTTP endpoint exposing a live annotation session to a client.

Routes (JSON payloads, errors as 4xx with ``{"error": code, "detail": msg}``):

* ``GET  /api/session``          — full point/threshold/class snapshot
* ``POST /api/threshold``        — ``{"tau": x}``; returns new counts + evictions
* ``POST /api/labels``           — atomic batch ``{"assignments": [{id, label}]}``
* ``POST /api/undo``             — revert the last batch
* ``GET  /api/thumbnail/<id>``   — raster bytes when the dataset declares them
* ``POST /api/finalize``         — train + evaluate; session becomes read-only

All mutations are serialized through one lock, so concurrent clients always
observe a consistent session.
"""

from __future__ import annotations

import mimetypes
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import SessionError
from .pipeline import finalize_and_train
from .session import (SessionBundle, apply_manual_labels, set_threshold, undo)

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"]


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(detail)


class ThresholdBody(BaseModel):
    tau: float


class Assignment(BaseModel):
    id: int
    label: int


class LabelsBody(BaseModel):
    assignments: list[Assignment]


class SessionHub:
    """Serializes every session mutation behind one lock."""

    def __init__(self, bundle: SessionBundle):
        self.bundle = bundle
        self.lock = threading.Lock()

    # -- snapshots -----------------------------------------------------------

    def snapshot(self) -> dict:
        with self.lock:
            return self._snapshot_locked()

    def _snapshot_locked(self) -> dict:
        session = self.bundle.session
        dataset = self.bundle.dataset
        truth = {s.id: s.true_label for s in dataset.samples}
        supervised = set(session.split.s_ids)
        auto = session.auto_ids
        manual = session.manual_labels
        label_of = (session.propagation.label_of()
                    if session.propagation is not None else {})
        conf_of = (session.propagation.confidence_of()
                   if session.propagation is not None else {})
        points = []
        for row, sample_id in enumerate(session.projection_ids):
            x, y = session.projection_y[row]
            conf = conf_of.get(sample_id)
            if sample_id in supervised:
                state, label = "supervised", truth[sample_id]
            elif sample_id in manual:
                state, label = "manual", manual[sample_id]
            elif sample_id in auto:
                state, label = "auto", label_of[sample_id]
            else:
                state, label = "unlabeled", None
            points.append({"id": sample_id, "x": float(x), "y": float(y),
                           "state": state, "label": label,
                           "confidence": conf})
        classes = [{"id": k, "name": f"class {k}",
                    "color": PALETTE[k % len(PALETTE)]}
                   for k in range(dataset.n_classes)]
        counts = {"supervised": len(session.split.s_ids),
                  "unsupervised": len(session.split.u_ids),
                  "auto": len(auto), "manual": len(manual),
                  "residue": len(session.residue_ids),
                  "test": len(session.split.t_ids)}
        return {"points": points, "tau": session.tau, "classes": classes,
                "counts": counts, "status": session.status,
                "protocol": session.protocol,
                "thumbnails": self.bundle.dataset.thumbnail_dir is not None}

    # -- mutations ------------------------------------------------------------

    def update_threshold(self, tau: float) -> dict:
        with self.lock:
            session = self.bundle.session
            if not session.is_open:
                raise ApiError(409, "finalized", "session is finalized")
            if not 0.0 <= tau <= 1.0:
                raise ApiError(422, "bad_tau", f"tau must lie in [0, 1], got {tau}")
            evicted = set_threshold(session, tau)
            return {"tau": session.tau,
                    "counts": {"auto": len(session.auto_ids),
                               "residue": len(session.residue_ids)},
                    "evicted": evicted}

    def post_labels(self, assignments: list[tuple[int, int]]) -> dict:
        with self.lock:
            session = self.bundle.session
            if not session.is_open:
                raise ApiError(409, "finalized", "session is finalized")
            if not assignments:
                return {"applied": 0}
            try:
                apply_manual_labels(session, assignments,
                                    self.bundle.dataset.n_classes)
            except SessionError as exc:
                raise ApiError(409, "invalid_assignment", str(exc)) from exc
            return {"applied": len(assignments)}

    def post_undo(self) -> dict:
        with self.lock:
            session = self.bundle.session
            if not session.is_open:
                raise ApiError(409, "finalized", "session is finalized")
            try:
                depth = len(session.history[-1])
                undo(session)
            except (SessionError, IndexError) as exc:
                raise ApiError(409, "nothing_to_undo", "history is empty") from exc
            return {"undone": depth}

    def post_finalize(self) -> dict:
        with self.lock:
            session = self.bundle.session
            if not session.is_open:
                raise ApiError(409, "finalized", "session is finalized")
            try:
                report = finalize_and_train(self.bundle)
            except SessionError as exc:
                raise ApiError(409, "single_class_training_set", str(exc)) from exc
            return {"protocol": report.protocol, "seed": report.seed,
                    "kappa": report.kappa,
                    "propagation_accuracy": report.propagation_accuracy,
                    "counts": {"supervised": report.n_supervised,
                               "unsupervised": report.n_unsupervised,
                               "auto": report.n_auto, "manual": report.n_manual,
                               "test": report.n_test}}

    def thumbnail_path(self, sample_id: int) -> Path:
        dataset = self.bundle.dataset
        if dataset.thumbnail_dir is None:
            raise ApiError(404, "thumbnails_unsupported",
                           "dataset declares no thumbnails")
        if not 0 <= sample_id < dataset.n_samples:
            raise ApiError(404, "unknown_id", f"no sample {sample_id}")
        ref = dataset.samples[sample_id].thumbnail_ref
        if ref is None or not Path(ref).exists():
            raise ApiError(404, "unknown_id", f"no thumbnail for sample {sample_id}")
        return Path(ref)


def create_app(bundle: SessionBundle, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="salp annotation service")
    hub = SessionHub(bundle)
    app.state.hub = hub

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.get("/api/session")
    def get_session():
        return hub.snapshot()

    @app.post("/api/threshold")
    def post_threshold(body: ThresholdBody):
        return hub.update_threshold(body.tau)

    @app.post("/api/labels")
    def post_labels(body: LabelsBody):
        return hub.post_labels([(a.id, a.label) for a in body.assignments])

    @app.post("/api/undo")
    def post_undo():
        return hub.post_undo()

    @app.post("/api/finalize")
    def post_finalize():
        return hub.post_finalize()

    @app.get("/api/thumbnail/{sample_id}")
    def get_thumbnail(sample_id: int):
        path = hub.thumbnail_path(sample_id)
        media_type = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return FileResponse(path, media_type=media_type,
                            headers={"Cache-Control": "max-age=86400, immutable"})

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
