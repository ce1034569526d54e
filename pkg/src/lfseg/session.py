"""Interactive sessions: one light field, warm caches, serialized jobs.

A session owns everything the scribble loop reuses: the loaded light
field, its disparity map, LFSP segmentation, features and adjacency
(computed once per light field / M), plus the latest scribbles and
labeling. All jobs of one session run on a single-thread executor, so
concurrent requests queue in arrival order; changing the light field or
M rebuilds the caches, changing scribbles or lambda weights only
re-runs the seed/unary/weight/minimize stages.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .energy import EnergyParams
from .lightfield import GT_DISPARITY_NAME, LightField, load_groundtruth, load_lightfield
from .optimizer import PipelineCache, SegmentationResult, precompute, segment
from .superpixels import ScribbleMap


class SessionError(RuntimeError):
    pass


class Session:
    def __init__(self, session_id: str, lf_path: str, disparity: str = "gt",
                 m: int = 20, params: EnergyParams | None = None):
        self.id = session_id
        self.lf_path = lf_path
        self.disparity_source = disparity
        self.m = m
        self.params = params or EnergyParams()
        self.status = "preprocessing"
        self.error: str | None = None
        self.lf: LightField | None = None
        self.gt = None
        self.cache: PipelineCache | None = None
        self.result: SegmentationResult | None = None
        self.pixel_labels: np.ndarray | None = None
        self.scribbles: ScribbleMap | None = None
        self.preprocess_timings: dict = {}
        self._executor = ThreadPoolExecutor(max_workers=1,
                                            thread_name_prefix=f"session-{session_id[:8]}")

    # -- jobs ---------------------------------------------------------------

    def submit_preprocess(self) -> Future:
        return self._executor.submit(self._preprocess)

    def _preprocess(self) -> None:
        try:
            lf = load_lightfield(self.lf_path)
            self.lf = lf
            try:
                self.gt = load_groundtruth(self.lf_path, lf)
            except Exception:
                self.gt = None      # ground truth is optional
            source = self._resolve_disparity()
            timings: dict = {}
            self.cache = precompute(lf, disparity=source, m=self.m, timings=timings)
            self.preprocess_timings = timings
            self.status = "ready"
        except Exception as exc:
            self.status = "error"
            self.error = str(exc)
            raise

    def _resolve_disparity(self):
        if self.disparity_source == "gt":
            return str(Path(self.lf_path) / GT_DISPARITY_NAME)
        return self.disparity_source

    def run_scribbles(self, scribbles: ScribbleMap) -> SegmentationResult:
        """Queue a segmentation for these scribbles and wait for it."""
        return self._executor.submit(self._segment, scribbles).result()

    def _segment(self, scribbles: ScribbleMap) -> SegmentationResult:
        if self.status != "ready":
            raise SessionError(f"session not ready (status: {self.status})")
        self.scribbles = scribbles
        result = segment(self.lf, scribbles, params=self.params, m=self.m,
                         cache=self.cache)
        self.result = result
        self.pixel_labels = result.label_field.pixel_labels(result.seg)
        return result

    def update_params(self, **changes) -> bool:
        """Apply parameter changes; returns True when caches were rebuilt."""
        m = changes.pop("m", None)
        if changes:
            self.params = replace(self.params, **changes)
        if m is not None and int(m) != self.m:
            self.m = int(m)
            self.status = "preprocessing"
            self.cache = None
            self.result = None
            self.pixel_labels = None
            self._executor.submit(self._repreprocess)
            return True
        return False

    def _repreprocess(self) -> None:
        try:
            source = self._resolve_disparity()
            timings: dict = {}
            self.cache = precompute(self.lf, disparity=source, m=self.m, timings=timings)
            self.preprocess_timings = timings
            self.status = "ready"
        except Exception as exc:
            self.status = "error"
            self.error = str(exc)

    def close(self) -> None:
        self._executor.shutdown(wait=False, cancel_futures=True)


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, lf_path: str, disparity: str = "gt", m: int = 20,
               params: EnergyParams | None = None) -> Session:
        session = Session(uuid.uuid4().hex, lf_path, disparity=disparity, m=m,
                          params=params)
        with self._lock:
            self._sessions[session.id] = session
        session.submit_preprocess()
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionError(f"unknown session {session_id}")
        return session

    def drop(self, session_id: str) -> None:
        with self._lock:
            session = self._sessions.pop(session_id, None)
        if session is not None:
            session.close()
