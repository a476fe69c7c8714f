"""Local JSON service over a dataset.

Endpoints (all JSON, wrapped in ``{"revision": N, "payload": ...}``; errors
come back as ``{"revision": N, "error": "..."}``):

    GET  /api/meta
    GET  /api/spectrum?from=&to=&denominator=
    GET  /api/peaks?min_count=&min_dev_pct=&top=
    GET  /api/years/<year>/references
    GET  /api/clusters?year=&min_occ=
    GET  /api/clusters/<id>
    GET  /api/clusters/<id>/history
    GET  /api/diversity?mode=&normalize_over=
    POST /api/clusters/merge   {"targets": [...], "actor": "...", "expected_revision": N}
    POST /api/clusters/split   {"cluster": "...", "members": [...], "actor": "...",
                                "expected_revision": N}

Mutations must carry ``expected_revision``; a mismatch is answered with 409
and the current revision so the client can reload.  Successful mutations are
persisted to the dataset directory before the response goes out.  Anything
outside ``/api`` is served from the static directory when one is configured,
which is how the bundled analyst UI is mounted.

The server is ``http.server`` based and binds loopback by default; this is a
single-analyst desk tool, not a deployment target.
"""

from __future__ import annotations

import json
import re
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .diversity import JournalMap
from .errors import (
    ClusterError,
    DiversityError,
    RefspectError,
    ServiceError,
    StaleRevisionError,
)
from .store import Dataset

_YEAR_PATH = re.compile(r"^/api/years/(-?\d+)/references$")
_CLUSTER_PATH = re.compile(r"^/api/clusters/([A-Za-z0-9]+)$")
_HISTORY_PATH = re.compile(r"^/api/clusters/([A-Za-z0-9]+)/history$")

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def _int_param(params, name, default):
    value = params.get(name, [None])[0]
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise ServiceError(400, f"parameter {name} must be an integer") from None


def _float_param(params, name, default):
    value = params.get(name, [None])[0]
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        raise ServiceError(400, f"parameter {name} must be a number") from None


class Workbench:
    """Request handling against a dataset, independent of the HTTP plumbing.

    Methods return the payload; HTTP status problems are raised as
    :class:`ServiceError`.  A lock serializes mutations (and their saves)
    against concurrent reads of cluster state.
    """

    def __init__(
        self,
        dataset: Dataset,
        dataset_path: str | Path | None = None,
        jmap: JournalMap | None = None,
    ):
        self.dataset = dataset
        self.dataset_path = Path(dataset_path) if dataset_path else None
        self.jmap = jmap
        self.lock = threading.Lock()

    @property
    def revision(self) -> int:
        return self.dataset.revision

    # -- GET payloads ------------------------------------------------------

    def meta(self) -> dict:
        return self.dataset.meta_view()

    def spectrum(self, params) -> dict:
        year_from = _int_param(params, "from", None)
        year_to = _int_param(params, "to", None)
        denominator = params.get("denominator", ["window-sum"])[0]
        try:
            spec = self.dataset.spectrum(year_from, year_to, denominator)
        except ValueError as exc:
            raise ServiceError(400, str(exc)) from exc
        return {
            "year_from": spec.year_from,
            "year_to": spec.year_to,
            "denominator": spec.denominator,
            "rows": [
                {
                    "year": r.year,
                    "count": r.count,
                    "median5": r.median5,
                    "dev_abs": r.dev_abs,
                    "dev_pct": r.dev_pct,
                    "is_peak": r.is_peak,
                }
                for r in spec.rows
            ],
        }

    def peaks(self, params) -> dict:
        min_count = _int_param(params, "min_count", 10)
        min_dev_pct = _float_param(params, "min_dev_pct", 0.0)
        top = _int_param(params, "top", 3)
        if min_count < 1:
            raise ServiceError(400, "min_count must be >= 1")
        peaks = self.dataset.peaks(min_count=min_count, min_dev_pct=min_dev_pct, top=top)
        return {
            "peaks": [
                {
                    "year": p.year,
                    "count": p.count,
                    "dev_abs": p.dev_abs,
                    "dev_pct": p.dev_pct,
                    "top_clusters": [
                        {"cluster_id": cid, "occurrences": occ, "share": share}
                        for cid, occ, share in p.top_clusters
                    ],
                }
                for p in peaks
            ]
        }

    def year_references(self, year: int) -> dict:
        if year not in self.dataset.tally.years:
            raise ServiceError(404, f"no references with year {year}")
        return {"year": year, "references": self.dataset.refs_for_years([year])}

    def clusters(self, params) -> dict:
        year = _int_param(params, "year", None)
        min_occ = _int_param(params, "min_occ", 1)
        state = self.dataset.cluster_state
        if state is None:
            return {"clustered": False, "clusters": []}
        with self.lock:
            chosen = state.clusters_for_year(year) if year is not None else state.ordered()
            chosen = [c for c in chosen if c.occ_weight >= min_occ]
            return {"clustered": True, "clusters": [c.to_dict() for c in chosen]}

    def cluster_detail(self, cluster_id: str) -> dict:
        state = self.dataset.cluster_state
        with self.lock:
            cluster = state.clusters.get(cluster_id) if state else None
            if cluster is None:
                raise ServiceError(404, f"no such cluster {cluster_id!r}")
            detail = cluster.to_dict()
            detail["variants"] = [
                {
                    "key": v.key,
                    "occurrences": v.occurrences,
                    "documents": v.documents,
                }
                for v in sorted(
                    (self.dataset.variants[k] for k in cluster.members),
                    key=lambda v: (-v.occurrences, v.key),
                )
            ]
        return detail

    def cluster_history(self, cluster_id: str) -> dict:
        with self.lock:
            try:
                series = self.dataset.history(cluster_id)
            except ClusterError as exc:
                raise ServiceError(404, str(exc)) from exc
        return {
            "cluster_id": cluster_id,
            "history": [{"year": y, "citing_records": n} for y, n in sorted(series.items())],
        }

    def diversity(self, params) -> dict:
        if self.jmap is None:
            raise ServiceError(400, "no journal map configured (start with --map)")
        mode = params.get("mode", ["map-distance"])[0]
        normalize_over = params.get("normalize_over", ["full-map"])[0]
        try:
            return self.dataset.diversity(self.jmap, mode, normalize_over)
        except DiversityError as exc:
            raise ServiceError(400, str(exc)) from exc

    # -- mutations ---------------------------------------------------------

    def _check_revision(self, body) -> None:
        # expected_revision is optional; when present it must match exactly
        expected = body.get("expected_revision")
        if expected is None:
            return
        if not isinstance(expected, int) or isinstance(expected, bool):
            raise ServiceError(400, "expected_revision must be an integer")
        if expected != self.dataset.revision:
            raise StaleRevisionError(expected=expected, actual=self.dataset.revision)

    def _persist(self) -> None:
        if self.dataset_path is not None:
            self.dataset.save(self.dataset_path)

    def merge(self, body) -> dict:
        with self.lock:
            state = self.dataset.cluster_state
            if state is None:
                raise ServiceError(409, "dataset is not clustered yet")
            self._check_revision(body)
            targets = body.get("targets")
            if not isinstance(targets, list) or not all(isinstance(t, str) for t in targets):
                raise ServiceError(400, "targets must be a list of cluster ids")
            actor = str(body.get("actor", "analyst"))
            try:
                merged = state.merge(targets, actor=actor)
            except ClusterError as exc:
                raise ServiceError(400, str(exc)) from exc
            self._persist()
            return {"cluster": merged.to_dict()}

    def split(self, body) -> dict:
        with self.lock:
            state = self.dataset.cluster_state
            if state is None:
                raise ServiceError(409, "dataset is not clustered yet")
            self._check_revision(body)
            cluster_id = body.get("cluster")
            members = body.get("members")
            if not isinstance(cluster_id, str):
                raise ServiceError(400, "cluster must be a cluster id")
            if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
                raise ServiceError(400, "members must be a list of variant keys")
            actor = str(body.get("actor", "analyst"))
            try:
                moved, rest = state.split(cluster_id, members, actor=actor)
            except ClusterError as exc:
                raise ServiceError(400, str(exc)) from exc
            self._persist()
            return {"clusters": [moved.to_dict(), rest.to_dict()]}

    # -- dispatch ----------------------------------------------------------

    def handle_get(self, path: str, params) -> dict:
        if path == "/api/meta":
            return self.meta()
        if path == "/api/spectrum":
            return self.spectrum(params)
        if path == "/api/peaks":
            return self.peaks(params)
        if path == "/api/clusters":
            return self.clusters(params)
        if path == "/api/diversity":
            return self.diversity(params)
        m = _YEAR_PATH.match(path)
        if m:
            return self.year_references(int(m.group(1)))
        m = _HISTORY_PATH.match(path)
        if m:
            return self.cluster_history(m.group(1))
        m = _CLUSTER_PATH.match(path)
        if m:
            return self.cluster_detail(m.group(1))
        raise ServiceError(404, f"unknown endpoint {path}")

    def handle_post(self, path: str, body) -> dict:
        if path == "/api/clusters/merge":
            return self.merge(body)
        if path == "/api/clusters/split":
            return self.split(body)
        raise ServiceError(404, f"unknown endpoint {path}")


class WorkbenchHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "refspect"

    # quiet by default; the serve command flips this on with --verbose
    def log_message(self, format, *args):
        if getattr(self.server, "verbose", False):
            super().log_message(format, *args)

    @property
    def workbench(self) -> Workbench:
        return self.server.workbench

    def _send_json(self, status: int, data: dict) -> None:
        body = json.dumps(data).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_envelope(self, payload: dict) -> None:
        self._send_json(200, {"revision": self.workbench.revision, "payload": payload})

    def _send_error(self, status: int, message: str) -> None:
        self._send_json(status, {"revision": self.workbench.revision, "error": message})

    def do_GET(self):
        url = urlparse(self.path)
        # only the /api/ subtree is the JSON API; /api.js etc. stay static
        if url.path.startswith("/api/"):
            try:
                payload = self.workbench.handle_get(url.path, parse_qs(url.query))
            except ServiceError as exc:
                self._send_error(exc.status, str(exc))
            except RefspectError as exc:
                self._send_error(400, str(exc))
            else:
                self._send_envelope(payload)
            return
        self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            body = json.loads(raw.decode("utf-8")) if raw else {}
            if not isinstance(body, dict):
                raise ServiceError(400, "request body must be a JSON object")
            payload = self.workbench.handle_post(url.path, body)
        except json.JSONDecodeError:
            self._send_error(400, "request body is not valid JSON")
        except ServiceError as exc:
            self._send_error(exc.status, str(exc))
        except RefspectError as exc:
            self._send_error(400, str(exc))
        else:
            self._send_envelope(payload)

    def _serve_static(self, path: str) -> None:
        root = getattr(self.server, "static_dir", None)
        if root is None:
            self._send_error(404, "no static content configured")
            return
        name = path.lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_error(404, f"not found: {path}")
            return
        data = target.read_bytes()
        ctype = _STATIC_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def create_server(
    dataset: Dataset,
    dataset_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8377,
    static_dir: str | Path | None = None,
    jmap: JournalMap | None = None,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    server = ThreadingHTTPServer((host, port), WorkbenchHandler)
    server.workbench = Workbench(dataset, dataset_path, jmap)
    server.static_dir = Path(static_dir) if static_dir else None
    server.verbose = verbose
    return server
