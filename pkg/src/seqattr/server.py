"""HTTP service exposing the dataset, training control, and slice queries.

One dataset per server session.  Read endpoints are pure functions of
(dataset, checkpoint, slice) and their bodies are cached verbatim by
query string, so identical requests return byte-identical responses.
A single background thread owns training; checkpoints become visible
only after they are fully built.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .attribution import (
    MODE_BOTH,
    MODE_DIFFERENCE,
    MODE_NEGATIVE,
    MODE_POSITIVE,
    SliceError,
    SliceSpec,
    build_grid,
    select_events,
    tpartite_document,
)
from .data import LABEL_NEG, LABEL_POS, Dataset, encode_dataset
from .model import (
    ModelCheckpoint,
    TrainConfig,
    TrainingDiverged,
    extract_attentions,
    train,
)

MODE_TOKENS = {
    "pos": MODE_POSITIVE,
    "neg": MODE_NEGATIVE,
    "both": MODE_BOTH,
    "diff": MODE_DIFFERENCE,
    MODE_POSITIVE: MODE_POSITIVE,
    MODE_NEGATIVE: MODE_NEGATIVE,
    MODE_BOTH: MODE_BOTH,
    MODE_DIFFERENCE: MODE_DIFFERENCE,
}

CONFIG_KEYS = (
    "hidden_size", "epochs", "batch_size", "learning_rate", "seed",
    "checkpoint_every", "holdout_fraction", "stop_accuracy",
)


class ApiError(Exception):
    """Error carrying an HTTP status and a machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class SessionState:
    """Dataset, checkpoint store, caches, and the single training job."""

    def __init__(self, dataset: Dataset = None, checkpoint_dir=None):
        self.dataset = None
        self.encoded = None
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.checkpoints = {}          # epoch -> ModelCheckpoint
        self._attentions = {}          # epoch -> list[AttentionRecord]
        self._responses = {}           # (path, query items) -> bytes
        self._lock = threading.Lock()
        self._job_counter = 0
        self.job = {"state": "idle", "job_id": None, "progress": None,
                    "error": None}
        if dataset is not None:
            self.attach_dataset(dataset)

    def attach_dataset(self, dataset: Dataset):
        self.dataset = dataset
        self.encoded = encode_dataset(dataset)
        self.checkpoints = {}
        self.clear_caches()

    def clear_caches(self):
        self._attentions = {}
        self._responses = {}

    def load_checkpoint_dir(self):
        """Pick up previously written checkpoints, newest file wins per epoch."""
        if self.checkpoint_dir is None or not self.checkpoint_dir.is_dir():
            return
        for path in sorted(self.checkpoint_dir.glob("epoch_*.json")):
            cp = ModelCheckpoint.load(path)
            self.checkpoints[cp.epoch] = cp

    def register_checkpoints(self, checkpoints):
        with self._lock:
            self.checkpoints = {cp.epoch: cp for cp in checkpoints}
            self.clear_caches()

    def require_dataset(self) -> Dataset:
        if self.dataset is None:
            raise ApiError(409, "no_dataset", "no dataset is loaded")
        return self.dataset

    def resolve_epoch(self, raw: str) -> int:
        if not self.checkpoints:
            raise ApiError(409, "no_checkpoint", "no checkpoints are available")
        if raw is None:
            return max(self.checkpoints)
        epoch = parse_int("epoch", raw)
        if epoch not in self.checkpoints:
            raise ApiError(404, "unknown_epoch", f"no checkpoint for epoch {epoch}")
        return epoch

    def records_for(self, epoch: int):
        cached = self._attentions.get(epoch)
        if cached is None:
            cp = self.checkpoints[epoch]
            cached = extract_attentions(cp.params, self.encoded)
            self._attentions[epoch] = cached
        return cached

    def cached_response(self, key):
        return self._responses.get(key)

    def store_response(self, key, body: bytes):
        self._responses[key] = body

    def next_job_id(self) -> str:
        self._job_counter += 1
        return f"job-{self._job_counter}"


def parse_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ApiError(422, "malformed_slice", f"{name} must be an integer, got {raw!r}")


def parse_float(name: str, raw: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ApiError(422, "malformed_slice", f"{name} must be a number, got {raw!r}")
    if value != value:  # NaN
        raise ApiError(422, "malformed_slice", f"{name} must be a number, got {raw!r}")
    return value


def check_params(request: Request, allowed: set):
    params = request.query_params
    for key in params.keys():
        if key not in allowed:
            raise ApiError(422, "unknown_parameter",
                           f"unknown query parameter {key!r}")
        if len(params.getlist(key)) > 1:
            raise ApiError(422, "unknown_parameter",
                           f"query parameter {key!r} given more than once")


def attribute_index(dataset: Dataset, name: str, status: int) -> int:
    for i, a in enumerate(dataset.schema):
        if a.name == name:
            return i
    code = "unknown_attribute" if status == 404 else "malformed_slice"
    raise ApiError(status, code, f"unknown attribute {name!r}")


def slice_from_query(state: SessionState, params) -> tuple:
    """Decode slice query parameters into (SliceSpec, epoch)."""
    dataset = state.require_dataset()
    epoch = state.resolve_epoch(params.get("epoch"))
    att_lo = parse_float("att_lo", params.get("att_lo", "0.0"))
    att_hi = parse_float("att_hi", params.get("att_hi", "1.0"))
    time_range = None
    if ("t0" in params) != ("t1" in params):
        raise ApiError(422, "malformed_slice", "t0 and t1 must be given together")
    if "t0" in params:
        time_range = (parse_int("t0", params["t0"]), parse_int("t1", params["t1"]))
    attributes = None
    if "attrs" in params:
        names = [n for n in params["attrs"].split(",") if n]
        if not names:
            raise ApiError(422, "malformed_slice", "attrs must name at least one attribute")
        attributes = tuple(attribute_index(dataset, n, 422) for n in names)
    mode = MODE_TOKENS.get(params.get("mode", "both"))
    if mode is None:
        raise ApiError(422, "malformed_slice",
                       f"mode must be pos|neg|both|diff, got {params.get('mode')!r}")
    try:
        spec = SliceSpec(attention_range=(att_lo, att_hi), time_range=time_range,
                         attributes=attributes, mode=mode, epoch=epoch)
        spec.resolve(dataset)
    except SliceError as exc:
        raise ApiError(422, "malformed_slice", str(exc))
    return spec, epoch


def canonical_json(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def json_response(body: bytes, status: int = 200) -> Response:
    return Response(content=body, status_code=status, media_type="application/json")


def _run_training(state: SessionState, config: TrainConfig):
    def progress(stats):
        with state._lock:
            state.job["progress"] = {
                "epoch": stats.epoch,
                "epochs_total": config.epochs,
                "loss": stats.loss,
                "train_accuracy": stats.train_accuracy,
                "test_accuracy": stats.test_accuracy,
            }

    try:
        result = train(state.dataset, config, encoded=state.encoded,
                       callback=progress, checkpoint_dir=state.checkpoint_dir)
    except TrainingDiverged as exc:
        state.register_checkpoints([exc.last_checkpoint])
        with state._lock:
            state.job["state"] = "failed"
            state.job["error"] = {"code": "training_diverged", "message": str(exc)}
    except Exception as exc:  # surfaced through /train/status
        with state._lock:
            state.job["state"] = "failed"
            state.job["error"] = {"code": "training_failed", "message": str(exc)}
    else:
        state.register_checkpoints(result.checkpoints)
        with state._lock:
            state.job["state"] = "done"


def create_app(dataset: Dataset = None, checkpoint_dir=None) -> FastAPI:
    state = SessionState(dataset, checkpoint_dir)
    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)
    app.state.session = state

    @app.exception_handler(ApiError)
    async def on_api_error(request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code,
                            content={"code": "http_error", "message": str(exc.detail)})

    @app.get("/api/v1/schema")
    def schema(request: Request):
        check_params(request, set())
        dataset = state.require_dataset()
        n_pos = sum(1 for i in dataset.instances if i.label == LABEL_POS)
        doc = {
            "v": 1,
            "attributes": [
                {"index": i, "name": a.name, "kind": a.kind,
                 "levels": list(a.level_labels())}
                for i, a in enumerate(dataset.schema)
            ],
            "t_max": dataset.t_max,
            "instances": {"pos": n_pos,
                          "neg": len(dataset.instances) - n_pos,
                          "total": len(dataset.instances)},
        }
        return json_response(canonical_json(doc))

    @app.post("/api/v1/train", status_code=202)
    async def train_post(request: Request):
        check_params(request, set())
        state.require_dataset()
        body = await request.body()
        try:
            raw = json.loads(body) if body else {}
        except json.JSONDecodeError:
            raise ApiError(422, "invalid_config", "request body is not valid JSON")
        if not isinstance(raw, dict):
            raise ApiError(422, "invalid_config", "config must be a JSON object")
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise ApiError(422, "invalid_config",
                           f"unknown config keys: {sorted(unknown)}")
        int_keys = ("hidden_size", "epochs", "batch_size", "seed", "checkpoint_every")
        for k, v in raw.items():
            want_int = k in int_keys
            ok = (isinstance(v, int) if want_int
                  else isinstance(v, (int, float))) and not isinstance(v, bool)
            if not ok:
                kind = "an integer" if want_int else "a number"
                raise ApiError(422, "invalid_config", f"{k} must be {kind}, got {v!r}")
        try:
            config = TrainConfig(**raw)
        except (TypeError, ValueError) as exc:
            raise ApiError(422, "invalid_config", str(exc))
        with state._lock:
            if state.job["state"] == "running":
                raise ApiError(409, "job_running", "a training job is already running")
            job_id = state.next_job_id()
            state.job = {"state": "running", "job_id": job_id,
                         "progress": None, "error": None}
        state.clear_caches()
        thread = threading.Thread(target=_run_training, args=(state, config),
                                  daemon=True)
        thread.start()
        return JSONResponse(status_code=202,
                            content={"job_id": job_id,
                                     "status_url": "/api/v1/train/status"})

    @app.get("/api/v1/train/status")
    def train_status(request: Request):
        check_params(request, set())
        with state._lock:
            doc = {
                "v": 1,
                "state": state.job["state"],
                "job_id": state.job["job_id"],
                "progress": state.job["progress"],
                "error": state.job["error"],
                "checkpoint_epochs": sorted(state.checkpoints),
            }
        return JSONResponse(content=doc)

    @app.get("/api/v1/checkpoints")
    def checkpoints(request: Request):
        check_params(request, set())
        doc = {
            "v": 1,
            "checkpoints": [
                {"epoch": cp.epoch, "loss": cp.loss,
                 "train_accuracy": cp.train_accuracy,
                 "test_accuracy": cp.test_accuracy, "seed": cp.seed}
                for _, cp in sorted(state.checkpoints.items())
            ],
        }
        return json_response(canonical_json(doc))

    @app.get("/api/v1/grid")
    def grid(request: Request):
        check_params(request, {"epoch", "mode", "att_lo", "att_hi",
                               "t0", "t1", "attrs"})
        key = ("grid", tuple(sorted(request.query_params.multi_items())))
        cached = state.cached_response(key)
        if cached is not None:
            return json_response(cached)
        spec, epoch = slice_from_query(state, request.query_params)
        records = state.records_for(epoch)
        doc = build_grid(state.dataset, records, spec).export()
        body = canonical_json(doc)
        state.store_response(key, body)
        return json_response(body)

    @app.get("/api/v1/tpartite")
    def tpartite(request: Request):
        check_params(request, {"attr", "attr2", "class", "epoch",
                               "att_lo", "att_hi", "t0", "t1"})
        dataset = state.require_dataset()
        params = request.query_params
        name = params.get("attr")
        if name is None:
            raise ApiError(422, "malformed_slice", "attr is required")
        key = ("tpartite", tuple(sorted(params.multi_items())))
        cached = state.cached_response(key)
        if cached is not None:
            return json_response(cached)
        attr = attribute_index(dataset, name, 404)
        name2 = params.get("attr2")
        class_label = params.get("class")
        if class_label is not None and class_label not in (LABEL_POS, LABEL_NEG):
            raise ApiError(422, "malformed_slice",
                           f"class must be pos|neg, got {class_label!r}")
        attr2 = attribute_index(dataset, name2, 404) if name2 is not None else None
        spec, epoch = slice_from_query(
            state, {k: v for k, v in params.items()
                    if k in ("epoch", "att_lo", "att_hi", "t0", "t1")})
        records = state.records_for(epoch)
        selection = select_events(dataset, records, spec)
        try:
            doc = tpartite_document(dataset, selection, attr, attr2,
                                    class_label, epoch)
        except SliceError as exc:
            raise ApiError(422, "malformed_slice", str(exc))
        body = canonical_json(doc)
        state.store_response(key, body)
        return json_response(body)

    @app.get("/api/v1/attentions")
    def attentions(request: Request):
        check_params(request, {"epoch", "instance"})
        dataset = state.require_dataset()
        epoch = state.resolve_epoch(request.query_params.get("epoch"))
        records = state.records_for(epoch)
        wanted = request.query_params.get("instance")
        if wanted is not None:
            records = [r for r in records if r.instance_id == wanted]
            if not records:
                raise ApiError(404, "unknown_instance",
                               f"no instance with id {wanted!r}")
        doc = {
            "v": 1,
            "epoch": epoch,
            "records": [
                {"instance_id": r.instance_id, "label": r.label,
                 "predicted": r.predicted, "p_pos": r.p_pos,
                 "alpha": list(r.alpha), "normalized": list(r.normalized)}
                for r in records
            ],
        }
        return json_response(canonical_json(doc))

    return app


def serve(dataset: Dataset, checkpoint_dir=None, host: str = "127.0.0.1",
          port: int = 8000):
    """Blocking entry point used by the command line front end."""
    import uvicorn

    app = create_app(dataset, checkpoint_dir)
    app.state.session.load_checkpoint_dir()
    uvicorn.run(app, host=host, port=port, log_level="warning")
