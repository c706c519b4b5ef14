"""HTTP surface for programmatic clients and the companion UI.

Endpoints: GET /health, POST /tables (CSV text or corpus-entry JSON),
POST /recommend, POST /embed. Uploaded tables live in a bounded in-memory
LRU keyed by table id; the model snapshot is swapped atomically on reload.
Malformed payloads return 400, unknown table ids 404, unsatisfiable
constraints 422; unexpected failures return an opaque 500.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import OrderedDict

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import ChartrecError, NoLegalSeed, UnsatisfiableConstraints
from .corpus import entry_from_json
from .grammar import ChartType, serialize_sequence
from .export import to_vegalite
from .model import DqnModel
from .search import SearchConfig, recommend
from .tables import Table, table_from_csv

TABLE_CACHE_SIZE = 256


class _TableCache:
    def __init__(self, capacity: int = TABLE_CACHE_SIZE):
        self._capacity = capacity
        self._lock = threading.Lock()
        self._items: OrderedDict[str, Table] = OrderedDict()

    def put(self, table: Table) -> None:
        with self._lock:
            self._items[table.table_id] = table
            self._items.move_to_end(table.table_id)
            while len(self._items) > self._capacity:
                self._items.popitem(last=False)

    def get(self, table_id: str) -> Table | None:
        with self._lock:
            table = self._items.get(table_id)
            if table is not None:
                self._items.move_to_end(table_id)
            return table


class Constraints(BaseModel):
    fields: list[int] | None = None
    chartTypes: list[str] | None = None


class RecommendRequest(BaseModel):
    tableId: str | None = None
    table: dict | None = None
    csv: str | None = None
    constraints: Constraints | None = None
    top: int = Field(default=3, ge=1, le=50)


class EmbedRequest(BaseModel):
    tableId: str | None = None
    table: dict | None = None
    csv: str | None = None


def _parse_chart_types(names: list[str] | None) -> frozenset[ChartType] | None:
    if names is None:
        return None
    out = set()
    for name in names:
        try:
            out.add(ChartType(name.capitalize()))
        except ValueError as exc:
            raise ChartrecError(f"unknown chart type {name!r}") from exc
    return frozenset(out)


def _table_from_payload(payload: dict) -> Table:
    if "fields" in payload:
        table_id = payload.get("tableId") or _digest_id(json.dumps(payload, sort_keys=True))
        entry = entry_from_json({"tableId": table_id, "fields": payload["fields"], "charts": []})
        return entry.table
    if "csv" in payload:
        return table_from_csv(payload["csv"], table_id=_digest_id(payload["csv"]))
    raise ChartrecError("table payload needs 'fields' or 'csv'")


def _digest_id(text: str) -> str:
    return "t-" + hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


def create_app(model: DqnModel, search_config: SearchConfig = SearchConfig()) -> FastAPI:
    app = FastAPI(title="chartrec")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.model_ref = {"model": model}
    app.state.tables = _TableCache()
    app.state.search_config = search_config

    def current_model() -> DqnModel:
        return app.state.model_ref["model"]

    def resolve_table(table_id, inline_table, inline_csv) -> Table | JSONResponse:
        if table_id is not None:
            table = app.state.tables.get(table_id)
            if table is None:
                return JSONResponse({"error": f"unknown tableId {table_id!r}"}, status_code=404)
            return table
        if inline_table is not None:
            table = _table_from_payload(inline_table)
        elif inline_csv is not None:
            table = table_from_csv(inline_csv, table_id=_digest_id(inline_csv))
        else:
            return JSONResponse(
                {"error": "provide tableId, table, or csv"}, status_code=400
            )
        app.state.tables.put(table)
        return table

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse({"error": "invalid request body"}, status_code=400)

    @app.exception_handler(ChartrecError)
    async def _domain_handler(request: Request, exc: ChartrecError):
        if isinstance(exc, (UnsatisfiableConstraints, NoLegalSeed)):
            return JSONResponse({"error": str(exc)}, status_code=422)
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.exception_handler(Exception)
    async def _opaque_handler(request: Request, exc: Exception):
        return JSONResponse({"error": "internal error"}, status_code=500)

    @app.get("/health")
    def health():
        return {"status": "ok", "modelVersion": current_model().config.preset}

    @app.post("/tables")
    async def upload_table(request: Request):
        raw = await request.body()
        content_type = request.headers.get("content-type", "")
        if "csv" in content_type or not raw.lstrip().startswith(b"{"):
            table = table_from_csv(raw.decode("utf-8"), table_id=_digest_id(raw.decode("utf-8")))
        else:
            table = _table_from_payload(json.loads(raw))
        app.state.tables.put(table)
        return {
            "tableId": table.table_id,
            "fields": [
                {"index": f.index, "name": f.header, "type": f.field_type.value}
                for f in table.fields
            ],
        }

    @app.post("/recommend")
    def recommend_endpoint(body: RecommendRequest):
        table = resolve_table(body.tableId, body.table, body.csv)
        if isinstance(table, JSONResponse):
            return table
        fields = None
        chart_types = None
        if body.constraints is not None:
            if body.constraints.fields is not None:
                bad = [i for i in body.constraints.fields if not 0 <= i < table.n_fields]
                if bad:
                    return JSONResponse(
                        {"error": f"field indices out of range: {bad}"}, status_code=400
                    )
                fields = frozenset(body.constraints.fields)
            chart_types = _parse_chart_types(body.constraints.chartTypes)
        recs = recommend(
            current_model(),
            table,
            fields=fields,
            chart_types=chart_types,
            top=body.top,
            base_config=app.state.search_config,
        )
        return {
            "tableId": table.table_id,
            "recommendations": [
                {
                    "sequence": serialize_sequence(r.state),
                    "score": r.score,
                    "vegalite": to_vegalite(r.state, table),
                }
                for r in recs
            ],
        }

    @app.post("/embed")
    def embed_endpoint(body: EmbedRequest):
        table = resolve_table(body.tableId, body.table, body.csv)
        if isinstance(table, JSONResponse):
            return table
        memory = current_model().encode(table)
        return {
            "tableId": table.table_id,
            "fields": [
                {
                    "index": f.index,
                    "name": f.header,
                    "type": f.field_type.value,
                    "vector": [float(x) for x in memory[f.index]],
                }
                for f in table.fields
            ],
        }

    return app


def set_model(app: FastAPI, model: DqnModel) -> None:
    """Atomically swap the model snapshot between requests."""
    app.state.model_ref = {"model": model}
