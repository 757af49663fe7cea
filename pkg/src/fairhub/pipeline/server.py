"""Read-only HTTP API over a study store.

The app snapshots the store at startup (records, overviews, file paths) and
serves JSON throughout. Data-file bytes are only handed out for studies
whose access tier is public; controlled studies answer 403 with a
machine-readable pointer to the access process. Study metadata, summary
statistics, and documentation are always open.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi import Query as QueryParam
from fastapi.responses import JSONResponse, Response

from ..catalog import (
    CatalogError,
    Query,
    autocomplete,
    build_index,
    facet_histogram,
    facet_histogram_csv,
    search,
)
from ..metadata import parse_template, serialize_metadata, serialize_metadata_yaml
from .store import StoredStudy, StudyStore

ACCESS_REQUEST_BODY = {
    "error": "controlled-access",
    "message": "this data file is in the controlled tier; request access through the data access process",
    "how_to_request": "https://fairhub.local/docs/access",
}


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse({"error": "bad-query", "detail": detail}, status_code=400)


def _not_found(detail: str = "unknown accession") -> JSONResponse:
    return JSONResponse({"error": "not-found", "detail": detail}, status_code=404)


def create_app(store_root: str | Path, study_template_path: str | Path | None = None) -> FastAPI:
    store = StudyStore(store_root)
    records = store.records()
    index = build_index(records)
    studies: dict[str, StoredStudy] = {acc: store.load_study(acc) for acc in store.list_accessions()}

    template = None
    if study_template_path is not None:
        template, _ = parse_template(Path(study_template_path).read_bytes())

    app = FastAPI(title="fairhub API", version="0.1.0", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health():
        return {"status": "ok", "studies": len(studies)}

    @app.get("/studies")
    def list_studies(
        text: str | None = None,
        filter: list[str] = QueryParam(default=[]),  # repeated field=value pairs
        sort: str = "title",
        order: str = "asc",
        offset: int = 0,
        limit: int = 50,
    ):
        filters: list[tuple[str, str]] = []
        for f in filter or []:
            if "=" not in f:
                return _bad_request(f"filter {f!r} must look like field=value")
            fieldname, _, value = f.partition("=")
            filters.append((fieldname, value))
        try:
            q = Query(text=text, filters=tuple(filters), sort_field=sort, sort_dir=order, offset=offset, limit=limit)
            total, page = search(index, q)
        except (CatalogError, ValueError) as exc:
            return _bad_request(str(exc))
        return {
            "total": total,
            "offset": q.offset,
            "limit": q.limit,
            "studies": [r.to_dict() for r in page],
        }

    @app.get("/autocomplete")
    def autocomplete_endpoint(prefix: str = "", k: int = 10):
        try:
            tokens = autocomplete(index, prefix, k)
        except ValueError as exc:
            return _bad_request(str(exc))
        return {"prefix": prefix, "tokens": tokens}

    @app.get("/facets")
    def facets_endpoint(field: str, stack_by: str | None = None, format: str = "json"):
        try:
            hist = facet_histogram(index, field, stack_by)
            if format == "csv":
                return Response(facet_histogram_csv(index, field, stack_by), media_type="text/csv")
        except CatalogError as exc:
            return _bad_request(str(exc))
        return {
            "field": field,
            "stack_by": stack_by,
            "histogram": [{"value": value, "counts": counts} for value, counts in hist],
        }

    @app.get("/studies/{accession}")
    def study_overview(accession: str):
        stored = studies.get(accession)
        if stored is None:
            return _not_found()
        record = index.records.get(accession)
        overview = stored.overview()
        overview["variable_names"] = sorted(record.variable_names) if record else []
        return overview

    @app.get("/studies/{accession}/metadata")
    def study_metadata(accession: str, format: str = "json"):
        stored = studies.get(accession)
        if stored is None:
            return _not_found()
        if format == "yaml":
            return Response(serialize_metadata_yaml(stored.instance, template), media_type="application/yaml")
        return Response(serialize_metadata(stored.instance, template), media_type="application/json")

    @app.get("/studies/{accession}/files/{file_name}")
    def study_file(accession: str, file_name: str):
        stored = studies.get(accession)
        if stored is None:
            return _not_found()
        for f in stored.files:
            if f.file_name == file_name:
                if stored.instance.get("access_tier") != "public":
                    return JSONResponse(ACCESS_REQUEST_BODY, status_code=403)
                return Response(f.data_path.read_bytes(), media_type="text/csv")
        return _not_found(f"no data file named {file_name!r}")

    @app.get("/studies/{accession}/docs/{doc_name}")
    def study_doc(accession: str, doc_name: str):
        stored = studies.get(accession)
        if stored is None:
            return _not_found()
        for name, path in stored.documents:
            if name == doc_name:
                return Response(path.read_bytes(), media_type="application/octet-stream")
        return _not_found(f"no document named {doc_name!r}")

    return app


def serve(store_root: str | Path, host: str = "127.0.0.1", port: int = 8000, study_template_path=None):
    import uvicorn

    app = create_app(store_root, study_template_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")
