"""HTTP surface: similarity search, all-target prediction, dataset export.

State (corpus, fingerprint index, protein featurizations, checkpoints) is
loaded once at startup and is read-only afterwards; requests share it freely.
The CLI calls the same payload builders, so API and CLI emit identical JSON
for identical inputs. Scores are serialized to 3 decimals; ranking happens at
full precision before rounding.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel

from . import __version__
from .chem.conformer import ConformerError, default_conformer_provider
from .chem.smiles import InvalidSmilesError
from .core import Corpus, CorpusError, load_corpus
from .export import corpus_hash, export_dataset
from .models import ScopeModel, load_checkpoint
from .predict import PredictionRow, predict_targets
from .search import SearchHit, FingerprintIndex
from .training import FeatureStore

logger = logging.getLogger("scope.service")


def hit_payload(hit: SearchHit) -> dict:
    return {
        "compound_id": hit.compound_id,
        "smiles": hit.smiles,
        "similarity": round(hit.similarity, 3),
    }


def prediction_payload(row: PredictionRow) -> dict:
    return {
        "protein_id": row.protein_id,
        "family": row.family,
        "score": round(row.score, 3),
        "per_model_scores": [round(s, 3) for s in row.per_model_scores],
        "rank": row.rank,
    }


@dataclass
class ServiceConfig:
    corpus_dir: str
    checkpoints: list[str] = field(default_factory=list)
    host: str = "127.0.0.1"
    port: int = 8000
    conformer_dir: str | None = None
    synthetic_structures: int | None = None  # seed; fixtures/demos without PDB files

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        return cls(**raw)


class ServiceState:
    """Read-only shared state behind every endpoint and the mirroring CLI."""

    def __init__(
        self,
        corpus: Corpus,
        models: list[ScopeModel] | None = None,
        store: FeatureStore | None = None,
        index: FingerprintIndex | None = None,
    ):
        self.corpus = corpus
        self.models = models or []
        self.store = store or FeatureStore(corpus)
        self.index = index or FingerprintIndex.from_corpus(corpus)
        self.corpus_hash = corpus_hash(corpus)

    @classmethod
    def from_config(cls, config: ServiceConfig) -> "ServiceState":
        corpus = load_corpus(config.corpus_dir)
        models = [load_checkpoint(p)[0] for p in config.checkpoints]
        structure_provider = None
        if config.synthetic_structures is not None:
            from .synthetic import SyntheticStructureProvider

            structure_provider = SyntheticStructureProvider(config.synthetic_structures)
        store = FeatureStore(
            corpus,
            conformer_provider=default_conformer_provider(config.conformer_dir),
            structure_provider=structure_provider,
            fingerprint_bits=models[0].config.fingerprint_bits if models else 2048,
        )
        return cls(corpus, models, store)

    # -- operations shared by API and CLI ------------------------------------

    def search_payload(self, smiles: str) -> list[dict]:
        return [hit_payload(h) for h in self.index.search(smiles)]

    def predict_payload(self, smiles: str, top_k: int | None = None) -> list[dict]:
        if not self.models:
            raise CorpusError("no checkpoints loaded")
        rows = predict_targets(smiles, self.models, self.corpus, self.store, top_k)
        return [prediction_payload(r) for r in rows]

    def export_bytes(self, family: str | None = None) -> bytes:
        return export_dataset(self.corpus, family=family)


class SearchRequest(BaseModel):
    smiles: str


class PredictRequest(BaseModel):
    smiles: str
    top_k: Optional[int] = None


def create_app(state: ServiceState):
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse, Response

    app = FastAPI(title="scope-dti", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex
        logger.exception("request %s failed [%s]", request.url.path, error_id)
        return JSONResponse(status_code=500, content={"error_id": error_id})

    def register(path: str, **kwargs):
        # every route is served under /api/v1 (versioned schema home) and /api
        def wrap(fn):
            app.add_api_route(f"/api/v1{path}", fn, **kwargs)
            app.add_api_route(f"/api{path}", fn, **kwargs)
            return fn

        return wrap

    @register("/search", methods=["POST"])
    async def search(req: SearchRequest):
        try:
            return state.search_payload(req.smiles)
        except InvalidSmilesError as exc:
            return JSONResponse(status_code=400, content={"error": f"invalid SMILES: {exc}"})

    @register("/predict", methods=["POST"])
    async def predict(req: PredictRequest):
        try:
            return state.predict_payload(req.smiles, req.top_k)
        except InvalidSmilesError as exc:
            return JSONResponse(status_code=400, content={"error": f"invalid SMILES: {exc}"})
        except ConformerError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @register("/dataset", methods=["GET"])
    async def dataset(family: str | None = None):
        try:
            payload = state.export_bytes(family)
        except CorpusError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return Response(
            content=payload,
            media_type="application/gzip",
            headers={"Content-Disposition": "attachment; filename=scope-dataset.tar.gz"},
        )

    @register("/health", methods=["GET"])
    async def health():
        return {"version": __version__, "corpus_hash": state.corpus_hash}

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    state = ServiceState.from_config(config)
    app = create_app(state)
    uvicorn.run(app, host=config.host, port=config.port)
