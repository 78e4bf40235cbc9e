"""HTTP service implementing the verifier wire protocol.

POST /v1/nli       {"premise", "hypothesis"} -> {"label", "score"}
POST /v1/nli/batch {"items": [...]} -> {"results": [...]} in request order
GET  /healthz      -> 200 once the model is loaded, 503 before

Malformed JSON or missing fields return 400.  Request handling is
stateless; the model loads once and inference runs under no_grad, so
identical requests yield identical scores.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import load_checkpoint, pad_batch

DECISION_THRESHOLD = 0.5


class NliRequest(BaseModel):
    premise: str
    hypothesis: str


class NliBatchRequest(BaseModel):
    items: list[NliRequest]


class ModelRunner:
    def __init__(self):
        self.model = None
        self.vocab = None
        self.config = None

    def load(self, checkpoint: str | Path) -> None:
        self.model, self.vocab, self.config = load_checkpoint(checkpoint)

    @property
    def ready(self) -> bool:
        return self.model is not None

    def score(self, pairs: list[tuple[str, str]]) -> list[dict]:
        max_len = self.config["max_len"]
        token_ids = pad_batch([
            self.vocab.encode_pair(hypothesis, premise, max_len)
            for premise, hypothesis in pairs
        ])
        with torch.no_grad():
            probs = self.model(token_ids)
        out = []
        for p in probs.tolist():
            label = "entailment" if p >= DECISION_THRESHOLD else "contradiction"
            out.append({"label": label, "score": float(p)})
        return out


def create_app(checkpoint: str | Path | None = None,
               runner: ModelRunner | None = None) -> FastAPI:
    runner = runner or ModelRunner()
    app = FastAPI(title="nli-service")
    app.state.runner = runner

    if checkpoint is not None:
        runner.load(checkpoint)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:2])})

    @app.exception_handler(json.JSONDecodeError)
    async def json_handler(request: Request, exc: json.JSONDecodeError):
        return JSONResponse(status_code=400, content={"error": "malformed json"})

    @app.get("/healthz")
    async def healthz():
        if not runner.ready:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok"}

    @app.post("/v1/nli")
    async def nli(request: NliRequest):
        if not runner.ready:
            return JSONResponse(status_code=503, content={"error": "model loading"})
        return runner.score([(request.premise, request.hypothesis)])[0]

    @app.post("/v1/nli/batch")
    async def nli_batch(request: NliBatchRequest):
        if not runner.ready:
            return JSONResponse(status_code=503, content={"error": "model loading"})
        pairs = [(item.premise, item.hypothesis) for item in request.items]
        return {"results": runner.score(pairs)}

    return app


def main(argv=None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(prog="nli-serve")
    parser.add_argument("--model", required=True, help="checkpoint directory")
    parser.add_argument("--port", type=int, default=8321)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)

    app = create_app(args.model)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
