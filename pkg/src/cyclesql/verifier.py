"""Entailment check between an explanation and the original question.

The premise is the explanation plus serialized result plus SQL text, joined
by a ``" | "`` separator; the hypothesis is the question.  Three backends
ship: a remote HTTP client for the trained service, a deterministic
token-overlap/number-agreement heuristic, and a gold-answer oracle for
tests and upper-bound runs.  The focal-loss objective used to train the
remote service lives here too so both sides share one formula.
"""

from __future__ import annotations

import math
import os
import re
import threading
import time
from dataclasses import dataclass

import requests

from .errors import BackendUnavailable, DomainError, SqlExecutionError, Timeout
from .gateway import DbGateway, bag_equal
from .rewriter import ResultSet
from .sqlast import SqlQuery

SEPARATOR = " | "
ENV_URL = "CYCLESQL_VERIFIER_URL"
DEFAULT_THRESHOLD = 0.5
PREMISE_RESULT_ROWS = 5


@dataclass(frozen=True)
class NliInput:
    premise: str
    hypothesis: str


@dataclass(frozen=True)
class Verdict:
    label: str  # "entailment" | "contradiction"
    score: float
    latency_ms: float = 0.0

    def __post_init__(self):
        assert 0.0 <= self.score <= 1.0
        assert self.label in ("entailment", "contradiction")

    @property
    def entailed(self) -> bool:
        return self.label == "entailment"


def _sanitize_segment(text: str) -> str:
    # the top-level separator must stay unique: collapse inner occurrences
    return text.replace(SEPARATOR, " ¦ ")


def serialize_result(result: ResultSet, max_rows: int = PREMISE_RESULT_ROWS) -> str:
    n = result.row_count
    if n == 0:
        return "(0 rows)"
    rendered_rows = []
    for row in result.rows[:max_rows]:
        cells = ", ".join(
            f"{col.output_name}: {value}" for col, value in zip(result.columns, row)
        )
        rendered_rows.append(cells)
    suffix = "(1 row)" if n == 1 else f"({n} rows)"
    return f"{'; '.join(rendered_rows)} {suffix}"


def assemble_premise(explanation, result: ResultSet, sql: SqlQuery | str) -> str:
    """Explanation text, serialized result, and SQL text in three segments."""
    text = explanation.text if hasattr(explanation, "text") else str(explanation)
    sql_text = sql.render() if isinstance(sql, SqlQuery) else str(sql)
    segments = [text, serialize_result(result), sql_text]
    return SEPARATOR.join(_sanitize_segment(s) for s in segments)


def split_premise(premise: str) -> list[str]:
    return premise.split(SEPARATOR)


# --- focal loss -----------------------------------------------------------------

@dataclass(frozen=True)
class FocalLossParams:
    gamma: float = 2.0
    alpha: float = 0.75
    class_weights: tuple = (2.7, 1.0)  # (entailment, contradiction)

    def __post_init__(self):
        assert self.gamma >= 0
        assert 0.0 <= self.alpha <= 1.0
        assert self.class_weights[0] > 0 and self.class_weights[1] > 0


def focal_loss(p: float, y: int, params: FocalLossParams | None = None) -> float:
    """Down-weighted cross-entropy -(1-p_t)^gamma * log(p_t) with the usual
    alpha balancing and per-class weights as independent factors.

    ``p`` is the predicted probability of the positive (+1) class.
    """
    params = params or FocalLossParams()
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise DomainError(f"probability {p} outside [0, 1]")
    if y not in (1, -1):
        raise DomainError(f"label {y} not in {{+1, -1}}")
    p_t = p if y == 1 else 1.0 - p
    p_t = min(max(p_t, 1e-12), 1.0 - 1e-12)
    alpha_t = params.alpha if y == 1 else 1.0 - params.alpha
    weight = params.class_weights[0] if y == 1 else params.class_weights[1]
    return alpha_t * weight * ((1.0 - p_t) ** params.gamma) * (-math.log(p_t))


# --- backends -------------------------------------------------------------------

class HeuristicVerifier:
    """Token-overlap plus number/literal agreement; deterministic and pure.

    Every number and quoted literal in the hypothesis must be consistent with
    the premise; content-word coverage supplies the score.
    """

    STOPWORDS = {
        "a", "an", "the", "of", "in", "on", "for", "and", "or", "to", "is",
        "are", "was", "were", "what", "which", "who", "how", "many", "much",
        "do", "does", "did", "that", "with", "by", "all", "each", "list",
        "show", "find", "give", "me", "return", "display", "there", "their",
        "have", "has", "from", "at", "as", "be", "it", "its", "any", "per",
        "number", "numbers", "name", "names", "total", "count",
    }

    def __init__(self, threshold: float = DEFAULT_THRESHOLD):
        self.threshold = threshold

    @staticmethod
    def _tokens(text: str) -> list[str]:
        return re.findall(r"[a-z0-9_']+", text.lower())

    @staticmethod
    def _numbers(tokens: list[str]) -> set[str]:
        out = set()
        for tok in tokens:
            if re.fullmatch(r"\d+(\.\d+)?", tok):
                out.add(f"{float(tok):.9g}")
        return out

    def classify(self, premise: str, hypothesis: str, context=None) -> Verdict:
        started = time.perf_counter()
        premise_tokens = self._tokens(premise)
        hyp_tokens = self._tokens(hypothesis)
        premise_set = set(premise_tokens)
        premise_stripped = {t.rstrip("s") for t in premise_set}

        content = [t for t in hyp_tokens if t not in self.STOPWORDS and not t.isdigit()]
        if content:
            hits = sum(
                1 for t in content if t in premise_set or t.rstrip("s") in premise_stripped
            )
            coverage = hits / len(content)
        else:
            coverage = 1.0

        numbers_ok = self._numbers(hyp_tokens) <= self._numbers(premise_tokens)
        literals = re.findall(r"'([^']+)'|\"([^\"]+)\"", hypothesis)
        low_premise = premise.lower()
        literals_ok = all(
            (a or b).lower() in low_premise for a, b in literals
        )

        score = coverage if (numbers_ok and literals_ok) else min(coverage, 1.0) * 0.25
        label = "entailment" if score >= self.threshold else "contradiction"
        latency = (time.perf_counter() - started) * 1000.0
        return Verdict(label=label, score=round(score, 6), latency_ms=latency)


class RemoteVerifier:
    """HTTP client for the NLI service wire protocol.

    POST /v1/nli {"premise", "hypothesis"} -> {"label", "score"}; batch via
    /v1/nli/batch {"items": [...]} -> {"results": [...]}.  In-flight requests
    are bounded and transient failures retried once.
    """

    def __init__(self, base_url: str | None = None, timeout: float = 30.0,
                 max_in_flight: int = 4):
        self.base_url = (base_url or os.environ.get(ENV_URL) or "").rstrip("/")
        if not self.base_url:
            raise BackendUnavailable(f"no verifier URL; set {ENV_URL}")
        self.timeout = timeout
        self._semaphore = threading.Semaphore(max_in_flight)
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_error = None
        for attempt in range(2):
            try:
                with self._semaphore:
                    response = self._session.post(url, json=payload, timeout=self.timeout)
                if response.status_code >= 500:
                    last_error = BackendUnavailable(f"{url} -> {response.status_code}")
                    continue
                if response.status_code != 200:
                    raise BackendUnavailable(f"{url} -> {response.status_code}: {response.text}")
                return response.json()
            except requests.Timeout as exc:
                last_error = Timeout(f"verifier call timed out: {url}")
                if attempt:
                    raise last_error from exc
            except requests.RequestException as exc:
                last_error = BackendUnavailable(f"verifier unreachable: {exc}")
        raise last_error or BackendUnavailable("verifier call failed")

    def classify(self, premise: str, hypothesis: str, context=None) -> Verdict:
        started = time.perf_counter()
        data = self._post("/v1/nli", {"premise": premise, "hypothesis": hypothesis})
        latency = (time.perf_counter() - started) * 1000.0
        return Verdict(label=data["label"], score=float(data["score"]), latency_ms=latency)

    def classify_batch(self, pairs: list[tuple[str, str]]) -> list[Verdict]:
        started = time.perf_counter()
        payload = {"items": [{"premise": p, "hypothesis": h} for p, h in pairs]}
        data = self._post("/v1/nli/batch", payload)
        latency = (time.perf_counter() - started) * 1000.0
        return [
            Verdict(label=item["label"], score=float(item["score"]), latency_ms=latency)
            for item in data["results"]
        ]


class OracleVerifier:
    """Test-only backend answering from gold labels: entailment iff the
    candidate's execution result bag-equals the gold query's."""

    def __init__(self, gateway: DbGateway, gold_sql_by_id: dict[str, str]):
        self.gateway = gateway
        self.gold = gold_sql_by_id
        self._cache: dict[tuple, ResultSet] = {}

    def _execute(self, db_id: str, sql: str) -> ResultSet | None:
        key = (db_id, sql)
        if key not in self._cache:
            try:
                self._cache[key] = self.gateway.execute(db_id, sql)
            except Exception:  # noqa: BLE001 - any failure counts as wrong
                self._cache[key] = None
        return self._cache[key]

    def classify(self, premise: str, hypothesis: str, context=None) -> Verdict:
        if not context or "task_id" not in context:
            raise SqlExecutionError("oracle verifier needs task context")
        gold_sql = self.gold.get(context["task_id"])
        if gold_sql is None:
            return Verdict(label="contradiction", score=0.0)
        gold = self._execute(context["db_id"], gold_sql)
        candidate = self._execute(context["db_id"], context["candidate_sql"])
        ok = gold is not None and candidate is not None and bag_equal(candidate, gold)
        return Verdict(label="entailment" if ok else "contradiction",
                       score=1.0 if ok else 0.0)


class AlwaysEntailVerifier:
    """Degenerate baseline: accepts everything (top-1 behavior in the loop)."""

    def classify(self, premise: str, hypothesis: str, context=None) -> Verdict:
        return Verdict(label="entailment", score=1.0)


def verify(nli_input: NliInput, backend, context=None) -> Verdict:
    """Run one premise/hypothesis pair through the configured backend."""
    return backend.classify(nli_input.premise, nli_input.hypothesis, context=context)


# --- wire-protocol conformance ---------------------------------------------------

def run_protocol_conformance(base_url: str) -> dict:
    """Checks a live service against the wire protocol; raises AssertionError
    with a named check on the first violation.  Returns per-check details."""
    base_url = base_url.rstrip("/")
    session = requests.Session()
    details = {}

    health = session.get(f"{base_url}/healthz", timeout=10)
    assert health.status_code == 200, f"healthz returned {health.status_code}"
    details["healthz"] = health.status_code

    pair_a = {"premise": "alpha beta gamma | r | s", "hypothesis": "alpha beta gamma"}
    pair_b = {"premise": "delta epsilon | r | s", "hypothesis": "zeta eta theta"}

    def check_single(pair):
        response = session.post(f"{base_url}/v1/nli", json=pair, timeout=30)
        assert response.status_code == 200, f"/v1/nli returned {response.status_code}"
        data = response.json()
        assert set(data) >= {"label", "score"}, f"missing fields: {data}"
        assert data["label"] in ("entailment", "contradiction"), data["label"]
        assert 0.0 <= float(data["score"]) <= 1.0, data["score"]
        return data

    single_a = check_single(pair_a)
    single_b = check_single(pair_b)
    details["single"] = [single_a, single_b]

    response = session.post(
        f"{base_url}/v1/nli/batch", json={"items": [pair_a, pair_b]}, timeout=30
    )
    assert response.status_code == 200, f"/v1/nli/batch returned {response.status_code}"
    batch = response.json()
    assert "results" in batch and len(batch["results"]) == 2, batch
    for got, want in zip(batch["results"], [single_a, single_b]):
        assert got["label"] == want["label"], (got, want)
        assert abs(float(got["score"]) - float(want["score"])) < 1e-6, (got, want)
    details["batch"] = batch["results"]

    bad = session.post(
        f"{base_url}/v1/nli", data="{not json",
        headers={"Content-Type": "application/json"}, timeout=10,
    )
    assert bad.status_code == 400, f"malformed body returned {bad.status_code}"
    details["malformed"] = bad.status_code
    return details
