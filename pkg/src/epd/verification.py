"""Point verification against a yes/no oracle.

Candidates are queried one at a time, each rendered as a synthetic marker
description (shape, color, size) folded into a fixed question template. The
oracle answers with a token-probability list; yes/no mass is aggregated by
trimmed, lowercased exact match. A verdict is retained only when its
confidence clears the threshold eta, and the loop stops as soon as the
retained positives and negatives both meet their targets.

Two oracles ship: a mask-backed desk oracle for benchmarks and tests, and an
HTTP client speaking a small JSON protocol (POST {endpoint}/v1/point-vqa).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import requests

from .entropy import ScoredPoint, rank_by_entropy
from .errors import (InsufficientEvidenceError, InvalidParameterError,
                     OracleUnavailableError, OutOfRegionError, ProtocolError)
from .geometry import Point2
from .sampler import CandidateSet

PROMPT_TEMPLATE = ("Answer strictly yes or no: Is the {color}-colored {marker} "
                   "on the object referred to by '{T}' in the picture?")

MARKER_SHAPES = ("star", "circle", "hexagon")
MARKER_COLORS = ("red", "green", "blue", "yellow", "orange", "purple", "cyan", "magenta")
MARKER_SIZE_RANGE = (6, 24)

QUERY_ORDERS = ("alternate", "external_first", "internal_first")


@dataclass(frozen=True)
class MarkerSpec:
    shape: str
    color: str
    size_px: int

    def __post_init__(self):
        if self.shape not in MARKER_SHAPES:
            raise InvalidParameterError(f"marker shape must be one of {MARKER_SHAPES}")
        if self.color not in MARKER_COLORS:
            raise InvalidParameterError(f"marker color must be one of {MARKER_COLORS}")
        lo, hi = MARKER_SIZE_RANGE
        if not (lo <= self.size_px <= hi):
            raise InvalidParameterError(f"marker size must lie in [{lo}, {hi}] px")

    def to_dict(self) -> dict:
        return {"shape": self.shape, "color": self.color, "size_px": self.size_px}


@dataclass(frozen=True)
class OracleQuery:
    image_ref: str
    expression: str
    point: Point2
    marker: MarkerSpec
    top_k: int = 5

    def __post_init__(self):
        if self.top_k < 1:
            raise InvalidParameterError("top_k must be >= 1")


@dataclass(frozen=True)
class Verdict:
    label: str  # "positive" | "negative"
    confidence: float
    p_yes: float
    p_no: float
    raw_tokens: tuple


@dataclass(frozen=True)
class EarlyStopPolicy:
    """Stop once this many retained positives and negatives exist.

    max_queries None means "all candidates"; order picks how the external
    and internal queues interleave.
    """

    pos_target: int = 2
    neg_target: int = 1
    eta: float = 0.6
    max_queries: int | None = None
    order: str = "alternate"

    def __post_init__(self):
        if self.pos_target < 0 or self.neg_target < 0:
            raise InvalidParameterError("targets must be >= 0")
        if self.pos_target == 0 and self.neg_target == 0:
            raise InvalidParameterError("at least one target must be positive")
        if not (0.0 <= self.eta <= 1.0):
            raise InvalidParameterError("eta must lie in [0, 1]")
        if self.max_queries is not None and self.max_queries < 1:
            raise InvalidParameterError("max_queries must be >= 1 when set")
        if self.order not in QUERY_ORDERS:
            raise InvalidParameterError(f"order must be one of {QUERY_ORDERS}")


@dataclass(frozen=True)
class QueryRecord:
    """One verification query as it lands in the run trace."""

    point: Point2
    p: float
    entropy: float
    origin: str
    verdict_label: str
    confidence: float
    query_index: int

    def to_dict(self) -> dict:
        return {
            "point": [round(self.point.x, 6), round(self.point.y, 6)],
            "p": round(self.p, 6),
            "entropy": round(self.entropy, 6),
            "origin": self.origin,
            "verdict_label": self.verdict_label,
            "confidence": round(self.confidence, 6),
            "query_index": self.query_index,
        }


def aggregate_token_probabilities(tokens) -> tuple[float, float]:
    """Sum yes/no probability mass from a token list.

    Accepts (text, prob) pairs or {"text","prob"} dicts. Matching is exact
    after strip + lowercase. Probabilities outside [0, 1] or totalling more
    than 1 + 1e-6 violate the protocol.
    """
    p_yes = 0.0
    p_no = 0.0
    total = 0.0
    for tok in tokens:
        if isinstance(tok, dict):
            text, prob = tok.get("text"), tok.get("prob")
        else:
            text, prob = tok
        if not isinstance(text, str) or not isinstance(prob, (int, float)):
            raise ProtocolError(f"malformed token entry {tok!r}")
        prob = float(prob)
        if not (0.0 <= prob <= 1.0):
            raise ProtocolError(f"token probability {prob} outside [0, 1]")
        total += prob
        norm = text.strip().lower()
        if norm == "yes":
            p_yes += prob
        elif norm == "no":
            p_no += prob
    if total > 1.0 + 1e-6:
        raise ProtocolError(f"token probabilities sum to {total}, above 1")
    return p_yes, p_no


def verdict_from_tokens(tokens) -> Verdict:
    """Aggregate and argmax; a tie is read as negative."""
    p_yes, p_no = aggregate_token_probabilities(tokens)
    label = "positive" if p_yes > p_no else "negative"
    raw = tuple((t.get("text"), float(t.get("prob"))) if isinstance(t, dict) else (t[0], float(t[1]))
                for t in tokens)
    return Verdict(label=label, confidence=max(p_yes, p_no),
                   p_yes=p_yes, p_no=p_no, raw_tokens=raw)


class MaskOracle:
    """Ground-truth oracle over a binary mask, with optional label noise.

    Truth is the mask value at the rounded pixel; with probability `noise`
    the label flips. Confidence is synthesized from u ~ U(0, 0.2) as 1 - u
    for the reported label, so p_yes + p_no == 1 exactly.
    """

    def __init__(self, mask: np.ndarray, noise: float = 0.0,
                 rng: np.random.Generator | None = None):
        mask = np.asarray(mask)
        if mask.ndim != 2:
            raise InvalidParameterError("mask must be a 2-D array")
        if not (0.0 <= noise <= 1.0):
            raise InvalidParameterError("noise must lie in [0, 1]")
        self.mask = mask.astype(bool)
        self.noise = noise
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def __call__(self, query: OracleQuery) -> Verdict:
        h, w = self.mask.shape
        x, y = query.point.x, query.point.y
        if not (0.0 <= x <= w and 0.0 <= y <= h):
            raise OutOfRegionError(f"point ({x}, {y}) outside {w}x{h} scene")
        col = min(int(np.rint(x)), w - 1)
        row = min(int(np.rint(y)), h - 1)
        truth = bool(self.mask[row, col])
        flip = bool(self.rng.random() < self.noise)
        label_is_yes = truth ^ flip
        u = float(self.rng.uniform(0.0, 0.2))
        p_yes, p_no = (1.0 - u, u) if label_is_yes else (u, 1.0 - u)
        return Verdict(
            label="positive" if label_is_yes else "negative",
            confidence=max(p_yes, p_no),
            p_yes=p_yes,
            p_no=p_no,
            raw_tokens=(("yes", p_yes), ("no", p_no)),
        )


class RemoteVQAOracle:
    """HTTP client for the point-VQA wire protocol.

    POSTs {endpoint}/v1/point-vqa with the query JSON and reads back
    {"tokens": [{"text","prob"}, ...]}. Any transport failure, non-200
    status, or malformed body is retried once, then surfaced as
    OracleUnavailableError. At most max_in_flight requests run concurrently.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, top_k: int = 5,
                 max_in_flight: int = 4, session: requests.Session | None = None):
        if not endpoint:
            raise InvalidParameterError("remote oracle needs a non-empty endpoint")
        if timeout <= 0:
            raise InvalidParameterError("timeout must be positive")
        if max_in_flight < 1:
            raise InvalidParameterError("max_in_flight must be >= 1")
        self.url = endpoint.rstrip("/") + "/v1/point-vqa"
        self.timeout = timeout
        self.top_k = top_k
        self._sem = threading.Semaphore(max_in_flight)
        self._session = session if session is not None else requests.Session()

    def request_body(self, query: OracleQuery) -> dict:
        return {
            "image_uri": query.image_ref,
            "expression": query.expression,
            "point": [query.point.x, query.point.y],
            "marker": query.marker.to_dict(),
            "prompt_template": PROMPT_TEMPLATE,
            "top_k": query.top_k,
        }

    def _fetch(self, query: OracleQuery):
        with self._sem:
            resp = self._session.post(self.url, json=self.request_body(query),
                                      timeout=self.timeout)
        if resp.status_code != 200:
            raise OracleUnavailableError(f"HTTP {resp.status_code} from {self.url}")
        body = resp.json()  # ValueError on non-JSON, caught by caller
        tokens = body.get("tokens") if isinstance(body, dict) else None
        if not isinstance(tokens, list) or not tokens:
            raise OracleUnavailableError(f"malformed response body from {self.url}")
        return tokens

    def __call__(self, query: OracleQuery) -> Verdict:
        last = None
        for _ in range(2):  # one retry
            try:
                return verdict_from_tokens(self._fetch(query))
            except (requests.RequestException, ValueError, ProtocolError,
                    OracleUnavailableError) as exc:
                last = exc
        raise OracleUnavailableError(f"oracle at {self.url} failed twice: {last}")


class SerializingOracle:
    """Lock wrapper so a non-thread-safe oracle can serve concurrent callers."""

    def __init__(self, oracle):
        self._oracle = oracle
        self._lock = threading.Lock()

    def __call__(self, query: OracleQuery) -> Verdict:
        with self._lock:
            return self._oracle(query)


def _merge_queues(candidates: CandidateSet, order: str) -> list[ScoredPoint]:
    ext = rank_by_entropy(candidates.external)
    inn = rank_by_entropy(candidates.internal)
    if order == "external_first":
        return ext + inn
    if order == "internal_first":
        return inn + ext
    merged = []
    for i in range(max(len(ext), len(inn))):
        if i < len(ext):
            merged.append(ext[i])
        if i < len(inn):
            merged.append(inn[i])
    return merged


def draw_marker(rng: np.random.Generator, query_index: int,
                color_cycle: list[str]) -> MarkerSpec:
    """Next marker: cycled distinct color, random shape and size."""
    color = color_cycle[query_index % len(color_cycle)]
    shape = MARKER_SHAPES[int(rng.integers(len(MARKER_SHAPES)))]
    lo, hi = MARKER_SIZE_RANGE
    size = int(rng.integers(lo, hi + 1))
    return MarkerSpec(shape=shape, color=color, size_px=size)


def run_verification_loop(candidates: CandidateSet, oracle, policy: EarlyStopPolicy,
                          rng: np.random.Generator, *, expression: str,
                          image_ref: str = "", top_k: int = 5
                          ) -> tuple[list[tuple[ScoredPoint, Verdict]], list[QueryRecord]]:
    """Query candidates in merged-queue order until targets are met.

    Each queue is entropy-descending (ties by sequence index). Returns
    (accepted, trace) where accepted holds the retained (candidate, verdict)
    pairs in query order. Raises InsufficientEvidenceError, with partial
    results attached, when the budget runs out first.
    """
    merged = _merge_queues(candidates, policy.order)
    if not merged:
        raise InvalidParameterError("no candidates to verify")
    limit = len(merged) if policy.max_queries is None else min(policy.max_queries, len(merged))

    # One seeded permutation keeps colors distinct while supply lasts.
    color_cycle = [MARKER_COLORS[i] for i in rng.permutation(len(MARKER_COLORS))]
    accepted: list[tuple[ScoredPoint, Verdict]] = []
    trace: list[QueryRecord] = []
    n_pos = n_neg = 0

    for qi in range(limit):
        sp = merged[qi]
        marker = draw_marker(rng, qi, color_cycle)
        verdict = oracle(OracleQuery(image_ref=image_ref, expression=expression,
                                     point=sp.point, marker=marker, top_k=top_k))
        trace.append(QueryRecord(
            point=sp.point, p=sp.p, entropy=sp.entropy, origin=sp.origin,
            verdict_label=verdict.label, confidence=verdict.confidence,
            query_index=qi,
        ))
        if verdict.confidence > policy.eta:
            accepted.append((sp, verdict))
            if verdict.label == "positive":
                n_pos += 1
            else:
                n_neg += 1
        if n_pos >= policy.pos_target and n_neg >= policy.neg_target:
            return accepted, trace

    raise InsufficientEvidenceError(
        f"verification exhausted {limit} queries with {n_pos} positives / "
        f"{n_neg} negatives retained (targets {policy.pos_target}/{policy.neg_target})",
        accepted=accepted, trace=trace)
