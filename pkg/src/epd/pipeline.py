"""End-to-end prompt discovery: box in, verified point prompts out.

discover_prompts composes geometry -> spiral -> sampling -> entropy
annotation -> verification and packages the result as a PromptBundle. Every
stochastic stage draws from a child stream of the configured seed, so a
bundle is a pure function of (inputs, config). Errors raised by a stage are
re-raised with that stage's name stamped on them.
"""

from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace

import numpy as np

from .entropy import EntropyParams
from .errors import EpdError, InvalidParameterError
from .geometry import BBox, ImageDims, Point2, convert_relative_to_absolute
from .sampler import (CandidateSet, SamplerConfig, adaptive_sample,
                      dynamic_coefficients, random_candidates,
                      ray_based_candidates, split_internal_external)
from .spiral import SpiralConfig, choose_configuration, generate_spiral
from .verification import (EarlyStopPolicy, MaskOracle, QueryRecord,
                           RemoteVQAOracle, run_verification_loop)

ENV_VQA_URL = "EPD_VQA_URL"


@dataclass(frozen=True)
class OracleConfig:
    """Which oracle to use and how: mask (desk ground truth) or remote HTTP."""

    kind: str = "mask"
    noise: float = 0.0
    endpoint: str = ""
    timeout: float = 10.0
    top_k: int = 5
    max_in_flight: int = 4

    def __post_init__(self):
        if self.kind not in ("mask", "remote"):
            raise InvalidParameterError("oracle kind must be 'mask' or 'remote'")
        if not (0.0 <= self.noise <= 1.0):
            raise InvalidParameterError("noise must lie in [0, 1]")
        if self.timeout <= 0:
            raise InvalidParameterError("timeout must be positive")
        if self.top_k < 1:
            raise InvalidParameterError("top_k must be >= 1")
        if self.max_in_flight < 1:
            raise InvalidParameterError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Every knob of one discovery run; the digest of this is stamped on bundles."""

    spiral: SpiralConfig = None  # type: ignore[assignment]
    sampler: SamplerConfig = None  # type: ignore[assignment]
    entropy: EntropyParams = None  # type: ignore[assignment]
    policy: EarlyStopPolicy = None  # type: ignore[assignment]
    oracle: OracleConfig = None  # type: ignore[assignment]
    alpha: float = 1000.0

    def __post_init__(self):
        # Dataclass defaults must be immutable; fill section defaults here.
        if self.spiral is None:
            object.__setattr__(self, "spiral",
                               SpiralConfig(direction="random", terminal="random"))
        if self.sampler is None:
            object.__setattr__(self, "sampler", SamplerConfig())
        if self.entropy is None:
            object.__setattr__(self, "entropy", EntropyParams())
        if self.policy is None:
            object.__setattr__(self, "policy", EarlyStopPolicy())
        if self.oracle is None:
            object.__setattr__(self, "oracle", OracleConfig())
        if self.alpha <= 0:
            raise InvalidParameterError("alpha must be positive")

    def to_dict(self) -> dict:
        def section(obj) -> dict:
            return {f.name: getattr(obj, f.name) for f in fields(obj)}

        return {
            "spiral": section(self.spiral),
            "sampler": section(self.sampler),
            "entropy": section(self.entropy),
            "policy": section(self.policy),
            "oracle": section(self.oracle),
            "alpha": self.alpha,
        }


_SECTION_TYPES = {
    "spiral": SpiralConfig,
    "sampler": SamplerConfig,
    "entropy": EntropyParams,
    "policy": EarlyStopPolicy,
    "oracle": OracleConfig,
}


def runconfig_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a plain dict; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise InvalidParameterError("config document must be a JSON object")
    allowed = set(_SECTION_TYPES) | {"alpha"}
    unknown = set(doc) - allowed
    if unknown:
        raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        if name not in doc:
            continue
        section = doc[name]
        if not isinstance(section, dict):
            raise InvalidParameterError(f"config section {name!r} must be an object")
        valid = {f.name for f in fields(cls)}
        bad = set(section) - valid
        if bad:
            raise InvalidParameterError(f"unknown keys in {name!r}: {sorted(bad)}")
        kwargs[name] = cls(**section)
    if "alpha" in doc:
        kwargs["alpha"] = doc["alpha"]
    return RunConfig(**kwargs)


def load_config(path: str) -> RunConfig:
    """Read one JSON document from path and build the RunConfig."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"config file {path} is not valid JSON: {exc}")
    return runconfig_from_dict(doc)


def config_digest(config: RunConfig) -> str:
    """Lowercase hex SHA-256 over the canonical config serialization."""
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptBundle:
    """Final product: ranked, verified point prompts plus the full query trace."""

    bbox: BBox
    positive_points: list[Point2]
    negative_points: list[Point2]
    trace: list[QueryRecord]
    seed: int
    config_digest: str

    def to_dict(self) -> dict:
        return {
            "bbox": [round(v, 6) for v in self.bbox.as_tuple()],
            "positive_points": [[round(p.x, 6), round(p.y, 6)]
                                for p in self.positive_points],
            "negative_points": [[round(p.x, 6), round(p.y, 6)]
                                for p in self.negative_points],
            "trace": [rec.to_dict() for rec in self.trace],
            "seed": self.seed,
            "config_digest": self.config_digest,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@contextmanager
def _stage(name: str):
    """Stamp the stage name on any domain error crossing this boundary."""
    try:
        yield
    except EpdError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def make_oracle(cfg: OracleConfig, *, scene=None, rng: np.random.Generator | None = None):
    """Oracle instance per config. EPD_VQA_URL overrides the remote endpoint."""
    if cfg.kind == "mask":
        if scene is None:
            raise InvalidParameterError("mask oracle requires a scene")
        return MaskOracle(scene.mask, noise=cfg.noise, rng=rng)
    endpoint = os.environ.get(ENV_VQA_URL) or cfg.endpoint
    if not endpoint:
        raise InvalidParameterError(
            f"remote oracle needs an endpoint (config or {ENV_VQA_URL})")
    return RemoteVQAOracle(endpoint, timeout=cfg.timeout, top_k=cfg.top_k,
                           max_in_flight=cfg.max_in_flight)


def build_candidates(bbox: BBox, config: RunConfig,
                     rng_spiral: np.random.Generator,
                     rng_sampler: np.random.Generator) -> CandidateSet:
    """Candidate queues per the configured strategy."""
    strategy = config.sampler.strategy
    if strategy == "ray":
        with _stage("sampler"):
            return ray_based_candidates(bbox, config.sampler, rng_sampler,
                                        entropy_params=config.entropy)
    if strategy == "random":
        with _stage("sampler"):
            return random_candidates(bbox, config.sampler, rng_sampler,
                                     entropy_params=config.entropy)
    with _stage("spiral"):
        spiral_cfg = config.spiral
        if spiral_cfg.direction == "random" or spiral_cfg.terminal == "random":
            direction, terminal = choose_configuration(rng_spiral)
            if spiral_cfg.direction != "random":
                direction = spiral_cfg.direction
            if spiral_cfg.terminal != "random":
                terminal = spiral_cfg.terminal
            spiral_cfg = replace(spiral_cfg, direction=direction, terminal=terminal)
        path = generate_spiral(bbox, spiral_cfg)
    with _stage("sampler"):
        coeffs = dynamic_coefficients(path.radial, config.sampler)
        samples = adaptive_sample(path, coeffs, bbox, config.sampler, rng_sampler)
        return split_internal_external(samples, bbox, config.sampler,
                                       entropy_params=config.entropy)


def discover_prompts(bbox_in, dims: ImageDims, expression: str, config: RunConfig,
                     *, scene=None, oracle=None, bbox_is_relative: bool = False,
                     image_ref: str = "") -> PromptBundle:
    """Run the full chain and return the PromptBundle.

    bbox_in is a BBox or a 4-sequence (x_min, y_min, x_max, y_max); with
    bbox_is_relative it is first mapped from the [0, alpha] frame to pixels.
    The oracle comes from config.oracle unless an instance is passed in.
    All randomness derives from config.sampler.seed.
    """
    seed = config.sampler.seed
    streams = np.random.SeedSequence(seed).spawn(4)
    rng_spiral, rng_sampler, rng_verify, rng_oracle = (
        np.random.default_rng(s) for s in streams)

    with _stage("geometry"):
        bbox = bbox_in if isinstance(bbox_in, BBox) else BBox(*(float(v) for v in bbox_in))
        if bbox_is_relative:
            bbox = convert_relative_to_absolute(bbox, dims, config.alpha)
        if bbox.x_max > dims.width or bbox.y_max > dims.height:
            raise InvalidParameterError(
                f"bbox {bbox.as_tuple()} exceeds image dims {dims.width}x{dims.height}")

    candidates = build_candidates(bbox, config, rng_spiral, rng_sampler)

    with _stage("verification"):
        if oracle is None:
            oracle = make_oracle(config.oracle, scene=scene, rng=rng_oracle)
        accepted, trace = run_verification_loop(
            candidates, oracle, config.policy, rng_verify,
            expression=expression, image_ref=image_ref, top_k=config.oracle.top_k)

    positives = [sp.point for sp, v in accepted if v.label == "positive"]
    negatives = [sp.point for sp, v in accepted if v.label == "negative"]
    return PromptBundle(
        bbox=bbox,
        positive_points=positives[:config.policy.pos_target],
        negative_points=negatives[:config.policy.neg_target],
        trace=trace,
        seed=seed,
        config_digest=config_digest(config),
    )
