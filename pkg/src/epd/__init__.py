"""Entropy-guided point prompt discovery inside coarse bounding boxes.

Given a rough box around a referred object, the library lays a superellipse
spiral over the box, samples it adaptively in arc length, scores samples by
Bernoulli entropy of a distance-based membership probability, and verifies
the most uncertain candidates against a yes/no oracle until it has ranked
positive and negative point prompts. A benchmark harness measures how the
emitted points degrade as the input box is perturbed.
"""

from .entropy import (EntropyParams, ScoredPoint, membership_probability,
                      rank_by_entropy, score_point, shannon_entropy)
from .errors import (EpdError, InsufficientDataError, InsufficientEvidenceError,
                     InsufficientSamplesError, InvalidGeometryError,
                     InvalidParameterError, OracleUnavailableError,
                     OutOfRegionError, ProtocolError)
from .geometry import (BBox, ImageDims, NormalizedDistances, PerturbationRegime,
                       Point2, center_and_axes, convert_absolute_to_relative,
                       convert_relative_to_absolute, normalized_distances,
                       perturb_bbox)
from .pipeline import (PromptBundle, RunConfig, OracleConfig, config_digest,
                       discover_prompts, load_config, make_oracle,
                       runconfig_from_dict)
from .sampler import (AdaptiveSamples, CandidateSet, SamplerConfig,
                      adaptive_sample, dynamic_coefficients, random_candidates,
                      ray_based_candidates, split_internal_external)
from .spiral import (RadialProfile, SpiralConfig, SpiralPath,
                     choose_configuration, cumulative_arc_length,
                     enumerate_configurations, generate_spiral, radial_profile,
                     radial_schedule, superellipse_radius)
from .verification import (EarlyStopPolicy, MarkerSpec, MaskOracle, OracleQuery,
                           PROMPT_TEMPLATE, QueryRecord, RemoteVQAOracle,
                           SerializingOracle, Verdict,
                           aggregate_token_probabilities, run_verification_loop)

__version__ = "0.1.0"
