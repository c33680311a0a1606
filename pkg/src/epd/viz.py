"""Static SVG rendering of spiral paths and candidate sets.

Output is plain SVG 1.1 with all coordinates printed at 6 decimals, so a
fixed (spec, seed) pair renders byte-identically. The stock figure is a
3 x 8 grid: rows are box aspects 1:2, 1:1.5, 1:1 top to bottom, columns the
four clockwise then four counterclockwise terminal variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .geometry import BBox
from .sampler import (CandidateSet, SamplerConfig, adaptive_sample,
                      dynamic_coefficients, split_internal_external)
from .spiral import SpiralConfig, SpiralPath, enumerate_configurations, generate_spiral

GRID_ASPECTS = ("1:2", "1:1.5", "1:1")
GRID_PANELS = 24

_STYLE = ("polyline.spiral{fill:none;stroke:#2a6fdb;stroke-width:1.1}"
          "rect.box{fill:none;stroke:#9aa0a6;stroke-width:1}"
          "circle.internal{fill:#1a9850;stroke:none}"
          "rect.external{fill:#d73027;stroke:none}"
          "text.label{font:11px monospace;fill:#333}")


def parse_aspect(aspect: str) -> tuple[float, float]:
    try:
        w, h = aspect.split(":")
        wr, hr = float(w), float(h)
    except ValueError:
        raise InvalidParameterError(f"aspect must look like '1:1.5', got {aspect!r}")
    if wr <= 0 or hr <= 0:
        raise InvalidParameterError("aspect ratios must be positive")
    return wr, hr


@dataclass(frozen=True)
class PanelSpec:
    """One panel: a box aspect, a spiral configuration, canvas size in px."""

    aspect: str = "1:1"
    spiral: SpiralConfig = field(default_factory=SpiralConfig)
    canvas: int = 220
    show_candidates: bool = True
    seed: int = 0

    def __post_init__(self):
        parse_aspect(self.aspect)
        if self.canvas < 60:
            raise InvalidParameterError("canvas must be at least 60 px")


def panel_bbox(spec: PanelSpec, extent: float = 100.0) -> BBox:
    """Synthesized box of the panel's aspect, longest side = extent."""
    wr, hr = parse_aspect(spec.aspect)
    scale = extent / max(wr, hr)
    return BBox(0.0, 0.0, wr * scale, hr * scale)


def _f(v: float) -> str:
    return f"{v:.6f}"


def _panel_fragment(path: SpiralPath, candidates: CandidateSet | None,
                    spec: PanelSpec, bbox: BBox) -> str:
    margin = 14.0
    inner = spec.canvas - 2.0 * margin
    scale = inner / max(bbox.width, bbox.height)
    ox = (spec.canvas - scale * bbox.width) / 2.0
    oy = (spec.canvas - scale * bbox.height) / 2.0

    def tx(x: float) -> float:
        return ox + (x - bbox.x_min) * scale

    def ty(y: float) -> float:
        return oy + (y - bbox.y_min) * scale

    parts = []
    parts.append(f'<rect class="box" x="{_f(tx(bbox.x_min))}" y="{_f(ty(bbox.y_min))}" '
                 f'width="{_f(scale * bbox.width)}" height="{_f(scale * bbox.height)}"/>')
    coords = " ".join(f"{_f(tx(x))},{_f(ty(y))}" for x, y in path.points)
    parts.append(f'<polyline class="spiral" points="{coords}"/>')
    if candidates is not None:
        for sp in candidates.external:
            parts.append(f'<rect class="external" x="{_f(tx(sp.point.x) - 2.6)}" '
                         f'y="{_f(ty(sp.point.y) - 2.6)}" width="5.2" height="5.2"/>')
        for sp in candidates.internal:
            parts.append(f'<circle class="internal" cx="{_f(tx(sp.point.x))}" '
                         f'cy="{_f(ty(sp.point.y))}" r="2.8"/>')
    label = f"{spec.spiral.direction[:3]} {spec.spiral.terminal} {spec.aspect}"
    parts.append(f'<text class="label" x="4" y="12">{label}</text>')
    return "\n".join(parts)


def _build_candidates(path: SpiralPath, bbox: BBox, seed: int) -> CandidateSet:
    cfg = SamplerConfig(seed=seed)
    rng = np.random.default_rng(seed)
    coeffs = dynamic_coefficients(path.radial, cfg)
    samples = adaptive_sample(path, coeffs, bbox, cfg, rng)
    return split_internal_external(samples, bbox, cfg)


def render_panel(path: SpiralPath, candidates: CandidateSet | None,
                 spec: PanelSpec) -> str:
    """Standalone SVG document for one panel."""
    bbox = panel_bbox(spec)
    body = _panel_fragment(path, candidates, spec, bbox)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{spec.canvas}" height="{spec.canvas}">\n'
            f"<style>{_STYLE}</style>\n{body}\n</svg>\n")


def build_panel(spec: PanelSpec) -> tuple[SpiralPath, CandidateSet | None]:
    """Path (and optional candidate overlay) for a panel spec."""
    bbox = panel_bbox(spec)
    path = generate_spiral(bbox, spec.spiral)
    candidates = _build_candidates(path, bbox, spec.seed) if spec.show_candidates else None
    return path, candidates


def build_grid_specs(seed: int = 0, base: SpiralConfig | None = None,
                     canvas: int = 220, show_candidates: bool = True) -> list[PanelSpec]:
    """The stock 24-panel layout; per-panel seeds derive from the master seed."""
    configs = enumerate_configurations(base)
    specs = []
    idx = 0
    for aspect in GRID_ASPECTS:
        for cfg in configs:
            child = np.random.SeedSequence(entropy=seed, spawn_key=(idx,))
            panel_seed = int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
            specs.append(PanelSpec(aspect=aspect, spiral=cfg, canvas=canvas,
                                   show_candidates=show_candidates, seed=panel_seed))
            idx += 1
    return specs


def render_grid(specs: list[PanelSpec]) -> str:
    """3 x 8 grid; exactly 24 panel specs required, row-major order."""
    if len(specs) != GRID_PANELS:
        raise InvalidParameterError(f"grid needs exactly {GRID_PANELS} panels, "
                                    f"got {len(specs)}")
    cols = 8
    canvas = specs[0].canvas
    rows = GRID_PANELS // cols
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             f'width="{cols * canvas}" height="{rows * canvas}">',
             f"<style>{_STYLE}</style>"]
    for i, spec in enumerate(specs):
        if spec.canvas != canvas:
            raise InvalidParameterError("all panels in a grid must share one canvas size")
        path, candidates = build_panel(spec)
        bbox = panel_bbox(spec)
        gx = (i % cols) * canvas
        gy = (i // cols) * canvas
        parts.append(f'<g transform="translate({gx},{gy})">')
        parts.append(_panel_fragment(path, candidates, spec, bbox))
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
