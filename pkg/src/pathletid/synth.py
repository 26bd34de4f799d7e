"""Deterministic synthetic pseudo-handwriting corpus generator.

Each synthetic writer owns a parametric style: a slant (shear), a
stroke curvature scale and turn bias, a stroke width, glyph spacing and
a private set of glyph prototypes (smooth random open curves).  A
document lays the writer's glyphs out in rows with per-instance jitter
drawn from a per-document random stream, so two documents by the same
writer differ in text and in small shape perturbations while sharing
the underlying style.

Generation is deterministic: every random draw derives from the corpus
seed plus the writer and document indices, so rerunning with the same
arguments produces byte-identical image files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .corpus import CorpusManifest, ManifestEntry, save_manifest

PAGE_SIZE = (960, 640)  # (width, height) pixels
INK_LEVEL = 30
PAPER_LEVEL = 245
_GLYPHS_PER_WRITER = 12
_MARGIN = 40


@dataclass(frozen=True)
class WriterStyle:
    """Parameters that stay fixed across one writer's documents."""

    slant: float  # shear, pixels of x drift per pixel of glyph height
    curvature: float  # std dev of the turn angle per stroke step, radians
    turn_bias: float  # mean turn per step; sign picks the loop direction
    stroke_width: int
    step_len: float  # stroke step length, pixels
    spacing: float  # gap between glyphs, pixels
    scale: float  # overall glyph size multiplier
    glyphs: tuple  # per-writer glyph prototypes, each an (n, 2) array


def _make_glyph(rng: np.random.Generator, style_free) -> np.ndarray:
    step_len, curvature, turn_bias = style_free
    n_steps = int(rng.integers(8, 15))
    theta = rng.uniform(0, 2 * np.pi)
    pts = np.empty((n_steps + 1, 2))
    pts[0] = 0.0
    for i in range(n_steps):
        theta += turn_bias + curvature * rng.normal()
        pts[i + 1] = pts[i] + step_len * np.array([np.cos(theta), np.sin(theta)])
    return pts - pts.min(axis=0)


def writer_style(rng: np.random.Generator, slant=None, turn_bias=None) -> WriterStyle:
    """Draw a random style; ``slant`` / ``turn_bias`` may be pinned."""
    slant = rng.uniform(-0.4, 0.4) if slant is None else float(slant)
    curvature = rng.uniform(0.3, 0.6)
    turn_bias = rng.uniform(-0.2, 0.2) if turn_bias is None else float(turn_bias)
    stroke_width = int(rng.integers(3, 6))
    step_len = rng.uniform(8.0, 12.0)
    spacing = rng.uniform(10.0, 18.0)
    scale = rng.uniform(0.9, 1.15)
    glyphs = tuple(
        _make_glyph(rng, (step_len, curvature, turn_bias))
        for _ in range(_GLYPHS_PER_WRITER)
    )
    return WriterStyle(
        slant, curvature, turn_bias, stroke_width, step_len, spacing, scale, glyphs
    )


def _place_glyph(style: WriterStyle, proto: np.ndarray, rng: np.random.Generator):
    """One jittered, scaled, slanted instance of a glyph prototype."""
    pts = proto * (style.scale * (1.0 + rng.normal(0, 0.04)))
    pts = pts + rng.normal(0, 1.1, pts.shape)  # per-document shape noise
    height = pts[:, 1].max()
    sheared_x = pts[:, 0] + style.slant * (height - pts[:, 1])
    pts = np.column_stack([sheared_x - sheared_x.min(), pts[:, 1]])
    return pts


def render_document(
    style: WriterStyle, rng: np.random.Generator, size=PAGE_SIZE
) -> np.ndarray:
    """Rasterize one page of pseudo-handwriting as a grayscale array."""
    width, height = size
    img = Image.new("L", (width, height), PAPER_LEVEL)
    draw = ImageDraw.Draw(img)
    row_height = 90.0 * style.scale
    y = _MARGIN + row_height
    while y < height - _MARGIN:
        x = float(_MARGIN)
        while True:
            proto = style.glyphs[int(rng.integers(len(style.glyphs)))]
            pts = _place_glyph(style, proto, rng)
            glyph_w = pts[:, 0].max()
            if x + glyph_w > width - _MARGIN:
                break
            baseline = y + rng.normal(0, 2.0)
            xy = [(x + px, baseline - pts[:, 1].max() + py) for px, py in pts]
            draw.line(xy, fill=INK_LEVEL, width=style.stroke_width, joint="curve")
            x += glyph_w + style.spacing + rng.normal(0, 2.5)
        y += row_height
    page = np.asarray(img, dtype=float)
    page = page + rng.normal(0, 3.0, page.shape)  # scanner-style sensor noise
    return np.clip(page, 0, 255).astype(np.uint8)


def corpus_styles(n_writers: int, seed: int) -> list:
    """One style per writer, slants and turn biases spread deterministically.

    Slant is the strongest single style cue, so it is distributed evenly
    over its range (rather than drawn independently) to keep any two
    writers distinguishable; turn bias is spread the same way in a
    shuffled order so adjacent slants do not share loop directions.
    """
    layout_rng = np.random.default_rng([seed, 0xA11])
    slants = np.linspace(-0.4, 0.4, n_writers) if n_writers > 1 else np.array([0.2])
    biases = np.linspace(-0.2, 0.2, n_writers) if n_writers > 1 else np.array([0.1])
    biases = biases[layout_rng.permutation(n_writers)]
    styles = []
    for i in range(n_writers):
        rng = np.random.default_rng([seed, i, 0])
        styles.append(
            writer_style(
                rng,
                slant=slants[i] + rng.normal(0, 0.01),
                turn_bias=biases[i] + rng.normal(0, 0.005),
            )
        )
    return styles


def generate_corpus(
    out_dir,
    n_writers: int,
    docs_per_writer: int,
    seed: int,
    size=PAGE_SIZE,
    role: str = "gallery",
) -> CorpusManifest:
    """Write PNG pages plus ``manifest.csv``; returns the manifest."""
    if n_writers < 1 or docs_per_writer < 1:
        raise ValueError("writer and document counts must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    styles = corpus_styles(n_writers, seed)
    entries = []
    for wi, style in enumerate(styles):
        writer_id = f"w{wi:03d}"
        for di in range(docs_per_writer):
            doc_rng = np.random.default_rng([seed, wi, 1 + di])
            page = render_document(style, doc_rng, size)
            name = f"{writer_id}_d{di:02d}.png"
            Image.fromarray(page, "L").save(out_dir / name, format="PNG")
            entries.append(ManifestEntry(f"{writer_id}_d{di:02d}", writer_id, name, role))
    manifest = CorpusManifest(entries, out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest
