"""Rendered synthetic corpora: tiles, 16-bit instance masks and cell tables.

Slides are grids of RGB tiles populated with non-overlapping elliptical
nuclei placed by dart throwing.  Rasterization uses center-in-pixel
inclusion.  Per-slide, per-class morphology latents (size, elongation, hue,
brightness, noise, texture amplitude) are drawn from fixed normals; planted
effects shift a latent's mean for designated label classes, so the signal
travels through the full extraction and aggregation pipeline.  Every slide
derives its own child seed from (master seed, slide index), making the corpus
byte-identical across runs.
"""

from __future__ import annotations

import colorsys
import math
from pathlib import Path

import numpy as np

from ..cellfeat.io import save_mask, save_tile
from ..io import write_csv, write_json
from ..naming import LABELS
from .spec import (
    DEFAULT_PROCEDURES,
    LATENT_SD,
    NORMAL_MAD,
    GeneratorSpec,
)

BACKGROUND_RGB = (226, 208, 217)
BACKGROUND_NOISE_SD = 3.0
LATENT_BASE = {
    "size": 1.0,
    "elongation": 1.0,
    "hue": 0.0,
    "brightness": 0.0,
    "noise": 1.0,
    "texture": 1.0,
}
PLACEMENT_TRIES = 40


def _shift_hue(rgb, delta):
    h, s, v = colorsys.rgb_to_hsv(*(c / 255.0 for c in rgb))
    r, g, b = colorsys.hsv_to_rgb((h + delta) % 1.0, s, v)
    return (255.0 * r, 255.0 * g, 255.0 * b)


def _slide_latents(spec: GeneratorSpec, label: str, rng):
    """latents[cell_class][channel] for one slide."""
    latents = {}
    for cls in ("tumor", "lymphocyte", "other"):
        latents[cls] = {}
        for channel, base in LATENT_BASE.items():
            sd = LATENT_SD[channel]
            shift = 0.0
            for eff in spec.effects:
                if (
                    eff.channel == channel
                    and eff.cell_class == cls
                    and label in eff.label_classes
                ):
                    shift += eff.size_mad * NORMAL_MAD * sd
            latents[cls][channel] = base + shift + rng.normal(0.0, sd)
    return latents


def _render_slide(spec: GeneratorSpec, slide_id: str, label: str, slide_index: int, out_dir: Path):
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=spec.seed, spawn_key=(slide_index,))
    )
    latents = _slide_latents(spec, label, rng)

    cells = []
    for cls in ("tumor", "lymphocyte", "other"):
        pop = spec.populations[cls]
        count = max(5, int(round(rng.normal(pop.count_mean * spec.cell_count_scale, pop.count_sd))))
        lat = latents[cls]
        for _ in range(count):
            a = pop.radius_mean * max(0.2, lat["size"]) * math.exp(rng.normal(0.0, pop.radius_sigma))
            ecc = rng.uniform(pop.ecc_low, pop.ecc_high)
            b = max(1.2, min(a, a * ecc / max(0.2, lat["elongation"])))
            cells.append(
                {
                    "cell_class": cls,
                    "a": a,
                    "b": b,
                    "theta": rng.uniform(0.0, math.pi),
                    "freq": (rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45)),
                    "phase": rng.uniform(0.0, 2.0 * math.pi),
                }
            )
    order = rng.permutation(len(cells))
    cells = [cells[i] for i in order]

    n_tiles = max(1, math.ceil(len(cells) / spec.cells_per_tile))
    n_region = max(1, math.ceil(spec.tumor_region_fraction * n_tiles))
    tile_of = rng.integers(0, n_tiles, size=len(cells))

    size = spec.tile_size
    base_colors = {
        cls: _shift_hue(spec.populations[cls].base_rgb, latents[cls]["hue"])
        for cls in ("tumor", "lymphocyte", "other")
    }

    slide_dir = out_dir / "slides" / slide_id
    (slide_dir / "tiles").mkdir(parents=True, exist_ok=True)
    (slide_dir / "masks").mkdir(parents=True, exist_ok=True)

    rows = []
    skipped = 0
    for t in range(n_tiles):
        tile_id = f"t{t:04d}"
        in_region = t < n_region
        rgb = np.clip(
            np.array(BACKGROUND_RGB, dtype=np.float64)[None, None, :]
            + rng.normal(0.0, BACKGROUND_NOISE_SD, size=(size, size, 3)),
            0,
            255,
        )
        mask = np.zeros((size, size), dtype=np.uint16)
        occupied = np.zeros((size, size), dtype=bool)
        next_id = 1
        for ci in np.nonzero(tile_of == t)[0]:
            cell = cells[ci]
            a, b, theta = cell["a"], cell["b"], cell["theta"]
            margin = int(math.ceil(a)) + 2
            if 2 * margin >= size:
                skipped += 1
                continue
            placed = False
            for _ in range(PLACEMENT_TRIES):
                cy = rng.uniform(margin, size - 1 - margin)
                cx = rng.uniform(margin, size - 1 - margin)
                r0, r1 = int(math.floor(cy - a)) - 1, int(math.ceil(cy + a)) + 2
                c0, c1 = int(math.floor(cx - a)) - 1, int(math.ceil(cx + a)) + 2
                rr, cc = np.meshgrid(
                    np.arange(r0, r1), np.arange(c0, c1), indexing="ij"
                )
                dx = cc - cx
                dy = rr - cy
                u = (dx * math.cos(theta) + dy * math.sin(theta)) / a
                v = (-dx * math.sin(theta) + dy * math.cos(theta)) / b
                inside = (u * u + v * v) <= 1.0
                if inside.sum() < 4:
                    continue
                window = occupied[r0:r1, c0:c1]
                if window[inside].any():
                    continue
                lat = latents[cell["cell_class"]]
                pop = spec.populations[cell["cell_class"]]
                base = np.array(base_colors[cell["cell_class"]], dtype=np.float64)
                fr, fc = cell["freq"]
                texture = (
                    pop.texture_amp
                    * max(0.0, lat["texture"])
                    * np.sin(2.0 * math.pi * (fr * rr + fc * cc) + cell["phase"])
                )
                noise = rng.normal(
                    0.0,
                    pop.color_noise_sd * max(0.05, lat["noise"]),
                    size=(r1 - r0, c1 - c0, 3),
                )
                pix = (
                    base[None, None, :]
                    + lat["brightness"]
                    + texture[:, :, None]
                    + noise
                )
                patch = rgb[r0:r1, c0:c1]
                patch[inside] = np.clip(pix[inside], 0, 255)
                window[inside] = True
                mask[r0:r1, c0:c1][inside] = next_id
                rows.append(
                    (tile_id, next_id, cell["cell_class"], "1" if in_region else "0")
                )
                next_id += 1
                placed = True
                break
            if not placed:
                skipped += 1
        save_tile(slide_dir / "tiles" / f"{tile_id}.png", np.rint(rgb).astype(np.uint8))
        save_mask(slide_dir / "masks" / f"{tile_id}.png", mask)

    write_csv(
        slide_dir / "cells.csv",
        ["tile_id", "instance_id", "cell_class", "in_tumor_region"],
        [(r[0], str(r[1]), r[2], r[3]) for r in rows],
    )
    return {
        "slide_id": slide_id,
        "label": label,
        "n_cells": len(rows),
        "n_tiles": n_tiles,
        "skipped_placements": skipped,
    }


def generate_cohort(spec: GeneratorSpec, out_dir) -> dict:
    """Render the corpus and return (and write) the ground-truth manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    slide_rows = []
    slide_stats = []
    index = 0
    for label in LABELS:
        for _ in range(spec.n_per_class.get(label, 0)):
            slide_id = f"S{index:05d}"
            stats = _render_slide(spec, slide_id, label, index, out_dir)
            slide_stats.append(stats)
            slide_rows.append(
                (
                    slide_id,
                    label,
                    DEFAULT_PROCEDURES[index % len(DEFAULT_PROCEDURES)],
                    "unassigned",
                )
            )
            index += 1
    write_csv(
        out_dir / "manifest.csv",
        ["slide_id", "met_label", "procedure_type", "split"],
        slide_rows,
    )
    total_skipped = sum(s["skipped_placements"] for s in slide_stats)
    total_cells = sum(s["n_cells"] for s in slide_stats)
    warnings = []
    if total_cells and total_skipped > 0.1 * total_cells:
        warnings.append(
            f"placement failures reduced density: {total_skipped} skipped of "
            f"{total_cells + total_skipped} attempted"
        )
    truth = {
        "schema_version": 1,
        "generator": "render",
        "seed": spec.seed,
        "n_per_class": dict(spec.n_per_class),
        "tile_size": spec.tile_size,
        "effects": [
            {
                "channel": e.channel,
                "cell_class": e.cell_class,
                "label_classes": list(e.label_classes),
                "size_mad": e.size_mad,
            }
            for e in spec.effects
        ],
        "latent_sd": LATENT_SD,
        "slides": slide_stats,
        "warnings": warnings,
    }
    write_json(out_dir / "truth.json", truth)
    return truth
