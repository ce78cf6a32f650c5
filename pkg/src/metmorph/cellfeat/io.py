"""Slide corpus reading and per-cell feature CSV emission.

A slide directory holds `tiles/<tile_id>.png` (8-bit RGB), `masks/<tile_id>.png`
(16-bit single channel, 0 = background, value = instance id) and `cells.csv`
with header `tile_id,instance_id,cell_class,in_tumor_region`.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from ..errors import SchemaError
from ..io import fmt_float, parse_float, read_csv, write_csv
from ..naming import CELL_CLASSES, CELL_FEATURE_NAMES
from . import CellFeatureRecord, CellInstance, Tile, extract_cell_record

CELLS_CSV_HEADER = ["tile_id", "instance_id", "cell_class", "in_tumor_region"]
_TRUE = {"1", "true", "True", "TRUE"}
_FALSE = {"0", "false", "False", "FALSE"}


def load_tile(path, tile_id: str) -> Tile:
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Tile(tile_id=tile_id, rgb=rgb)


def load_mask(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise SchemaError(f"mask {path}: expected single-channel image")
    return arr.astype(np.uint16)


def save_mask(path, mask: np.ndarray):
    arr = np.asarray(mask)
    if arr.max(initial=0) > np.iinfo(np.uint16).max:
        raise SchemaError("mask instance ids exceed 16-bit range")
    Image.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


def save_tile(path, rgb: np.ndarray):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def read_cells_csv(path):
    """Rows of (tile_id, instance_id, cell_class, in_tumor_region)."""
    header, rows = read_csv(path)
    if header != CELLS_CSV_HEADER:
        raise SchemaError(f"{path}: expected header {CELLS_CSV_HEADER}, got {header}")
    out = []
    seen = set()
    for i, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise SchemaError(f"{path}: row {i} has {len(row)} fields, expected 4")
        tile_id, instance_id, cell_class, in_region = row
        key = (tile_id, instance_id)
        if key in seen:
            raise SchemaError(f"{path}: row {i}: duplicate cell {key}")
        seen.add(key)
        try:
            iid = int(instance_id)
        except ValueError:
            raise SchemaError(f"{path}: row {i}: bad instance_id {instance_id!r}") from None
        if iid <= 0:
            raise SchemaError(f"{path}: row {i}: instance_id must be positive")
        if cell_class not in CELL_CLASSES:
            raise SchemaError(f"{path}: row {i}: unknown cell_class {cell_class!r}")
        if in_region in _TRUE:
            flag = True
        elif in_region in _FALSE:
            flag = False
        else:
            raise SchemaError(f"{path}: row {i}: bad in_tumor_region {in_region!r}")
        out.append((tile_id, iid, cell_class, flag))
    return out


def cells_from_mask(mask: np.ndarray, tile_rows, tile_id: str):
    """Build CellInstance objects for the listed instance ids of one tile."""
    labeled = mask.astype(np.int64)
    n = int(labeled.max(initial=0))
    slices = ndimage.find_objects(labeled) if n > 0 else []
    cells = []
    for _, iid, cell_class, in_region in tile_rows:
        if iid > n or slices[iid - 1] is None:
            raise SchemaError(
                f"tile {tile_id}: instance_id {iid} listed in cells.csv is absent from the mask"
            )
        sl = slices[iid - 1]
        local = labeled[sl] == iid
        bbox = (sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1)
        cells.append(
            CellInstance(
                instance_id=iid,
                cell_class=cell_class,
                in_tumor_region=in_region,
                bbox=bbox,
                local_mask=local,
                tile_id=tile_id,
            )
        )
    return cells


def _extract_tile(args):
    """Worker: one tile's records as a compact picklable payload."""
    slide_dir, tile_id, tile_rows = args
    slide_dir = Path(slide_dir)
    tile = load_tile(slide_dir / "tiles" / f"{tile_id}.png", tile_id)
    mask = load_mask(slide_dir / "masks" / f"{tile_id}.png")
    if mask.shape != tile.rgb.shape[:2]:
        raise SchemaError(f"tile {tile_id}: mask shape {mask.shape} != tile {tile.rgb.shape[:2]}")
    payload = []
    for cell in cells_from_mask(mask, tile_rows, tile_id):
        rec = extract_cell_record(cell, tile)
        values = np.array([rec.features[name] for name in CELL_FEATURE_NAMES])
        payload.append(
            (rec.instance_id, rec.cell_class, rec.in_tumor_region, rec.degenerate, values)
        )
    return tile_id, payload


def _payload_to_records(tile_id, payload):
    records = []
    for iid, cell_class, in_region, degenerate, values in sorted(payload):
        features = {name: float(v) for name, v in zip(CELL_FEATURE_NAMES, values)}
        records.append(
            CellFeatureRecord(
                tile_id=tile_id,
                instance_id=iid,
                cell_class=cell_class,
                in_tumor_region=in_region,
                degenerate=degenerate,
                features=features,
            )
        )
    return records


def _slide_tasks(slide_dir):
    slide_dir = Path(slide_dir)
    rows = read_cells_csv(slide_dir / "cells.csv")
    by_tile = {}
    for row in rows:
        by_tile.setdefault(row[0], []).append(row)
    return [(str(slide_dir), tile_id, by_tile[tile_id]) for tile_id in sorted(by_tile)]


def _run_tasks(tasks, jobs):
    results = {}
    if jobs > 1 and len(tasks) > 1:
        chunksize = max(1, len(tasks) // (jobs * 8))
        keys = [(t[0], t[1]) for t in tasks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, (_, payload) in zip(
                keys, pool.map(_extract_tile, tasks, chunksize=chunksize)
            ):
                results[key] = payload
    else:
        for task in tasks:
            _, payload = _extract_tile(task)
            results[(task[0], task[1])] = payload
    return results


def extract_slide(slide_dir, jobs: int = 1):
    """Extract every listed cell of a slide; returns records sorted by (tile, id)."""
    tasks = _slide_tasks(slide_dir)
    results = _run_tasks(tasks, jobs)
    out = []
    for _, tile_id in sorted(results):
        out.extend(_payload_to_records(tile_id, results[(str(Path(slide_dir)), tile_id)]))
    return out


def extract_corpus(slides_dir, jobs: int = 1):
    """Extract every slide under slides_dir with one shared worker pool.

    Slides and their tiles are processed concurrently up to the jobs bound;
    results arrive as {slide_id: sorted records} regardless of scheduling.
    """
    slides_dir = Path(slides_dir)
    slide_ids = sorted(p.name for p in slides_dir.iterdir() if p.is_dir())
    tasks = []
    for slide_id in slide_ids:
        tasks.extend(_slide_tasks(slides_dir / slide_id))
    results = _run_tasks(tasks, jobs)
    out = {}
    for slide_id in slide_ids:
        slide_key = str(slides_dir / slide_id)
        records = []
        for (sdir, tile_id) in sorted(k for k in results if k[0] == slide_key):
            records.extend(_payload_to_records(tile_id, results[(sdir, tile_id)]))
        out[slide_id] = records
    return out


CELL_FEATURES_HEADER = [
    "tile_id",
    "instance_id",
    "cell_class",
    "in_tumor_region",
    "degenerate",
] + list(CELL_FEATURE_NAMES)


def write_cell_features_csv(path, records):
    def rows():
        for rec in records:
            yield [
                rec.tile_id,
                str(rec.instance_id),
                rec.cell_class,
                "1" if rec.in_tumor_region else "0",
                "1" if rec.degenerate else "0",
            ] + [fmt_float(rec.features[name]) for name in CELL_FEATURE_NAMES]

    write_csv(path, CELL_FEATURES_HEADER, rows())


def read_cell_features_csv(path):
    header, rows = read_csv(path)
    if header != CELL_FEATURES_HEADER:
        missing = sorted(set(CELL_FEATURES_HEADER) - set(header))
        raise SchemaError(f"{path}: cell feature columns mismatch; missing {missing[:5]}")
    records = []
    for row in rows:
        features = {
            name: parse_float(row[5 + i]) for i, name in enumerate(CELL_FEATURE_NAMES)
        }
        records.append(
            CellFeatureRecord(
                tile_id=row[0],
                instance_id=int(row[1]),
                cell_class=row[2],
                in_tumor_region=row[3] == "1",
                degenerate=row[4] == "1",
                features=features,
            )
        )
    return records
