"""File formats: the NRTX block container, binary PGM images, model JSON,
and diverging heatmaps (PGM/SVG)."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .contexts import ContextTree, SimplifiedScheme
from .dictionary import PartitionedDictionary

NRTX_MAGIC = b"NRTX"
MODEL_FORMAT = "nrecm/1"


def write_blocks(path, blocks: np.ndarray) -> None:
    """NRTX container: magic, u8 width, u8 height, u16 count (LE), then
    little-endian int16 grids in row-major order."""
    blocks = np.asarray(blocks, dtype=np.int16)
    n, h, w = blocks.shape
    if n > 0xFFFF:
        raise ValueError("container holds at most 65535 blocks")
    if not (0 < w <= 255 and 0 < h <= 255):
        raise ValueError("block dimensions out of range")
    with open(path, "wb") as f:
        f.write(NRTX_MAGIC + struct.pack("<BBH", w, h, n))
        f.write(blocks.astype("<i2").tobytes())


def read_blocks(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != NRTX_MAGIC:
        raise ValueError("not an NRTX container")
    w, h, n = struct.unpack("<BBH", data[4:8])
    body = np.frombuffer(data[8:], dtype="<i2")
    if body.size != n * h * w:
        raise ValueError("truncated NRTX container")
    return body.reshape(n, h, w).astype(np.int16)


def write_pgm(path, img: np.ndarray, maxval: int = 255) -> None:
    img = np.asarray(img)
    if img.dtype == bool:
        img = img.astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(img.astype(np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError("only binary PGM (P5) is supported")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1
    w, h, maxval = fields
    if maxval > 255:
        raise ValueError("16-bit PGM not supported")
    img = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8)
    if img.size != w * h:
        raise ValueError("truncated PGM")
    return img.reshape(h, w).copy()


def heatmap_pgm(path, values: np.ndarray, scale: float | None = None) -> None:
    """Diverging map on a fixed scale symmetric about zero: 128 = 0."""
    values = np.asarray(values, dtype=float)
    if scale is None:
        scale = float(np.abs(values).max()) or 1.0
    img = np.clip(128 + 127 * values / scale, 0, 255).astype(np.uint8)
    write_pgm(path, img)


def heatmap_svg(path, values: np.ndarray, scale: float | None = None, cell: int = 16) -> None:
    values = np.asarray(values, dtype=float)
    if scale is None:
        scale = float(np.abs(values).max()) or 1.0
    h, w = values.shape
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * cell}" height="{h * cell}">'
    ]
    for y in range(h):
        for x in range(w):
            t = max(-1.0, min(1.0, values[y, x] / scale))
            if t >= 0:
                color = f"rgb({int(255 * (1 - t))},{int(255 * (1 - t))},255)"
            else:
                color = f"rgb(255,{int(255 * (1 + t))},{int(255 * (1 + t))})"
            parts.append(
                f'<rect x="{x * cell}" y="{y * cell}" width="{cell}" height="{cell}" '
                f'fill="{color}"><title>{values[y, x]:+.4f}</title></rect>'
            )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def _tree_to_json(tree: ContextTree) -> dict:
    return {
        "nc": [list(o) for o in tree.nc],
        "no": [list(o) for o in tree.no],
        "kind": tree.kind,
        "intervals": {str(c2): [list(s) for s in spans]
                      for c2, spans in tree.intervals.items()},
    }


def _tree_from_json(obj: dict) -> ContextTree:
    return ContextTree(
        nc=tuple(tuple(o) for o in obj["nc"]),
        no=tuple(tuple(o) for o in obj["no"]),
        kind=obj["kind"],
        intervals={int(k): [tuple(s) for s in v] for k, v in obj["intervals"].items()},
    )


def save_model(path, scheme, counts: np.ndarray, shape_id: int, params: dict) -> None:
    """Versioned JSON for trained grouped/tree schemes."""
    trees = []
    if isinstance(scheme, SimplifiedScheme):
        for gid in sorted(scheme.group_trees):
            lo = scheme.offsets[gid]
            tree = scheme.group_trees[gid]
            trees.append({
                "group": gid,
                "template": scheme.template_of_group[gid],
                "tree": _tree_to_json(tree),
                "counts": counts[lo:lo + tree.n_leaves].tolist(),
            })
        extra = {
            "group_of_position": list(map(int, scheme.group_of_position)),
            "templates": {str(k): [list(o) for o in v]
                          for k, v in scheme.templates.items()},
        }
    else:
        for i, tree in enumerate(scheme.trees):
            lo = int(scheme.offsets[i])
            trees.append({
                "group": i,
                "tree": _tree_to_json(tree),
                "counts": counts[lo:lo + tree.n_leaves].tolist(),
            })
        extra = {}
    doc = {
        "format": MODEL_FORMAT,
        "shape_id": shape_id,
        "params": params,
        "scheme": scheme.name,
        "trees": trees,
        **extra,
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_model(path, d: PartitionedDictionary):
    """Returns (scheme, counts, shape_id, params) from a model document."""
    from .contexts import TreeScheme

    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    params = doc["params"]
    counts_parts = []
    if doc["scheme"] == "ct-s":
        group_trees = {}
        template_of_group = {}
        for entry in doc["trees"]:
            group_trees[entry["group"]] = _tree_from_json(entry["tree"])
            template_of_group[entry["group"]] = entry["template"]
            counts_parts.append(np.asarray(entry["counts"], dtype=np.int64))
        scheme = SimplifiedScheme(
            d,
            params["n_nbd"],
            params["th_c"],
            doc["group_of_position"],
            group_trees,
            {int(k): tuple(tuple(o) for o in v)
             for k, v in doc["templates"].items()},
            template_of_group,
        )
    else:
        trees = [_tree_from_json(entry["tree"]) for entry in doc["trees"]]
        counts_parts = [np.asarray(entry["counts"], dtype=np.int64)
                        for entry in doc["trees"]]
        scheme = TreeScheme(d, params["n_nbd"], params["th_c"], trees)
    counts = np.concatenate(counts_parts, axis=0)
    return scheme, counts, doc["shape_id"], params
