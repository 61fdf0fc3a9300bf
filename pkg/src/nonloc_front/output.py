"""Writers for snapshot CSVs, PGM heatmaps, front tracks and JSON reports.

Every file starts with a header line carrying the scenario config hash.
Floats are written in shortest round-trip form so identical runs give
identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

OBSTACLE_GREY = 128


def _fmt(x) -> str:
    return repr(float(x))


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:010.3f}"


def write_snapshot_csv(path, grid, t: float, u, config_hash: str):
    x, y = grid.centers[:, 0], grid.centers[:, 1]
    ts = _fmt(t)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write("t,x,y,u\n")
        for xi, yi, ui in zip(x, y, u):
            fh.write(f"{ts},{_fmt(xi)},{_fmt(yi)},{_fmt(ui)}\n")


def read_snapshot_csv(path):
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3]


def raster(grid, u) -> tuple[np.ndarray, np.ndarray]:
    """8-bit image (rows = x2 from top to bottom, columns = x1) and obstacle mask."""
    shape = grid.index.shape
    if len(shape) == 1:
        shape = (shape[0], 1)
    idx = grid.index.reshape(shape)
    mask = idx < 0
    img = np.full(shape, OBSTACLE_GREY, dtype=np.uint8)
    vals = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    img[~mask] = np.round(255.0 * vals[idx[~mask]]).astype(np.uint8)
    # lattice axis 0 is x1; image rows run down in x2
    return img.T[::-1].copy(), mask.T[::-1].copy()


def write_pgm(path, img: np.ndarray, config_hash: str):
    """Binary greyscale PGM (P5, maxval 255) with the hash as a header comment."""
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n# config_hash={config_hash}\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def write_heatmap(stem, grid, u, config_hash: str):
    """``stem.pgm`` with the field and ``stem.mask.pgm`` with obstacle cells at 255."""
    img, mask = raster(grid, u)
    write_pgm(f"{stem}.pgm", img, config_hash)
    write_pgm(f"{stem}.mask.pgm", (mask * 255).astype(np.uint8), config_hash)


def write_front_csv(path, tracks, config_hash: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write("t,ray_y,lambda,x1_position\n")
        for track in tracks:
            for t, y, lam, p in track.rows():
                fh.write(f"{_fmt(t)},{_fmt(y)},{_fmt(lam)},{'nan' if np.isnan(p) else _fmt(p)}\n")


def write_profile_csv(path, profile, config_hash: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write("z,phi\n")
        for z, p in zip(profile.z, profile.phi):
            fh.write(f"{_fmt(z)},{_fmt(p)}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict, config_hash: str):
    body = {"config_hash": config_hash, **_jsonable(payload)}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
