"""File formats: walk, site-set and domain JSON, Green-table cache, CSV and manifests."""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

from .errors import InvalidConfig

CACHE_ENV = "OCCULATTICE_CACHE_DIR"
SIG_DIGITS = 12


def _read_json(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidConfig(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise InvalidConfig(f"{path}: expected a JSON object")
    return payload


def load_walk(path):
    """``{"dimension": d, "steps": [{"offset": [..], "prob": r}, ...]}`` -> validated walk."""
    from .walk import WalkSpec, validate_walk

    payload = _read_json(path)
    try:
        d = int(payload["dimension"])
        steps = tuple(
            (tuple(int(c) for c in s["offset"]), float(s["prob"])) for s in payload["steps"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"{path}: malformed walk file ({exc})") from None
    return validate_walk(WalkSpec(d, steps))


def dump_walk(walk) -> dict:
    return {
        "dimension": walk.dimension,
        "steps": [
            {"offset": [int(c) for c in off], "prob": float(p)}
            for off, p in zip(walk.offsets, walk.probs)
        ],
    }


def load_site_set(path):
    """``{"points": [[..], ...]}`` -> :class:`SiteSet`."""
    from .spectral import SiteSet

    payload = _read_json(path)
    try:
        pts = [tuple(int(c) for c in p) for p in payload["points"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"{path}: malformed set file ({exc})") from None
    return SiteSet.of(pts)


def dump_site_set(sites) -> dict:
    return {"points": [list(p) for p in sites.points]}


def load_domain(path):
    """``{"kind": "ball", "dimension": d, "radius": r}`` or ``{"kind": "cube", "dimension": d, "side": s}``.

    Sizes may be numbers or fraction strings such as ``"1/2"``.
    """
    from .continuum import DomainSpec

    payload = _read_json(path)
    try:
        kind = payload["kind"]
        d = int(payload["dimension"])
        if kind == "ball":
            return DomainSpec.ball(_size(payload["radius"]), d)
        if kind == "cube":
            return DomainSpec.cube(_size(payload["side"]), d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"{path}: malformed domain file ({exc})") from None
    raise InvalidConfig(f"{path}: unknown domain kind {kind!r}")


def _size(v):
    return str(v) if isinstance(v, str) else v


# ---------------------------------------------------------------- Green cache

def cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def cache_path(walk, tol: float, directory=None) -> Path | None:
    directory = Path(directory) if directory is not None else cache_dir()
    if directory is None:
        return None
    return directory / f"green_{walk.walk_id[:16]}_{float(tol):.0e}.json"


def autoload_table(walk, tol: float, directory=None) -> bool:
    """Load a cached Green table into the shared registry; returns whether one was found."""
    from .green import GreenTable, register_table

    path = cache_path(walk, tol, directory)
    if path is None or not path.exists():
        return False
    register_table(GreenTable.load(walk, path))
    return True


def save_table(walk, tol: float, directory=None) -> Path | None:
    """Write the shared table for ``(walk, tol)`` to the cache directory, if configured."""
    from .green import get_table

    path = cache_path(walk, tol, directory)
    if path is None:
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    get_table(walk, tol).save(tmp)
    tmp.replace(path)
    return path


# ---------------------------------------------------------------- outputs

def fmt(value) -> str:
    """Render numbers with 12 significant digits; other values verbatim."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    try:
        return f"{float(value):.{SIG_DIGITS}g}"
    except (TypeError, ValueError):
        return str(value)


def write_csv(rows: list[dict], columns: list[str], path=None) -> None:
    """Write ``rows`` as CSV to ``path`` (stdout when ``None``)."""
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    finally:
        if path:
            handle.close()


def write_json(payload, path=None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(obj):
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
