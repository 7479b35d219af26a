"""JSON geometry/problem loaders and the CSV format shared by every command."""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .geom2d import CompositeRegion2D, Disk, GeometryError, Polygon2D
from .geom3d import Polyhedron3D
from .quadform import QuadFormProblem

TAIL_COLUMNS = ("u", "p_hat", "ci_half_width", "n", "step", "seed")
COMPARE_COLUMNS = ("u", "p_ec", "p_record", "p_direct")


def _read(source):
    if isinstance(source, dict):
        return source
    text = Path(source).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{source}: invalid JSON ({exc})") from None


def region_from_json(obj):
    """Polygon2D, CompositeRegion2D or Polyhedron3D depending on the keys present."""
    if "polygon" in obj:
        return Polygon2D.ccw(obj["polygon"])
    if "composite" in obj:
        comp = obj["composite"]
        try:
            disks = tuple(Disk(tuple(d["c"]), d["r"]) for d in comp.get("disks", ()))
            return CompositeRegion2D(Polygon2D.ccw(comp["outer"]), disks)
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"malformed composite geometry: {exc}") from None
    if "vertices" in obj and "faces" in obj:
        return Polyhedron3D(np.asarray(obj["vertices"], dtype=float), obj["faces"])
    raise GeometryError("geometry JSON needs a 'polygon', 'composite' or 'vertices'/'faces' entry")


def load_region(source):
    return region_from_json(_read(source))


def region_to_json(region):
    if isinstance(region, Polygon2D):
        return {"polygon": region.vertices.tolist()}
    if isinstance(region, CompositeRegion2D):
        return {"composite": {"outer": region.outer.vertices.tolist(),
                              "disks": [{"c": list(d.center), "r": d.radius} for d in region.disks]}}
    if isinstance(region, Polyhedron3D):
        return {"vertices": region.vertices.tolist(), "faces": [list(f) for f in region.faces]}
    raise TypeError(f"cannot serialize {type(region).__name__}")


def load_problem(source) -> QuadFormProblem:
    return QuadFormProblem.from_json(_read(source))


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, header has {len(columns)}")
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows):
    text = format_csv(columns, rows)
    Path(path).write_bytes(text.encode("utf-8"))
    return text


def _parse(x):
    for conv in (int, float):
        try:
            return conv(x)
        except ValueError:
            pass
    return {"true": True, "false": False}.get(x, x)


def parse_csv(text):
    """(header, rows) with numeric cells converted to int or float."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    rows = [tuple(_parse(c) for c in r) for r in reader if r]
    return header, rows


def read_csv(path):
    return parse_csv(Path(path).read_text(encoding="utf-8"))
