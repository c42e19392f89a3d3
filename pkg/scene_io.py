"""
Scene files: JSON input describing a configuration for one of the pipelines.

A scene is {"kind": ..., "d": ..., "data": ...} plus optional "triples"
(rigidity) and "incidences" (curves). Complex numbers are [re, im] pairs and
all indices in files are one-based; in memory they are zero-based.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from blockmat import BlockMatrix
from errors import BlockRankError, OutputError, SceneError
from incidence import CurveSet, IncidenceRecord, LineSet, validate_incidence
from rigidity import PointList, TripleMultiset
from subspace_sg import SubspaceArrangement

KINDS = ("points", "subspaces", "lines", "curves", "matrix")


@dataclass
class Scene:
    kind: str
    payload: Any
    triples: Optional[TripleMultiset] = None
    incidences: Optional[List[IncidenceRecord]] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        if self.kind == "matrix":
            return self.payload.c
        return self.payload.d


# ---------------------------------------------------------------------------
# Complex arrays
# ---------------------------------------------------------------------------

def encode_complex(z) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_array(arr: np.ndarray) -> Any:
    arr = np.asarray(arr)
    if arr.ndim == 0:
        return encode_complex(arr.item())
    return [encode_array(a) for a in arr]


def decode_complex(value: Any, field_name: str) -> complex:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
        raise SceneError("complex numbers must be written as [re, im]", field=field_name)
    return complex(value[0], value[1])


def decode_array(value: Any, depth: int, field_name: str) -> np.ndarray:
    """Decode `depth` levels of nested lists ending in [re, im] pairs."""
    if depth == 0:
        return np.asarray(decode_complex(value, field_name))
    if not isinstance(value, list) or not value:
        raise SceneError("expected a nonempty list", field=field_name)
    parts = [decode_array(v, depth - 1, f"{field_name}[{i}]") for i, v in enumerate(value)]
    shapes = {p.shape for p in parts}
    if len(shapes) != 1:
        raise SceneError("entries have inconsistent lengths", field=field_name)
    return np.stack(parts)


def block_matrix_to_dict(A: BlockMatrix) -> Dict[str, Any]:
    return {"m": A.m, "n": A.n, "r": A.r, "c": A.c, "blocks": encode_array(A.blocks)}


def block_matrix_from_dict(doc: Dict[str, Any], field_name: str = "data") -> BlockMatrix:
    if not isinstance(doc, dict):
        raise SceneError("matrix data must be an object with m, n, r, c and blocks", field=field_name)
    for key in ("m", "n", "r", "c", "blocks"):
        if key not in doc:
            raise SceneError(f"missing {key!r}", field=field_name)
    blocks = decode_array(doc["blocks"], 4, f"{field_name}.blocks")
    expected = tuple(doc[key] for key in ("m", "n", "r", "c"))
    if blocks.shape != expected:
        raise SceneError(f"blocks have shape {blocks.shape}, declared {expected}", field=field_name)
    return BlockMatrix(blocks)


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------

def _check_dimension(obj: Dict[str, Any], d: int) -> None:
    if "d" in obj and obj["d"] != d:
        raise SceneError(f"declared d={obj['d']} but data has dimension {d}", field="d")


def _parse_triples(value: Any, n: int) -> TripleMultiset:
    if not isinstance(value, list):
        raise SceneError("triples must be a list", field="triples")
    out = []
    for pos, tri in enumerate(value):
        name = f"triples[{pos}]"
        if (not isinstance(tri, list) or len(tri) != 3
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in tri)):
            raise SceneError("a triple is three integer indices", field=name)
        if any(x < 1 or x > n for x in tri) or len(set(tri)) != 3:
            raise SceneError(f"indices must be distinct and lie in 1..{n}", field=name)
        out.append(tuple(x - 1 for x in tri))
    return TripleMultiset(tuple(out))


def _parse_incidences(value: Any, curves: CurveSet) -> List[IncidenceRecord]:
    if not isinstance(value, list):
        raise SceneError("incidences must be a list", field="incidences")
    out = []
    for pos, item in enumerate(value):
        name = f"incidences[{pos}]"
        if not isinstance(item, dict) or not {"i", "j", "t", "t_prime"} <= set(item):
            raise SceneError("an incidence is {i, j, t, t_prime}", field=name)
        for key in ("i", "j"):
            x = item[key]
            if not isinstance(x, int) or isinstance(x, bool):
                raise SceneError("incidence index must be an integer", field=f"{name}.{key}")
        rec = IncidenceRecord(item["i"] - 1, item["j"] - 1,
                              decode_complex(item["t"], f"{name}.t"),
                              decode_complex(item["t_prime"], f"{name}.t_prime"))
        try:
            out.append(validate_incidence(curves, rec))
        except BlockRankError as e:
            raise SceneError(str(e), field=name)
    return out


def parse_scene(obj: Any) -> Scene:
    """Build a Scene from decoded JSON, enforcing each payload's invariants."""
    if not isinstance(obj, dict):
        raise SceneError("a scene must be a JSON object")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SceneError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}", field="kind")
    if "data" not in obj:
        raise SceneError("missing data", field="data")
    data = obj["data"]
    try:
        if kind == "points":
            payload = PointList(decode_array(data, 2, "data"))
        elif kind == "subspaces":
            payload = SubspaceArrangement(decode_array(data, 3, "data"))
        elif kind == "lines":
            if not isinstance(data, list) or not data:
                raise SceneError("lines must be a nonempty list", field="data")
            for pos, item in enumerate(data):
                if not isinstance(item, dict) or not {"point", "direction"} <= set(item):
                    raise SceneError("a line is {point, direction}", field=f"data[{pos}]")
            payload = LineSet(
                np.stack([decode_array(item["point"], 1, f"data[{p}].point") for p, item in enumerate(data)]),
                np.stack([decode_array(item["direction"], 1, f"data[{p}].direction") for p, item in enumerate(data)]),
            )
        elif kind == "curves":
            payload = CurveSet(decode_array(data, 3, "data"))
        else:
            payload = block_matrix_from_dict(data)
    except SceneError:
        raise
    except (BlockRankError, ValueError) as e:
        raise SceneError(str(e), field="data")

    scene = Scene(kind, payload, meta={k: v for k, v in obj.items()
                                       if k not in ("kind", "d", "data", "triples", "incidences")})
    if kind != "matrix":
        _check_dimension(obj, payload.d)
    if "triples" in obj:
        if kind != "points":
            raise SceneError("triples only apply to point scenes", field="triples")
        scene.triples = _parse_triples(obj["triples"], payload.n)
    if "incidences" in obj:
        if kind != "curves":
            raise SceneError("incidences only apply to curve scenes", field="incidences")
        scene.incidences = _parse_incidences(obj["incidences"], payload)
    return scene


def scene_to_dict(scene: Scene) -> Dict[str, Any]:
    p = scene.payload
    if scene.kind == "points":
        data = encode_array(p.points)
    elif scene.kind == "subspaces":
        data = encode_array(p.bases)
    elif scene.kind == "lines":
        data = [{"point": encode_array(a), "direction": encode_array(u)}
                for a, u in zip(p.points, p.directions)]
    elif scene.kind == "curves":
        data = encode_array(p.coeffs)
    else:
        data = block_matrix_to_dict(p)
    doc: Dict[str, Any] = {"kind": scene.kind, "d": scene.d, "data": data}
    if scene.triples is not None:
        doc["triples"] = [[x + 1 for x in tri] for tri in scene.triples]
    if scene.incidences is not None:
        doc["incidences"] = [{"i": rec.i + 1, "j": rec.j + 1, "t": encode_complex(rec.t),
                              "t_prime": encode_complex(rec.t_prime)} for rec in scene.incidences]
    doc.update(scene.meta)
    return doc


class SceneFiles:
    """Reads and writes scene files relative to a base directory."""

    def __init__(self, base_directory: Optional[str] = None):
        self.base_directory = base_directory or os.getcwd()

    def _resolve_path(self, file_path: str) -> str:
        if os.path.isabs(file_path):
            return file_path
        return os.path.join(self.base_directory, file_path)

    def load(self, file_path: str) -> Scene:
        resolved = self._resolve_path(file_path)
        try:
            with open(resolved, "r", encoding="utf-8") as f:
                obj = json.load(f)
        except FileNotFoundError:
            raise SceneError(f"scene file not found: {file_path}")
        except json.JSONDecodeError as e:
            raise SceneError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno)
        except OSError as e:
            raise SceneError(f"cannot read scene file {file_path}: {e.strerror}")
        return parse_scene(obj)

    def save(self, scene: Scene, file_path: str) -> str:
        resolved = self._resolve_path(file_path)
        directory = os.path.dirname(resolved)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(resolved, "w", encoding="utf-8") as f:
                json.dump(scene_to_dict(scene), f, indent=2)
                f.write("\n")
        except OSError as e:
            raise OutputError(f"cannot write scene file {file_path}: {e.strerror}")
        return resolved


def load_scene(path: str) -> Scene:
    return SceneFiles().load(path)


def save_scene(scene: Scene, path: str) -> str:
    return SceneFiles().save(scene, path)
