import json

import numpy as np
import pytest

from errors import SceneError
from generators import gen_cyclic_design, gen_grid, gen_hesse, gen_pencil_lines
from incidence import CurveSet, IncidenceRecord
from scene_io import (
    Scene,
    SceneFiles,
    decode_complex,
    load_scene,
    parse_scene,
    save_scene,
    scene_to_dict,
)


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_decode_complex():
    assert decode_complex([1, -2.5], "x") == complex(1, -2.5)
    with pytest.raises(SceneError) as info:
        decode_complex(3.0, "data[0][1]")
    assert info.value.field == "data[0][1]"
    assert "data[0][1]" in str(info.value)


def test_bare_number_names_the_field():
    doc = {"kind": "points", "d": 2, "data": [[[1, 0], 3.0]]}
    with pytest.raises(SceneError) as info:
        parse_scene(doc)
    assert info.value.field == "data[0][1]"


def test_points_with_one_based_triples(tmp_path):
    V, T = gen_grid(3)
    path = save_scene(Scene("points", V, triples=T), str(tmp_path / "grid.json"))
    raw = json.loads(open(path).read())
    assert min(min(tri) for tri in raw["triples"]) == 1
    scene = load_scene(path)
    assert scene.triples == T
    np.testing.assert_array_equal(scene.payload.points, V.points)


def test_subspaces_round_trip(tmp_path):
    W = gen_hesse()
    scene = SceneFiles(str(tmp_path)).load(SceneFiles(str(tmp_path)).save(Scene("subspaces", W), "h.json"))
    np.testing.assert_array_equal(scene.payload.bases, W.bases)
    assert scene.d == 3


def test_lines_and_matrix_round_trip(tmp_path):
    L = gen_pencil_lines(4, 3)
    lines = load_scene(save_scene(Scene("lines", L), str(tmp_path / "l.json")))
    np.testing.assert_array_equal(lines.payload.directions, L.directions)
    A = gen_cyclic_design(4, 2, 1, 2)
    matrix = load_scene(save_scene(Scene("matrix", A), str(tmp_path / "m.json")))
    np.testing.assert_array_equal(matrix.payload.blocks, A.blocks)
    assert scene_to_dict(matrix)["data"]["m"] == 4


def test_curve_incidences_are_validated():
    C = CurveSet(np.array([[[0, 0], [1, 0]], [[2, -1], [0, 1]]], dtype=complex))
    doc = scene_to_dict(Scene("curves", C, incidences=[IncidenceRecord(0, 1, 2.0, 1.0)]))
    assert doc["incidences"][0]["i"] == 1
    scene = parse_scene(doc)
    assert scene.incidences[0].i == 0
    doc["incidences"][0]["t_prime"] = [5, 0]
    with pytest.raises(SceneError) as info:
        parse_scene(doc)
    assert info.value.field == "incidences[0]"


@pytest.mark.parametrize("key,value", [("i", "x"), ("j", 1.5), ("i", None), ("j", True)])
def test_curve_incidence_indices_must_be_integers(key, value):
    C = CurveSet(np.array([[[0, 0], [1, 0]], [[2, -1], [0, 1]]], dtype=complex))
    doc = scene_to_dict(Scene("curves", C, incidences=[IncidenceRecord(0, 1, 2.0, 1.0)]))
    doc["incidences"][0][key] = value
    with pytest.raises(SceneError) as info:
        parse_scene(doc)
    assert info.value.field == f"incidences[0].{key}"


def test_constant_curve_is_rejected():
    moving = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    constant = [[[1, 0], [2, 0]], [[0, 0], [0, 0]]]
    doc = {"kind": "curves", "d": 2, "data": [moving, constant]}
    with pytest.raises(SceneError):
        parse_scene(doc)


@pytest.mark.parametrize("doc,field", [
    ({"kind": "nope", "data": []}, "kind"),
    ({"kind": "points"}, "data"),
    ({"kind": "points", "d": 3, "data": [[[1, 0], [0, 0]]]}, "d"),
    ({"kind": "points", "data": [[[1, 0], [0, 0]], [[1, 0]]]}, "data"),
    ({"kind": "points", "data": [[[0, 0], [0, 0]], [[1, 0], [0, 0]], [[2, 0], [0, 0]]],
      "triples": [[1, 2, 4]]}, "triples[0]"),
    ({"kind": "lines", "data": [{"point": [[0, 0]]}]}, "data[0]"),
    ({"kind": "subspaces", "data": [[[[0, 0], [0, 0]]]]}, "data"),
    ({"kind": "matrix", "data": {"m": 1, "n": 1, "r": 1, "c": 1}}, "data"),
])
def test_invalid_scenes(doc, field):
    with pytest.raises(SceneError) as info:
        parse_scene(doc)
    assert info.value.field == field


def test_triples_only_on_points():
    doc = scene_to_dict(Scene("subspaces", gen_hesse()))
    doc["triples"] = [[1, 2, 3]]
    with pytest.raises(SceneError) as info:
        parse_scene(doc)
    assert info.value.field == "triples"


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "points",\n  "data": [,]}')
    with pytest.raises(SceneError) as info:
        load_scene(str(path))
    assert info.value.line == 2
    assert info.value.column is not None


def test_missing_file(tmp_path):
    with pytest.raises(SceneError):
        load_scene(str(tmp_path / "missing.json"))


def test_meta_is_preserved(tmp_path):
    doc = scene_to_dict(Scene("subspaces", gen_hesse()))
    doc["source"] = "hand-built"
    scene = load_scene(write(tmp_path / "meta.json", doc))
    assert scene.meta == {"source": "hand-built"}
    assert scene_to_dict(scene)["source"] == "hand-built"
