import json

import numpy as np
import pytest

from lsicert.errors import NotPositiveDefinite, SpecFileError
from lsicert.model import Variant
from lsicert.specfile import dump_spec, file_hash, load_spec, parse_spec


def test_dense_toml(tmp_path):
    f = tmp_path / "m.toml"
    f.write_text('variant = "quadratic"\nn = 2\nprecision = [[1.0, 0.2], [0.2, 1.0]]\n')
    spec = load_spec(f)
    assert spec.variant is Variant.QUADRATIC
    np.testing.assert_array_equal(spec.precision, [[1.0, 0.2], [0.2, 1.0]])


def test_sparse_json(tmp_path):
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"variant": "quadratic", "n": 3, "precision_entries": [[0, 0, 1], [1, 1, 1], [2, 2, 2], [0, 2, 0.3]]}))
    spec = load_spec(f)
    assert spec.precision[2, 0] == 0.3 and spec.precision[0, 2] == 0.3


def test_perturbed_toml(tmp_path):
    f = tmp_path / "p.toml"
    f.write_text(
        'variant = "perturbed_quadratic"\nprecision = [[1.0, 0.1], [0.1, 1.0]]\n'
        "[[perturbations]]\nsite = 0\na = 0.1\nomega = 2.0\n"
        "[[perturbations]]\nsite = 1\na = -0.05\n"
    )
    spec = load_spec(f)
    assert len(spec.perturbations) == 2
    assert spec.perturbations[1].omega == 1.0


def test_lattice_block():
    spec = parse_spec({"variant": "lattice", "lattice": {"dims": [2, 2], "J": 0.1, "h": 1.0}})
    assert spec.n == 4 and spec.variant is Variant.LATTICE


@pytest.mark.parametrize(
    "d",
    [
        {"variant": "quadratic", "precision": [[1.0]], "colour": "red"},
        {"variant": "cubic", "precision": [[1.0]]},
        {"variant": "quadratic"},
        {"variant": "quadratic", "precision": [[1.0]], "precision_entries": [[0, 0, 1.0]]},
        {"variant": "quadratic", "n": 2, "precision": [[1.0]]},
        {"variant": "quadratic", "precision": [[1.0]], "perturbations": [{"site": 0, "a": 0.1}]},
        {"variant": "perturbed_quadratic", "precision": [[1.0]], "perturbations": [{"site": 0, "a": 0.1, "phase": 1}]},
        {"variant": "lattice", "lattice": {"dims": [2], "J": 0.1}},
        {"variant": "lattice", "lattice": {"dims": [2], "J": 0.1, "h": 1.0, "k": 3}},
        {"variant": "lattice", "lattice": {"dims": [0], "J": 0.1, "h": 1.0}},
        {"variant": "quadratic", "precision": [[1.0]], "lattice": {"dims": [1], "J": 0, "h": 1}},
        {"variant": "quadratic", "n": 2, "precision_entries": [[0, 5, 1.0]]},
    ],
)
def test_rejects_bad_specs(d):
    with pytest.raises(SpecFileError):
        parse_spec(d)


def test_indefinite_reports_its_own_error():
    with pytest.raises(NotPositiveDefinite):
        parse_spec({"variant": "quadratic", "precision": [[1.0, 2.0], [2.0, 1.0]]})


def test_bad_toml(tmp_path):
    f = tmp_path / "m.toml"
    f.write_text("variant = \n")
    with pytest.raises(SpecFileError):
        load_spec(f)


def test_roundtrip_and_hash(tmp_path):
    spec = parse_spec({"variant": "perturbed_quadratic", "precision": [[1.0, 0.1], [0.1, 2.0]], "perturbations": [{"site": 1, "a": 0.2, "omega": 3.0}]})
    f = tmp_path / "m.json"
    f.write_text(dump_spec(spec))
    back = load_spec(f)
    np.testing.assert_array_equal(back.precision, spec.precision)
    assert back.perturbations == spec.perturbations
    g = tmp_path / "copy.json"
    g.write_text(f.read_text())
    assert file_hash(f) == file_hash(g)
    lat = parse_spec({"variant": "lattice", "lattice": {"dims": [3], "J": 0.2, "h": 1.0}})
    assert json.loads(dump_spec(lat)) == {"variant": "lattice", "lattice": {"dims": [3], "J": 0.2, "h": 1.0}}
