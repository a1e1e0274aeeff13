"""Reading and writing model specification files (JSON or TOML).

Schema (sites are 0-based)::

    variant = "quadratic" | "perturbed_quadratic" | "lattice"
    n = <int>                       # required with precision_entries
    precision = [[...], ...]        # dense, or
    precision_entries = [[i, k, value], ...]   # sparse; (k, i) mirrored
    [[perturbations]]               # perturbed_quadratic only
    site = 0
    a = 0.1
    omega = 1.0
    [lattice]                       # lattice only
    dims = [2, 2]
    J = 0.1
    h = 1.0

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .errors import LSICertError, SpecFileError
from .model import PotentialSpec, SinePerturbation, Variant, build_lattice

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["load_spec", "parse_spec", "spec_to_dict", "dump_spec", "file_hash"]

_TOP_KEYS = {"variant", "n", "precision", "precision_entries", "perturbations", "lattice"}
_PERT_KEYS = {"site", "a", "omega"}
_LATTICE_KEYS = {"dims", "J", "h"}


def _reject_unknown(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise SpecFileError(f"unknown key(s) in {where}: {sorted(extra)}")


def _precision(d: dict) -> np.ndarray:
    if "precision" in d and "precision_entries" in d:
        raise SpecFileError("give either 'precision' or 'precision_entries', not both")
    if "precision" in d:
        M = np.asarray(d["precision"], dtype=float)
        if "n" in d and M.shape != (d["n"], d["n"]):
            raise SpecFileError(f"'n' = {d['n']} disagrees with precision shape {M.shape}")
        return M
    if "precision_entries" in d:
        if "n" not in d:
            raise SpecFileError("'precision_entries' requires 'n'")
        n = int(d["n"])
        M = np.zeros((n, n))
        for entry in d["precision_entries"]:
            if len(entry) != 3:
                raise SpecFileError(f"sparse entry must be [i, k, value], got {entry}")
            i, k, v = int(entry[0]), int(entry[1]), float(entry[2])
            if not (0 <= i < n and 0 <= k < n):
                raise SpecFileError(f"sparse entry ({i}, {k}) out of range for n={n}")
            M[i, k] = M[k, i] = v
        return M
    raise SpecFileError("missing 'precision' or 'precision_entries'")


def parse_spec(d: dict) -> PotentialSpec:
    """Build a PotentialSpec from an already-decoded mapping."""
    if not isinstance(d, dict):
        raise SpecFileError("model spec must be a mapping")
    _reject_unknown(d, _TOP_KEYS, "model spec")
    try:
        variant = Variant(d.get("variant"))
    except ValueError:
        raise SpecFileError(f"unknown variant {d.get('variant')!r}") from None

    if variant is Variant.LATTICE:
        for key in ("precision", "precision_entries", "perturbations"):
            if key in d:
                raise SpecFileError(f"'{key}' not allowed for lattice variant")
        lat = d.get("lattice")
        if not isinstance(lat, dict):
            raise SpecFileError("lattice variant needs a [lattice] block")
        _reject_unknown(lat, _LATTICE_KEYS, "lattice block")
        missing = _LATTICE_KEYS - set(lat)
        if missing:
            raise SpecFileError(f"lattice block missing {sorted(missing)}")
        try:
            spec = build_lattice(lat["dims"], float(lat["J"]), float(lat["h"]))
        except LSICertError:
            raise
        except (TypeError, ValueError) as exc:
            raise SpecFileError(f"lattice block: {exc}") from exc
        if "n" in d and d["n"] != spec.n:
            raise SpecFileError(f"'n' = {d['n']} disagrees with lattice size {spec.n}")
        return spec

    if "lattice" in d:
        raise SpecFileError("[lattice] block only allowed for lattice variant")
    M = _precision(d)
    perts = []
    if "perturbations" in d:
        if variant is not Variant.PERTURBED_QUADRATIC:
            raise SpecFileError("perturbations only allowed for perturbed_quadratic")
        for p in d["perturbations"]:
            if not isinstance(p, dict):
                raise SpecFileError("each perturbation must be a table with site, a, omega")
            _reject_unknown(p, _PERT_KEYS, "perturbation")
            if "site" not in p or "a" not in p:
                raise SpecFileError("perturbation needs 'site' and 'a'")
            perts.append(SinePerturbation(int(p["site"]), float(p["a"]), float(p.get("omega", 1.0))))
    try:
        return PotentialSpec(variant, M, tuple(perts))
    except LSICertError:
        raise
    except ValueError as exc:
        raise SpecFileError(str(exc)) from exc


def load_spec(path) -> PotentialSpec:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            d = tomllib.loads(raw.decode())
        except tomllib.TOMLDecodeError as exc:
            raise SpecFileError(f"{path}: {exc}") from exc
    else:
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SpecFileError(f"{path}: {exc}") from exc
    return parse_spec(d)


def spec_to_dict(spec: PotentialSpec) -> dict:
    if spec.variant is Variant.LATTICE and spec.lattice is not None:
        lat = spec.lattice
        return {"variant": "lattice", "lattice": {"dims": list(lat.dims), "J": lat.J, "h": lat.h}}
    out = {"variant": spec.variant.value, "n": spec.n, "precision": spec.precision.tolist()}
    if spec.perturbations:
        out["perturbations"] = [{"site": p.site, "a": p.a, "omega": p.omega} for p in spec.perturbations]
    return out


def dump_spec(spec: PotentialSpec) -> str:
    """JSON text of a spec, accepted by :func:`load_spec`."""
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n"


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
