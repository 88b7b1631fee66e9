"""Reading problem files and writing reports.

Problem files are UTF-8 JSON. A space file looks like

    {"dim": 4, "field": "real", "norm": {"p": 2},
     "subspaces": {"M": [[1, 0, 0, 0], [0, 1, 0, 0]], ...}}

where each subspace is a list of columns. Complex scalars are written as
[re, im] pairs.
"""
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .config import DEFAULT_RANK_TOL
from .errors import InputError, ShapeError
from .normed import NormedSpace, Subspace
from .verdict import _plain

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def ensure_dir(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)


def read_json(path: PathLike) -> dict:
    p = Path(path)
    try:
        with p.open(encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {p}")
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise InputError(f"{p} is not valid UTF-8 JSON: {e}")
    if not isinstance(data, dict):
        raise InputError(f"{p}: top-level JSON value must be an object")
    return data


def decode_array(data, field: str = "real", depth: int = 2, name: str = "array") -> np.ndarray:
    """Nested lists to an array of `depth` axes; [re, im] pairs when complex."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{name} is not a numeric array")
    if field == "complex" and arr.ndim == depth + 1 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != depth:
        raise ShapeError(f"{name} must have {depth} axes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def encode_array(arr) -> list:
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return np.stack([arr.real, arr.imag], axis=-1).tolist()
    return arr.astype(float).tolist()


@dataclass
class SpaceFile:
    """A parsed space file: the ambient space, raw columns and subspaces by name."""

    space: NormedSpace
    columns: Dict[str, np.ndarray] = field(default_factory=dict)
    subspaces: Dict[str, Subspace] = field(default_factory=dict)
    extra: Dict[str, object] = field(default_factory=dict)

    def get(self, name: str) -> Subspace:
        try:
            return self.subspaces[name]
        except KeyError:
            known = ", ".join(sorted(self.subspaces)) or "none"
            raise InputError(f"unknown subspace {name!r} (known: {known})")

    def pick(self, names: Union[str, Sequence[str]]) -> List[Subspace]:
        if isinstance(names, str):
            names = [n.strip() for n in names.split(",") if n.strip()]
        return [self.get(n) for n in names]


def parse_space(data: dict, rank_tol: float = DEFAULT_RANK_TOL) -> SpaceFile:
    if "dim" not in data:
        raise InputError("space description has no 'dim'")
    norm = data.get("norm") or {}
    if not isinstance(norm, dict):
        raise InputError("'norm' must be an object")
    try:
        dim = int(data["dim"])
    except (TypeError, ValueError):
        raise InputError(f"dim must be an integer, got {data['dim']!r}")
    space = NormedSpace(dim, data.get("field", "real"), norm.get("p", 2), norm.get("weights"))

    out = SpaceFile(space=space)
    raw = data.get("subspaces") or {}
    if not isinstance(raw, dict):
        raise InputError("'subspaces' must map names to column lists")
    for name, cols in raw.items():
        if cols is None or len(cols) == 0:
            C = np.zeros((dim, 0), dtype=space.dtype)
        else:
            C = decode_array(cols, space.field, depth=2, name=f"subspace {name}").T
        C = space.coerce(C, f"subspace {name}")
        out.columns[name] = C
        out.subspaces[name] = Subspace.span(space, C, rank_tol)
        logger.debug("subspace %s: %d columns, dim %d", name, C.shape[1], out.subspaces[name].dim)
    out.extra = {k: v for k, v in data.items() if k not in ("dim", "field", "norm", "subspaces")}
    return out


def load_space(path: PathLike, rank_tol: float = DEFAULT_RANK_TOL) -> SpaceFile:
    return parse_space(read_json(path), rank_tol)


def space_to_json(space: NormedSpace, subspaces: Dict[str, object]) -> dict:
    """Inverse of parse_space; values may be Subspaces or column arrays."""
    out = space.describe()
    out["subspaces"] = {}
    for name, sub in subspaces.items():
        cols = sub.basis if isinstance(sub, Subspace) else np.asarray(sub)
        out["subspaces"][name] = encode_array(np.asarray(cols).T)
    return out


def parse_form(data: dict, sf: SpaceFile):
    """{"subspace": NAME, "gram": [[...]]}, Gram taken in NAME's file columns."""
    from .morse import SymmetricPair

    if "subspace" not in data or "gram" not in data:
        raise InputError("form files need 'subspace' and 'gram'")
    name = data["subspace"]
    sf.get(name)
    cols = sf.columns[name]
    gram = decode_array(data["gram"], sf.space.field, depth=2, name=f"gram of {name}")
    return SymmetricPair.from_raw(sf.space, cols, gram, sf.get(name).rank_tol)


def load_form(path: PathLike, sf: SpaceFile):
    return parse_form(read_json(path), sf)


def parse_operator(data, space: NormedSpace) -> np.ndarray:
    """A dim×dim matrix, given bare or under the key 'matrix'."""
    if isinstance(data, dict):
        if "matrix" not in data:
            raise InputError("operator files need a 'matrix'")
        data = data["matrix"]
    A = decode_array(data, space.field, depth=2, name="operator")
    if A.shape != (space.dim, space.dim):
        raise ShapeError(f"operator of shape {A.shape} on a space of dimension {space.dim}")
    return A.astype(space.dtype)


def load_operator(path: PathLike, space: NormedSpace) -> np.ndarray:
    return parse_operator(read_json(path), space)


def save_report(report: dict, out: PathLike) -> Path:
    """Write a JSON report (sorted keys, indent 2) with a generated_at stamp."""
    out = Path(out)
    ensure_dir(out)
    payload = dict(_plain(report))
    payload["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with out.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    return out


def save_instance(instance: dict, out: PathLike) -> Path:
    """Generated instances carry no timestamp, so equal seeds give equal files."""
    out = Path(out)
    ensure_dir(out)
    with out.open("w", encoding="utf-8") as fh:
        json.dump(_plain(instance), fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    return out


def save_trace_csv(rows: Iterable[dict], out: PathLike) -> Path:
    """One CSV row per evaluated grid point. Overwrites."""
    out = Path(out)
    ensure_dir(out)
    df = pd.DataFrame(list(rows))
    if "t" in df.columns:
        df = df.sort_values("t", kind="stable")
    df.to_csv(out, index=False)
    return out


def append_verdict_row(row: dict, out: PathLike) -> Path:
    """Append a single summary row to the ledger CSV (creates it if missing)."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([row])
    header = not out.exists()
    df.to_csv(out, mode="a", header=header, index=False)
    return out


def read_ledger(path: PathLike) -> Optional[pd.DataFrame]:
    p = Path(path)
    if not p.exists():
        return None
    return pd.read_csv(p)
