import csv
import json
import os
import numpy as np

from typing import Any, Dict, List, Sequence, Union
from typing_extensions import TypedDict

from shrinklab.constants import CSV_SIGNIFICANT_DIGITS
from shrinklab.auction.distributions import equal_revenue_family
from shrinklab.cogs.models.distributions import BalancedSpec, HardInstance, JointDistribution
from shrinklab.cogs.models.exceptions import SchemaError, UsageError
from shrinklab.cogs.models.mechanism import Mechanism
from shrinklab.cogs.models.reports import GapReport
from shrinklab.cogs.utils.parsers import format_significant, parse_scalar

SWEEP_COLUMNS = ("d", "epsilon", "K", "rev_shrunk", "rev_full", "ratio", "bound_formula", "limit_gap")

class MassEntry(TypedDict):
    idx: List[int]
    p: float

class LevelEntry(TypedDict):
    idx: List[int]
    h: int

class AllocationEntry(TypedDict):
    idx: List[int]
    x: float

class InstancePayload(TypedDict):
    n: int
    d: int
    epsilon: float
    z: Union[float, str]
    K: int
    grids: List[List[float]]
    pmf: List[MassEntry]
    h_table: List[LevelEntry]
    trunc_error: float

class MechanismPayload(TypedDict):
    grids: List[List[float]]
    alloc: List[AllocationEntry]
    pay: List[MassEntry]


def save_json(path: str, payload: Dict[str, Any]) -> None:
    """Writes a payload to a temporary file, then renames it over the destination."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(f"{path}.tmp", "w", encoding="utf-8") as f:
        json.dump(payload, f)
    os.rename(f"{path}.tmp", path)

def load_json(path: str) -> Dict[str, Any]:
    """Loads a JSON object from a file."""
    if not os.path.exists(path):
        raise UsageError(f"file {path} does not exist", "path")
    with open(path, encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path} is not valid JSON ({e.msg})", "file")
    if not isinstance(payload, dict):
        raise SchemaError(f"{path} does not hold a JSON object", "file")
    return payload

def _require(payload: Dict[str, Any], key: str, kind: Union[type, tuple]) -> Any:
    if key not in payload:
        raise SchemaError("required key is missing", key)
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError("value has the wrong type", key)
    return value

def _grids(payload: Dict[str, Any]) -> List[np.ndarray]:
    grids = _require(payload, "grids", list)
    try:
        return [np.array([float(v) for v in grid], dtype=float) for grid in grids]
    except (TypeError, ValueError):
        raise SchemaError("grids must be lists of numbers", "grids")

def _entries(payload: Dict[str, Any], key: str, value_key: str, shape: Sequence[int]) -> Dict[tuple, Any]:
    entries: Dict[tuple, Any] = {}
    for entry in _require(payload, key, list):
        if not isinstance(entry, dict) or "idx" not in entry or value_key not in entry:
            raise SchemaError(f"entries need 'idx' and '{value_key}'", key)
        idx = entry["idx"]
        if not isinstance(idx, list) or len(idx) != len(shape) or any(
            not isinstance(k, int) or not 0 <= k < n for k, n in zip(idx, shape)
        ):
            raise SchemaError(f"index {idx} is outside the grids", key)
        entries[tuple(idx)] = entry[value_key]
    return entries


def instance_to_payload(inst: HardInstance) -> InstancePayload:
    dist = inst.joint_n
    return InstancePayload(
        n=inst.n,
        d=inst.params.d,
        epsilon=inst.params.epsilon,
        z=float(inst.family.z),
        K=inst.params.trunc_blocks,
        grids=[[float(v) for v in grid] for grid in dist.grids],
        pmf=[MassEntry(idx=list(idx), p=mass) for idx, mass in sorted(dist.pmf.items())],
        h_table=[LevelEntry(idx=list(idx), h=h) for idx, h in sorted(inst.h_table.items())],
        trunc_error=inst.trunc_error
    )

def instance_from_payload(payload: Dict[str, Any]) -> HardInstance:
    """Rebuilds a hard instance from its stored grids, masses and h table."""
    n = _require(payload, "n", int)
    d = _require(payload, "d", int)
    K = _require(payload, "K", int)
    epsilon = float(_require(payload, "epsilon", (int, float)))
    raw_z = _require(payload, "z", (int, float, str))
    z = parse_scalar(raw_z, "z") if isinstance(raw_z, str) else float(raw_z)
    trunc_error = float(_require(payload, "trunc_error", (int, float)))
    grids = _grids(payload)
    if len(grids) != n:
        raise SchemaError(f"expected {n} grids, found {len(grids)}", "grids")

    shape = tuple(len(g) for g in grids)
    pmf = {idx: float(p) for idx, p in _entries(payload, "pmf", "p", shape).items()}
    h_table = {idx: int(h) for idx, h in _entries(payload, "h_table", "h", shape[1:-1]).items()}
    spec = BalancedSpec(epsilon, d, K)
    family = equal_revenue_family(d, z).as_float()
    if len(grids[0]) != family.m or not np.allclose(grids[0], family.t, rtol=0, atol=1e-12):
        raise SchemaError("strong-bidder grid differs from the equal-revenue values", "grids")
    if len(h_table) != spec.support_size ** (n - 2):
        raise SchemaError("h table does not cover the middle grid", "h_table")

    joint_n = JointDistribution(n, tuple(grids), pmf)
    return HardInstance(
        n=n, params=spec, family=family, joint_n=joint_n,
        joint_shrunk=joint_n.marginalize(n - 1), h_table=h_table, trunc_error=trunc_error
    )

def mechanism_to_payload(mech: Mechanism) -> MechanismPayload:
    def sparse(table: np.ndarray) -> List[tuple]:
        return [(list(int(k) for k in idx), float(table[idx])) for idx in zip(*np.nonzero(table))]
    return MechanismPayload(
        grids=[[float(v) for v in grid] for grid in mech.grids],
        alloc=[AllocationEntry(idx=idx, x=x) for idx, x in sparse(mech.alloc)],
        pay=[MassEntry(idx=idx, p=p) for idx, p in sparse(mech.pay)]
    )

def mechanism_from_payload(payload: Dict[str, Any]) -> Mechanism:
    """Rebuilds a mechanism from sparse allocation and payment entries; missing entries are zero."""
    grids = _grids(payload)
    shape = (len(grids),) + tuple(len(g) for g in grids)
    alloc = np.zeros(shape)
    pay = np.zeros(shape)
    try:
        for idx, x in _entries(payload, "alloc", "x", shape).items():
            alloc[idx] = float(x)
        for idx, p in _entries(payload, "pay", "p", shape).items():
            pay[idx] = float(p)
    except (TypeError, ValueError):
        raise SchemaError("allocation and payment values must be numbers", "alloc")
    return Mechanism(len(grids), tuple(grids), alloc, pay)

def save_instance(path: str, inst: HardInstance) -> None:
    save_json(path, dict(instance_to_payload(inst)))

def load_instance(path: str) -> HardInstance:
    return instance_from_payload(load_json(path))

def save_mechanism(path: str, mech: Mechanism) -> None:
    save_json(path, dict(mechanism_to_payload(mech)))

def load_mechanism(path: str) -> Mechanism:
    return mechanism_from_payload(load_json(path))

def sweep_rows(reports: Sequence[GapReport], digits: int = CSV_SIGNIFICANT_DIGITS) -> List[List[str]]:
    """Returns the CSV cells of a sweep, header first."""
    rows = [list(SWEEP_COLUMNS)]
    for r in reports:
        rows.append([
            str(r.d),
            format_significant(r.epsilon, digits),
            "analytic" if r.K is None else str(r.K),
            *(format_significant(v, digits) for v in (
                r.rev_shrunk, r.rev_full, r.ratio, r.bound_formula, r.limit_gap
            ))
        ])
    return rows

def write_sweep_csv(path: str, reports: Sequence[GapReport]) -> None:
    """Writes the sweep with a temporary file and rename."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(f"{path}.tmp", "w", encoding="utf-8", newline="") as f:
        csv.writer(f).writerows(sweep_rows(reports))
    os.rename(f"{path}.tmp", path)
