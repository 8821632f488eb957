"""Binary field dumps, flow-map dumps, and checkpoint sidecars.

Field dump layout: one UTF-8 JSON header line terminated by '\n' with keys
{"n", "kind", "time", "epsilon"}, then n^2 little-endian float64 values,
row-major with the x index outer and the y index inner. Round-trips are
bit-exact.

FlowMap dump layout: JSON header {"m", "time"} + 2*m^2 little-endian
doubles, all x positions (row-major) followed by all y positions.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .spectral import ScalarField, TorusGrid

__all__ = [
    "dump_field",
    "load_field",
    "dump_flow",
    "load_flow",
    "write_checkpoint",
    "read_checkpoint",
]


def dump_field(path, f: ScalarField, kind: str, time: float, epsilon: float | None) -> None:
    header = {
        "n": f.grid.n,
        "kind": kind,
        "time": float(time),
        "epsilon": None if epsilon is None else float(epsilon),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> tuple[ScalarField, dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        n = int(header["n"])
        raw = fh.read(8 * n * n)
        if len(raw) != 8 * n * n:
            raise IOError(f"{path}: truncated field payload ({len(raw)} bytes for n={n})")
        extra = fh.read(1)
        if extra:
            raise IOError(f"{path}: trailing bytes after field payload")
    values = np.frombuffer(raw, dtype="<f8").reshape(n, n)
    return ScalarField(TorusGrid(n), values), header


def dump_flow(path, positions_x: np.ndarray, positions_y: np.ndarray, time: float) -> None:
    m = positions_x.shape[0]
    if positions_x.shape != (m, m) or positions_y.shape != (m, m):
        raise ValueError("flow positions must be two (m, m) arrays")
    header = {"m": m, "time": float(time)}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(positions_x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(positions_y, dtype="<f8").tobytes())


def load_flow(path) -> tuple[np.ndarray, np.ndarray, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        m = int(header["m"])
        raw = fh.read(2 * 8 * m * m)
        if len(raw) != 2 * 8 * m * m:
            raise IOError(f"{path}: truncated flow payload")
    flat = np.frombuffer(raw, dtype="<f8")
    x = flat[: m * m].reshape(m, m)
    y = flat[m * m :].reshape(m, m)
    return x, y, header


def write_checkpoint(dir_path, rho: ScalarField, potential: ScalarField, *, time: float,
                     model: str, eps: float, step: int, rho_kind: str = "rho",
                     potential_kind: str = "psi_sg") -> dict:
    """Write rho + potential dumps and a JSON sidecar; returns the file map."""
    os.makedirs(dir_path, exist_ok=True)
    rho_path = os.path.join(dir_path, "rho.field")
    pot_path = os.path.join(dir_path, "potential.field")
    dump_field(rho_path, rho, rho_kind, time, eps)
    dump_field(pot_path, potential, potential_kind, time, eps)
    sidecar = {"time": float(time), "model": model, "eps": float(eps), "step": int(step)}
    sidecar_path = os.path.join(dir_path, "checkpoint.json")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")
    return {"rho": rho_path, "potential": pot_path, "meta": sidecar_path}


def read_checkpoint(dir_path) -> dict:
    rho, _ = load_field(os.path.join(dir_path, "rho.field"))
    pot, _ = load_field(os.path.join(dir_path, "potential.field"))
    with open(os.path.join(dir_path, "checkpoint.json"), encoding="utf-8") as fh:
        sidecar = json.load(fh)
    return {"rho": rho, "potential": pot, "meta": sidecar}
