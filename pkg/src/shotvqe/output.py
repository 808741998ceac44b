"""Persistence for scenario results: CSV with a JSON config header, JSONL logs.

Layout contract: line 1 is `# config: {...}` (scenario name, seed, config
hash, config snapshot -- everything needed to reproduce the file), line 2 is
`# meta: {...}` holding the volatile timestamp, line 3 the column header.
Re-running with the same (scenario, config, seed) reproduces every line
except the meta line byte-for-byte.
"""
from __future__ import annotations

import json
import time
from pathlib import Path


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[dict],
              config_snapshot: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config_snapshot, sort_keys=True, default=list) + "\n")
        fh.write("# meta: " + json.dumps({"written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_value(row.get(col, "")) for col in header) + "\n")
    return path


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=float) + "\n")
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of write_csv: (config snapshot, rows as string dicts)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3 or not lines[0].startswith("# config: "):
        raise ValueError(f"{path} is not a harness CSV (missing config header)")
    snapshot = json.loads(lines[0][len("# config: "):])
    header = lines[2].split(",")
    rows = []
    for line in lines[3:]:
        if not line:
            continue
        rows.append(dict(zip(header, line.split(","))))
    return snapshot, rows


def run_steps_jsonl(record, grid_info: dict, log_every: int) -> list[dict]:
    """Thinned per-step log records for one RunRecord."""
    out = []
    for r, trace in enumerate(record.traces):
        for step in range(0, len(trace.energy), log_every):
            out.append({
                **grid_info,
                "restart": r,
                "step": step,
                "energy": float(trace.energy[step]),
                "fidelity": float(trace.fidelity[step]),
                "grad_norm": float(trace.grad_norm[step]),
                "var_f": float(trace.var_f_mean[step]),
                "norm": float(trace.norm[step]),
            })
    return out


def eigenvector_cache_write(path: Path, n_sites: int, states) -> Path:
    """Binary eigenvector cache: header magic 'EDVC', uint32 N, uint32 count,
    then count * 2^N little-endian (re, im) float64 pairs."""
    import numpy as np

    states = np.atleast_2d(np.asarray(states, dtype=np.complex128))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(b"EDVC")
        fh.write(np.asarray([n_sites, states.shape[0]], dtype="<u4").tobytes())
        inter = np.empty((states.shape[0], states.shape[1] * 2), dtype="<f8")
        inter[:, 0::2] = states.real
        inter[:, 1::2] = states.imag
        fh.write(inter.tobytes())
    return path


def eigenvector_cache_read(path) -> tuple[int, "np.ndarray"]:
    import numpy as np

    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"EDVC":
            raise ValueError(f"{path} is not an eigenvector cache")
        n_sites, count = np.frombuffer(fh.read(8), dtype="<u4")
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(count, -1)
    states = data[:, 0::2] + 1j * data[:, 1::2]
    if states.shape[1] != 1 << int(n_sites):
        raise ValueError("eigenvector cache payload does not match header")
    return int(n_sites), states
