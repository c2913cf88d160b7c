"""Trace CSV files: header row, then one row per grid node, 17 significant digits."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..observer import Trace


def trace_columns(n: int, with_state: bool) -> list[str]:
    cols = ["t"]
    if with_state:
        cols += [f"x{j}" for j in range(1, n + 1)]
    cols += [f"xhat{j}" for j in range(1, n + 1)]
    cols += [f"thetahat{i}" for i in range(1, 4 * n + 1)]
    cols += ["z", "Fnorm", "frozen"]
    return cols


def _g17(v: float) -> str:
    return "%.17g" % v


def write_csv(trace: Trace, path) -> Path:
    path = Path(path)
    n = trace.n
    with_state = trace.x is not None
    blocks = [trace.t[:, None]]
    if with_state:
        blocks.append(trace.x)
    blocks += [trace.x_hat, trace.theta_hat, trace.z[:, None], trace.F_norm[:, None]]
    numbers = np.hstack(blocks) if len(trace) else np.empty((0, 0))
    lines = [",".join(trace_columns(n, with_state))]
    for row, frozen in zip(numbers, trace.frozen):
        lines.append(",".join(map(_g17, row.tolist())) + ("," + ("1" if frozen else "0")))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace CSV {str(path)!r}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Column name -> values. ``frozen`` comes back as a bool array."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), len(header))
    out = {name: data[:, i] for i, name in enumerate(header)}
    out["frozen"] = out["frozen"].astype(bool)
    return out
