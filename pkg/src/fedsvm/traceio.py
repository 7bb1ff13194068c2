"""Trace and manifest serialization.

The CSV layout is one row per epoch per metric:
epoch, virtual_time, responder_fraction, metric_name, task_id, value.
Per-task rows carry the task id; aggregate rows (metric_mean,
dual_objective, update_norm) leave it empty. Floats are written with
repr, which round-trips exactly, so identical traces produce identical
bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from .federation import SimTrace

CSV_COLUMNS = ("epoch", "virtual_time", "responder_fraction", "metric_name", "task_id", "value")


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_rows(trace: SimTrace):
    """Yield CSV rows for a trace, in a fixed deterministic order."""
    for rec in trace.records:
        base = (str(rec.epoch), _fmt(rec.time), _fmt(rec.responder_fraction))
        for tid in sorted(rec.task_metrics):
            yield base + (trace.metric_name, str(tid), _fmt(rec.task_metrics[tid]))
        mean = rec.metric_mean()
        if mean is not None:
            yield base + ("metric_mean", "", _fmt(mean))
        yield base + ("dual_objective", "", _fmt(rec.dual_objective))
        yield base + ("update_norm", "", _fmt(rec.update_norm))


def write_trace_csv(trace: SimTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(trace_rows(trace))


def trace_summary(trace: SimTrace) -> dict:
    """JSON-ready summary of a run."""
    final = trace.final_record
    mean = final.metric_mean()
    return {
        "problem": trace.problem,
        "mode": trace.mode,
        "metric_name": trace.metric_name,
        "num_participants": trace.num_participants,
        "epochs_run": len(trace.records),
        "stopped_early": trace.stopped_early,
        "final_time": final.time,
        "final_update_norm": final.update_norm,
        "final_dual_objective": final.dual_objective,
        "final_metric_mean": mean,
        "final_task_metrics": {str(k): v for k, v in sorted(final.task_metrics.items())},
        "epoch_w_digests": [r.w_digest for r in trace.records],
    }


def write_summary_json(trace: SimTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        json.dump(trace_summary(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(
    path: str | Path, *, config_text: str, seed: int, backend: str, version: str
) -> None:
    """Record what produced a run directory: config hash, seed, code."""
    manifest = {
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seed": seed,
        "backend": backend,
        "version": version,
    }
    path = Path(path)
    with path.open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
