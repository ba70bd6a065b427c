"""Delimited/JSON report writing.

Numeric CSV cells use 17 significant digits so every float round-trips
exactly; files are written atomically (temp file in the target directory,
then rename) so a crashed run never leaves a half-written report.
"""

from __future__ import annotations

import json
import os
import tempfile

TRACE_HEADER = "step,task_loss,spec_loss,joint_loss,grad_norm_pre,grad_norm_post,dirichlet_energy"
SWEEP_HEADER = "axis_value,variant,seed,final_task_loss,steps_to_threshold"
DENOISE_HEADER = "seed,noise_sd,mse_unfiltered,mse_filtered"

NOT_REACHED = "not reached"


def fmt_cell(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean has no CSV cell form")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_text_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(fmt_cell(cell) for cell in row) for row in rows)
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2) + "\n")
