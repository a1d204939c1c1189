"""Converter from an upstream benchmark dump to the task manifest.

Expected upstream layout: a directory containing one or more ``*.jsonl``
question files plus the referenced images. Each question line carries an
id, a sub-task name, the question text, a choices list, an optional
answer like "(A)", and image path fields ``image_1``..``image_4``.
Sub-tasks outside the six supported kinds are skipped and counted.
"""

from __future__ import annotations

import json
import os
import re
import string
from pathlib import Path

from .errors import ExportValidationFailure

KIND_BY_SUBTASK = {
    "jigsaw": "jigsaw",
    "relativedepth": "relative_depth",
    "multiviewreasoning": "multi_view",
    "multiview": "multi_view",
    "visualcorrespondence": "visual_correspondence",
    "semanticcorrespondence": "semantic_correspondence",
    "objectlocalization": "object_localization",
}

CHOICE_PREFIX = re.compile(r"^\(([A-Z])\)\s*")


def _normalize_subtask(name: str) -> str | None:
    key = re.sub(r"[^a-z]", "", str(name).lower())
    return KIND_BY_SUBTASK.get(key)


def _parse_answer(raw) -> str | None:
    if raw is None:
        return None
    text = str(raw).strip()
    match = re.fullmatch(r"\(([A-Z])\)|([A-Z])", text)
    if not match:
        return None
    return match.group(1) or match.group(2)


def _options_from_choices(choices) -> dict[str, str]:
    options = {}
    for i, choice in enumerate(choices):
        label = string.ascii_uppercase[i]
        text = str(choice)
        stripped = CHOICE_PREFIX.sub("", text)
        options[label] = stripped
    return options


def convert_blink(dataset_dir, manifest_out) -> dict:
    """Write a task manifest from an upstream dump; returns conversion stats."""
    dataset_dir = Path(dataset_dir)
    manifest_out = Path(manifest_out)
    question_files = sorted(dataset_dir.glob("*.jsonl"))
    if not question_files:
        raise ExportValidationFailure(f"no *.jsonl question files under {dataset_dir}")

    manifest_dir = manifest_out.parent.resolve()
    converted, skipped = 0, 0
    lines = []
    for qfile in question_files:
        for line_no, raw in enumerate(qfile.read_text(encoding="utf-8").splitlines(), 1):
            if not raw.strip():
                continue
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ExportValidationFailure(f"{qfile}:{line_no}: bad JSON: {exc.msg}")
            kind = _normalize_subtask(doc.get("sub_task") or doc.get("task") or "")
            if kind is None:
                skipped += 1
                continue
            task_id = str(doc.get("idx") or doc.get("id") or f"{qfile.stem}_{line_no}")
            choices = doc.get("choices") or []
            if not choices:
                skipped += 1
                continue
            images = []
            for key in ("image_1", "image_2", "image_3", "image_4"):
                value = doc.get(key)
                if value:
                    image_abs = (dataset_dir / value).resolve()
                    images.append(os.path.relpath(image_abs, manifest_dir))
            lines.append(json.dumps({
                "id": task_id,
                "kind": kind,
                "images": images,
                "question": str(doc.get("question", "")),
                "options": _options_from_choices(choices),
                "answer": _parse_answer(doc.get("answer")),
            }, ensure_ascii=False))
            converted += 1

    manifest_out.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return {"converted": converted, "skipped": skipped, "files": len(question_files)}
