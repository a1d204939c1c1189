"""Benchmark harness for OpenAI-compatible chat-completion endpoints.

Three prompt settings: ``standard`` (images + question), ``raw_tool``
(plus expert-tool imagery), ``p2`` (plus serialized perception programs).
Prompt templates are plain text files keyed by (template id, setting);
one-shot in-context examples for small models ride along in PromptSpec.
Results append to JSONL, one record per task, so interrupted runs resume
by skipping already-recorded task ids.
"""

from __future__ import annotations

import base64
import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import requests

from .analysis import displacement_error_stats, kendall_tau, ranking_from_depth
from .compilers import MatchSet, compile_visual_correspondence
from .core import PerceptionProgram, redact_readouts
from .errors import (
    AttachmentTooLarge,
    AuthFailure,
    ExhaustedRetries,
    MalformedResponse,
    MissingTemplate,
    ParseError,
    PerceptError,
)
from .ingestion import TaskInstance
from .serializer import parse, quantize, serialize

SETTINGS = ("standard", "raw_tool", "p2")
UNPARSED = "unparsed"
MAX_ATTACHMENT_BYTES = 20 * 1024 * 1024
PACKAGED_TEMPLATES = Path(__file__).parent / "templates"

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float | None = None
    max_tokens: int | None = None
    timeout: float = 120.0
    max_attempts: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 60.0

    @classmethod
    def from_file(cls, path) -> "EndpointConfig":
        """Load from a ``key = value`` text file ('#' starts a comment)."""
        values = {}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
        if "base_url" not in values or "model" not in values:
            raise ValueError(f"{path}: base_url and model are required")
        kwargs: dict = {"base_url": values["base_url"], "model": values["model"]}
        if "api_key_env" in values:
            kwargs["api_key_env"] = values["api_key_env"]
        for key, cast in (("temperature", float), ("max_tokens", int), ("timeout", float),
                          ("max_attempts", int), ("backoff_base", float), ("backoff_cap", float)):
            if key in values:
                kwargs[key] = cast(values[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class Attachment:
    media_type: str
    data: bytes

    @classmethod
    def from_file(cls, path) -> "Attachment":
        suffix = Path(path).suffix.lower()
        media = "image/jpeg" if suffix in (".jpg", ".jpeg") else "image/png"
        return cls(media_type=media, data=Path(path).read_bytes())


@dataclass(frozen=True)
class IclExample:
    question: str
    rationale: str
    answer: str
    attachments: tuple[Attachment, ...] = ()
    p2_blocks: tuple[str, ...] = ()


@dataclass(frozen=True)
class PromptSpec:
    setting: str
    template_id: str
    question: str
    attachments: tuple[Attachment, ...] = ()
    p2_blocks: tuple[str, ...] = ()
    tool_images: tuple[Attachment, ...] = ()
    icl: IclExample | None = None


@dataclass
class ChatResult:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    attempts: int = 1
    latency_s: float = 0.0


@dataclass
class BenchmarkRecord:
    task_id: str
    task_kind: str
    setting: str
    model: str
    timestamp: str
    response: str
    extracted: str
    correct: bool | None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_s: float = 0.0
    error: str | None = None


# ---------------------------------------------------------------------------
# prompt assembly


def load_template(template_id: str, setting: str, templates_dir=None) -> str:
    base = Path(templates_dir) if templates_dir else PACKAGED_TEMPLATES
    for name in (f"{template_id}__{setting}.txt", f"default__{setting}.txt"):
        candidate = base / name
        if candidate.is_file():
            return candidate.read_text(encoding="utf-8")
    raise MissingTemplate(f"no template for ({template_id!r}, {setting!r}) under {base}")


def _data_url(att: Attachment) -> str:
    if len(att.data) > MAX_ATTACHMENT_BYTES:
        raise AttachmentTooLarge(f"attachment is {len(att.data)} bytes, limit {MAX_ATTACHMENT_BYTES}")
    encoded = base64.b64encode(att.data).decode("ascii")
    return f"data:{att.media_type};base64,{encoded}"


def _user_content(question: str, attachments, p2_blocks) -> list[dict]:
    text = question
    for block in p2_blocks:
        text += "\n\n```\n" + block.rstrip("\n") + "\n```"
    parts: list[dict] = [{"type": "text", "text": text}]
    for att in attachments:
        parts.append({"type": "image_url", "image_url": {"url": _data_url(att)}})
    return parts


def build_prompt(spec: PromptSpec, templates_dir=None) -> list[dict]:
    """Assemble the chat message list; identical specs yield identical lists."""
    if spec.setting not in SETTINGS:
        raise ValueError(f"unknown setting {spec.setting!r}")
    if spec.setting == "p2" and not spec.p2_blocks:
        raise ValueError("p2 setting requires at least one program block")
    if spec.setting == "raw_tool" and not spec.tool_images:
        raise ValueError("raw_tool setting requires at least one tool image")
    if spec.setting == "standard" and (spec.p2_blocks or spec.tool_images):
        raise ValueError("standard setting must not carry programs or tool images")

    messages = [{"role": "system", "content": load_template(spec.template_id, spec.setting,
                                                            templates_dir)}]
    if spec.icl is not None:
        messages.append({
            "role": "user",
            "content": _user_content(spec.icl.question, spec.icl.attachments,
                                     spec.icl.p2_blocks),
        })
        messages.append({
            "role": "assistant",
            "content": f"{spec.icl.rationale}\n\nThe answer is ({spec.icl.answer}).",
        })
    attachments = tuple(spec.attachments) + tuple(spec.tool_images)
    messages.append({"role": "user",
                     "content": _user_content(spec.question, attachments, spec.p2_blocks)})
    return messages


# ---------------------------------------------------------------------------
# transport


def send_chat(messages: list[dict], cfg: EndpointConfig, session=None) -> ChatResult:
    """One chat-completion round trip with backoff on 429/5xx/timeouts."""
    session = session or requests.Session()
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload: dict = {"model": cfg.model, "messages": messages}
    if cfg.temperature is not None:
        payload["temperature"] = cfg.temperature
    if cfg.max_tokens is not None:
        payload["max_tokens"] = cfg.max_tokens

    started = time.monotonic()
    last_reason = "no attempts made"
    for attempt in range(1, max(1, cfg.max_attempts) + 1):
        try:
            resp = session.post(url, json=payload, headers=headers, timeout=cfg.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_reason = f"transport error: {exc}"
            resp = None
        if resp is not None:
            if resp.status_code in (401, 403):
                raise AuthFailure(f"HTTP {resp.status_code} from {url}")
            if resp.status_code == 200:
                return _parse_chat_response(resp, attempt, time.monotonic() - started)
            last_reason = f"HTTP {resp.status_code}"
            if resp.status_code not in RETRYABLE_STATUS:
                raise MalformedResponse(f"{last_reason} from {url}")
        if attempt < cfg.max_attempts:
            delay = min(cfg.backoff_cap, cfg.backoff_base * (2 ** (attempt - 1)))
            time.sleep(delay + random.uniform(0, delay * 0.25))
    raise ExhaustedRetries(f"gave up after {cfg.max_attempts} attempts ({last_reason})")


def _parse_chat_response(resp, attempts: int, latency: float) -> ChatResult:
    try:
        doc = resp.json()
        text = doc["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"cannot read completion: {exc}") from None
    if not isinstance(text, str):
        raise MalformedResponse(f"completion content is {type(text).__name__}, not text")
    usage = doc.get("usage") or {}
    def _count(key):
        value = usage.get(key)
        return value if isinstance(value, int) else None
    return ChatResult(
        text=text,
        prompt_tokens=_count("prompt_tokens"),
        completion_tokens=_count("completion_tokens"),
        attempts=attempts,
        latency_s=latency,
    )


# ---------------------------------------------------------------------------
# answer extraction


def extract_answer(text: str, options) -> str:
    """Best-effort option label from a model reply, else ``unparsed``.

    Prefers the last parenthesized letter or letter adjacent to an
    answer-like phrase; falls back to the last standalone option letter.
    """
    options = list(options)
    if not options:
        raise ValueError("options must be non-empty")
    canonical = {opt.upper(): opt for opt in options if len(opt) == 1}

    hits = []
    for m in re.finditer(r"\(([A-Za-z])\)", text):
        label = m.group(1).upper()
        if label in canonical:
            hits.append((m.start(), canonical[label]))
    phrase = re.compile(r"(?i)\b(?:answer|option|choice)\b(?:\s+is)?\s*:?\s*\(?([A-Za-z])\)?\b")
    for m in phrase.finditer(text):
        label = m.group(1).upper()
        if label in canonical:
            hits.append((m.start(), canonical[label]))
    if hits:
        return max(hits)[1]

    fallback = None
    for m in re.finditer(r"\b([A-Za-z])\b", text):
        label = m.group(1).upper()
        if label in canonical:
            fallback = canonical[label]
    if fallback is not None:
        return fallback

    # multi-character option labels matched verbatim
    last = None
    for opt in options:
        if len(opt) > 1:
            pos = text.rfind(opt)
            if pos >= 0 and (last is None or pos > last[0]):
                last = (pos, opt)
    return last[1] if last else UNPARSED


# ---------------------------------------------------------------------------
# benchmark loop


def render_question(task: TaskInstance) -> str:
    lines = [task.question, "", "Options:"]
    for label in sorted(task.options):
        value = task.options[label]
        if isinstance(value, (list, tuple)):
            value = "(" + ", ".join(str(v) for v in value) + ")"
        lines.append(f"({label}) {value}")
    return "\n".join(lines)


def prompt_spec_for_task(task: TaskInstance, setting: str) -> PromptSpec:
    attachments = tuple(Attachment.from_file(p) for p in task.images)
    p2_blocks = ()
    tool_images = ()
    if setting == "p2":
        p2_blocks = tuple(Path(p).read_text(encoding="utf-8") for p in task.p2_paths)
    elif setting == "raw_tool":
        tool_images = tuple(Attachment.from_file(p) for p in task.tool_images)
    return PromptSpec(
        setting=setting,
        template_id=task.kind,
        question=render_question(task),
        attachments=attachments,
        p2_blocks=p2_blocks,
        tool_images=tool_images,
    )


def _default_sender(cfg: EndpointConfig):
    local = threading.local()

    def send_fn(messages):
        if not hasattr(local, "session"):
            local.session = requests.Session()
        return send_chat(messages, cfg, session=local.session)

    return send_fn


def _run_one(task: TaskInstance, setting: str, cfg: EndpointConfig, send_fn,
             templates_dir, icl: IclExample | None) -> BenchmarkRecord:
    stamp = datetime.now(timezone.utc).isoformat()
    record = BenchmarkRecord(
        task_id=task.id, task_kind=task.kind, setting=setting, model=cfg.model,
        timestamp=stamp, response="", extracted=UNPARSED,
        correct=(False if task.answer is not None else None),
    )
    try:
        spec = prompt_spec_for_task(task, setting)
        if icl is not None:
            spec = replace(spec, icl=icl)
        messages = build_prompt(spec, templates_dir)
        result = send_fn(messages)
        record.response = result.text
        record.prompt_tokens = result.prompt_tokens
        record.completion_tokens = result.completion_tokens
        record.latency_s = result.latency_s
        record.extracted = extract_answer(result.text, list(task.options))
        if task.answer is not None:
            record.correct = record.extracted == task.answer
    except Exception as exc:  # failed records are data, not crashes
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def completed_task_ids(out_path) -> set[str]:
    done = set()
    path = Path(out_path)
    if not path.is_file():
        return done
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict) and isinstance(doc.get("task_id"), str):
            done.add(doc["task_id"])
    return done


@dataclass
class BenchmarkSummary:
    total: int
    accuracy_pct: float | None
    accuracy_by_kind: dict[str, float]
    mean_prompt_tokens: float | None
    mean_completion_tokens: float | None
    failures: int


def summarize_records(records: list[BenchmarkRecord]) -> BenchmarkSummary:
    scored = [r for r in records if r.correct is not None]
    by_kind: dict[str, list[BenchmarkRecord]] = {}
    for r in scored:
        by_kind.setdefault(r.task_kind, []).append(r)
    def pct(rs):
        return round(100.0 * sum(r.correct for r in rs) / len(rs), 2)
    prompt_counts = [r.prompt_tokens for r in records if r.prompt_tokens is not None]
    completion_counts = [r.completion_tokens for r in records if r.completion_tokens is not None]
    return BenchmarkSummary(
        total=len(records),
        accuracy_pct=pct(scored) if scored else None,
        accuracy_by_kind={kind: pct(rs) for kind, rs in sorted(by_kind.items())},
        mean_prompt_tokens=(sum(prompt_counts) / len(prompt_counts)) if prompt_counts else None,
        mean_completion_tokens=(sum(completion_counts) / len(completion_counts))
        if completion_counts else None,
        failures=sum(1 for r in records if r.error is not None),
    )


def run_benchmark(tasks: list[TaskInstance], setting: str, cfg: EndpointConfig,
                  out_path, concurrency: int = 4, resume: bool = True,
                  send=None, templates_dir=None, icl: IclExample | None = None,
                  ) -> tuple[list[BenchmarkRecord], BenchmarkSummary]:
    """Run every task at most K requests at a time, appending JSONL records.

    With ``resume`` (default) task ids already present in ``out_path`` are
    skipped, so a crashed run picks up where it left off. Returns the
    records written in this call plus a summary over the whole file.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    done = completed_task_ids(out_path) if resume else set()
    todo = [t for t in tasks if t.id not in done]
    send_fn = send or _default_sender(cfg)

    new_records: list[BenchmarkRecord] = []
    mode = "a" if (resume and done) else "w"
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, mode, encoding="utf-8") as fh:
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            futures = [
                pool.submit(_run_one, task, setting, cfg, send_fn, templates_dir, icl)
                for task in todo
            ]
            for future in as_completed(futures):
                record = future.result()
                new_records.append(record)
                fh.write(json.dumps(asdict(record), ensure_ascii=False) + "\n")
                fh.flush()

    all_records = []
    for line in out_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            all_records.append(BenchmarkRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError):
            continue
    return new_records, summarize_records(all_records)


# ---------------------------------------------------------------------------
# redaction-reconstruction experiments


@dataclass
class ReconstructionInstance:
    task_id: str
    attachments: tuple[Attachment, ...] = ()
    truth_by_grid: dict[int, PerceptionProgram] | None = None  # depth sweeps
    matches: MatchSet | None = None  # visual correspondence


@dataclass
class ReconstructionRow:
    task_id: str
    grid: int | None
    tau: float | None = None
    mean_error_pct: float | None = None
    copied_input_fraction: float | None = None
    failed: bool = False
    error: str | None = None


FENCED_BLOCK = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def completion_to_program(text: str) -> PerceptionProgram:
    """Parse a model completion, preferring the last fenced code block."""
    blocks = FENCED_BLOCK.findall(text)
    return parse(blocks[-1] if blocks else text)


def _reconstruction_messages(instance: ReconstructionInstance, truth: PerceptionProgram,
                             modality: str, exemplars, templates_dir) -> list[dict]:
    system = load_template("reconstruct", modality, templates_dir)
    messages = [{"role": "system", "content": system}]
    for attachments, program in exemplars:
        messages.append({"role": "user",
                         "content": _user_content("Convert this image's tool output.",
                                                  attachments, ())})
        messages.append({"role": "assistant",
                         "content": "```\n" + serialize(program) + "```"})
    redacted = serialize(redact_readouts(truth))
    question = ("Complete the missing r fields of this program for the given image. "
                "Reply with the full program in a fenced code block.")
    messages.append({"role": "user",
                     "content": _user_content(question, instance.attachments, (redacted,))})
    return messages


def run_reconstruction(instances: list[ReconstructionInstance], modality: str,
                       grids, cfg: EndpointConfig, exemplars=(), send=None,
                       templates_dir=None) -> tuple[list[ReconstructionRow], dict]:
    """Prompt for redacted-program completion and score the reconstructions.

    Depth instances are scored by rank correlation against the true cell
    ordering at every grid order in the sweep; correspondence instances by
    displacement-error statistics. Unparseable completions count as
    failures and are excluded from the score aggregates.
    """
    if modality not in ("depth", "visual_correspondence"):
        raise ValueError(f"unsupported reconstruction modality {modality!r}")
    send_fn = send or _default_sender(cfg)
    rows: list[ReconstructionRow] = []

    jobs: list[tuple[ReconstructionInstance, int | None, PerceptionProgram]] = []
    for instance in instances:
        if modality == "depth":
            if not instance.truth_by_grid:
                raise ValueError(f"{instance.task_id}: depth instance needs truth_by_grid")
            for grid in grids:
                jobs.append((instance, grid, instance.truth_by_grid[grid]))
        else:
            if instance.matches is None:
                raise ValueError(f"{instance.task_id}: correspondence instance needs matches")
            jobs.append((instance, None, compile_visual_correspondence(instance.matches)))

    for instance, grid, truth in jobs:
        row = ReconstructionRow(task_id=instance.task_id, grid=grid)
        try:
            messages = _reconstruction_messages(instance, truth, modality,
                                                exemplars, templates_dir)
            result = send_fn(messages)
            program = completion_to_program(result.text)
            if modality == "depth":
                # score against the program as prompted (3-decimal precision),
                # so a verbatim echo of the ground truth is exactly tau = 1
                row.tau = kendall_tau(ranking_from_depth(quantize(truth)),
                                      ranking_from_depth(program))
            else:
                _, summary = displacement_error_stats(instance.matches, program)
                row.mean_error_pct = summary.mean_error_pct
                row.copied_input_fraction = summary.copied_input_fraction
        except (PerceptError, ParseError, ValueError) as exc:
            row.failed = True
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)

    aggregates: dict = {}
    for key in sorted({row.grid for row in rows}, key=lambda g: (g is None, g)):
        group = [row for row in rows if row.grid == key]
        ok = [row for row in group if not row.failed]
        entry = {"count": len(group), "failures": len(group) - len(ok)}
        taus = [row.tau for row in ok if row.tau is not None]
        if taus:
            entry["mean_tau"] = sum(taus) / len(taus)
        errors = [row.mean_error_pct for row in ok if row.mean_error_pct is not None]
        if errors:
            entry["mean_error_pct"] = sum(errors) / len(errors)
            fractions = [row.copied_input_fraction for row in ok]
            entry["copied_input_fraction"] = sum(fractions) / len(fractions)
        aggregates[key] = entry
    return rows, aggregates
