"""Query interpretation backends behind one contract.

Two backends produce raw (unvalidated) frames from natural language:

* rule_based -- a deterministic pattern grammar over the supported query
  families (retrieval, scoping, attribute/temporal filters, entity
  proximity, rankings, combinations). It deliberately emits raw surface
  forms ("fatal", "1km", "7am") so the repair layer is exercised end to
  end, and it makes no claim of general NL coverage.
* remote_llm -- a generic chat-completion POST with the registry-derived
  system prompt; fails closed on transport errors and on unparseable
  output after one re-ask.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

from .frames import SemanticFrame, frame_from_obj, parse_frame
from .registry import SchemaRegistry

DEFAULT_NEAR_DISTANCE_M = 250.0


class InterpreterUnavailable(RuntimeError):
    """Remote backend transport failure or timeout; the query fails closed."""


class InterpretationFailure(RuntimeError):
    """Model output was not a parseable frame even after one re-ask."""


@dataclass(frozen=True)
class InterpreterBackend:
    kind: str = "rule_based"  # or "remote_llm"
    endpoint: str = ""
    model: str = ""
    key_env_var: str = ""
    timeout_s: float = 30.0
    temperature: float = 0.0
    response_path: str = "choices.0.message.content"
    max_concurrent: int = 4

    @classmethod
    def from_env(cls, kind: str = "remote_llm") -> "InterpreterBackend":
        return cls(
            kind=kind,
            endpoint=os.environ.get("CRASHQUERY_LLM_URL", ""),
            model=os.environ.get("CRASHQUERY_LLM_MODEL", ""),
            key_env_var=os.environ.get("CRASHQUERY_LLM_KEY_VAR", "CRASHQUERY_LLM_KEY"),
            timeout_s=float(os.environ.get("CRASHQUERY_LLM_TIMEOUT", "30")),
        )


@dataclass(frozen=True)
class SystemPrompt:
    rendered_text: str

    def sha256(self) -> str:
        return hashlib.sha256(self.rendered_text.encode("utf-8")).hexdigest()


@dataclass
class Interpretation:
    frame: SemanticFrame
    latency_s: float
    backend_kind: str
    raw_text: str

    def raw_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()[:16]


_FRAME_EXAMPLE = {
    "supported": True,
    "targets": [
        {"entity": "School", "role": "primary"},
        {"entity": "Crash", "role": "support"},
        {"entity": "Town", "role": "scope"},
    ],
    "references": [{"entity": "Town", "role": "scope", "name": "Boston"}],
    "spatial_constraints": [
        {"relation": "within_distance", "target_role": "support",
         "reference_role": "primary", "distance_m": 500.0},
    ],
    "attribute_constraints": [
        {"target_role": "support", "field": "first_hrmf", "operator": "eq",
         "value": "Collision with pedestrian"},
    ],
    "relations": [],
    "ranking": {"metric": "crash_count", "target_role": "primary",
                "order": "highest", "top_n": 5},
}


def build_system_prompt(registry: SchemaRegistry) -> SystemPrompt:
    """Deterministic registry-derived instructions: same registry, same bytes."""
    lines = [
        "You translate natural-language transportation safety questions into a",
        "JSON semantic frame. Output only the JSON object, no prose.",
        "",
        "Frame keys: supported, targets, references, spatial_constraints,",
        "attribute_constraints, relations, ranking.",
        "Roles: " + ", ".join(registry.roles) + ".",
        "Spatial relations: " + ", ".join(registry.relations) + ".",
        "Attribute operators: " + ", ".join(registry.operators) + ".",
        "Ranking metrics: " + ", ".join(registry.ranking_metrics) + ".",
        "Set supported=false for questions outside this schema.",
        "",
        "Entities:",
    ]
    for entity in sorted(registry.entities, key=lambda e: e.name):
        lines.append(f"- {entity.name} ({entity.geometry_kind})")
        for f in entity.fields:
            desc = f"  - {f.name}: {f.value_kind}"
            if f.unit:
                desc += f" [{f.unit}]"
            if f.canonical_values:
                desc += " = " + " | ".join(f.canonical_values)
            lines.append(desc)
    lines += [
        "",
        'Example -- "top 5 schools by pedestrian crashes within 500m in Boston":',
        json.dumps(_FRAME_EXAMPLE, indent=2, sort_keys=True),
        "",
    ]
    return SystemPrompt("\n".join(lines))


def interpret(backend: InterpreterBackend, prompt: SystemPrompt, query: str) -> Interpretation:
    """Run one interpretation; raw model text is retained for the audit trail."""
    if not query.strip():
        raise ValueError("empty query")
    t0 = time.perf_counter()
    if backend.kind == "rule_based":
        frame = rule_based_interpret(query)
        raw_text = json.dumps(_frame_raw_obj(frame), sort_keys=True)
    elif backend.kind == "remote_llm":
        frame, raw_text = _remote_interpret(backend, prompt, query)
    else:
        raise ValueError(f"unknown backend kind {backend.kind!r}")
    latency = time.perf_counter() - t0
    return Interpretation(frame=frame, latency_s=latency,
                          backend_kind=backend.kind, raw_text=raw_text)


def _frame_raw_obj(frame: SemanticFrame) -> dict:
    from .frames import frame_to_obj

    return frame_to_obj(frame)


# ---------------------------------------------------------------------------
# remote backend

_remote_gate: dict[int, threading.Semaphore] = {}
_remote_gate_lock = threading.Lock()


def _gate(backend: InterpreterBackend) -> threading.Semaphore:
    with _remote_gate_lock:
        sem = _remote_gate.get(backend.max_concurrent)
        if sem is None:
            sem = threading.Semaphore(backend.max_concurrent)
            _remote_gate[backend.max_concurrent] = sem
        return sem


def _remote_interpret(backend, prompt, query) -> tuple[SemanticFrame, str]:
    import requests

    if not backend.endpoint:
        raise InterpreterUnavailable("no remote endpoint configured")
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(backend.key_env_var, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": backend.model,
        "temperature": backend.temperature,
        "messages": [
            {"role": "system", "content": prompt.rendered_text},
            {"role": "user", "content": query},
        ],
    }
    texts = []
    with _gate(backend):
        for attempt in range(2):  # one automatic re-ask, then fail closed
            if attempt == 1:
                payload["messages"].append({"role": "user",
                                            "content": "Reply with only the JSON frame object."})
            try:
                resp = requests.post(backend.endpoint, json=payload, headers=headers,
                                     timeout=backend.timeout_s)
                resp.raise_for_status()
            except requests.RequestException as exc:
                raise InterpreterUnavailable(f"remote interpreter unreachable: {exc}") from exc
            text = _extract_path(resp.json(), backend.response_path)
            texts.append(text)
            frame = _try_parse_frame(text)
            if frame is not None:
                return frame, text
    raise InterpretationFailure(
        f"model output unparseable after re-ask: {texts[-1][:200]!r}")


def _extract_path(obj, path: str) -> str:
    cur = obj
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict):
            cur = cur.get(part)
        else:
            break
    return cur if isinstance(cur, str) else json.dumps(cur)


def _try_parse_frame(text: str) -> SemanticFrame | None:
    candidate = text.strip()
    m = re.search(r"\{.*\}", candidate, re.DOTALL)
    if m:
        candidate = m.group(0)
    try:
        return parse_frame(candidate)
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# rule-based grammar

_ENTITY_WORDS = [
    ("road segments", "Road"),
    ("road segment", "Road"),
    ("sidewalk conditions", "Road"),
    ("bus stops", "BusStop"),
    ("bus stop", "BusStop"),
    ("crosswalks", "Crosswalk"),
    ("crosswalk", "Crosswalk"),
    ("crashes", "Crash"),
    ("crash", "Crash"),
    ("roads", "Road"),
    ("road", "Road"),
    ("schools", "School"),
    ("school", "School"),
    ("towns", "Town"),
    ("town", "Town"),
]

_SEVERITY_WORDS = {"fatal": "fatal", "injury": "injury", "pdo": "pdo",
                   "property damage": "property damage"}
_USER_WORDS = {"pedestrian": "pedestrian", "cyclist": "cyclist", "bike": "bike",
               "bicycle": "bicycle"}

_CLAUSE_STOPPERS = (
    " within ", " between ", " with ", " without ", " near ", " around ",
    " in ", " by ", " and ", " above ", " below ",
)

_SHOW_RE = re.compile(r"^\s*(?:show|list|display|map|find)\s+(?:me\s+)?(?:all\s+)?(.*)$",
                      re.IGNORECASE)
_TOP_RE = re.compile(r"^\s*top\s+(\d+)\s+(.*)$", re.IGNORECASE)
_IN_TOWN_RE = re.compile(r"\bin\s+([A-Z][A-Za-z]*(?:\s+[A-Z][A-Za-z]*)*)")
_DIST_PAT = (r"(half\s+a\s+mile|quarter\s+mile|a\s+mile|"
             r"[\d][\w.]*(?:\s*(?:m|meters|km|kilometers|miles?|mile|feet|ft))?)")
_WITHIN_OF_RE = re.compile(
    r"\bwithin\s+" + _DIST_PAT + r"\s+(?:of|from|around)\s+", re.IGNORECASE)
_AROUND_WITHIN_RE = re.compile(
    r"\baround\s+(.+?)\s+within\s+" + _DIST_PAT + r"(?=\s|$)", re.IGNORECASE)
_BARE_WITHIN_RE = re.compile(r"\bwithin\s+" + _DIST_PAT + r"(?=\s|$)", re.IGNORECASE)
_NEAR_RE = re.compile(r"\bnear\s+", re.IGNORECASE)
_TIME_OR_DATE_RANGE_RE = re.compile(
    r"\bbetween\s+([^,]+?)\s+and\s+(.+?)(?=\s+(?:in|with|within|near|around|between)\s|$)",
    re.IGNORECASE)
_AFTER_BEFORE_RE = re.compile(r"\b(after|before)\s+(\d{1,2}(?::\d{2})?\s*(?:am|pm))",
                              re.IGNORECASE)
_SPEED_RE = re.compile(
    r"\bwith\s+speed\s+limits?\s+(above|over|greater than|at least|below|under|less than)\s+(\d+)",
    re.IGNORECASE)
_NO_SIDEWALKS_RE = re.compile(
    r"\b(?:with\s+no|without|no)\s+sidewalks?(?:\s+on\s+both\s+sides)?", re.IGNORECASE)
_MOST_FEWEST_RE = re.compile(r"\bthe\s+(most|fewest|least)\s+", re.IGNORECASE)


def rule_based_interpret(query: str) -> SemanticFrame:
    """Deterministic frame construction for the supported query families."""
    try:
        obj = _interpret_obj(query)
    except _NoParse:
        obj = {"supported": False}
    return frame_from_obj(obj)


class _NoParse(Exception):
    pass


class _Builder:
    def __init__(self):
        self.roles: dict[str, str] = {}      # role -> entity
        self.references: list[dict] = []
        self.spatial: list[dict] = []
        self.attributes: list[dict] = []
        self.ranking: dict | None = None

    def bind(self, entity: str, role: str):
        self.roles[role] = entity

    def add_filter(self, role: str, fieldname: str, operator: str, value=None):
        c = {"target_role": role, "field": fieldname, "operator": operator}
        if value is not None:
            c["value"] = value
        if c not in self.attributes:
            self.attributes.append(c)

    def frame_obj(self) -> dict:
        targets = [{"entity": e, "role": r} for r, e in sorted(self.roles.items())]
        obj = {
            "supported": True,
            "targets": targets,
            "references": self.references,
            "spatial_constraints": self.spatial,
            "attribute_constraints": self.attributes,
            "relations": [],
        }
        if self.ranking is not None:
            obj["ranking"] = self.ranking
        return obj


def _interpret_obj(query: str) -> dict:
    text = " ".join(query.split())
    b = _Builder()

    m = _TOP_RE.match(text)
    if m:
        _parse_ranking(b, int(m.group(1)), m.group(2))
        return b.frame_obj()
    m = _SHOW_RE.match(text)
    if m:
        _parse_retrieval(b, m.group(1))
        return b.frame_obj()
    raise _NoParse


def _parse_ranking(b: _Builder, top_n: int, rest: str) -> None:
    if top_n < 1:
        raise _NoParse
    primary, after = _lead_entity(rest)
    if primary is None:
        raise _NoParse
    b.bind(primary, "primary")
    b.bind("Crash", "support")
    order = "highest"

    lower = after.lower()
    by_idx = lower.find(" by ")
    pre, measure = "", ""
    if lower.startswith("by "):
        measure = after[3:]
    elif by_idx >= 0:
        pre, measure = after[:by_idx], after[by_idx + 4:]
    else:
        # "... with the most pedestrian crashes" form
        mf = _MOST_FEWEST_RE.search(after)
        if not mf:
            raise _NoParse
        order = mf.group(1).lower()
        pre, measure = after[: mf.start()], after[mf.end():]

    mf = _MOST_FEWEST_RE.search(measure)
    if mf:
        order = mf.group(1).lower()
        measure = measure[: mf.start()] + " " + measure[mf.end():]

    # primary-side clauses before "by" (e.g. "with no sidewalks on both sides and")
    pre = re.sub(r"\s+and\s*$", "", pre)
    _require_empty(_consume_shared_clauses(b, pre, attach_role="primary"))

    # the measure is always a crash count in this vocabulary
    measure = _consume_shared_clauses(b, measure, attach_role="support")
    measure_entity, tail = _lead_entity_with_adjectives(b, measure, "support")
    if measure_entity != "Crash":
        raise _NoParse
    _require_empty(_consume_shared_clauses(b, tail, attach_role="support"))

    b.ranking = {"metric": "crash_count", "target_role": "primary",
                 "order": order, "top_n": top_n}


def _parse_retrieval(b: _Builder, rest: str) -> None:
    entity, tail = _lead_entity_with_adjectives(b, rest, "primary")
    if entity is None:
        raise _NoParse
    b.bind(entity, "primary")
    _require_empty(_consume_shared_clauses(b, tail, attach_role="primary"))


def _require_empty(residue: str) -> None:
    """Unconsumed words mean the query is outside the grammar: fail closed."""
    if re.search(r"\w", residue):
        raise _NoParse


def _lead_entity(text: str) -> tuple[str | None, str]:
    lower = text.lower()
    for word, entity in _ENTITY_WORDS:
        if lower.startswith(word):
            return entity, text[len(word):].strip()
    return None, text


def _lead_entity_with_adjectives(b: _Builder, text: str, role: str) -> tuple[str | None, str]:
    """Consume '[fatal] [pedestrian] crashes ...' applying adjective filters."""
    remaining = text.strip()
    pending: list[tuple[str, str]] = []
    for _ in range(4):
        lower = remaining.lower()
        entity, tail = _lead_entity(remaining)
        if entity is not None:
            for fieldname, value in pending:
                b.add_filter(role, fieldname, "eq", value)
            return entity, tail
        matched = False
        for word, raw in _SEVERITY_WORDS.items():
            if lower.startswith(word + " "):
                pending.append(("severity", raw))
                remaining = remaining[len(word):].strip()
                matched = True
                break
        if matched:
            continue
        for word, raw in _USER_WORDS.items():
            if lower.startswith(word + " "):
                pending.append(("first_hrmf", raw))
                remaining = remaining[len(word):].strip()
                matched = True
                break
        if not matched:
            return None, text
    return None, text


def _consume_shared_clauses(b: _Builder, text: str, attach_role: str) -> str:
    """Extract scope/spatial/temporal/attribute clauses; returns the residue."""
    text = " " + text.strip() + " "

    # speed limit
    m = _SPEED_RE.search(text)
    if m:
        op = {"above": "gt", "over": "gt", "greater than": "gt", "at least": "gte",
              "below": "lt", "under": "lt", "less than": "lt"}[m.group(1).lower()]
        b.add_filter(attach_role, "speed_limit", op, int(m.group(2)))
        text = text[: m.start()] + " " + text[m.end():]

    # missing sidewalks (both sides)
    m = _NO_SIDEWALKS_RE.search(text)
    if m:
        b.add_filter(attach_role, "sidewalk_left", "eq", "no")
        b.add_filter(attach_role, "sidewalk_right", "eq", "no")
        text = text[: m.start()] + " " + text[m.end():]

    # temporal between (time or date decided by parse shape)
    m = _TIME_OR_DATE_RANGE_RE.search(text)
    if m:
        lo, hi = m.group(1).strip(), m.group(2).strip()
        from .repair import parse_clock_time

        fieldname = "crash_time" if parse_clock_time(lo) is not None else "crash_date"
        target = "support" if "support" in b.roles and attach_role == "support" else attach_role
        b.add_filter(target, fieldname, "between", [lo, hi])
        text = text[: m.start()] + " " + text[m.end():]

    m = _AFTER_BEFORE_RE.search(text)
    if m:
        op = "gt" if m.group(1).lower() == "after" else "lt"
        b.add_filter(attach_role, "crash_time", op, m.group(2))
        text = text[: m.start()] + " " + text[m.end():]

    # "around <name> within <d>"
    m = _AROUND_WITHIN_RE.search(text)
    if m:
        _bind_anchor_or_support(b, m.group(1).strip(), m.group(2).strip(), attach_role)
        text = text[: m.start()] + " " + text[m.end():]

    # "within <d> of <object>"
    m = _WITHIN_OF_RE.search(text)
    if m:
        obj_text, rest = _capture_name(text[m.end():])
        _bind_anchor_or_support(b, obj_text, m.group(1).strip(), attach_role)
        text = text[: m.start()] + " " + rest

    # bare "within <d>" (ranking measure shorthand: distance to the primary)
    m = _BARE_WITHIN_RE.search(text)
    if m and attach_role == "support":
        b.spatial.append({"relation": "within_distance", "target_role": "support",
                          "reference_role": "primary", "distance_m": m.group(1).strip()})
        text = text[: m.start()] + " " + text[m.end():]

    # "near <object>"
    m = _NEAR_RE.search(text)
    if m:
        obj_text, rest = _capture_name(text[m.end():])
        _bind_anchor_or_support(b, obj_text, None, attach_role)
        text = text[: m.start()] + " " + rest

    # "in <Town>"
    m = _IN_TOWN_RE.search(text)
    if m:
        b.bind("Town", "scope")
        b.references.append({"entity": "Town", "role": "scope", "name": m.group(1).strip()})
        text = text[: m.start()] + " " + text[m.end():]

    return text.strip()


def _capture_name(text: str) -> tuple[str, str]:
    """Take words until the next clause keyword; returns (name, residue)."""
    lower = (" " + text).lower()
    cut = len(text)
    for stopper in _CLAUSE_STOPPERS:
        idx = lower.find(stopper)
        if idx >= 0:
            cut = min(cut, idx)
    return text[:cut].strip(" ,."), text[cut:]


def _bind_anchor_or_support(b: _Builder, obj_text: str, raw_distance: str | None,
                            attach_role: str) -> None:
    """Proximity object: plural entity -> support/filter stream; name -> anchor."""
    cleaned = re.sub(r"^(?:all|the)\s+", "", obj_text.strip())
    entity, residue = _lead_entity(cleaned)
    distance = raw_distance if raw_distance is not None else DEFAULT_NEAR_DISTANCE_M
    if entity is not None and residue == "":
        # entity-class object: support for retrievals, filter inside a ranking measure
        if attach_role == "support":
            role = "filter" if entity != b.roles.get("primary") else "primary"
            if role == "filter":
                b.bind(entity, "filter")
            b.spatial.append({"relation": "within_distance", "target_role": "support",
                              "reference_role": role, "distance_m": distance})
        else:
            b.bind(entity, "support")
            b.spatial.append({"relation": "within_distance", "target_role": attach_role,
                              "reference_role": "support", "distance_m": distance})
        return
    # named anchor
    name = cleaned
    entity = "Place"
    lowered = name.lower()
    if lowered.endswith(" bus stop"):
        name = name[: -len(" bus stop")].strip()
        entity = "BusStop"
    elif lowered.endswith("school"):
        entity = "School"
    if not name:
        raise _NoParse
    b.bind(entity, "anchor")
    b.references.append({"entity": entity, "role": "anchor", "name": name})
    b.spatial.append({
        "relation": "within_distance",
        "target_role": attach_role if attach_role != "support" else "support",
        "reference_role": "anchor",
        "distance_m": distance,
    })
