"""Deterministic explanation text and the LLM prompt document for a prediction trace.

No model is called: the prompt document is the payload a downstream language
model would receive (diagnosis, knowledge attributes, classifier path and
clinical facts).
"""

from __future__ import annotations

import json
from typing import Mapping, Sequence

from .cascade import PredictionTrace
from .classifiers import RuleSet
from .errors import RenderError

DEFAULT_TEMPLATES = {
    "header": "Diagnosis: {label}",
    "path": "Classifier path: {path}",
    "step": "{classifier_id} [{branch}] -> {partition}",
    "feature": "{name} = {value}",
    "rule": "{name} {op} {threshold} -> {consequent}",
    "fallback": "Note: an unseen partition was routed to the node's majority leaf.",
    "features": {},
}

PROMPT_SECTIONS = ("DIAGNOSIS", "KNOWLEDGE_ATTRIBUTES", "CLASSIFIER_PATH", "CLINICAL_FACTS")


def fmt_number(v: float) -> str:
    return f"{float(v):.6g}"


def render_explanation(trace: PredictionTrace, rules: RuleSet | None = None, templates: Mapping | None = None) -> str:
    """Plain-text explanation of ``trace``.

    Each consulted knowledge feature is listed with its value and every rule
    on that feature the value satisfies.  ``templates["features"]`` may give
    a per-feature line template; naming a feature the trace never consulted
    is a :class:`RenderError`.
    """
    t = dict(DEFAULT_TEMPLATES)
    t.update(templates or {})
    per_feature = dict(t.get("features") or {})
    missing = [name for name in per_feature if name not in trace.knowledge_values]
    if missing:
        raise RenderError(f"template references features absent from the trace: {missing}")

    path = "; ".join(
        t["step"].format(classifier_id=s.classifier_id, branch=s.branch, partition=s.partition)
        for s in trace.steps
    )
    lines = [t["header"].format(label=trace.final_label), t["path"].format(path=path or "(leaf only)")]
    if trace.fallback:
        lines.append(t["fallback"])
    if trace.knowledge_values:
        lines.append("Knowledge attributes:")
    for name, value in trace.knowledge_values.items():
        line = per_feature.get(name, t["feature"]).format(name=name, value=fmt_number(value))
        crossed = []
        if rules is not None:
            crossed = [
                t["rule"].format(name=r.feature, op=r.op, threshold=fmt_number(r.threshold), consequent=r.consequent)
                for r in rules.rules
                if r.feature == name and r.matches(value)
            ]
        if crossed:
            line += " (" + "; ".join(crossed) + ")"
        lines.append("  " + line)
    return "\n".join(lines)


def render_llm_prompt(trace: PredictionTrace, knowledge: Mapping | None = None,
                      clinical_facts: Sequence[str] = ()) -> dict:
    """Structured prompt document with the four named sections."""
    attrs = dict(trace.knowledge_values)
    attrs.update(knowledge or {})
    return {
        "DIAGNOSIS": trace.final_label,
        "KNOWLEDGE_ATTRIBUTES": [{"name": k, "value": float(v)} for k, v in attrs.items()],
        "CLASSIFIER_PATH": [
            {"classifier_id": s.classifier_id, "branch": s.branch, "partition": s.partition}
            for s in trace.steps
        ],
        "CLINICAL_FACTS": [str(f) for f in clinical_facts],
    }


def dumps_document(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False)


def loads_document(text: str) -> dict:
    doc = json.loads(text)
    missing = [s for s in PROMPT_SECTIONS if s not in doc]
    if missing:
        raise RenderError(f"prompt document is missing sections {missing}")
    return doc
