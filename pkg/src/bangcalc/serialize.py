"""Machine-readable formats: line-delimited trace records and derivation
trees.  Field names are pinned by schema/trace.schema.json and
schema/derivation.schema.json; output is bit-stable for a fixed input.
"""

from __future__ import annotations

import json
from typing import Any

from .syntax import Term, parse_term, print_term
from .reduction import (
    ClashReport, NfClass, RuleKind, Sel, Trace, classify_nf, classify_wcf_nf,
    detect_clash,
)
from .qtypes import parse_type, print_type
from .system_u import Derivation
from .system_e import DerivationE

FORMAT_VERSION = 1

_SEL_BY_NAME = {s.value: s for s in Sel}
_RULE_BY_NAME = {k.value: k for k in RuleKind}


def position_to_json(pos) -> list[str]:
    return [s.value for s in pos]


def position_from_json(items) -> tuple[Sel, ...]:
    return tuple(_SEL_BY_NAME[i] for i in items)


def trace_records(trace: Trace) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [
        {"record": "header", "version": FORMAT_VERSION, "term": print_term(trace.start)}
    ]
    cur = trace.start
    for i, step in enumerate(trace.steps):
        records.append({
            "record": "step",
            "index": i,
            "rule": step.rule.value,
            "position": position_to_json(step.position),
            "redex": print_term(_subterm(cur, step.position)),
            "result": print_term(step.result),
        })
        cur = step.result
    final = trace.final
    records.append({
        "record": "footer",
        "steps": len(trace.steps),
        "b": trace.b,
        "e": trace.e,
        "completed": trace.completed,
        "normal": classify_nf(final).normal,
        "classes": sorted(classify_nf(final).memberships),
        "wcf_classes": sorted(classify_wcf_nf(final).memberships),
        "clash_free": detect_clash(final).clash_free,
        "term": print_term(final),
    })
    return records


def _subterm(t: Term, pos) -> Term:
    from .reduction import subterm_at
    return subterm_at(t, pos)


def dump_records(records: list[dict[str, Any]]) -> str:
    return "\n".join(json.dumps(r, sort_keys=True) for r in records)


# ---------------------------------------------------------------------------
# Derivations

def derivation_to_json(d: Derivation | DerivationE) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "rule": d.rule,
        "context": {x: print_type(m) for x, m in sorted(d.context.items())},
        "term": print_term(d.subject),
        "type": print_type(d.type),
        "premises": [derivation_to_json(p) for p in d.premises],
    }
    if isinstance(d, DerivationE):
        obj["counters"] = list(d.counters)
    return obj


def derivation_from_json(obj: dict[str, Any]) -> Derivation | DerivationE:
    from .qtypes import Mult
    premises = tuple(derivation_from_json(p) for p in obj.get("premises", []))
    context = {}
    for x, m in obj.get("context", {}).items():
        ty = parse_type(m)
        if not isinstance(ty, Mult):
            raise ValueError(f"context entry for {x} must be a multiset")
        context[x] = ty
    subject = parse_term(obj["term"])
    ty = parse_type(obj["type"])
    if "counters" in obj:
        b, e, s = obj["counters"]
        return DerivationE(obj["rule"], context, subject, ty, (b, e, s), premises)  # type: ignore[arg-type]
    return Derivation(obj["rule"], context, subject, ty, premises)  # type: ignore[arg-type]


def classification_json(cls: NfClass, wcf: NfClass, clash: ClashReport) -> dict[str, Any]:
    return {
        "record": "classification",
        "normal": cls.normal,
        "classes": sorted(cls.memberships),
        "wcf_classes": sorted(wcf.memberships),
        "clash_free": clash.clash_free,
        "clash": None if clash.witness is None else {
            "position": position_to_json(clash.witness[0]),
            "kind": clash.witness[1].value,
        },
    }
