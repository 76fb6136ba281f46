"""Contextual-feature extraction over a declarative app IR.

Each API call site is classified independently: if any activity entry method
reaches the calling method through the call graph, the feature lands at
activity level for every such activity; otherwise it lands at app level and
is exercised on every screen.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from .domain import ContextualFeature, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApiCall:
    feature: ContextualFeature
    api: str


@dataclass(frozen=True)
class IrMethod:
    id: str
    owner: str
    api_calls: tuple[ApiCall, ...] = ()


@dataclass(frozen=True)
class AppIR:
    package: str
    methods: tuple[IrMethod, ...]
    call_edges: tuple[tuple[str, str], ...]
    activity_entries: dict[str, tuple[str, ...]]
    manifest_activities: tuple[tuple[str, bool], ...]  # (name, rotatable)

    def method_ids(self) -> set[str]:
        return {m.id for m in self.methods}


@dataclass
class FeatureMap:
    activity_level: dict[str, set[ContextualFeature]] = field(default_factory=dict)
    app_level: set[ContextualFeature] = field(default_factory=set)
    rotatable: set[str] = field(default_factory=set)

    def to_json(self) -> dict:
        return {
            "activity_level": {
                activity: sorted(f.value for f in features)
                for activity, features in sorted(self.activity_level.items())
            },
            "app_level": sorted(f.value for f in self.app_level),
            "rotatable": sorted(self.rotatable),
        }

    @classmethod
    def from_json(cls, d: dict) -> "FeatureMap":
        return cls(
            activity_level={
                a: {ContextualFeature(v) for v in vs} for a, vs in d["activity_level"].items()
            },
            app_level={ContextualFeature(v) for v in d["app_level"]},
            rotatable=set(d["rotatable"]),
        )


def load_app_ir(document: bytes | str) -> AppIR:
    """Parse and validate an app-IR JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}", "$")
    if not isinstance(doc, dict):
        raise ValidationError("top level must be an object", "$")
    for key in ("package", "methods", "call_edges", "activity_entries", "manifest"):
        if key not in doc:
            raise ValidationError("missing required field", f"$.{key}")

    methods = []
    for i, entry in enumerate(doc["methods"]):
        path = f"$.methods[{i}]"
        if not isinstance(entry, dict) or "id" not in entry:
            raise ValidationError("method needs an id", path)
        calls = []
        for j, call in enumerate(entry.get("api_calls", [])):
            try:
                feature = ContextualFeature(call["feature"])
            except (KeyError, ValueError, TypeError):
                raise ValidationError("api call needs a known feature", f"{path}.api_calls[{j}]")
            if feature == ContextualFeature.ROTATION:
                raise ValidationError(
                    "rotation is driven by the manifest, not API call sites",
                    f"{path}.api_calls[{j}].feature",
                )
            calls.append(ApiCall(feature=feature, api=call.get("api", "")))
        methods.append(IrMethod(id=entry["id"], owner=entry.get("owner", ""), api_calls=tuple(calls)))
    ids = {m.id for m in methods}
    if len(ids) != len(methods):
        raise ValidationError("duplicate method ids", "$.methods")

    edges = []
    for i, edge in enumerate(doc["call_edges"]):
        path = f"$.call_edges[{i}]"
        if not isinstance(edge, list) or len(edge) != 2:
            raise ValidationError("edge must be a [caller, callee] pair", path)
        caller, callee = edge
        if caller not in ids:
            raise ValidationError(f"unknown caller {caller!r}", f"{path}[0]")
        if callee not in ids:
            raise ValidationError(f"unknown callee {callee!r}", f"{path}[1]")
        edges.append((caller, callee))

    manifest = doc["manifest"]
    if not isinstance(manifest, dict) or "activities" not in manifest:
        raise ValidationError("manifest needs an activities list", "$.manifest")
    manifest_activities = []
    for i, entry in enumerate(manifest["activities"]):
        path = f"$.manifest.activities[{i}]"
        if not isinstance(entry, dict) or "name" not in entry:
            raise ValidationError("manifest activity needs a name", path)
        manifest_activities.append((entry["name"], bool(entry.get("rotatable", False))))
    manifest_names = {name for name, _ in manifest_activities}

    entries: dict[str, tuple[str, ...]] = {}
    for activity, entry_ids in doc["activity_entries"].items():
        path = f"$.activity_entries.{activity}"
        if activity not in manifest_names:
            raise ValidationError(f"activity {activity!r} missing from manifest", path)
        for mid in entry_ids:
            if mid not in ids:
                raise ValidationError(f"unknown entry method {mid!r}", path)
        entries[activity] = tuple(entry_ids)

    return AppIR(
        package=doc["package"],
        methods=tuple(methods),
        call_edges=tuple(edges),
        activity_entries=entries,
        manifest_activities=tuple(manifest_activities),
    )


def extract_feature_map(ir: AppIR) -> FeatureMap:
    """Classify every API call site as activity-level or app-level.

    Reachability runs over the reversed call graph from each call site toward
    activity entry methods; a visited set makes cycles harmless.
    """
    reverse: dict[str, list[str]] = defaultdict(list)
    for caller, callee in ir.call_edges:
        reverse[callee].append(caller)

    entry_activities: dict[str, list[str]] = defaultdict(list)
    for activity, entry_ids in ir.activity_entries.items():
        for mid in entry_ids:
            entry_activities[mid].append(activity)

    out = FeatureMap(
        activity_level={name: set() for name, _ in ir.manifest_activities},
        rotatable={name for name, rotatable in ir.manifest_activities if rotatable},
    )

    for method in ir.methods:
        if not method.api_calls:
            continue
        # all methods that can reach this one, itself included
        seen = {method.id}
        frontier = [method.id]
        while frontier:
            current = frontier.pop()
            for caller in reverse[current]:
                if caller not in seen:
                    seen.add(caller)
                    frontier.append(caller)
        activities = sorted({a for mid in seen for a in entry_activities.get(mid, ())})
        for call in method.api_calls:
            if activities:
                for activity in activities:
                    out.activity_level.setdefault(activity, set()).add(call.feature)
            else:
                out.app_level.add(call.feature)
    return out


def features_for_screen(feature_map: FeatureMap, activity: str) -> set[ContextualFeature]:
    """Features to exercise on a screen: its activity's plus all app-level ones."""
    if activity not in feature_map.activity_level:
        log.warning("activity %r not in feature map; using app-level features only", activity)
    return set(feature_map.activity_level.get(activity, set())) | set(feature_map.app_level)
