"""Parsing and serialization of graph, registry and timeline documents.

All documents are UTF-8 JSON with a format_version field.  Parsers
resolve every id reference and re-check structural invariants so a
hand-edited document cannot smuggle an inconsistent story into the
pipeline.  Serialization is deterministic: stable key order, stable
float formatting via json's repr, no timestamps.
"""

from __future__ import annotations

import json
from typing import Any

from .allen import Coarse, RelationSet
from .errors import DanglingReferenceError, DocumentSyntaxError, InvariantError, UnknownActionInTransition
from .model import (
    ActionCategory,
    ActionSpec,
    Actor,
    CapabilityRegistry,
    EntityId,
    EntityKind,
    EpisodeSpec,
    Event,
    EventKind,
    Gender,
    GestGraph,
    ObjectEntity,
    PoiSpec,
    RegionSpec,
    TemporalRelation,
)
from .scheduling import EventTimeline

FORMAT_VERSION = 1


def _decode(data: bytes, what: str) -> Any:
    try:
        return json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DocumentSyntaxError(f"not valid JSON for a {what} document: {exc}") from None


def _get(obj: dict, key: str, kind: type | tuple, loc: str):
    if not isinstance(obj, dict):
        raise DocumentSyntaxError("expected an object", loc)
    if key not in obj:
        raise DocumentSyntaxError(f"missing field {key!r}", loc)
    val = obj[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise DocumentSyntaxError(f"field {key!r} has wrong type", loc)
    return val


def _check_version(doc: dict, what: str):
    version = _get(doc, "format_version", int, what)
    if version != FORMAT_VERSION:
        raise DocumentSyntaxError(f"unsupported format_version {version}", what)


def _vec3(val, loc: str) -> tuple[float, float, float]:
    if not (isinstance(val, list) and len(val) == 3
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise DocumentSyntaxError("expected a 3-element number list", loc)
    return (float(val[0]), float(val[1]), float(val[2]))


def _enum(cls, val, loc: str):
    try:
        return cls(val)
    except ValueError:
        raise DocumentSyntaxError(
            f"{val!r} is not one of {[m.value for m in cls]}", loc
        ) from None


# ---------------------------------------------------------------- graphs

def serialize_graph(graph: GestGraph) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "seed": graph.seed,
        "region_plan": list(graph.region_plan),
        "actors": [
            {"id": a.id.id, "name": a.name, "gender": a.gender.value, "model": a.model}
            for a in graph.actors
        ],
        "objects": [
            {
                "id": o.id.id,
                "type_key": o.type_key,
                "owner": o.owner.id if o.owner else None,
                "home_poi": o.home_poi,
            }
            for o in graph.objects
        ],
        "events": [
            {
                "event_id": e.event_id,
                "actor": e.actor.id,
                "action": e.action,
                "patient": e.patient.id if e.patient else None,
                "poi": e.poi,
                "duration_s": e.duration_s,
                "kind": e.kind.value,
            }
            for e in graph.events
        ],
        "relations": [
            {
                "source": r.source,
                "target": r.target,
                "coarse": r.coarse.value,
                "allen": r.allen_set.codes().split(),
            }
            for r in graph.relations
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_graph(data: bytes) -> GestGraph:
    doc = _decode(data, "graph")
    _check_version(doc, "graph")

    seed = _get(doc, "seed", int, "seed")
    region_plan = _get(doc, "region_plan", list, "region_plan")
    if not all(isinstance(r, str) for r in region_plan):
        raise DocumentSyntaxError("region keys must be strings", "region_plan")

    actors = []
    actor_ids: dict[int, EntityId] = {}
    for i, obj in enumerate(_get(doc, "actors", list, "actors")):
        loc = f"actors[{i}]"
        aid = _get(obj, "id", int, loc)
        if aid <= 0:
            raise InvariantError("actor ids must be positive (0 is the camera)", loc)
        if aid in actor_ids:
            raise InvariantError(f"duplicate entity id {aid}", loc)
        eid = EntityId(aid, EntityKind.ACTOR)
        actor_ids[aid] = eid
        actors.append(
            Actor(
                eid,
                _get(obj, "name", str, loc),
                _enum(Gender, _get(obj, "gender", str, loc), loc),
                _get(obj, "model", str, loc),
            )
        )

    objects = []
    object_ids: dict[int, EntityId] = {}
    for i, obj in enumerate(_get(doc, "objects", list, "objects")):
        loc = f"objects[{i}]"
        oid = _get(obj, "id", int, loc)
        if oid <= 0:
            raise InvariantError("object ids must be positive (0 is the camera)", loc)
        if oid in actor_ids or oid in object_ids:
            raise InvariantError(f"duplicate entity id {oid}", loc)
        eid = EntityId(oid, EntityKind.OBJECT)
        object_ids[oid] = eid
        owner = obj.get("owner")
        if owner is not None:
            if not isinstance(owner, int) or isinstance(owner, bool):
                raise DocumentSyntaxError("field 'owner' has wrong type", loc)
            if owner not in actor_ids:
                raise DanglingReferenceError(f"owner {owner} is not a declared actor", loc)
            owner = actor_ids[owner]
        objects.append(
            ObjectEntity(eid, _get(obj, "type_key", str, loc), owner,
                         _get(obj, "home_poi", str, loc))
        )

    events = []
    event_ids: set[int] = set()
    for i, obj in enumerate(_get(doc, "events", list, "events")):
        loc = f"events[{i}]"
        ev_id = _get(obj, "event_id", int, loc)
        if ev_id in event_ids:
            raise InvariantError(f"duplicate event_id {ev_id}", loc)
        event_ids.add(ev_id)
        actor_ref = _get(obj, "actor", int, loc)
        if actor_ref not in actor_ids:
            raise DanglingReferenceError(f"actor {actor_ref} is not declared", loc)
        patient = obj.get("patient")
        if patient is not None:
            if not isinstance(patient, int) or isinstance(patient, bool):
                raise DocumentSyntaxError("field 'patient' has wrong type", loc)
            if patient in actor_ids:
                patient = actor_ids[patient]
            elif patient in object_ids:
                patient = object_ids[patient]
            else:
                raise DanglingReferenceError(f"patient {patient} is not declared", loc)
        duration = _get(obj, "duration_s", float, loc)
        if duration <= 0:
            raise InvariantError("duration_s must be positive", loc)
        kind = _enum(EventKind, _get(obj, "kind", str, loc), loc)
        if kind in (EventKind.INTERACTION, EventKind.EXCHANGE):
            if patient is None or patient.kind is not EntityKind.ACTOR:
                raise InvariantError(f"{kind.value} events need a second-actor patient", loc)
        events.append(
            Event(ev_id, actor_ids[actor_ref], _get(obj, "action", str, loc),
                  patient, _get(obj, "poi", str, loc), duration, kind)
        )

    relations = []
    for i, obj in enumerate(_get(doc, "relations", list, "relations")):
        loc = f"relations[{i}]"
        source = _get(obj, "source", int, loc)
        target = _get(obj, "target", int, loc)
        for ref in (source, target):
            if ref not in event_ids:
                raise DanglingReferenceError(f"event {ref} is not declared", loc)
        if source == target:
            raise InvariantError("relation endpoints must differ", loc)
        codes = _get(obj, "allen", list, loc)
        try:
            allen_set = RelationSet.from_codes(" ".join(codes))
        except (KeyError, TypeError, AttributeError):
            raise DocumentSyntaxError("bad allen relation code list", loc) from None
        if not allen_set:
            raise InvariantError("allen relation set must be nonempty", loc)
        relations.append(
            TemporalRelation(
                source, target, _enum(Coarse, _get(obj, "coarse", str, loc), loc), allen_set
            )
        )

    return GestGraph(
        actors=tuple(actors),
        objects=tuple(objects),
        events=tuple(events),
        relations=tuple(relations),
        region_plan=tuple(region_plan),
        seed=seed,
    )


# -------------------------------------------------------------- registry

def serialize_registry(reg: CapabilityRegistry) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "actor_models": list(reg.actor_models),
        "object_types": list(reg.object_types),
        "actions": {
            key: {
                "category": spec.category.value,
                "duration_range_s": list(spec.duration_range_s),
                "requires_object": spec.requires_object,
                "is_movement_only": spec.is_movement_only,
                "verb_phrase": spec.verb_phrase,
            }
            for key, spec in sorted(reg.actions.items())
        },
        "episodes": [
            {
                "key": ep.key,
                "category": ep.category,
                "regions": [
                    {
                        "key": region.key,
                        "name": region.name,
                        "bounds": [list(region.bounds[0]), list(region.bounds[1])],
                        "pois": [
                            {
                                "key": poi.key,
                                "position": list(poi.position),
                                "valid_actions": list(poi.valid_actions),
                                "transitions": {
                                    k: list(v) for k, v in sorted(poi.transitions.items())
                                },
                                "object_slots": list(poi.object_slots),
                            }
                            for poi in region.pois
                        ],
                    }
                    for region in ep.regions
                ],
            }
            for ep in reg.episodes
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_registry(data: bytes) -> CapabilityRegistry:
    doc = _decode(data, "registry")
    _check_version(doc, "registry")

    actor_models = tuple(_get(doc, "actor_models", list, "actor_models"))
    object_types = tuple(_get(doc, "object_types", list, "object_types"))
    if not actor_models:
        raise InvariantError("at least one actor model is required", "actor_models")

    actions: dict[str, ActionSpec] = {}
    for key, obj in _get(doc, "actions", dict, "actions").items():
        loc = f"actions[{key!r}]"
        rng = _get(obj, "duration_range_s", list, loc)
        if len(rng) != 2:
            raise DocumentSyntaxError("duration_range_s must be [min, max]", loc)
        try:
            actions[key] = ActionSpec(
                key=key,
                category=_enum(ActionCategory, _get(obj, "category", str, loc), loc),
                duration_range_s=(float(rng[0]), float(rng[1])),
                requires_object=_get(obj, "requires_object", bool, loc),
                is_movement_only=_get(obj, "is_movement_only", bool, loc),
                verb_phrase=_get(obj, "verb_phrase", str, loc),
            )
        except ValueError as exc:
            raise InvariantError(str(exc), loc) from None
    if not actions:
        raise InvariantError("at least one action is required", "actions")

    episodes = []
    region_keys: set[str] = set()
    poi_keys: set[str] = set()
    for i, ep_obj in enumerate(_get(doc, "episodes", list, "episodes")):
        ep_loc = f"episodes[{i}]"
        regions = []
        region_list = _get(ep_obj, "regions", list, ep_loc)
        if not region_list:
            raise InvariantError("episode has no regions", ep_loc)
        for j, r_obj in enumerate(region_list):
            r_loc = f"{ep_loc}.regions[{j}]"
            bounds_raw = _get(r_obj, "bounds", list, r_loc)
            if len(bounds_raw) != 2:
                raise DocumentSyntaxError("bounds must be [min_corner, max_corner]", r_loc)
            lo = _vec3(bounds_raw[0], r_loc)
            hi = _vec3(bounds_raw[1], r_loc)
            if any(a > b for a, b in zip(lo, hi)):
                raise InvariantError("bounds corners are inverted", r_loc)
            pois = []
            poi_list = _get(r_obj, "pois", list, r_loc)
            if not poi_list:
                raise InvariantError("region has no POIs", r_loc)
            for k, p_obj in enumerate(poi_list):
                p_loc = f"{r_loc}.pois[{k}]"
                position = _vec3(_get(p_obj, "position", list, p_loc), p_loc)
                if not all(lo[c] <= position[c] <= hi[c] for c in range(3)):
                    raise InvariantError("POI position outside region bounds", p_loc)
                valid_actions = tuple(_get(p_obj, "valid_actions", list, p_loc))
                transitions_raw = _get(p_obj, "transitions", dict, p_loc)
                for act in valid_actions:
                    if act not in actions:
                        raise UnknownActionInTransition(
                            f"POI {p_obj.get('key')!r} lists unknown action {act!r}"
                        )
                transitions = {}
                for act, nexts in transitions_raw.items():
                    if act not in actions:
                        raise UnknownActionInTransition(
                            f"transition source {act!r} at POI {p_obj.get('key')!r} "
                            "is not a declared action"
                        )
                    for nxt in nexts:
                        if nxt not in actions:
                            raise UnknownActionInTransition(
                                f"transition {act!r} -> {nxt!r} at POI "
                                f"{p_obj.get('key')!r} names an undeclared action"
                            )
                    transitions[act] = tuple(nexts)
                poi_key = _get(p_obj, "key", str, p_loc)
                if poi_key in poi_keys:
                    raise InvariantError(f"duplicate POI key {poi_key!r}", p_loc)
                poi_keys.add(poi_key)
                pois.append(
                    PoiSpec(poi_key, position, valid_actions, transitions,
                            tuple(_get(p_obj, "object_slots", list, p_loc)))
                )
            region_key = _get(r_obj, "key", str, r_loc)
            if region_key in region_keys:
                raise InvariantError(f"duplicate region key {region_key!r}", r_loc)
            region_keys.add(region_key)
            regions.append(
                RegionSpec(region_key, _get(r_obj, "name", str, r_loc), (lo, hi),
                           tuple(pois))
            )
        episodes.append(
            EpisodeSpec(_get(ep_obj, "key", str, ep_loc),
                        _get(ep_obj, "category", str, ep_loc), tuple(regions))
        )
    if not episodes:
        raise InvariantError("registry declares no episodes", "episodes")

    return CapabilityRegistry(
        episodes=tuple(episodes),
        actor_models=actor_models,
        object_types=object_types,
        actions=actions,
    )


# -------------------------------------------------------------- timeline

def serialize_timeline(timeline: EventTimeline) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "fps": timeline.fps,
        "intervals": [
            [eid, s, e] for eid, (s, e) in sorted(timeline.intervals.items())
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_timeline(data: bytes) -> EventTimeline:
    doc = _decode(data, "timeline")
    _check_version(doc, "timeline")
    fps = _get(doc, "fps", int, "fps")
    if fps <= 0:
        raise InvariantError("fps must be positive", "fps")
    intervals: dict[int, tuple[int, int]] = {}
    for i, row in enumerate(_get(doc, "intervals", list, "intervals")):
        loc = f"intervals[{i}]"
        if not (isinstance(row, list) and len(row) == 3
                and all(isinstance(v, int) and not isinstance(v, bool) for v in row)):
            raise DocumentSyntaxError("expected [event_id, start, end]", loc)
        eid, start, end = row
        if eid in intervals:
            raise InvariantError(f"duplicate event_id {eid}", loc)
        if start < 0 or end <= start:
            raise InvariantError("need 0 <= start < end", loc)
        intervals[eid] = (start, end)
    return EventTimeline(intervals=intervals, fps=fps)
