"""Kinematic execution of a scheduled story in a concrete 3D world.

validate() checks a graph against the registry and returns issue
records.  ground() places actors (jittered around their first POI),
binds unowned objects to POI slots and initializes the camera.
insert_movements() splices walk events wherever an actor's next event
happens at a different POI.  simulate() plays the timeline out frame by
frame: linear interpolation for movements, held poses for stationary
actions, objects following their owner when carried, and an
exponentially smoothed tracking camera.

Coordinate conventions: +Y is North, +X is East, z is up; yaw is a
compass heading in degrees (0 = North, 90 = East).  All motion is
collision-free and deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import NoFreeSlot, NoValidAction
from .model import (
    CAMERA_ID,
    CapabilityRegistry,
    EntityKind,
    Event,
    EventKind,
    GestGraph,
)
from .scheduling import EventTimeline, duration_frames

CAMERA_SETTLE_FRAMES = 25
# carried objects ride at the owner's side: right/forward/up in meters
CARRY_OFFSET = (0.3, 0.2, 1.0)
SLOT_RING_RADIUS = 0.6
STAND_JITTER_MAX = 0.5


@dataclass(frozen=True)
class CameraPolicy:
    mode: str = "tracking"
    offset: tuple[float, float, float] = (0.0, -6.0, 3.0)
    smoothing: float = 0.1
    fov_deg: float = 90.0
    max_range_m: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.smoothing <= 1.0:
            raise ValueError("smoothing must be in (0, 1]")


@dataclass
class EntityState:
    position: tuple[float, float, float]
    yaw: float
    region: str


@dataclass
class World:
    entities: dict[int, EntityState]
    fps: int = 25
    walk_speed: float = 1.4
    camera_policy: CameraPolicy = field(default_factory=CameraPolicy)
    # deterministic standing spot of each (actor, poi) pair
    stand: dict[tuple[int, str], tuple[float, float, float]] = field(default_factory=dict)
    # slot index of each slot-bound (unowned) object
    slot_of_object: dict[int, int] = field(default_factory=dict)
    # geometry snapshot so simulate() does not need the registry
    poi_position: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    poi_region: dict[str, str] = field(default_factory=dict)

    def stand_position(self, actor_id: int, poi_key: str) -> tuple[float, float, float]:
        return self.stand[actor_id, poi_key]


@dataclass
class FrameLog:
    positions: np.ndarray  # (frames, entities, 3) float64
    yaws: np.ndarray  # (frames, entities) float64
    fps: int
    entity_ids: tuple[int, ...]
    entity_kinds: tuple[EntityKind, ...]
    entity_names: tuple[str, ...]

    def __post_init__(self):
        self._index = {eid: i for i, eid in enumerate(self.entity_ids)}

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def entity_count(self) -> int:
        return self.positions.shape[1]

    def index_of(self, entity_id: int) -> int:
        return self._index[entity_id]


def bearing_deg(dx: float, dy: float) -> float:
    """Compass bearing of the horizontal vector (dx, dy); 0 = North."""
    return math.degrees(math.atan2(dx, dy))


def wrap_signed(deg: float) -> float:
    """Wrap an angle into (-180, 180]."""
    w = deg % 360.0
    return w - 360.0 if w > 180.0 else w


# ------------------------------------------------------------- validate

def validate(graph: GestGraph, registry: CapabilityRegistry) -> list[dict]:
    """Semantic issues as {code, event_id, message} records; [] = ok."""
    issues: list[dict] = []

    def flag(code: str, event_id, message: str):
        issues.append({"code": code, "event_id": event_id, "message": message})

    plan_ok = True
    episodes_seen = set()
    for key in graph.region_plan:
        if not registry.has_region(key):
            flag("UnknownRegion", None, f"region_plan names unknown region {key!r}")
            plan_ok = False
        else:
            episodes_seen.add(registry.episode_of_region(key))
    if plan_ok and len(episodes_seen) > 1:
        flag("UnknownRegion", None,
             f"region_plan spans multiple episodes: {sorted(episodes_seen)}")
    plan_set = set(graph.region_plan)

    object_ids = {o.id.id: o for o in graph.objects}
    for obj in graph.objects:
        if not registry.has_poi(obj.home_poi):
            flag("MissingObject", None,
                 f"object {obj.id.id} homed at unknown POI {obj.home_poi!r}")
        elif obj.owner is None:
            slots = registry.poi(obj.home_poi).object_slots
            if obj.type_key not in slots:
                flag("MissingObject", None,
                     f"object {obj.id.id} ({obj.type_key}) has no matching slot "
                     f"at {obj.home_poi!r}")

    for ev in graph.events:
        spec = registry.actions.get(ev.action)
        if spec is None:
            flag("UnknownAction", ev.event_id, f"unknown action {ev.action!r}")
            continue
        if not registry.has_poi(ev.poi):
            flag("UnknownRegion", ev.event_id, f"unknown POI {ev.poi!r}")
            continue
        if plan_ok and registry.region_of_poi(ev.poi) not in plan_set:
            flag("UnknownRegion", ev.event_id,
                 f"POI {ev.poi!r} lies outside the region plan")
        if ev.kind is EventKind.MOVEMENT:
            if not spec.is_movement_only:
                flag("UnknownAction", ev.event_id,
                     f"movement event uses non-movement action {ev.action!r}")
            continue
        poi = registry.poi(ev.poi)
        if ev.action not in poi.valid_actions:
            flag("UnknownAction", ev.event_id,
                 f"action {ev.action!r} is not valid at {ev.poi!r}")
        # interaction/exchange patients are actors; the exchanged object
        # is tracked through ownership, so the slot rule binds only
        # plain-action events
        if spec.requires_object and ev.kind is EventKind.ACTION:
            if ev.patient is None or ev.patient.kind is not EntityKind.OBJECT:
                flag("MissingObject", ev.event_id,
                     f"action {ev.action!r} requires an object patient")
            elif ev.patient.id not in object_ids:
                flag("MissingObject", ev.event_id,
                     f"patient object {ev.patient.id} is not declared")

    # chain transition legality between consecutive plain actions at one POI
    for chain in graph.chains().values():
        for prev, nxt in zip(chain, chain[1:]):
            if prev.kind is not EventKind.ACTION or nxt.kind is not EventKind.ACTION:
                continue
            if prev.poi != nxt.poi or not registry.has_poi(prev.poi):
                continue
            transitions = registry.poi(prev.poi).transitions
            allowed = transitions.get(prev.action)
            if allowed is None or nxt.action not in allowed:
                flag("InvalidChainTransition", nxt.event_id,
                     f"{prev.action!r} -> {nxt.action!r} not allowed at {prev.poi!r}")

    for ev, partner in _paired_events(graph):
        if partner is None:
            flag("NotCoLocated", ev.event_id,
                 f"{ev.kind.value} event has no partner event")
        elif ev.poi != partner.poi:
            flag("NotCoLocated", ev.event_id,
                 f"pair split across POIs {ev.poi!r} / {partner.poi!r}")
    return issues


def _paired_events(graph: GestGraph):
    """Match interaction/exchange events into pairs by mutual patients.

    Yields (event, partner-or-None) once per pair, plus unmatched events.
    """
    paired = [e for e in graph.events
              if e.kind in (EventKind.INTERACTION, EventKind.EXCHANGE)]
    matched: dict[int, Event] = {}
    used: set[int] = set()
    for ev in paired:
        if ev.event_id in used:
            continue
        partner = None
        for cand in paired:
            if (cand.event_id != ev.event_id and cand.event_id not in used
                    and cand.kind is ev.kind
                    and ev.patient is not None and cand.patient is not None
                    and cand.actor.id == ev.patient.id
                    and cand.patient.id == ev.actor.id):
                partner = cand
                break
        used.add(ev.event_id)
        if partner is not None:
            used.add(partner.event_id)
            matched[ev.event_id] = partner
        yield ev, partner


def exchange_pairs(graph: GestGraph) -> list[tuple[Event, Event]]:
    """(giver event, receiver event) pairs; the giver is the lower id."""
    out = []
    for ev, partner in _paired_events(graph):
        if partner is not None and ev.kind is EventKind.EXCHANGE:
            out.append((ev, partner) if ev.event_id < partner.event_id else (partner, ev))
    return out


# --------------------------------------------------------------- ground

def ground(graph: GestGraph, registry: CapabilityRegistry, rng: random.Random,
           fps: int = 25, walk_speed: float = 1.4,
           camera: CameraPolicy | None = None) -> World:
    """Concrete initial world: jittered actor spots, slot-bound objects,
    camera at its converged tracking pose."""
    camera = camera or CameraPolicy()
    world = World(entities={}, fps=fps, walk_speed=walk_speed, camera_policy=camera)
    for region_key in graph.region_plan:
        for poi in registry.region(region_key).pois:
            world.poi_position[poi.key] = poi.position
            world.poi_region[poi.key] = region_key

    # jitter draws happen in a fixed, sorted order for determinism
    pairs = sorted({(ev.actor.id, ev.poi) for ev in graph.events})
    for actor_id, poi_key in pairs:
        poi = registry.poi(poi_key)
        if poi_key not in world.poi_position:
            world.poi_position[poi_key] = poi.position
            world.poi_region[poi_key] = registry.region_of_poi(poi_key)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        radius = STAND_JITTER_MAX * math.sqrt(rng.uniform(0.0, 1.0))
        world.stand[actor_id, poi_key] = (
            poi.position[0] + radius * math.sin(angle),
            poi.position[1] + radius * math.cos(angle),
            poi.position[2],
        )

    first_poi: dict[int, str] = {}
    for ev in graph.events:
        first_poi.setdefault(ev.actor.id, ev.poi)
    for actor in graph.actors:
        poi_key = first_poi.get(actor.id.id)
        if poi_key is None:
            # actor with no events idles at the plan's first region
            poi_key = registry.region(graph.region_plan[0]).pois[0].key
            if (actor.id.id, poi_key) not in world.stand:
                poi = registry.poi(poi_key)
                angle = rng.uniform(0.0, 2.0 * math.pi)
                radius = STAND_JITTER_MAX * math.sqrt(rng.uniform(0.0, 1.0))
                world.stand[actor.id.id, poi_key] = (
                    poi.position[0] + radius * math.sin(angle),
                    poi.position[1] + radius * math.cos(angle),
                    poi.position[2],
                )
            first_poi[actor.id.id] = poi_key
        pos = world.stand[actor.id.id, poi_key]
        poi = registry.poi(poi_key)
        yaw = _face(pos, poi.position)
        world.entities[actor.id.id] = EntityState(pos, yaw, registry.region_of_poi(poi_key))

    taken: dict[str, set[int]] = {}
    for obj in graph.objects:
        poi = registry.poi(obj.home_poi)
        if obj.owner is not None:
            owner_state = world.entities[obj.owner.id]
            pos = _carry_position(owner_state.position, owner_state.yaw)
            world.entities[obj.id.id] = EntityState(pos, owner_state.yaw,
                                                    owner_state.region)
            continue
        used = taken.setdefault(obj.home_poi, set())
        slot_index = next(
            (i for i, t in enumerate(poi.object_slots)
             if t == obj.type_key and i not in used),
            None,
        )
        if slot_index is None:
            raise NoFreeSlot(
                f"no free {obj.type_key!r} slot at {obj.home_poi!r} for object {obj.id.id}"
            )
        used.add(slot_index)
        world.slot_of_object[obj.id.id] = slot_index
        pos = slot_position(poi.position, slot_index, len(poi.object_slots))
        world.entities[obj.id.id] = EntityState(pos, 0.0, registry.region_of_poi(obj.home_poi))

    actor_positions = [world.entities[a.id.id].position for a in graph.actors]
    centroid = tuple(sum(c) / len(c) for c in zip(*actor_positions))
    cam_pos = tuple(c + o for c, o in zip(centroid, camera.offset))
    cam_yaw = _face(cam_pos, centroid)
    start_region = registry.region_of_poi(first_poi[graph.actors[0].id.id])
    world.entities[CAMERA_ID] = EntityState(cam_pos, cam_yaw, start_region)
    return world


def slot_position(poi_position, slot_index: int, slot_count: int):
    theta = 2.0 * math.pi * slot_index / max(slot_count, 1)
    return (
        poi_position[0] + SLOT_RING_RADIUS * math.sin(theta),
        poi_position[1] + SLOT_RING_RADIUS * math.cos(theta),
        poi_position[2],
    )


def _face(frm, to) -> float:
    dx = to[0] - frm[0]
    dy = to[1] - frm[1]
    if dx * dx + dy * dy < 1e-18:
        return 0.0
    return bearing_deg(dx, dy)


def _carry_position(owner_pos, owner_yaw_deg: float):
    th = math.radians(owner_yaw_deg)
    fwd = (math.sin(th), math.cos(th))
    right = (math.cos(th), -math.sin(th))
    return (
        owner_pos[0] + right[0] * CARRY_OFFSET[0] + fwd[0] * CARRY_OFFSET[1],
        owner_pos[1] + right[1] * CARRY_OFFSET[0] + fwd[1] * CARRY_OFFSET[1],
        owner_pos[2] + CARRY_OFFSET[2],
    )


# ------------------------------------------------------ insert movements

def movement_action_key(registry: CapabilityRegistry) -> str:
    movement = sorted(k for k, a in registry.actions.items() if a.is_movement_only)
    if not movement:
        raise NoValidAction("registry declares no movement-only action")
    return "walk_to" if "walk_to" in movement else movement[0]


def insert_movements(graph: GestGraph, world: World,
                     registry: CapabilityRegistry) -> GestGraph:
    """Splice a walk event before every event at a new POI.

    Movement duration is the straight-line distance at walking speed,
    rounded up to a whole frame count so the per-frame step never
    exceeds walk_speed / fps.
    """
    action = movement_action_key(registry)
    next_id = max((e.event_id for e in graph.events), default=-1) + 1
    current: dict[int, str] = {}
    out: list[Event] = []
    for ev in graph.events:
        prev = current.get(ev.actor.id)
        # an existing movement event is itself the relocation: idempotent
        if (ev.kind is not EventKind.MOVEMENT
                and prev is not None and prev != ev.poi):
            a = world.stand_position(ev.actor.id, prev)
            b = world.stand_position(ev.actor.id, ev.poi)
            dist = math.dist(a, b)
            frames = max(1, math.ceil(dist * world.fps / world.walk_speed - 1e-9))
            out.append(Event(next_id, ev.actor, action, None, ev.poi,
                             frames / world.fps, EventKind.MOVEMENT))
            next_id += 1
        out.append(ev)
        current[ev.actor.id] = ev.poi
    return GestGraph(
        actors=graph.actors,
        objects=graph.objects,
        events=tuple(out),
        relations=graph.relations,
        region_plan=graph.region_plan,
        seed=graph.seed,
    )


# -------------------------------------------------------------- simulate

def simulate(world: World, graph: GestGraph, timeline: EventTimeline) -> FrameLog:
    """Frame-by-frame poses for camera, actors and objects."""
    frames = timeline.makespan() + CAMERA_SETTLE_FRAMES
    actor_ids = [a.id.id for a in graph.actors]
    object_ids = [o.id.id for o in graph.objects]
    entity_ids = [CAMERA_ID] + actor_ids + object_ids
    index = {eid: i for i, eid in enumerate(entity_ids)}
    n = len(entity_ids)

    pos = np.zeros((frames, n, 3), dtype=np.float64)
    yaw = np.zeros((frames, n), dtype=np.float64)

    region_index = {key: i for i, key in enumerate(graph.region_plan)}
    actor_region = np.zeros((frames, len(actor_ids)), dtype=np.int16)
    active = np.zeros((frames, len(actor_ids)), dtype=bool)

    chains = graph.chains()
    for a_pos, actor_id in enumerate(actor_ids):
        idx = index[actor_id]
        chain = chains.get(actor_id, [])
        state = world.entities[actor_id]
        cur_pos = np.array(state.position)
        cur_yaw = state.yaw
        cur_region = region_index.get(state.region, 0)
        cursor = 0
        cur_poi = chain[0].poi if chain else None
        for ev in chain:
            start, end = timeline.interval(ev.event_id)
            if start > cursor:
                pos[cursor:start, idx] = cur_pos
                yaw[cursor:start, idx] = cur_yaw
                actor_region[cursor:start, a_pos] = cur_region
            active[start:end, a_pos] = True
            ev_region = region_index.get(world.poi_region[ev.poi], cur_region)
            if ev.kind is EventKind.MOVEMENT:
                frm = np.array(world.stand_position(actor_id, cur_poi))
                to = np.array(world.stand_position(actor_id, ev.poi))
                length = end - start
                alphas = (np.arange(1, length + 1) / length)[:, None]
                pos[start:end, idx] = frm + alphas * (to - frm)
                travel_yaw = _face(tuple(frm), tuple(to))
                yaw[start:end, idx] = travel_yaw
                cur_pos = to
                cur_yaw = travel_yaw
                cur_poi = ev.poi
            else:
                spot = np.array(world.stand_position(actor_id, ev.poi))
                pos[start:end, idx] = spot
                if (ev.kind in (EventKind.INTERACTION, EventKind.EXCHANGE)
                        and ev.patient is not None
                        and (ev.patient.id, ev.poi) in world.stand):
                    face_to = world.stand_position(ev.patient.id, ev.poi)
                else:
                    face_to = world.poi_position[ev.poi]
                ev_yaw = _face(tuple(spot), face_to)
                if ev_yaw == 0.0 and tuple(spot) == tuple(face_to):
                    ev_yaw = cur_yaw
                yaw[start:end, idx] = ev_yaw
                cur_pos = spot
                cur_yaw = ev_yaw
                cur_poi = ev.poi
            actor_region[start:end, a_pos] = ev_region
            cur_region = ev_region
            cursor = end
        if cursor < frames:
            pos[cursor:, idx] = cur_pos
            yaw[cursor:, idx] = cur_yaw
            actor_region[cursor:, a_pos] = cur_region

    _lay_objects(world, graph, timeline, pos, yaw, index)
    _run_camera(world, graph, pos, yaw, index, actor_ids, active, actor_region)

    names = {CAMERA_ID: "camera"}
    kinds = {CAMERA_ID: EntityKind.CAMERA}
    for a in graph.actors:
        names[a.id.id] = a.name
        kinds[a.id.id] = EntityKind.ACTOR
    for o in graph.objects:
        names[o.id.id] = o.type_key
        kinds[o.id.id] = EntityKind.OBJECT

    return FrameLog(
        positions=pos,
        yaws=yaw,
        fps=world.fps,
        entity_ids=tuple(entity_ids),
        entity_kinds=tuple(kinds[e] for e in entity_ids),
        entity_names=tuple(names[e] for e in entity_ids),
    )


def _lay_objects(world: World, graph: GestGraph, timeline: EventTimeline,
                 pos: np.ndarray, yaw: np.ndarray, index: dict[int, int]):
    frames = pos.shape[0]
    # ownership intervals per object: (start_frame, owner_id or None)
    spans: dict[int, list[tuple[int, int | None]]] = {
        o.id.id: [(0, o.owner.id if o.owner else None)] for o in graph.objects
    }
    owned_now: dict[int, list[int]] = {}
    for o in graph.objects:
        if o.owner is not None:
            owned_now.setdefault(o.owner.id, []).append(o.id.id)
    flips = sorted(
        ((timeline.end(g.event_id), g, r) for g, r in exchange_pairs(graph)),
        key=lambda t: (t[0], t[1].event_id),
    )
    for flip_frame, giver_ev, recv_ev in flips:
        giver = giver_ev.actor.id
        receiver = recv_ev.actor.id
        held = owned_now.get(giver)
        if not held:
            continue
        obj_id = held.pop(0)
        owned_now.setdefault(receiver, []).append(obj_id)
        spans[obj_id].append((flip_frame, receiver))

    for obj in graph.objects:
        idx = index[obj.id.id]
        obj_spans = spans[obj.id.id]
        for s_i, (start, owner) in enumerate(obj_spans):
            end = obj_spans[s_i + 1][0] if s_i + 1 < len(obj_spans) else frames
            if start >= end:
                continue
            if owner is None:
                pos[start:end, idx] = world.entities[obj.id.id].position
                yaw[start:end, idx] = 0.0
            else:
                o_idx = index[owner]
                th = np.radians(yaw[start:end, o_idx])
                sin, cos = np.sin(th), np.cos(th)
                dx = cos * CARRY_OFFSET[0] + sin * CARRY_OFFSET[1]
                dy = -sin * CARRY_OFFSET[0] + cos * CARRY_OFFSET[1]
                pos[start:end, idx, 0] = pos[start:end, o_idx, 0] + dx
                pos[start:end, idx, 1] = pos[start:end, o_idx, 1] + dy
                pos[start:end, idx, 2] = pos[start:end, o_idx, 2] + CARRY_OFFSET[2]
                yaw[start:end, idx] = yaw[start:end, o_idx]


def update_camera(cam_pos: np.ndarray, focus_positions: np.ndarray,
                  policy: CameraPolicy) -> tuple[np.ndarray, float]:
    """One tracking step: smooth toward the focus centroid plus offset,
    yaw facing the centroid.  Returns (new position, new yaw)."""
    centroid = np.asarray(focus_positions, dtype=np.float64).mean(axis=0)
    target = centroid + np.asarray(policy.offset)
    new_pos = cam_pos + policy.smoothing * (target - cam_pos)
    look = centroid - new_pos
    return new_pos, bearing_deg(look[0], look[1])


def _run_camera(world: World, graph: GestGraph, pos: np.ndarray, yaw: np.ndarray,
                index: dict[int, int], actor_ids: list[int], active: np.ndarray,
                actor_region: np.ndarray):
    policy = world.camera_policy
    frames = pos.shape[0]
    n_regions = max(len(graph.region_plan), 1)
    offset = np.array(policy.offset)
    actor_idx = np.array([index[a] for a in actor_ids])
    cam = index[CAMERA_ID]

    centroid = None
    for f in range(frames):
        act = active[f]
        if act.any():
            counts = np.bincount(actor_region[f, act], minlength=n_regions)
            focus_region = int(np.argmax(counts))
            members = act & (actor_region[f] == focus_region)
            centroid = pos[f, actor_idx[members]].mean(axis=0)
        elif centroid is None:
            centroid = pos[f, actor_idx].mean(axis=0)
        # else: idle frames hold the last focus centroid
        if f == 0:
            pos[0, cam] = centroid + offset
            look = centroid - pos[0, cam]
            yaw[0, cam] = bearing_deg(look[0], look[1])
        else:
            pos[f, cam], yaw[f, cam] = update_camera(
                pos[f - 1, cam], centroid[None, :], policy)


def visible_mask(log: FrameLog, policy: CameraPolicy) -> np.ndarray:
    """(frames, entities) frustum visibility from the camera: within
    range and inside the horizontal field of view; no occlusion."""
    cam = log.index_of(CAMERA_ID)
    rel = log.positions - log.positions[:, cam:cam + 1, :]
    dist = np.sqrt((rel * rel).sum(axis=2))
    bearing = np.degrees(np.arctan2(rel[:, :, 0], rel[:, :, 1]))
    off = (bearing - log.yaws[:, cam:cam + 1] + 180.0) % 360.0 - 180.0
    mask = (dist <= policy.max_range_m) & (np.abs(off) <= policy.fov_deg / 2.0)
    mask[:, cam] = False
    return mask
