"""Probe clips, ground-truth labels for the 11 spatiotemporal tasks,
story-level splits, and the event-aware hybrid frame sampler.

Clips take 16 frames at 4 fps from the start of any non-movement event
lasting at least 4 seconds.  Labels are pure functions of the frame log
and timeline.  Class bounds are half-open [low, high): a value exactly
at a bound belongs to the upper class.  Dynamic labels whose delta
falls inside the ambiguity epsilon are excluded (None) rather than
coin-flipped.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import EntityUnknown
from .model import EntityKind, EventKind, GestGraph
from .scheduling import EventTimeline
from .simulation import CAMERA_ID, CameraPolicy, FrameLog, visible_mask, wrap_signed
from .collectors import compass_bin, COMPASS_NAMES

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ProbeConfig:
    motion_threshold_m: float = 0.2
    clip_fps: int = 4
    clip_frames: int = 16
    min_event_s: float = 4.0
    camera_dist_bounds_m: tuple[float, float] = (3.0, 8.0)
    pair_dist_bounds_m: tuple[float, float] = (2.0, 6.0)
    ambiguity_eps_m: float = 0.1
    ambiguity_eps_deg: float = 2.0
    split_fracs: tuple[float, float, float] = (0.70, 0.15, 0.15)

    def __post_init__(self):
        if not self.camera_dist_bounds_m[0] < self.camera_dist_bounds_m[1]:
            raise ValueError("camera distance bounds must ascend")
        if not self.pair_dist_bounds_m[0] < self.pair_dist_bounds_m[1]:
            raise ValueError("pair distance bounds must ascend")
        if abs(sum(self.split_fracs) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.clip_frames < 1 or self.clip_fps < 1:
            raise ValueError("clip_frames and clip_fps must be positive")


@dataclass(frozen=True)
class HybridSampleConfig:
    max_frames: int = 64
    fill_fps: int = 1

    def __post_init__(self):
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.fill_fps < 1:
            raise ValueError("fill_fps must be >= 1")


@dataclass(frozen=True)
class ClipSpec:
    clip_id: str
    story_id: str
    event_id: int
    frame_indices: tuple[int, ...]
    split: str

    def __post_init__(self):
        if list(self.frame_indices) != sorted(set(self.frame_indices)):
            raise ValueError(f"clip {self.clip_id}: frames must strictly increase")


def clip_frame_indices(start: int, fps: int, cfg: ProbeConfig) -> tuple[int, ...]:
    step = fps / cfg.clip_fps
    return tuple(start + int(round(k * step)) for k in range(cfg.clip_frames))


def extract_story_clips(story_id: str, graph: GestGraph, timeline: EventTimeline,
                        movement_actions: set[str], cfg: ProbeConfig,
                        split: str) -> list[ClipSpec]:
    """Clips for one story; eligibility: non-movement action, >= 4 s."""
    min_frames = round(cfg.min_event_s * timeline.fps)
    out = []
    for ev in graph.events:
        if ev.kind is EventKind.MOVEMENT or ev.action in movement_actions:
            continue
        start, end = timeline.interval(ev.event_id)
        if end - start < min_frames:
            continue
        out.append(ClipSpec(
            clip_id=f"{story_id}-ev{ev.event_id:04d}",
            story_id=story_id,
            event_id=ev.event_id,
            frame_indices=clip_frame_indices(start, timeline.fps, cfg),
            split=split,
        ))
    return out


def split_stories(stories, cfg: ProbeConfig, seed: int) -> dict[str, str]:
    """Stratified story-level split: {story_id: train|val|test}.

    Within each category the shuffle is seeded independently, so the
    assignment is stable under story insertion order.
    """
    strata: dict[str, list[str]] = {}
    for story_id, category in stories:
        strata.setdefault(category, []).append(story_id)
    assignment: dict[str, str] = {}
    for category in sorted(strata):
        ids = sorted(strata[category])
        random.Random(f"{seed}|{category}").shuffle(ids)
        counts = _largest_remainder(len(ids), cfg.split_fracs)
        pos = 0
        for split, count in zip(SPLITS, counts):
            for sid in ids[pos:pos + count]:
                assignment[sid] = split
            pos += count
    return assignment


def _largest_remainder(n: int, fracs) -> list[int]:
    raw = [n * f for f in fracs]
    base = [int(x) for x in raw]
    short = n - sum(base)
    # distribute leftovers by descending fractional part, ties by order
    order = sorted(range(len(fracs)), key=lambda i: (base[i] - raw[i], i))
    for i in order[:short]:
        base[i] += 1
    return base


def _dist_class(value: float, bounds, names=("near", "medium", "far")) -> str:
    lo, hi = bounds
    if value < lo:
        return names[0]
    if value < hi:
        return names[1]
    return names[2]


def label_scene(clip: ClipSpec, log: FrameLog, timeline: EventTimeline,
                cfg: ProbeConfig, vis: np.ndarray | None = None,
                policy: CameraPolicy | None = None) -> dict:
    if vis is None:
        vis = visible_mask(log, policy or CameraPolicy())
    frames = np.array(clip.frame_indices)
    actor_cols = [i for i, k in enumerate(log.entity_kinds) if k is EntityKind.ACTOR]
    seen = vis[frames][:, actor_cols].sum(axis=0)
    count = int((seen * 2 >= len(frames)).sum())
    actor_count = min(max(count, 1), 5)

    first, last = clip.frame_indices[0], clip.frame_indices[-1]
    boundary = False
    for event_id, (s, e) in timeline.intervals.items():
        if event_id == clip.event_id:
            continue
        if first < s < last or first < e < last:
            boundary = True
            break

    moved = log.positions[last, actor_cols] - log.positions[first, actor_cols]
    motion = bool((np.linalg.norm(moved, axis=1) > cfg.motion_threshold_m).any())
    return {"actor_count": actor_count, "event_boundary": boundary,
            "motion_presence": motion}


def _camera_series(clip: ClipSpec, log: FrameLog, entity_id: int):
    """Per-clip-frame camera distance and camera-frame azimuth of one
    entity."""
    cam = log.index_of(CAMERA_ID)
    idx = log.index_of(entity_id)
    dists, azimuths = [], []
    for f in clip.frame_indices:
        rel = log.positions[f, idx] - log.positions[f, cam]
        d = float(np.sqrt((rel * rel).sum()))
        bearing = float(np.degrees(np.arctan2(rel[0], rel[1])))
        dists.append(d)
        azimuths.append(wrap_signed(float(log.yaws[f, cam]) - bearing))
    return dists, azimuths


def label_entity(clip: ClipSpec, entity_id: int, log: FrameLog, cfg: ProbeConfig,
                 vis: np.ndarray | None = None,
                 policy: CameraPolicy | None = None) -> dict:
    try:
        idx = log.index_of(entity_id)
    except KeyError:
        raise EntityUnknown(f"entity {entity_id} not in frame log") from None
    if vis is None:
        vis = visible_mask(log, policy or CameraPolicy())
    frames = np.array(clip.frame_indices)
    presence = bool(vis[frames, idx].any())

    dists, azimuths = _camera_series(clip, log, entity_id)
    camera_distance = _dist_class(float(np.mean(dists)), cfg.camera_dist_bounds_m)

    d_az = wrap_signed(azimuths[-1] - azimuths[0])
    angle_change = None
    if abs(d_az) >= cfg.ambiguity_eps_deg:
        angle_change = "left" if d_az > 0 else "right"

    d_d = dists[-1] - dists[0]
    approach_recede = None
    if abs(d_d) >= cfg.ambiguity_eps_m:
        approach_recede = "approach" if d_d < 0 else "recede"

    return {"entity_id": entity_id, "entity_presence": presence,
            "camera_distance": camera_distance, "angle_change": angle_change,
            "approach_recede": approach_recede}


def label_pair(clip: ClipSpec, a: int, b: int, log: FrameLog,
               cfg: ProbeConfig) -> dict:
    cam = log.index_of(CAMERA_ID)
    ia, ib = log.index_of(a), log.index_of(b)
    da, db, dpair = [], [], []
    sin_sum = cos_sum = 0.0
    for f in clip.frame_indices:
        pa = log.positions[f, ia]
        pb = log.positions[f, ib]
        pc = log.positions[f, cam]
        da.append(float(np.linalg.norm(pa - pc)))
        db.append(float(np.linalg.norm(pb - pc)))
        dpair.append(float(np.linalg.norm(pb - pa)))
        theta_w = np.arctan2(pb[0] - pa[0], pb[1] - pa[1])
        theta_c = theta_w - np.radians(log.yaws[f, cam])
        sin_sum += float(np.sin(theta_c))
        cos_sum += float(np.cos(theta_c))

    mean_dir = float(np.degrees(np.arctan2(sin_sum, cos_sum)))
    delta = dpair[-1] - dpair[0]
    relative_motion = None
    if delta < -cfg.ambiguity_eps_m:
        relative_motion = "converging"
    elif delta > cfg.ambiguity_eps_m:
        relative_motion = "diverging"

    return {
        "a": a,
        "b": b,
        "depth_order": bool(np.mean(da) < np.mean(db)),
        "pair_direction": COMPASS_NAMES[compass_bin(mean_dir)],
        "pair_distance": _dist_class(float(np.mean(dpair)), cfg.pair_dist_bounds_m,
                                     ("close", "medium", "far")),
        "relative_motion": relative_motion,
    }


def label_clip(clip: ClipSpec, log: FrameLog, timeline: EventTimeline,
               cfg: ProbeConfig, vis: np.ndarray | None = None,
               policy: CameraPolicy | None = None) -> dict:
    """All labels for one clip: scene, every actor/object entity, and
    every canonical (a < b) entity pair."""
    if vis is None:
        vis = visible_mask(log, policy or CameraPolicy())
    entity_ids = [e for e, k in zip(log.entity_ids, log.entity_kinds)
                  if k in (EntityKind.ACTOR, EntityKind.OBJECT)]
    entity_ids.sort()
    entities = [label_entity(clip, e, log, cfg, vis) for e in entity_ids]
    pairs = [label_pair(clip, a, b, log, cfg)
             for i, a in enumerate(entity_ids) for b in entity_ids[i + 1:]]
    return {
        "clip_id": clip.clip_id,
        "scene": label_scene(clip, log, timeline, cfg, vis),
        "entities": entities,
        "pairs": pairs,
    }


def hybrid_sample(graph: GestGraph, timeline: EventTimeline, frame_count: int,
                  cfg: HybridSampleConfig) -> list[int]:
    """Event-aware frame subset: every non-movement event's mid frame,
    topped up with evenly spaced 1 fps frames, capped at max_frames."""
    mids = sorted({(s + e) // 2
                   for ev in graph.events
                   if ev.kind is not EventKind.MOVEMENT
                   for s, e in [timeline.interval(ev.event_id)]})
    if len(mids) > cfg.max_frames:
        n = len(mids)
        return [mids[(i * n) // cfg.max_frames] for i in range(cfg.max_frames)]
    chosen = set(mids)
    stride = max(1, round(timeline.fps / cfg.fill_fps))
    candidates = [t for t in range(0, frame_count, stride) if t not in chosen]
    slots = cfg.max_frames - len(chosen)
    if len(candidates) > slots:
        n = len(candidates)
        candidates = [candidates[(i * n) // slots] for i in range(slots)] if slots else []
    return sorted(chosen.union(candidates))
