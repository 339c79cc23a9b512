"""Brute-force recomputation of probe labels, coded separately from
probes.py so the two can check each other.

Everything here is scalar Python math over raw pose values: visibility
is a cosine cone test instead of wrapped bearings, angles wrap by
iteration instead of modulo, means are plain sums.  The label
*contracts* (half-open class bounds, epsilon exclusion, 50% visibility
quorum) are the same by construction; the arithmetic route is not.
"""

from __future__ import annotations

import math

from .simulation import CAMERA_ID, CameraPolicy, FrameLog
from .model import EntityKind
from .scheduling import EventTimeline
from .probes import ClipSpec, ProbeConfig

_COMPASS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")


def _wrap(deg: float) -> float:
    while deg > 180.0:
        deg -= 360.0
    while deg <= -180.0:
        deg += 360.0
    return deg


def _pos(log: FrameLog, frame: int, idx: int):
    p = log.positions[frame, idx]
    return float(p[0]), float(p[1]), float(p[2])


def _visible(log: FrameLog, policy: CameraPolicy, frame: int, idx: int) -> bool:
    cam = log.index_of(CAMERA_ID)
    if idx == cam:
        return False
    cx, cy, cz = _pos(log, frame, cam)
    ex, ey, ez = _pos(log, frame, idx)
    dx, dy, dz = ex - cx, ey - cy, ez - cz
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist > policy.max_range_m:
        return False
    yaw = math.radians(float(log.yaws[frame, cam]))
    fx, fy = math.sin(yaw), math.cos(yaw)
    horiz = math.hypot(dx, dy)
    if horiz == 0.0:
        return True
    cos_angle = (dx * fx + dy * fy) / horiz
    cos_angle = max(-1.0, min(1.0, cos_angle))
    return math.degrees(math.acos(cos_angle)) <= policy.fov_deg / 2.0


def _compass_of(bearing: float) -> str:
    shifted = bearing % 360.0
    k = int((shifted + 22.5) // 45.0) % 8
    return _COMPASS[k]


def _bucket(value: float, lo: float, hi: float, names) -> str:
    if value < lo:
        return names[0]
    if value < hi:
        return names[1]
    return names[2]


def oracle_scene(clip: ClipSpec, log: FrameLog, timeline: EventTimeline,
                 cfg: ProbeConfig, policy: CameraPolicy) -> dict:
    actor_cols = [i for i, k in enumerate(log.entity_kinds)
                  if k is EntityKind.ACTOR]
    quorum = 0
    for idx in actor_cols:
        hits = sum(1 for f in clip.frame_indices if _visible(log, policy, f, idx))
        if hits >= math.ceil(len(clip.frame_indices) / 2):
            quorum += 1
    actor_count = min(5, max(1, quorum))

    first, last = clip.frame_indices[0], clip.frame_indices[-1]
    boundary = False
    for event_id in timeline.intervals:
        if event_id == clip.event_id:
            continue
        s, e = timeline.intervals[event_id]
        if (first < s < last) or (first < e < last):
            boundary = True

    motion = False
    for idx in actor_cols:
        x0, y0, z0 = _pos(log, first, idx)
        x1, y1, z1 = _pos(log, last, idx)
        d = math.sqrt((x1 - x0) ** 2 + (y1 - y0) ** 2 + (z1 - z0) ** 2)
        if d > cfg.motion_threshold_m:
            motion = True
    return {"actor_count": actor_count, "event_boundary": boundary,
            "motion_presence": motion}


def _camera_distance(log: FrameLog, frame: int, idx: int) -> float:
    cam = log.index_of(CAMERA_ID)
    cx, cy, cz = _pos(log, frame, cam)
    ex, ey, ez = _pos(log, frame, idx)
    return math.sqrt((ex - cx) ** 2 + (ey - cy) ** 2 + (ez - cz) ** 2)


def _camera_azimuth(log: FrameLog, frame: int, idx: int) -> float:
    cam = log.index_of(CAMERA_ID)
    cx, cy, _ = _pos(log, frame, cam)
    ex, ey, _ = _pos(log, frame, idx)
    bearing = math.degrees(math.atan2(ex - cx, ey - cy))
    return _wrap(float(log.yaws[frame, cam]) - bearing)


def oracle_entity(clip: ClipSpec, entity_id: int, log: FrameLog,
                  cfg: ProbeConfig, policy: CameraPolicy) -> dict:
    idx = log.index_of(entity_id)
    presence = any(_visible(log, policy, f, idx) for f in clip.frame_indices)

    dists = [_camera_distance(log, f, idx) for f in clip.frame_indices]
    mean_d = sum(dists) / len(dists)
    camera_distance = _bucket(mean_d, cfg.camera_dist_bounds_m[0],
                              cfg.camera_dist_bounds_m[1],
                              ("near", "medium", "far"))

    az0 = _camera_azimuth(log, clip.frame_indices[0], idx)
    az1 = _camera_azimuth(log, clip.frame_indices[-1], idx)
    d_az = _wrap(az1 - az0)
    if abs(d_az) < cfg.ambiguity_eps_deg:
        angle_change = None
    else:
        angle_change = "left" if d_az > 0 else "right"

    d_d = dists[-1] - dists[0]
    if abs(d_d) < cfg.ambiguity_eps_m:
        approach_recede = None
    else:
        approach_recede = "approach" if d_d < 0 else "recede"

    return {"entity_id": entity_id, "entity_presence": presence,
            "camera_distance": camera_distance, "angle_change": angle_change,
            "approach_recede": approach_recede}


def oracle_pair(clip: ClipSpec, a: int, b: int, log: FrameLog,
                cfg: ProbeConfig) -> dict:
    ia, ib = log.index_of(a), log.index_of(b)
    cam = log.index_of(CAMERA_ID)
    da = [_camera_distance(log, f, ia) for f in clip.frame_indices]
    db = [_camera_distance(log, f, ib) for f in clip.frame_indices]
    dpair = []
    sx = sy = 0.0
    for f in clip.frame_indices:
        ax, ay, az = _pos(log, f, ia)
        bx, by, bz = _pos(log, f, ib)
        dpair.append(math.sqrt((bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2))
        world = math.atan2(bx - ax, by - ay)
        cam_frame = world - math.radians(float(log.yaws[f, cam]))
        sx += math.sin(cam_frame)
        sy += math.cos(cam_frame)
    mean_dir = math.degrees(math.atan2(sx, sy))

    delta = dpair[-1] - dpair[0]
    if delta < -cfg.ambiguity_eps_m:
        relative_motion = "converging"
    elif delta > cfg.ambiguity_eps_m:
        relative_motion = "diverging"
    else:
        relative_motion = None

    return {
        "a": a,
        "b": b,
        "depth_order": (sum(da) / len(da)) < (sum(db) / len(db)),
        "pair_direction": _compass_of(mean_dir),
        "pair_distance": _bucket(sum(dpair) / len(dpair),
                                 cfg.pair_dist_bounds_m[0],
                                 cfg.pair_dist_bounds_m[1],
                                 ("close", "medium", "far")),
        "relative_motion": relative_motion,
    }


def oracle_clip(clip: ClipSpec, log: FrameLog, timeline: EventTimeline,
                cfg: ProbeConfig, policy: CameraPolicy | None = None) -> dict:
    policy = policy or CameraPolicy()
    entity_ids = sorted(e for e, k in zip(log.entity_ids, log.entity_kinds)
                        if k in (EntityKind.ACTOR, EntityKind.OBJECT))
    return {
        "clip_id": clip.clip_id,
        "scene": oracle_scene(clip, log, timeline, cfg, policy),
        "entities": [oracle_entity(clip, e, log, cfg, policy)
                     for e in entity_ids],
        "pairs": [oracle_pair(clip, a, b, log, cfg)
                  for i, a in enumerate(entity_ids) for b in entity_ids[i + 1:]],
    }
