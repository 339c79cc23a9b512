"""End-to-end corpus assembly and verification.

One story directory holds graph.json, timeline.json, framelog.bin,
relations.bin, events.jsonl, text.txt and probes/{clips,labels}.jsonl.
The corpus root holds registry.json, manifest.json (per-file sha256)
and stats.json.  Every byte is a pure function of (master seed, config,
registry); story jobs can fan out to worker processes without changing
any output.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import binio
from .allen import relation_between
from .collectors import (collect_event_mappings, collect_story_relations,
                         compute_pair_relation, COMPASS_NAMES)
from .documents import (parse_graph, parse_registry, parse_timeline,
                        serialize_graph, serialize_registry, serialize_timeline)
from .errors import CorruptCorpus, StorysimError, ValidationFailure
from .model import CapabilityRegistry, EventKind
from .procgen import GenConfig, generate_story, story_seed
from .probes import (ClipSpec, HybridSampleConfig, ProbeConfig,
                     extract_story_clips, label_clip, split_stories)
from .probes_oracle import oracle_clip
from .scheduling import SchedulePolicy, duration_frames, schedule
from .simulation import (CameraPolicy, ground, insert_movements, simulate,
                         validate, visible_mask)
from .textgen import RefineConfig, proto_text, refine

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class CorpusConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    fps: int = 25
    walk_speed: float = 1.4
    camera: CameraPolicy = field(default_factory=CameraPolicy)
    policy: SchedulePolicy = field(default_factory=SchedulePolicy)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    hybrid: HybridSampleConfig = field(default_factory=HybridSampleConfig)
    jsonl_relations: bool = False
    refine: RefineConfig = field(default_factory=RefineConfig)


def _json_doc(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _jsonl(rows) -> bytes:
    return "".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in rows
    ).encode("utf-8")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def derived_rng(seed: int, tag: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def story_category(cfg: GenConfig, registry: CapabilityRegistry,
                   story_index: int) -> str:
    """Episode category of a story, replaying only the first draw."""
    from .procgen import select_episode, story_rng

    return select_episode(registry, story_rng(cfg.master_seed, story_index)).category


def build_story(cfg: CorpusConfig, registry: CapabilityRegistry, story_index: int):
    """Run the per-story pipeline in memory.

    Returns (graph with movements inserted, timeline, frame log).
    """
    graph = generate_story(cfg.gen, registry, story_index)
    issues = validate(graph, registry)
    if issues:
        raise ValidationFailure(issues)
    world = ground(graph, registry, derived_rng(graph.seed, "ground"),
                   fps=cfg.fps, walk_speed=cfg.walk_speed, camera=cfg.camera)
    graph = insert_movements(graph, world, registry)
    timeline = schedule(graph, registry, cfg.policy, cfg.fps)
    log = simulate(world, graph, timeline)
    return graph, timeline, log


def assemble_story(cfg: CorpusConfig, registry: CapabilityRegistry,
                   story_index: int, story_dir: Path, split: str) -> dict:
    """Emit all artifacts for one story; returns its manifest entry."""
    story_id = f"story_{story_index:05d}"
    entry = {
        "story_id": story_id,
        "index": story_index,
        "seed": story_seed(cfg.gen.master_seed, story_index),
        "category": story_category(cfg.gen, registry, story_index),
        "split": split,
        "files": {},
    }
    try:
        graph, timeline, log = build_story(cfg, registry, story_index)
    except StorysimError as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
        return entry

    story_dir.mkdir(parents=True, exist_ok=True)
    (story_dir / "probes").mkdir(exist_ok=True)
    files: dict[str, bytes] = {}

    files["graph.json"] = serialize_graph(graph)
    files["timeline.json"] = serialize_timeline(timeline)

    relations = collect_story_relations(log)
    binio.write_relations(story_dir / "relations.bin", relations, log.fps,
                          log.entity_ids, log.entity_kinds, log.entity_names)
    binio.write_framelog(story_dir / "framelog.bin", log)

    mappings = collect_event_mappings(timeline, graph)
    files["events.jsonl"] = _jsonl(
        {"event_id": m.event_id, "actor_id": m.actor_id, "action": m.action,
         "start_frame": m.start_frame, "end_frame": m.end_frame,
         "is_movement": m.is_movement} for m in mappings)

    proto = proto_text(graph, timeline, registry)
    files["text.txt"] = (proto.full_text + "\n").encode("utf-8")
    if cfg.refine.endpoint_url:
        files["text.refined.txt"] = (refine(proto, cfg.refine) + "\n").encode("utf-8")

    movement_actions = {k for k, a in registry.actions.items() if a.is_movement_only}
    clips = extract_story_clips(story_id, graph, timeline, movement_actions,
                                cfg.probe, split)
    files["probes/clips.jsonl"] = _jsonl(
        {"clip_id": c.clip_id, "story_id": c.story_id, "event_id": c.event_id,
         "frame_indices": list(c.frame_indices), "split": c.split} for c in clips)
    vis = visible_mask(log, cfg.camera)
    files["probes/labels.jsonl"] = _jsonl(
        label_clip(c, log, timeline, cfg.probe, vis, cfg.camera) for c in clips)

    if cfg.jsonl_relations:
        files["relations.jsonl"] = _jsonl(
            {"frame": int(r["frame"]), "a": int(r["a"]), "b": int(r["b"]),
             "distance_m": float(r["distance_m"]),
             "azimuth_deg": float(r["azimuth_deg"]),
             "elevation_deg": float(r["elevation_deg"]),
             "compass": COMPASS_NAMES[r["compass"]],
             "flags": int(r["flags"])} for r in relations)

    for rel_path, data in files.items():
        path = story_dir / rel_path
        path.write_bytes(data)
        entry["files"][rel_path] = _sha256(data)
    for rel_path in ("relations.bin", "framelog.bin"):
        entry["files"][rel_path] = _hash_file(story_dir / rel_path)
    entry["files"] = dict(sorted(entry["files"].items()))
    return entry


_WORKER: dict = {}


def _init_worker(cfg: CorpusConfig, registry_json: bytes):
    _WORKER["cfg"] = cfg
    _WORKER["registry"] = parse_registry(registry_json)


def _worker_job(args):
    story_index, story_dir, split = args
    return assemble_story(_WORKER["cfg"], _WORKER["registry"], story_index,
                          Path(story_dir), split)


def generate_corpus(out_root: Path | str, cfg: CorpusConfig,
                    registry: CapabilityRegistry, stories: int,
                    workers: int = 1) -> dict:
    """Build a corpus of `stories` stories under out_root; returns the
    manifest.  Output bytes do not depend on `workers`."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    registry_json = serialize_registry(registry)
    (out_root / "registry.json").write_bytes(registry_json)

    categories = [story_category(cfg.gen, registry, i) for i in range(stories)]
    ids = [f"story_{i:05d}" for i in range(stories)]
    splits = split_stories(zip(ids, categories), cfg.probe, cfg.gen.master_seed)

    jobs = [(i, str(out_root / ids[i]), splits[ids[i]]) for i in range(stories)]
    if workers <= 1:
        entries = [assemble_story(cfg, registry, i, Path(d), s) for i, d, s in jobs]
    else:
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(cfg, registry_json)) as pool:
            entries = list(pool.map(_worker_job, jobs))

    manifest = {
        "format_version": MANIFEST_VERSION,
        "kind": "corpus-manifest",
        "master_seed": cfg.gen.master_seed,
        "story_count": stories,
        "registry_hash": _sha256(registry_json),
        "config": asdict(cfg),
        "stories": entries,
    }
    (out_root / "manifest.json").write_bytes(_json_doc(manifest))
    stats = compute_stats(out_root)
    (out_root / "stats.json").write_bytes(_json_doc(stats))
    return manifest


def load_manifest(corpus_dir: Path | str) -> dict:
    path = Path(corpus_dir) / "manifest.json"
    if not path.is_file():
        raise CorruptCorpus(f"{path} is missing")
    try:
        return json.loads(path.read_text("utf-8"))
    except ValueError as exc:
        raise CorruptCorpus(f"{path}: {exc}") from None


def _story_entries(manifest: dict):
    for entry in manifest["stories"]:
        if "error" not in entry:
            yield entry


def compute_stats(corpus_dir: Path | str) -> dict:
    """Corpus statistics by full rescan of the artifact files.

    Hashes are re-verified along the way; any mismatch raises
    CorruptCorpus naming the offending file.
    """
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    registry_json = (corpus_dir / "registry.json").read_bytes()
    if _sha256(registry_json) != manifest["registry_hash"]:
        raise CorruptCorpus("registry.json hash mismatch")
    registry = parse_registry(registry_json)

    actor_counts: list[int] = []
    event_counts: list[int] = []
    total_relations = 0
    total_spatial = 0
    total_mappings = 0
    total_frames = 0
    fps = manifest["config"]["fps"]

    for entry in _story_entries(manifest):
        story_dir = corpus_dir / entry["story_id"]
        for rel_path, want in entry["files"].items():
            got = _hash_file(story_dir / rel_path)
            if got != want:
                raise CorruptCorpus(f"{entry['story_id']}/{rel_path} hash mismatch")
        graph = parse_graph((story_dir / "graph.json").read_bytes())
        actor_counts.append(len(graph.actors))
        event_counts.append(sum(1 for e in graph.events
                                if e.kind is not EventKind.MOVEMENT))
        total_relations += len(graph.relations)
        with open(story_dir / "events.jsonl", "rb") as fh:
            total_mappings += sum(1 for _ in fh)
        _, (ids, _, _), records = binio.read_relations(story_dir / "relations.bin")
        total_spatial += len(records)
        log = binio.read_framelog(story_dir / "framelog.bin")
        total_frames += log.frame_count

    n = len(actor_counts)

    def _dist(values):
        if not values:
            return {"min": 0, "max": 0, "mean": 0.0}
        return {"min": min(values), "max": max(values),
                "mean": sum(values) / len(values)}

    return {
        "stories": n,
        "total_duration_h": total_frames / fps / 3600.0,
        "total_events": sum(event_counts),
        "temporal_relation_count": total_relations,
        "unique_action_types": len(registry.actions),
        "object_types": len(registry.object_types),
        "episodes": len(registry.episodes),
        "categories": len(registry.categories()),
        "actors_per_story": _dist(actor_counts),
        "events_per_story": _dist(event_counts),
        "spatial_relation_count": total_spatial,
        "event_frame_mapping_count": total_mappings,
    }


def corpus_digest(corpus_dir: Path | str) -> str:
    """Order-independent content hash of every file in the corpus."""
    corpus_dir = Path(corpus_dir)
    h = hashlib.sha256()
    for path in sorted(p for p in corpus_dir.rglob("*") if p.is_file()):
        h.update(path.relative_to(corpus_dir).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def _load_story(corpus_dir: Path, entry: dict):
    story_dir = corpus_dir / entry["story_id"]
    graph = parse_graph((story_dir / "graph.json").read_bytes())
    timeline = parse_timeline((story_dir / "timeline.json").read_bytes())
    return story_dir, graph, timeline


def probe_config_from_manifest(manifest: dict) -> ProbeConfig:
    d = dict(manifest["config"]["probe"])
    for key in ("camera_dist_bounds_m", "pair_dist_bounds_m", "split_fracs"):
        d[key] = tuple(d[key])
    return ProbeConfig(**d)


def camera_from_manifest(manifest: dict) -> CameraPolicy:
    d = dict(manifest["config"]["camera"])
    d["offset"] = tuple(d["offset"])
    return CameraPolicy(**d)


def verify(corpus_dir: Path | str, label_samples: int = 1000,
           spatial_samples: int = 10000) -> dict:
    """Replay every oracle against the stored artifacts.

    Returns {"ok": bool, "checks": [{"name", "ok", "details"}]}.
    """
    corpus_dir = Path(corpus_dir)
    checks: list[dict] = []

    def check(name: str, failures: list[str]):
        checks.append({
            "name": name,
            "ok": not failures,
            "details": "ok" if not failures else "; ".join(failures[:5]),
        })

    try:
        manifest = load_manifest(corpus_dir)
    except CorruptCorpus as exc:
        return {"ok": False, "checks": [{"name": "manifest", "ok": False,
                                         "details": str(exc)}]}

    failures = []
    registry_json = (corpus_dir / "registry.json").read_bytes()
    if _sha256(registry_json) != manifest["registry_hash"]:
        failures.append("registry.json hash mismatch")
    for entry in _story_entries(manifest):
        for rel_path, want in entry["files"].items():
            path = corpus_dir / entry["story_id"] / rel_path
            if not path.is_file():
                failures.append(f"{entry['story_id']}/{rel_path} missing")
            elif _hash_file(path) != want:
                failures.append(f"{entry['story_id']}/{rel_path} hash mismatch")
    check("manifest-hashes", failures)

    registry = parse_registry(registry_json)
    fps = manifest["config"]["fps"]
    entries = list(_story_entries(manifest))

    failures = []
    for entry in entries:
        _, graph, timeline = _load_story(corpus_dir, entry)
        if timeline.fps != fps:
            failures.append(f"{entry['story_id']}: fps {timeline.fps} != {fps}")
        for ev in graph.events:
            s, e = timeline.interval(ev.event_id)
            if e - s != duration_frames(ev.duration_s, fps):
                failures.append(
                    f"{entry['story_id']} event {ev.event_id}: span {e - s} "
                    f"!= {duration_frames(ev.duration_s, fps)}")
    check("timeline-durations", failures)

    failures = []
    for entry in entries:
        _, graph, timeline = _load_story(corpus_dir, entry)
        for rel in graph.relations:
            a0, a1 = timeline.interval(rel.source)
            b0, b1 = timeline.interval(rel.target)
            base = relation_between(a0, a1, b0, b1)
            if base not in rel.allen_set:
                failures.append(
                    f"{entry['story_id']}: relation {rel.source}->{rel.target} "
                    f"realized {base.value} outside {{{rel.allen_set.codes()}}}")
        for chain in graph.chains().values():
            for prev, nxt in zip(chain, chain[1:]):
                p0, p1 = timeline.interval(prev.event_id)
                n0, _ = timeline.interval(nxt.event_id)
                if prev.kind is EventKind.MOVEMENT and p1 != n0:
                    failures.append(
                        f"{entry['story_id']}: movement {prev.event_id} must "
                        f"meet {nxt.event_id}")
                elif p1 > n0:
                    failures.append(
                        f"{entry['story_id']}: chain overlap {prev.event_id}"
                        f"->{nxt.event_id}")
    check("temporal-relations", failures)

    failures = []
    rng = random.Random(0xC0FFEE)
    per_story = max(1, spatial_samples // max(len(entries), 1))
    for entry in entries:
        story_dir = corpus_dir / entry["story_id"]
        log = binio.read_framelog(story_dir / "framelog.bin")
        _, (ids, _, _), records = binio.read_relations(story_dir / "relations.bin")
        n_entities = len(ids)
        expect = log.frame_count * n_entities * (n_entities - 1)
        if len(records) != expect:
            failures.append(f"{entry['story_id']}: {len(records)} records, "
                            f"expected {expect}")
            continue
        for _ in range(per_story):
            rec = records[rng.randrange(len(records))]
            f, a, b = int(rec["frame"]), int(rec["a"]), int(rec["b"])
            ia, ib = log.index_of(a), log.index_of(b)
            pr = compute_pair_relation(
                (tuple(log.positions[f, ia]), float(log.yaws[f, ia])),
                (tuple(log.positions[f, ib]), float(log.yaws[f, ib])))
            bad = (abs(pr.distance_m - float(rec["distance_m"])) > 1e-5
                   or abs(pr.azimuth_deg - float(rec["azimuth_deg"])) > 1e-5
                   or abs(pr.elevation_deg - float(rec["elevation_deg"])) > 1e-5
                   or COMPASS_NAMES[rec["compass"]] != pr.compass
                   or bool(rec["flags"] & 1) != pr.coincident)
            if bad:
                failures.append(f"{entry['story_id']} frame {f} pair ({a},{b}) "
                                f"record mismatch")
    check("spatial-records", failures)

    failures = []
    movement_actions = {k for k, a in registry.actions.items() if a.is_movement_only}
    cfg_probe = probe_config_from_manifest(manifest)
    camera = camera_from_manifest(manifest)
    min_frames = round(cfg_probe.min_event_s * fps)
    sampled = 0
    per_story = max(1, -(-label_samples // max(len(entries), 1)))
    for entry in entries:
        story_dir, graph, timeline = _load_story(corpus_dir, entry)
        clip_rows = [json.loads(line) for line in
                     (story_dir / "probes" / "clips.jsonl").read_text().splitlines()]
        label_rows = {row["clip_id"]: row for row in
                      (json.loads(line) for line in
                       (story_dir / "probes" / "labels.jsonl").read_text().splitlines())}
        actions = {e.event_id: e.action for e in graph.events}
        for row in clip_rows:
            idxs = row["frame_indices"]
            if (len(idxs) != cfg_probe.clip_frames or idxs != sorted(set(idxs))
                    or actions.get(row["event_id"]) in movement_actions):
                failures.append(f"{row['clip_id']}: malformed clip")
            s, e = timeline.interval(row["event_id"])
            if e - s < min_frames:
                failures.append(f"{row['clip_id']}: event shorter than minimum")
            if row["split"] != entry["split"]:
                failures.append(f"{row['clip_id']}: split mismatch")
        if not clip_rows:
            continue
        log = binio.read_framelog(story_dir / "framelog.bin")
        for row in clip_rows[:per_story]:
            clip = ClipSpec(row["clip_id"], row["story_id"], row["event_id"],
                            tuple(row["frame_indices"]), row["split"])
            want = json.loads(json.dumps(oracle_clip(clip, log, timeline,
                                                     cfg_probe, camera)))
            got = label_rows.get(clip.clip_id)
            if got != want:
                failures.append(f"{clip.clip_id}: label mismatch")
            sampled += 1
            if sampled >= label_samples:
                break
    check("probe-labels", failures)

    return {"ok": all(c["ok"] for c in checks), "checks": checks}
