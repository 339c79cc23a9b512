"""Command line entry points.

  storysim generate --stories N --seed S --out DIR [...]
  storysim simulate --graph PATH --out DIR [--registry PATH]
  storysim text --graph PATH --timeline PATH [--registry PATH]
  storysim probes --corpus DIR [--out DIR] [label options]
  storysim stats --corpus DIR
  storysim verify --corpus DIR
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import binio
from .collectors import collect_event_mappings, collect_story_relations
from .default_registry import build_default_registry
from .documents import (parse_graph, parse_registry, parse_timeline,
                        serialize_timeline)
from .errors import StorysimError
from .pipeline import (CorpusConfig, camera_from_manifest, derived_rng,
                       generate_corpus, load_manifest,
                       probe_config_from_manifest, compute_stats, verify,
                       _json_doc, _jsonl, _sha256, _story_entries)
from .probes import ProbeConfig, extract_story_clips, label_clip
from .procgen import GenConfig
from .scheduling import SchedulePolicy, schedule
from .simulation import (CameraPolicy, ground, insert_movements, simulate,
                         validate, visible_mask)
from .textgen import RefineConfig, proto_text


def _load_registry(path: str | None):
    if path is None:
        return build_default_registry()
    return parse_registry(Path(path).read_bytes())


def _cmd_generate(args) -> int:
    registry = _load_registry(args.registry)
    gen = GenConfig(
        master_seed=args.seed,
        chains_per_actor=args.chains_per_actor,
        max_actors_per_region=args.max_actors_per_region,
        regions_to_visit=args.regions,
    )
    cfg = CorpusConfig(
        gen=gen,
        fps=args.fps,
        jsonl_relations=args.jsonl_relations,
        refine=RefineConfig(endpoint_url=args.refine_endpoint,
                            model=args.refine_model),
    )
    manifest = generate_corpus(args.out, cfg, registry, args.stories,
                               workers=args.workers)
    errors = [e for e in manifest["stories"] if "error" in e]
    print(f"generated {len(manifest['stories']) - len(errors)}/{args.stories} "
          f"stories under {args.out}")
    for e in errors:
        print(f"  {e['story_id']}: {e['error']}", file=sys.stderr)
    return 1 if errors else 0


def _cmd_simulate(args) -> int:
    registry = _load_registry(args.registry)
    graph = parse_graph(Path(args.graph).read_bytes())
    issues = validate(graph, registry)
    if issues:
        for issue in issues:
            print(f"{issue['code']} (event {issue['event_id']}): "
                  f"{issue['message']}", file=sys.stderr)
        return 2
    world = ground(graph, registry, derived_rng(graph.seed, "ground"),
                   fps=args.fps)
    graph = insert_movements(graph, world, registry)
    timeline = schedule(graph, registry, SchedulePolicy(), args.fps)
    log = simulate(world, graph, timeline)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timeline.json").write_bytes(serialize_timeline(timeline))
    binio.write_framelog(out / "framelog.bin", log)
    records = collect_story_relations(log)
    binio.write_relations(out / "relations.bin", records, log.fps,
                          log.entity_ids, log.entity_kinds, log.entity_names)
    mappings = collect_event_mappings(timeline, graph)
    (out / "events.jsonl").write_bytes(_jsonl(
        {"event_id": m.event_id, "actor_id": m.actor_id, "action": m.action,
         "start_frame": m.start_frame, "end_frame": m.end_frame,
         "is_movement": m.is_movement} for m in mappings))
    print(f"simulated {log.frame_count} frames, {len(records)} relation records "
          f"-> {out}")
    return 0


def _cmd_text(args) -> int:
    registry = _load_registry(args.registry)
    graph = parse_graph(Path(args.graph).read_bytes())
    timeline = parse_timeline(Path(args.timeline).read_bytes())
    print(proto_text(graph, timeline, registry).full_text)
    return 0


def _cmd_probes(args) -> int:
    corpus = Path(args.corpus)
    manifest = load_manifest(corpus)
    registry = parse_registry((corpus / "registry.json").read_bytes())
    camera = camera_from_manifest(manifest)
    base = probe_config_from_manifest(manifest)
    cfg = ProbeConfig(
        motion_threshold_m=args.motion_threshold,
        min_event_s=args.min_event_s,
        camera_dist_bounds_m=base.camera_dist_bounds_m,
        pair_dist_bounds_m=base.pair_dist_bounds_m,
        ambiguity_eps_m=args.ambiguity_eps_m,
        ambiguity_eps_deg=args.ambiguity_eps_deg,
    )
    out_root = Path(args.out) if args.out else corpus
    in_place = out_root.resolve() == corpus.resolve()
    movement_actions = {k for k, a in registry.actions.items()
                        if a.is_movement_only}
    n_clips = 0
    for entry in _story_entries(manifest):
        story_dir = corpus / entry["story_id"]
        graph = parse_graph((story_dir / "graph.json").read_bytes())
        timeline = parse_timeline((story_dir / "timeline.json").read_bytes())
        log = binio.read_framelog(story_dir / "framelog.bin")
        clips = extract_story_clips(entry["story_id"], graph, timeline,
                                    movement_actions, cfg, entry["split"])
        vis = visible_mask(log, camera)
        out_dir = out_root / entry["story_id"] / "probes"
        out_dir.mkdir(parents=True, exist_ok=True)
        clips_doc = _jsonl(
            {"clip_id": c.clip_id, "story_id": c.story_id,
             "event_id": c.event_id, "frame_indices": list(c.frame_indices),
             "split": c.split} for c in clips)
        labels_doc = _jsonl(
            label_clip(c, log, timeline, cfg, vis, camera) for c in clips)
        (out_dir / "clips.jsonl").write_bytes(clips_doc)
        (out_dir / "labels.jsonl").write_bytes(labels_doc)
        if in_place:
            entry["files"]["probes/clips.jsonl"] = _sha256(clips_doc)
            entry["files"]["probes/labels.jsonl"] = _sha256(labels_doc)
        n_clips += len(clips)
    if in_place:
        (corpus / "manifest.json").write_bytes(_json_doc(manifest))
    print(f"derived {n_clips} clips -> {out_root}")
    return 0


def _cmd_stats(args) -> int:
    stats = compute_stats(args.corpus)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def _cmd_verify(args) -> int:
    report = verify(args.corpus)
    for check in report["checks"]:
        mark = "ok  " if check["ok"] else "FAIL"
        print(f"{mark} {check['name']}: {check['details']}")
    print("PASS" if report["ok"] else "FAIL")
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storysim",
        description="Deterministic multi-actor story corpus generator with "
                    "frame-accurate ground truth.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a corpus of stories")
    p.add_argument("--stories", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--registry", default=None, help="registry JSON "
                   "(default: bundled registry)")
    p.add_argument("--out", required=True)
    p.add_argument("--chains-per-actor", type=int, default=1)
    p.add_argument("--max-actors-per-region", type=int, default=4)
    p.add_argument("--regions", type=int, default=2)
    p.add_argument("--fps", type=int, default=25)
    p.add_argument("--jsonl-relations", action="store_true",
                   help="also write a JSONL mirror of relations.bin")
    p.add_argument("--refine-endpoint", default=None)
    p.add_argument("--refine-model", default="")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", help="simulate one graph document")
    p.add_argument("--graph", required=True)
    p.add_argument("--registry", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--fps", type=int, default=25)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("text", help="print proto text for a scheduled graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--timeline", required=True)
    p.add_argument("--registry", default=None)
    p.set_defaults(func=_cmd_text)

    p = sub.add_parser("probes", help="re-derive probe clips and labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--motion-threshold", type=float, default=0.2)
    p.add_argument("--min-event-s", type=float, default=4.0)
    p.add_argument("--ambiguity-eps-m", type=float, default=0.1)
    p.add_argument("--ambiguity-eps-deg", type=float, default=2.0)
    p.set_defaults(func=_cmd_probes)

    p = sub.add_parser("stats", help="recompute corpus statistics")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("verify", help="replay all oracles against a corpus")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StorysimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
