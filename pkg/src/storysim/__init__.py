"""Deterministic multi-actor story corpora with frame-accurate ground
truth.

The pipeline runs in stages: procedural story graphs (procgen), Allen
algebra constraint solving into frame schedules (allen, scheduling),
kinematic 3D execution (simulation), frame-aligned annotation
(collectors), proto-language text (textgen), probe task labels
(probes), and corpus assembly with verification (pipeline, cli).
"""

from .allen import (AllenRelation, Coarse, RelationSet, coarse_to_allen,
                    compose, converse, relation_between, check_relation)
from .errors import (CorruptCorpus, DanglingReferenceError,
                     DocumentSyntaxError, EmptyRegistry, EntityUnknown,
                     InconsistentNetwork, InvariantError, NoFreeSlot,
                     NoValidAction, RelationInjectionExhausted, StorysimError,
                     UnschedulableDisjunction, ValidationFailure)
from .model import (CAMERA_ID, ActionCategory, ActionSpec, Actor,
                    CapabilityRegistry, EntityId, EntityKind, EpisodeSpec,
                    Event, EventKind, Gender, GestGraph, ObjectEntity,
                    PoiSpec, RegionSpec, TemporalRelation)
from .scheduling import (EventTimeline, SchedulePolicy, TemporalNetwork,
                         closure, duration_frames, schedule)
from .procgen import GenConfig, generate_story, story_seed
from .simulation import (CameraPolicy, FrameLog, World, ground,
                         insert_movements, simulate, update_camera, validate,
                         visible_mask)
from .collectors import (EventFrameMapping, PairRelation,
                         SpatialRelationRecord, collect_event_mappings,
                         collect_frame, collect_story_relations,
                         compute_pair_relation)
from .textgen import ProtoText, RefineConfig, proto_text, refine
from .probes import (ClipSpec, HybridSampleConfig, ProbeConfig,
                     extract_story_clips, hybrid_sample, label_clip,
                     label_entity, label_pair, label_scene, split_stories)
from .default_registry import build_default_registry
from .pipeline import (CorpusConfig, assemble_story, compute_stats,
                       corpus_digest, generate_corpus, verify)

__version__ = "0.1.0"

__all__ = [
    "AllenRelation", "Coarse", "RelationSet", "coarse_to_allen", "compose",
    "converse", "relation_between", "check_relation",
    "StorysimError", "DocumentSyntaxError", "DanglingReferenceError",
    "InvariantError", "InconsistentNetwork", "UnschedulableDisjunction",
    "EmptyRegistry", "NoValidAction", "RelationInjectionExhausted",
    "NoFreeSlot", "ValidationFailure", "EntityUnknown", "CorruptCorpus",
    "CAMERA_ID", "ActionCategory", "ActionSpec", "Actor", "CapabilityRegistry",
    "EntityId", "EntityKind", "EpisodeSpec", "Event", "EventKind", "Gender",
    "GestGraph", "ObjectEntity", "PoiSpec", "RegionSpec", "TemporalRelation",
    "EventTimeline", "SchedulePolicy", "TemporalNetwork", "closure",
    "duration_frames", "schedule",
    "GenConfig", "generate_story", "story_seed",
    "CameraPolicy", "FrameLog", "World", "ground", "insert_movements",
    "simulate", "update_camera", "validate", "visible_mask",
    "EventFrameMapping", "PairRelation", "SpatialRelationRecord",
    "collect_event_mappings", "collect_frame", "collect_story_relations",
    "compute_pair_relation",
    "ProtoText", "RefineConfig", "proto_text", "refine",
    "ClipSpec", "HybridSampleConfig", "ProbeConfig", "extract_story_clips",
    "hybrid_sample", "label_clip", "label_entity", "label_pair", "label_scene",
    "split_stories",
    "build_default_registry",
    "CorpusConfig", "assemble_story", "compute_stats", "corpus_digest",
    "generate_corpus", "verify",
]
