"""Generator determinism plus structural legality of the sampled stories."""

from __future__ import annotations

import hashlib
import random
from collections import Counter

import pytest

from storysim.allen import Coarse
from storysim.default_registry import build_default_registry
from storysim.documents import serialize_graph
from storysim.model import EntityKind, EventKind
from storysim.procgen import (
    GenConfig,
    build_action_chain,
    generate_story,
    select_episode,
    story_rng,
    story_seed,
)
from storysim.scheduling import SchedulePolicy, schedule


@pytest.fixture(scope="module")
def registry():
    return build_default_registry()


@pytest.fixture(scope="module")
def stories(registry):
    cfg = GenConfig(master_seed=5)
    return [generate_story(cfg, registry, i) for i in range(40)]


def test_story_seed_matches_hash_derivation():
    digest = hashlib.sha256(b"7:3").digest()
    assert story_seed(7, 3) == int.from_bytes(digest[:8], "big")
    assert story_seed(7, 3) != story_seed(7, 4)
    assert story_seed(7, 3) != story_seed(8, 3)


def test_same_inputs_same_story(registry):
    cfg = GenConfig(master_seed=5)
    a = generate_story(cfg, registry, 11)
    b = generate_story(cfg, registry, 11)
    assert serialize_graph(a) == serialize_graph(b)
    assert a.seed == story_seed(5, 11)


def test_different_index_different_story(registry):
    cfg = GenConfig(master_seed=5)
    a = generate_story(cfg, registry, 0)
    b = generate_story(cfg, registry, 1)
    assert serialize_graph(a) != serialize_graph(b)


def test_generation_order_does_not_matter(registry):
    cfg = GenConfig(master_seed=9)
    forward = [serialize_graph(generate_story(cfg, registry, i)) for i in range(4)]
    backward = [serialize_graph(generate_story(cfg, registry, i))
                for i in reversed(range(4))]
    assert forward == list(reversed(backward))


def test_actor_roster_shape(stories, registry):
    for graph in stories:
        n = len(graph.actors)
        assert 2 <= n <= 6
        names = [a.name for a in graph.actors]
        assert len(set(names)) == n
        for actor in graph.actors:
            assert actor.model in registry.actor_models
            assert actor.model.startswith(actor.gender.value)


def test_region_plan_within_episode(stories, registry):
    for graph in stories:
        assert graph.region_plan
        episode_keys = {registry.episode_of_region(r) for r in graph.region_plan}
        assert len(episode_keys) == 1
        assert len(graph.region_plan) == len(set(graph.region_plan))


def test_chains_follow_transitions(stories, registry):
    for graph in stories:
        for chain in graph.chains().values():
            plain = [e for e in chain if e.kind is EventKind.ACTION]
            for prev, nxt in zip(plain, plain[1:]):
                if prev.poi != nxt.poi:
                    continue
                poi = registry.poi(prev.poi)
                assert nxt.action in poi.transitions.get(prev.action, ()), \
                    f"{prev.action} -> {nxt.action} at {prev.poi}"


def test_events_use_valid_actions(stories, registry):
    for graph in stories:
        for ev in graph.events:
            poi = registry.poi(ev.poi)
            assert ev.action in registry.actions
            assert ev.action in poi.valid_actions
            if registry.actions[ev.action].requires_object \
                    and ev.kind is EventKind.ACTION:
                assert ev.patient is not None
                assert ev.patient.kind is EntityKind.OBJECT


def test_paired_events_are_mutual(stories):
    for graph in stories:
        index = graph.event_index()
        for ev in graph.events:
            if ev.kind not in (EventKind.INTERACTION, EventKind.EXCHANGE):
                continue
            partner_evs = [o for o in graph.events
                           if o.kind is ev.kind and o.actor == ev.patient
                           and o.patient == ev.actor and o.poi == ev.poi
                           and o.duration_s == ev.duration_s]
            assert partner_evs, f"unpaired {ev.kind.value} event {ev.event_id}"
            partner = partner_evs[0]
            lo, hi = sorted((ev.event_id, partner.event_id))
            linked = [r for r in graph.relations
                      if {r.source, r.target} == {lo, hi}
                      and r.coarse is Coarse.SAME_TIME]
            assert linked
            assert index[lo].kind is ev.kind


def test_relations_reference_shared_poi_events(stories):
    for graph in stories:
        index = graph.event_index()
        for rel in graph.relations:
            assert index[rel.source].poi == index[rel.target].poi


def test_injected_relations_keep_network_schedulable(stories, registry):
    policy = SchedulePolicy()
    for graph in stories:
        timeline = schedule(graph, registry, policy, fps=25)
        assert timeline.intervals.keys() == {e.event_id for e in graph.events}


def test_all_categories_reachable(registry):
    rng = random.Random(0)
    seen = Counter(select_episode(registry, rng).category for _ in range(400))
    assert set(seen) == set(registry.categories())
    # uniform over categories: no category takes more than half the draws
    assert max(seen.values()) < 200


def test_build_action_chain_respects_length_and_durations(registry):
    rng = random.Random(1)
    poi = registry.episodes[0].regions[0].pois[0]
    for _ in range(50):
        chain = build_action_chain(poi, 4, registry, rng)
        assert 1 <= len(chain) <= 4
        for action, duration in chain:
            lo, hi = registry.actions[action].duration_range_s
            assert lo <= duration <= hi


def test_story_rng_is_plain_random(registry):
    rng = story_rng(0, 0)
    assert isinstance(rng, random.Random)
    assert story_rng(0, 0).random() == rng.random()


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(actors_min_max=(0, 3))
    with pytest.raises(ValueError):
        GenConfig(interaction_prob=1.5)
    with pytest.raises(ValueError):
        GenConfig(chains_per_actor=0)
