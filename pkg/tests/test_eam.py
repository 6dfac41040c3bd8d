import json

import numpy as np
import pytest

from backend.agent.config import AgentConfig
from backend.eam.memory import EnvironmentMemory, MaskCache, RelocationLog
from backend.eam.semantic_map import SemanticMap, approach_cells, select_target
from backend.harness.metrics import evaluate_episode
from backend.harness.scenarios import build_room, run_scenario
from backend.harness.suite import SuiteSpec, generate_episode
from backend.nav.frontier import next_frontier
from backend.world.grid_world import SLICED, AgentPose, Heading
from backend.world.observation import InteractionHandle, observe
from backend.world.tasks import TaskFamily


def _handle(instance_id='Apple_1', cell=(1, 1), step=0):
    return InteractionHandle(instance_id, cell, step)


def _ops(memory):
    return [(e.op, e.result) for e in memory.drain_events()]


def test_mask_cache_keeps_newest_handle():
    cache = MaskCache()
    cache.remember('Apple', _handle(step=5))
    cache.remember('Apple', _handle(cell=(2, 2), step=2))
    assert cache.recall('Apple') == _handle(step=5)
    assert cache.recall('Bowl') is None
    assert len(cache) == 1


def test_remember_logs_only_changes():
    memory = EnvironmentMemory()
    memory.remember_mask('Apple', _handle(step=0))
    memory.remember_mask('Apple', _handle(step=3))
    memory.remember_mask('Apple', _handle(cell=(1, 3), step=4))
    assert [op for op, _ in _ops(memory)] == ['remember', 'remember']

    assert memory.recall_mask('Apple') == _handle(cell=(1, 3), step=4)
    events = memory.drain_events()
    assert events[0].to_dict() == {
        'op': 'recall', 'args': {'key': 'Apple'},
        'result': {'instance_id': 'Apple_1', 'observed_cell': [1, 3], 'observed_step': 4},
    }
    assert memory.drain_events() == []


def test_disabled_mask_cache_still_logs_recall():
    memory = EnvironmentMemory(mask_cache_enabled=False)
    memory.remember_mask(('Bowl', 'Bowl_1'), _handle('Bowl_1'))
    assert memory.recall_mask(('Bowl', 'Bowl_1')) is None
    events = memory.drain_events()
    assert [(e.op, e.result) for e in events] == [('recall', None)]
    assert events[0].args == {'key': ['Bowl', 'Bowl_1']}


def test_relocation_log_ignores_duplicates():
    log = RelocationLog()
    assert log.record('TissueBox', (1, 1), 7)
    assert not log.record('TissueBox', (1, 1), 7)
    assert log.record('TissueBox', (1, 1), 9)
    assert len(log) == 2
    assert log.excludes('TissueBox', (1, 1))
    assert not log.excludes('Watch', (1, 1))


def test_relocation_ablation():
    memory = EnvironmentMemory()
    memory.record_relocation('TissueBox', (1, 2), 4)
    memory.record_relocation('TissueBox', (1, 2), 4)
    assert _ops(memory) == [('record', True), ('record', False)]
    assert memory.relocated_cells('TissueBox') == {(1, 2)}

    off = EnvironmentMemory(relocation_enabled=False)
    off.record_relocation('TissueBox', (1, 2), 4)
    assert _ops(off) == [('record', False)]
    assert off.relocated_cells('TissueBox') == set()


def test_state_location_cache():
    memory = EnvironmentMemory()
    memory.cache_state_location('Apple', '+sliced', (1, 1), _handle('Apple_1_slice1'))
    hit = memory.lookup_state_location('Apple', '+sliced')
    assert hit == ((1, 1), _handle('Apple_1_slice1'))
    assert memory.lookup_state_location('Apple', '+hot') is None
    memory.states.forget('Apple', '+sliced')
    assert memory.lookup_state_location('Apple', '+sliced') is None
    assert [op for op, _ in _ops(memory)] == ['cache', 'lookup', 'lookup', 'lookup']

    off = EnvironmentMemory(state_cache_enabled=False)
    off.cache_state_location('Apple', '+sliced', (1, 1), _handle())
    assert off.lookup_state_location('Apple', '+sliced') is None
    assert _ops(off) == [('cache', False), ('lookup', None)]


def _mapped(room):
    semantic_map = SemanticMap(room.shape)
    return semantic_map.integrate_observation(observe(room), room.agent, room.config)


def test_integrate_observation(room):
    semantic_map = _mapped(room)
    assert semantic_map.explored[room.agent.cell]
    assert semantic_map.sighting_cells('Apple') == [(1, 1)]
    assert semantic_map.sighting_cells('Knife') == [(1, 3)]
    assert semantic_map.evidence['Table'][1, 1] == 1
    for cell in map(tuple, np.argwhere(semantic_map.obstacle)):
        assert room.blocks(cell)
    assert (semantic_map.inflated >= semantic_map.obstacle).all()


def test_integration_is_monotone(room):
    semantic_map = _mapped(room)
    explored, obstacle = semantic_map.explored.copy(), semantic_map.obstacle.copy()
    room.agent.heading = Heading.SOUTH
    semantic_map.integrate_observation(observe(room), room.agent, room.config)
    assert (semantic_map.explored >= explored).all()
    assert (semantic_map.obstacle >= obstacle).all()
    assert semantic_map.explored.sum() > explored.sum()


def test_select_target_skips_relocations(room):
    semantic_map = _mapped(room)
    assert select_target(semantic_map, 'Apple', [], room.agent) == (1, 1)
    assert select_target(semantic_map, 'Apple', [(1, 1)], room.agent) is None
    assert select_target(semantic_map, 'Apple', [], room.agent, exclude=[(1, 1)]) is None
    assert select_target(semantic_map, 'Watch', [], room.agent) is None


def test_select_target_prefers_nearest(room):
    semantic_map = _mapped(room)
    semantic_map.sightings['Apple'][(3, 3)] = 0
    assert select_target(semantic_map, 'Apple', [(1, 1)], room.agent) == (3, 3)

    far = SemanticMap((9, 9))
    far.sightings['Apple'] = {(1, 1): 0, (6, 6): 0}
    assert select_target(far, 'Apple', [], AgentPose((7, 7))) == (6, 6)


def test_clear_sighting(room):
    semantic_map = _mapped(room)
    semantic_map.clear_sighting('Apple', (1, 1))
    semantic_map.clear_sighting('Watch', (1, 1))
    assert semantic_map.sighting_cells('Apple') == []


def test_approach_cells_stay_in_grid():
    assert approach_cells((0, 0), (5, 5)) == [(0, 1), (1, 0), (1, 1)]
    assert len(approach_cells((2, 2), (5, 5))) == 8


def test_frontier(room):
    semantic_map = _mapped(room)
    frontiers = semantic_map.frontier_cells()
    assert frontiers
    assert next_frontier(semantic_map, room.agent) in frontiers
    assert next_frontier(semantic_map, room.agent, exclude=frontiers) is None

    semantic_map.explored[:] = True
    assert semantic_map.frontier_cells() == []
    assert next_frontier(semantic_map, room.agent) is None


def test_mask_cache_recall_is_newest():
    rng = np.random.default_rng(3)
    cache = MaskCache()
    seen = {}
    for _ in range(400):
        key = ('Apple', ('Bowl', 'Bowl_1'))[int(rng.integers(0, 2))]
        handle = _handle(f"Apple_{int(rng.integers(1, 4))}",
                         (int(rng.integers(1, 6)), int(rng.integers(1, 6))),
                         int(rng.integers(0, 40)))
        cache.remember(key, handle)
        seen.setdefault(key, []).append(handle)
        top = max(h.observed_step for h in seen[key])
        assert cache.recall(key) == [h for h in seen[key] if h.observed_step == top][-1]


def test_recalled_handles_are_never_stale(lexicon):
    trace = run_scenario('occluded-bowl-mask', lexicon).full
    newest = {}
    for event in trace.memory_events():
        key = json.dumps(event['args'].get('key'))
        if event['op'] == 'remember':
            newest[key] = max(newest.get(key, -1), event['args']['handle']['observed_step'])
        elif event['op'] == 'recall' and event['result'] is not None:
            assert event['result']['observed_step'] >= newest[key]


def test_line_of_sight_on_known_obstacles():
    world = build_room(
        (6, 9), (3, 5), Heading.SOUTH,
        furniture=[('SinkBasin_1', 'SinkBasin', (4, 4)), ('Faucet_1', 'Faucet', (4, 5))],
        items=[],
    )
    semantic_map = SemanticMap(world.shape)
    assert semantic_map.line_of_sight((3, 5), (4, 4))
    for cell in [(r, c) for r in range(6) for c in range(9) if world.blocks((r, c))]:
        semantic_map.mark_obstacle(cell)
    cells = [(r, c) for r in range(1, 5) for c in range(1, 8)]
    for source in cells:
        for target in cells:
            if abs(source[0] - target[0]) <= 1 and abs(source[1] - target[1]) <= 1:
                assert semantic_map.line_of_sight(source, target) \
                    == world.line_of_sight(source, target)
    assert not semantic_map.line_of_sight((3, 5), (4, 4))


def test_distance_field_cached_until_map_changes(room):
    semantic_map = _mapped(room)
    field = semantic_map.distance_field(room.agent)
    assert semantic_map.distance_field(room.agent) is field
    version = semantic_map.version
    assert semantic_map.mark_obstacle((3, 2))
    assert not semantic_map.mark_obstacle((3, 2))
    assert semantic_map.version == version + 1
    again = semantic_map.distance_field(room.agent)
    assert again is not field
    assert not again.reachable((3, 2))
    assert again.at(room.agent.cell) == 0.0
    assert (semantic_map.inflated >= semantic_map.obstacle).all()


def test_sliced_objects_are_not_category_sightings():
    world = build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Table_1', 'Table', (1, 1)), ('CounterTop_1', 'CounterTop', (1, 3))],
        items=[('Apple_1_slice1', 'Apple', 'Table_1', (SLICED,)),
               ('Apple_2', 'Apple', 'CounterTop_1', ())],
    )
    semantic_map = _mapped(world)
    assert semantic_map.sighting_cells('Apple') == [(1, 3)]
    assert semantic_map.evidence['Apple'][1, 1] == 1


@pytest.mark.slow
def test_pick_two_never_repeats_an_instance(lexicon):
    spec = SuiteSpec(seed=3, per_family=50, split='both')
    repeated = []
    for split in spec.splits:
        for k in range(spec.per_family):
            episode = generate_episode(spec, split, TaskFamily.PICK_TWO_PLACE, k, lexicon)
            _, trace = evaluate_episode(episode, AgentConfig(), lexicon)
            picked = [e.outcome['instance_id'] for e in trace.events
                      if e.action['kind'] == 'PickupObject' and e.outcome['status'] == 'success']
            if len(picked) != len(set(picked)):
                repeated.append(episode.episode_id)
    assert repeated == []
