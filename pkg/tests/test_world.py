import pytest

from backend.harness.scenarios import build_room
from backend.world.dynamics import (
    Action, ActionKind, OutcomeStatus, apply_state_rules, resolve_handle, step,
)
from backend.world.grid_world import (
    COLD, DIRTY, HOT, OPEN, SLICED, TOGGLED_ON,
    AgentRecord, GridWorld, Heading, WorldFormatError, WorldRecord,
)
from backend.world.observation import InteractionHandle, Visibility, cast_rays, classify_instance, observe
from backend.world.vocabulary import UnknownCategoryError, categories_where, get_category

from conftest import handle_for


def _act(world, kind, handle=None):
    return step(world, Action(kind, handle))


def test_heading_rotation_is_clockwise():
    assert Heading.NORTH.rotated(1) is Heading.EAST
    assert Heading.NORTH.rotated(-1) is Heading.WEST
    assert Heading.WEST.rotated(2) is Heading.EAST
    assert Heading.SOUTH.vector == (1, 0)


def test_vocabulary_lookup():
    assert get_category('Bowl').movable_receptacle
    assert get_category('Drawer').openable and get_category('Drawer').fixed
    assert 'Apple' in categories_where(sliceable=True)
    with pytest.raises(UnknownCategoryError):
        get_category('Unicorn')


def test_move_ahead_until_blocked(room):
    assert _act(room, ActionKind.MOVE_AHEAD).success
    assert room.agent.cell == (1, 2)

    outcome = _act(room, ActionKind.MOVE_AHEAD)
    assert outcome.status is OutcomeStatus.BLOCKED
    assert room.agent.cell == (1, 2)
    assert room.step_count == 2


def test_furniture_blocks_movement(room):
    _act(room, ActionKind.MOVE_AHEAD)
    _act(room, ActionKind.ROTATE_LEFT)
    assert _act(room, ActionKind.MOVE_AHEAD).status is OutcomeStatus.BLOCKED


def test_pitch_limits(room):
    assert _act(room, ActionKind.LOOK_UP).success
    assert room.agent.pitch == -15
    assert _act(room, ActionKind.LOOK_UP).status is OutcomeStatus.PITCH_LIMIT
    assert room.agent.pitch == -15


def test_observation_detects_surface_contents(room):
    obs = observe(room)
    ids = [d.handle.instance_id for d in obs.detections]
    assert ids == ['Apple_1', 'Table_1', 'CounterTop_1', 'Knife_1']
    apple = obs.of_category('Apple')[0]
    assert apple.cell == (1, 1)
    assert apple.handle == InteractionHandle('Apple_1', (1, 1), 0)
    assert len(obs.depth) == room.config.n_rays


def test_observation_does_not_mutate(room):
    before = room.to_json()
    observe(room)
    assert room.to_json() == before


def test_pickup_then_hand_occupied(room):
    apple = handle_for(room, 'Apple_1')
    knife = handle_for(room, 'Knife_1')

    outcome = _act(room, ActionKind.PICKUP, apple)
    assert outcome.success and outcome.instance_id == 'Apple_1'
    assert room.agent.held == 'Apple_1'
    assert room.get('Apple_1').cell is None
    assert room.get('Table_1').contents == []

    assert _act(room, ActionKind.PICKUP, knife).status is OutcomeStatus.HAND_OCCUPIED


def test_put_requires_held_object_and_receptacle(room):
    table = handle_for(room, 'Table_1')
    knife = handle_for(room, 'Knife_1')
    apple = handle_for(room, 'Apple_1')
    assert _act(room, ActionKind.PUT, table).status is OutcomeStatus.HAND_EMPTY

    _act(room, ActionKind.PICKUP, knife)
    assert _act(room, ActionKind.PUT, apple).status is OutcomeStatus.CAPABILITY
    assert _act(room, ActionKind.PUT, table).success
    assert room.get('Knife_1').parent == 'Table_1'
    assert room.get('Knife_1').cell == (1, 1)


def test_failed_actions_still_count_steps(room):
    ghost = InteractionHandle('Ghost_1', (1, 1), 0)
    outcome = _act(room, ActionKind.PICKUP, ghost)
    assert outcome.status is OutcomeStatus.HANDLE_MISSING
    assert room.step_count == 1


def test_handle_resolution_order(room):
    apple = handle_for(room, 'Apple_1')
    room.detach('Apple_1')
    room.put_inside('Apple_1', 'CounterTop_1')
    assert resolve_handle(room, apple).status is OutcomeStatus.MOVED_SINCE_OBSERVED

    fresh = handle_for(room, 'Apple_1')
    room.agent.cell = (3, 2)
    assert resolve_handle(room, fresh).status is OutcomeStatus.OUT_OF_RANGE


def test_slice_requires_knife_and_consumes_instance(room):
    apple = handle_for(room, 'Apple_1')
    assert _act(room, ActionKind.SLICE, apple).status is OutcomeStatus.KNIFE_REQUIRED

    _act(room, ActionKind.PICKUP, handle_for(room, 'Knife_1'))
    assert _act(room, ActionKind.SLICE, apple).success

    assert 'Apple_1' in room.consumed
    assert room.get('Table_1').contents == ['Apple_1_slice1', 'Apple_1_slice2']
    assert all(SLICED in room.get(f'Apple_1_slice{k}').state for k in (1, 2))
    assert _act(room, ActionKind.SLICE, apple).status is OutcomeStatus.INSTANCE_CONSUMED

    slices = observe(room).of_category('Apple')
    assert [d.sliced for d in slices] == [True, True]


def test_capability_failures(room):
    table = handle_for(room, 'Table_1')
    assert _act(room, ActionKind.PICKUP, table).status is OutcomeStatus.CAPABILITY
    assert _act(room, ActionKind.OPEN, table).status is OutcomeStatus.CAPABILITY
    assert _act(room, ActionKind.TOGGLE_ON, table).status is OutcomeStatus.CAPABILITY


def test_movable_receptacle_with_contents_is_occluded():
    world = build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Shelf_1', 'Shelf', (1, 2))],
        items=[('Bowl_1', 'Bowl', 'Shelf_1', ()), ('Watch_1', 'Watch', 'Bowl_1', ())],
    )
    ids = [d.handle.instance_id for d in observe(world).detections]
    assert ids == ['Shelf_1', 'Watch_1']
    _, _, hit_cells = cast_rays(world)
    assert classify_instance(world, 'Bowl_1', hit_cells) is Visibility.OCCLUDED_BY_CONTENTS


def test_furniture_with_contents_stays_detectable(room):
    # só receptáculos móveis somem quando carregam algo
    assert room.get('Table_1').contents == ['Apple_1']
    ids = [d.handle.instance_id for d in observe(room).detections]
    assert 'Table_1' in ids and 'Apple_1' in ids
    _, _, hit_cells = cast_rays(room)
    assert classify_instance(room, 'Table_1', hit_cells) is Visibility.DETECTED


def test_line_of_sight_rounds_through_corner():
    world = build_room(
        (6, 9), (3, 5), Heading.SOUTH,
        furniture=[('SinkBasin_1', 'SinkBasin', (4, 4)), ('Faucet_1', 'Faucet', (4, 5))],
        items=[],
    )
    assert not world.line_of_sight((3, 5), (4, 4))
    assert not world.in_interaction_range((4, 4))
    assert world.line_of_sight((3, 3), (4, 4))
    assert world.line_of_sight((3, 4), (4, 4))


def test_closed_container_hides_contents():
    world = build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Drawer_1', 'Drawer', (1, 2))],
        items=[('Spoon_1', 'Spoon', 'Drawer_1', ())],
    )
    assert [d.category for d in observe(world).detections] == ['Drawer']

    spoon = InteractionHandle('Spoon_1', (1, 2), 0)
    assert _act(world, ActionKind.PICKUP, spoon).status is OutcomeStatus.RECEPTACLE_CLOSED

    drawer = handle_for(world, 'Drawer_1')
    assert _act(world, ActionKind.OPEN, drawer).success
    assert OPEN in world.get('Drawer_1').state
    assert _act(world, ActionKind.OPEN, drawer).status is OutcomeStatus.ALREADY_IN_STATE
    assert 'Spoon' in [d.category for d in observe(world).detections]
    assert _act(world, ActionKind.PICKUP, spoon).success


def test_appliance_state_rules():
    world = build_room(
        (5, 7), (3, 3), Heading.NORTH,
        furniture=[('Microwave_1', 'Microwave', (1, 1)), ('Fridge_1', 'Fridge', (1, 3)),
                   ('SinkBasin_1', 'SinkBasin', (1, 5)), ('Faucet_1', 'Faucet', (2, 5))],
        items=[('Apple_1', 'Apple', 'Microwave_1', ()), ('Tomato_1', 'Tomato', 'Fridge_1', ()),
               ('Spoon_1', 'Spoon', 'SinkBasin_1', (DIRTY,))],
    )
    apply_state_rules(world)
    assert COLD in world.get('Tomato_1').state
    assert HOT not in world.get('Apple_1').state
    assert DIRTY in world.get('Spoon_1').state

    world.get('Microwave_1').state.add(TOGGLED_ON)
    world.get('Faucet_1').state.add(TOGGLED_ON)
    apply_state_rules(world)
    assert HOT in world.get('Apple_1').state
    assert DIRTY not in world.get('Spoon_1').state


def test_heating_replaces_cold():
    world = build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Microwave_1', 'Microwave', (1, 2))],
        items=[('Apple_1', 'Apple', 'Microwave_1', (COLD,))],
    )
    world.get('Microwave_1').state.add(TOGGLED_ON)
    apply_state_rules(world)
    assert world.get('Apple_1').state == {HOT}


def test_json_is_bit_exact(room):
    _act(room, ActionKind.PICKUP, handle_for(room, 'Knife_1'))
    text = room.to_json()
    restored = GridWorld.from_json(text)
    assert restored.to_json() == text
    assert restored.agent.held == 'Knife_1'
    assert restored.step_count == 1


def test_copy_is_independent(room):
    clone = room.copy()
    clone.detach('Apple_1')
    assert room.get('Apple_1').parent == 'Table_1'


def test_malformed_world_records():
    agent = AgentRecord(cell=(1, 1))
    with pytest.raises(WorldFormatError):
        GridWorld.from_record(WorldRecord(grid=['###', '##'], agent=agent))
    with pytest.raises(WorldFormatError):
        GridWorld.from_record(WorldRecord(grid=['#x#'], agent=agent))
    with pytest.raises(WorldFormatError):
        GridWorld.from_json('{"grid": 3}')

    record = WorldRecord(grid=['###', '#.#', '###'], agent=agent,
                         instances=[{'id': 'U_1', 'category': 'Unicorn', 'cell': (1, 1)}])
    with pytest.raises(WorldFormatError):
        GridWorld.from_record(record)


def test_orphan_parent_is_rejected(room):
    record = room.to_record()
    record.instances[-1].parent = 'Missing_1'
    with pytest.raises(WorldFormatError):
        GridWorld.from_record(record)
