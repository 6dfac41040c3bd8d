import pytest

from backend.agent.config import AgentConfig
from backend.agent.episode import run_episode
from backend.agent.trace import TERMINAL_REASONS, EpisodeTrace, TraceFormatError, replay_trace
from backend.harness.scenarios import build_room, get_scenario
from backend.instruction.templates import Instruction
from backend.world.dynamics import NAVIGATION_KINDS, ActionKind
from backend.world.grid_world import Heading
from backend.world.tasks import TaskFamily, TaskSpec

APPLE_TASK = TaskSpec(family=TaskFamily.PICK_PLACE, target='Apple', destination='CounterTop')


def _run(room, lexicon, text="put an apple on the counter", **config):
    return run_episode(room, Instruction.from_text(text), lexicon, AgentConfig(**config),
                       APPLE_TASK, episode_id='room')


def test_full_agent_solves_room(room, lexicon):
    before = room.to_json()
    trace = _run(room, lexicon)
    assert trace.success and trace.reason == 'stop'
    assert [e.action['kind'] for e in trace.events] == ['PickupObject', 'PutObject', 'Stop']
    assert trace.terminal['steps'] == 3
    assert trace.goal == {'satisfied': 1, 'total': 1, 'success': True, 'conditions': [True]}
    assert trace.terminal['plan']['sub_goals'] == [['Pickup', 'Apple', None],
                                                   ['Put', 'Apple', 'CounterTop']]
    assert room.to_json() == before


def test_header_records_inputs(room, lexicon):
    trace = _run(room, lexicon)
    assert trace.episode_id == 'room'
    assert trace.header['instruction'] == 'put an apple on the counter'
    assert trace.header['task']['target'] == 'Apple'
    assert trace.header['config']['cap_enabled'] is True


def test_no_context_agent_chases_confusable(room, lexicon):
    trace = _run(room, lexicon, cap_enabled=False, max_steps=200)
    assert not trace.success
    assert trace.terminal['plan']['sub_goals'][1] == ['Put', 'Tomato', 'CounterTop']


@pytest.mark.parametrize('text,reason', [
    ("hello there", 'context_parse_error'),
    ("examine a sliced apple under the lamp", 'planning_error'),
])
def test_unplannable_instructions(room, lexicon, text, reason):
    trace = _run(room, lexicon, text=text)
    assert trace.reason == reason
    assert trace.steps == 0 and not trace.success


def test_step_budget(room, lexicon):
    trace = _run(room, lexicon, max_steps=1)
    assert trace.reason == 'max_steps'
    assert trace.steps == 1
    assert not trace.success


def test_episodes_are_deterministic(room, lexicon):
    assert _run(room, lexicon).to_jsonl() == _run(room, lexicon).to_jsonl()


def test_trace_replays(room, lexicon):
    trace = _run(room, lexicon)
    report = replay_trace(trace)
    assert report.ok and report.checked == 3

    trace.events[0].outcome['status'] = 'BLOCKED'
    assert not replay_trace(trace).ok


def test_jsonl_round_trip(room, lexicon, tmp_path):
    trace = _run(room, lexicon)
    path = tmp_path / 'room.jsonl'
    trace.write(path)
    again = EpisodeTrace.read(path)
    assert again.to_jsonl() == trace.to_jsonl()
    assert again.reason in TERMINAL_REASONS


@pytest.mark.parametrize('text', [
    '',
    '{"type": "step", "step": 0}\n',
    '{"type": "header"}\n',
    '{"type": "header"}\n{"type": "terminal"}\n{"type": "terminal"}\n',
    '{"type": "header"}\nnot json\n',
])
def test_malformed_traces(text):
    with pytest.raises(TraceFormatError):
        EpisodeTrace.from_jsonl(text)


@pytest.mark.parametrize('flags,label', [
    ({}, 'full'),
    ({'no_cap': True}, 'no-CAP'),
    ({'no_eam': True}, 'no-EAM'),
    ({'no_cap': True, 'no_eam': True}, 'no-CAP+no-EAM'),
    ({'no_relocation': True}, 'no-relocation'),
    ({'no_mask_cache': True, 'no_state_cache': True}, 'no-mask-cache+no-state-cache'),
])
def test_config_labels(flags, label):
    assert AgentConfig.from_flags(**flags).label() == label


def test_config_validation():
    with pytest.raises(ValueError):
        AgentConfig(max_steps=0)
    with pytest.raises(ValueError):
        AgentConfig(inflation_radius=-1)


def test_agent_interacts_only_with_line_of_sight(lexicon):
    scenario = get_scenario('occluded-cup-mask')
    trace = run_episode(scenario.build(), Instruction.from_text(scenario.instruction), lexicon,
                        AgentConfig(), scenario.task)
    assert trace.success
    assert all(e.outcome['status'] != 'out_of_range' for e in trace.events)


def _drawer_room():
    return build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Drawer_1', 'Drawer', (1, 1)), ('CounterTop_1', 'CounterTop', (1, 3))],
        items=[('Spoon_1', 'Spoon', 'Drawer_1', ())],
    )


def test_agent_searches_closed_containers(lexicon):
    task = TaskSpec(family=TaskFamily.PICK_PLACE, target='Spoon', destination='CounterTop')
    trace = run_episode(_drawer_room(), Instruction.from_text("put a spoon on the counter"), lexicon,
                        AgentConfig(), task)
    assert trace.success
    interactions = [e.action['kind'] for e in trace.events
                    if ActionKind(e.action['kind']) not in NAVIGATION_KINDS]
    assert interactions == ['OpenObject', 'PickupObject', 'CloseObject', 'PutObject', 'Stop']
    assert replay_trace(trace).ok
