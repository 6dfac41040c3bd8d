import pytest

from backend.agent.trace import replay_trace
from backend.harness.scenarios import (
    SCENARIO_ALIASES, SCENARIOS, UnknownScenarioError, check_expectation, get_scenario,
    run_scenario, scenario_names,
)


@pytest.fixture(scope='module')
def results(lexicon):
    return {name: run_scenario(name, lexicon) for name in SCENARIOS}


@pytest.mark.parametrize('name', list(SCENARIOS))
def test_scenario_matches_expectation(results, name):
    result = results[name]
    assert result.ok, result.mismatches
    assert result.full.success
    if SCENARIOS[name].expect == 'longer':
        assert result.ablated.success
        assert result.ablated.steps > result.full.steps
    else:
        assert not result.ablated.success


@pytest.mark.parametrize('name', list(SCENARIOS))
def test_scenario_traces_replay(results, name):
    assert replay_trace(results[name].full).ok
    assert replay_trace(results[name].ablated).ok


def test_occluded_bowl_is_recalled(results):
    recalls = results['occluded-bowl-mask'].full.memory_events('recall')
    assert any(event['result'] is not None for event in recalls)


def test_relocation_ablation_leaves_goal_unmet(results):
    goal = results['tissuebox-relocation'].ablated.goal
    assert goal['satisfied'] < goal['total']


def _steps_back_to_slice(trace):
    kinds = [e.action['kind'] for e in trace.events]
    put = kinds.index('PutObject', kinds.index('SliceObject'))
    return kinds.index('PickupObject', put) - put


def test_state_cache_leads_straight_back_to_slice(results):
    result = results['apple-slice-state-cache']
    hits = [e['result'] for e in result.full.memory_events('lookup')]
    assert hits and all(hit is not None for hit in hits)
    assert all(e['result'] is None for e in result.ablated.memory_events('lookup'))
    assert _steps_back_to_slice(result.ablated) > _steps_back_to_slice(result.full)


def test_summary_shape(results):
    summary = results['watch-bowl-no-context'].summary()
    assert summary['ok'] and summary['scenario'] == 'watch-bowl-no-context'
    assert summary['ablated']['config'] == 'no-CAP'
    assert summary['full']['success']


def test_expectation_flags_failed_full_run(results):
    result = results['apple-slice-state-cache']
    mismatches = check_expectation(SCENARIOS['apple-slice-state-cache'], result.ablated, result.full)
    assert mismatches


def test_unknown_scenario():
    with pytest.raises(UnknownScenarioError):
        get_scenario('nope')
    with pytest.raises(UnknownScenarioError):
        run_scenario('nope')


@pytest.mark.parametrize('alias,name', sorted(SCENARIO_ALIASES.items()))
def test_scenario_aliases(alias, name):
    assert get_scenario(alias) is SCENARIOS[name]
    assert alias in scenario_names()
