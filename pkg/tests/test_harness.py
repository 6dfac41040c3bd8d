import json
import time

import pytest

from backend.agent.config import AgentConfig
from backend.harness import cli
from backend.harness.metrics import (
    CSV_HEADER, EpisodeResult, MetricsTable, evaluate, evaluate_episodes, planning_report,
    plw_weight, reason_counts, success_rate,
)
from backend.harness.suite import FAMILY_ORDER, Suite, SuiteSpec, generate_suite
from backend.world.tasks import TaskFamily, check_goal


def _result(config='full', split='seen', success=True, fraction=1.0, steps=10, expert=10,
            reason='stop', episode_id='e0'):
    return EpisodeResult(episode_id=episode_id, config=config, split=split, family='PickPlace',
                         success=success, goal_fraction=fraction, steps=steps,
                         expert_length=expert, reason=reason)


@pytest.fixture(scope='module')
def small_suite(lexicon):
    return generate_suite(SuiteSpec(seed=5, per_family=1, split='seen'), lexicon)


def test_plw_weight():
    assert plw_weight(20, 10) == 0.5
    assert plw_weight(5, 10) == 1.0


def test_metrics_rows():
    results = [
        _result(episode_id='e0'),
        _result(episode_id='e1', steps=20),
        _result(episode_id='e2', success=False, fraction=0.5, reason='max_steps'),
        _result(episode_id='e3', config='no-CAP', success=False, fraction=0.0,
                reason='target_not_found'),
    ]
    table = MetricsTable.from_results(results, ['full', 'no-CAP'])
    row = table.row('full', 'seen')
    assert row.n == 3
    assert row.SR == pytest.approx(66.6667)
    assert row.PLWSR == pytest.approx(50.0)
    assert row.GC == pytest.approx(83.3333)
    assert table.violations() == []
    assert [r.config for r in table.rows] == ['full', 'no-CAP']
    assert reason_counts(results)['full']['max_steps'] == 1
    assert success_rate(results, config='full') == pytest.approx(200 / 3)
    assert success_rate(results, config='nothing') == 0.0


def test_csv_round_trip():
    table = MetricsTable.from_results([_result(), _result(split='unseen', success=False,
                                                          fraction=0.5)])
    text = table.to_csv()
    assert text.splitlines()[0] == ','.join(CSV_HEADER)
    assert MetricsTable.from_csv(text).rows == table.rows
    with pytest.raises(ValueError):
        MetricsTable.from_csv('a,b,c\n')


def test_text_table_lists_reasons():
    results = [_result(), _result(episode_id='e1', success=False, reason='max_steps')]
    text = MetricsTable.from_results(results).to_text(reason_counts(results))
    assert text.startswith('config')
    assert 'max_steps=1' in text and 'stop=1' in text


def test_suite_shape_and_determinism(small_suite, lexicon):
    assert len(small_suite) == len(FAMILY_ORDER)
    assert {ep.family for ep in small_suite.episodes} == set(FAMILY_ORDER)
    ids = [ep.episode_id for ep in small_suite.episodes]
    assert ids == sorted(ids) and 'seen-pick-000' in ids
    again = generate_suite(SuiteSpec(seed=5, per_family=1, split='seen'), lexicon)
    assert again.model_dump_json() == small_suite.model_dump_json()
    for episode in small_suite.episodes:
        assert not check_goal(episode.build_world(), episode.task).success
        assert episode.expert_length > 0


def test_suite_save_load(small_suite, tmp_path):
    path = tmp_path / 'suite.json'
    small_suite.save(path)
    assert Suite.load(path).model_dump_json() == small_suite.model_dump_json()


def test_planning_report(small_suite, lexicon):
    report = planning_report(small_suite, lexicon)
    assert report['violations'] == []
    assert report['planning_accuracy']['cap'] == 100.0
    assert report['context_accuracy'] == {'seen': 100.0}


def test_evaluation(small_suite, lexicon):
    configs = [AgentConfig(), AgentConfig.from_flags(no_cap=True, no_eam=True)]
    table = evaluate(small_suite, configs, lexicon=lexicon)
    assert [r.config for r in table.rows] == ['full', 'no-CAP+no-EAM']
    assert table.violations() == []
    assert all(row.n == len(small_suite) for row in table.rows)


def test_parallel_matches_serial(small_suite, lexicon):
    serial = evaluate_episodes(small_suite, [AgentConfig()], 1, lexicon)
    threaded = evaluate_episodes(small_suite, [AgentConfig()], 2, lexicon)
    assert [r.to_dict() for r, _ in serial] == [r.to_dict() for r, _ in threaded]
    assert [t.to_jsonl() for _, t in serial] == [t.to_jsonl() for _, t in threaded]


def test_cli_round_trip(tmp_path, capsys):
    suite_path = tmp_path / 'suite.json'
    out = tmp_path / 'results'
    assert cli.main(['suite', 'gen', '--seed', '2', '--per-family', '1', '--split', 'seen',
                     '--out', str(suite_path)]) == cli.EXIT_OK
    assert cli.main(['run', '--suite', str(suite_path), '--out', str(out)]) == cli.EXIT_OK
    assert cli.main(['run', '--suite', str(suite_path), '--no-cap', '--no-traces',
                     '--out', str(out)]) == cli.EXIT_OK

    payload = json.loads((out / 'metrics-full.json').read_text(encoding='utf-8'))
    assert payload['label'] == 'full'
    assert len(payload['results']) == len(FAMILY_ORDER)

    csv_path = tmp_path / 'table.csv'
    capsys.readouterr()
    assert cli.main(['report', '--results', str(out), '--csv', str(csv_path),
                     '--planning']) == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert printed.index('full') < printed.index('no-CAP')
    table = MetricsTable.from_csv(csv_path.read_text(encoding='utf-8'))
    assert [r.config for r in table.rows] == ['full', 'no-CAP']

    assert cli.main(['replay', '--trace', str(out / 'traces')]) == cli.EXIT_OK


def test_cli_errors(tmp_path):
    assert cli.main(['report', '--results', str(tmp_path)]) == cli.EXIT_ERROR
    assert cli.main(['replay', '--trace', str(tmp_path)]) == cli.EXIT_ERROR
    bad = tmp_path / 'bad.jsonl'
    bad.write_text('{"type": "step"}\n', encoding='utf-8')
    assert cli.main(['replay', '--trace', str(bad)]) == cli.EXIT_ERROR
    with pytest.raises(SystemExit):
        cli.main(['scenario', 'nope'])


def test_cli_scenario(capsys):
    assert cli.main(['scenario', '--list']) == cli.EXIT_OK
    assert 'tissuebox-relocation' in capsys.readouterr().out
    assert cli.main(['scenario', 'watch-bowl-no-context', '--json']) == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)['ok'] is True


def test_cli_scenario_alias(capsys):
    assert cli.main(['scenario', '--list']) == cli.EXIT_OK
    assert 'fig8-tissuebox' in capsys.readouterr().out
    assert cli.main(['scenario', 'fig5-watch-bowl', '--json']) == cli.EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary['ok'] and summary['scenario'] == 'watch-bowl-no-context'


@pytest.fixture(scope='module')
def acceptance_suite(lexicon):
    return generate_suite(SuiteSpec(seed=0, per_family=14, split='both'), lexicon)


@pytest.fixture(scope='module')
def acceptance(acceptance_suite, lexicon):
    configs = [AgentConfig(), AgentConfig.from_flags(no_cap=True),
               AgentConfig.from_flags(no_eam=True),
               AgentConfig.from_flags(no_cap=True, no_eam=True),
               AgentConfig.from_flags(no_relocation=True),
               AgentConfig.from_flags(no_mask_cache=True),
               AgentConfig.from_flags(no_state_cache=True)]
    outputs = evaluate_episodes(acceptance_suite, configs, jobs=4, lexicon=lexicon)
    return acceptance_suite, [r for r, _ in outputs]


@pytest.mark.slow
def test_full_config_success_floor(acceptance):
    suite, results = acceptance
    assert len(suite) == 196
    table = MetricsTable.from_results(results)
    assert table.violations() == []
    assert success_rate(results, config='full') >= 90.0
    full = [r for r in results if r.config == 'full' and r.success]
    shortest = sum(r.expert_length <= r.steps for r in full)
    assert shortest >= 0.95 * len(full)


@pytest.mark.slow
def test_ablation_direction(acceptance):
    _, results = acceptance
    sr = {label: success_rate(results, config=label)
          for label in ('full', 'no-CAP', 'no-EAM', 'no-CAP+no-EAM')}
    assert sr['full'] - sr['no-CAP'] >= 5.0
    assert sr['full'] - sr['no-EAM'] >= 5.0
    assert sr['no-CAP+no-EAM'] <= min(sr['no-CAP'], sr['no-EAM'])


SINGLE_OBJECT_FAMILIES = (TaskFamily.PICK_PLACE, TaskFamily.CLEAN_PLACE, TaskFamily.HEAT_PLACE,
                          TaskFamily.COOL_PLACE, TaskFamily.EXAMINE_IN_LIGHT)


def _family_drop(results, label, family):
    return (success_rate(results, config='full', family=family.value)
            - success_rate(results, config=label, family=family.value))


@pytest.mark.slow
def test_relocation_matters_only_for_pick_two(acceptance):
    _, results = acceptance
    assert _family_drop(results, 'no-relocation', TaskFamily.PICK_TWO_PLACE) >= 30.0
    for family in SINGLE_OBJECT_FAMILIES:
        assert abs(_family_drop(results, 'no-relocation', family)) <= 2.0, family


@pytest.mark.slow
def test_mask_cache_matters_for_movable_receptacles(acceptance):
    _, results = acceptance
    drop = _family_drop(results, 'no-mask-cache', TaskFamily.PICK_PLACE_MOVABLE_RECEPTACLE)
    assert drop >= 30.0


@pytest.mark.slow
def test_state_cache_shortens_sliced_episodes(acceptance):
    suite, results = acceptance
    sliced = {ep.episode_id for ep in suite.episodes if ep.task.sliced}
    assert sliced

    def mean_steps(label):
        steps = [r.steps for r in results
                 if r.config == label and r.success and r.episode_id in sliced]
        assert steps
        return sum(steps) / len(steps)

    assert mean_steps('no-state-cache') > mean_steps('full')


@pytest.mark.slow
def test_full_config_runtime(acceptance_suite, lexicon):
    start = time.perf_counter()
    outputs = evaluate_episodes(acceptance_suite, [AgentConfig()], jobs=1, lexicon=lexicon)
    elapsed = time.perf_counter() - start
    assert len(outputs) == 196
    assert elapsed < 60.0


def test_suite_keeps_targets_in_closed_containers(lexicon):
    suite = generate_suite(SuiteSpec(seed=0, per_family=4, split='both'), lexicon)
    hidden = []
    for episode in suite.episodes:
        world = episode.build_world()
        hidden += [inst.id for inst in world.by_category(episode.task.target)
                   if world.hidden_in_closed(inst.id)]
    assert hidden


@pytest.mark.slow
def test_acceptance_planning(acceptance, lexicon):
    suite, _ = acceptance
    report = planning_report(suite, lexicon)
    assert report['violations'] == []
    assert report['context_accuracy']['seen'] == 100.0
    assert report['context_accuracy']['unseen'] >= 95.0
