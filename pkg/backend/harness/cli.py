"""
CLI do Harness
Subcomandos: suite gen, run, report, replay e scenario.

Códigos de saída: 0 ok, 1 erro de domínio ou cenário divergente,
2 uso incorreto (argparse), 3 violação de invariante.
"""

import argparse
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..agent.config import AgentConfig
from ..agent.trace import EpisodeTrace, replay_trace
from ..errors import EmbodiedError
from ..instruction.lexicon import Lexicon
from ..mqtt.client_mqtt import MQTTClient
from .metrics import EpisodeResult, MetricsTable, evaluate_episodes, planning_report, reason_counts
from .scenarios import SCENARIO_ALIASES, SCENARIOS, run_scenario, scenario_names
from .suite import Suite, SuiteSpec, generate_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 3

# Ordem das linhas no relatório; demais rótulos vêm depois, em ordem alfabética
LABEL_ORDER = ('full', 'no-CAP', 'no-EAM', 'no-CAP+no-EAM')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='run_harness.py',
                                     description='Harness de avaliação do agente incorporado')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', required=True)

    suite = commands.add_parser('suite', help='Operações sobre suítes')
    suite_commands = suite.add_subparsers(dest='suite_command', required=True)
    gen = suite_commands.add_parser('gen', help='Gera uma suíte determinística')
    _add_suite_args(gen)
    gen.add_argument('--out', required=True, help='Arquivo JSON da suíte')

    run = commands.add_parser('run', help='Avalia uma configuração sobre a suíte')
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument('--suite', help='Arquivo JSON gerado por `suite gen`')
    source.add_argument('--seed', type=int, help='Gera a suíte em memória com esta semente')
    run.add_argument('--per-family', type=int, default=10)
    run.add_argument('--split', choices=['seen', 'unseen', 'both'], default='both')
    for flag in ('no-cap', 'no-eam', 'no-mask-cache', 'no-relocation', 'no-state-cache',
                 'no-map-targets'):
        run.add_argument(f'--{flag}', action='store_true')
    run.add_argument('--max-steps', type=int, default=1000)
    run.add_argument('--max-failures', type=int, default=10)
    run.add_argument('--jobs', type=int, default=1)
    run.add_argument('--out', required=True, help='Diretório de resultados')
    run.add_argument('--no-traces', action='store_true', help='Não grava os traces JSONL')
    run.add_argument('--mqtt-host', default=None, help='Publica telemetria neste broker')
    run.add_argument('--mqtt-port', type=int, default=1883)

    report = commands.add_parser('report', help='Tabela de métricas a partir de `run`')
    report.add_argument('--results', required=True, help='Diretório com metrics-*.json')
    report.add_argument('--csv', default=None, help='Grava também o CSV neste caminho')
    report.add_argument('--planning', action='store_true',
                        help='Inclui acurácia de planejamento e de contexto')

    replay = commands.add_parser('replay', help='Reexecuta traces e confere os resultados')
    replay.add_argument('--trace', required=True, nargs='+',
                        help='Arquivos .jsonl ou diretórios com traces')

    scenario = commands.add_parser('scenario', help='Executa um cenário roteirizado')
    scenario.add_argument('name', nargs='?', choices=scenario_names())
    scenario.add_argument('--list', action='store_true', help='Lista os cenários')
    scenario.add_argument('--json', action='store_true', help='Imprime o resumo em JSON')
    return parser


def _add_suite_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--per-family', type=int, default=10)
    parser.add_argument('--split', choices=['seen', 'unseen', 'both'], default='both')


def _label_key(label: str):
    if label in LABEL_ORDER:
        return (0, LABEL_ORDER.index(label), label)
    return (1, 0, label)


def _mqtt_client(args) -> Optional[MQTTClient]:
    if not getattr(args, 'mqtt_host', None):
        return None
    client = MQTTClient(broker_host=args.mqtt_host, broker_port=args.mqtt_port)
    client.connect(timeout=3)
    return client


def cmd_suite_gen(args) -> int:
    spec = SuiteSpec(seed=args.seed, per_family=args.per_family, split=args.split)
    suite = generate_suite(spec)
    suite.save(args.out)
    print(f"{len(suite)} episódios gravados em {args.out}")
    return EXIT_OK


def _load_suite(args) -> Suite:
    if args.suite:
        return Suite.load(args.suite)
    return generate_suite(SuiteSpec(seed=args.seed, per_family=args.per_family,
                                    split=args.split))


def cmd_run(args) -> int:
    suite = _load_suite(args)
    config = AgentConfig.from_flags(
        no_cap=args.no_cap, no_eam=args.no_eam, no_mask_cache=args.no_mask_cache,
        no_relocation=args.no_relocation, no_state_cache=args.no_state_cache,
        no_map_targets=args.no_map_targets,
        max_steps=args.max_steps, max_interaction_failures=args.max_failures,
    )
    label = config.label()
    lexicon = Lexicon.default()
    outputs = evaluate_episodes(suite, [config], args.jobs, lexicon)
    results = [result for result, _ in outputs]
    table = MetricsTable.from_results(results, [label])
    planning = planning_report(suite, lexicon)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        'config': config.model_dump(mode='json'),
        'label': label,
        'suite': suite.spec.model_dump(mode='json'),
        'results': [r.to_dict() for r in results],
        'rows': table.to_dict()['rows'],
        'planning': planning,
    }
    (out / f'metrics-{label}.json').write_text(json.dumps(payload, indent=1), encoding='utf-8')
    if not args.no_traces:
        trace_dir = out / 'traces' / label
        trace_dir.mkdir(parents=True, exist_ok=True)
        for result, trace in outputs:
            trace.write(trace_dir / f'{result.episode_id}.jsonl')
    print(table.to_text(reason_counts(results)), end='')

    violations = table.violations() + planning['violations']
    client = _mqtt_client(args)
    if client is not None:
        for result in results:
            client.publish_episode(result.to_dict())
            client.check_episode_alerts(result.to_dict())
        client.publish_metrics(table.to_dict()['rows'])
        client.check_invariant_alerts(violations, source=f'run {label}')
        client.disconnect()
    if violations:
        for violation in violations:
            logger.error(f"Violação de invariante: {violation}")
        return EXIT_INVARIANT
    return EXIT_OK


def load_results(directory) -> Dict[str, dict]:
    """Arquivos metrics-*.json do diretório, por rótulo de configuração."""
    loaded = {}
    for path in sorted(Path(directory).glob('metrics-*.json')):
        data = json.loads(path.read_text(encoding='utf-8'))
        loaded[data['label']] = data
    return loaded


def cmd_report(args) -> int:
    loaded = load_results(args.results)
    if not loaded:
        logger.error(f"Nenhum metrics-*.json em {args.results}")
        return EXIT_ERROR
    order = sorted(loaded, key=_label_key)
    results = [EpisodeResult(**r) for label in order for r in loaded[label]['results']]
    table = MetricsTable.from_results(results, order)
    print(table.to_text(reason_counts(results)), end='')
    if args.csv:
        Path(args.csv).write_text(table.to_csv(), encoding='utf-8')
        print(f"CSV gravado em {args.csv}")
    if args.planning:
        planning = next(iter(loaded.values()))['planning']
        print('')
        print(f"Acurácia de planejamento: com contexto {planning['planning_accuracy']['cap']:.2f}%, "
              f"sem contexto {planning['planning_accuracy']['no_cap']:.2f}%")
        for split, accuracy in planning['context_accuracy'].items():
            print(f"Acurácia de contexto ({split}): {accuracy:.2f}%")
    violations = table.violations()
    if violations:
        for violation in violations:
            logger.error(f"Violação de invariante: {violation}")
        return EXIT_INVARIANT
    return EXIT_OK


def _trace_files(paths: Sequence[str]) -> List[Path]:
    files = []
    for raw in paths:
        path = Path(raw)
        files.extend(sorted(path.rglob('*.jsonl')) if path.is_dir() else [path])
    return files


def cmd_replay(args) -> int:
    files = _trace_files(args.trace)
    if not files:
        logger.error("Nenhum trace encontrado")
        return EXIT_ERROR
    failed = 0
    for path in files:
        report = replay_trace(EpisodeTrace.read(path))
        if not report.ok:
            failed += 1
            for mismatch in report.mismatches:
                logger.error(f"{path.name}: {mismatch}")
    print(f"{len(files) - failed}/{len(files)} traces verificados")
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_scenario(args) -> int:
    if args.list or not args.name:
        for name, scenario in SCENARIOS.items():
            print(f"{name:<24} {scenario.description}")
        for alias, name in SCENARIO_ALIASES.items():
            print(f"{alias:<24} = {name}")
        return EXIT_OK
    result = run_scenario(args.name)
    summary = result.summary()
    if args.json:
        print(json.dumps(summary, indent=1))
    else:
        for arm in ('full', 'ablated'):
            info = summary[arm]
            print(f"{info.get('config', 'full'):<16} sucesso={info['success']} "
                  f"passos={info['steps']} motivo={info['reason']}")
        print('ok' if result.ok else f"divergente: {'; '.join(result.mismatches)}")
    return EXIT_OK if result.ok else EXIT_ERROR


COMMANDS = {
    'run': cmd_run,
    'report': cmd_report,
    'replay': cmd_replay,
    'scenario': cmd_scenario,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ponto de entrada da CLI.

    Args:
        argv: Argumentos (padrão: sys.argv)

    Returns:
        Código de saída
    """
    args = build_parser().parse_args(argv)
    logging.getLogger().setLevel(args.log_level)
    handler = cmd_suite_gen if args.command == 'suite' else COMMANDS[args.command]
    try:
        return handler(args)
    except EmbodiedError as e:
        logger.error(f"Erro: {e}")
        return EXIT_ERROR
