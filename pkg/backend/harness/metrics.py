"""
Módulo de Métricas
Avaliação em lote da suíte sob uma matriz de configurações e cálculo de
SR, GC e das versões ponderadas pelo comprimento do caminho (PLW).
"""

import csv
import io
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..agent.config import AgentConfig
from ..agent.episode import run_episode
from ..agent.trace import EpisodeTrace
from ..cap.frames import MetaClass, PlanningError, SubstitutionError, canonical_sub_goals
from ..cap.planner import plan, planner_for
from ..instruction.context import Context, ContextParseError, predict_context
from ..instruction.lexicon import Lexicon
from .suite import Suite, SuiteEpisode

logger = logging.getLogger(__name__)

CSV_HEADER = ('config', 'split', 'SR', 'PLWSR', 'GC', 'PLWGC', 'n')
PRECISION = 4


def plw_weight(steps: int, expert_length: int) -> float:
    """Peso L*/max(L, L*) do episódio."""
    return expert_length / max(steps, expert_length)


@dataclass
class EpisodeResult:
    episode_id: str
    config: str
    split: str
    family: str
    success: bool
    goal_fraction: float
    steps: int
    expert_length: int
    reason: str

    @property
    def weight(self) -> float:
        return plw_weight(self.steps, self.expert_length)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_trace(cls, episode: SuiteEpisode, config: AgentConfig,
                   trace: EpisodeTrace) -> 'EpisodeResult':
        goal = trace.goal or {}
        total = goal.get('total') or 0
        return cls(
            episode_id=episode.episode_id,
            config=config.label(),
            split=episode.split,
            family=episode.family.value,
            success=trace.success,
            goal_fraction=goal.get('satisfied', 0) / total if total else 0.0,
            steps=trace.steps,
            expert_length=episode.expert_length,
            reason=trace.reason or 'stop',
        )


@dataclass(frozen=True)
class MetricsRow:
    config: str
    split: str
    SR: float
    PLWSR: float
    GC: float
    PLWGC: float
    n: int

    def violations(self) -> List[str]:
        """Desigualdades que toda linha deve respeitar."""
        found = []
        if not 0 <= self.PLWSR <= self.SR <= 100:
            found.append(f"{self.config}/{self.split}: PLWSR={self.PLWSR} SR={self.SR}")
        if not 0 <= self.PLWGC <= self.GC <= 100:
            found.append(f"{self.config}/{self.split}: PLWGC={self.PLWGC} GC={self.GC}")
        if self.SR > self.GC:
            found.append(f"{self.config}/{self.split}: SR={self.SR} > GC={self.GC}")
        return found


def _row(config: str, split: str, results: Sequence[EpisodeResult]) -> MetricsRow:
    success = np.array([float(r.success) for r in results])
    fraction = np.array([r.goal_fraction for r in results])
    weight = np.array([r.weight for r in results])

    def pct(values: np.ndarray) -> float:
        return round(float(np.mean(values)) * 100.0, PRECISION) if len(values) else 0.0

    return MetricsRow(config=config, split=split,
                      SR=pct(success), PLWSR=pct(success * weight),
                      GC=pct(fraction), PLWGC=pct(fraction * weight),
                      n=len(results))


@dataclass
class MetricsTable:
    """Uma linha por (configuração, split), na ordem das configurações avaliadas."""
    rows: List[MetricsRow] = field(default_factory=list)

    @classmethod
    def from_results(cls, results: Iterable[EpisodeResult],
                     config_order: Optional[Sequence[str]] = None) -> 'MetricsTable':
        groups: Dict[Tuple[str, str], List[EpisodeResult]] = {}
        for result in sorted(results, key=lambda r: (r.config, r.episode_id)):
            groups.setdefault((result.config, result.split), []).append(result)
        order = list(config_order or sorted({key[0] for key in groups}))
        keys = sorted(groups, key=lambda key: (order.index(key[0]), key[1]))
        return cls([_row(config, split, groups[(config, split)]) for config, split in keys])

    def row(self, config: str, split: str) -> Optional[MetricsRow]:
        return next((r for r in self.rows if r.config == config and r.split == split), None)

    def violations(self) -> List[str]:
        return [v for row in self.rows for v in row.violations()]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([r.config, r.split, f"{r.SR:.{PRECISION}f}", f"{r.PLWSR:.{PRECISION}f}",
                             f"{r.GC:.{PRECISION}f}", f"{r.PLWGC:.{PRECISION}f}", r.n])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> 'MetricsTable':
        """
        Raises:
            ValueError: cabeçalho diferente de config,split,SR,PLWSR,GC,PLWGC,n
        """
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"Cabeçalho CSV inesperado: {','.join(header)}")
        rows = []
        for record in reader:
            if not record:
                continue
            config, split, sr, plwsr, gc, plwgc, n = record
            rows.append(MetricsRow(config, split, float(sr), float(plwsr),
                                   float(gc), float(plwgc), int(n)))
        return cls(rows)

    def to_text(self, reasons: Optional[Dict[str, Counter]] = None) -> str:
        """Tabela alinhada; PLW entre parênteses como na apresentação usual."""
        width = max([len('config')] + [len(r.config) for r in self.rows])
        lines = [f"{'config':<{width}}  {'split':<6}  {'SR (PLWSR)':>18}  "
                 f"{'GC (PLWGC)':>18}  {'n':>4}"]
        for r in self.rows:
            sr = f"{r.SR:6.2f} ({r.PLWSR:6.2f})"
            gc = f"{r.GC:6.2f} ({r.PLWGC:6.2f})"
            lines.append(f"{r.config:<{width}}  {r.split:<6}  {sr:>18}  {gc:>18}  {r.n:>4}")
        if reasons:
            lines.append('')
            lines.append('Motivos de término:')
            for config, counts in reasons.items():
                summary = ', '.join(f"{reason}={count}" for reason, count in sorted(counts.items()))
                lines.append(f"  {config:<{width}}  {summary}")
        return '\n'.join(lines) + '\n'

    def to_dict(self) -> dict:
        return {'rows': [asdict(r) for r in self.rows]}


def reason_counts(results: Iterable[EpisodeResult]) -> Dict[str, Counter]:
    counts: Dict[str, Counter] = {}
    for result in results:
        counts.setdefault(result.config, Counter())[result.reason] += 1
    return counts


def success_rate(results: Iterable[EpisodeResult], **where) -> float:
    """SR (%) sobre o subconjunto cujos campos batem com `where`."""
    chosen = [r for r in results if all(getattr(r, k) == v for k, v in where.items())]
    if not chosen:
        return 0.0
    return 100.0 * sum(r.success for r in chosen) / len(chosen)


def evaluate_episode(episode: SuiteEpisode, config: AgentConfig,
                     lexicon: Lexicon) -> Tuple[EpisodeResult, EpisodeTrace]:
    trace = run_episode(episode.build_world(), episode.build_instruction(), lexicon,
                        config, episode.task, episode.episode_id)
    return EpisodeResult.from_trace(episode, config, trace), trace


def evaluate_episodes(suite: Suite, configs: Sequence[AgentConfig], jobs: int = 1,
                      lexicon: Optional[Lexicon] = None
                      ) -> List[Tuple[EpisodeResult, EpisodeTrace]]:
    """
    Executa todos os pares (configuração, episódio).

    Args:
        suite: Suíte gerada
        configs: Matriz de ablação
        jobs: Número de threads (episódios são independentes)
        lexicon: Léxico do agente (padrão: léxico embutido)

    Returns:
        Pares (resultado, trace) ordenados por (configuração, episódio)
    """
    lexicon = lexicon or Lexicon.default()
    work = [(config, episode) for config in configs for episode in suite.episodes]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(lambda item: evaluate_episode(item[1], item[0], lexicon),
                                    work))
    else:
        outputs = [evaluate_episode(episode, config, lexicon) for config, episode in work]
    order = [config.label() for config in configs]
    outputs.sort(key=lambda pair: (order.index(pair[0].config), pair[0].episode_id))
    for config in configs:
        done = [r for r, _ in outputs if r.config == config.label()]
        logger.info(f"Configuração {config.label()}: {len(done)} episódios, "
                    f"SR={success_rate(done):.2f}%")
    return outputs


def evaluate(suite: Suite, configs: Sequence[AgentConfig], jobs: int = 1,
             lexicon: Optional[Lexicon] = None) -> MetricsTable:
    """
    Avalia a suíte sob cada configuração.

    Returns:
        MetricsTable com uma linha por (configuração, split)
    """
    outputs = evaluate_episodes(suite, configs, jobs, lexicon)
    return MetricsTable.from_results([r for r, _ in outputs],
                                     [config.label() for config in configs])


# ----------------------------------------------------------------------
# Planejamento
# ----------------------------------------------------------------------
def planning_accuracy(suite: Suite, cap_enabled: bool = True,
                      lexicon: Optional[Lexicon] = None) -> float:
    """% de episódios cujo plano de sub-objetivos é igual ao canônico."""
    lexicon = lexicon or Lexicon.default()
    planner = planner_for(cap_enabled)
    hits = 0
    for episode in suite.episodes:
        try:
            predicted = planner(episode.build_instruction(), lexicon).sub_goals
        except (ContextParseError, PlanningError, SubstitutionError):
            continue
        hits += predicted == canonical_sub_goals(episode.task)
    return round(100.0 * hits / len(suite.episodes), PRECISION) if suite.episodes else 0.0


def context_accuracy(suite: Suite, lexicon: Optional[Lexicon] = None,
                     split: Optional[str] = None) -> float:
    """% de instruções cujo contexto predito é exatamente (alvo, carregador, destino)."""
    lexicon = lexicon or Lexicon.default()
    episodes = [ep for ep in suite.episodes if split is None or ep.split == split]
    hits = 0
    for episode in episodes:
        truth = Context(episode.task.target, episode.task.mrecep, episode.task.destination)
        try:
            hits += predict_context(episode.build_instruction(), lexicon) == truth
        except ContextParseError:
            continue
    return round(100.0 * hits / len(episodes), PRECISION) if episodes else 0.0


def plan_violations(suite: Suite, lexicon: Optional[Lexicon] = None) -> List[str]:
    """Resíduo de meta-classe ou categoria fora do contexto em algum plano."""
    lexicon = lexicon or Lexicon.default()
    residue = {m.value for m in MetaClass}
    found = []
    for episode in suite.episodes:
        try:
            result = plan(episode.build_instruction(), lexicon)
        except (ContextParseError, PlanningError, SubstitutionError) as e:
            found.append(f"{episode.episode_id}: {e}")
            continue
        if any(isinstance(c, MetaClass) or c in residue for c in result.categories()):
            found.append(f"{episode.episode_id}: meta-classe no plano")
        if not result.is_context_closed():
            found.append(f"{episode.episode_id}: categoria fora do contexto")
    return found


def planning_report(suite: Suite, lexicon: Optional[Lexicon] = None) -> dict:
    lexicon = lexicon or Lexicon.default()
    return {
        'planning_accuracy': {
            'cap': planning_accuracy(suite, True, lexicon),
            'no_cap': planning_accuracy(suite, False, lexicon),
        },
        'context_accuracy': {
            split: context_accuracy(suite, lexicon, split)
            for split in sorted({ep.split for ep in suite.episodes})
        },
        'violations': plan_violations(suite, lexicon),
    }
