"""
Módulo de Cenários
Mundos montados à mão que reproduzem os exemplos qualitativos: cada cenário
roda com a configuração completa e com uma ablação, e o par de resultados
esperado (sucesso / falha ou ineficiência) é verificado.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..agent.config import AgentConfig
from ..agent.episode import run_episode
from ..agent.trace import EpisodeTrace
from ..errors import EmbodiedError
from ..instruction.lexicon import Lexicon
from ..instruction.templates import Instruction
from ..world.grid_world import DIRTY, AgentPose, Cell, GridWorld, Heading, ObjectInstance
from ..world.tasks import TaskFamily, TaskSpec

logger = logging.getLogger(__name__)

F = TaskFamily

Furniture = Tuple[str, str, Cell]
Item = Tuple[str, str, str, Sequence[str]]


class UnknownScenarioError(EmbodiedError):
    """Nome de cenário inexistente."""


def build_room(shape: Tuple[int, int], agent: Cell, heading: Heading,
               furniture: Sequence[Furniture], items: Sequence[Item]) -> GridWorld:
    """
    Sala retangular com paredes na borda.

    Args:
        shape: (linhas, colunas) incluindo as paredes
        agent: Célula inicial do agente
        heading: Orientação inicial
        furniture: (id, categoria, célula) dos móveis fixos
        items: (id, categoria, id do pai, flags) dos objetos pegáveis

    Returns:
        GridWorld com a contenção verificada
    """
    walls = np.zeros(shape, dtype=bool)
    walls[0, :] = walls[-1, :] = True
    walls[:, 0] = walls[:, -1] = True
    world = GridWorld(walls, AgentPose(cell=agent, heading=heading))
    for instance_id, category, cell in furniture:
        world.add_instance(ObjectInstance(instance_id, category, cell))
    for instance_id, category, parent, flags in items:
        world.add_instance(ObjectInstance(instance_id, category, None, state=set(flags)))
        world.put_inside(instance_id, parent)
    world.check_containment()
    return world


def _watch_bowl_world() -> GridWorld:
    # sem faca na sala
    return build_room(
        (6, 9), (3, 4), Heading.NORTH,
        furniture=[('Table_1', 'Table', (1, 1)), ('CounterTop_1', 'CounterTop', (1, 6)),
                   ('Shelf_1', 'Shelf', (4, 4))],
        items=[('Watch_1', 'Watch', 'Table_1', ()), ('Bowl_1', 'Bowl', 'CounterTop_1', ())],
    )


def _tissuebox_world() -> GridWorld:
    return build_room(
        (6, 9), (2, 4), Heading.NORTH,
        furniture=[('Shelf_1', 'Shelf', (1, 1)), ('Shelf_2', 'Shelf', (1, 7)),
                   ('Table_1', 'Table', (4, 4))],
        items=[('TissueBox_1', 'TissueBox', 'Shelf_1', ()),
               ('TissueBox_2', 'TissueBox', 'Shelf_2', ())],
    )


def _apple_slice_world() -> GridWorld:
    # maçã inteira (isca) mais perto do balcão onde a faca é devolvida
    return build_room(
        (5, 13), (2, 10), Heading.WEST,
        furniture=[('Shelf_1', 'Shelf', (1, 10)), ('CounterTop_1', 'CounterTop', (1, 5)),
                   ('Shelf_2', 'Shelf', (3, 3)), ('Table_1', 'Table', (3, 8))],
        items=[('Knife_1', 'Knife', 'Shelf_1', ()), ('Apple_1', 'Apple', 'Shelf_1', ()),
               ('Apple_2', 'Apple', 'Shelf_2', ())],
    )


def _soapbars_world() -> GridWorld:
    return build_room(
        (6, 9), (2, 4), Heading.NORTH,
        furniture=[('Shelf_1', 'Shelf', (1, 1)), ('CounterTop_1', 'CounterTop', (1, 7)),
                   ('GarbageCan_1', 'GarbageCan', (4, 4))],
        items=[('SoapBar_1', 'SoapBar', 'Shelf_1', ()),
               ('SoapBar_2', 'SoapBar', 'CounterTop_1', ()),
               ('SoapBottle_1', 'SoapBottle', 'CounterTop_1', ())],
    )


def _clean_spoon_world() -> GridWorld:
    return build_room(
        (6, 9), (2, 4), Heading.NORTH,
        furniture=[('CounterTop_1', 'CounterTop', (1, 2)), ('SinkBasin_1', 'SinkBasin', (1, 5)),
                   ('Faucet_1', 'Faucet', (1, 6)), ('Drawer_1', 'Drawer', (4, 4)),
                   ('CounterTop_2', 'CounterTop', (4, 1))],
        items=[('Spoon_1', 'Spoon', 'CounterTop_1', (DIRTY,)),
               ('Ladle_1', 'Ladle', 'CounterTop_2', (DIRTY,))],
    )


def _cup_fork_world() -> GridWorld:
    return build_room(
        (6, 9), (2, 4), Heading.NORTH,
        furniture=[('Table_1', 'Table', (1, 2)), ('CounterTop_1', 'CounterTop', (1, 6)),
                   ('SinkBasin_1', 'SinkBasin', (4, 4)), ('Faucet_1', 'Faucet', (4, 5))],
        items=[('Fork_1', 'Fork', 'Table_1', ()), ('Cup_1', 'Cup', 'CounterTop_1', ())],
    )


@dataclass(frozen=True)
class Scenario:
    """
    Cenário roteirizado.

    expect:
        'failure' - a ablação termina sem sucesso (com um dos motivos listados)
        'longer'  - a ablação também tem sucesso, mas com trajetória mais longa
    """
    name: str
    description: str
    instruction: str
    task: TaskSpec
    build: Callable[[], GridWorld]
    ablation: Dict[str, bool]
    expect: str = 'failure'
    expect_reasons: Tuple[str, ...] = ()

    def full_config(self) -> AgentConfig:
        return AgentConfig()

    def ablated_config(self) -> AgentConfig:
        return AgentConfig(**self.ablation)


SCENARIOS: Dict[str, Scenario] = {s.name: s for s in [
    Scenario(
        name='watch-bowl-no-context',
        description="Sem contexto, 'watch' é confundido com Knife, ausente da sala",
        instruction="put a watch in a bowl on the shelf",
        task=TaskSpec(family=F.PICK_PLACE_MOVABLE_RECEPTACLE, target='Watch',
                      mrecep='Bowl', destination='Shelf'),
        build=_watch_bowl_world,
        ablation={'cap_enabled': False},
        expect_reasons=('target_not_found', 'max_steps'),
    ),
    Scenario(
        name='occluded-bowl-mask',
        description="A tigela com o relógio some da detecção; só a máscara guardada a resolve",
        instruction="put a watch in a bowl on the shelf",
        task=TaskSpec(family=F.PICK_PLACE_MOVABLE_RECEPTACLE, target='Watch',
                      mrecep='Bowl', destination='Shelf'),
        build=_watch_bowl_world,
        ablation={'eam_mask_cache': False},
        expect_reasons=('max_interaction_failures',),
    ),
    Scenario(
        name='tissuebox-relocation',
        description="Sem o registro de realocações a segunda coleta pega a caixa já entregue",
        instruction="put two tissue boxes on the table",
        task=TaskSpec(family=F.PICK_TWO_PLACE, target='TissueBox', destination='Table'),
        build=_tissuebox_world,
        ablation={'eam_relocation': False},
        expect_reasons=('stop',),
    ),
    Scenario(
        name='apple-slice-state-cache',
        description="Sem o cache de estado o agente visita a maçã inteira antes das fatias",
        instruction="slice an apple and put it on the table",
        task=TaskSpec(family=F.PICK_PLACE, target='Apple', destination='Table', sliced=True),
        build=_apple_slice_world,
        ablation={'eam_state_cache': False},
        expect='longer',
    ),
    Scenario(
        name='soapbars-no-context',
        description="Sem contexto, o segundo Put pede SoapBottle com as mãos ocupadas",
        instruction="throw two bars of soap in the trash bin",
        task=TaskSpec(family=F.PICK_TWO_PLACE, target='SoapBar', destination='GarbageCan'),
        build=_soapbars_world,
        ablation={'cap_enabled': False},
        expect_reasons=('max_interaction_failures',),
    ),
    Scenario(
        name='clean-spoon-no-context',
        description="Sem contexto, a limpeza é planejada para a concha em vez da colher",
        instruction="put a clean spoon in a drawer",
        task=TaskSpec(family=F.CLEAN_PLACE, target='Spoon', destination='Drawer'),
        build=_clean_spoon_world,
        ablation={'cap_enabled': False},
        expect_reasons=('max_interaction_failures',),
    ),
    Scenario(
        name='occluded-cup-mask',
        description="A xícara com o garfo fica ocluída; sem máscara a coleta falha",
        instruction="put a cup with a fork in it in the sink",
        task=TaskSpec(family=F.PICK_PLACE_MOVABLE_RECEPTACLE, target='Fork',
                      mrecep='Cup', destination='SinkBasin'),
        build=_cup_fork_world,
        ablation={'eam_mask_cache': False},
        expect_reasons=('max_interaction_failures',),
    ),
]}

# Nomes alternativos dos cenários, aceitos na CLI e na API
SCENARIO_ALIASES: Dict[str, str] = {
    'fig5-watch-bowl': 'watch-bowl-no-context',
    'fig7-bowl-watch': 'occluded-bowl-mask',
    'fig8-tissuebox': 'tissuebox-relocation',
    'suppB-apple-slice': 'apple-slice-state-cache',
    'video-soapbars': 'soapbars-no-context',
}


def scenario_names() -> List[str]:
    """Nomes aceitos: os dos cenários e os alternativos."""
    return sorted(SCENARIOS) + sorted(SCENARIO_ALIASES)


@dataclass
class ScenarioResult:
    name: str
    full: EpisodeTrace
    ablated: EpisodeTrace
    ablated_label: str
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> dict:
        def brief(trace: EpisodeTrace) -> dict:
            return {'success': trace.success, 'steps': trace.steps,
                    'reason': trace.reason, 'goal': trace.goal}

        return {'scenario': self.name, 'ok': self.ok, 'mismatches': list(self.mismatches),
                'full': brief(self.full), 'ablated': dict(brief(self.ablated),
                                                          config=self.ablated_label)}


def get_scenario(name: str) -> Scenario:
    """
    Busca um cenário pelo nome ou por um nome alternativo.

    Raises:
        UnknownScenarioError: nome inexistente
    """
    try:
        return SCENARIOS[SCENARIO_ALIASES.get(name, name)]
    except KeyError:
        raise UnknownScenarioError(
            f"Cenário desconhecido: {name} (disponíveis: {', '.join(scenario_names())})") from None


def check_expectation(scenario: Scenario, full: EpisodeTrace,
                      ablated: EpisodeTrace) -> List[str]:
    """Diferenças entre o par obtido e o par roteirizado."""
    found = []
    if not full.success:
        found.append(f"configuração completa falhou ({full.reason})")
    if scenario.expect == 'longer':
        if not ablated.success:
            found.append(f"ablação deveria ter sucesso, terminou com {ablated.reason}")
        elif ablated.steps <= full.steps:
            found.append(f"ablação não foi mais longa ({ablated.steps} <= {full.steps})")
    else:
        if ablated.success:
            found.append("ablação deveria falhar e teve sucesso")
        elif scenario.expect_reasons and ablated.reason not in scenario.expect_reasons:
            found.append(f"motivo {ablated.reason} fora de {list(scenario.expect_reasons)}")
    return found


def run_scenario(name: str, lexicon: Optional[Lexicon] = None) -> ScenarioResult:
    """
    Executa o cenário com a configuração completa e com a ablação.

    Raises:
        UnknownScenarioError: nome inexistente
    """
    scenario = get_scenario(name)
    name = scenario.name
    lexicon = lexicon or Lexicon.default()
    world = scenario.build()
    instruction = Instruction.from_text(scenario.instruction)
    full = run_episode(world, instruction, lexicon, scenario.full_config(),
                       scenario.task, f"{name}-full")
    ablated_config = scenario.ablated_config()
    ablated = run_episode(world, instruction, lexicon, ablated_config,
                          scenario.task, f"{name}-{ablated_config.label()}")
    result = ScenarioResult(name, full, ablated, ablated_config.label(),
                            check_expectation(scenario, full, ablated))
    if result.ok:
        logger.info(f"Cenário {name}: ok (completo {full.steps} passos, "
                    f"{ablated_config.label()} {ablated.reason})")
    else:
        logger.warning(f"Cenário {name}: {'; '.join(result.mismatches)}")
    return result
