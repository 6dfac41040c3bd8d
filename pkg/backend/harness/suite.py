"""
Módulo de Suíte
Geração determinística de episódios (mundo, tarefa, instrução, L*) a partir
de uma semente, com rejeição e reamostragem de sorteios insolúveis.
"""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..errors import EmbodiedError
from ..instruction.lexicon import Lexicon
from ..instruction.templates import Instruction, InstructionGenerationError, generate_instruction
from ..world.expert import ExpertError, expert_path_length
from ..world.generation import GenerationError, WorldParams, generate_world
from ..world.grid_world import GridWorld, WorldRecord
from ..world.tasks import SLICEABLE_FAMILIES, TaskFamily, TaskSpec, check_goal
from ..world.vocabulary import get_category

logger = logging.getLogger(__name__)

F = TaskFamily

FAMILY_ORDER: Tuple[TaskFamily, ...] = tuple(TaskFamily)

# Códigos curtos usados nos ids de episódio
FAMILY_CODES: Dict[TaskFamily, str] = {
    F.PICK_PLACE: 'pick',
    F.PICK_TWO_PLACE: 'picktwo',
    F.CLEAN_PLACE: 'clean',
    F.HEAT_PLACE: 'heat',
    F.COOL_PLACE: 'cool',
    F.EXAMINE_IN_LIGHT: 'examine',
    F.PICK_PLACE_MOVABLE_RECEPTACLE: 'mrecep',
}

_FOODS = ('Apple', 'Tomato', 'Potato', 'Bread', 'Lettuce', 'Egg')
_SMALL_ITEMS = ('Fork', 'Spoon', 'Ladle', 'SoapBar', 'SoapBottle', 'TissueBox',
                'Watch', 'CellPhone', 'Book')
_PLACES = ('CounterTop', 'Table', 'Shelf', 'Cabinet', 'Drawer', 'GarbageCan')
_STATE_PLACES = ('CounterTop', 'Table', 'Shelf', 'Cabinet', 'Drawer')

# (alvos, carregadores, destinos) por família; Knife nunca é alvo
TASK_POOLS: Dict[TaskFamily, Tuple[Tuple[str, ...], Tuple[str, ...], Tuple[str, ...]]] = {
    F.PICK_PLACE: (_FOODS + _SMALL_ITEMS, (), _PLACES),
    F.PICK_TWO_PLACE: (_FOODS + _SMALL_ITEMS, (), _PLACES),
    F.CLEAN_PLACE: (('Fork', 'Spoon', 'Ladle', 'Plate', 'Bowl', 'Mug', 'Cup', 'Pot', 'Pan'),
                    (), _STATE_PLACES),
    F.HEAT_PLACE: (('Apple', 'Tomato', 'Potato', 'Bread', 'Egg'), (), _STATE_PLACES),
    F.COOL_PLACE: (('Apple', 'Tomato', 'Potato', 'Bread', 'Lettuce', 'Egg'), (), _STATE_PLACES),
    F.EXAMINE_IN_LIGHT: (('Watch', 'CellPhone', 'Book', 'TissueBox', 'SoapBar', 'Apple'),
                         (), ('Lamp',)),
    F.PICK_PLACE_MOVABLE_RECEPTACLE: (
        ('Apple', 'Tomato', 'Egg', 'Fork', 'Spoon', 'Watch', 'SoapBar', 'CellPhone'),
        ('Plate', 'Bowl', 'Mug', 'Cup', 'Pot', 'Pan', 'Box'),
        ('CounterTop', 'Table', 'Shelf', 'Cabinet', 'Drawer'),
    ),
}

SLICED_SHARE = 0.3
MAX_ATTEMPTS = 40


class SuiteGenerationError(EmbodiedError):
    """Orçamento de reamostragem esgotado para algum episódio."""


class SuiteSpec(BaseModel):
    """Parâmetros da suíte; o resultado é função pura destes campos."""
    seed: int = Field(default=0, ge=0)
    per_family: int = Field(default=10, gt=0)
    split: Literal['seen', 'unseen', 'both'] = 'seen'
    world_params: Optional[WorldParams] = None
    max_attempts: int = Field(default=MAX_ATTEMPTS, gt=0)

    @property
    def splits(self) -> List[str]:
        return ['seen', 'unseen'] if self.split == 'both' else [self.split]

    def params_for(self, split: str) -> WorldParams:
        return self.world_params or WorldParams.for_split(split)


class SuiteEpisode(BaseModel):
    """Episódio gerado: mundo inicial, tarefa, instrução e L* do especialista."""
    episode_id: str
    split: Literal['seen', 'unseen']
    family: TaskFamily
    world: WorldRecord
    task: TaskSpec
    instruction: str
    expert_length: int = Field(gt=0)
    world_seed: int

    def build_world(self) -> GridWorld:
        return GridWorld.from_record(self.world)

    def build_instruction(self) -> Instruction:
        return Instruction.from_text(self.instruction)


class Suite(BaseModel):
    spec: SuiteSpec
    episodes: List[SuiteEpisode] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.episodes)

    def by_family(self, family: TaskFamily) -> List[SuiteEpisode]:
        return [ep for ep in self.episodes if ep.family is family]

    def save(self, path) -> None:
        Path(path).write_text(self.model_dump_json(indent=1), encoding='utf-8')

    @classmethod
    def load(cls, path) -> 'Suite':
        return cls.model_validate_json(Path(path).read_text(encoding='utf-8'))


def sample_task(family: TaskFamily, rng: np.random.Generator) -> TaskSpec:
    """Sorteia uma tarefa da família a partir dos pools."""
    targets, carriers, places = TASK_POOLS[family]
    target = targets[int(rng.integers(0, len(targets)))]
    destination = places[int(rng.integers(0, len(places)))]
    mrecep = carriers[int(rng.integers(0, len(carriers)))] if carriers else None
    sliced = bool(rng.random() < SLICED_SHARE)
    if not get_category(target).sliceable or family not in SLICEABLE_FAMILIES:
        sliced = False
    return TaskSpec(family=family, target=target, destination=destination,
                    mrecep=mrecep, sliced=sliced)


def _available(world: GridWorld, category: str) -> int:
    """Instâncias da categoria no mundo, inclusive dentro de contêineres fechados."""
    return len(world.by_category(category))


def rejection_reason(world: GridWorld, task: TaskSpec) -> Optional[str]:
    """
    Motivo para descartar o par (mundo, tarefa), ou None se aceitável.

    Objetos guardados em contêineres fechados contam: o agente abre
    contêineres para procurar e o especialista os abre para coletar.
    """
    needed = 2 if task.family is F.PICK_TWO_PLACE and not task.sliced else 1
    if _available(world, task.target) < needed:
        return f"{task.target} ausente"
    if task.mrecep and _available(world, task.mrecep) < 1:
        return f"{task.mrecep} ausente"
    if task.sliced and _available(world, 'Knife') < 1:
        return "Knife ausente"
    report = check_goal(world, task)
    if report.satisfied > 0:
        return "condição de objetivo já satisfeita"
    return None


def _params_for_task(params: WorldParams, task: TaskSpec) -> WorldParams:
    minimum = {task.target: 2 if task.family is F.PICK_TWO_PLACE else 1,
               task.destination: 1}
    if task.mrecep:
        minimum[task.mrecep] = 1
    if task.sliced:
        minimum['Knife'] = 1
    return params.with_minimum(minimum)


def generate_episode(spec: SuiteSpec, split: str, family: TaskFamily, k: int,
                     lexicon: Lexicon) -> SuiteEpisode:
    """
    Gera o k-ésimo episódio de uma família, reamostrando até ser solúvel.

    Raises:
        SuiteGenerationError: nenhum sorteio aceito em max_attempts tentativas
    """
    split_index = 0 if split == 'seen' else 1
    family_index = FAMILY_ORDER.index(family)
    episode_id = f"{split}-{FAMILY_CODES[family]}-{k:03d}"
    base = spec.params_for(split)
    for attempt in range(spec.max_attempts):
        rng = np.random.default_rng([spec.seed, split_index, family_index, k, attempt])
        task = sample_task(family, rng)
        world_seed = int(rng.integers(0, 2 ** 31 - 1))
        instruction_seed = int(rng.integers(0, 2 ** 31 - 1))
        try:
            world = generate_world(world_seed, _params_for_task(base, task))
            reason = rejection_reason(world, task)
            if reason is None:
                instruction = generate_instruction(task, lexicon, instruction_seed, split)
                length = expert_path_length(world, task)
        except (GenerationError, InstructionGenerationError, ExpertError) as e:
            reason = str(e)
        if reason is not None:
            logger.warning(f"Episódio {episode_id} rejeitado (tentativa {attempt}): "
                           f"{task.label()}: {reason}")
            continue
        return SuiteEpisode(
            episode_id=episode_id, split=split, family=family,
            world=world.to_record(), task=task, instruction=instruction.text,
            expert_length=length, world_seed=world_seed,
        )
    raise SuiteGenerationError(
        f"Nenhum episódio aceito para {episode_id} em {spec.max_attempts} tentativas")


def generate_suite(spec: SuiteSpec, lexicon: Optional[Lexicon] = None) -> Suite:
    """
    Gera a suíte completa: per_family episódios por família e por split.

    Args:
        spec: Parâmetros da suíte
        lexicon: Léxico das instruções (padrão: léxico embutido)

    Returns:
        Suite com episódios ordenados por id

    Raises:
        SuiteGenerationError: orçamento de reamostragem esgotado
    """
    lexicon = lexicon or Lexicon.default()
    episodes = []
    for split in spec.splits:
        for family in FAMILY_ORDER:
            for k in range(spec.per_family):
                episodes.append(generate_episode(spec, split, family, k, lexicon))
        logger.info(f"Split {split}: {spec.per_family * len(FAMILY_ORDER)} episódios gerados")
    episodes.sort(key=lambda ep: ep.episode_id)
    return Suite(spec=spec, episodes=episodes)
