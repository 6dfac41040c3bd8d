"""
Módulo de Tarefas
Define as famílias de tarefas, as condições de objetivo derivadas e a
verificação de objetivo sobre o estado do mundo.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, model_validator

from .grid_world import DIRTY, COLD, HOT, SLICED, TOGGLED_ON, GridWorld
from .vocabulary import get_category


class TaskFamily(str, Enum):
    PICK_PLACE = 'PickPlace'
    PICK_TWO_PLACE = 'PickTwoPlace'
    CLEAN_PLACE = 'CleanPlace'
    HEAT_PLACE = 'HeatPlace'
    COOL_PLACE = 'CoolPlace'
    EXAMINE_IN_LIGHT = 'ExamineInLight'
    PICK_PLACE_MOVABLE_RECEPTACLE = 'PickPlaceMovableReceptacle'


SLICEABLE_FAMILIES = frozenset({
    TaskFamily.PICK_PLACE, TaskFamily.PICK_TWO_PLACE, TaskFamily.HEAT_PLACE,
    TaskFamily.COOL_PLACE, TaskFamily.PICK_PLACE_MOVABLE_RECEPTACLE,
})


@dataclass(frozen=True)
class GoalCondition:
    """
    Predicado puro sobre o mundo.

    kind:
        'exists'  - existe instância de `category` com as flags exigidas
        'inside'  - pelo menos `count` instâncias dentro de `container`
        'nested'  - instância dentro de `container`, que está dentro de `outer`
        'held'    - o agente segura uma instância de `category`
        'toggled' - alguma instância de `category` está ligada
    """
    kind: str
    category: str
    container: Optional[str] = None
    outer: Optional[str] = None
    count: int = 1
    required: Tuple[str, ...] = ()
    forbidden: Tuple[str, ...] = ()

    def _matches(self, inst) -> bool:
        return (inst.category == self.category
                and all(flag in inst.state for flag in self.required)
                and not any(flag in inst.state for flag in self.forbidden))

    def evaluate(self, world: GridWorld) -> bool:
        if self.kind == 'held':
            held = world.agent.held
            return held is not None and self._matches(world.instances[held])
        if self.kind == 'toggled':
            return any(TOGGLED_ON in inst.state for inst in world.by_category(self.category))
        matches = [inst for inst in world.instances.values() if self._matches(inst)]
        if self.kind == 'exists':
            return len(matches) >= self.count
        inside = [inst for inst in matches
                  if inst.parent is not None
                  and world.instances[inst.parent].category == self.container]
        if self.kind == 'inside':
            return len(inside) >= self.count
        if self.kind == 'nested':
            for inst in inside:
                carrier = world.instances[inst.parent]
                if carrier.parent is not None \
                        and world.instances[carrier.parent].category == self.outer:
                    return True
            return False
        raise ValueError(f"Tipo de condição desconhecido: {self.kind}")

    def describe(self) -> str:
        flags = ''.join(f"+{f}" for f in self.required) + ''.join(f"-{f}" for f in self.forbidden)
        where = f" in {self.container}" if self.container else ''
        if self.outer:
            where += f" in {self.outer}"
        return f"{self.kind}({self.count}x {self.category}{flags}{where})"


class TaskSpec(BaseModel):
    """Tarefa vinculada a um mundo; as condições de objetivo são derivadas."""
    family: TaskFamily
    target: str
    destination: str
    mrecep: Optional[str] = None
    sliced: bool = False

    @model_validator(mode='after')
    def _check(self) -> 'TaskSpec':
        for name in (self.target, self.destination, self.mrecep):
            if name is not None:
                get_category(name)
        is_mr = self.family is TaskFamily.PICK_PLACE_MOVABLE_RECEPTACLE
        if (self.mrecep is not None) != is_mr:
            raise ValueError("mrecep existe se e somente se a família é PickPlaceMovableReceptacle")
        if is_mr and not get_category(self.mrecep).movable_receptacle:
            raise ValueError(f"{self.mrecep} não é receptáculo móvel")
        if not get_category(self.target).pickupable:
            raise ValueError(f"{self.target} não é pegável")
        if self.sliced and (self.family not in SLICEABLE_FAMILIES
                            or not get_category(self.target).sliceable):
            raise ValueError(f"Fatiado não se aplica a {self.family.value}/{self.target}")
        if self.family is TaskFamily.EXAMINE_IN_LIGHT:
            if not get_category(self.destination).toggleable:
                raise ValueError(f"{self.destination} não é uma fonte de luz")
        elif not get_category(self.destination).receptacle:
            raise ValueError(f"{self.destination} não é receptáculo")
        return self

    @property
    def goal_conditions(self) -> List[GoalCondition]:
        return derive_goal_conditions(self)

    def label(self) -> str:
        parts = [self.family.value, ('sliced ' if self.sliced else '') + self.target]
        if self.mrecep:
            parts.append(self.mrecep)
        parts.append(self.destination)
        return '/'.join(parts)


def derive_goal_conditions(task: TaskSpec) -> List[GoalCondition]:
    """Lista de condições determinada apenas por (família, alvo, mrecep, destino)."""
    family, target, dest = task.family, task.target, task.destination
    base = (SLICED,) if task.sliced else ()
    conditions: List[GoalCondition] = []
    if task.sliced:
        conditions.append(GoalCondition('exists', target, required=base))

    if family is TaskFamily.PICK_PLACE:
        conditions.append(GoalCondition('inside', target, dest, required=base))
    elif family is TaskFamily.PICK_TWO_PLACE:
        conditions.append(GoalCondition('inside', target, dest, count=1, required=base))
        conditions.append(GoalCondition('inside', target, dest, count=2, required=base))
    elif family is TaskFamily.CLEAN_PLACE:
        conditions.append(GoalCondition('inside', target, dest))
        conditions.append(GoalCondition('inside', target, dest, forbidden=(DIRTY,)))
    elif family in (TaskFamily.HEAT_PLACE, TaskFamily.COOL_PLACE):
        flag = HOT if family is TaskFamily.HEAT_PLACE else COLD
        conditions.append(GoalCondition('inside', target, dest, required=base))
        conditions.append(GoalCondition('inside', target, dest, required=base + (flag,)))
    elif family is TaskFamily.EXAMINE_IN_LIGHT:
        conditions.append(GoalCondition('held', target))
        conditions.append(GoalCondition('toggled', dest))
    else:
        carrier = task.mrecep
        conditions.append(GoalCondition('inside', carrier, dest))
        conditions.append(GoalCondition('inside', target, carrier, required=base))
        conditions.append(GoalCondition('nested', target, carrier, outer=dest, required=base))
    return conditions


@dataclass
class GoalReport:
    satisfied: int
    total: int
    success: bool
    conditions: List[bool] = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.satisfied / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {'satisfied': self.satisfied, 'total': self.total,
                'success': self.success, 'conditions': list(self.conditions)}


def check_goal(world: GridWorld, task: TaskSpec) -> GoalReport:
    """
    Avalia as condições de objetivo da tarefa.

    Returns:
        GoalReport com success verdadeiro se e somente se todas valem
    """
    flags = [cond.evaluate(world) for cond in task.goal_conditions]
    satisfied = sum(flags)
    return GoalReport(satisfied=satisfied, total=len(flags),
                      success=satisfied == len(flags), conditions=flags)
