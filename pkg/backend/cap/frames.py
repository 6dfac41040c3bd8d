"""
Módulo de Frames de Sub-objetivos
Classifica a família da tarefa pela instrução e pelo padrão de presença do
contexto, emite a sequência canônica de frames com meta-classes e faz a
substituição pelo contexto.
"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple, Union

from ..errors import EmbodiedError
from ..instruction.context import Context
from ..instruction.grammar import has_keyword
from ..instruction.templates import Instruction
from ..world.tasks import SLICEABLE_FAMILIES, TaskFamily, TaskSpec


class PlanningError(EmbodiedError):
    """Instrução não classificável ou ação de sub-objetivo desconhecida."""


class SubstitutionError(EmbodiedError):
    """Meta-classe sem categoria no contexto (frame incompatível com a presença)."""


class MetaClass(str, Enum):
    X_O = 'x_O'
    X_M = 'x_M'
    X_R = 'x_R'


class SubGoalAction(str, Enum):
    PICKUP = 'Pickup'
    PUT = 'Put'
    CLEAN = 'Clean'
    HEAT = 'Heat'
    COOL = 'Cool'
    SLICE = 'Slice'
    TOGGLE_ON = 'ToggleOn'


Slot = Union[str, MetaClass]

_ROLE_OF = {MetaClass.X_O: 'c_O', MetaClass.X_M: 'c_M', MetaClass.X_R: 'c_R'}


@dataclass(frozen=True)
class SubGoalFrame:
    action: SubGoalAction
    obj: Slot
    receptacle: Optional[Slot] = None

    def meta_classes(self) -> List[MetaClass]:
        return [s for s in (self.obj, self.receptacle) if isinstance(s, MetaClass)]


@dataclass(frozen=True)
class SubGoal:
    action: SubGoalAction
    obj: str
    receptacle: Optional[str] = None

    def to_list(self) -> list:
        return [self.action.value, self.obj, self.receptacle]


def _frame(action, obj, receptacle=None) -> SubGoalFrame:
    return SubGoalFrame(action, obj, receptacle)


A = SubGoalAction
X_O, X_M, X_R = MetaClass.X_O, MetaClass.X_M, MetaClass.X_R

_SLICE_PREFIX = [_frame(A.PICKUP, 'Knife'), _frame(A.SLICE, X_O)]

_FAMILY_FRAMES = {
    TaskFamily.PICK_PLACE: [_frame(A.PICKUP, X_O), _frame(A.PUT, X_O, X_R)],
    TaskFamily.PICK_TWO_PLACE: [_frame(A.PICKUP, X_O), _frame(A.PUT, X_O, X_R)] * 2,
    TaskFamily.CLEAN_PLACE: [_frame(A.PICKUP, X_O), _frame(A.CLEAN, X_O, 'SinkBasin'),
                             _frame(A.PUT, X_O, X_R)],
    TaskFamily.HEAT_PLACE: [_frame(A.PICKUP, X_O), _frame(A.HEAT, X_O, 'Microwave'),
                            _frame(A.PUT, X_O, X_R)],
    TaskFamily.COOL_PLACE: [_frame(A.PICKUP, X_O), _frame(A.COOL, X_O, 'Fridge'),
                            _frame(A.PUT, X_O, X_R)],
    TaskFamily.EXAMINE_IN_LIGHT: [_frame(A.PICKUP, X_O), _frame(A.TOGGLE_ON, X_R)],
    TaskFamily.PICK_PLACE_MOVABLE_RECEPTACLE: [
        _frame(A.PICKUP, X_O), _frame(A.PUT, X_O, X_M),
        _frame(A.PICKUP, X_M), _frame(A.PUT, X_M, X_R),
    ],
}


def classify_family(instruction: Instruction,
                    presence: FrozenSet[str]) -> Tuple[TaskFamily, bool]:
    """
    Família e modificador de fatia a partir de verbos/estrutura.

    Raises:
        PlanningError: sem destino ou combinação fora da gramática
    """
    tokens = instruction.tokens
    if 'O' not in presence or 'R' not in presence:
        raise PlanningError(f"Padrão de presença sem objeto/destino: {sorted(presence)}")
    if 'M' in presence:
        family = TaskFamily.PICK_PLACE_MOVABLE_RECEPTACLE
    elif has_keyword(tokens, 'two'):
        family = TaskFamily.PICK_TWO_PLACE
    elif has_keyword(tokens, 'examine'):
        family = TaskFamily.EXAMINE_IN_LIGHT
    elif has_keyword(tokens, 'clean'):
        family = TaskFamily.CLEAN_PLACE
    elif has_keyword(tokens, 'heat'):
        family = TaskFamily.HEAT_PLACE
    elif has_keyword(tokens, 'cool'):
        family = TaskFamily.COOL_PLACE
    else:
        family = TaskFamily.PICK_PLACE
    sliced = has_keyword(tokens, 'slice')
    if sliced and family not in SLICEABLE_FAMILIES:
        raise PlanningError(f"Fatiar não combina com {family.value}")
    return family, sliced


def canonical_frames(family: TaskFamily, sliced: bool = False) -> List[SubGoalFrame]:
    frames = list(_FAMILY_FRAMES[family])
    if sliced:
        frames = list(_SLICE_PREFIX) + frames
    return frames


def generate_frames(instruction: Instruction, presence: FrozenSet[str]) -> List[SubGoalFrame]:
    """
    Sequência de frames da família; recebe só o padrão de presença,
    nunca as categorias do contexto.
    """
    family, sliced = classify_family(instruction, presence)
    return canonical_frames(family, sliced)


def _fill(slot: Optional[Slot], context: Context) -> Optional[str]:
    if not isinstance(slot, MetaClass):
        return slot
    value = getattr(context, _ROLE_OF[slot])
    if value is None:
        raise SubstitutionError(f"{slot.value} sem categoria no contexto")
    return value


def substitute(frames: List[SubGoalFrame], context: Context) -> List[SubGoal]:
    """Troca pontual x_O→c_O, x_M→c_M, x_R→c_R preservando ordem e ações."""
    return [SubGoal(f.action, _fill(f.obj, context), _fill(f.receptacle, context))
            for f in frames]


def canonical_sub_goals(task: TaskSpec) -> List[SubGoal]:
    """Sequência de referência obtida do contexto verdadeiro da tarefa."""
    context = Context(task.target, task.mrecep, task.destination)
    return substitute(canonical_frames(task.family, task.sliced), context)
