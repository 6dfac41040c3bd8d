"""
Módulo de Planejadores Detalhados
Expande cada sub-objetivo em uma sequência de ações executáveis (com
pseudo-passos Goto), condicionada à crença do agente.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from ..world.dynamics import ActionKind
from ..world.vocabulary import get_category
from .frames import PlanningError, SubGoal, SubGoalAction


class DetailedKind(str, Enum):
    GOTO = 'Goto'
    PICKUP = 'Pickup'
    PUT = 'Put'
    OPEN = 'Open'
    CLOSE = 'Close'
    TOGGLE_ON = 'ToggleOn'
    TOGGLE_OFF = 'ToggleOff'
    SLICE = 'Slice'

    @property
    def action_kind(self) -> Optional[ActionKind]:
        return _ACTION_KIND.get(self)


_ACTION_KIND = {
    DetailedKind.PICKUP: ActionKind.PICKUP,
    DetailedKind.PUT: ActionKind.PUT,
    DetailedKind.OPEN: ActionKind.OPEN,
    DetailedKind.CLOSE: ActionKind.CLOSE,
    DetailedKind.TOGGLE_ON: ActionKind.TOGGLE_ON,
    DetailedKind.TOGGLE_OFF: ActionKind.TOGGLE_OFF,
    DetailedKind.SLICE: ActionKind.SLICE,
}


@dataclass(frozen=True)
class DetailedAction:
    """
    Passo (a_t, o_t). Para Put, `target` é o receptáculo e `subject` o
    objeto carregado; `retrieve` marca a retirada do mesmo objeto que o
    agente acabou de depositar; `tolerate` aceita "já está nesse estado".
    """
    kind: DetailedKind
    target: Optional[str]
    subject: Optional[str] = None
    retrieve: bool = False
    tolerate: bool = False

    def to_list(self) -> list:
        return [self.kind.value, self.target, self.subject]


@dataclass(frozen=True)
class BeliefSnapshot:
    """Cópia por valor da crença: objeto na mão e portas conhecidas."""
    held: Optional[str] = None
    open_state: Dict[str, bool] = field(default_factory=dict)

    def believed_open(self, category: str) -> Optional[bool]:
        return self.open_state.get(category)


D = DetailedKind


def _goto(category: str) -> DetailedAction:
    return DetailedAction(D.GOTO, category)


def _ensure_holding(obj: str, belief: BeliefSnapshot) -> List[DetailedAction]:
    if belief.held == obj:
        return []
    return [_goto(obj), DetailedAction(D.PICKUP, obj)]


def _bracket(receptacle: str, belief: BeliefSnapshot, inner: List[DetailedAction]) -> List[DetailedAction]:
    """Abre/fecha o receptáculo em volta de `inner` se puder estar fechado."""
    if not get_category(receptacle).openable or belief.believed_open(receptacle) is True:
        return inner
    unknown = belief.believed_open(receptacle) is None
    return ([DetailedAction(D.OPEN, receptacle, tolerate=unknown)] + inner
            + [DetailedAction(D.CLOSE, receptacle)])


def plan_detailed(sub_goal: SubGoal, belief: BeliefSnapshot) -> List[DetailedAction]:
    """
    Expande um sub-objetivo pelo planejador detalhado da sua ação.

    Args:
        sub_goal: (A_n, O_n, R_n) sem meta-classes
        belief: Crença atual (objeto na mão, portas conhecidas)

    Returns:
        Lista ordenada de DetailedAction

    Raises:
        PlanningError: ação de sub-objetivo desconhecida
    """
    action, obj, recep = sub_goal.action, sub_goal.obj, sub_goal.receptacle

    if action is SubGoalAction.PICKUP:
        if recep is None:
            return [_goto(obj), DetailedAction(D.PICKUP, obj)]
        return [_goto(recep)] + _bracket(recep, belief, [DetailedAction(D.PICKUP, obj)])

    if action is SubGoalAction.PUT:
        if recep is None:
            raise PlanningError(f"Put sem receptáculo para {obj}")
        put = DetailedAction(D.PUT, recep, subject=obj)
        return _ensure_holding(obj, belief) + [_goto(recep)] + _bracket(recep, belief, [put])

    if action is SubGoalAction.CLEAN:
        basin = recep or 'SinkBasin'
        return _ensure_holding(obj, belief) + [
            _goto(basin),
            DetailedAction(D.PUT, basin, subject=obj),
            _goto('Faucet'),
            DetailedAction(D.TOGGLE_ON, 'Faucet', tolerate=True),
            DetailedAction(D.TOGGLE_OFF, 'Faucet'),
            _goto(basin),
            DetailedAction(D.PICKUP, obj, retrieve=True),
        ]

    if action is SubGoalAction.HEAT:
        oven = recep or 'Microwave'
        opening = [] if belief.believed_open(oven) is True else [
            DetailedAction(D.OPEN, oven, tolerate=belief.believed_open(oven) is None)]
        return _ensure_holding(obj, belief) + [_goto(oven)] + opening + [
            DetailedAction(D.PUT, oven, subject=obj),
            DetailedAction(D.CLOSE, oven),
            DetailedAction(D.TOGGLE_ON, oven),
            DetailedAction(D.TOGGLE_OFF, oven),
            DetailedAction(D.OPEN, oven),
            DetailedAction(D.PICKUP, obj, retrieve=True),
            DetailedAction(D.CLOSE, oven),
        ]

    if action is SubGoalAction.COOL:
        fridge = recep or 'Fridge'
        opening = [] if belief.believed_open(fridge) is True else [
            DetailedAction(D.OPEN, fridge, tolerate=belief.believed_open(fridge) is None)]
        # o fechamento intermediário é o "tick" que aciona a regra de resfriamento
        return _ensure_holding(obj, belief) + [_goto(fridge)] + opening + [
            DetailedAction(D.PUT, fridge, subject=obj),
            DetailedAction(D.CLOSE, fridge),
            DetailedAction(D.OPEN, fridge),
            DetailedAction(D.PICKUP, obj, retrieve=True),
            DetailedAction(D.CLOSE, fridge),
        ]

    if action is SubGoalAction.SLICE:
        steps = [] if belief.held == 'Knife' else [_goto('Knife'), DetailedAction(D.PICKUP, 'Knife')]
        return steps + [
            _goto(obj),
            DetailedAction(D.SLICE, obj),
            _goto('CounterTop'),
            DetailedAction(D.PUT, 'CounterTop', subject='Knife'),
        ]

    if action is SubGoalAction.TOGGLE_ON:
        return [_goto(obj), DetailedAction(D.TOGGLE_ON, obj)]

    raise PlanningError(f"Ação de sub-objetivo desconhecida: {action}")
