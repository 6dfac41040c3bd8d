"""
Módulo de Dinâmica
Implementa o alfabeto de ações, a resolução de handles e a execução de
ações com as regras de estado (limpar, aquecer, resfriar).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .grid_world import (
    COLD, DIRTY, HOT, OPEN, PITCHES, SLICED, TOGGLED_ON,
    GridWorld, ObjectInstance,
)
from .observation import InteractionHandle


class ActionKind(str, Enum):
    MOVE_AHEAD = 'MoveAhead'
    ROTATE_RIGHT = 'RotateRight'
    ROTATE_LEFT = 'RotateLeft'
    LOOK_UP = 'LookUp'
    LOOK_DOWN = 'LookDown'
    PICKUP = 'PickupObject'
    PUT = 'PutObject'
    OPEN = 'OpenObject'
    CLOSE = 'CloseObject'
    TOGGLE_ON = 'ToggleObjectOn'
    TOGGLE_OFF = 'ToggleObjectOff'
    SLICE = 'SliceObject'
    STOP = 'Stop'


NAVIGATION_KINDS = frozenset({
    ActionKind.MOVE_AHEAD, ActionKind.ROTATE_RIGHT, ActionKind.ROTATE_LEFT,
    ActionKind.LOOK_UP, ActionKind.LOOK_DOWN,
})
INTERACTION_KINDS = frozenset({
    ActionKind.PICKUP, ActionKind.PUT, ActionKind.OPEN, ActionKind.CLOSE,
    ActionKind.TOGGLE_ON, ActionKind.TOGGLE_OFF, ActionKind.SLICE,
})


class OutcomeStatus(str, Enum):
    SUCCESS = 'success'
    BLOCKED = 'blocked'
    HANDLE_MISSING = 'handle_missing'
    MOVED_SINCE_OBSERVED = 'moved_since_observed'
    OUT_OF_RANGE = 'out_of_range'
    INSTANCE_CONSUMED = 'instance_consumed'
    CAPABILITY = 'capability'
    HAND_OCCUPIED = 'hand_occupied'
    HAND_EMPTY = 'hand_empty'
    RECEPTACLE_CLOSED = 'receptacle_closed'
    ALREADY_IN_STATE = 'already_in_state'
    KNIFE_REQUIRED = 'knife_required'
    PITCH_LIMIT = 'pitch_limit'


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    handle: Optional[InteractionHandle] = None

    @property
    def is_interaction(self) -> bool:
        return self.kind in INTERACTION_KINDS

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'handle': self.handle.to_dict() if self.handle else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Action':
        handle = data.get('handle')
        return cls(ActionKind(data['kind']),
                   InteractionHandle.from_dict(handle) if handle else None)


@dataclass(frozen=True)
class ActionOutcome:
    status: OutcomeStatus
    instance_id: Optional[str] = None
    detail: str = ''

    @property
    def success(self) -> bool:
        return self.status is OutcomeStatus.SUCCESS

    def to_dict(self) -> dict:
        return {'status': self.status.value, 'instance_id': self.instance_id,
                'detail': self.detail}


@dataclass(frozen=True)
class Resolution:
    status: OutcomeStatus
    instance_id: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status is OutcomeStatus.SUCCESS


def resolve_handle(world: GridWorld, handle: InteractionHandle) -> Resolution:
    """
    Resolve um handle contra o estado atual.

    Não exige detecção atual: basta a instância existir, continuar na célula
    observada e essa célula estar ao alcance e em linha de visão.
    """
    instance_id = handle.instance_id
    if instance_id in world.consumed:
        return Resolution(OutcomeStatus.INSTANCE_CONSUMED)
    inst = world.instances.get(instance_id)
    if inst is None:
        return Resolution(OutcomeStatus.HANDLE_MISSING)
    if inst.cell is None or inst.cell != tuple(handle.observed_cell):
        return Resolution(OutcomeStatus.MOVED_SINCE_OBSERVED)
    if not world.in_interaction_range(inst.cell):
        return Resolution(OutcomeStatus.OUT_OF_RANGE)
    return Resolution(OutcomeStatus.SUCCESS, instance_id)


def apply_state_rules(world: GridWorld) -> None:
    """
    Regras de aparelhos: micro-ondas ligado aquece, geladeira fechada
    resfria, torneira ligada limpa o conteúdo das pias próximas.
    """
    for inst in list(world.instances.values()):
        if inst.category == 'Microwave' and TOGGLED_ON in inst.state:
            for child in world.descendants(inst.id):
                _set_temperature(world.instances[child], HOT)
        elif inst.category == 'Fridge' and OPEN not in inst.state:
            for child in world.descendants(inst.id):
                _set_temperature(world.instances[child], COLD)
        elif inst.category == 'Faucet' and TOGGLED_ON in inst.state:
            for basin in world.by_category('SinkBasin'):
                if _distance(inst.cell, basin.cell) <= world.config.clean_radius + 1e-9:
                    for child in world.descendants(basin.id):
                        world.instances[child].state.discard(DIRTY)


def _set_temperature(inst: ObjectInstance, flag: str) -> None:
    inst.state.discard(COLD if flag == HOT else HOT)
    inst.state.add(flag)


def _distance(a, b) -> float:
    return ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5


def step(world: GridWorld, action: Action) -> ActionOutcome:
    """
    Executa uma ação. Falhas voltam como status tipado; o contador de
    passos sempre incrementa.

    Args:
        world: Mundo (mutado em caso de sucesso)
        action: Ação a executar

    Returns:
        ActionOutcome com o status da execução
    """
    try:
        if action.kind in NAVIGATION_KINDS:
            return _navigate(world, action.kind)
        if action.kind is ActionKind.STOP:
            return ActionOutcome(OutcomeStatus.SUCCESS)
        outcome = _interact(world, action)
        if outcome.success:
            apply_state_rules(world)
            world.check_containment()
        return outcome
    finally:
        world.step_count += 1


def _navigate(world: GridWorld, kind: ActionKind) -> ActionOutcome:
    agent = world.agent
    if kind is ActionKind.MOVE_AHEAD:
        dr, dc = agent.heading.vector
        target = (agent.cell[0] + dr, agent.cell[1] + dc)
        if world.blocks(target):
            return ActionOutcome(OutcomeStatus.BLOCKED, detail=f"bloqueado em {target}")
        agent.cell = target
    elif kind is ActionKind.ROTATE_RIGHT:
        agent.heading = agent.heading.rotated(1)
    elif kind is ActionKind.ROTATE_LEFT:
        agent.heading = agent.heading.rotated(-1)
    else:
        delta = -15 if kind is ActionKind.LOOK_UP else 15
        if agent.pitch + delta not in PITCHES:
            return ActionOutcome(OutcomeStatus.PITCH_LIMIT, detail=f"pitch {agent.pitch}")
        agent.pitch += delta
    return ActionOutcome(OutcomeStatus.SUCCESS)


def _interact(world: GridWorld, action: Action) -> ActionOutcome:
    if action.handle is None:
        return ActionOutcome(OutcomeStatus.HANDLE_MISSING, detail="ação de interação sem handle")
    resolution = resolve_handle(world, action.handle)
    if not resolution.ok:
        return ActionOutcome(resolution.status, action.handle.instance_id)
    inst = world.instances[resolution.instance_id]
    spec = inst.spec
    agent = world.agent

    def fail(status: OutcomeStatus, detail: str = '') -> ActionOutcome:
        return ActionOutcome(status, inst.id, detail)

    if action.kind is ActionKind.PICKUP:
        if not spec.pickupable:
            return fail(OutcomeStatus.CAPABILITY, f"{inst.category} não é pegável")
        if agent.held is not None:
            return fail(OutcomeStatus.HAND_OCCUPIED)
        if world.hidden_in_closed(inst.id):
            return fail(OutcomeStatus.RECEPTACLE_CLOSED)
        world.detach(inst.id)
        agent.held = inst.id

    elif action.kind is ActionKind.PUT:
        if agent.held is None:
            return fail(OutcomeStatus.HAND_EMPTY)
        held = world.instances[agent.held]
        if not spec.receptacle:
            return fail(OutcomeStatus.CAPABILITY, f"{inst.category} não é receptáculo")
        if spec.movable_receptacle and held.spec.movable_receptacle:
            return fail(OutcomeStatus.CAPABILITY, "receptáculo móvel dentro de outro")
        if (spec.openable and OPEN not in inst.state) or world.hidden_in_closed(inst.id):
            return fail(OutcomeStatus.RECEPTACLE_CLOSED)
        agent.held = None
        world.put_inside(held.id, inst.id)

    elif action.kind in (ActionKind.OPEN, ActionKind.CLOSE):
        if not spec.openable:
            return fail(OutcomeStatus.CAPABILITY, f"{inst.category} não abre")
        if world.hidden_in_closed(inst.id):
            return fail(OutcomeStatus.RECEPTACLE_CLOSED)
        want_open = action.kind is ActionKind.OPEN
        if (OPEN in inst.state) == want_open:
            return fail(OutcomeStatus.ALREADY_IN_STATE)
        if want_open:
            inst.state.add(OPEN)
        else:
            inst.state.discard(OPEN)

    elif action.kind in (ActionKind.TOGGLE_ON, ActionKind.TOGGLE_OFF):
        if not spec.toggleable:
            return fail(OutcomeStatus.CAPABILITY, f"{inst.category} não liga")
        want_on = action.kind is ActionKind.TOGGLE_ON
        if (TOGGLED_ON in inst.state) == want_on:
            return fail(OutcomeStatus.ALREADY_IN_STATE)
        if want_on:
            inst.state.add(TOGGLED_ON)
        else:
            inst.state.discard(TOGGLED_ON)

    elif action.kind is ActionKind.SLICE:
        if not spec.sliceable:
            return fail(OutcomeStatus.CAPABILITY, f"{inst.category} não fatia")
        if SLICED in inst.state:
            return fail(OutcomeStatus.ALREADY_IN_STATE)
        if agent.held is None or world.instances[agent.held].category != 'Knife':
            return fail(OutcomeStatus.KNIFE_REQUIRED)
        _slice(world, inst)

    return ActionOutcome(OutcomeStatus.SUCCESS, inst.id)


def _slice(world: GridWorld, inst: ObjectInstance) -> None:
    parent = inst.parent
    world.detach(inst.id)
    del world.instances[inst.id]
    world.consumed.add(inst.id)
    for k in range(1, world.config.slice_count + 1):
        piece = ObjectInstance(id=f"{inst.id}_slice{k}", category=inst.category,
                               cell=None, state=set(inst.state) | {SLICED})
        world.add_instance(piece)
        if parent is not None:
            world.put_inside(piece.id, parent)
