"""
Módulo do Especialista
Executor privilegiado (conhece o estado verdadeiro) que resolve uma tarefa
com BFS sobre (célula, orientação) e os planejadores detalhados. O número de
ações (incluindo Stop) é o comprimento de referência L* das métricas.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from ..errors import EmbodiedError
from .dynamics import Action, ActionKind, OutcomeStatus, step
from .grid_world import OPEN, SLICED, Cell, GridWorld, Heading
from .observation import InteractionHandle
from .tasks import TaskSpec, check_goal

logger = logging.getLogger(__name__)

_TURNS = (ActionKind.MOVE_AHEAD, ActionKind.ROTATE_LEFT, ActionKind.ROTATE_RIGHT)


class ExpertError(EmbodiedError):
    """Tarefa sem solução pelo especialista (mundo/tarefa rejeitado)."""


@dataclass
class ExpertResult:
    actions: List[Action] = field(default_factory=list)
    success: bool = False

    @property
    def path_length(self) -> int:
        """L*: ações executadas mais o Stop final."""
        return len(self.actions) + 1


def _successor(world: GridWorld, cell: Cell, heading: Heading,
               kind: ActionKind) -> Optional[Tuple[Cell, Heading]]:
    if kind is ActionKind.ROTATE_LEFT:
        return cell, heading.rotated(-1)
    if kind is ActionKind.ROTATE_RIGHT:
        return cell, heading.rotated(1)
    dr, dc = heading.vector
    nxt = (cell[0] + dr, cell[1] + dc)
    if world.blocks(nxt):
        return None
    return nxt, heading


def _within_reach(world: GridWorld, source: Cell, target: Cell) -> bool:
    dist = ((source[0] - target[0]) ** 2 + (source[1] - target[1]) ** 2) ** 0.5
    return dist <= world.config.r_int + 1e-9 and world.line_of_sight(source, target)


def bfs_to_reach(world: GridWorld, target: Cell) -> Optional[List[ActionKind]]:
    """
    Menor sequência de MoveAhead/Rotate até uma célula ao alcance de `target`.

    Returns:
        Lista de ações (vazia se já ao alcance) ou None se inalcançável
    """
    start = (world.agent.cell, world.agent.heading)
    if _within_reach(world, start[0], target):
        return []
    parents: Dict[Tuple[Cell, Heading], Tuple[Tuple[Cell, Heading], ActionKind]] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        state = queue.popleft()
        for kind in _TURNS:
            nxt = _successor(world, state[0], state[1], kind)
            if nxt is None or nxt in seen:
                continue
            seen.add(nxt)
            parents[nxt] = (state, kind)
            if _within_reach(world, nxt[0], target):
                path = []
                while nxt != start:
                    nxt, kind = parents[nxt]
                    path.append(kind)
                return path[::-1]
            queue.append(nxt)
    return None


class _Expert:
    """Estado de execução do especialista para um episódio."""

    def __init__(self, world: GridWorld, task: TaskSpec):
        self.world = world
        self.task = task
        self.result = ExpertResult()
        self.bound: Dict[str, str] = {}
        self.last_placed: Dict[str, str] = {}
        self.placed: Set[str] = set()

    def _do(self, kind: ActionKind, instance_id: Optional[str] = None,
            tolerate: bool = False) -> None:
        handle = None
        if instance_id is not None:
            inst = self.world.instances[instance_id]
            handle = InteractionHandle(instance_id, inst.cell, self.world.step_count)
        action = Action(kind, handle)
        outcome = step(self.world, action)
        self.result.actions.append(action)
        if outcome.success:
            return
        if tolerate and outcome.status is OutcomeStatus.ALREADY_IN_STATE:
            return
        raise ExpertError(f"{kind.value} falhou em {instance_id}: {outcome.status.value}")

    def _eligible(self, category: str, detailed) -> List[str]:
        """Instâncias candidatas para o Goto, conforme a próxima interação."""
        world, task = self.world, self.task
        picking = detailed is not None and detailed.kind.value == 'Pickup' \
            and detailed.target == category
        if picking and (detailed.retrieve or category == task.mrecep):
            placed = self.last_placed.get(category)
            if placed is not None and world.instances[placed].cell is not None:
                return [placed]
        out = []
        for inst in world.instances.values():
            if inst.category != category or inst.cell is None:
                continue
            if picking:
                if task.sliced and category == task.target and SLICED not in inst.state:
                    continue
                # o que o próprio especialista já entregou não volta a ser coletado
                if inst.id in self.placed:
                    continue
            if detailed is not None and detailed.kind.value == 'Slice' and SLICED in inst.state:
                continue
            if category == 'Faucet' and 'SinkBasin' in self.bound:
                basin = world.instances[self.bound['SinkBasin']]
                dist = ((inst.cell[0] - basin.cell[0]) ** 2
                        + (inst.cell[1] - basin.cell[1]) ** 2) ** 0.5
                if dist > world.config.clean_radius + 1e-9:
                    continue
            out.append(inst.id)
        preferred = None if picking else self.last_placed.get(category)
        if preferred in out:
            return [preferred]
        return sorted(out)

    def goto(self, category: str, detailed) -> None:
        best = None
        for instance_id in self._eligible(category, detailed):
            path = bfs_to_reach(self.world, self.world.instances[instance_id].cell)
            if path is not None and (best is None or len(path) < len(best[1])):
                best = (instance_id, path)
        if best is None:
            raise ExpertError(f"Nenhuma instância alcançável de {category}")
        instance_id, path = best
        for kind in path:
            self._do(kind)
        self.bound[category] = instance_id

    def run_sub_goal(self, sub_goal) -> None:
        from ..cap.detailed import BeliefSnapshot, DetailedKind, plan_detailed

        held = self.world.agent.held
        belief = BeliefSnapshot(
            held=self.world.instances[held].category if held else None,
            open_state=self._open_state())
        steps = plan_detailed(sub_goal, belief)
        exposed = (DetailedKind.PICKUP, DetailedKind.SLICE, DetailedKind.PUT)
        for idx, detailed in enumerate(steps):
            if detailed.kind is DetailedKind.GOTO:
                nxt = next((s for s in steps[idx + 1:] if s.kind is not DetailedKind.GOTO), None)
                self.goto(detailed.target, nxt)
                continue
            target_id = self.bound.get(detailed.target)
            if detailed.retrieve:
                target_id = self.last_placed.get(detailed.target, target_id)
            if target_id is None:
                raise ExpertError(f"{detailed.target} sem Goto anterior")
            opened = self._expose(target_id) if detailed.kind in exposed else []
            if detailed.kind is DetailedKind.PUT and self.world.agent.held:
                moved = self.world.agent.held
                self._do(ActionKind.PUT, target_id)
                self.placed.add(moved)
                self.last_placed[self.world.instances[moved].category] = moved
                self.last_placed[detailed.target] = target_id
            else:
                self._do(detailed.kind.action_kind, target_id, tolerate=detailed.tolerate)
            for container_id in reversed(opened):
                self._do(ActionKind.CLOSE, container_id)

    def _expose(self, instance_id: str) -> List[str]:
        """Abre os contêineres fechados que escondem a instância (de fora para dentro)."""
        closed = [anc.id for anc in self.world.ancestors(instance_id)
                  if anc.spec.openable and OPEN not in anc.state]
        for container_id in reversed(closed):
            self._do(ActionKind.OPEN, container_id)
        return closed[::-1]

    def _open_state(self) -> Dict[str, bool]:
        states: Dict[str, set] = {}
        for inst in self.world.instances.values():
            if inst.spec.openable:
                states.setdefault(inst.category, set()).add(OPEN in inst.state)
        return {cat: flags.pop() for cat, flags in states.items() if len(flags) == 1}


def solve(world: GridWorld, task: TaskSpec) -> ExpertResult:
    """
    Resolve a tarefa em uma cópia do mundo.

    Args:
        world: Mundo inicial (não é alterado)
        task: Tarefa vinculada

    Returns:
        ExpertResult com as ações e sucesso verificado pelo check_goal

    Raises:
        ExpertError: alguma etapa impossível ou objetivo não atingido
    """
    from ..cap.frames import canonical_sub_goals

    expert = _Expert(world.copy(), task)
    for sub_goal in canonical_sub_goals(task):
        expert.run_sub_goal(sub_goal)
    report = check_goal(expert.world, task)
    if not report.success:
        raise ExpertError(f"Especialista terminou sem atingir o objetivo de {task.label()}")
    expert.result.success = True
    logger.debug(f"Especialista resolveu {task.label()} em {expert.result.path_length} ações")
    return expert.result


def expert_path_length(world: GridWorld, task: TaskSpec) -> int:
    return solve(world, task).path_length
