"""
Módulo de Ações de Navegação
Converte caminhos em células para o alfabeto de ações (MoveAhead/Rotate).
"""

from typing import List, Sequence

from ..world.dynamics import Action, ActionKind
from ..world.grid_world import AgentPose, Cell, Heading
from .fmm import NavigationError

_HEADING_OF = {h.vector: h for h in Heading}


def rotations(current: Heading, desired: Heading) -> List[Action]:
    """Menor sequência de giros; 180 graus vira dois RotateRight."""
    diff = (desired.value - current.value) % 4
    if diff == 0:
        return []
    if diff == 3:
        return [Action(ActionKind.ROTATE_LEFT)]
    return [Action(ActionKind.ROTATE_RIGHT)] * diff


def heading_between(source: Cell, target: Cell) -> Heading:
    delta = (target[0] - source[0], target[1] - source[1])
    heading = _HEADING_OF.get(delta)
    if heading is None:
        raise NavigationError(f"Passo descontínuo: {source} -> {target}")
    return heading


def path_to_actions(path: Sequence[Cell], pose: AgentPose) -> List[Action]:
    """
    Compila o caminho em ações.

    Args:
        path: Células 4-adjacentes, começando em pose.cell
        pose: Pose atual do agente

    Returns:
        Giros mínimos intercalados com um MoveAhead por passo

    Raises:
        NavigationError: caminho vazio, fora da pose ou descontínuo
    """
    if not path or tuple(path[0]) != tuple(pose.cell):
        raise NavigationError(f"Caminho não começa na pose {pose.cell}")
    actions: List[Action] = []
    heading = pose.heading
    for source, target in zip(path, path[1:]):
        desired = heading_between(tuple(source), tuple(target))
        actions.extend(rotations(heading, desired))
        actions.append(Action(ActionKind.MOVE_AHEAD))
        heading = desired
    return actions


def face_toward(pose: AgentPose, target: Cell) -> List[Action]:
    """Giros para encarar `target` pelo eixo dominante do deslocamento."""
    dr, dc = target[0] - pose.cell[0], target[1] - pose.cell[1]
    if dr == 0 and dc == 0:
        return []
    if abs(dr) >= abs(dc):
        desired = Heading.SOUTH if dr > 0 else Heading.NORTH
    else:
        desired = Heading.EAST if dc > 0 else Heading.WEST
    return rotations(pose.heading, desired)
