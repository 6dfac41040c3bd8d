"""
Módulo de Fronteira
Exploração por fronteira: escolhe a célula explorada mais próxima (pela
distância FMM) vizinha de uma célula ainda não explorada.
"""

import math
from typing import Iterable, Optional

from ..world.grid_world import AgentPose, Cell


def next_frontier(semantic_map, pose: AgentPose,
                  exclude: Iterable[Cell] = ()) -> Optional[Cell]:
    """
    Próxima fronteira a visitar.

    Args:
        semantic_map: SemanticMap do agente
        pose: Pose atual
        exclude: Fronteiras já visitadas sem ganho

    Returns:
        Célula de fronteira alcançável ou None se não houver nenhuma
    """
    skip = {tuple(c) for c in exclude}
    candidates = [c for c in semantic_map.frontier_cells() if c not in skip]
    if not candidates:
        return None
    for radius in (None, 0):
        free = semantic_map.traversible(radius)
        field = semantic_map.distance_field(pose, radius)
        scored = [(field.at(c), c) for c in candidates
                  if free[c] or c == tuple(pose.cell)]
        scored = [item for item in scored if math.isfinite(item[0])]
        if scored:
            return min(scored)[1]
    return None
