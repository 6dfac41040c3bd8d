"""
Fixtures compartilhadas: sala 5x5 montada à mão e léxico padrão.

Layout da sala (agente em (2, 2) olhando para o norte):

    #####
    #T.C#      T = Table_1 com Apple_1, C = CounterTop_1 com Knife_1
    #.A.#
    #...#
    #####
"""

import pytest

from backend.harness.scenarios import build_room
from backend.instruction.lexicon import Lexicon
from backend.world.grid_world import GridWorld, Heading
from backend.world.observation import InteractionHandle, observe


@pytest.fixture(scope='session')
def lexicon() -> Lexicon:
    return Lexicon.default()


@pytest.fixture
def room() -> GridWorld:
    return build_room(
        (5, 5), (2, 2), Heading.NORTH,
        furniture=[('Table_1', 'Table', (1, 1)), ('CounterTop_1', 'CounterTop', (1, 3))],
        items=[('Apple_1', 'Apple', 'Table_1', ()), ('Knife_1', 'Knife', 'CounterTop_1', ())],
    )


def handle_for(world: GridWorld, instance_id: str) -> InteractionHandle:
    """Handle da detecção atual de `instance_id` (falha se não estiver visível)."""
    for det in observe(world).detections:
        if det.handle.instance_id == instance_id:
            return det.handle
    raise AssertionError(f"{instance_id} não detectado")
