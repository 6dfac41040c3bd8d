"""
Testes de navegação.

O campo FMM é conferido contra limites em vez de valores exatos: T nunca
fica abaixo da distância euclidiana nem acima do caminho mínimo em
4-vizinhança (BFS), e a descida gulosa sempre chega à meta.
"""

import math
from collections import deque

import numpy as np
import pytest

from backend.harness.scenarios import build_room
from backend.nav.actions import face_toward, path_to_actions, rotations
from backend.nav.fmm import NavigationError, eikonal_residual, extract_path, fmm_distance, inflate
from backend.world.dynamics import ActionKind, step
from backend.world.grid_world import AgentPose, Heading

TOL = 1e-9


def _bfs4(free, goal):
    rows, cols = free.shape
    dist = np.full(free.shape, np.inf)
    dist[goal] = 0
    queue = deque([goal])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and free[rr, cc] and math.isinf(dist[rr, cc]):
                dist[rr, cc] = dist[r, c] + 1
                queue.append((rr, cc))
    return dist


def _random_map(seed, size=20, density=0.2):
    rng = np.random.default_rng(seed)
    free = rng.random((size, size)) >= density
    cells = np.argwhere(free)
    goal = tuple(int(v) for v in cells[int(rng.integers(0, len(cells)))])
    return free, goal


def _check_field(free, goal):
    field = fmm_distance(free, [goal])
    bfs = _bfs4(free, goal)
    assert (np.isfinite(field.arrival) == np.isfinite(bfs)).all()
    assert eikonal_residual(field) < TOL
    for r, c in np.argwhere(np.isfinite(bfs)):
        t = field.at((r, c))
        assert math.hypot(r - goal[0], c - goal[1]) - TOL <= t <= bfs[r, c] + TOL
        path = extract_path(field, (int(r), int(c)))
        assert path[-1] == goal
        for a, b in zip(path, path[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
            assert field.at(b) < field.at(a)


def test_inflate():
    obstacle = np.zeros((5, 5), dtype=bool)
    obstacle[2, 2] = True
    assert (inflate(obstacle, 0) == obstacle).all()
    grown = inflate(obstacle, 1)
    assert grown.sum() == 9
    assert grown[1:4, 1:4].all()
    assert inflate(obstacle, 2).all()
    with pytest.raises(ValueError):
        inflate(obstacle, -1)


def test_straight_corridor():
    free = np.ones((1, 6), dtype=bool)
    field = fmm_distance(free, [(0, 0)])
    assert [field.at((0, c)) for c in range(6)] == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    assert extract_path(field, (0, 5)) == [(0, c) for c in range(5, -1, -1)]


def test_walled_off_region_is_unreachable():
    free = np.ones((5, 5), dtype=bool)
    free[:, 2] = False
    field = fmm_distance(free, [(2, 0)])
    assert not field.reachable((2, 4))
    assert extract_path(field, (2, 4)) is None
    assert field.at((9, 9)) == math.inf


def test_diagonal_needs_free_corner():
    free = np.array([[True, False], [False, True]])
    field = fmm_distance(free, [(0, 0)])
    assert not field.reachable((1, 1))


def test_goal_validation():
    free = np.ones((3, 3), dtype=bool)
    with pytest.raises(NavigationError):
        fmm_distance(free, [])
    with pytest.raises(NavigationError):
        fmm_distance(free, [(5, 5)])


def test_open_grid_approximates_euclid():
    free = np.ones((25, 25), dtype=bool)
    field = fmm_distance(free, [(12, 12)])
    for r in range(25):
        for c in range(25):
            euclid = math.hypot(r - 12, c - 12)
            assert euclid - TOL <= field.at((r, c)) <= euclid + 0.5


@pytest.mark.parametrize('seed', range(10))
def test_random_maps(seed):
    _check_field(*_random_map(seed))


@pytest.mark.slow
def test_random_maps_many():
    for seed in range(100, 200):
        _check_field(*_random_map(seed))


def test_field_is_deterministic():
    free, goal = _random_map(3)
    assert fmm_distance(free, [goal]).dump() == fmm_distance(free, [goal]).dump()
    assert 'inf' in fmm_distance(np.array([[True, False]]), [(0, 0)]).dump()


def test_multiple_goals_take_nearest():
    free = np.ones((1, 7), dtype=bool)
    field = fmm_distance(free, [(0, 0), (0, 6)])
    assert field.at((0, 3)) == 3.0
    assert field.at((0, 5)) == 1.0


def test_rotations_are_minimal():
    assert rotations(Heading.NORTH, Heading.NORTH) == []
    assert [a.kind for a in rotations(Heading.NORTH, Heading.WEST)] == [ActionKind.ROTATE_LEFT]
    assert [a.kind for a in rotations(Heading.NORTH, Heading.SOUTH)] == [ActionKind.ROTATE_RIGHT] * 2


def test_path_to_actions_replays_in_world():
    world = build_room((7, 7), (1, 1), Heading.NORTH, furniture=[], items=[])
    path = [(1, 1), (2, 1), (2, 2), (2, 3)]
    actions = path_to_actions(path, world.agent)
    assert [a.kind for a in actions] == [
        ActionKind.ROTATE_RIGHT, ActionKind.ROTATE_RIGHT, ActionKind.MOVE_AHEAD,
        ActionKind.ROTATE_LEFT, ActionKind.MOVE_AHEAD, ActionKind.MOVE_AHEAD,
    ]
    visited = [world.agent.cell]
    for action in actions:
        assert step(world, action).success
        if action.kind is ActionKind.MOVE_AHEAD:
            visited.append(world.agent.cell)
    assert visited == path
    assert world.agent.heading is Heading.EAST


def test_path_to_actions_rejects_bad_paths():
    pose = AgentPose((1, 1), Heading.NORTH)
    assert path_to_actions([(1, 1)], pose) == []
    with pytest.raises(NavigationError):
        path_to_actions([], pose)
    with pytest.raises(NavigationError):
        path_to_actions([(2, 2), (2, 3)], pose)
    with pytest.raises(NavigationError):
        path_to_actions([(1, 1), (2, 2)], pose)


def test_face_toward():
    pose = AgentPose((2, 2), Heading.NORTH)
    assert face_toward(pose, (2, 2)) == []
    assert face_toward(pose, (1, 3)) == []
    assert [a.kind for a in face_toward(pose, (2, 4))] == [ActionKind.ROTATE_RIGHT]
    assert [a.kind for a in face_toward(pose, (4, 3))] == [ActionKind.ROTATE_RIGHT] * 2
