import random

import pytest

from playstyles import engine
from playstyles.engine import (
    DIR_DELTA,
    EngineError,
    GameState,
    UnitCommand,
    generate_map,
    legal_commands,
    load_stats,
    outcome,
    step,
)


def blank_state(max_ticks=2000):
    return GameState(12, 12, load_stats(), max_ticks=max_ticks)


class TestGenerateMap:
    def test_variant_contents(self):
        state = generate_map("L")
        kinds = sorted(u.kind for u in state.units.values())
        assert kinds == ["base", "base", "resource", "resource", "resource",
                         "resource", "worker", "worker"]
        assert state.width == state.height == 12
        for player in engine.PLAYERS:
            owned = [u.kind for u in state.player_units(player)]
            assert sorted(owned) == ["base", "worker"]

    def test_deterministic(self):
        assert generate_map("A").serialize() == generate_map("A").serialize()

    def test_variants_differ_only_in_placement(self):
        a, b = generate_map("A"), generate_map("B")
        multiset = lambda s: sorted((u.owner or "-", u.kind) for u in s.units.values())
        assert multiset(a) == multiset(b)
        positions = lambda s: sorted((u.x, u.y) for u in s.units.values())
        assert positions(a) != positions(b)

    def test_unknown_variant(self):
        with pytest.raises(ValueError, match="unknown map variant"):
            generate_map("Z")

    @pytest.mark.parametrize("variant", engine.MAP_VARIANTS)
    def test_player_symmetric(self, variant):
        state = generate_map(variant)
        p1_cells = sorted((u.kind, u.x, u.y) for u in state.player_units(engine.P1))
        p2_cells = sorted((u.kind, 11 - u.x, 11 - u.y)
                          for u in state.player_units(engine.P2))
        assert p1_cells == p2_cells
        mines = [(u.x, u.y) for u in state.units.values() if u.kind == "resource"]
        assert sorted(mines) == sorted((11 - x, 11 - y) for x, y in mines)

    @pytest.mark.parametrize("variant", engine.MAP_VARIANTS)
    def test_mines_reachable(self, variant):
        state = generate_map(variant)
        # every mine has at least one free orthogonal neighbour to harvest from
        for mine in (u for u in state.units.values() if u.kind == "resource"):
            free = [
                (mine.x + dx, mine.y + dy)
                for dx, dy in DIR_DELTA.values()
                if state.in_bounds(mine.x + dx, mine.y + dy)
                and state.unit_at(mine.x + dx, mine.y + dy) is None
            ]
            assert free, f"mine at ({mine.x},{mine.y}) sealed in variant {variant}"


class TestLegalCommands:
    def test_harvest_next_to_mine(self):
        state = blank_state()
        state.add_unit(None, "resource", 0, 4, resources=20)
        worker = state.add_unit(engine.P1, "worker", 1, 4)
        cmds = legal_commands(state, engine.P1)
        assert UnitCommand(worker.id, "harvest", direction="W") in cmds

    def test_busy_unit_admits_nothing(self):
        state = blank_state()
        worker = state.add_unit(engine.P1, "worker", 5, 5)
        nxt = step(state, {UnitCommand(worker.id, "move", direction="N")}, set())
        assert all(c.unit_id != worker.id for c in legal_commands(nxt, engine.P1))

    def test_surrounded_worker_cannot_move(self):
        state = blank_state()
        worker = state.add_unit(engine.P1, "worker", 5, 5)
        for dx, dy in DIR_DELTA.values():
            state.add_unit(engine.P1, "worker", 5 + dx, 5 + dy)
        moves = [c for c in legal_commands(state, engine.P1)
                 if c.unit_id == worker.id and c.action == "move"]
        assert moves == []

    def test_noop_always_present_for_idle(self):
        state = generate_map("A")
        cmds = legal_commands(state, engine.P1)
        idle_ids = {u.id for u in state.player_units(engine.P1) if u.busy is None}
        assert {c.unit_id for c in cmds if c.action == "noop"} == idle_ids


class TestStep:
    def test_noop_only_advances_tick(self):
        state = generate_map("A")
        noops = {UnitCommand(u.id, "noop") for u in state.player_units(engine.P1)}
        nxt = step(state, noops, set())
        before, after = state.to_dict(), nxt.to_dict()
        assert after["tick"] == before["tick"] + 1
        after["tick"] = before["tick"]
        assert after == before

    def test_attack_kills_after_duration(self):
        state = blank_state()
        attacker = state.add_unit(engine.P1, "worker", 5, 5)
        victim = state.add_unit(engine.P2, "worker", 6, 5)
        assert victim.hp == 1
        cur = step(state, {UnitCommand(attacker.id, "attack", attack_offset=(1, 0))}, set())
        duration = load_stats().duration("worker", "attack")
        for _ in range(duration - 1):
            assert victim.id in cur.units
            cur = step(cur, set(), set())
        assert victim.id not in cur.units

    def test_same_cell_move_conflict_lowest_id_wins(self):
        state = blank_state()
        left = state.add_unit(engine.P1, "worker", 4, 5)
        right = state.add_unit(engine.P1, "worker", 6, 5)
        cur = step(state, {UnitCommand(left.id, "move", direction="E"),
                           UnitCommand(right.id, "move", direction="W")}, set())
        duration = load_stats().duration("worker", "move")
        for _ in range(duration - 1):
            cur = step(cur, set(), set())
        assert (cur.units[left.id].x, cur.units[left.id].y) == (5, 5)
        assert (cur.units[right.id].x, cur.units[right.id].y) == (6, 5)

    def test_illegal_command_names_unit_and_reason(self):
        state = generate_map("A")
        worker = next(u for u in state.player_units(engine.P1) if u.kind == "worker")
        with pytest.raises(EngineError, match=f"unit {worker.id}: .+"):
            step(state, {UnitCommand(worker.id, "attack", attack_offset=(1, 0))}, set())

    def test_enemy_unit_command_rejected(self):
        state = generate_map("A")
        enemy = next(u for u in state.player_units(engine.P2) if u.kind == "worker")
        with pytest.raises(EngineError, match="belongs to"):
            step(state, {UnitCommand(enemy.id, "noop")}, set())

    def test_harvest_then_return_moves_one_resource(self):
        state = blank_state()
        mine = state.add_unit(None, "resource", 0, 5, resources=20)
        base = state.add_unit(engine.P1, "base", 2, 5)
        worker = state.add_unit(engine.P1, "worker", 1, 5)
        stats = load_stats()
        cur = step(state, {UnitCommand(worker.id, "harvest", direction="W")}, set())
        for _ in range(stats.duration("worker", "harvest") - 1):
            cur = step(cur, set(), set())
        assert cur.units[worker.id].carried == 1
        assert cur.units[mine.id].resources == 19
        cur = step(cur, {UnitCommand(worker.id, "return", direction="E")}, set())
        for _ in range(stats.duration("worker", "return") - 1):
            cur = step(cur, set(), set())
        assert cur.units[worker.id].carried == 0
        assert cur.resources[engine.P1] == 1

    def test_produce_spawns_and_charges(self):
        state = blank_state()
        state.resources[engine.P1] = 5
        base = state.add_unit(engine.P1, "base", 5, 5)
        stats = load_stats()
        cur = step(state, {UnitCommand(base.id, "produce", direction="E",
                                       produce_kind="worker")}, set())
        assert cur.resources[engine.P1] == 5 - stats.cost("worker")
        for _ in range(stats.duration("base", "produce", "worker") - 1):
            cur = step(cur, set(), set())
        spawned = cur.unit_at(6, 5)
        assert spawned is not None and spawned.kind == "worker"
        assert spawned.owner == engine.P1


class TestOutcome:
    def test_ongoing(self):
        assert outcome(generate_map("A")) == "ongoing"

    def test_player_with_no_units_loses(self):
        state = blank_state()
        state.add_unit(engine.P1, "worker", 1, 1)
        assert outcome(state) == "p1_wins"

    def test_draw_at_tick_cap(self):
        state = generate_map("A", max_ticks=5)
        state.tick = 5
        assert outcome(state) == "draw"


def random_playthrough(seed, ticks=300, variant="A"):
    """Advance a match with budget-aware random commands, yielding states."""
    from playstyles.agents import sample_commands

    rng = random.Random(seed)
    state = generate_map(variant)
    for _ in range(ticks):
        if outcome(state) != "ongoing":
            break
        p1 = sample_commands(state, engine.P1, rng)
        p2 = sample_commands(state, engine.P2, rng)
        state = step(state, p1, p2)
        yield state


class TestInvariants:
    def test_occupancy_and_conservation(self):
        for seed in range(5):
            prev_total = None
            for state in random_playthrough(seed, ticks=400):
                cells = [(u.x, u.y) for u in state.units.values()]
                assert len(cells) == len(set(cells))
                total = (state.resources[engine.P1] + state.resources[engine.P2]
                         + sum(u.carried + u.resources for u in state.units.values()))
                if prev_total is not None:
                    assert total <= prev_total
                prev_total = total
                assert all(u.hp > 0 for u in state.units.values())

    def test_legality_closure(self):
        state = generate_map("C")
        rng = random.Random(1)
        for _ in range(60):
            for player in engine.PLAYERS:
                for cmd in legal_commands(state, player):
                    if player == engine.P1:
                        step(state, {cmd}, set())
                    else:
                        step(state, set(), {cmd})
            from playstyles.agents import sample_commands
            state = step(state, sample_commands(state, engine.P1, rng),
                         sample_commands(state, engine.P2, rng))

    def test_determinism_bit_for_bit(self):
        def run(seed):
            states = list(random_playthrough(seed, ticks=200, variant="B"))
            return states[-1].serialize()

        assert run(42) == run(42)
