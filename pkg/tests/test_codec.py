import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from playstyles import agents, codec, dataset, engine
from playstyles.codec import (
    ACT_ATTACK_DX,
    ACT_ATTACK_DY,
    ACT_DIRECTION,
    ACT_PRODUCE,
    ACT_TYPE,
    OBS_ACTION,
    OBS_HP,
    OBS_KIND,
    OBS_OWNER,
    OBS_RESOURCES,
    PlayTrace,
    SequenceSample,
    augment_mirror,
    encode_actions,
    encode_observation,
    extract_subsequences,
    handcrafted_features,
    record_match,
)
from playstyles.engine import GameState, Unit, UnitCommand, generate_map, load_stats

ROSTER = {s.name: s for s in agents.load_roster()}
MAXR = load_stats().max_attack_range


def random_state(seed: int, ticks: int = 40, variant: str = "A") -> GameState:
    """A reachable mid-game state driven by seeded random play."""
    rng = random.Random(seed)
    state = generate_map(variant)
    for _ in range(ticks):
        if engine.outcome(state) != "ongoing":
            break
        engine.advance(state,
                       agents.sample_commands(state, engine.P1, rng),
                       agents.sample_commands(state, engine.P2, rng))
    return state


def flipped_state(state: GameState, flip_h: bool, flip_v: bool) -> GameState:
    """Geometrically mirrored copy (unit ids preserved)."""
    out = GameState(state.width, state.height, state.stats, state.max_ticks)
    out.tick = state.tick
    out.resources = dict(state.resources)
    out.next_unit_id = state.next_unit_id
    swap_d = {}
    if flip_h:
        swap_d.update({"E": "W", "W": "E"})
    if flip_v:
        swap_d.update({"N": "S", "S": "N"})
    for uid, u in state.units.items():
        c = u.clone()
        c.x = state.width - 1 - u.x if flip_h else u.x
        c.y = state.height - 1 - u.y if flip_v else u.y
        if c.busy is not None:
            if c.busy.direction is not None:
                c.busy.direction = swap_d.get(c.busy.direction, c.busy.direction)
            if c.busy.attack_offset is not None:
                dx, dy = c.busy.attack_offset
                c.busy.attack_offset = (-dx if flip_h else dx, -dy if flip_v else dy)
        out.units[uid] = c
        out._occupied[(c.x, c.y)] = uid
    return out


def flipped_command(cmd: UnitCommand, flip_h: bool, flip_v: bool) -> UnitCommand:
    swap_d = {}
    if flip_h:
        swap_d.update({"E": "W", "W": "E"})
    if flip_v:
        swap_d.update({"N": "S", "S": "N"})
    direction = swap_d.get(cmd.direction, cmd.direction)
    offset = cmd.attack_offset
    if offset is not None:
        dx, dy = offset
        offset = (-dx if flip_h else dx, -dy if flip_v else dy)
    return UnitCommand(cmd.unit_id, cmd.action, direction, cmd.produce_kind, offset)


class TestEncodeObservation:
    def test_empty_cell(self):
        state = GameState(12, 12, load_stats())
        obs = encode_observation(state, engine.P1)
        cell = obs[7, 7]
        assert cell[OBS_HP] == 0 and cell[OBS_RESOURCES] == 0
        assert list(cell[OBS_OWNER:OBS_OWNER + 3]) == [1, 0, 0]
        assert cell[OBS_KIND] == 1 and cell[OBS_KIND + 1:OBS_KIND + 8].sum() == 0
        assert cell[OBS_ACTION] == 1 and cell[OBS_ACTION + 1:].sum() == 0

    def test_pov_swap_symmetry(self):
        state = random_state(3, ticks=60)
        a = encode_observation(state, engine.P1)
        b = encode_observation(state, engine.P2)
        swapped = b.copy()
        swapped[:, :, [OBS_OWNER + 1, OBS_OWNER + 2]] = b[:, :, [OBS_OWNER + 2, OBS_OWNER + 1]]
        np.testing.assert_array_equal(a, swapped)

    def test_full_hp_base_is_one(self):
        state = generate_map("A")
        base = next(u for u in state.player_units(engine.P1) if u.kind == "base")
        obs = encode_observation(state, engine.P1)
        assert obs[base.y, base.x, OBS_HP] == 1.0

    def test_mine_resources_scaled(self):
        state = generate_map("A")
        mine = next(u for u in state.units.values() if u.kind == "resource")
        obs = encode_observation(state, engine.P1)
        assert obs[mine.y, mine.x, OBS_RESOURCES] == pytest.approx(
            mine.resources / codec.RESOURCE_SCALE)


class TestEncodeActions:
    def test_empty_commands_all_noop(self):
        state = generate_map("A")
        act = encode_actions(set(), state, engine.P1)
        assert (act[:, :, ACT_TYPE] == 1).all()
        assert act[:, :, ACT_TYPE + 1:].sum() == 0

    def test_move_layout(self):
        state = GameState(12, 12, load_stats())
        worker = state.add_unit(engine.P1, "worker", 3, 4)
        act = encode_actions({UnitCommand(worker.id, "move", direction="N")},
                             state, engine.P1)
        cell = act[4, 3]
        assert cell[ACT_TYPE + 1] == 1 and cell[ACT_TYPE] == 0
        assert cell[ACT_DIRECTION] == 1  # N slot
        assert cell[ACT_ATTACK_DX] == pytest.approx(0.5)
        assert cell[ACT_ATTACK_DY] == pytest.approx(0.5)

    def test_attack_offset_scaling(self):
        state = GameState(12, 12, load_stats())
        shooter = state.add_unit(engine.P1, "ranged", 5, 5)
        state.add_unit(engine.P2, "worker", 6, 3)
        act = encode_actions({UnitCommand(shooter.id, "attack", attack_offset=(1, -2))},
                             state, engine.P1)
        cell = act[5, 5]
        assert cell[ACT_ATTACK_DX] == pytest.approx((1 + MAXR) / (2 * MAXR))
        assert cell[ACT_ATTACK_DY] == pytest.approx((-2 + MAXR) / (2 * MAXR))
        assert cell[ACT_ATTACK_DX] == pytest.approx(2 / 3)
        assert cell[ACT_ATTACK_DY] == pytest.approx(1 / 6)

    def test_enemy_command_rejected(self):
        state = generate_map("A")
        enemy = next(u for u in state.player_units(engine.P2))
        with pytest.raises(ValueError, match="pov"):
            encode_actions({UnitCommand(enemy.id, "noop")}, state, engine.P1)


class TestRecordMatch:
    def test_passive_selfplay_has_no_frames(self):
        t1, t2, rec = record_match(ROSTER["PassiveAI"], ROSTER["PassiveAI"],
                                   "A", seed=1, max_ticks=120)
        assert len(t1) == 0 and len(t2) == 0
        assert rec.outcome == "draw"

    def test_deterministic_pair(self):
        def run():
            return record_match(ROSTER["RandomAI"], ROSTER["WorkerRush"], "B",
                                seed=9, max_ticks=400)

        a1, a2, _ = run()
        b1, b2, _ = run()
        for a, b in ((a1, b1), (a2, b2)):
            assert a.ticks == b.ticks
            for fa, fb in zip(a.observations, b.observations):
                np.testing.assert_array_equal(fa, fb)
            for fa, fb in zip(a.actions, b.actions):
                np.testing.assert_array_equal(fa, fb)

    def test_worker_rush_beats_passive(self):
        t1, t2, rec = record_match(ROSTER["WorkerRush"], ROSTER["PassiveAI"],
                                   "A", seed=2)
        assert len(t1) > 0
        assert rec.outcome == "p1_wins"
        assert rec.ticks < rec.max_ticks

    def test_frames_only_on_action_ticks(self):
        t1, _, rec = record_match(ROSTER["LightRush"], ROSTER["RandomAI"],
                                  "A", seed=3, max_ticks=300)
        assert t1.ticks == sorted(t1.ticks)
        for tick in t1.ticks:
            p1_cmds, _ = rec.commands[tick]
            assert any(c.action != "noop" for c in p1_cmds)


def synthetic_trace(n_frames: int, match_id: str = "A-x-y-r0",
                    variant: str = "A", pov: str = "p1") -> PlayTrace:
    trace = PlayTrace(match_id, variant, pov, "x", "y")
    for i in range(n_frames):
        trace.ticks.append(i)
        trace.observations.append(np.zeros((12, 12, codec.OBS_CHANNELS)))
        trace.actions.append(np.zeros((12, 12, codec.ACT_CHANNELS)))
    return trace


class TestExtractSubsequences:
    def test_exactly_one_window(self):
        samples = extract_subsequences(synthetic_trace(32), stride=8)
        assert len(samples) == 1
        assert samples[0].slot == 0 and samples[0].offset == 0

    def test_overlapping_windows(self):
        samples = extract_subsequences(synthetic_trace(48), stride=8)
        assert [s.offset for s in samples] == [0, 8, 16]
        assert [s.slot for s in samples] == [0, 1, 2]

    def test_non_overlapping_windows(self):
        samples = extract_subsequences(synthetic_trace(48), stride=32)
        assert [s.offset for s in samples] == [0]

    def test_short_trace_empty(self):
        assert extract_subsequences(synthetic_trace(31), stride=8) == []

    def test_bad_stride(self):
        with pytest.raises(ValueError):
            extract_subsequences(synthetic_trace(32), stride=0)


def sample_from_state(seed: int, n_frames: int = 32) -> SequenceSample:
    """A sample whose frames come from live random play (varied content)."""
    rng = random.Random(seed)
    variant = "ABCL"[seed % 4]
    state = generate_map(variant)
    trace = PlayTrace(f"m-{seed}-r0", variant, engine.P1, "x", "y")
    frames = 0
    while frames < n_frames:
        if engine.outcome(state) != "ongoing":
            state = generate_map(variant)
        p1 = agents.sample_commands(state, engine.P1, rng)
        p2 = agents.sample_commands(state, engine.P2, rng)
        real = [c for c in p1 if c.action != "noop"]
        if real:
            trace.ticks.append(frames)
            trace.observations.append(encode_observation(state, engine.P1))
            trace.actions.append(encode_actions(real, state, engine.P1))
            frames += 1
        engine.advance(state, p1, p2)
    return extract_subsequences(trace, n_frames, stride=n_frames)[0]


class TestAugmentMirror:
    def test_identity_flags(self):
        sample = sample_from_state(0)
        out = augment_mirror(sample, False, False)
        np.testing.assert_array_equal(out.observations, sample.observations)
        np.testing.assert_array_equal(out.actions, sample.actions)

    @pytest.mark.parametrize("flip_h,flip_v", [(True, False), (False, True), (True, True)])
    def test_involution(self, flip_h, flip_v):
        sample = sample_from_state(1)
        twice = augment_mirror(augment_mirror(sample, flip_h, flip_v), flip_h, flip_v)
        np.testing.assert_array_equal(twice.observations, sample.observations)
        np.testing.assert_array_equal(twice.actions, sample.actions)

    def test_flip_h_moves_cell_and_swaps_direction(self):
        state = GameState(12, 12, load_stats())
        worker = state.add_unit(engine.P1, "worker", 2, 6)
        act = encode_actions({UnitCommand(worker.id, "move", direction="E")},
                             state, engine.P1)
        obs = encode_observation(state, engine.P1)
        sample = SequenceSample("t", 0, 0, "x", "p1", "A",
                                obs[None], act[None])
        flipped = augment_mirror(sample, flip_h=True, flip_v=False)
        cell = flipped.actions[0, 6, 9]
        assert cell[ACT_TYPE + 1] == 1          # still a move
        assert cell[ACT_DIRECTION + 3] == 1     # now W
        assert cell[ACT_DIRECTION + 1] == 0
        assert flipped.actions[0, 6, 2, ACT_TYPE] == 1  # old cell reads noop


class TestHandcrafted:
    def test_all_noop_is_zero(self):
        acts = np.zeros((32, 12, 12, codec.ACT_CHANNELS))
        acts[:, :, :, ACT_TYPE] = 1.0
        feats = handcrafted_features(acts)
        assert feats.shape == (18,)
        np.testing.assert_array_equal(feats, np.zeros(18))

    def test_action_type_frequencies(self):
        state = GameState(12, 12, load_stats())
        workers = [state.add_unit(engine.P1, "worker", x, 2) for x in (1, 3, 5, 7)]
        state.add_unit(engine.P2, "worker", 8, 2)
        cmds = {UnitCommand(workers[0].id, "move", direction="N"),
                UnitCommand(workers[1].id, "move", direction="S"),
                UnitCommand(workers[2].id, "move", direction="N"),
                UnitCommand(workers[3].id, "attack", attack_offset=(1, 0))}
        act = encode_actions(cmds, state, engine.P1)
        feats = handcrafted_features(act[None])
        np.testing.assert_allclose(feats[:5], [0.75, 0, 0, 0, 0.25])
        np.testing.assert_allclose(feats[5:9], [2 / 3, 0, 1 / 3, 0])

    def test_attack_offset_sums(self):
        state = GameState(12, 12, load_stats())
        a = state.add_unit(engine.P1, "ranged", 5, 5)
        b = state.add_unit(engine.P1, "ranged", 1, 8)
        state.add_unit(engine.P2, "worker", 6, 5)
        state.add_unit(engine.P2, "worker", 3, 7)
        cmds = {UnitCommand(a.id, "attack", attack_offset=(1, 0)),
                UnitCommand(b.id, "attack", attack_offset=(2, -1))}
        act = encode_actions(cmds, state, engine.P1)
        feats = handcrafted_features(act[None])
        assert feats[16] == pytest.approx(3.0)
        assert feats[17] == pytest.approx(-1.0)


class TestProperties:
    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_observation_one_hot_groups(self, seed):
        state = random_state(seed % 1000, ticks=seed % 80)
        obs = encode_observation(state, engine.PLAYERS[seed % 2])
        np.testing.assert_allclose(obs[:, :, OBS_OWNER:OBS_OWNER + 3].sum(-1), 1.0)
        np.testing.assert_allclose(obs[:, :, OBS_KIND:OBS_KIND + 8].sum(-1), 1.0)
        np.testing.assert_allclose(obs[:, :, OBS_ACTION:OBS_ACTION + 6].sum(-1), 1.0)
        assert obs.min() >= 0 and obs.max() <= 1

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_action_groups(self, seed):
        rng = random.Random(seed)
        state = random_state(seed % 997, ticks=seed % 70)
        cmds = [c for c in agents.sample_commands(state, engine.P1, rng)
                if c.action != "noop"]
        act = encode_actions(cmds, state, engine.P1)
        np.testing.assert_allclose(act[:, :, ACT_TYPE:ACT_TYPE + 6].sum(-1), 1.0)
        assert (act[:, :, ACT_DIRECTION:ACT_DIRECTION + 4].sum(-1) <= 1).all()
        assert (act[:, :, ACT_PRODUCE:ACT_PRODUCE + 7].sum(-1) <= 1).all()

    @given(st.integers(0, 10 ** 6), st.booleans(), st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_mirror_involution(self, seed, flip_h, flip_v):
        sample = sample_from_state(seed % 17, n_frames=4)
        twice = augment_mirror(augment_mirror(sample, flip_h, flip_v), flip_h, flip_v)
        np.testing.assert_array_equal(twice.observations, sample.observations)
        np.testing.assert_array_equal(twice.actions, sample.actions)

    @given(st.integers(0, 10 ** 6), st.booleans(), st.booleans())
    @settings(max_examples=40, deadline=None)
    def test_encode_flip_commutation(self, seed, flip_h, flip_v):
        rng = random.Random(seed)
        state = random_state(seed % 991, ticks=seed % 60)
        cmds = [c for c in agents.sample_commands(state, engine.P1, rng)
                if c.action != "noop"]
        mirrored = flipped_state(state, flip_h, flip_v)
        mirrored_cmds = [flipped_command(c, flip_h, flip_v) for c in cmds]

        obs_then_flip = codec.mirror_observation(
            encode_observation(state, engine.P1), flip_h, flip_v)
        flip_then_obs = encode_observation(mirrored, engine.P1)
        np.testing.assert_allclose(obs_then_flip, flip_then_obs)

        act_then_flip = codec.mirror_actions(
            encode_actions(cmds, state, engine.P1), flip_h, flip_v)
        flip_then_act = encode_actions(mirrored_cmds, mirrored, engine.P1)
        np.testing.assert_allclose(act_then_flip, flip_then_act)

    @pytest.mark.parametrize("variant", engine.MAP_VARIANTS)
    def test_pov_symmetry_on_symmetric_start(self, variant):
        state = generate_map(variant)
        p1_view = encode_observation(state, engine.P1)
        p2_view = encode_observation(state, engine.P2)
        rotated = codec.mirror_observation(p2_view, flip_h=True, flip_v=True)
        np.testing.assert_array_equal(p1_view, rotated)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=40, deadline=None)
    def test_handcrafted_groups(self, seed):
        sample = sample_from_state(seed % 13, n_frames=6)
        feats = handcrafted_features(sample)
        assert feats.shape == (18,)
        for lo, hi in ((0, 5), (5, 9), (9, 16)):
            group = feats[lo:hi]
            assert group.sum() == pytest.approx(1.0) or (group == 0).all()


def traces_for_split(repeats=10, maps=("A", "L")):
    traces = []
    for variant in maps:
        for r in range(repeats):
            mid = f"{variant}-x-y-r{r}"
            traces.append(synthetic_trace(48, mid, variant, "p1"))
            t2 = synthetic_trace(48, mid, variant, "p2")
            t2.agent_name, t2.opponent_name = "y", "x"
            traces.append(t2)
    return traces


class TestBuildDataset:
    def test_paper_split_counts(self):
        sets = dataset.build_dataset(traces_for_split())
        train_ids = {s.trace_id for s in sets["train"].samples}
        val_ids = {s.trace_id for s in sets["val"].samples}
        # 8 train / 2 val traces per match-up and side
        assert len({t for t in train_ids if t.endswith("p1")}) == 8
        assert len({t for t in val_ids if t.endswith("p1")}) == 2
        assert sets["train"].augment and not sets["val"].augment

    def test_map_l_goes_to_test(self):
        sets = dataset.build_dataset(traces_for_split())
        assert all(s.map_variant == "L" for s in sets["test"].samples)
        assert len(sets["test"].samples) > 0

    def test_val_windowing_is_non_overlapping(self):
        sets = dataset.build_dataset(traces_for_split())
        per_trace = {}
        for s in sets["val"].samples:
            per_trace.setdefault(s.trace_id, []).append(s.offset)
        assert all(offsets == [0] for offsets in per_trace.values())

    def test_underfull_matchup_rejected(self):
        with pytest.raises(ValueError, match="x vs y on A .8 repeats."):
            dataset.build_dataset(traces_for_split(repeats=8))

    def test_both_povs_share_split(self):
        sets = dataset.build_dataset(traces_for_split())
        split_of = {}
        for name, sset in sets.items():
            for s in sset.samples:
                match_id = s.trace_id.rsplit("-", 1)[0]
                split_of.setdefault(match_id, set()).add(name)
        assert all(len(v) == 1 for v in split_of.values())
