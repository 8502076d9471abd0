"""
Engine basics
=============

Generate a map variant, inspect legality, and step the simulator by hand.
"""
from playstyles import engine
from playstyles.engine import UnitCommand, generate_map, legal_commands, outcome, step

# Twelve placement variants, A through L. Player 2's start is always
# player 1's rotated 180 degrees.
state = generate_map("L")
print(state.render())
print()

# Every unit sits on its own cell; each player owns a base and a worker.
for player in engine.PLAYERS:
    units = sorted(state.player_units(player), key=lambda u: u.id)
    print(player, [(u.kind, (u.x, u.y), f"hp={u.hp}") for u in units])
print()

# Legal commands for player 1 at tick 0: moves, produces, and noops.
cmds = legal_commands(state, engine.P1)
by_action = {}
for c in cmds:
    by_action.setdefault(c.action, 0)
    by_action[c.action] += 1
print("legal command counts:", dict(sorted(by_action.items())))

# Issue a produce order at the base and let it run to completion.
base = next(u for u in state.player_units(engine.P1) if u.kind == "base")
produce = next(c for c in cmds if c.unit_id == base.id and c.action == "produce"
               and c.produce_kind == "worker")
print(f"\nbase {base.id} starts producing a worker "
      f"({state.stats.duration('base', 'produce', 'worker')} ticks)...")
state = step(state, {produce}, set())
while any(u.busy is not None for u in state.units.values()):
    state = step(state, set(), set())
print(state.render())
print("\nworkers now owned by p1:",
      sum(1 for u in state.player_units(engine.P1) if u.kind == "worker"))
print("outcome:", outcome(state))
