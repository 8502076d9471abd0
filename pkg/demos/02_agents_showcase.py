"""
Agent roster showcase
=====================

Play quick matches between the labelled policies and summarize how their
command mixes differ -- the behavioural signal the autoencoder later learns.
"""
from collections import Counter

from playstyles import agents, engine
from playstyles.match import run_match

roster = {s.name: s for s in agents.load_roster()}
print("default roster:", ", ".join(roster))

def play(name1, name2, variant="A", seed=3, max_ticks=1500):
    p1 = agents.build_policy(roster[name1], seed, engine.P1)
    p2 = agents.build_policy(roster[name2], seed, engine.P2)
    mix = Counter()

    def tally(state, p1_cmds, _):
        mix.update(c.action for c in p1_cmds if c.action != "noop")

    record = run_match(p1, p2, variant, max_ticks=max_ticks, seed=seed,
                       agent_names=(name1, name2), on_tick=tally)
    total = sum(mix.values())
    profile = {a: round(n / total, 2) for a, n in mix.most_common()} if total else {}
    print(f"{name1:>15} vs {name2:<15} {record.outcome:>8} "
          f"t={record.ticks:<5} p1 profile {profile}")

# WorkerRush swarms with workers; LightRush banks resources for a barracks.
play("WorkerRush", "PassiveAI")
play("LightRush", "PassiveAI")
play("HeavyRush", "PassiveAI")
play("EconGreedy", "PassiveAI")
play("DefensiveTurtle", "WorkerRush")
play("RandomBiasedAI", "RandomAI")

# NaiveMCTS samples playouts per decision; a small budget keeps this quick.
mcts = agents.AgentSpec("NaiveMCTS-small", "naive_mcts",
                        {"playouts": 12, "depth": 30}, seed=10)
p1 = agents.build_policy(mcts, 1, engine.P1)
p2 = agents.build_policy(roster["PassiveAI"], 1, engine.P2)
record = run_match(p1, p2, "A", max_ticks=400, seed=1,
                   agent_names=(mcts.name, "PassiveAI"))
print(f"{'NaiveMCTS-small':>15} vs {'PassiveAI':<15} {record.outcome:>8} "
      f"t={record.ticks}")
