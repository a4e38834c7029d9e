#!/usr/bin/env python3
"""Regenerate tests/data/golden/*.csv from gymnasium's classic-control envs.

Each file holds several traces. A trace starts with an `init` row carrying the
internal state, followed by 20 `step` rows: action, internal state after the
step, reward, terminated, truncated. Internal states are the env's own float64
(CartPole, Acrobot) or float32 (MountainCarContinuous) state, not the float32
observation.
"""
import argparse
import pathlib

import gymnasium as gym
import numpy as np

STEPS = 20


def fmt(x):
    return repr(float(x))


def write_trace(out, trace_id, env, init_state, actions, to_gym_action):
    env.reset(seed=0)
    u = env.unwrapped
    u.state = np.array(init_state, dtype=u.state.dtype)
    out.append(",".join([str(trace_id), "init", "", *map(fmt, u.state)]) + ",,,")
    for a in actions:
        _, r, term, trunc, _ = env.step(to_gym_action(a))
        out.append(",".join([str(trace_id), "step", fmt(a), *map(fmt, u.state), fmt(r), str(int(term)), str(int(trunc))]))
        if term or trunc:
            break


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "golden"))
    args = ap.parse_args()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(12345)

    # CartPole-v1
    rows = []
    env = gym.make("CartPole-v1")
    inits = [rng.uniform(-0.05, 0.05, 4), rng.uniform(-0.05, 0.05, 4), [0.0, 0.0, 0.15, 0.5]]
    scripts = [rng.integers(0, 2, STEPS), rng.integers(0, 2, STEPS), np.zeros(STEPS, dtype=int)]
    for i, (s0, acts) in enumerate(zip(inits, scripts)):
        write_trace(rows, i, env, s0, acts, int)
    (out_dir / "cartpole.csv").write_text("\n".join(rows) + "\n")

    # MountainCarContinuous-v0
    rows = []
    env = gym.make("MountainCarContinuous-v0")
    inits = [[rng.uniform(-0.6, -0.4), 0.0], [-1.15, -0.03], [0.44, 0.05]]
    scripts = [rng.uniform(-1.0, 1.0, STEPS), rng.uniform(-1.0, 1.0, STEPS), np.full(STEPS, 0.7)]
    for i, (s0, acts) in enumerate(zip(inits, scripts)):
        write_trace(rows, i, env, s0, acts, lambda a: np.array([a], dtype=np.float32))
    (out_dir / "mountaincar_cont.csv").write_text("\n".join(rows) + "\n")

    # Acrobot-v1
    rows = []
    env = gym.make("Acrobot-v1")
    inits = [rng.uniform(-0.1, 0.1, 4), rng.uniform(-0.1, 0.1, 4), [3.0, 0.1, 0.0, 0.0]]
    scripts = [rng.integers(0, 3, STEPS), rng.integers(0, 3, STEPS), np.full(STEPS, 2)]
    for i, (s0, acts) in enumerate(zip(inits, scripts)):
        write_trace(rows, i, env, s0, acts, int)
    (out_dir / "acrobot.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
