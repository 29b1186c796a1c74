"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The learning criterion
trains a full desk-scale policy and dominates the suite's runtime (a few
minutes; budgeted for up to half an hour on a slow laptop).
"""
import io
import math
import time

import numpy as np

from corridorsim.experiments import RunSettings, run_episode
from corridorsim.metrics import write_time_space_csv
from corridorsim.rl.policy import PolicyNet
from corridorsim.rl.reward import (RewardCoefficients,
                                   SINGLE_INTERSECTION_COEFFS,
                                   TWO_INTERSECTION_COEFFS, reward)
from corridorsim.rl.train import (TrainConfig, Trajectory, discounted_returns,
                                  evaluate, random_policy_returns, train,
                                  vpg_surrogate)
from corridorsim.scenario import (CAV_ID, EMS_ID, NetworkKind, ScenarioSpec,
                                  build_initial_state)
from corridorsim.shockwave import (ShockwaveParams, analytic_times,
                                   cruise_branch_cav_time,
                                   early_release_allowed,
                                   hold_branch_cav_time, optimal_split,
                                   oracle_times)

SINGLE_GRID_X = (1.0, 15.0, 30.0, 45.0, 60.0)
SINGLE_GRID_D = (8.5, 16.0, 30.0, 45.0, 60.0)
TWO_GRID_X = (-260.0, -225.0, -191.0, 1.0, 30.0)


def report(criterion: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{criterion} failed: {detail}"


def test_criterion_1_analytic_exactness():
    start = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10_000):
        w = rng.uniform(0.5, 20.0)
        U = rng.uniform(w, 30.0)
        V = rng.uniform(U, 40.0)
        d = rng.uniform(0.0, 200.0)
        # independent hand evaluation of the closed forms
        x_l_hand = d * (1.0 / w + 1.0 / U) / (1.0 / w + 2.0 / U - 1.0 / V)
        t_1 = x_l_hand / w
        t_2 = d / w
        t_s = t_2 + (d - x_l_hand) / U
        t_ev = t_s + x_l_hand / V
        t_pre = t_1 + x_l_hand / U
        p = ShockwaveParams(w=w, U=U, V=V, d=d)
        times = analytic_times(p)
        worst = max(worst,
                    abs(optimal_split(p) - x_l_hand),
                    abs(times.t_s - t_s), abs(times.t_ev - t_ev),
                    abs(times.t_pre - t_pre), abs(times.t_1 - t_1),
                    abs(times.t_2 - t_2),
                    abs(times.t_ev - times.t_pre))
    ref = ShockwaveParams(w=10.0, U=15.0, V=35.0, d=100.0)
    checks = [
        worst < 1e-9,
        abs(optimal_split(ref) - 81.395) < 1e-3,
        abs(analytic_times(ref).t_ev - 13.566) < 1e-3,
        abs(hold_branch_cav_time(ShockwaveParams(
            w=10.0, U=15.0, V=35.0, d=100.0, x_a=50.0)) - 18.333) < 1e-3,
        abs(cruise_branch_cav_time(ShockwaveParams(
            w=10.0, U=15.0, V=35.0, d=100.0, x_a=90.0)) - 15.0) < 1e-3,
    ]
    elapsed = time.time() - start
    report("1 analytic exactness", all(checks) and elapsed < 1.0,
           f"(max abs err {worst:.2e}, {elapsed:.2f}s)")


def test_criterion_2_early_release_branching():
    start = time.time()
    wait = ShockwaveParams(w=10.0, U=15.0, V=35.0, d=50.0, x_a=100.0, z=175.0)
    go = ShockwaveParams(w=10.0, U=15.0, V=35.0, d=100.0, x_a=170.0, z=175.0)
    ok = (not early_release_allowed(wait)) and early_release_allowed(go)
    rng = np.random.default_rng(202)
    agree = 0
    for _ in range(1000):
        w = rng.uniform(1.0, 15.0)
        U = rng.uniform(w, 25.0)
        V = rng.uniform(U, 40.0)
        d = rng.uniform(0.0, 200.0)
        z = rng.uniform(50.0, 300.0)
        x_a = rng.uniform(0.0, z)
        p = ShockwaveParams(w=w, U=U, V=V, d=d, x_a=x_a, z=z)
        direct = (z - x_a) / w + (z - x_a) / U <= d / w + d / V
        agree += early_release_allowed(p) == direct
    elapsed = time.time() - start
    report("2 two-intersection exception", ok and agree == 1000
           and elapsed < 1.0, f"({agree}/1000 agree, {elapsed:.2f}s)")


def test_criterion_3_reward_exactness():
    start = time.time()
    table = {
        (False, None, None): lambda v_ev, v_cav, nu: v_cav,
        (True, True, True): lambda v_ev, v_cav, nu: v_cav,
        (True, True, False): lambda v_ev, v_cav, nu: v_cav,
        (True, False, False): lambda v_ev, v_cav, nu: nu.nu1 * v_ev + nu.nu2 * v_cav,
        (True, False, True): lambda v_ev, v_cav, nu: nu.nu3 * v_ev + nu.nu4 * v_cav,
    }
    rng = np.random.default_rng(303)
    mismatches = 0
    total = 0
    for nu in (SINGLE_INTERSECTION_COEFFS, TWO_INTERSECTION_COEFFS):
        for present in (False, True):
            for same_lane in (False, True):
                for behind in (False, True):
                    for _ in range(100):
                        v_ev = float(rng.uniform(0.0, 35.0))
                        v_cav = float(rng.uniform(0.0, 15.0))
                        p_cav = float(rng.uniform(0.0, 350.0))
                        p_ev = p_cav - (10.0 if behind else -10.0)
                        l_ev = 0 if same_lane else 1
                        key = ((False, None, None) if not present
                               else (True, same_lane, behind))
                        want = table[key](v_ev, v_cav, nu)
                        got = reward(v_cav=v_cav, p_cav=p_cav, l_cav=0,
                                     v_ev=v_ev, p_ev=p_ev, l_ev=l_ev,
                                     ems_present=present, coeffs=nu)
                        total += 1
                        mismatches += abs(got - want) > 1e-12
    elapsed = time.time() - start
    report("3 reward exactness", mismatches == 0 and elapsed < 1.0,
           f"({total} cases, {elapsed:.2f}s)")


def _random_spec(rng) -> ScenarioSpec:
    two = bool(rng.integers(0, 2))
    if two and rng.random() < 0.5:
        x_a = float(rng.uniform(-340.0, -176.0))
    else:
        x_a = float(rng.uniform(0.0, 170.0))
    return ScenarioSpec(network=NetworkKind.TWO if two else NetworkKind.ONE,
                        x_a=x_a, d=float(rng.uniform(0.0, 170.0)),
                        inflow_vph=float(rng.uniform(600.0, 1800.0)),
                        seed=int(rng.integers(0, 10_000)))


def test_criterion_4_simulator_invariants():
    start = time.time()
    rng = np.random.default_rng(404)
    periodic = all(
        build_initial_state(ScenarioSpec()).program.state(t)
        is build_initial_state(ScenarioSpec()).program.state(t + 74.0)
        for t in rng.uniform(0.0, 5000.0, size=10_000))
    failures = []
    for case in range(100):
        spec = _random_spec(rng)
        runs = []
        for _ in range(2):
            sim = build_initial_state(spec)
            for _ in range(600):
                sim.step()  # engine raises on any invariant breach
            for lane in (0, 1):
                vehicles = sim.lane_vehicles(lane)
                for front, back in zip(vehicles, vehicles[1:]):
                    if front.rear - back.pos <= 0.0:
                        failures.append((case, "gap"))
                for veh in vehicles:
                    limit = sim.network.speed_limit(veh.vclass)
                    if not (0.0 <= veh.speed <= limit + 1e-9):
                        failures.append((case, "speed"))
                    if abs(veh.accel) > 3.0 + 1e-9:
                        failures.append((case, "accel"))
            runs.append(sim.record.rows)
        if runs[0] != runs[1]:
            failures.append((case, "determinism"))
    elapsed = time.time() - start
    report("4 simulator invariants",
           periodic and not failures and elapsed < 30.0,
           f"(100 scenarios x 600 steps, {elapsed:.1f}s, "
           f"failures={failures[:3]})")


def test_criterion_5_gradient_check():
    start = time.time()
    net = PolicyNet(input_dim=9, hidden=(4,), seed=505, zero_final=False)
    rng = np.random.default_rng(506)
    trajs = [Trajectory(obs=rng.normal(size=(6, 9)),
                        pre_squash=rng.normal(size=6),
                        rewards=rng.normal(size=6)) for _ in range(3)]
    gamma = 0.999
    obs = np.concatenate([t.obs for t in trajs])
    draws = np.concatenate([t.pre_squash for t in trajs])
    coeff = np.concatenate([discounted_returns(t.rewards, gamma)
                            for t in trajs]) / len(trajs)
    analytic = net.flat_gradients(net.weighted_logprob_grad(obs, draws, coeff))
    theta = net.flat_params().copy()
    eps = 1e-4
    fd = np.zeros_like(theta)
    for i in range(len(theta)):
        up = theta.copy()
        up[i] += eps
        net.set_flat_params(up)
        hi = vpg_surrogate(net, trajs, gamma)
        up[i] -= 2 * eps
        net.set_flat_params(up)
        lo = vpg_surrogate(net, trajs, gamma)
        fd[i] = (hi - lo) / (2 * eps)
    net.set_flat_params(theta)
    rel = np.abs(analytic - fd) / np.maximum(
        np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
    elapsed = time.time() - start
    report("5 gradient check", rel.max() < 1e-4 and elapsed < 30.0,
           f"(max rel err {rel.max():.2e}, {elapsed:.1f}s)")


def test_criterion_6_desk_scale_learning():
    start = time.time()
    cfg = TrainConfig(episodes=2000, seed=0)
    result = train(cfg)
    trained = evaluate(result.net, cfg, n_episodes=40)

    baseline_returns = random_policy_returns(cfg, 40)
    mean = float(np.mean(baseline_returns))
    half_width = 1.96 * float(np.std(baseline_returns, ddof=1)) \
        / math.sqrt(len(baseline_returns))
    upper = mean + half_width

    checkpoint = result.net.to_checkpoint()
    policy_tev, idle_tev = [], []
    for x_a in SINGLE_GRID_X:
        for d in SINGLE_GRID_D:
            spec = ScenarioSpec(network=NetworkKind.ONE, x_a=x_a, d=d)
            pol = run_episode(RunSettings(spec=spec, controller="policy",
                                          checkpoint=checkpoint,
                                          record_states=False))
            idle = run_episode(RunSettings(spec=spec,
                                           controller="idm_baseline",
                                           record_states=False))
            if (pol.metrics["t_ev"] is not None
                    and idle.metrics["t_ev"] is not None):
                policy_tev.append(pol.metrics["t_ev"])
                idle_tev.append(idle.metrics["t_ev"])
    mean_policy = float(np.mean(policy_tev))
    mean_idle = float(np.mean(idle_tev))
    elapsed = time.time() - start
    ok = (trained["mean_return"] > upper
          and mean_policy <= mean_idle
          and len(policy_tev) == 25
          and elapsed < 1800.0)
    report("6 desk-scale learning", ok,
           f"(return {trained['mean_return']:.1f} vs random upper CI "
           f"{upper:.1f}; grid T_ev {mean_policy:.2f}s vs do-nothing "
           f"{mean_idle:.2f}s; {elapsed:.0f}s)")


def _time_space_table(settings: RunSettings):
    outcome = run_episode(settings)
    buf = io.StringIO()
    write_time_space_csv(outcome.record, buf)
    table = {}
    for line in buf.getvalue().splitlines()[1:]:
        vid, t, pos, lane, vclass = line.split(",")
        table.setdefault(int(vid), []).append(
            (float(t), float(pos), int(lane)))
    return table


def test_criterion_7_behavior_classes():
    start = time.time()
    # no-wait branch: assisting vehicle queued at the second stop line with
    # a short clearing queue drives off with the green
    table = _time_space_table(RunSettings(
        spec=ScenarioSpec(network=NetworkKind.TWO, x_a=-191.0, d=8.5),
        controller="model_based"))
    cav = table[CAV_ID]
    ems = {t: pos for t, pos, _ in table[EMS_ID]}
    crossed_at = next((t for t, pos, _ in cav if pos > 350.0), None)
    no_wait = crossed_at is not None and crossed_at <= 12.0
    moving = False
    for (t0, p0, _), (t1, p1, _) in zip(cav, cav[1:]):
        if p1 - p0 > 0.05:
            moving = True
        elif moving and p1 < 350.0 and ems.get(t1, 1e9) < p1:
            no_wait = False  # stopped again while the EMS was upstream

    # stationary-hold branch: x_a below the split point keeps the assisting
    # vehicle parked until the emergency vehicle has merged in front
    hold_settings = RunSettings(
        spec=ScenarioSpec(network=NetworkKind.ONE, x_a=50.0, d=100.0),
        controller="model_based")
    outcome = run_episode(hold_settings)
    record = outcome.record
    merge_t = next(ev.t for ev in record.lane_changes
                   if ev.vehicle_id == EMS_ID and ev.lane_to == 0)
    cav_rows = [r for r in record.rows if r.vehicle_id == CAV_ID]
    first_move = next(r.t for r in cav_rows if r.speed > 0.01)
    hold = first_move >= merge_t and first_move > 5.0
    elapsed = time.time() - start
    report("7 behavior classes", no_wait and hold and elapsed < 10.0,
           f"(no-wait crossing at {crossed_at}s; hold released at "
           f"{first_move}s after merge at {merge_t}s; {elapsed:.1f}s)")


def test_criterion_8_oracle_relation():
    start = time.time()
    comparisons = []
    violations = []
    for network, xs in ((NetworkKind.ONE, SINGLE_GRID_X),
                        (NetworkKind.TWO, TWO_GRID_X)):
        for x_a in xs:
            for d in SINGLE_GRID_D:
                spec = ScenarioSpec(network=network, x_a=x_a, d=d)
                sim = run_episode(RunSettings(spec=spec,
                                              controller="model_based",
                                              record_states=False))
                if sim.metrics["t_ev"] is None:
                    continue
                ideal = oracle_times(
                    ShockwaveParams(w=10.0, U=15.0, V=35.0, d=d, x_a=x_a,
                                    z=175.0 if network is NetworkKind.TWO
                                    else None),
                    two_intersections=network is NetworkKind.TWO)
                comparisons.append((network.value, x_a, d))
                if ideal.t_ev > sim.metrics["t_ev"]:
                    violations.append((network.value, x_a, d, ideal.t_ev,
                                       sim.metrics["t_ev"]))
    share = 1.0 - len(violations) / len(comparisons)
    elapsed = time.time() - start
    for v in violations:
        print(f"  oracle slower than simulation at {v}")
    report("8 oracle relation", share >= 0.95,
           f"({len(comparisons)} feasible cells, "
           f"{100 * share:.0f}% satisfied, {elapsed:.1f}s)")
