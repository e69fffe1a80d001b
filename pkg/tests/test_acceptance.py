"""End-to-end acceptance suite.

Each test covers one release criterion at a pinned tolerance and prints a
one-line verdict; run with ``pytest tests/test_acceptance.py -v -s``.  The
heavy Monte Carlo comparisons (criteria 3 and 4) take a few minutes
combined.
"""

import math

import numpy as np
import pytest

from dstcsim.buffers import DynamicBufferPolicy
from dstcsim.cli import main
from dstcsim.config import SimConfig
from dstcsim.detectors import build_filters, mmse_filters
from dstcsim.protocol import run_point, run_sweep, run_trial
from dstcsim.selection import (
    OperationCounter,
    build_table,
    count_complexity,
    greedy_table,
    pair_sinr,
    select_best,
    select_greedy,
)
from dstcsim.spacetime import effective_matrix

from oracles import binomial_sigma, bpsk_awgn_ber, mmse_single_user, naive_pair_sinr

SEED = 20260809

OPERATING_POINT = dict(
    users=3, relays=6, gain=16, symbols=1000,
    detector_relay="mmse", detector_dest="rake", seed=SEED,
)


def _two_sigma_band(ber_a, n_a, ber_b, n_b):
    return 2.0 * math.hypot(binomial_sigma(ber_a, n_a), binomial_sigma(ber_b, n_b))


def _sweep_bers(cfg, grid):
    points = [run_point(cfg, i, snr_db=s) for i, s in enumerate(grid)]
    return [(p.ber, p.bits_judged) for p in points]


def test_criterion_1_awgn_calibration():
    """Direct-link BPSK matches the analytic error rate at 0, 4 and 8 dB."""
    import time

    started = time.perf_counter()
    frozen = {0.0: 0.0786, 4.0: 0.0125, 8.0: 1.91e-4}
    cfg = SimConfig(users=1, relays=0, gain=16, symbols=1000, packets=1000,
                    scheme="direct", seed=SEED)
    report = []
    for snr_db, quoted in frozen.items():
        analytic = bpsk_awgn_ber(10.0 ** (snr_db / 10.0))
        assert abs(analytic - quoted) <= 5e-3 * max(quoted, 1e-12) + 5e-7
        point = run_point(cfg, int(snr_db), snr_db=snr_db)
        assert point.bits_judged >= 1_000_000
        tolerance = 3.0 * binomial_sigma(analytic, point.bits_judged)
        assert abs(point.ber - analytic) <= tolerance, (
            f"{snr_db} dB: simulated {point.ber:.3e} vs analytic {analytic:.3e}"
        )
        report.append(f"{snr_db:g}dB {point.ber:.3e}~{analytic:.3e}")
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"\nPASS criterion 1 (calibration): {'; '.join(report)} in {elapsed:.1f}s")


def test_criterion_2_noiseless_exactness():
    """Every scheme and policy is error-free without noise, over 100 trials."""
    combos = [
        ("buffered", "exhaustive"), ("buffered", "greedy"),
        ("buffered", "random"), ("buffered", "fixed-pairs"),
        ("non-buffered", "exhaustive"), ("non-buffered", "greedy"),
        ("non-buffered", "random"),
        ("no-selection", "fixed-pairs"),
        ("single-user-bound", "exhaustive"),
    ]
    trials = 0
    for scheme, policy in combos:
        cfg = SimConfig(users=1, relays=6, gain=16, symbols=40, packets=1,
                        detector_relay="rake", detector_dest="rake",
                        scheme=scheme, policy=policy, capacity=3, seed=SEED)
        for packet in range(12):
            policy_obj = None
            if scheme in ("buffered", "single-user-bound") and packet % 3 == 2:
                policy_obj = DynamicBufferPolicy(mode="power", capacity=3, d3=2, gamma=1e-3)
            result = run_trial(cfg, packet, sigma2=0.0, power_policy=policy_obj,
                               collect_metrics=False)
            assert result.bit_errors == 0, f"{scheme}/{policy} packet {packet}"
            assert result.residual == 0
            assert result.generated == result.delivered
            trials += 1
    assert trials >= 100
    print(f"\nPASS criterion 2 (noiseless exactness): {trials} trials, all zero errors")


def test_criterion_3_scheme_ordering():
    """Scheme ranking at the reference operating point, 6 to 10 dB."""
    grid = (6.0, 8.0, 10.0)
    packets = 200
    schemes = [
        ("ba-exhaustive", dict(scheme="buffered", policy="exhaustive", capacity=6)),
        ("ba-greedy", dict(scheme="buffered", policy="greedy", capacity=6)),
        ("nb-exhaustive", dict(scheme="non-buffered", policy="exhaustive")),
        ("nb-random", dict(scheme="non-buffered", policy="random")),
        ("no-selection", dict(scheme="no-selection", policy="fixed-pairs")),
        ("single-user", dict(scheme="single-user-bound", policy="exhaustive", capacity=6)),
    ]
    bers = {}
    for name, overrides in schemes:
        cfg = SimConfig(packets=packets, **{**OPERATING_POINT, **overrides})
        bers[name] = _sweep_bers(cfg, grid)

    chain = ["ba-exhaustive", "ba-greedy", "nb-exhaustive", "nb-random", "no-selection"]
    for i, snr_db in enumerate(grid):
        for a, b in zip(chain, chain[1:]):
            (pa, na), (pb, nb) = bers[a][i], bers[b][i]
            band = _two_sigma_band(pa, na, pb, nb)
            assert pa <= pb + band, f"{a} vs {b} at {snr_db} dB: {pa:.4f} > {pb:.4f} + {band:.4f}"
        (ps, ns) = bers["single-user"][i]
        for other in chain:
            (po, no) = bers[other][i]
            band = _two_sigma_band(ps, ns, po, no)
            assert ps <= po + band, f"single-user not below {other} at {snr_db} dB"
    summary = "; ".join(
        f"{name} {bers[name][1][0]:.4f}" for name in chain + ["single-user"]
    )
    print(f"\nPASS criterion 3 (scheme ordering, 8 dB column): {summary}")


def test_criterion_4_dynamic_vs_fixed_buffers():
    """Dynamic capacity policies match or beat the fixed size-8 buffers."""
    grid = (6.0, 8.0, 10.0)
    packets = 200
    report = []
    for policy in ("exhaustive", "greedy"):
        point_sets = {}
        fixed = SimConfig(packets=packets, scheme="buffered", policy=policy,
                          capacity=8, snr_db=grid, **OPERATING_POINT)
        point_sets["fixed"] = run_sweep(fixed).points
        # The SNR rule only shrinks the buffer, so the dynamic run starts at
        # full capacity and tracks the rising SNR down to the fixed size.
        snr_driven = SimConfig(packets=packets, scheme="buffered", policy=policy,
                               capacity=12, buffer_mode="dynamic-snr", d1=2.0, d2=2,
                               snr_db=grid, **OPERATING_POINT)
        point_sets["snr-driven"] = run_sweep(snr_driven).points
        power_driven = SimConfig(packets=packets, scheme="buffered", policy=policy,
                                 capacity=8, buffer_mode="dynamic-power", d3=2,
                                 gamma=1e-3, snr_db=grid, **OPERATING_POINT)
        point_sets["power-driven"] = run_sweep(power_driven).points

        for mode in ("snr-driven", "power-driven"):
            for fixed_pt, dyn_pt in zip(point_sets["fixed"], point_sets[mode]):
                band = _two_sigma_band(dyn_pt.ber, dyn_pt.bits_judged,
                                       fixed_pt.ber, fixed_pt.bits_judged)
                assert dyn_pt.ber <= fixed_pt.ber + band, (
                    f"{policy}/{mode} at {dyn_pt.snr_db} dB: "
                    f"{dyn_pt.ber:.4f} > {fixed_pt.ber:.4f} + {band:.4f}"
                )
            report.append(
                f"{policy}/{mode} ok (avg J "
                + ",".join(f"{p.avg_capacity:.1f}" for p in point_sets[mode])
                + ")"
            )
    print(f"\nPASS criterion 4 (dynamic vs fixed buffers): {'; '.join(report)}")


def test_criterion_5_selection_oracles():
    """Pair SINR matches brute force; greedy equals exhaustive for two relays."""
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        n_users = int(rng.integers(1, 4))
        n_relays = int(rng.integers(2, 7))
        gain = int(rng.integers(2, 17))
        sigma2 = float(rng.uniform(0.05, 2.0))
        kind = "mmse" if rng.random() < 0.5 else "rake"
        sigs = (
            rng.standard_normal((n_relays, gain, n_users))
            + 1j * rng.standard_normal((n_relays, gain, n_users))
        ) / np.sqrt(gain)
        fils = np.stack([build_filters(sigs[l], kind, sigma2) for l in range(n_relays)])
        m = int(rng.integers(n_relays - 1))
        n = int(rng.integers(m + 1, n_relays))
        mine = pair_sinr(sigs, fils, (m, n), sigma2)
        reference = naive_pair_sinr(sigs, fils, (m, n), sigma2)
        worst = max(worst, abs(mine - reference) / abs(reference))
    assert worst <= 1e-10

    agreements = 0
    for _ in range(1000):
        sigs = (
            rng.standard_normal((2, 4, 2)) + 1j * rng.standard_normal((2, 4, 2))
        ) / 2.0
        fils = sigs.copy()
        sigma2 = float(rng.uniform(0.05, 2.0))
        flags = rng.random(2) < 0.5

        def feasible(entry):
            return bool(flags[entry.hop])

        best = select_best(build_table(sigs, fils, sigs, fils, sigma2), feasible)
        greedy = select_greedy(sigs, fils, sigs, fils, sigma2, feasible)
        assert best == greedy
        agreements += 1
    print(
        f"\nPASS criterion 5 (oracle equivalence): worst relative error {worst:.2e}; "
        f"greedy==exhaustive on {agreements} two-relay instances"
    )


def test_criterion_6_structural_identities():
    """Block-matrix orthogonality and the single-user MMSE closed form."""
    rng = np.random.default_rng(SEED + 1)
    worst_gram = 0.0
    for _ in range(1000):
        h_m = (rng.standard_normal(16) + 1j * rng.standard_normal(16)) / 4.0
        h_n = (rng.standard_normal(16) + 1j * rng.standard_normal(16)) / 4.0
        h = effective_matrix(h_m, h_n)
        gram = h.conj().T @ h
        scale = np.vdot(h_m, h_m).real + np.vdot(h_n, h_n).real
        worst_gram = max(worst_gram, float(np.max(np.abs(gram - scale * np.eye(2)))))
    assert worst_gram <= 1e-12

    worst_mmse = 0.0
    for _ in range(100):
        h = (rng.standard_normal((16, 1)) + 1j * rng.standard_normal((16, 1))) / 4.0
        sigma2 = float(rng.uniform(0.01, 2.0))
        w = mmse_filters(h, sigma2)[:, 0]
        expected = mmse_single_user(h[:, 0], sigma2)
        worst_mmse = max(worst_mmse, float(np.max(np.abs(w - expected))))
    assert worst_mmse <= 1e-10
    print(
        f"\nPASS criterion 6 (structural): max gram deviation {worst_gram:.2e}, "
        f"max single-user MMSE deviation {worst_mmse:.2e}"
    )


def test_criterion_7_complexity_counters():
    """Closed-form operation counts and instrumented evaluation counts."""
    counts = count_complexity(3, 16, 6)
    assert counts.exhaustive_mults == 60480
    assert counts.greedy_mults == 34272
    assert counts.exhaustive_adds == 17760
    assert counts.greedy_adds == 10633

    rng = np.random.default_rng(SEED + 2)
    n_relays = 6
    sigs = (
        rng.standard_normal((n_relays, 16, 3)) + 1j * rng.standard_normal((n_relays, 16, 3))
    ) / 4.0
    fils = sigs.copy()
    exhaustive_counter = OperationCounter()
    build_table(sigs, fils, sigs, fils, 0.5, exhaustive_counter)
    greedy_counter = OperationCounter()
    greedy_table(sigs, fils, sigs, fils, 0.5, greedy_counter)
    assert greedy_counter.pair_evals <= 2 * (n_relays - 1)
    assert 2 * (n_relays - 1) < n_relays * (n_relays - 1)
    assert exhaustive_counter.pair_evals == n_relays * (n_relays - 1)

    # The protocol charges the same counts per selection event.
    small = {**OPERATING_POINT, "symbols": 20}
    cfg = SimConfig(packets=1, scheme="buffered", policy="exhaustive", capacity=6, **small)
    trial = run_trial(cfg, 0, snr_db=8.0, collect_metrics=False)
    assert trial.counter.pair_evals == 30 * trial.epochs
    cfg_greedy = SimConfig(packets=1, scheme="buffered", policy="greedy", capacity=6, **small)
    trial_greedy = run_trial(cfg_greedy, 0, snr_db=8.0, collect_metrics=False)
    assert trial_greedy.counter.pair_evals == 10 * trial_greedy.epochs
    print(
        "\nPASS criterion 7 (complexity): closed forms 60480/34272 mults, "
        f"instrumented evals exhaustive={exhaustive_counter.pair_evals}, "
        f"greedy={greedy_counter.pair_evals}"
    )


def test_criterion_8_delay_behavior():
    """Unit delay without buffers; buffered delay grows with capacity."""
    nb = SimConfig(packets=20, scheme="non-buffered", policy="exhaustive",
                   **OPERATING_POINT)
    point = run_point(nb, snr_db=4.0)
    assert point.avg_delay == 1.0

    means = {}
    deviations = {}
    for capacity in (2, 6, 10):
        cfg = SimConfig(packets=200, scheme="buffered", policy="exhaustive",
                        capacity=capacity, **OPERATING_POINT)
        pt = run_point(cfg, capacity, snr_db=4.0, keep_trials=True)
        assert pt.avg_delay >= 1.0
        per_trial = np.array([t.delay_total / t.delivered for t in pt.trials])
        means[capacity] = float(np.mean(per_trial))
        deviations[capacity] = float(np.std(per_trial) / np.sqrt(len(per_trial)))
    for small, large in ((2, 6), (6, 10)):
        band = 2.0 * math.hypot(deviations[small], deviations[large])
        assert means[small] <= means[large] + band, (
            f"delay(J={small})={means[small]:.2f} vs delay(J={large})={means[large]:.2f}"
        )
    print(
        "\nPASS criterion 8 (delay): non-buffered exactly 1.0; buffered "
        + ", ".join(f"J={j}: {means[j]:.2f}" for j in (2, 6, 10))
    )


def test_criterion_9_bytewise_determinism(tmp_path):
    """Two identical CLI invocations emit byte-identical CSV."""
    conf = tmp_path / "acceptance.conf"
    conf.write_text("users=2 relays=4 gain=8 symbols=60 packets=3\n")
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    args = ["--config", str(conf), "--snr", "0:8:4", "--seed", str(SEED)]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    payload_a = out_a.read_bytes()
    assert payload_a == out_b.read_bytes()
    assert payload_a.decode().count("\n") == 4  # header + three grid points
    print("\nPASS criterion 9 (determinism): byte-identical CSV across reruns")
