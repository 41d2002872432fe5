import threading

import numpy as np
import pytest

from conftest import random_circuit
from sparsetomo.errors import ConfigError, DimensionError, NumericError
from sparsetomo.qcore import Apply1Q, Circuit, StateVector, run_circuit
from sparsetomo.sim import (MeasurementManager, NoiseModel, Prep, apply_noise_trajectory, apply_readout_flips,
                            measure, sample_counts)


def test_noise_model_validation_and_json():
    with pytest.raises(ConfigError):
        NoiseModel(p_readout=1.5)
    with pytest.raises(ConfigError):
        NoiseModel.from_json('{"p_depol": 0.1}')
    with pytest.raises(ConfigError):
        NoiseModel.from_json("not json")
    nm = NoiseModel.from_json('{"p_depol_1q": 0.001, "p_depol_2q": 0.02, "p_readout": 0.03}')
    assert nm.to_dict() == {"p_depol_1q": 0.001, "p_depol_2q": 0.02, "p_readout": 0.03}
    assert NoiseModel().is_zero
    d = NoiseModel.default_noisy()
    assert (d.p_depol_1q, d.p_depol_2q, d.p_readout) == (0.0005, 0.01, 0.02)


def test_exact_measure_h():
    mgr = MeasurementManager()
    out = measure(mgr, Circuit(1).h(0), Circuit(1))
    np.testing.assert_allclose(out.probs, [0.5, 0.5])
    assert out.shots == 0


def test_sampled_measure_h_within_binomial_bound():
    mgr = MeasurementManager("sampled", shots=16384, seed=3)
    out = mgr.measure(Circuit(1).h(0))
    assert abs(out.probs[0] - 0.5) <= 0.02
    assert out.shots == 16384
    counts = out.probs * 16384
    np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)


def test_cache_hit_is_identical_and_not_reexecuted():
    mgr = MeasurementManager("sampled", shots=1000, seed=1)
    a = mgr.measure(Circuit(2).h(0), Circuit(2).h(1))
    b = mgr.measure(Circuit(2).h(0), Circuit(2).h(1))
    assert a is b
    assert mgr.executions == 1


def test_same_seed_independent_of_request_order():
    prep = Circuit(2).h(0).cx(0, 1)
    meas = [Circuit(2), Circuit(2).h(0), Circuit(2).v(1)]
    m1 = MeasurementManager("sampled", shots=500, seed=9, noise=NoiseModel.default_noisy())
    m2 = MeasurementManager("sampled", shots=500, seed=9, noise=NoiseModel.default_noisy())
    r1 = [m1.measure(prep, m) for m in meas]
    r2 = [m2.measure(prep, m) for m in reversed(meas)][::-1]
    assert all(a == b for a, b in zip(r1, r2))


def test_execute_once_under_concurrency():
    mgr = MeasurementManager("sampled", shots=20000, seed=2, noise=NoiseModel.default_noisy())
    prep = Circuit(4).h(0).cx(0, 1).cx(1, 2).cx(2, 3)
    results = []
    threads = [threading.Thread(target=lambda: results.append(mgr.measure(prep))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert mgr.executions == 1
    assert all(r is results[0] for r in results)


def test_sampled_mode_needs_shots():
    with pytest.raises(ConfigError):
        MeasurementManager("sampled", shots=0)
    with pytest.raises(ConfigError):
        MeasurementManager("quantum")


def test_measure_dimension_mismatch():
    with pytest.raises(DimensionError):
        MeasurementManager().measure(Circuit(2), Circuit(3))


def test_sample_counts():
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(sample_counts([1, 0], 100, rng), [100, 0])
    a = sample_counts([0.2, 0.8], 50, np.random.default_rng(4))
    b = sample_counts([0.2, 0.8], 50, np.random.default_rng(4))
    np.testing.assert_array_equal(a, b)
    c = sample_counts([0.5, 0.5], 16384, rng)
    assert 7936 <= c[0] <= 8448 and c.sum() == 16384
    # tiny negatives are clamped
    assert sample_counts([1 + 1e-13, -1e-13], 10, rng).tolist() == [10, 0]
    with pytest.raises(NumericError):
        sample_counts([1.1, -0.1], 10, rng)
    with pytest.raises(NumericError):
        sample_counts([0.5, 0.4], 10, rng)


def test_noise_trajectory_zero_and_forced():
    rng = np.random.default_rng(0)
    c = Circuit(2).h(0).v(1).cx(0, 1)
    assert apply_noise_trajectory(c, NoiseModel(), rng).ops == c.ops
    forced = apply_noise_trajectory(c, NoiseModel(p_depol_1q=1.0), rng)
    ops = forced.ops
    assert len(ops) == 5
    assert ops[0] == c.ops[0] and ops[1].qubit == 0 and ops[1].gate.name in "xyz"
    assert ops[2] == c.ops[1] and ops[3].qubit == 1


def test_noise_trajectory_2q_rate():
    c = Circuit(2)
    for _ in range(100):
        c = c.cx(0, 1)
    nm = NoiseModel(p_depol_2q=0.01)
    inserted = []
    for seed in range(1000):
        t = apply_noise_trajectory(c, nm, np.random.default_rng(seed))
        # each insertion event adds one or two Pauli ops right after a CNOT
        events = sum(
            1 for prev, op in zip(t.ops, t.ops[1:]) if not isinstance(prev, Apply1Q) and isinstance(op, Apply1Q)
        )
        inserted.append(events)
    assert 0.7 <= np.mean(inserted) <= 1.3


def test_readout_flips():
    rng = np.random.default_rng(5)
    assert apply_readout_flips(5, 0.0, 3, rng) == 5
    assert apply_readout_flips(0, 1.0, 3, rng) == 0b111
    out = apply_readout_flips(np.zeros(100000, dtype=np.int64), 0.02, 3, rng)
    assert 0.935 <= np.mean(out == 0) <= 0.947


def test_exact_probs_sum_to_one(rng):
    mgr = MeasurementManager()
    for _ in range(10):
        c = random_circuit(rng, 3, 12)
        assert abs(mgr.measure(c).probs.sum() - 1) < 1e-10


def test_sampled_converges_to_exact(rng):
    for _ in range(3):
        c = random_circuit(rng, 3, 10)
        exact = MeasurementManager().measure(c).probs
        sampled = MeasurementManager("sampled", shots=2**20, seed=1).measure(c).probs
        assert np.abs(exact - sampled).max() <= 5e-3


def test_trajectories_reduce_to_exact_without_noise_events():
    # gate noise so small no event fires: must reproduce the noiseless distribution
    c = Circuit(2).h(0).cx(0, 1)
    nm = NoiseModel(p_depol_1q=1e-12, p_depol_2q=1e-12)
    out = MeasurementManager("sampled", shots=4096, noise=nm, seed=0).measure(c)
    assert out.probs[1] == 0 and out.probs[2] == 0
    assert abs(out.probs[0] - 0.5) < 0.05


def test_readout_noise_leaks_mass():
    out = MeasurementManager("sampled", shots=50000, noise=NoiseModel(p_readout=0.1), seed=0).measure(Circuit(1))
    assert 0.09 < out.probs[1] < 0.11


def test_initial_state_prep_and_key():
    s = StateVector(1, np.array([0.6, 0.8]))
    prep = Prep(Circuit(1), s)
    assert prep.key().startswith("init sha256 ")
    np.testing.assert_allclose(MeasurementManager().measure(prep).probs, [0.36, 0.64])
    with pytest.raises(DimensionError):
        Prep(Circuit(2), s)


def test_cache_dump_and_load(tmp_path):
    mgr = MeasurementManager("sampled", shots=100, seed=0)
    mgr.measure(Circuit(2).h(0))
    mgr.measure(Circuit(2).h(1))
    path = tmp_path / "cache.ndjson"
    mgr.dump(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    fresh = MeasurementManager("sampled", shots=100, seed=0)
    assert fresh.load(path) == 2
    assert fresh.measure(Circuit(2).h(0)) == mgr.measure(Circuit(2).h(0))
    assert fresh.executions == 0


def test_noise_lowers_fidelity_statistically():
    from sparsetomo.presets import load_preset
    from sparsetomo.qcore import fidelity
    from sparsetomo.tomo import reconstruct_mst

    c = load_preset("pair-000-111")
    truth = run_circuit(c)

    def fids(noise):
        return [
            fidelity(reconstruct_mst(MeasurementManager("sampled", 4096, noise, s), c, 0.05).estimate, truth)
            for s in range(100)
        ]

    assert np.median(fids(NoiseModel(p_depol_2q=0.02))) <= np.median(fids(NoiseModel()))
