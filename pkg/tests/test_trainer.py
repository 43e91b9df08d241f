"""Tests for the update-generator engine and the training loop."""

import numpy as np
import pytest

from resqnn.cost import cost_full, cost_graph, cost_supervised
from resqnn.graphdata import build_graph_spec, generate_dataset
from resqnn.netcore import (
    ArchitectureError,
    arch_from_string,
    embed_network,
    forward,
    init_unitaries,
)
from resqnn.qlinalg import _pauli_stack
from resqnn.trainer import (
    GRAPH_GRADIENT_SCALE,
    TrainingConfig,
    TrainingTrace,
    UpdateGenerators,
    graph_generators,
    k_full,
    k_graph_one_hidden,
    k_numeric_oracle,
    k_supervised_one_hidden,
    k_supervised_two_hidden,
    numeric_cost_gradients,
    supervised_generators,
    train,
    update_step,
)


def _setup(arch_string, seed, num_vertices=4, num_supervised=2, delta=0.3):
    arch = arch_from_string(arch_string)
    spec = build_graph_spec("line", num_vertices, num_supervised)
    dataset = generate_dataset(spec, arch.input_qubits, delta=delta, seed=seed)
    unitaries = init_unitaries(arch, np.random.default_rng([seed, 1]))
    embedded = embed_network(arch, unitaries)
    records = [
        forward(arch, unitaries, dataset.input_density(v), embedded=embedded)
        for v in range(num_vertices)
    ]
    return arch, dataset, unitaries, embedded, records


def _analytic_full(arch, dataset, unitaries, embedded, records, gamma):
    sup_records = [records[v] for v in dataset.spec.supervised_indices]
    k_sv = supervised_generators(
        arch, unitaries, sup_records, list(dataset.supervised_targets), 1.0, embedded
    )
    if gamma == 0.0:
        return k_sv
    k_g = graph_generators(arch, unitaries, records, dataset.adjacency, 1.0, embedded)
    return k_full(k_sv, k_g, gamma)


def _max_generator_diff(a, b):
    return max(
        np.abs(ka - kb).max()
        for la, lb in zip(a.layers, b.layers)
        for ka, kb in zip(la, lb)
    )


def _all_costs(arch, dataset, unitaries):
    embedded = embed_network(arch, unitaries)
    records = [
        forward(arch, unitaries, dataset.input_density(v), embedded=embedded)
        for v in range(dataset.spec.num_vertices)
    ]
    t = arch.residual_count
    c_sv = cost_supervised(
        [records[v].final for v in dataset.spec.supervised_indices],
        list(dataset.supervised_targets),
        t,
    )
    c_g = cost_graph([r.final for r in records], dataset.adjacency, t)
    return c_sv, c_g


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_one_hidden_full_generator_matches_oracle(self, seed):
        arch, ds, uni, emb, recs = _setup("2,~3,2", seed)
        k_a = _analytic_full(arch, ds, uni, emb, recs, gamma=-0.5)
        k_n = k_numeric_oracle(arch, uni, ds, gamma=-0.5, h=1e-5)
        assert _max_generator_diff(k_a, k_n) < 1e-8

    def test_supervised_only_matches_oracle(self):
        arch, ds, uni, emb, recs = _setup("2,~3,2", 5)
        k_a = _analytic_full(arch, ds, uni, emb, recs, gamma=0.0)
        k_n = k_numeric_oracle(arch, uni, ds, gamma=0.0, h=1e-5)
        assert _max_generator_diff(k_a, k_n) < 1e-8

    @pytest.mark.parametrize("arch_string", ["2,~3,~3,2", "2,~3,3,2", "2,3,~3,2"])
    def test_two_hidden_any_flags_matches_oracle(self, arch_string):
        arch, ds, uni, emb, recs = _setup(arch_string, 9)
        k_a = _analytic_full(arch, ds, uni, emb, recs, gamma=-0.5)
        k_n = k_numeric_oracle(arch, uni, ds, gamma=-0.5, h=1e-5)
        assert _max_generator_diff(k_a, k_n) < 1e-8

    def test_three_hidden_matches_oracle(self):
        arch, ds, uni, emb, recs = _setup("2,~3,~3,~3,2", 12)
        k_a = _analytic_full(arch, ds, uni, emb, recs, gamma=-0.5)
        k_n = k_numeric_oracle(arch, uni, ds, gamma=-0.5, h=1e-5)
        assert _max_generator_diff(k_a, k_n) < 1e-8

    def test_smallest_network_matches_oracle(self):
        arch, ds, uni, emb, recs = _setup("1,~2,1", 3)
        k_a = _analytic_full(arch, ds, uni, emb, recs, gamma=-1.0)
        k_n = k_numeric_oracle(arch, uni, ds, gamma=-1.0, h=1e-5)
        assert _max_generator_diff(k_a, k_n) < 1e-8

    def test_graph_scale_constant_is_calibrated(self):
        # Measure the graph normalization directly: the analytic graph
        # generator divided by the Pauli-assembled graph-cost gradient must
        # land on the frozen constant for every perceptron.
        arch, ds, uni, emb, recs = _setup("2,~3,2", 21)
        k_g = graph_generators(arch, uni, recs, ds.adjacency, 1.0, emb)
        _, grads_g = numeric_cost_gradients(arch, uni, ds, 1e-5, include_graph=True)
        t = arch.residual_count
        for l in range(arch.num_unitary_layers):
            stack = _pauli_stack(arch.width_in(l) + 1)
            for p in range(arch.width_out(l)):
                assembled = 2.0 ** (t - 1) * np.tensordot(grads_g[l][p], stack, axes=1)
                num = np.abs(k_g.layers[l][p]).max()
                den = np.abs(assembled).max()
                assert den > 1e-6
                measured = num / den
                assert measured == pytest.approx(GRAPH_GRADIENT_SCALE, rel=1e-2)
                assert np.abs(k_g.layers[l][p] - GRAPH_GRADIENT_SCALE * assembled).max() < 1e-8

    def test_eta_scales_generators_linearly(self):
        arch, ds, uni, emb, recs = _setup("2,~3,2", 4)
        sup = [recs[v] for v in ds.spec.supervised_indices]
        k1 = supervised_generators(arch, uni, sup, list(ds.supervised_targets), 1.0, emb)
        k3 = supervised_generators(arch, uni, sup, list(ds.supervised_targets), 3.0, emb)
        assert _max_generator_diff(
            UpdateGenerators(arch, tuple(tuple(3.0 * k for k in l) for l in k1.layers)), k3
        ) < 1e-12


class TestAscent:
    def test_tiny_step_never_decreases_cost(self):
        # A first-order ascent step along the gradient must raise the cost for
        # small enough step size, across many random instances.
        rng = np.random.default_rng(77)
        arch_strings = ["1,~2,1", "2,~3,2", "2,~2,2"]
        for trial in range(20):
            arch_string = arch_strings[trial % len(arch_strings)]
            seed = int(rng.integers(0, 2**31))
            gamma = float(rng.choice([0.0, -0.5, -1.0]))
            arch, ds, uni, emb, recs = _setup(arch_string, seed)
            k = _analytic_full(arch, ds, uni, emb, recs, gamma)
            c_sv0, c_g0 = _all_costs(arch, ds, uni)
            updated = update_step(uni, k, 1e-4)
            c_sv1, c_g1 = _all_costs(arch, ds, updated)
            before = cost_full(c_sv0, c_g0, gamma)
            after = cost_full(c_sv1, c_g1, gamma)
            assert after >= before - 1e-12, (arch_string, seed, gamma)

    def test_default_step_never_drops_noticeably(self):
        for seed in range(8):
            arch = arch_from_string("2,~3,2")
            spec = build_graph_spec("line", 8, 3)
            ds = generate_dataset(spec, 2, delta=0.3, seed=seed)
            trace = train(arch, ds, TrainingConfig(epochs=60, seed=seed, gamma=-0.5))
            values = [trace.initial_report.c_full] + [r.c_full for r in trace.reports]
            steps = np.diff(values)
            assert steps.min() > -1e-3
            assert values[-1] > values[0]

    def test_single_qubit_identity_task_converges(self):
        arch = arch_from_string("1,1")
        spec = build_graph_spec("line", 4, 4)
        ds = generate_dataset(spec, 1, delta=0.3, seed=2)
        trace = train(arch, ds, TrainingConfig(epochs=400, seed=2, gamma=0.0))
        assert trace.final_report.c_sv > 0.95


class TestModes:
    def test_hybrid_and_numeric_training_agree(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=6)
        cfg_h = TrainingConfig(epochs=10, seed=6, gamma=-0.5, k_mode="hybrid")
        cfg_n = TrainingConfig(epochs=10, seed=6, gamma=-0.5, k_mode="numeric")
        trace_h = train(arch, ds, cfg_h)
        trace_n = train(arch, ds, cfg_n)
        for rh, rn in zip(trace_h.reports, trace_n.reports):
            assert rh.c_full == pytest.approx(rn.c_full, abs=1e-6)
            assert rh.c_sv == pytest.approx(rn.c_sv, abs=1e-6)
            assert rh.c_g == pytest.approx(rn.c_g, abs=1e-6)

    def test_analytic_and_hybrid_identical_at_shallow_depth(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=8)
        trace_a = train(arch, ds, TrainingConfig(epochs=5, seed=8, gamma=-0.5, k_mode="analytic"))
        trace_h = train(arch, ds, TrainingConfig(epochs=5, seed=8, gamma=-0.5, k_mode="hybrid"))
        for la, lh in zip(trace_a.final_unitaries.layers, trace_h.final_unitaries.layers):
            for ua, uh in zip(la, lh):
                assert np.array_equal(ua, uh)

    def test_analytic_mode_rejects_three_hidden_layers(self):
        arch = arch_from_string("2,~3,~3,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=1)
        with pytest.raises(ArchitectureError, match="two hidden"):
            train(arch, ds, TrainingConfig(epochs=1, seed=1, k_mode="analytic"))

    def test_hybrid_mode_accepts_three_hidden_layers(self):
        arch = arch_from_string("2,~3,~3,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=1)
        trace = train(arch, ds, TrainingConfig(epochs=2, seed=1, k_mode="hybrid"))
        assert len(trace.reports) == 2

    def test_zero_gamma_update_ignores_graph_term(self):
        # With gamma = 0 the update direction must be the supervised generator
        # alone, so training must reproduce a manual supervised-only loop bit
        # for bit.
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=13)
        cfg = TrainingConfig(epochs=4, seed=13, gamma=0.0)
        trace = train(arch, ds, cfg)

        uni = init_unitaries(arch, np.random.default_rng([13, 1]))
        for _ in range(4):
            emb = embed_network(arch, uni)
            recs = [
                forward(arch, uni, ds.input_density(v), embedded=emb) for v in range(4)
            ]
            sup = [recs[v] for v in ds.spec.supervised_indices]
            k = supervised_generators(arch, uni, sup, list(ds.supervised_targets), 1.0, emb)
            uni = update_step(uni, k, cfg.epsilon)
        for lt, lm in zip(trace.final_unitaries.layers, uni.layers):
            for ut, um in zip(lt, lm):
                assert np.array_equal(ut, um)


class TestFamilyWrappers:
    def test_one_hidden_wrappers_match_general_engine(self):
        arch, ds, uni, emb, recs = _setup("2,~3,2", 17)
        sup = [recs[v] for v in ds.spec.supervised_indices]
        general_sv = supervised_generators(arch, uni, sup, list(ds.supervised_targets), 1.0, emb)
        wrapped_sv = k_supervised_one_hidden(arch, uni, sup, list(ds.supervised_targets))
        assert _max_generator_diff(general_sv, wrapped_sv) < 1e-12
        general_g = graph_generators(arch, uni, recs, ds.adjacency, 1.0, emb)
        wrapped_g = k_graph_one_hidden(arch, uni, recs, ds.adjacency)
        assert _max_generator_diff(general_g, wrapped_g) < 1e-12

    def test_two_hidden_wrapper_matches_general_engine(self):
        arch, ds, uni, emb, recs = _setup("2,~3,~3,2", 18)
        sup = [recs[v] for v in ds.spec.supervised_indices]
        general = supervised_generators(arch, uni, sup, list(ds.supervised_targets), 1.0, emb)
        wrapped = k_supervised_two_hidden(arch, uni, sup, list(ds.supervised_targets))
        assert _max_generator_diff(general, wrapped) < 1e-12

    def test_wrappers_reject_wrong_depth_or_flags(self):
        arch2, ds2, uni2, emb2, recs2 = _setup("2,~3,~3,2", 19)
        sup2 = [recs2[v] for v in ds2.spec.supervised_indices]
        with pytest.raises(ArchitectureError):
            k_supervised_one_hidden(arch2, uni2, sup2, list(ds2.supervised_targets))
        arch1, ds1, uni1, emb1, recs1 = _setup("2,3,2", 19)
        sup1 = [recs1[v] for v in ds1.spec.supervised_indices]
        with pytest.raises(ArchitectureError, match="residual"):
            k_supervised_one_hidden(arch1, uni1, sup1, list(ds1.supervised_targets))
        with pytest.raises(ArchitectureError):
            k_supervised_two_hidden(arch1, uni1, sup1, list(ds1.supervised_targets))


class TestUpdateStep:
    def test_update_preserves_unitarity(self):
        arch, ds, uni, emb, recs = _setup("2,~3,2", 23)
        k = _analytic_full(arch, ds, uni, emb, recs, gamma=-0.5)
        updated = update_step(uni, k, 0.05)
        for layer in updated.layers:
            for u in layer:
                assert np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() < 1e-10

    def test_zero_generator_leaves_unitaries_unchanged(self):
        arch, _, uni, _, _ = _setup("2,~3,2", 24)
        zeros = UpdateGenerators(
            arch,
            tuple(tuple(np.zeros_like(u) for u in layer) for layer in uni.layers),
        )
        updated = update_step(uni, zeros, 0.01)
        for l_new, l_old in zip(updated.layers, uni.layers):
            for u_new, u_old in zip(l_new, l_old):
                assert np.abs(u_new - u_old).max() < 1e-12

    def test_generator_validation(self):
        arch, ds, uni, emb, recs = _setup("2,~3,2", 25)
        k = _analytic_full(arch, ds, uni, emb, recs, gamma=0.0)
        bad = [[np.array(m) for m in layer] for layer in k.layers]
        bad[0][0] = bad[0][0] + 1j * np.eye(bad[0][0].shape[0])
        with pytest.raises(ValueError, match="Hermiticity"):
            UpdateGenerators(arch, tuple(tuple(l) for l in bad))
        with pytest.raises(ArchitectureError):
            UpdateGenerators(arch, (k.layers[0],))

    def test_final_states_keep_shortcut_trace(self):
        arch = arch_from_string("2,~3,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=26)
        trace = train(arch, ds, TrainingConfig(epochs=15, seed=26, gamma=-0.5))
        emb = embed_network(arch, trace.final_unitaries)
        for v in range(4):
            rec = forward(arch, trace.final_unitaries, ds.input_density(v), embedded=emb)
            assert rec.final.trace() == pytest.approx(2.0**arch.residual_count, abs=1e-9)


class TestTrainingLoop:
    def test_zero_epochs_returns_initial_state(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=30)
        trace = train(arch, ds, TrainingConfig(epochs=0, seed=30))
        assert trace.reports == ()
        assert trace.wall_ms == ()
        assert trace.final_report == trace.initial_report
        baseline = init_unitaries(arch, np.random.default_rng([30, 1]))
        for lt, lb in zip(trace.final_unitaries.layers, baseline.layers):
            for ut, ub in zip(lt, lb):
                assert np.array_equal(ut, ub)

    def test_training_is_deterministic(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 6, 3)
        ds = generate_dataset(spec, 2, delta=0.3, seed=31)
        cfg = TrainingConfig(epochs=12, seed=31, gamma=-0.5)
        t1, t2 = train(arch, ds, cfg), train(arch, ds, cfg)
        assert t1.reports == t2.reports
        assert t1.initial_report == t2.initial_report
        for l1, l2 in zip(t1.final_unitaries.layers, t2.final_unitaries.layers):
            for u1, u2 in zip(l1, l2):
                assert np.array_equal(u1, u2)

    def test_reports_are_post_update_costs(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=32)
        trace = train(arch, ds, TrainingConfig(epochs=3, seed=32, gamma=-0.5))
        emb = embed_network(arch, trace.final_unitaries)
        recs = [
            forward(arch, trace.final_unitaries, ds.input_density(v), embedded=emb)
            for v in range(4)
        ]
        t = arch.residual_count
        c_sv = cost_supervised(
            [recs[v].final for v in ds.spec.supervised_indices],
            list(ds.supervised_targets),
            t,
        )
        assert trace.reports[-1].c_sv == pytest.approx(c_sv, abs=1e-12)
        assert len(trace.wall_ms) == 3
        assert all(w >= 0.0 for w in trace.wall_ms)

    def test_plateau_annotation(self):
        from resqnn.trainer import _plateau_epoch

        moving = [0.1 * i for i in range(40)]
        assert _plateau_epoch(moving) is None
        stalled = [0.5] + [0.5 + 1e-9 * i for i in range(1, 40)]
        assert _plateau_epoch(stalled) == 20
        late = [0.1 * i for i in range(10)] + [0.9 + 1e-9 * i for i in range(30)]
        assert _plateau_epoch(late) == 29

        # A vanishing step size stalls the cost in place, so a real run must
        # carry the annotation; an empty run must not.
        arch = arch_from_string("1,1")
        spec = build_graph_spec("line", 4, 4)
        ds = generate_dataset(spec, 1, delta=0.3, seed=33)
        stalled_trace = train(
            arch, ds, TrainingConfig(epochs=30, seed=33, epsilon=1e-8)
        )
        assert stalled_trace.plateau_epoch == 20
        empty_trace = train(arch, ds, TrainingConfig(epochs=0, seed=33))
        assert empty_trace.plateau_epoch is None

    def test_dataset_architecture_mismatch_rejected(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 3, delta=0.3, seed=1)
        with pytest.raises(Exception, match="qubits"):
            train(arch, ds, TrainingConfig(epochs=1, seed=1))

    def test_config_validation(self):
        with pytest.raises(ValueError, match="epochs"):
            TrainingConfig(epochs=-1)
        with pytest.raises(ValueError, match="eta"):
            TrainingConfig(epochs=1, eta=0.0)
        with pytest.raises(ValueError, match="epsilon"):
            TrainingConfig(epochs=1, epsilon=-0.1)
        with pytest.raises(ValueError, match="gamma"):
            TrainingConfig(epochs=1, gamma=0.5)
        with pytest.raises(ValueError, match="k_mode"):
            TrainingConfig(epochs=1, k_mode="magic")
        with pytest.raises(ValueError, match="finite_diff_step"):
            TrainingConfig(epochs=1, finite_diff_step=1e-9)
        with pytest.raises(ValueError, match="non-positive"):
            k_full(None, None, gamma=0.5)  # gamma checked before operands

    def test_trace_dataclass_shape(self):
        arch = arch_from_string("2,~3,2")
        spec = build_graph_spec("line", 4, 2)
        ds = generate_dataset(spec, 2, delta=0.3, seed=34)
        trace = train(arch, ds, TrainingConfig(epochs=2, seed=34))
        assert isinstance(trace, TrainingTrace)
        assert trace.arch == arch
        assert trace.config.epochs == 2
        assert len(trace.reports) == 2
