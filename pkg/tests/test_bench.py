import numpy as np
import pytest

from qmot.bench import (ERROR_COLUMNS, REVERSE_COLUMNS, BenchmarkSpec, corrupt, gen_benchmark_graph,
                        grouped_error_rate, rows_to_csv, run_error_rate_experiment,
                        run_reverse_experiment)
from qmot.graph import COST, GraphError, Matching, oracle_solve
from qmot.solvers import SolverConfig


class TestGenerator:
    def test_saturated_degree_is_complete(self):
        g = gen_benchmark_graph(4, 4, seed=0)
        assert g.edge_keys == [(u, v) for u in range(4) for v in range(4)]

    @pytest.mark.parametrize("seed", range(5))
    def test_regular(self, seed):
        g = gen_benchmark_graph(8, 4, seed=seed)
        left = np.bincount([u for u, _ in g.edge_keys], minlength=8)
        right = np.bincount([v for _, v in g.edge_keys], minlength=8)
        assert np.all(left == 4) and np.all(right == 4)

    def test_weights_in_range_and_cost_convention(self):
        g = gen_benchmark_graph(6, 4, seed=1)
        assert g.convention == COST
        assert all(-1.0 <= w <= 0.0 for _, _, w in g.edges)

    def test_similarity_range(self):
        g = gen_benchmark_graph(6, 2, weight_range=(0.0, 1.0), seed=1)
        assert g.convention == "similarity"

    def test_deterministic(self):
        assert gen_benchmark_graph(8, 4, seed=7) == gen_benchmark_graph(8, 4, seed=7)
        assert gen_benchmark_graph(8, 4, seed=7) != gen_benchmark_graph(8, 4, seed=8)

    def test_infeasible_degree(self):
        with pytest.raises(GraphError):
            gen_benchmark_graph(3, 4)
        with pytest.raises(GraphError):
            BenchmarkSpec(sizes=(3,))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            BenchmarkSpec(flip_prob=1.5)
        with pytest.raises(ValueError):
            BenchmarkSpec(multiplicities=(0,))


def test_corrupt():
    rng = np.random.default_rng(0)
    x = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    assert np.array_equal(corrupt(x, 0.0, rng), x)
    assert np.array_equal(corrupt(x, 1.0, rng), 1 - x)
    flips = np.mean([corrupt(np.zeros(1000, np.uint8), 0.05, rng).mean() for _ in range(20)])
    assert flips == pytest.approx(0.05, abs=0.01)


def test_grouped_error_rate_groups_consecutive_trials():
    g = gen_benchmark_graph(4, 2, seed=0)
    oracle, _ = oracle_solve(g)
    bad = Matching(frozenset(e for e in g.edge_keys[:1]))
    found = [oracle, bad, bad, bad]
    assert grouped_error_rate(g, oracle, found, 1, "none") == 0.75
    # cyclic merge of (oracle, bad) recovers the oracle weight
    assert grouped_error_rate(g, oracle, found, 2, "cyclic") == 0.5
    with pytest.raises(ValueError):
        grouped_error_rate(g, oracle, found[:1], 2, "cyclic")


SMALL = BenchmarkSpec(sizes=(4,), graphs_per_n=2, trials_per_graph=12, multiplicities=(1, 2, 3))


class TestErrorExperiment:
    def test_rows_and_schema(self):
        rows = run_error_rate_experiment(SMALL, SolverConfig(sweeps=50), "cyclic")
        assert [(r["n"], r["P"]) for r in rows] == [(4, 1), (4, 2), (4, 3)]
        text = rows_to_csv(rows, ERROR_COLUMNS, timing=False)
        assert text.splitlines()[0] == ("n,P,solver,integrator,graphs,trials_per_graph,"
                                        "error_rate,success_prob,tts_sweeps")
        assert len(text.splitlines()) == 4
        for r in rows:
            assert r["success_prob"] == pytest.approx(1 - r["error_rate"])
        assert "tts_seconds" in rows_to_csv(rows, ERROR_COLUMNS).splitlines()[0]

    def test_none_integrator_only_reports_single(self):
        rows = run_error_rate_experiment(SMALL, SolverConfig(sweeps=50), "none")
        assert [r["P"] for r in rows] == [1]

    def test_deterministic(self):
        a = run_error_rate_experiment(SMALL, SolverConfig(sweeps=50), "majority")
        b = run_error_rate_experiment(SMALL, SolverConfig(sweeps=50), "majority")
        assert rows_to_csv(a, ERROR_COLUMNS, False) == rows_to_csv(b, ERROR_COLUMNS, False)

    def test_unknown_integrator(self):
        with pytest.raises(ValueError):
            run_error_rate_experiment(SMALL, SolverConfig(), "borda")


class TestReverseExperiment:
    def _run(self, flip, sizes=(4,), graphs=3, trials=15):
        spec = BenchmarkSpec(sizes=sizes, graphs_per_n=graphs, trials_per_graph=trials,
                             multiplicities=(1,), flip_prob=flip)
        return run_reverse_experiment(spec, SolverConfig(trials=1),
                                      SolverConfig(solver="rsa", trials=1))

    def test_exact_warm_start_never_fails(self):
        rows = self._run(0.0)
        assert rows[0]["ra_error_rate"] == 0.0
        assert rows[0]["ra_sweeps"] == 75 and rows[0]["fa_sweeps"] == 250

    def test_heavy_corruption_degrades(self):
        mild = self._run(0.05, sizes=(6,), graphs=5, trials=20)[0]["ra_error_rate"]
        heavy = self._run(0.5, sizes=(6,), graphs=5, trials=20)[0]["ra_error_rate"]
        assert heavy > mild

    def test_schema(self):
        rows = self._run(0.05)
        header = rows_to_csv(rows, REVERSE_COLUMNS, timing=False).splitlines()[0].split(",")
        assert header == [c for c in REVERSE_COLUMNS if not c.endswith("_seconds")]
