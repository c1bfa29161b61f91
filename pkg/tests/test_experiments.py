"""Experiment harness: specs, sweeps, emission, and complexity estimates."""

import json

import numpy as np
import pytest

from wpcmaxmin.config import reference_config
from wpcmaxmin.experiments import (
    ExperimentSpec,
    ExperimentTable,
    ResultRow,
    aggregate_rows,
    base_config,
    complexity_report,
    emit_results,
    render_csv,
    render_json,
    run_experiment,
    run_single,
    step3_base,
    step6_base,
    sweep_cell,
)

#: Two-pair, two-subband scenario small enough for run-based harness tests.
TINY = {"n_pairs": 2, "n_subbands": 2, "n_elements": 2, "e_min": 1e-8}


def tiny_spec(**kwargs):
    base = dict(sweep_axis="variant", sweep_values=["full"], seeds=[0],
                mode="relay", config=dict(TINY))
    base.update(kwargs)
    return ExperimentSpec(**base)


# ---------------------------------------------------------------------------
# Spec validation
# ---------------------------------------------------------------------------


class TestSpec:
    def test_dict_round_trip(self):
        spec = tiny_spec(sweep_axis="E_min", sweep_values=[1e-7, 1e-6],
                         seeds=[0, 1], outputs="out", emit="csv")
        again = ExperimentSpec.from_json(json.dumps(spec.as_dict()))
        assert again == spec

    def test_from_dict_requires_sweep_object(self):
        with pytest.raises(ValueError, match="sweep"):
            ExperimentSpec.from_dict({"seeds": [0]})
        with pytest.raises(ValueError, match="sweep"):
            ExperimentSpec.from_dict(
                {"sweep": {"axis": "K", "values": [2], "extra": 1},
                 "seeds": [0]})
        with pytest.raises(ValueError, match="sweep"):
            ExperimentSpec.from_dict({"sweep": {"axis": "K"}, "seeds": [0]})

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="unknown spec fields"):
            ExperimentSpec.from_dict(
                {"sweep": {"axis": "K", "values": [2]}, "seeds": [0],
                 "typo_field": 1})

    def test_axis_must_be_known(self):
        with pytest.raises(ValueError, match="sweep axis"):
            tiny_spec(sweep_axis="bogus")

    def test_needs_values_and_seeds(self):
        with pytest.raises(ValueError, match="value"):
            tiny_spec(sweep_values=[])
        with pytest.raises(ValueError, match="seed"):
            tiny_spec(seeds=[])

    @pytest.mark.parametrize("field,value", [
        ("mode", "wired"),
        ("variant", "bogus"),
        ("profile", "huge"),
        ("emit", "xml"),
    ])
    def test_enum_fields_validated(self, field, value):
        with pytest.raises(ValueError, match=field.replace("_", " ")):
            tiny_spec(**{field: value})

    def test_variant_axis_values_checked(self):
        with pytest.raises(ValueError, match="unknown variant"):
            tiny_spec(sweep_axis="variant", sweep_values=["full", "bogus"])

    def test_seeds_coerced_to_ints(self):
        spec = tiny_spec(seeds=[0.0, 3])
        assert spec.seeds == (0, 3)


# ---------------------------------------------------------------------------
# Sweep-cell and base-config mapping
# ---------------------------------------------------------------------------


class TestSweepCell:
    def test_e_min_axis(self):
        cfg, settings = sweep_cell(tiny_spec(sweep_axis="E_min",
                                             sweep_values=[3e-7]), 3e-7)
        assert np.all(cfg.e_min == 3e-7)
        assert settings.variant == "full"

    def test_dimension_axes(self):
        for axis, attr in [("K", "n_pairs"), ("M", "n_elements"),
                           ("N", "n_subbands")]:
            spec = tiny_spec(sweep_axis=axis, sweep_values=[3])
            cfg, _ = sweep_cell(spec, 3)
            assert getattr(cfg, attr) == 3

    def test_variant_axis_sets_settings_only(self):
        spec = tiny_spec(sweep_axis="variant", sweep_values=["t_static"])
        cfg, settings = sweep_cell(spec, "t_static")
        assert settings.variant == "t_static"
        assert cfg.n_pairs == TINY["n_pairs"]
        assert np.all(cfg.e_min == TINY["e_min"])

    def test_base_config_profiles(self):
        assert base_config(tiny_spec()).n_pairs == TINY["n_pairs"]
        ref = base_config(tiny_spec(profile="reference", config={}))
        assert (ref.n_pairs, ref.n_subbands, ref.n_elements) == (5, 8, 6)
        assert np.all(ref.e_min == 1e-5)


# ---------------------------------------------------------------------------
# Single runs and aggregation
# ---------------------------------------------------------------------------


class TestRunSingle:
    def test_feasible_run_fields(self):
        cfg = base_config(tiny_spec())
        fields, trace = run_single(cfg, seed=0)
        assert fields["status"] == "converged"
        assert fields["min_rate"] > 0
        assert 0 <= fields["tau"] < cfg.block_length
        assert len(fields["energy"]) == cfg.n_pairs
        assert all(e >= cfg.e_min[k] * (1 - 1e-9)
                   for k, e in enumerate(fields["energy"]))
        assert fields["iters"] == trace.outer_iterations >= 1
        assert fields["ms"] > 0

    def test_infeasible_run_keeps_status(self):
        cfg = base_config(tiny_spec(config={**TINY, "e_min": 1e3}))
        fields, _ = run_single(cfg, seed=0)
        assert fields["status"] == "infeasible"
        assert fields["min_rate"] is None
        assert fields["tau"] is None
        assert fields["energy"] == []
        assert fields["ms"] > 0


class TestAggregates:
    @staticmethod
    def rows():
        return [
            ResultRow(sweep="a", seed=0, status="converged", min_rate=1.0),
            ResultRow(sweep="a", seed=1, status="max-outer", min_rate=3.0),
            ResultRow(sweep="a", seed=2, status="infeasible"),
            ResultRow(sweep="b", seed=0, status="infeasible"),
        ]

    def test_feasible_rows_only_with_counts(self):
        spec = ExperimentSpec(sweep_axis="E_min", sweep_values=["a", "b"],
                              seeds=[0], mode="relay")
        agg_a, agg_b = aggregate_rows(spec, self.rows())
        assert (agg_a["count"], agg_a["feasible"]) == (3, 2)
        assert agg_a["mean_min_rate"] == pytest.approx(2.0)
        assert agg_a["stderr_min_rate"] == pytest.approx(1.0)
        assert (agg_b["count"], agg_b["feasible"]) == (1, 0)
        assert agg_b["mean_min_rate"] is None
        assert agg_b["stderr_min_rate"] is None

    def test_single_feasible_row_has_zero_stderr(self):
        spec = ExperimentSpec(sweep_axis="E_min", sweep_values=["a"],
                              seeds=[0], mode="relay")
        rows = [ResultRow(sweep="a", seed=0, status="converged",
                          min_rate=2.5)]
        (agg,) = aggregate_rows(spec, rows)
        assert agg["mean_min_rate"] == 2.5
        assert agg["stderr_min_rate"] == 0.0


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def one_row_table(**row_kwargs):
    fields = dict(sweep=2, seed=7, status="converged", min_rate=1.5,
                  tau=0.25, energy=[1e-06], iters=3, ms=12.3456)
    fields.update(row_kwargs)
    spec = ExperimentSpec(sweep_axis="K", sweep_values=[fields["sweep"]],
                          seeds=[fields["seed"]], mode="relay")
    rows = [ResultRow(**fields)]
    return ExperimentTable(spec=spec, rows=rows,
                           aggregates=aggregate_rows(spec, rows))


class TestCsv:
    def test_empty_table_raises(self):
        table = ExperimentTable(spec=tiny_spec(), rows=[], aggregates=[])
        with pytest.raises(ValueError, match="empty"):
            render_csv(table)
        with pytest.raises(ValueError, match="empty"):
            render_json(table)

    def test_one_row_exact(self):
        assert render_csv(one_row_table()) == (
            "sweep,seed,min_rate,tau,energy_k0,iters,ms\n"
            "2,7,1.5,0.25,1e-06,3,12.346\n")

    def test_infeasible_row_keeps_identity_with_empty_cells(self):
        table = one_row_table(status="infeasible", min_rate=None, tau=None,
                              energy=[], iters=5, ms=2.0)
        assert render_csv(table) == (
            "sweep,seed,min_rate,tau,iters,ms\n"
            "2,7,,,5,2.000\n")

    def test_energy_width_padded_to_widest_row(self):
        spec = ExperimentSpec(sweep_axis="K", sweep_values=[2, 3],
                              seeds=[0], mode="relay")
        rows = [
            ResultRow(sweep=2, seed=0, status="converged", min_rate=1.0,
                      tau=0.5, energy=[1.0, 2.0], iters=1, ms=1.0),
            ResultRow(sweep=3, seed=0, status="infeasible"),
        ]
        table = ExperimentTable(spec=spec, rows=rows,
                                aggregates=aggregate_rows(spec, rows))
        lines = render_csv(table).splitlines()
        assert lines[0] == "sweep,seed,min_rate,tau,energy_k0,energy_k1,iters,ms"
        assert lines[1] == "2,0,1.0,0.5,1.0,2.0,1,1.000"
        assert lines[2] == "3,0,,,,,0,0.000"


class TestJson:
    def test_mirror_carries_spec_rows_and_aggregates(self):
        table = one_row_table()
        data = json.loads(render_json(table))
        assert set(data) == {"spec", "rows", "aggregates"}
        assert data["spec"] == table.spec.as_dict()
        (row,) = data["rows"]
        assert row["status"] == "converged"
        assert row["energy"] == [1e-06]
        (agg,) = data["aggregates"]
        assert agg["feasible"] == 1

    def test_infeasible_status_survives(self):
        table = one_row_table(status="infeasible", min_rate=None, tau=None,
                              energy=[], iters=5)
        (row,) = json.loads(render_json(table))["rows"]
        assert row["status"] == "infeasible"
        assert row["min_rate"] is None


def strip_ms_csv(text):
    return "\n".join(line.rsplit(",", 1)[0] for line in text.splitlines())


def strip_ms_json(obj):
    if isinstance(obj, dict):
        return {k: strip_ms_json(v) for k, v in obj.items() if k != "ms"}
    if isinstance(obj, list):
        return [strip_ms_json(v) for v in obj]
    return obj


class TestDeterminism:
    def test_rerun_reproduces_every_modeled_field(self):
        # wall time is a measurement and the single field allowed to differ
        spec = tiny_spec(sweep_axis="E_min", sweep_values=[1e-8],
                         seeds=[0, 1])
        first = run_experiment(spec)
        second = run_experiment(spec)
        assert strip_ms_csv(render_csv(first)) == \
            strip_ms_csv(render_csv(second))
        assert strip_ms_json(json.loads(render_json(first))) == \
            strip_ms_json(json.loads(render_json(second)))


class TestEmission:
    def test_writes_both_formats(self, tmp_path):
        table = one_row_table()
        paths = emit_results(table, out_dir=tmp_path / "nested" / "out")
        assert sorted(paths) == ["csv", "json"]
        with open(paths["csv"]) as fh:
            assert fh.read() == render_csv(table)
        with open(paths["json"]) as fh:
            assert fh.read() == render_json(table)

    def test_csv_only(self, tmp_path):
        paths = emit_results(one_row_table(), out_dir=tmp_path, emit="csv")
        assert sorted(paths) == ["csv"]

    def test_spec_outputs_is_the_default_target(self, tmp_path):
        base = one_row_table()
        spec = ExperimentSpec(sweep_axis="K", sweep_values=[2], seeds=[7],
                              mode="relay", outputs=str(tmp_path))
        table = ExperimentTable(spec=spec, rows=base.rows,
                                aggregates=base.aggregates)
        paths = emit_results(table)
        assert all(p.startswith(str(tmp_path)) for p in paths.values())

    def test_no_target_raises(self):
        with pytest.raises(ValueError, match="output directory"):
            emit_results(one_row_table())

    def test_write_failure_names_the_target(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("")
        with pytest.raises(OSError, match="blocked"):
            emit_results(one_row_table(), out_dir=blocker)

    def test_bad_emit_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="emit"):
            emit_results(one_row_table(), out_dir=tmp_path, emit="xml")


# ---------------------------------------------------------------------------
# Complexity estimates
# ---------------------------------------------------------------------------


class TestComplexity:
    def test_relay_front_end_bases(self):
        ref = reference_config("relay")
        # 2 N M^2 (1+2N) (1+K) = 2*8*36*17*6
        assert step3_base(ref, "full") == 58_752
        assert step3_base(ref, "baseline1") == 58_752
        # N M^2 (1+N) (1+2K) = 8*36*9*11
        assert step3_base(ref, "t_static") == 28_512
        # 2 M^2 (1+2K) = 2*36*11
        assert step3_base(ref, "t_f_static") == 792
        with pytest.raises(ValueError, match="front-end"):
            step3_base(ref, "baseline2")

    def test_surface_front_end_bases(self):
        ref = reference_config("irs")
        # 6 M (N+K+1) = 6*20*14
        assert step3_base(ref, "full") == 1_680
        # 2 M (N+2K+1) = 2*20*19
        assert step3_base(ref, "t_static") == 760
        with pytest.raises(ValueError, match="front-end"):
            step3_base(ref, "t_f_static")

    def test_transmit_stage_base(self):
        # K N (1+2N) (5+2K) = 5*8*17*15
        assert step6_base(reference_config("relay")) == 10_200
        assert step6_base(base_config(tiny_spec())) == 2 * 2 * 5 * 9

    def test_report_instantiates_the_scenario(self):
        text = complexity_report(reference_config("relay"))
        assert "base = 58,752" in text
        assert "base = 10,200" in text
        assert "O(N^3) = O(512)" in text
        assert "variant full" in text

    def test_report_closed_form_variant(self):
        text = complexity_report(base_config(tiny_spec()), "baseline2")
        assert "closed form" in text

    def test_report_measured_lines(self):
        text = complexity_report(base_config(tiny_spec()), "full",
                                 measured={"total_ms": 12.5, "rounds": 3})
        assert "total_ms = 12.500" in text
        assert "rounds = 3" in text
