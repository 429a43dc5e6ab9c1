import math

import pytest

from evbreak.copulas import GevParams, GumbelHougaardParams, KhoudrajiParams, NormalParams
from evbreak.errors import ConfigError
from evbreak.harness import (
    CellSpec,
    ExperimentConfig,
    TestSpec,
    dependence_break_cell,
    experiment_from_dict,
    iid_cell,
    load_experiment,
    margin_break_cell,
    resolve_workers,
    run_experiment,
    WORKERS_ENV_VAR,
)

GH2 = GumbelHougaardParams(2.0)


def tiny_config(workers=1, seed=11, cells=None):
    if cells is None:
        cells = (
            iid_cell("null", 40, GH2),
            dependence_break_cell("break", 40, GH2, GumbelHougaardParams(8.0)),
        )
    return ExperimentConfig(
        name="tiny", cells=cells, replications=4, n_boot=50, seed=seed, workers=workers
    )


class TestTestSpec:
    def test_variant_labels(self):
        assert TestSpec().variant == "plain"
        assert TestSpec(thetas=(0.5,)).variant == "theta(0.5)"
        assert TestSpec(k_star=50).variant == "kstar(50)"
        assert TestSpec(thetas=(0.25, 0.5), k_star=10).variant == "theta(0.25,0.5)+kstar(10)"

    def test_prefactor_validation(self):
        with pytest.raises(ConfigError):
            TestSpec(prefactor="bogus")


class TestBuilders:
    def test_iid_cell(self):
        cell = iid_cell("x", 100, GH2)
        assert cell.scenario.n == 100
        assert len(cell.scenario.segments) == 1
        assert cell.scenario.segments[0].copula is GH2

    def test_dependence_break_cell(self):
        cell = dependence_break_cell("x", 100, GH2, GumbelHougaardParams(3.0), break_at=0.25)
        segs = cell.scenario.segments
        assert [s.start for s in segs] == [0.0, 0.25]
        assert segs[1].copula.vartheta == 3.0

    def test_margin_break_cell(self):
        cell = margin_break_cell("x", 200, tau=0.75, delta_mu=15.0)
        segs = cell.scenario.segments
        # tau = 0.75 maps to vartheta = 4; same copula on both sides
        assert segs[0].copula.vartheta == pytest.approx(4.0)
        assert segs[0].copula is segs[1].copula
        assert segs[0].margins[0] == GevParams(20.0, 10.0, 0.25)
        assert segs[1].margins[0] == GevParams(35.0, 10.0, 0.25)
        assert segs[0].margins[1] == NormalParams()


class TestRunExperiment:
    def test_deterministic_rerun(self):
        a = run_experiment(tiny_config())
        b = run_experiment(tiny_config())
        assert a.to_csv() == b.to_csv()

    def test_worker_count_does_not_change_results(self):
        a = run_experiment(tiny_config(workers=1))
        b = run_experiment(tiny_config(workers=2))
        assert a.to_csv() == b.to_csv()

    def test_identical_cells_share_streams(self):
        cells = (iid_cell("a", 40, GH2), iid_cell("b", 40, GH2))
        table = run_experiment(tiny_config(cells=cells))
        assert table.rows[0].rejections == table.rows[1].rejections

    def test_row_summaries(self):
        table = run_experiment(tiny_config())
        assert [r.label for r in table.rows] == ["null", "break"]
        for row in table.rows:
            assert row.replications == 4
            assert 0 <= row.rejections <= 4
            assert row.rate == row.rejections / 4
            assert row.std_error == math.sqrt(row.rate * (1 - row.rate) / 4)
        assert table.wall_time > 0.0

    def test_csv_format(self, tmp_path):
        table = run_experiment(tiny_config())
        text = table.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "label,n,variant,replications,rejections,rate,std_error"
        assert len(lines) == 3
        assert lines[1].startswith("null,40,plain,4,")
        assert "wall" not in text  # timing must not break byte-stability
        out = tmp_path / "results.csv"
        table.to_csv(out)
        assert out.read_text() == text

    def test_pretty_mentions_settings(self):
        table = run_experiment(tiny_config())
        pretty = table.pretty()
        assert "alpha=0.05" in pretty and "B=50" in pretty and "wall time" in pretty

    def test_theta_cell_runs(self):
        cells = (iid_cell("t", 40, GH2, TestSpec(thetas=(0.5,))),)
        table = run_experiment(tiny_config(cells=cells))
        assert table.rows[0].variant == "theta(0.5)"


class TestResolveWorkers:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV_VAR, "7")
        assert resolve_workers(3) == 3

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV_VAR, "5")
        assert resolve_workers(None) == 5

    def test_cpu_count_default(self, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
        assert resolve_workers(None) >= 1

    def test_bad_values(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV_VAR, "many")
        with pytest.raises(ConfigError):
            resolve_workers(None)
        with pytest.raises(ConfigError):
            resolve_workers(0)


class TestConfigValidation:
    def test_experiment_config_errors(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(name="x", cells=(), replications=5)
        with pytest.raises(ConfigError):
            ExperimentConfig(name="x", cells=(iid_cell("a", 10, GH2),), replications=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(name="x", cells=(iid_cell("a", 10, GH2),), replications=1, alpha=1.5)


def valid_cfg():
    return {
        "name": "demo",
        "replications": 3,
        "B": 25,
        "alpha": 0.05,
        "seed": 9,
        "cells": [
            {
                "label": "null tau=.5",
                "n": 50,
                "segments": [{"copula": {"family": "gumbel", "tau": 0.5}}],
            },
            {
                "n": 50,
                "segments": [
                    {"stop": 0.5, "copula": {"family": "gumbel", "vartheta": 1.0}},
                    {
                        "start": 0.5,
                        "copula": {"family": "khoudraji", "vartheta": 4.0, "a": [0.0, 0.3]},
                        "margins": [
                            {"dist": "gev", "mu": 20, "sigma": 10, "gamma": 0.25},
                            {"dist": "normal"},
                        ],
                    },
                ],
                "test": {"thetas": [0.5], "prefactor": "plain"},
            },
        ],
    }


class TestExperimentFromDict:
    def test_happy_path(self):
        config = experiment_from_dict(valid_cfg())
        assert config.name == "demo"
        assert config.replications == 3 and config.n_boot == 25 and config.seed == 9
        assert config.cells[0].label == "null tau=.5"
        assert config.cells[0].scenario.segments[0].copula.vartheta == pytest.approx(2.0)
        cell2 = config.cells[1]
        assert cell2.label == "cells[1]"  # default label from the JSON path
        assert isinstance(cell2.scenario.segments[1].copula, KhoudrajiParams)
        assert cell2.scenario.segments[1].margins[0] == GevParams(20.0, 10.0, 0.25)
        assert cell2.test.thetas == (0.5,) and cell2.test.prefactor == "plain"

    def test_defaults(self):
        cfg = {
            "replications": 2,
            "cells": [{"n": 10, "segments": [{"copula": {"family": "gumbel", "vartheta": 2}}]}],
        }
        config = experiment_from_dict(cfg)
        assert config.n_boot == 1000 and config.alpha == 0.05 and config.seed == 0
        assert config.workers is None

    def test_errors_carry_json_paths(self):
        cfg = valid_cfg()
        cfg["cells"][0]["n"] = 1
        cfg["replications"] = 0
        with pytest.raises(ConfigError) as err:
            experiment_from_dict(cfg)
        message = str(err.value)
        assert "$.cells[0].n" in message
        assert "$.replications" in message

    def test_copula_schema_errors(self):
        cfg = valid_cfg()
        cfg["cells"][0]["segments"][0]["copula"] = {"family": "gumbel", "tau": 0.5, "vartheta": 2}
        with pytest.raises(ConfigError) as err:
            experiment_from_dict(cfg)
        assert "either vartheta or tau" in str(err.value)
        cfg = valid_cfg()
        cfg["cells"][0]["segments"][0]["copula"] = {"family": "clayton", "vartheta": 2}
        with pytest.raises(ConfigError) as err:
            experiment_from_dict(cfg)
        assert "$.cells[0].segments[0].copula.family" in str(err.value)

    def test_bad_theta_rejected_at_parse_time(self):
        cfg = valid_cfg()
        cfg["cells"][1]["test"]["thetas"] = [1.5]
        with pytest.raises(ConfigError) as err:
            experiment_from_dict(cfg)
        assert "$.cells[1].test" in str(err.value)

    def test_bad_k_star_rejected_at_parse_time(self):
        cfg = valid_cfg()
        cfg["cells"][0]["test"] = {"k_star": 50}
        with pytest.raises(ConfigError) as err:
            experiment_from_dict(cfg)
        assert "$.cells[0].test" in str(err.value)

    def test_non_object_top_level(self):
        with pytest.raises(ConfigError):
            experiment_from_dict([1, 2, 3])


class TestLoadExperiment:
    def test_round_trip(self, tmp_path):
        import json

        path = tmp_path / "config.json"
        path.write_text(json.dumps(valid_cfg()))
        config = load_experiment(path)
        assert config.name == "demo"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_experiment(path)
