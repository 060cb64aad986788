import json
import math
import os
import xml.etree.ElementTree as ET

import pandas as pd
import pytest

from main import main
from src.errors import ConfigurationError, NumericalError
from src.reports.experiment_runner import (
    DEFAULT_CONFIG,
    build_config,
    cmd_chaoticity_scan,
    cmd_laplace_table,
    cmd_sample,
    cmd_simulate,
    cmd_validate,
    cmd_wasserstein_report,
    load_config,
)
from src.reports.plots import fitted_slope

INCREASING_MODEL = {'kind': 'piecewise', 'nodes': [[0.0, -1.0], [1.0, 1.0]], 'sigma2': 2.0}


def write_config(directory, payload) -> str:
    path = os.path.join(str(directory), 'config.json')
    with open(path, 'w') as f:
        json.dump(payload, f)
    return path


def run_cli(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for variable in ('RANKLAB_SEED', 'RANKLAB_OUT_DIR', 'RANKLAB_WORKERS'):
        monkeypatch.delenv(variable, raising=False)
    return tmp_path


class TestConfiguration:

    def test_defaults(self, tmp_path):
        config = build_config({'output_dir': str(tmp_path)})
        assert config.seed == DEFAULT_CONFIG['seed']
        assert config.model.kind == 'linear'
        assert len(config.config_hash) == 16

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigurationError, match="config: unknown keys"):
            build_config({'colour': 'red'})

    def test_unknown_nested_key_names_block(self):
        with pytest.raises(ConfigurationError) as info:
            build_config({'laplace': {'ladder': [2]}})
        assert info.value.location == 'laplace'

    @pytest.mark.parametrize("block,key,value", [
        ('sample', 'count', 0),
        ('laplace', 'n_ladder', [10, 2]),
        ('laplace', 'grid', [[0.1]]),
        ('wasserstein', 'q_list', [0.5]),
        ('simulate', 'h', -1.0),
    ])
    def test_invalid_values_are_located(self, block, key, value):
        with pytest.raises(ConfigurationError) as info:
            build_config({block: {key: value}})
        assert info.value.location == f"{block}.{key}"

    def test_overrides_win(self, tmp_path):
        config = build_config({'seed': 1}, {'seed': 5, 'output_dir': str(tmp_path), 'strict': None})
        assert config.seed == 5
        assert config.strict is False

    def test_hash_ignores_output_location(self, tmp_path):
        first = build_config({'output_dir': str(tmp_path / 'a')})
        second = build_config({'output_dir': str(tmp_path / 'b'), 'workers': 3})
        assert first.config_hash == second.config_hash
        assert build_config({'seed': 1}).config_hash != first.config_hash

    def test_environment_then_flags(self, workdir, monkeypatch):
        path = write_config(workdir, {'seed': 1})
        monkeypatch.setenv('RANKLAB_SEED', '7')
        assert load_config(path).seed == 7
        assert load_config(path, {'seed': 9}).seed == 9

    def test_unparseable_environment(self, workdir, monkeypatch):
        path = write_config(workdir, {})
        monkeypatch.setenv('RANKLAB_WORKERS', 'many')
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_missing_file(self, workdir):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(str(workdir / 'absent.json'))


class TestCommandLine:

    def test_validate_linear(self, workdir, capsys):
        path = write_config(workdir, {'model': {'kind': 'linear', 'c': 2.0, 'sigma2': 2.0}})
        assert run_cli(['validate', '--config', path]) == 0
        assert "Assumption (E) holds" in capsys.readouterr().out
        assert os.path.exists(workdir / 'logs' / 'ranklab.log')

    def test_validate_increasing_drift(self, workdir, capsys):
        path = write_config(workdir, {'model': INCREASING_MODEL})
        assert run_cli(['validate', '--config', path]) == 2
        assert "b not decreasing" in capsys.readouterr().out

    def test_commands_validate_first(self, workdir):
        path = write_config(workdir, {'model': INCREASING_MODEL})
        assert run_cli(['laplace-table', '--config', path]) == 2
        assert not os.path.exists(workdir / 'reports' / 'laplace_table.csv')

    def test_malformed_json(self, workdir, capsys):
        path = workdir / 'config.json'
        path.write_text('{"seed": 1,,}')
        assert run_cli(['validate', '--config', str(path)]) == 2
        error = capsys.readouterr().err
        assert "malformed JSON at line 1" in error
        assert str(path) in error

    @pytest.mark.parametrize("nodes", [[[0, "a"], [1, -1]], [[0, 1], [1]]])
    def test_non_numeric_nodes(self, workdir, capsys, nodes):
        path = write_config(workdir, {'model': {'kind': 'piecewise', 'nodes': nodes, 'sigma2': 2.0}})
        assert run_cli(['validate', '--config', path]) == 2
        assert "model.nodes" in capsys.readouterr().err

    def test_boolean_sigma2(self, workdir):
        path = write_config(workdir, {'model': {'kind': 'linear', 'sigma2': True}})
        assert run_cli(['validate', '--config', path]) == 2

    def test_zero_draws(self, workdir):
        path = write_config(workdir, {'sample': {'count': 0}})
        assert run_cli(['sample', '--config', path]) == 2

    def test_single_draw(self, workdir):
        path = write_config(workdir, {'sample': {'n': 3, 'count': 1, 'draws': 'both'}})
        assert run_cli(['sample', '--config', path]) == 0
        assert os.path.exists(workdir / 'reports' / 'finite_samples.csv')

    def test_strict_rejects_points_outside_domain(self, workdir):
        path = write_config(workdir, {'laplace': {'n_ladder': [2], 'grid': [[0.6, 0.5]]}})
        assert run_cli(['laplace-table', '--config', path, '--strict']) == 3

    def test_out_flag(self, workdir):
        path = write_config(workdir, {'laplace': {'n_ladder': [2, 10], 'grid': [[0.3, -0.2]]}})
        assert run_cli(['laplace-table', '--config', path, '--out', 'elsewhere']) == 0
        assert os.path.exists(workdir / 'elsewhere' / 'laplace_table.csv')
        assert os.path.exists(workdir / 'elsewhere' / 'laplace-table_metadata.json')


class TestLaplaceReports:

    def config(self, tmp_path, **laplace):
        return build_config({'output_dir': str(tmp_path), 'laplace': laplace})

    def test_two_particle_table(self, tmp_path):
        config = self.config(tmp_path, n_ladder=[2], grid=[[0.3, -0.2], [0, 0]])
        result = cmd_laplace_table(config)
        assert result.exit_code == 0
        table = pd.read_csv(tmp_path / 'laplace_table.csv')
        first = table.iloc[0]
        assert first['L2n'] == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert first['status'] == 'ok'
        origin = table.iloc[1]
        for column in ('L2n', 'L1n_s', 'L1n_t', 'Linf_s', 'Linf_t'):
            assert origin[column] == 1.0
        assert origin['abs_error'] == 0.0
        assert set(table['config_hash']) == {config.config_hash}

    def test_outside_domain_is_tagged(self, tmp_path):
        cmd_laplace_table(self.config(tmp_path, n_ladder=[2, 10], grid=[[0.6, 0.5]]))
        table = pd.read_csv(tmp_path / 'laplace_table.csv')
        assert set(table['status']) <= {'outside-V2', 'infeasible'}
        assert table['L2n'].isna().all()

    def test_rank_resolved(self, tmp_path):
        cmd_laplace_table(self.config(tmp_path, n_ladder=[2, 5], grid=[[0.3, -0.2]], rank_resolved=True))
        table = pd.read_csv(tmp_path / 'laplace_rank_resolved.csv')
        two = table[(table['n'] == 2) & (table['t'] == 0.3)]
        assert list(two['I']) == pytest.approx([1.0 / 1.3, 1.0 / 0.7], rel=1e-14)

    def test_workers_do_not_change_tables(self, tmp_path):
        grid = [[0.3, -0.2], [0.2, 0.2]]
        serial = build_config({'output_dir': str(tmp_path / 'serial'),
                               'laplace': {'n_ladder': [2, 10, 100], 'grid': grid}})
        pooled = build_config({'output_dir': str(tmp_path / 'pooled'), 'workers': 2,
                               'laplace': {'n_ladder': [2, 10, 100], 'grid': grid}})
        cmd_laplace_table(serial)
        cmd_laplace_table(pooled)
        assert ((tmp_path / 'serial' / 'laplace_table.csv').read_bytes()
                == (tmp_path / 'pooled' / 'laplace_table.csv').read_bytes())

    def test_scan_figure_and_moments(self, tmp_path):
        config = build_config({'output_dir': str(tmp_path),
                               'laplace': {'n_ladder': [2, 10, 100, 1000], 'grid': [[0.3, -0.2], [0.2, 0.2]]},
                               'moments': {'rho': 0.5, 'n_ladder': [10, 100]}})
        result = cmd_chaoticity_scan(config)
        assert result.exit_code == 0

        root = ET.parse(tmp_path / 'chaoticity_scan.svg').getroot()
        ids = {element.get('id') for element in root.iter()}
        assert {'series-0', 'series-1'} <= ids

        slopes = pd.read_csv(tmp_path / 'chaoticity_slopes.csv')
        assert (slopes['fitted_slope'] < 0).all()
        bound = pd.read_csv(tmp_path / 'moment_bound.csv')
        assert (bound['ratio'] <= 1.05).all()

    def test_figures_repeat_byte_for_byte(self, tmp_path):
        for name in ('a', 'b'):
            cmd_chaoticity_scan(build_config({'output_dir': str(tmp_path / name),
                                              'laplace': {'n_ladder': [2, 10], 'grid': [[0.3, -0.2]]},
                                              'moments': {'n_ladder': [10]}}))
        assert ((tmp_path / 'a' / 'chaoticity_scan.svg').read_bytes()
                == (tmp_path / 'b' / 'chaoticity_scan.svg').read_bytes())

    def test_fitted_slope(self):
        assert fitted_slope([10, 100, 1000], [1e-1, 1e-2, 1e-3]) == pytest.approx(-1.0)
        assert math.isnan(fitted_slope([10], [0.1]))


class TestSamplingReports:

    def config(self, directory, **sample):
        return build_config({'output_dir': str(directory), 'seed': 11,
                             'sample': dict({'n': 2, 'count': 20000}, **sample)})

    def test_fixed_seed_repeats(self, tmp_path):
        cmd_sample(self.config(tmp_path / 'a'))
        cmd_sample(self.config(tmp_path / 'b'))
        for name in ('finite_samples.csv', 'sample_gate.csv'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_dump_header_and_gate(self, tmp_path):
        result = cmd_sample(self.config(tmp_path, draws='both', count=5000))
        assert result.exit_code == 0
        with open(tmp_path / 'finite_samples.csv') as f:
            header = [line for line in f if line.startswith('#')]
        assert any(line.startswith('# sampler: finite-exponential-gaps') for line in header)
        draws = pd.read_csv(tmp_path / 'finite_samples.csv', comment='#')
        assert list(draws.columns) == ['z_1', 'z_2']
        assert (draws.sum(axis=1).abs() <= 1e-12 * draws.abs().max(axis=1).clip(lower=1.0)).all()
        assert len(pd.read_csv(tmp_path / 'nonlinear_samples.csv', comment='#')) == 5000
        gate = pd.read_csv(tmp_path / 'sample_gate.csv')
        assert list(gate['t']) == [0.3, -0.25]

    def test_distances_grow_with_order(self, tmp_path):
        config = build_config({'output_dir': str(tmp_path),
                               'wasserstein': {'n_ladder': [2, 10], 'count': 2000, 'q_list': [1, 2],
                                               'bootstrap': 3, 'joint_k2': True, 'joint_count': 64}})
        assert cmd_wasserstein_report(config).exit_code == 0
        table = pd.read_csv(tmp_path / 'wasserstein.csv')
        for _, block in table[table['k'] == 1].groupby('n'):
            ordered = block.sort_values('q')['distance'].to_numpy()
            assert ordered[1] >= ordered[0]
        assert set(table['k']) == {1, 2}
        assert (table['band_lower'] <= table['distance']).all()
        ET.parse(tmp_path / 'wasserstein.svg')


class TestSimulationReport:

    def config(self, tmp_path, **simulate):
        settings = dict({'n': 3, 'h': 0.01, 'horizon': 40.0, 't_grid': [-0.25, 0.25], 'ess_floor': 0.0,
                         'batches': 10}, **simulate)
        return build_config({'output_dir': str(tmp_path), 'seed': 3, 'simulate': settings})

    def test_rows_and_dump(self, tmp_path):
        result = cmd_simulate(self.config(tmp_path, dump_states=True, check_halving=True))
        assert result.exit_code == 0
        table = pd.read_csv(tmp_path / 'simulate.csv')
        assert list(table['t']) == [-0.25, 0.25]
        assert {'estimate', 'standard_error', 'L1n', 'z_score', 'ess', 'shift'} <= set(table.columns)
        states = pd.read_csv(tmp_path / 'simulated_states.csv', comment='#')
        assert list(states.columns) == ['t', 'z_1', 'z_2', 'z_3']
        assert (states['t'].diff().dropna() > 0).all()

    def test_effective_sample_size_floor(self, tmp_path):
        with pytest.raises(NumericalError, match="effective sample size"):
            cmd_simulate(self.config(tmp_path, ess_floor=1e9))

    def test_validate_command_result(self, tmp_path):
        result = cmd_validate(build_config({'output_dir': str(tmp_path), 'model': INCREASING_MODEL}))
        assert result.exit_code == 2
        assert "b not decreasing" in result.summary
