import hashlib
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, TestCase, override_settings

from uagc.apps.core import services
from uagc.apps.core.manifest import manifest_path
from uagc.apps.core.models import PipelineRun
from uagc.forecasting.activity import DEFAULT_LABELS
from uagc.forecasting.exceptions import InputFormatError
from uagc.forecasting.graphbuild import SensorAdjacency, read_sparse
from uagc.forecasting.networks import ModelConfig, build_model, save_model
from uagc.forecasting.training import TrafficSeries, load_traffic_csv, write_traffic_csv

from .helpers import TemporaryDirectoryMixin

RING_SENSORS = 4
RING_DAYS = 2
SMALL_MODEL = {
    'hidden_dim': 4,
    'history': 12,
    'horizon': 12,
    'max_epochs': 1,
    'batch_size': 64,
    'no_wall_time': True,
}


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_manifest(output) -> dict:
    return json.loads(manifest_path(output).read_text(encoding='utf-8'))


class ServiceDefaultsTests(SimpleTestCase):
    def test_defaults_follow_settings(self):
        with override_settings(UAGC_SEED=9, UAGC_SIGMA_MILES=3.5):
            defaults = services.defaults()
        self.assertEqual(defaults['seed'], 9)
        self.assertEqual(defaults['sigma_miles'], 3.5)
        self.assertEqual(defaults['days'], 28)
        self.assertEqual(defaults['window1'], '06:35-08:20')

    def test_resolve_ignores_none(self):
        resolved = services.resolve({'seed': None, 'reps': 2})
        self.assertEqual(resolved['seed'], services.defaults()['seed'])
        self.assertEqual(resolved['reps'], 2)

    def test_parse_window(self):
        self.assertEqual(services.parse_window('06:35-08:20', 115), (395, 500))
        for text in ('06:35', '06:33-08:20', '08:20-06:35', '06:35-09:00', '25:00-25:05'):
            with self.subTest(text=text), self.assertRaises(InputFormatError):
                services.parse_window(text, 115)


class PipelineServiceTests(TestCase):
    """Pipeline completo no anel sintético, da geração dos dados à simulação."""

    @classmethod
    def setUpTestData(cls):
        cls.tmp = Path(tempfile.mkdtemp(prefix='uagc-pipeline-'))
        cls.addClassCleanup(shutil.rmtree, cls.tmp, ignore_errors=True)
        data = cls.tmp / 'data'
        cls.data = data

        cls.synth = services.synth_data({'out': data, 'sensors_count': RING_SENSORS, 'days': RING_DAYS, 'seed': 5})
        road = {'nodes': data / 'nodes.csv', 'edges': data / 'edges.csv', 'sensors': data / 'sensors.csv'}
        cls.road = road
        cls.graph = services.build_graph({**road, 'out_dir': cls.tmp / 'graph', 'seed': 5, 'reps': 2})
        cls.activity = services.build_activity({'input': data / 'survey.csv', 'out': cls.tmp / 'activity.csv'})
        cls.train = services.train({
            'traffic': data / 'traffic.csv',
            'sensors': data / 'sensors.csv',
            'adjacency': cls.tmp / 'graph' / 'A.sparse',
            'activity': cls.tmp / 'activity.csv',
            'out': cls.tmp / 'gcrn.ckpt',
            'arch': 'GCRN',
            'embedding': 'AE',
            'seed': 5,
            **SMALL_MODEL,
        })

    def trained(self, **overrides) -> dict:
        options = {
            'checkpoint': self.tmp / 'gcrn.ckpt',
            'adjacency': self.tmp / 'graph' / 'A.sparse',
            'activity': self.tmp / 'activity.csv',
        }
        options.update(overrides)
        return options

    def test_every_stage_succeeded(self):
        for result in (self.synth, self.graph, self.activity, self.train):
            with self.subTest(command=result.get('command')):
                self.assertTrue(result['success'], result.get('error'))
        self.assertEqual(
            PipelineRun.objects.filter(status='ok').count(),
            4,
        )

    def test_synthetic_files(self):
        for name in ('nodes.csv', 'edges.csv', 'sensors.csv', 'traffic.csv', 'survey.csv', 'pulses.csv'):
            self.assertTrue((self.data / name).exists(), name)
        series = load_traffic_csv(self.data / 'traffic.csv', zero_is_missing=False)
        self.assertEqual(series.n_steps, RING_DAYS * 288)
        self.assertEqual(series.sensor_ids, tuple(f"s{i}" for i in range(RING_SENSORS)))

    def test_synthetic_data_is_byte_identical(self):
        again = services.synth_data({'out': self.tmp / 'again', 'sensors_count': RING_SENSORS, 'days': RING_DAYS, 'seed': 5})
        self.assertTrue(again['success'])
        for name in ('traffic.csv', 'survey.csv', 'pulses.csv', 'edges.csv'):
            self.assertEqual((self.tmp / 'again' / name).read_bytes(), (self.data / name).read_bytes(), name)

    def test_graph_outputs(self):
        out_dir = self.tmp / 'graph'
        for name in ('A_dist.sparse', 'A_cooc.sparse', 'A.sparse', 'A_legacy.sparse', 'paths.txt'):
            self.assertTrue((out_dir / name).exists(), name)
        with open(out_dir / 'A.sparse', encoding='utf-8') as stream:
            adjacency = SensorAdjacency.from_matrix(read_sparse(stream))
        with open(out_dir / 'A_dist.sparse', encoding='utf-8') as stream:
            a_dist = read_sparse(stream).toarray()
        self.assertEqual(adjacency.n_sensors, RING_SENSORS)
        np.testing.assert_array_equal(np.diag(a_dist), 1.0)
        self.assertFalse(((adjacency.a.toarray() != 0) & (a_dist == 0)).any())

        diagnostics = self.graph['diagnostics']
        self.assertEqual(diagnostics['n_sensors'], RING_SENSORS)
        self.assertEqual(diagnostics['nnz'], adjacency.nnz)
        self.assertGreater(diagnostics['paths'], 0)

    def test_graph_manifest_digests(self):
        manifest = read_manifest(self.tmp / 'graph' / 'A.sparse')
        self.assertEqual(manifest['command'], 'build-graph')
        self.assertEqual(manifest['seed'], 5)
        self.assertEqual(manifest['version'], 1)
        for name in ('nodes', 'edges', 'sensors'):
            self.assertEqual(manifest['inputs'][name], sha256(self.road[name]))
        self.assertNotIn('osm', manifest['inputs'])
        self.assertEqual(manifest['flags']['reps'], 2)
        self.assertEqual(manifest['flags']['sigma_miles'], 5.0)

        run = PipelineRun.objects.get(command='build-graph')
        self.assertTrue(run.succeeded)
        self.assertEqual(run.manifest, manifest)

    def test_existing_path_file_is_reused(self):
        result = services.build_graph({
            **self.road,
            'paths': self.tmp / 'graph' / 'paths.txt',
            'out_dir': self.tmp / 'graph-reused',
            'seed': 5,
            'reps': 2,
        })
        self.assertTrue(result['success'], result.get('error'))
        self.assertEqual(result['diagnostics']['paths'], self.graph['diagnostics']['paths'])
        self.assertEqual(
            (self.tmp / 'graph-reused' / 'A.sparse').read_bytes(),
            (self.tmp / 'graph' / 'A.sparse').read_bytes(),
        )
        self.assertFalse((self.tmp / 'graph-reused' / 'paths.txt').exists())

    def test_gen_paths_matches_build_graph(self):
        result = services.gen_paths({**self.road, 'out': self.tmp / 'paths.txt', 'seed': 5, 'reps': 2})
        self.assertTrue(result['success'], result.get('error'))
        self.assertEqual(
            (self.tmp / 'paths.txt').read_bytes(),
            (self.tmp / 'graph' / 'paths.txt').read_bytes(),
        )
        self.assertTrue(manifest_path(self.tmp / 'paths.txt').exists())

    def test_training_outputs(self):
        log_lines = Path(self.train['log']).read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(log_lines), 1)
        record = json.loads(log_lines[0])
        self.assertEqual(record['epoch'], 1)
        self.assertEqual(record['seconds'], 0.0)
        self.assertEqual(self.train['diagnostics']['best_epoch'], 1)
        manifest = read_manifest(self.tmp / 'gcrn.ckpt')
        self.assertEqual(manifest['inputs']['traffic'], sha256(self.data / 'traffic.csv'))
        self.assertEqual(manifest['inputs']['activity'], sha256(self.tmp / 'activity.csv'))
        self.assertEqual(manifest['flags']['arch'], 'GCRN')

    def test_eval_report(self):
        out = self.tmp / 'report.csv'
        result = services.evaluate(self.trained(traffic=self.data / 'traffic.csv', out=out, baseline='last-repeat'))
        self.assertTrue(result['success'], result.get('error'))

        lines = out.read_text(encoding='utf-8').splitlines()
        self.assertTrue(lines[0].startswith('# uagc-report v1 split=test'))
        self.assertIn('loss=masked_mae_standardized', lines[0])
        self.assertEqual(lines[1], 'model,horizon_step,mae,rmse,mape_percent')
        frame = pd.read_csv(out, comment='#')
        self.assertEqual(list(frame['model']), ['GCRN'] * 3 + ['last-repeat'] * 3)
        self.assertEqual(list(frame['horizon_step']), [3, 6, 12, 3, 6, 12])
        self.assertTrue(np.isfinite(frame[['mae', 'rmse', 'mape_percent']].to_numpy()).all())
        self.assertTrue((frame['rmse'] >= frame['mae']).all())

    def test_eval_rejects_unknown_split(self):
        result = services.evaluate(self.trained(traffic=self.data / 'traffic.csv', out=self.tmp / 'r.csv', split='holdout'))
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_INPUT')
        self.assertEqual(result['stage'], 'evaluate')

    def test_predict_writes_next_horizon(self):
        series = load_traffic_csv(self.data / 'traffic.csv')
        start = series.timestamps[400]
        out = self.tmp / 'predictions.csv'
        result = services.predict(self.trained(traffic=self.data / 'traffic.csv', start=start.isoformat(), out=out))
        self.assertTrue(result['success'], result.get('error'))

        prediction = load_traffic_csv(out)
        self.assertEqual(prediction.n_steps, 12)
        self.assertEqual(prediction.sensor_ids, series.sensor_ids)
        self.assertEqual(prediction.timestamps[0], series.timestamps[412])
        self.assertTrue(np.isfinite(prediction.values).all())

    def test_predict_rejects_unknown_start(self):
        result = services.predict(self.trained(
            traffic=self.data / 'traffic.csv', start='1999-01-01T00:00:00', out=self.tmp / 'p.csv'
        ))
        self.assertFalse(result['success'])
        self.assertEqual(result['stage'], 'predict')
        self.assertEqual(result['exit_code'], 3)

    def test_simulate_columns(self):
        out = self.tmp / 'simulation.csv'
        result = services.simulate(self.trained(out=out))
        self.assertTrue(result['success'], result.get('error'))
        frame = pd.read_csv(out)
        self.assertEqual(list(frame.columns), ['sensor_id', 'scenario_1_mph', 'scenario_2_mph', 'delta_mph'])
        self.assertEqual(list(frame['sensor_id']), [f"s{i}" for i in range(RING_SENSORS)])
        np.testing.assert_array_equal(frame['delta_mph'], frame['scenario_1_mph'] - frame['scenario_2_mph'])
        self.assertEqual(result['diagnostics']['max_abs_delta_mph'], float(frame['delta_mph'].abs().max()))

    def test_simulate_window_outside_context(self):
        result = services.simulate(self.trained(out=self.tmp / 's.csv', window1='07:00-09:30'))
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_INPUT')
        self.assertEqual(result['stage'], 'simulate')

    def test_zero_parameter_model_has_no_activity_response(self):
        adjacency_path = self.tmp / 'graph' / 'A.sparse'
        with open(adjacency_path, encoding='utf-8') as stream:
            adjacency = SensorAdjacency.from_matrix(read_sparse(stream))
        config = ModelConfig(
            n_sensors=RING_SENSORS, hidden_dim=4, P=12, Q=12, embedding_mode='AE', architecture='GCRN', seed=1,
        )
        model = build_model(config, adjacency)
        for param in model.parameters():
            param.value[...] = 0.0
        save_model(model, self.tmp / 'zero.ckpt', {
            'sensor_ids': [f"s{i}" for i in range(RING_SENSORS)],
            'scaler': {'mean': 50.0, 'std': 10.0},
            'activity': {'labels': list(DEFAULT_LABELS), 'centered': True},
        })

        out = self.tmp / 'zero.csv'
        result = services.simulate(self.trained(checkpoint=self.tmp / 'zero.ckpt', out=out))
        self.assertTrue(result['success'], result.get('error'))
        frame = pd.read_csv(out)
        self.assertLess(frame['delta_mph'].abs().max(), 0.1)


class ServiceFailureTests(TemporaryDirectoryMixin, TestCase):
    def constant_traffic(self) -> Path:
        steps = 2 * 288
        series = TrafficSeries(
            timestamps=pd.date_range('2012-03-05', periods=steps, freq='5min'),
            sensor_ids=('s0', 's1'),
            values=np.full((steps, 2), 50.0),
            mask=np.ones((steps, 2), dtype=bool),
        )
        path = self.tmp / 'traffic.csv'
        write_traffic_csv(series, path)
        return path

    def test_missing_input_file(self):
        result = services.train({'traffic': self.tmp / 'absent.csv', 'out': self.tmp / 'm.ckpt', 'embedding': 'none'})
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_INPUT')
        self.assertEqual(result['exit_code'], 3)
        self.assertEqual(result['stage'], 'inputs')
        self.assertFalse(manifest_path(self.tmp / 'm.ckpt').exists())

        run = PipelineRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertIn('absent.csv', run.error)
        self.assertEqual(run.manifest, {})

    def test_constant_traffic_is_numeric_error(self):
        result = services.train({
            'traffic': self.constant_traffic(),
            'out': self.tmp / 'm.ckpt',
            'arch': 'LSTM',
            'embedding': 'none',
            **SMALL_MODEL,
        })
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_NUMERIC')
        self.assertEqual(result['exit_code'], 4)
        self.assertEqual(result['stage'], 'split')
        run = PipelineRun.objects.get()
        self.assertEqual(run.manifest['inputs']['traffic'], sha256(self.tmp / 'traffic.csv'))

    def test_adjacency_size_mismatch(self):
        data = self.tmp / 'data'
        services.synth_data({'out': data, 'sensors_count': RING_SENSORS, 'days': RING_DAYS, 'seed': 1})
        (self.tmp / 'small.sparse').write_text("# uagc-sparse v1 rows=2 cols=2\n0,0,1.0\n1,1,1.0\n", encoding='utf-8')
        result = services.train({
            'traffic': data / 'traffic.csv',
            'adjacency': self.tmp / 'small.sparse',
            'out': self.tmp / 'm.ckpt',
            'arch': 'GCRN',
            'embedding': 'none',
            **SMALL_MODEL,
        })
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_SHAPE')
        self.assertEqual(result['stage'], 'adjacency')

    def test_road_network_is_required(self):
        (self.tmp / 'sensors.csv').write_text("sensor_id,lat,lon\ns0,34.0,-118.0\n", encoding='utf-8')
        result = services.gen_paths({'sensors': self.tmp / 'sensors.csv', 'out': self.tmp / 'paths.txt'})
        self.assertFalse(result['success'])
        self.assertEqual(result['stage'], 'parse')

    def test_undecodable_traffic_is_input_error(self):
        (self.tmp / 'traffic.csv').write_bytes(b"timestamp,s0\n2012-03-05 00:00:00,\xff\xfe\n")
        result = services.train({'traffic': self.tmp / 'traffic.csv', 'out': self.tmp / 'm.ckpt', 'embedding': 'none'})
        self.assertFalse(result['success'])
        self.assertEqual(result['code'], 'E_INPUT')
        self.assertIn('traffic.csv', result['error'])


class DeterminismTests(TemporaryDirectoryMixin, TestCase):
    def train_lstm(self, name: str) -> dict:
        return services.train({
            'traffic': self.tmp / 'data' / 'traffic.csv',
            'out': self.tmp / f"{name}.ckpt",
            'arch': 'LSTM',
            'embedding': 'none',
            'seed': 11,
            **SMALL_MODEL,
        })

    def test_checkpoint_and_log_are_byte_identical(self):
        services.synth_data({'out': self.tmp / 'data', 'sensors_count': RING_SENSORS, 'days': RING_DAYS, 'seed': 2})
        first, second = self.train_lstm('first'), self.train_lstm('second')
        self.assertTrue(first['success'], first.get('error'))
        self.assertTrue(second['success'], second.get('error'))
        self.assertEqual((self.tmp / 'first.ckpt').read_bytes(), (self.tmp / 'second.ckpt').read_bytes())
        self.assertEqual(Path(first['log']).read_bytes(), Path(second['log']).read_bytes())

        first_manifest, second_manifest = read_manifest(self.tmp / 'first.ckpt'), read_manifest(self.tmp / 'second.ckpt')
        first_manifest['flags'].pop('out')
        second_manifest['flags'].pop('out')
        self.assertEqual(first_manifest, second_manifest)

    def test_model_without_context_has_zero_delta(self):
        services.synth_data({'out': self.tmp / 'data', 'sensors_count': RING_SENSORS, 'days': RING_DAYS, 'seed': 2})
        self.assertTrue(self.train_lstm('plain')['success'])
        out = self.tmp / 'simulation.csv'
        result = services.simulate({'checkpoint': self.tmp / 'plain.ckpt', 'out': out})
        self.assertTrue(result['success'], result.get('error'))
        frame = pd.read_csv(out)
        np.testing.assert_array_equal(frame['delta_mph'], 0.0)
