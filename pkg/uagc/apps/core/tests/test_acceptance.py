"""
Treinos completos no anel sintético de 20 sensores e 28 dias.

Demoram vários minutos; rodam só com UAGC_RUN_SLOW=1.
"""

import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
from decouple import config
from django.test import TestCase

from uagc.apps.core import services

RUN_SLOW = config('UAGC_RUN_SLOW', default=False, cast=bool)
TRAINING = {
    'hidden_dim': 32,
    'history': 12,
    'horizon': 12,
    'max_epochs': 50,
    'batch_size': 64,
    'seed': 0,
    'no_wall_time': True,
}


def mean_mae(result: dict, model: str) -> float:
    return float(np.mean([row['mae'] for row in result['diagnostics']['rows'] if row['model'] == model]))


@unittest.skipUnless(RUN_SLOW, 'UAGC_RUN_SLOW não habilitado')
class SyntheticRingAcceptanceTests(TestCase):
    @classmethod
    def setUpTestData(cls):
        cls.tmp = Path(tempfile.mkdtemp(prefix='uagc-acceptance-'))
        cls.addClassCleanup(shutil.rmtree, cls.tmp, ignore_errors=True)
        data = cls.tmp / 'data'
        services.synth_data({'out': data, 'sensors_count': 20, 'days': 28, 'seed': 0})
        services.build_graph({
            'nodes': data / 'nodes.csv',
            'edges': data / 'edges.csv',
            'sensors': data / 'sensors.csv',
            'out_dir': cls.tmp / 'graph',
        })
        services.build_activity({'input': data / 'survey.csv', 'out': cls.tmp / 'activity.csv'})
        cls.inputs = {
            'traffic': data / 'traffic.csv',
            'adjacency': cls.tmp / 'graph' / 'A.sparse',
            'activity': cls.tmp / 'activity.csv',
        }
        cls.checkpoints = {}
        for name, overrides in {
            'gcrn': {'arch': 'GCRN'},
            'lstm': {'arch': 'LSTM'},
            'gcrn_k3': {'arch': 'GCRN', 'k_diffusion': 3},
        }.items():
            out = cls.tmp / f"{name}.ckpt"
            result = services.train({**cls.inputs, **TRAINING, **overrides, 'out': out})
            assert result['success'], result.get('error')
            cls.checkpoints[name] = out

    def evaluate(self, name: str, split: str) -> dict:
        result = services.evaluate({
            **self.inputs,
            'checkpoint': self.checkpoints[name],
            'out': self.tmp / f"{name}-{split}.csv",
            'split': split,
            'baseline': 'last-repeat',
        })
        self.assertTrue(result['success'], result.get('error'))
        return result

    def test_graph_model_beats_last_repeat_and_lstm(self):
        gcrn = self.evaluate('gcrn', 'val')
        lstm = self.evaluate('lstm', 'val')
        self.assertLessEqual(mean_mae(gcrn, 'GCRN'), 0.7 * mean_mae(gcrn, 'last-repeat'))
        self.assertLessEqual(mean_mae(gcrn, 'GCRN'), 0.95 * mean_mae(lstm, 'LSTM'))

    def test_more_diffusion_steps_do_not_help_materially(self):
        k1 = mean_mae(self.evaluate('gcrn', 'test'), 'GCRN')
        k3 = mean_mae(self.evaluate('gcrn_k3', 'test'), 'GCRN')
        self.assertGreaterEqual(k3, 0.98 * k1)

    def test_activity_scenarios_move_predictions(self):
        out = self.tmp / 'simulation.csv'
        result = services.simulate({**self.inputs, 'checkpoint': self.checkpoints['gcrn'], 'out': out})
        self.assertTrue(result['success'], result.get('error'))
        self.assertGreater(pd.read_csv(out)['delta_mph'].abs().max(), 1.0)
