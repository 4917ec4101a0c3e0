"""
Camada de serviço do pipeline: cada função executa um subcomando da CLI.

Todas recebem um dicionário de opções (as flags já resolvidas), gravam os
artefatos e o manifesto da execução, registram um PipelineRun e devolvem um
dicionário de resultado `{'success': True, ...}` ou
`{'success': False, 'error': ..., 'code': ..., 'exit_code': ..., 'stage': ...}`.
"""

import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from django.db import DatabaseError, transaction

from uagc.forecasting.activity import (
    BINS_PER_DAY,
    BINS_PER_WEEK,
    DEFAULT_LABELS,
    build_histogram,
    normalize_activity,
    read_activity_csv,
    read_survey_csv,
    smooth_histogram,
    write_activity_csv,
    write_survey_csv,
)
from uagc.forecasting.exceptions import InputFormatError, ShapeError, UAGCError
from uagc.forecasting.geodata import (
    DEFAULT_HIGHWAY_FILTER,
    parse_edge_csv,
    parse_osm_xml,
    parse_sensor_csv,
    snap_sensors,
    write_edge_csv,
    write_sensor_csv,
)
from uagc.forecasting.graphbuild import (
    SensorAdjacency,
    betweenness_centrality,
    combine_adjacency,
    cooccurrence_matrix,
    distance_adjacency,
    distance_std,
    legacy_adjacency,
    read_sparse,
    sensor_distances,
    write_sparse,
)
from uagc.forecasting.networks import (
    ModelConfig,
    build_model,
    load_checkpoint,
    model_from_checkpoint,
    save_model,
)
from uagc.forecasting.pathgen import generate_path_set, make_grid, read_path_set, write_path_set
from uagc.forecasting.training import (
    SPLIT_RATIOS,
    STEP_MINUTES,
    Scaler,
    TrafficSeries,
    Trainer,
    TrainingOptions,
    WindowDataset,
    chronological_ranges,
    context_for_bins,
    last_repeat,
    load_traffic_csv,
    make_split,
    make_synthetic_dataset,
    masked_metrics,
    predict_windows,
    report_horizons,
    window_starts,
    write_pulses_csv,
    write_traffic_csv,
)
from .manifest import RunManifest, manifest_path, write_manifest
from .models import PipelineRun

logger = logging.getLogger(__name__)

REPORT_HEADER = '# uagc-report v1'
LOSS_NAME = 'masked_mae_standardized'
SIMULATION_SPEED_MPH = 30.0
SCENARIO_WINDOWS = ('06:35-08:20', '16:45-18:30')
LAST_REPEAT = 'last-repeat'

ROAD_FLAGS = ('nodes', 'edges', 'osm', 'highways', 'sensors')
MODEL_FLAGS = (
    'arch', 'embedding', 'hidden_dim', 'history', 'horizon', 'k_diffusion', 'layers', 'heads',
    'key_dim', 'no_sensor_embedding', 'scheduled_sampling', 'no_center',
)
COMMAND_FLAGS = {
    'gen-paths': ROAD_FLAGS + ('out', 'cell_miles', 'padding_miles', 'coeffs', 'reps', 'seed', 'threads'),
    'build-graph': ROAD_FLAGS + (
        'out_dir', 'paths', 'cell_miles', 'padding_miles', 'coeffs', 'reps', 'seed', 'threads',
        'sigma_miles', 'kappa_miles',
    ),
    'build-activity': ('input', 'out', 'sigma', 'labels'),
    'train': MODEL_FLAGS + (
        'traffic', 'sensors', 'adjacency', 'activity', 'out', 'log', 'batch_size', 'lr', 'max_epochs',
        'patience', 'lr_patience', 'lr_factor', 'seed', 'keep_zeros', 'no_wall_time',
    ),
    'eval': (
        'checkpoint', 'traffic', 'adjacency', 'activity', 'out', 'split', 'baseline', 'batch_size',
        'keep_zeros',
    ),
    'predict': ('checkpoint', 'traffic', 'adjacency', 'activity', 'out', 'start', 'keep_zeros'),
    'simulate': (
        'checkpoint', 'adjacency', 'activity', 'out', 'window1', 'window2', 'weekday',
        'ahead_minutes',
    ),
    'synth-data': ('out', 'sensors_count', 'days', 'seed'),
}


def defaults() -> dict:
    """Valores padrão das flags, lidos das settings (e portanto do ambiente)."""
    return {
        'sigma_miles': settings.UAGC_SIGMA_MILES,
        'kappa_miles': settings.UAGC_KAPPA_MILES,
        'cell_miles': settings.UAGC_CELL_MILES,
        'padding_miles': settings.UAGC_PADDING_MILES,
        'coeffs': list(settings.UAGC_FREEWAY_COEFFS),
        'reps': settings.UAGC_REPETITIONS,
        'seed': settings.UAGC_SEED,
        'threads': settings.UAGC_THREADS,
        'sigma': settings.UAGC_ACTIVITY_SIGMA_BINS,
        'hidden_dim': settings.UAGC_HIDDEN_DIM,
        'history': settings.UAGC_HORIZON_P,
        'horizon': settings.UAGC_HORIZON_Q,
        'batch_size': settings.UAGC_BATCH_SIZE,
        'lr': settings.UAGC_LEARNING_RATE,
        'patience': settings.UAGC_PATIENCE,
        'lr_patience': settings.UAGC_LR_PATIENCE,
        'lr_factor': settings.UAGC_LR_FACTOR,
        'max_epochs': settings.UAGC_MAX_EPOCHS,
        'k_diffusion': 1,
        'layers': 3,
        'heads': 8,
        'key_dim': 8,
        'arch': 'GCRN',
        'embedding': 'AE',
        'no_sensor_embedding': False,
        'scheduled_sampling': False,
        'no_center': False,
        'keep_zeros': False,
        'no_wall_time': False,
        'split': 'test',
        'baseline': None,
        'highways': ','.join(sorted(DEFAULT_HIGHWAY_FILTER)),
        'window1': SCENARIO_WINDOWS[0],
        'window2': SCENARIO_WINDOWS[1],
        'weekday': 2,
        'ahead_minutes': 15,
        'sensors_count': 20,
        'days': 28,
    }


def resolve(options: dict) -> dict:
    """Completa as opções com os padrões; chaves com valor None recebem o padrão."""
    resolved = defaults()
    resolved.update({key: value for key, value in options.items() if value is not None})
    return resolved


@contextmanager
def stage(name: str):
    """Marca erros do pipeline levantados dentro do bloco com o nome da etapa."""
    try:
        yield
    except UAGCError as e:
        if e.stage is None:
            e.stage = name
        raise


def record_run(command: str, manifest: dict, output_path, status: str, error: str = '', seed=None):
    """Grava o PipelineRun; a semente vai como texto (u64 inteiro) e falhas de banco não interrompem o pipeline."""
    try:
        with transaction.atomic():
            return PipelineRun.objects.create(
                command=command,
                seed=None if seed is None else str(seed),
                manifest=manifest,
                output_path=str(output_path or ''),
                status=status,
                error=error,
            )
    except (DatabaseError, OverflowError) as e:
        logger.warning(f"Execução de {command} não registrada no banco: {e}")
        return None


def _execute(command: str, options: dict, inputs: dict, output, work, seed=None) -> dict:
    """
    Executa `work(options)` sob o protocolo comum dos serviços.

    O manifesto é montado antes (digests das entradas) e gravado só em caso de
    sucesso, ao lado de `output`.
    """
    manifest = None
    try:
        with stage('inputs'):
            flags = {key: options.get(key) for key in COMMAND_FLAGS[command]}
            manifest = RunManifest.build(command, flags, inputs, seed=seed)
        result = work(options)
        write_manifest(manifest, output)
    except UAGCError as e:
        stage_name = e.stage or command
        logger.error(f"{command} falhou na etapa {stage_name}: {e}")
        record_run(command, manifest.to_dict() if manifest else {}, output, 'failed', str(e), seed)
        return {
            'success': False,
            'error': str(e),
            'code': e.code,
            'exit_code': e.exit_code,
            'stage': stage_name,
        }
    except OSError as e:
        logger.error(f"{command} falhou ao acessar arquivos: {e}")
        record_run(command, manifest.to_dict() if manifest else {}, output, 'failed', str(e), seed)
        return {
            'success': False,
            'error': str(e),
            'code': InputFormatError.code,
            'exit_code': InputFormatError.exit_code,
            'stage': 'io',
        }

    run = record_run(command, manifest.to_dict(), output, 'ok', seed=seed)
    return {
        'success': True,
        'command': command,
        'output': str(output),
        'manifest': str(manifest_path(output)),
        'run_id': run.id if run else None,
        **result,
    }


def _parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _required(options: dict, *keys):
    missing = [key for key in keys if not options.get(key)]
    if missing:
        raise InputFormatError(f"Opções obrigatórias ausentes: {', '.join('--' + k.replace('_', '-') for k in missing)}")


# ---------------------------------------------------------------------------
# Carregamento de entradas compartilhado entre os comandos
# ---------------------------------------------------------------------------

def load_road_graph(options: dict):
    """Rede viária do par nodes/edges CSV ou de um extrato OSM XML."""
    with stage('parse'):
        if options.get('osm'):
            highways = options['highways']
            if isinstance(highways, str):
                highways = [h.strip() for h in highways.split(',') if h.strip()]
            return parse_osm_xml(options['osm'], highways)
        if options.get('nodes') and options.get('edges'):
            return parse_edge_csv(options['nodes'], options['edges'])
        raise InputFormatError("Informe --nodes e --edges ou --osm")


def load_snapped_sensors(options: dict, graph):
    with stage('parse'):
        sensors = parse_sensor_csv(options['sensors'])
    with stage('snap'):
        return snap_sensors(graph, sensors)


def road_inputs(options: dict) -> dict:
    return {
        'nodes': options.get('nodes'),
        'edges': options.get('edges'),
        'osm': options.get('osm'),
        'sensors': options.get('sensors'),
    }


def load_activity(path, center: bool = True):
    with stage('activity'):
        return normalize_activity(read_activity_csv(path), center=center)


def load_adjacency(path, sensor_ids) -> SensorAdjacency:
    """Lê um arquivo de adjacência e confere o número de sensores."""
    with stage('adjacency'):
        with open(path, 'r', encoding='utf-8') as stream:
            matrix = read_sparse(stream, Path(path).name)
        if matrix.shape != (len(sensor_ids), len(sensor_ids)):
            raise ShapeError(
                f"Adjacência {matrix.shape} incompatível com {len(sensor_ids)} sensores do arquivo de tráfego"
            )
        return SensorAdjacency.from_matrix(matrix, sensor_ids)


def _write_matrix(matrix, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as stream:
        write_sparse(matrix, stream)


def _generate_paths(options: dict, graph, sensors, grid):
    with stage('paths'):
        return generate_path_set(
            graph,
            grid,
            sensors,
            coefficients=options['coeffs'],
            repetitions=int(options['reps']),
            seed=int(options['seed']),
            threads=int(options['threads']),
        )


# ---------------------------------------------------------------------------
# gen-paths
# ---------------------------------------------------------------------------

def gen_paths(options: dict) -> dict:
    """
    Gera o conjunto de trajetos M^(Gen) e grava o arquivo de trajetos.

    Opções: nodes/edges ou osm, sensors, out, cell_miles, padding_miles, coeffs,
    reps, seed, threads
    """
    options = resolve(options)

    def work(options):
        _required(options, 'sensors', 'out')
        graph = load_road_graph(options)
        sensors = load_snapped_sensors(options, graph)
        with stage('grid'):
            grid = make_grid(sensors, options['cell_miles'], options['padding_miles'], graph)
        path_set = _generate_paths(options, graph, sensors, grid)
        with stage('write'):
            with open(_parent(options['out']), 'w', encoding='utf-8', newline='\n') as stream:
                write_path_set(path_set, stream)
        return {
            'diagnostics': {
                'grid': f"{grid.n_rows}x{grid.n_cols}",
                'paths': len(path_set),
                'attempts': path_set.n_attempts,
                'silent_sensors': int((path_set.appearance == 0).sum()),
            }
        }

    return _execute('gen-paths', options, road_inputs(options), options.get('out') or 'paths.txt', work, seed=options['seed'])


# ---------------------------------------------------------------------------
# build-graph
# ---------------------------------------------------------------------------

def build_graph(options: dict) -> dict:
    """
    Constrói A^(D), A^(S), A = A^(D) ⊙ A^(S) e o grafo legado de comparação.

    Etapas: snap -> grid -> trajetos (gerados ou lidos de `paths`) -> distâncias
    -> A^(D) -> A^(S) -> A. Grava `A_dist.sparse`, `A_cooc.sparse`, `A.sparse`,
    `A_legacy.sparse` (e `paths.txt` quando gera os trajetos) em `out_dir`.

    Returns:
        dict: Resultado com diagnósticos (N, NNZ, B.C. médio, desvio das
        distâncias, |M^(Gen)|, grade, número de vias)
    """
    options = resolve(options)
    out_dir = Path(options.get('out_dir') or '.')

    def work(options):
        _required(options, 'sensors', 'out_dir')
        out_dir.mkdir(parents=True, exist_ok=True)
        graph = load_road_graph(options)
        sensors = load_snapped_sensors(options, graph)
        sensor_ids = [s.sensor_id for s in sensors]

        with stage('grid'):
            grid = make_grid(sensors, options['cell_miles'], options['padding_miles'], graph)

        if options.get('paths'):
            with stage('paths'):
                with open(options['paths'], 'r', encoding='utf-8') as stream:
                    path_set = read_path_set(stream, graph, sensors)
            logger.info(f"{len(path_set)} trajetos reaproveitados de {options['paths']}")
        else:
            path_set = _generate_paths(options, graph, sensors, grid)
            with stage('write'):
                with open(out_dir / 'paths.txt', 'w', encoding='utf-8', newline='\n') as stream:
                    write_path_set(path_set, stream)

        with stage('distance'):
            distances = sensor_distances(graph, sensors, threads=int(options['threads']))
            a_dist = distance_adjacency(
                graph,
                sensors,
                sigma_miles=options['sigma_miles'],
                kappa_miles=options['kappa_miles'],
                distances=distances,
            )
        with stage('cooccurrence'):
            a_cooc = cooccurrence_matrix(path_set, sensors)
        with stage('combine'):
            adjacency = combine_adjacency(
                a_dist, a_cooc, sensor_ids, options['sigma_miles'], options['kappa_miles']
            )
            legacy = legacy_adjacency(distances)
        with stage('centrality'):
            _, mean_bc = betweenness_centrality(adjacency.a)
            _, legacy_bc = betweenness_centrality(legacy)

        with stage('write'):
            _write_matrix(adjacency.a_dist, out_dir / 'A_dist.sparse')
            _write_matrix(adjacency.a_cooc, out_dir / 'A_cooc.sparse')
            _write_matrix(adjacency.a, out_dir / 'A.sparse')
            _write_matrix(legacy, out_dir / 'A_legacy.sparse')

        n = adjacency.n_sensors
        return {
            'diagnostics': {
                'n_sensors': n,
                'nnz': adjacency.nnz,
                'nnz_percent': 100.0 * adjacency.nnz / (n * n),
                'mean_bc': mean_bc,
                'legacy_nnz': int(legacy.nnz),
                'legacy_mean_bc': legacy_bc,
                'distance_std_miles': distance_std(distances),
                'paths': len(path_set),
                'grid': f"{grid.n_rows}x{grid.n_cols}",
                'roads': len(graph.edges),
            }
        }

    inputs = road_inputs(options)
    inputs['paths'] = options.get('paths')
    return _execute('build-graph', options, inputs, out_dir / 'A.sparse', work, seed=options['seed'])


# ---------------------------------------------------------------------------
# build-activity
# ---------------------------------------------------------------------------

def build_activity(options: dict) -> dict:
    """
    Histograma semanal da pesquisa de atividades, suavizado com σ em bins.

    Opções: input (survey.csv), out (activity.csv), sigma, labels
    """
    options = resolve(options)

    def work(options):
        _required(options, 'input', 'out')
        labels = options.get('labels') or DEFAULT_LABELS
        if isinstance(labels, str):
            labels = [label.strip() for label in labels.split(',') if label.strip()]
        with stage('activity'):
            rows = read_survey_csv(options['input'])
            table = smooth_histogram(build_histogram(rows, labels), float(options['sigma']))
        with stage('write'):
            write_activity_csv(table, _parent(options['out']))
        return {
            'diagnostics': {
                'records': len(rows),
                'categories': table.n_categories,
                'bins': BINS_PER_WEEK,
            }
        }

    return _execute('build-activity', options, {'survey': options.get('input')}, options.get('out') or 'activity.csv', work)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _model_config(options: dict, n_sensors: int, n_activity: int) -> ModelConfig:
    with stage('config'):
        return ModelConfig(
            n_sensors=n_sensors,
            hidden_dim=int(options['hidden_dim']),
            P=int(options['history']),
            Q=int(options['horizon']),
            k_diffusion=int(options['k_diffusion']),
            n_layers=int(options['layers']),
            n_heads=int(options['heads']),
            d_key=int(options['key_dim']),
            embedding_mode=options['embedding'],
            use_sensor_embedding=not options['no_sensor_embedding'],
            architecture=options['arch'],
            n_activity=n_activity,
            scheduled_sampling=bool(options['scheduled_sampling']),
            seed=int(options['seed']),
        )


def _load_series(options: dict, sensor_ids=None) -> TrafficSeries:
    with stage('traffic'):
        if sensor_ids is None and options.get('sensors'):
            sensor_ids = [s.sensor_id for s in parse_sensor_csv(options['sensors'])]
        return load_traffic_csv(options['traffic'], sensor_ids=sensor_ids, zero_is_missing=not options['keep_zeros'])


def train(options: dict) -> dict:
    """
    Treina um modelo e grava o checkpoint (melhor época) e o log JSON por época.

    Opções principais: traffic, adjacency, activity, out, log, arch, embedding,
    hidden_dim, history, horizon, k_diffusion, batch_size, lr, max_epochs, seed
    """
    options = resolve(options)

    def work(options):
        _required(options, 'traffic', 'out')
        series = _load_series(options)
        with stage('split'):
            split, standardized = make_split(series)

        activity = None
        if options['embedding'] == 'AE':
            _required(options, 'activity')
            activity = load_activity(options['activity'], center=not options['no_center'])
        n_activity = activity.n_categories if activity is not None else len(DEFAULT_LABELS)
        config = _model_config(options, series.n_sensors, n_activity)

        adjacency = None
        if config.uses_graph:
            _required(options, 'adjacency')
            adjacency = load_adjacency(options['adjacency'], series.sensor_ids)

        with stage('train'):
            model = build_model(config, adjacency)
            dataset = WindowDataset(series, standardized, config.P, config.Q, config.embedding_mode, activity)
            training = TrainingOptions(
                batch_size=int(options['batch_size']),
                learning_rate=float(options['lr']),
                max_epochs=int(options['max_epochs']),
                patience=int(options['patience']),
                lr_patience=int(options['lr_patience']),
                lr_factor=float(options['lr_factor']),
                seed=int(options['seed']),
                log_wall_time=not options['no_wall_time'],
            )
            trainer = Trainer(model, dataset, split, training)
            log_path = _parent(options.get('log') or f"{options['out']}.log.jsonl")
            with open(log_path, 'w', encoding='utf-8', newline='\n') as log_stream:
                result = trainer.fit(log_stream)

        metadata = {
            'sensor_ids': list(series.sensor_ids),
            'scaler': {'mean': split.scaler.mean, 'std': split.scaler.std},
            'activity': None if activity is None else {
                'labels': list(activity.labels),
                'centered': activity.centered,
            },
            'split_ratios': list(SPLIT_RATIOS),
            'loss': LOSS_NAME,
            'best_epoch': result.state.best_epoch,
            'best_val_mae': result.state.best_val,
            'epochs_run': result.state.epoch,
        }
        with stage('write'):
            save_model(model, _parent(options['out']), metadata)
        return {
            'diagnostics': {
                'n_parameters': model.n_parameters,
                'epochs': result.state.epoch,
                'best_epoch': result.state.best_epoch,
                'best_val_mae': result.state.best_val,
                'lr_reductions': result.state.lr_reductions,
            },
            'log': str(log_path),
        }

    inputs = {
        'traffic': options.get('traffic'),
        'adjacency': options.get('adjacency'),
        'activity': options.get('activity') if options['embedding'] == 'AE' else None,
        'sensors': options.get('sensors'),
    }
    return _execute('train', options, inputs, options.get('out') or 'model.ckpt', work, seed=options['seed'])


# ---------------------------------------------------------------------------
# Checkpoint carregado com suas dependências (eval, predict, simulate)
# ---------------------------------------------------------------------------

def load_trained(options: dict):
    """
    Carrega checkpoint, adjacência e tabela de atividades compatíveis.

    Returns:
        tuple: (model, scaler, sensor_ids, activity)
    """
    with stage('checkpoint'):
        checkpoint = load_checkpoint(options['checkpoint'])
        metadata = checkpoint.metadata
        try:
            scaler = Scaler(mean=float(metadata['scaler']['mean']), std=float(metadata['scaler']['std']))
            sensor_ids = tuple(metadata['sensor_ids'])
        except (KeyError, TypeError, ValueError):
            raise InputFormatError("Checkpoint sem padronização ou lista de sensores nos metadados") from None
    config = checkpoint.config

    activity = None
    if config.embedding_mode == 'AE':
        _required(options, 'activity')
        centered = bool((metadata.get('activity') or {}).get('centered', True))
        activity = load_activity(options['activity'], center=centered)
        if activity.n_categories != config.n_activity:
            raise ShapeError(
                f"Tabela de atividades com {activity.n_categories} categorias, modelo espera {config.n_activity}",
                stage='activity',
            )

    adjacency = None
    if config.uses_graph:
        _required(options, 'adjacency')
        adjacency = load_adjacency(options['adjacency'], sensor_ids)

    with stage('checkpoint'):
        model = model_from_checkpoint(checkpoint, adjacency)
    return model, scaler, sensor_ids, activity


def _standardized(series: TrafficSeries, scaler: Scaler) -> np.ndarray:
    return np.where(series.mask, scaler.transform(series.values), 0.0)


def _trained_inputs(options: dict) -> dict:
    return {
        'checkpoint': options.get('checkpoint'),
        'adjacency': options.get('adjacency'),
        'activity': options.get('activity'),
    }


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def evaluate(options: dict) -> dict:
    """
    Métricas mascaradas (MAE, RMSE, MAPE) nos passos 3, 6 e último da partição.

    O relatório CSV tem um cabeçalho de comentário com a divisão e a perda usadas
    e as colunas `model,horizon_step,mae,rmse,mape_percent`; com
    `baseline='last-repeat'` inclui as linhas do LastRepeat.
    """
    options = resolve(options)

    def work(options):
        _required(options, 'checkpoint', 'traffic', 'out')
        model, scaler, sensor_ids, activity = load_trained(options)
        config = model.config
        series = _load_series(options, sensor_ids)

        with stage('evaluate'):
            ranges = dict(zip(('train', 'val', 'test'), chronological_ranges(series.n_steps)))
            if options['split'] not in ranges:
                raise InputFormatError(f"Partição desconhecida: {options['split']}")
            starts = window_starts(ranges[options['split']], config.P, config.Q)
            if len(starts) == 0:
                raise InputFormatError(
                    f"Partição {options['split']} {ranges[options['split']]} curta demais para P+Q={config.P + config.Q}"
                )
            dataset = WindowDataset(series, _standardized(series, scaler), config.P, config.Q, config.embedding_mode, activity)
            batch = dataset.batch(starts)
            prediction = scaler.inverse(predict_windows(model, dataset, starts, int(options['batch_size'])))
            horizons = report_horizons(config.Q)

            rows = []
            metrics = masked_metrics(prediction, batch['target_mph'], batch['mask'], horizons)
            rows.extend((config.architecture, m) for m in metrics.values())
            if options.get('baseline') == LAST_REPEAT:
                baseline = last_repeat(batch['history_mph'], config.Q, batch['history_mask'], fallback=scaler.mean)
                metrics = masked_metrics(baseline, batch['target_mph'], batch['mask'], horizons)
                rows.extend((LAST_REPEAT, m) for m in metrics.values())
            elif options.get('baseline'):
                raise InputFormatError(f"Baseline desconhecido: {options['baseline']}")

        frame = pd.DataFrame([
            {
                'model': name,
                'horizon_step': m.horizon_step,
                'mae': repr(m.mae),
                'rmse': repr(m.rmse),
                'mape_percent': repr(m.mape_percent),
            }
            for name, m in rows
        ])
        with stage('write'):
            with open(_parent(options['out']), 'w', encoding='utf-8', newline='\n') as stream:
                stream.write(
                    f"{REPORT_HEADER} split={options['split']} "
                    f"ratios={'/'.join(str(r) for r in SPLIT_RATIOS)} loss={LOSS_NAME} windows={len(starts)}\n"
                )
                frame.to_csv(stream, index=False, lineterminator='\n')
        return {
            'diagnostics': {
                'windows': len(starts),
                'rows': [
                    {'model': name, 'horizon_step': m.horizon_step, 'mae': m.mae, 'rmse': m.rmse, 'mape_percent': m.mape_percent}
                    for name, m in rows
                ],
            }
        }

    inputs = _trained_inputs(options)
    inputs['traffic'] = options.get('traffic')
    return _execute('eval', options, inputs, options.get('out') or 'report.csv', work)


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def predict(options: dict) -> dict:
    """
    Previsões de Q passos em mph a partir do instante `start`.

    `start` é o primeiro passo do histórico; os P passos seguintes do arquivo de
    tráfego formam a entrada e a saída tem o formato do traffic.csv, com os Q
    instantes que sucedem o histórico.
    """
    options = resolve(options)

    def work(options):
        _required(options, 'checkpoint', 'traffic', 'start', 'out')
        model, scaler, sensor_ids, activity = load_trained(options)
        config = model.config
        series = _load_series(options, sensor_ids)

        with stage('predict'):
            try:
                start = pd.Timestamp(options['start'])
            except (TypeError, ValueError):
                raise InputFormatError(f"Instante inicial inválido: {options['start']!r}") from None
            position = series.timestamps.get_indexer([start])[0]
            if position < 0:
                raise InputFormatError(f"Instante {start} não está no arquivo de tráfego")
            if position + config.P > series.n_steps:
                raise InputFormatError(f"Histórico de {config.P} passos a partir de {start} excede o arquivo")

            history = _standardized(series, scaler)[position:position + config.P][None]
            first_bin = series.weekly_bins[position]
            bins = (first_bin + np.arange(config.P + config.Q))[None] % BINS_PER_WEEK
            context = context_for_bins(bins, config.embedding_mode, activity)
            prediction = scaler.inverse(model.predict(history, context))[0]

            future = pd.date_range(
                series.timestamps[position + config.P - 1] + pd.Timedelta(minutes=STEP_MINUTES),
                periods=config.Q,
                freq=f'{STEP_MINUTES}min',
            )
            output = TrafficSeries(
                timestamps=future,
                sensor_ids=series.sensor_ids,
                values=prediction,
                mask=np.ones(prediction.shape, dtype=bool),
            )
        with stage('write'):
            write_traffic_csv(output, _parent(options['out']))
        return {'diagnostics': {'start': str(start), 'steps': config.Q, 'sensors': len(sensor_ids)}}

    inputs = _trained_inputs(options)
    inputs['traffic'] = options.get('traffic')
    return _execute('predict', options, inputs, options.get('out') or 'predictions.csv', work)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def parse_window(text: str, span_minutes: int) -> tuple:
    """
    Converte `HH:MM-HH:MM` em minutos do dia (início, fim).

    O início é o primeiro passo do histórico; o fim precisa cair dentro dos
    P+Q passos cobertos pelo contexto do modelo.

    Raises:
        InputFormatError: formato inválido, instante fora da grade de 5 minutos
            ou janela maior que o contexto
    """
    try:
        first, last = text.split('-')
        start = pd.Timedelta(f"{first.strip()}:00")
        end = pd.Timedelta(f"{last.strip()}:00")
    except ValueError:
        raise InputFormatError(f"Janela de cenário inválida: {text!r}, esperado HH:MM-HH:MM") from None
    start_minutes = int(start.total_seconds() // 60)
    end_minutes = int(end.total_seconds() // 60)
    for value in (start, end):
        if value.total_seconds() % (STEP_MINUTES * 60) or not pd.Timedelta(0) <= value < pd.Timedelta(days=1):
            raise InputFormatError(f"Janela {text!r} não cabe na grade de {STEP_MINUTES} minutos")
    if end_minutes < start_minutes or end_minutes - start_minutes > span_minutes:
        raise InputFormatError(f"Janela {text!r} fora do contexto de {span_minutes} minutos do modelo")
    return start_minutes, end_minutes


def simulate(options: dict) -> dict:
    """
    Resposta à atividade: histórico constante de 30 mph (padronizado com a média e
    o desvio do treino) e dois contextos de atividade, um por janela de cenário.

    Grava por sensor a previsão `ahead_minutes` à frente em cada cenário e a
    diferença cenário 1 - cenário 2.
    """
    options = resolve(options)

    def work(options):
        _required(options, 'checkpoint', 'out')
        model, scaler, sensor_ids, activity = load_trained(options)
        config = model.config

        with stage('simulate'):
            span = (config.P + config.Q - 1) * STEP_MINUTES
            weekday = int(options['weekday'])
            if not 0 <= weekday <= 6:
                raise InputFormatError(f"weekday fora de 0..6: {weekday}")
            ahead = int(options['ahead_minutes'])
            if ahead % STEP_MINUTES or not 1 <= ahead // STEP_MINUTES <= config.Q:
                raise InputFormatError(f"Antecedência de {ahead} min fora dos {config.Q} passos previstos")
            step = ahead // STEP_MINUTES - 1

            history = np.full((1, config.P, len(sensor_ids)), scaler.transform(SIMULATION_SPEED_MPH))
            predictions = []
            for window in (options['window1'], options['window2']):
                start_minutes, _ = parse_window(window, span)
                first_bin = weekday * BINS_PER_DAY + start_minutes // STEP_MINUTES
                bins = (first_bin + np.arange(config.P + config.Q))[None] % BINS_PER_WEEK
                context = context_for_bins(bins, config.embedding_mode, activity)
                predictions.append(scaler.inverse(model.predict(history, context))[0, step])

        delta = predictions[0] - predictions[1]
        frame = pd.DataFrame({
            'sensor_id': list(sensor_ids),
            'scenario_1_mph': [repr(float(v)) for v in predictions[0]],
            'scenario_2_mph': [repr(float(v)) for v in predictions[1]],
            'delta_mph': [repr(float(v)) for v in delta],
        })
        with stage('write'):
            frame.to_csv(_parent(options['out']), index=False, lineterminator='\n')
        return {
            'diagnostics': {
                'max_abs_delta_mph': float(np.abs(delta).max()) if delta.size else 0.0,
                'windows': [options['window1'], options['window2']],
            }
        }

    return _execute('simulate', options, _trained_inputs(options), options.get('out') or 'simulation.csv', work)


# ---------------------------------------------------------------------------
# synth-data
# ---------------------------------------------------------------------------

def synth_data(options: dict) -> dict:
    """
    Grava o conjunto sintético em anel: nodes/edges/sensors/traffic/survey CSVs e
    o cronograma de pulsos (pulses.csv).
    """
    options = resolve(options)
    out_dir = Path(options.get('out') or 'synthetic')

    def work(options):
        with stage('synthetic'):
            dataset = make_synthetic_dataset(int(options['sensors_count']), int(options['days']), int(options['seed']))
        with stage('write'):
            out_dir.mkdir(parents=True, exist_ok=True)
            write_edge_csv(dataset.graph, out_dir / 'nodes.csv', out_dir / 'edges.csv')
            write_sensor_csv(dataset.sensors, out_dir / 'sensors.csv')
            write_traffic_csv(dataset.series, out_dir / 'traffic.csv')
            write_survey_csv(dataset.survey_rows, out_dir / 'survey.csv')
            write_pulses_csv(dataset.pulses, out_dir / 'pulses.csv')
        return {
            'diagnostics': {
                'sensors': dataset.series.n_sensors,
                'steps': dataset.series.n_steps,
                'pulses': len(dataset.pulses),
                'missing': int((~dataset.series.mask).sum()),
            },
            'out_dir': str(out_dir),
        }

    return _execute('synth-data', options, {}, out_dir / 'traffic.csv', work, seed=options['seed'])
