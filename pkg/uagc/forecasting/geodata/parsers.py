"""
Leitura e escrita dos arquivos de rede viária e de sensores.

O CSV canônico (nós + arestas) é o caminho principal de ingestão; a importação
de OSM XML é um conversor que produz o mesmo RoadGraph.
"""

import math
import logging
import xml.etree.ElementTree as ET
from typing import Iterable, List

import pandas as pd

from ..exceptions import InputFormatError
from .road_graph import RoadEdge, RoadGraph, RoadNode, Sensor, haversine_miles

logger = logging.getLogger(__name__)

NODE_COLUMNS = ['node_id', 'lat', 'lon']
EDGE_COLUMNS = ['edge_id', 'from_node', 'to_node', 'length_miles', 'is_freeway']
SENSOR_COLUMNS = ['sensor_id', 'lat', 'lon']

FREEWAY_HIGHWAYS = frozenset({'motorway', 'motorway_link'})
DEFAULT_HIGHWAY_FILTER = frozenset({
    'motorway', 'motorway_link', 'trunk', 'trunk_link', 'primary', 'primary_link',
    'secondary', 'secondary_link', 'tertiary', 'tertiary_link', 'residential',
    'unclassified',
})
ONEWAY_VALUES = frozenset({'yes', 'true', '1'})


def read_strict_csv(source, columns: List[str], label: str) -> pd.DataFrame:
    """
    Lê um CSV com cabeçalho fixo mantendo todos os campos como texto.

    Args:
        source: Caminho ou stream (bytes ou texto)
        columns (list): Cabeçalho esperado, na ordem
        label (str): Nome do arquivo para as mensagens de erro

    Returns:
        pd.DataFrame: Conteúdo com colunas de texto
    """
    try:
        frame = pd.read_csv(
            source, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding='utf-8'
        )
    except pd.errors.EmptyDataError:
        raise InputFormatError(f"{label}: arquivo vazio") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputFormatError(f"{label}: linha malformada ({e})") from None

    if list(frame.columns) != columns:
        raise InputFormatError(
            f"{label}: cabeçalho inválido {list(frame.columns)}, esperado {columns}"
        )
    for position, row in enumerate(frame.itertuples(index=False), start=2):
        if any(not isinstance(value, str) or value == '' for value in row):
            raise InputFormatError(f"{label}: campo vazio na linha {position}")
    return frame


def _as_float(value: str, label: str, line: int, field: str) -> float:
    try:
        result = float(value)
    except ValueError:
        raise InputFormatError(f"{label}: valor inválido para {field} na linha {line}: {value!r}") from None
    if not math.isfinite(result):
        raise InputFormatError(f"{label}: valor não finito para {field} na linha {line}")
    return result


def parse_edge_csv(nodes_file, edges_file) -> RoadGraph:
    """
    Constrói o RoadGraph a partir dos CSVs canônicos de nós e arestas.

    Args:
        nodes_file: CSV `node_id,lat,lon`
        edges_file: CSV `edge_id,from_node,to_node,length_miles,is_freeway`

    Returns:
        RoadGraph: Grafo validado (ids duplicados, pontas inexistentes e
        comprimentos não positivos são rejeitados)
    """
    nodes_frame = read_strict_csv(nodes_file, NODE_COLUMNS, 'nodes.csv')
    edges_frame = read_strict_csv(edges_file, EDGE_COLUMNS, 'edges.csv')

    nodes = []
    for line, row in enumerate(nodes_frame.itertuples(index=False), start=2):
        nodes.append(RoadNode(
            node_id=row.node_id,
            lat=_as_float(row.lat, 'nodes.csv', line, 'lat'),
            lon=_as_float(row.lon, 'nodes.csv', line, 'lon'),
        ))

    edges = []
    for line, row in enumerate(edges_frame.itertuples(index=False), start=2):
        if row.is_freeway not in ('0', '1'):
            raise InputFormatError(f"edges.csv: is_freeway deve ser 0 ou 1 na linha {line}")
        length = _as_float(row.length_miles, 'edges.csv', line, 'length_miles')
        if length <= 0:
            raise InputFormatError(
                f"edges.csv: comprimento não positivo na linha {line} (aresta {row.edge_id})"
            )
        edges.append(RoadEdge(
            edge_id=row.edge_id,
            from_node=row.from_node,
            to_node=row.to_node,
            length_miles=length,
            is_freeway=row.is_freeway == '1',
        ))

    graph = RoadGraph(nodes, edges)
    logger.info(f"Rede viária carregada: {len(graph.nodes)} nós, {len(graph.edges)} arestas")
    return graph


def write_edge_csv(graph: RoadGraph, nodes_target, edges_target):
    """Escreve o grafo no formato CSV canônico (floats em representação de ida e volta)."""
    nodes_frame = pd.DataFrame(
        [(n.node_id, repr(n.lat), repr(n.lon)) for n in graph.nodes.values()],
        columns=NODE_COLUMNS,
    )
    edges_frame = pd.DataFrame(
        [
            (e.edge_id, e.from_node, e.to_node, repr(e.length_miles), '1' if e.is_freeway else '0')
            for e in graph.edges.values()
        ],
        columns=EDGE_COLUMNS,
    )
    nodes_frame.to_csv(nodes_target, index=False, lineterminator='\n')
    edges_frame.to_csv(edges_target, index=False, lineterminator='\n')


def parse_osm_xml(osm_file, highway_filter: Iterable[str] = DEFAULT_HIGHWAY_FILTER) -> RoadGraph:
    """
    Converte um extrato OSM XML em RoadGraph.

    Cada way mantida vira arestas dirigidas consecutivas; `oneway=yes` gera só o
    sentido direto, caso contrário os dois sentidos. O comprimento de cada trecho
    é a distância haversine entre os nós consecutivos.

    Args:
        osm_file: Caminho ou stream do arquivo .osm
        highway_filter: Valores da tag `highway` mantidos

    Returns:
        RoadGraph: Grafo só com os nós referenciados pelas ways mantidas
    """
    highway_filter = frozenset(highway_filter)
    try:
        root = ET.parse(osm_file).getroot()
    except ET.ParseError as e:
        raise InputFormatError(f"OSM XML inválido: {e}") from None

    declared = {}
    for element in root.iter('node'):
        node_id = element.get('id')
        try:
            declared[node_id] = (float(element.get('lat')), float(element.get('lon')))
        except (TypeError, ValueError):
            raise InputFormatError(f"OSM XML: coordenadas inválidas no nó {node_id}") from None

    used = {}
    edges = []
    for way in root.iter('way'):
        tags = {tag.get('k'): tag.get('v') for tag in way.iter('tag')}
        highway = tags.get('highway')
        if highway not in highway_filter:
            continue
        way_id = way.get('id')
        refs = [nd.get('ref') for nd in way.iter('nd')]
        for ref in refs:
            if ref not in declared:
                raise InputFormatError(f"OSM XML: way {way_id} referencia nó não declarado {ref}")
        oneway = tags.get('oneway', '').lower() in ONEWAY_VALUES
        is_freeway = highway in FREEWAY_HIGHWAYS

        for k, (a, b) in enumerate(zip(refs, refs[1:])):
            if a == b:
                continue
            length = haversine_miles(declared[a], declared[b])
            if length <= 0:
                # Nós distintos na mesma coordenada
                logger.debug(f"Trecho de comprimento zero ignorado na way {way_id}: {a}->{b}")
                continue
            used.setdefault(a, None)
            used.setdefault(b, None)
            edges.append(RoadEdge(f"{way_id}-{k}", a, b, length, is_freeway))
            if not oneway:
                edges.append(RoadEdge(f"{way_id}-{k}r", b, a, length, is_freeway))

    if not edges:
        raise InputFormatError("OSM XML: nenhuma via restou após o filtro de highway")

    nodes = [RoadNode(node_id, *declared[node_id]) for node_id in used]
    graph = RoadGraph(nodes, edges)
    logger.info(f"OSM convertido: {len(graph.nodes)} nós, {len(graph.edges)} arestas")
    return graph


def parse_sensor_csv(sensors_file) -> List[Sensor]:
    """Lê o CSV `sensor_id,lat,lon` preservando a ordem das linhas (ordem dos índices)."""
    frame = read_strict_csv(sensors_file, SENSOR_COLUMNS, 'sensors.csv')
    sensors = []
    seen = set()
    for line, row in enumerate(frame.itertuples(index=False), start=2):
        if row.sensor_id in seen:
            raise InputFormatError(f"sensors.csv: sensor_id duplicado na linha {line}: {row.sensor_id}")
        seen.add(row.sensor_id)
        sensors.append(Sensor(
            sensor_id=row.sensor_id,
            lat=_as_float(row.lat, 'sensors.csv', line, 'lat'),
            lon=_as_float(row.lon, 'sensors.csv', line, 'lon'),
        ))
    return sensors


def write_sensor_csv(sensors: Iterable[Sensor], target):
    frame = pd.DataFrame(
        [(s.sensor_id, repr(s.lat), repr(s.lon)) for s in sensors], columns=SENSOR_COLUMNS
    )
    frame.to_csv(target, index=False, lineterminator='\n')
