from .road_graph import (
    EARTH_RADIUS_MILES,
    MILES_PER_DEGREE_LAT,
    RoadEdge,
    RoadGraph,
    RoadNode,
    Sensor,
    haversine_miles,
    haversine_miles_array,
    road_distance_miles,
)
from .parsers import (
    DEFAULT_HIGHWAY_FILTER,
    FREEWAY_HIGHWAYS,
    parse_edge_csv,
    parse_osm_xml,
    parse_sensor_csv,
    write_edge_csv,
    write_sensor_csv,
)
from .snapping import snap_sensors

__all__ = [
    'EARTH_RADIUS_MILES',
    'MILES_PER_DEGREE_LAT',
    'RoadEdge',
    'RoadGraph',
    'RoadNode',
    'Sensor',
    'haversine_miles',
    'haversine_miles_array',
    'road_distance_miles',
    'DEFAULT_HIGHWAY_FILTER',
    'FREEWAY_HIGHWAYS',
    'parse_edge_csv',
    'parse_osm_xml',
    'parse_sensor_csv',
    'write_edge_csv',
    'write_sensor_csv',
    'snap_sensors',
]
