# config.py
"""
Configuration centralisée et typée de la boîte à outils.
Utilise des dataclasses pour une meilleure validation et typage.

Le fichier de configuration (format .env) est optionnel et passé
explicitement avec --config : l'environnement du processus n'est jamais lu.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple, TypeVar

from dotenv import dotenv_values

from core.gcode import DEFAULT_LAYER_MARKERS, Flavor, NumberFormat
from raster.metrics import DEFAULT_THRESHOLDS


T = TypeVar("T")


def _read(values: Mapping[str, Optional[str]], key: str, cast: Callable[[str], T], default: T) -> T:
    """Lit une clé et la convertit ; une valeur invalide lève ValueError avec le nom de la clé."""
    raw = values.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError as e:
        raise ValueError(f"{key} invalide ({raw!r}) : {e}") from None


def _positive(cast: Callable[[str], T]) -> Callable[[str], T]:
    def _convert(text: str) -> T:
        value = cast(text)
        if not value > 0:
            raise ValueError("doit être > 0")
        return value
    return _convert


def parse_float_list(text: str) -> Tuple[float, ...]:
    """Ex: "0.9,0.95" -> (0.9, 0.95). Les éléments vides sont ignorés."""
    return tuple(float(part) for part in text.split(",") if part.strip())


def parse_marker_list(text: str) -> Tuple[str, ...]:
    """Marqueurs séparés par des '|' (les virgules et ';' apparaissent dans les marqueurs)."""
    return tuple(part.strip() for part in text.split("|") if part.strip())


@dataclass
class ParserSettings:
    """Marqueurs de changement de couche par dialecte, style des valeurs E (None = détecté)"""

    layer_markers: Dict[Flavor, Tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_LAYER_MARKERS))
    e_format: Optional[NumberFormat] = None

    def markers_for(self, flavor: Flavor) -> Tuple[str, ...]:
        return self.layer_markers.get(flavor, DEFAULT_LAYER_MARKERS[flavor])

    @classmethod
    def from_values(cls, values: Mapping[str, Optional[str]]) -> "ParserSettings":
        markers = dict(DEFAULT_LAYER_MARKERS)
        markers[Flavor.MARLIN] = _read(values, "MARLIN_LAYER_MARKERS", parse_marker_list, markers[Flavor.MARLIN])
        markers[Flavor.SAILFISH] = _read(values, "SAILFISH_LAYER_MARKERS", parse_marker_list, markers[Flavor.SAILFISH])
        e_format = _read(values, "E_FORMAT", NumberFormat.parse, None)
        return cls(layer_markers=markers, e_format=e_format)


@dataclass
class AlignSettings:
    """Découpe en paires et construction du corpus"""

    max_length: int = 20
    z_tolerance: float = 0.001
    workers: int = 1

    def __post_init__(self):
        if self.max_length < 2:
            raise ValueError(f"MAX_LENGTH doit être >= 2 (reçu {self.max_length})")
        if self.z_tolerance < 0:
            raise ValueError(f"Z_TOLERANCE doit être >= 0 (reçu {self.z_tolerance})")
        if self.workers < 1:
            raise ValueError(f"WORKERS doit être >= 1 (reçu {self.workers})")

    @classmethod
    def from_values(cls, values: Mapping[str, Optional[str]]) -> "AlignSettings":
        return cls(
            max_length=_read(values, "MAX_LENGTH", int, 20),
            z_tolerance=_read(values, "Z_TOLERANCE", float, 0.001),
            workers=_read(values, "WORKERS", int, 1),
        )


@dataclass
class RasterSettings:
    """Rendu des couches et seuils IOU@k"""

    resolution: float = 0.1
    bead_width: float = 0.4
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS

    @classmethod
    def from_values(cls, values: Mapping[str, Optional[str]]) -> "RasterSettings":
        return cls(
            resolution=_read(values, "RESOLUTION", _positive(float), 0.1),
            bead_width=_read(values, "BEAD_WIDTH", _positive(float), 0.4),
            thresholds=_read(values, "THRESHOLDS", parse_float_list, DEFAULT_THRESHOLDS),
        )


@dataclass
class ToolkitConfig:
    """Configuration principale de la boîte à outils"""

    log_level: str = "WARNING"
    parser: ParserSettings = field(default_factory=ParserSettings)
    align: AlignSettings = field(default_factory=AlignSettings)
    raster: RasterSettings = field(default_factory=RasterSettings)

    @classmethod
    def from_values(cls, values: Mapping[str, Optional[str]]) -> "ToolkitConfig":
        return cls(
            log_level=_read(values, "LOG_LEVEL", str.upper, "WARNING"),
            parser=ParserSettings.from_values(values),
            align=AlignSettings.from_values(values),
            raster=RasterSettings.from_values(values),
        )

    @classmethod
    def from_file(cls, path: Optional[Path] = None) -> "ToolkitConfig":
        """
        Crée la configuration depuis un fichier .env (ou les valeurs par défaut).

        Raises:
            FileNotFoundError: le fichier n'existe pas
            ValueError: une valeur est invalide (le message nomme la clé)
        """
        if path is None:
            return cls()
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Fichier de configuration introuvable : {path}")
        return cls.from_values(dotenv_values(path))
