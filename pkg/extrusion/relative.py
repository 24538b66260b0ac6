# extrusion/relative.py
"""
Conversion des valeurs E cumulées en extrusion relative, et l'inverse.

E relatif = E absolu - E absolu précédent (ou la valeur du dernier G92).
L'arithmétique est en virgule fixe. Le style d'écriture des E est détecté une
fois sur le flux absolu et passé aux deux sens : to_absolute(to_relative(s, f), f)
restitue s octet pour octet.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, List, Optional, Sequence, Tuple

from core.errors import MalformedParameter, RelativeExtrusionMode
from core.gcode import GcodeLine, LineKind, NumberFormat, replace_params, to_fixed
from utils.logging_config import logger


RELATIVE_MODE_COMMAND = "M83"
FORMAT_MARKER = ";E_FORMAT:"

ZERO = to_fixed(Decimal(0))


@dataclass
class ExtrusionState:
    """
    État du balayage d'un flux.

    baseline: dernière valeur posée par un G92 E (0 au départ)
    last_absolute: E absolu de la dernière ligne portant un E
    """

    baseline: Decimal = ZERO
    last_absolute: Optional[Decimal] = None

    def __post_init__(self):
        if self.last_absolute is None:
            self.last_absolute = self.baseline

    def reset(self, value: Decimal) -> None:
        self.baseline = value
        self.last_absolute = value


def _convertible(line: GcodeLine) -> bool:
    return line.carries_extrusion and line.diagnostic is None


def _reject_relative_mode(index: int, line: GcodeLine) -> None:
    if line.command == RELATIVE_MODE_COMMAND:
        raise RelativeExtrusionMode(
            f"ligne {index + 1} : {RELATIVE_MODE_COMMAND} (extrusion relative firmware) non supporté"
        )


def detect_extrusion_format(lines: Iterable[GcodeLine]) -> NumberFormat:
    """Style d'écriture dominant des valeurs E des mouvements (hors G92)."""
    return NumberFormat.detect(line.params["E"].text for line in lines if _convertible(line))


# ---------- Marqueur de style ----------

def format_marker(fmt: NumberFormat) -> str:
    """Ligne de commentaire qui transporte le style du flux absolu d'origine."""
    return f"{FORMAT_MARKER}{fmt.label}"


def read_format_marker(lines: Sequence[GcodeLine]) -> Tuple[Optional[NumberFormat], List[GcodeLine]]:
    """
    Retire la ligne de style en tête d'un flux relatif.

    Returns:
        (style lu ou None, lignes sans le marqueur)

    Raises:
        MalformedParameter: marqueur présent mais illisible
    """
    lines = list(lines)
    if lines and lines[0].raw.strip().startswith(FORMAT_MARKER):
        try:
            fmt = NumberFormat.parse(lines[0].raw.strip()[len(FORMAT_MARKER):])
        except ValueError as e:
            raise MalformedParameter(f"ligne 1 : {e}") from None
        return fmt, lines[1:]
    return None, lines


# ==================== CONVERSIONS ====================

def to_relative(
    lines: Sequence[GcodeLine],
    fmt: Optional[NumberFormat] = None,
    state: Optional[ExtrusionState] = None,
) -> List[GcodeLine]:
    """
    Remplace chaque E cumulé par la quantité extrudée pendant le mouvement.

    Les G92 E passent tels quels et redéfinissent la base. Une rétraction
    donne un E relatif négatif, ce qui est légal.

    Args:
        lines: Lignes dans l'ordre du fichier, E en mode absolu
        fmt: Style d'écriture des valeurs (défaut: style détecté sur le flux)
        state: État de départ, mis à jour en place (défaut: base 0)

    Returns:
        Les lignes converties

    Raises:
        RelativeExtrusionMode: le flux contient un M83
    """
    lines = list(lines)
    if fmt is None:
        fmt = detect_extrusion_format(lines)
    if state is None:
        state = ExtrusionState()

    converted: List[GcodeLine] = []
    for index, line in enumerate(lines):
        _reject_relative_mode(index, line)
        if line.kind is LineKind.EXTRUSION_RESET:
            state.reset(line.params["E"].value)
            converted.append(line)
            continue
        if not _convertible(line):
            if line.carries_extrusion:
                logger.warning(f"[Extrusion] Ligne {index + 1} ignorée (diagnostic) : {line.raw!r}")
            converted.append(line)
            continue

        absolute = line.params["E"].value
        relative = absolute - state.last_absolute
        state.last_absolute = absolute
        converted.append(replace_params(line, {"E": fmt.render(relative)}))

    return converted


def to_absolute(
    lines: Sequence[GcodeLine],
    fmt: Optional[NumberFormat] = None,
    state: Optional[ExtrusionState] = None,
) -> List[GcodeLine]:
    """
    Somme cumulée des E relatifs, repartant de la base de chaque G92.

    Args:
        lines: Lignes en extrusion relative (sortie de to_relative)
        fmt: Style du flux absolu d'origine, celui passé à to_relative
            (défaut: style détecté sur le flux relatif, exact seulement
            pour les flux à largeur fixe)
        state: État de départ, mis à jour en place ; permet de reprendre un
            flux découpé en morceaux

    Returns:
        Les lignes en E absolu

    Raises:
        RelativeExtrusionMode: le flux contient un M83
    """
    lines = list(lines)
    if fmt is None:
        fmt = detect_extrusion_format(lines)
    if state is None:
        state = ExtrusionState()

    restored: List[GcodeLine] = []
    for index, line in enumerate(lines):
        _reject_relative_mode(index, line)
        if line.kind is LineKind.EXTRUSION_RESET:
            state.reset(line.params["E"].value)
            restored.append(line)
            continue
        if not _convertible(line):
            restored.append(line)
            continue

        absolute = state.last_absolute + line.params["E"].value
        state.last_absolute = absolute
        restored.append(replace_params(line, {"E": fmt.render(absolute)}))

    return restored
