# core/errors.py
"""
Exceptions de la boîte à outils.

Chaque erreur porte un `reason` stable : c'est la clé utilisée dans les
rapports de corpus (rejection_reasons) et dans les messages de la CLI.
"""

from typing import Optional


class GcodePairError(Exception):
    """Base de toutes les erreurs métier."""

    reason: str = "error"

    def __init__(self, message: str = "", *, reason: Optional[str] = None):
        super().__init__(message or self.__class__.__name__)
        if reason is not None:
            self.reason = reason


# ==================== PARSING ====================

class MalformedParameter(GcodePairError, ValueError):
    """Lettre de paramètre suivie d'un nombre illisible (ex: X1.2.3)."""

    reason = "malformed_parameter"


class NoLayersFound(GcodePairError):
    """Ni marqueur de couche ni changement de Z sur un mouvement d'extrusion."""

    reason = "no_layers_found"


class EmptyLayer(GcodePairError):
    """Couche sans aucun mouvement d'extrusion."""

    reason = "empty_layer"


# ==================== ALIGNEMENT ====================

class IncompleteMapping(GcodePairError):
    """Au moins un contour de A n'a trouvé aucun contour de B."""

    reason = "incomplete_mapping"

    def __init__(self, message: str = "", mapping=None):
        super().__init__(message)
        self.mapping = mapping


class ConflictingMapping(GcodePairError):
    """Deux contours de A revendiquent le même contour de B."""

    reason = "conflicting_mapping"

    def __init__(self, message: str = "", mapping=None):
        super().__init__(message)
        self.mapping = mapping


class NoCutFound(GcodePairError):
    """La découpe gloutonne n'a trouvé aucune ligne de coupe commune."""

    reason = "no_cut_found"


class MaxLengthTooSmall(GcodePairError, ValueError):
    """maxLength < 2."""

    reason = "max_length_too_small"


class LayerCountMismatch(GcodePairError):
    """Les deux fichiers d'une paire n'ont pas le même nombre de couches."""

    reason = "layer_count_mismatch"


class ZMismatch(GcodePairError):
    """Deux couches appariées par index ne sont pas à la même hauteur."""

    reason = "z_mismatch"


# ==================== EXTRUSION ====================

class RelativeExtrusionMode(GcodePairError):
    """Le flux passe en extrusion relative firmware (M83) : non supporté."""

    reason = "relative_extrusion_mode"


# ==================== RASTER / MÉTRIQUES ====================

class UnknownStartPosition(GcodePairError):
    """Premier mouvement d'extrusion sans position XY connue."""

    reason = "unknown_start_position"


class ResolutionMismatch(GcodePairError, ValueError):
    """Deux rasters de résolutions différentes."""

    reason = "resolution_mismatch"


class EmptyInput(GcodePairError, ValueError):
    """Liste d'IoU vide."""

    reason = "empty_input"


# ==================== DATASET ====================

class ManifestError(GcodePairError):
    """Ligne de manifeste illisible."""

    reason = "manifest_error"
