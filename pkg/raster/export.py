# raster/export.py
"""
Export des rendus de couches : PGM binaire (golden files) et aperçu PNG.
"""

from io import BytesIO
from pathlib import Path
from typing import Optional, Sequence

import matplotlib
matplotlib.use('Agg')  # Backend non-interactif (CLI, CI)

import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from raster.renderer import LayerRaster
from utils.logging_config import logger


OCCUPIED = 255
EMPTY = 0


def layer_filename(stem: str, index: int, suffix: str = ".pgm") -> str:
    """Ex: layer_filename("cube", 3) -> "cube_layer3.pgm"."""
    return f"{stem}_layer{index}{suffix}"


def to_image(raster: LayerRaster) -> Image.Image:
    """
    Image 8 bits (0 = vide, 255 = occupé), Y vers le haut.

    Raises:
        ValueError: rendu vide (aucun pixel)
    """
    if raster.is_empty:
        raise ValueError("rendu vide : rien à exporter")
    # La ligne 0 de la grille est au Y minimal, la ligne 0 d'une image est en haut
    pixels = np.flipud(raster.grid).astype(np.uint8) * OCCUPIED
    return Image.fromarray(pixels)


def write_pgm(raster: LayerRaster, path: Path) -> Optional[Path]:
    """
    Écrit un rendu en PGM binaire (P5).

    Args:
        raster: Rendu de la couche
        path: Fichier de sortie

    Returns:
        Le chemin écrit, ou None si le rendu est vide
    """
    if raster.is_empty:
        logger.info(f"[Raster] Rendu vide, {path} non écrit")
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_image(raster).save(path, format="PPM")
    return path


def render_preview_png(raster: LayerRaster, title: Optional[str] = None) -> Optional[BytesIO]:
    """
    Aperçu PNG d'une couche, axes en mm.

    Args:
        raster: Rendu de la couche
        title: Titre du graphique

    Returns:
        BytesIO contenant l'image PNG, ou None si le rendu est vide
    """
    if raster.is_empty:
        return None

    x0, y0 = raster.origin
    extent = (x0, x0 + raster.width * raster.resolution, y0, y0 + raster.height * raster.resolution)

    fig, ax = plt.subplots(figsize=(8, 8))
    ax.imshow(raster.grid, origin='lower', extent=extent, cmap='Greys', interpolation='nearest', vmin=0, vmax=1)
    ax.set_aspect('equal')
    ax.set_xlabel("X (mm)")
    ax.set_ylabel("Y (mm)")
    if title:
        ax.set_title(title, fontsize=14, fontweight='bold')
    ax.grid(True, alpha=0.2, linestyle='--', linewidth=0.5)

    fig.tight_layout()

    buffer = BytesIO()
    fig.savefig(buffer, format='png', dpi=100, bbox_inches='tight')
    buffer.seek(0)
    plt.close(fig)

    return buffer


def render_iou_chart(ious: Sequence[float], title: str = "IoU par couche") -> Optional[BytesIO]:
    """
    Histogramme de l'IoU de chaque couche (évaluation d'une traduction).

    Returns:
        BytesIO contenant l'image PNG, ou None si la liste est vide
    """
    if len(ious) == 0:
        return None

    fig, ax = plt.subplots(figsize=(12, 6))
    ax.bar(range(len(ious)), ious, color='steelblue', alpha=0.9)
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title, fontsize=16, fontweight='bold', pad=20)
    ax.set_xlabel("Couche", fontsize=12)
    ax.set_ylabel("IoU", fontsize=12)

    # Grille horizontale uniquement
    ax.grid(True, axis='y', alpha=0.2, linestyle='--', linewidth=0.5)

    fig.tight_layout()

    buffer = BytesIO()
    fig.savefig(buffer, format='png', dpi=100, bbox_inches='tight')
    buffer.seek(0)
    plt.close(fig)

    return buffer
