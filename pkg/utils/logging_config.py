# utils/logging_config.py
"""
Configuration centralisée du système de logging.

Les diagnostics partent sur stderr : stdout est réservé aux données
(JSON, G-code transformé, flux d'enregistrements).
"""

import logging
import sys
from typing import Optional, TextIO


LOGGER_NAME = "gcodepair"


class ColoredFormatter(logging.Formatter):
    """Formatter personnalisé avec couleurs pour la console"""

    # Codes couleurs ANSI
    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Vert
        'WARNING': '\033[33m',    # Jaune
        'ERROR': '\033[31m',      # Rouge
        'CRITICAL': '\033[35m',   # Magenta
    }
    RESET = '\033[0m'

    def __init__(self, *args, use_colors: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.use_colors = use_colors

    def format(self, record: logging.LogRecord) -> str:
        """Formate le message de log avec des couleurs"""
        if not self.use_colors or record.levelname not in self.COLORS:
            return super().format(record)

        # Copie locale : les autres handlers doivent voir le levelname d'origine
        original = record.levelname
        record.levelname = f"{self.COLORS[original]}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def setup_logging(level: str = "INFO", stream: Optional[TextIO] = None) -> logging.Logger:
    """
    Configure le système de logging de la boîte à outils.

    Un second appel ne rajoute pas de handler : il change seulement le niveau,
    ce qui permet à la CLI d'appliquer --log-level après l'import des modules.

    Args:
        level: Niveau de logging (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        stream: Flux de sortie (défaut: sys.stderr)

    Returns:
        Logger configuré
    """
    numeric_level = getattr(logging, level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Niveau de log inconnu : {level}")

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(numeric_level)
    logger.propagate = False

    # Éviter la duplication des handlers si déjà configuré
    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(numeric_level)
        return logger

    target = stream if stream is not None else sys.stderr
    console_handler = logging.StreamHandler(target)
    console_handler.setLevel(numeric_level)

    # Format: [2025-01-15 14:30:45] [INFO] [gcodepair] Message
    formatter = ColoredFormatter(
        fmt='[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        use_colors=hasattr(target, "isatty") and target.isatty(),
    )
    console_handler.setFormatter(formatter)

    logger.addHandler(console_handler)

    return logger


# Logger global de la boîte à outils
logger = setup_logging("WARNING")
