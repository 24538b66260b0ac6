# main.py
"""
Point d'entrée principal de la boîte à outils.
Ce fichier gère uniquement le setup et la traduction des erreurs en codes de sortie.
La logique métier est déléguée aux commandes et services.
"""

import sys
from typing import List, Optional

from cli.commands import COMMANDS, ExitStatus, UsageError, build_parser
from config import ToolkitConfig
from core.errors import GcodePairError
from utils.logging_config import logger, setup_logging


def main(argv: Optional[List[str]] = None) -> int:
    """
    Analyse les arguments et exécute la sous-commande.

    Returns:
        Code de sortie : 0 succès, 1 usage, 2 entrée rejetée, 3 erreur interne
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = ToolkitConfig.from_file(args.config)
        setup_logging(args.log_level or config.log_level)
    except UsageError as e:
        logger.error(f"[CLI] Usage : {e}")
        parser.print_usage(sys.stderr)
        return ExitStatus.USAGE
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"[CLI] Configuration : {e}")
        return ExitStatus.USAGE

    handler = COMMANDS[args.command]

    try:
        return handler(args, config)
    except UsageError as e:
        logger.error(f"[CLI] {args.command} : {e}")
        return ExitStatus.USAGE
    except GcodePairError as e:
        logger.error(f"[CLI] {args.command} : entrée rejetée ({e.reason}) : {e}")
        return ExitStatus.REJECTED
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"[CLI] {args.command} : fichier illisible : {e}")
        return ExitStatus.REJECTED
    except KeyboardInterrupt:
        logger.info("[CLI] Interrompu (Ctrl+C)")
        return ExitStatus.INTERNAL
    except Exception as e:
        logger.critical(f"❌ Erreur critique non gérée: {e}", exc_info=True)
        return ExitStatus.INTERNAL


if __name__ == "__main__":
    sys.exit(main())
