# cli/formatters.py
"""
Fonctions de formatage texte pour --pretty (tableaux alignés).
"""

from typing import Dict, List, Sequence


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """
    Tableau texte aligné (colonnes séparées par deux espaces).

    Args:
        headers: Titres des colonnes
        rows: Lignes du tableau (les valeurs sont passées à str)

    Returns:
        Le tableau, sans saut de ligne final
    """
    cells = [[str(h) for h in headers]] + [[str(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]

    # Première colonne à gauche, valeurs à droite
    lines = [
        "  ".join(value.ljust(widths[i]) if i == 0 else value.rjust(widths[i]) for i, value in enumerate(row))
        for row in cells
    ]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


def format_percent(value: float) -> str:
    """Ex: 66.6667 -> "66.67"."""
    return f"{value:.2f}"


def format_metrics(metrics: Dict[str, float]) -> str:
    """Ligne IOU@k au format du tableau de résultats."""
    return format_table(list(metrics.keys()), [[format_percent(v) for v in metrics.values()]])


def format_ious(ious: Sequence[float]) -> str:
    """IoU par couche."""
    return format_table(["couche", "IoU"], [[index, f"{value:.4f}"] for index, value in enumerate(ious)])


def format_report(report: Dict) -> str:
    """Rapport de corpus : compteurs puis motifs de rejet."""
    rows: List[List[object]] = [
        ["paires de fichiers", report["files"]],
        ["paires ignorées", report["files_skipped"]],
        ["couches", report["layers_total"]],
        ["couches alignées", report["layers_aligned"]],
        ["couches rejetées", report["layers_rejected"]],
        ["segments émis", report["chunks_emitted"]],
        ["taux d'alignement", f"{report['alignment_rate'] * 100:.2f} %"],
    ]
    for reason, count in report["rejection_reasons"].items():
        rows.append([f"rejet: {reason}", count])
    for reason, count in report["file_rejection_reasons"].items():
        rows.append([f"paire ignorée: {reason}", count])
    return format_table(["", "valeur"], rows)


def format_summary(summary: Dict) -> str:
    """Résumé structurel d'un fichier (commande parse)."""
    rows: List[List[object]] = [
        ["lignes", summary["lines"]],
        ["couches", summary["layers"]],
        ["contours", summary["contours"]],
        ["diagnostics", summary["diagnostics"]],
    ]
    rows.extend([f"  {kind}", count] for kind, count in summary["kinds"].items())
    return format_table([summary["file"], summary["flavor"]], rows)
