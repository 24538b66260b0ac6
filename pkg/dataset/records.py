# dataset/records.py
"""
Format des enregistrements du corpus (JSON lines), rapport de corpus et
lecture des manifestes de paires de fichiers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple, TypedDict, Union

from core.errors import ManifestError
from utils.logging_config import logger


class PairRecord(TypedDict):
    source_file: str
    target_file: str
    layer_index: int
    chunk_index: int
    source_text: str
    target_text: str
    flavors: List[str]


class ChunkRecord(TypedDict):
    """Segment d'inférence (fichier source seul, découpe fixe)."""

    source_file: str
    layer_index: int
    chunk_index: int
    source_text: str
    flavor: str


Record = Union[PairRecord, ChunkRecord]


# ==================== RAPPORT ====================

@dataclass
class CorpusReport:
    """
    Compteurs d'une construction de corpus.

    layers_aligned + layers_rejected == layers_total, et la somme des
    rejection_reasons vaut layers_rejected. Les paires de fichiers ignorées
    (files_skipped) ne comptent aucune couche.
    """

    files: int = 0
    files_skipped: int = 0
    layers_total: int = 0
    layers_aligned: int = 0
    layers_rejected: int = 0
    chunks_emitted: int = 0
    rejection_reasons: Dict[str, int] = field(default_factory=dict)
    file_rejection_reasons: Dict[str, int] = field(default_factory=dict)

    @property
    def alignment_rate(self) -> float:
        if self.layers_total == 0:
            return 0.0
        return self.layers_aligned / self.layers_total

    def accept_layer(self, chunks: int) -> None:
        self.layers_total += 1
        self.layers_aligned += 1
        self.chunks_emitted += chunks

    def reject_layer(self, reason: str) -> None:
        self.layers_total += 1
        self.layers_rejected += 1
        self.rejection_reasons[reason] = self.rejection_reasons.get(reason, 0) + 1

    def skip_file(self, reason: str) -> None:
        self.files_skipped += 1
        self.file_rejection_reasons[reason] = self.file_rejection_reasons.get(reason, 0) + 1

    def merge(self, other: "CorpusReport") -> None:
        """Ajoute les compteurs d'un rapport partiel (une paire de fichiers)."""
        self.files += other.files
        self.files_skipped += other.files_skipped
        self.layers_total += other.layers_total
        self.layers_aligned += other.layers_aligned
        self.layers_rejected += other.layers_rejected
        self.chunks_emitted += other.chunks_emitted
        for reason, count in other.rejection_reasons.items():
            self.rejection_reasons[reason] = self.rejection_reasons.get(reason, 0) + count
        for reason, count in other.file_rejection_reasons.items():
            self.file_rejection_reasons[reason] = self.file_rejection_reasons.get(reason, 0) + count

    def to_dict(self) -> Dict:
        return {
            "files": self.files,
            "files_skipped": self.files_skipped,
            "layers_total": self.layers_total,
            "layers_aligned": self.layers_aligned,
            "layers_rejected": self.layers_rejected,
            "rejection_reasons": dict(sorted(self.rejection_reasons.items())),
            "file_rejection_reasons": dict(sorted(self.file_rejection_reasons.items())),
            "chunks_emitted": self.chunks_emitted,
            "alignment_rate": round(self.alignment_rate, 6),
        }


# ==================== SORTIE ====================

def dumps_record(record: Record) -> str:
    """Une ligne JSON, clés dans l'ordre des champs, UTF-8 non échappé."""
    return json.dumps(record, ensure_ascii=False)


class JsonlRecordSink:
    """Écrivain unique d'enregistrements, un objet JSON par ligne."""

    def __init__(self, stream: TextIO):
        self.stream = stream
        self.count = 0

    def write(self, record: Record) -> None:
        self.stream.write(dumps_record(record))
        self.stream.write("\n")
        self.count += 1

    def close(self) -> None:
        self.stream.flush()

    def __enter__(self) -> "JsonlRecordSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ListRecordSink:
    """Collecte les enregistrements en mémoire (tests, appels bibliothèque)."""

    def __init__(self):
        self.records: List[Record] = []

    def write(self, record: Record) -> None:
        self.records.append(record)


# ==================== MANIFESTE ====================

def parse_manifest(text: str, base_dir: Optional[Path] = None) -> List[Tuple[Path, Path]]:
    """
    Lit un manifeste : deux chemins séparés par une tabulation par ligne.

    Les lignes vides et celles commençant par '#' sont ignorées ; un chemin
    relatif est résolu depuis base_dir.

    Raises:
        ManifestError: ligne sans exactement deux chemins
    """
    pairs: List[Tuple[Path, Path]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [part.strip() for part in line.split("\t")]
        if len(fields) != 2 or not all(fields):
            raise ManifestError(f"ligne {number} : deux chemins séparés par une tabulation attendus, reçu {line!r}")
        resolved = []
        for item in fields:
            path = Path(item)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            resolved.append(path)
        pairs.append((resolved[0], resolved[1]))
    return pairs


def read_manifest(path: Path) -> List[Tuple[Path, Path]]:
    """Lit un fichier manifeste ; les chemins relatifs partent de son dossier."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"manifeste illisible : {path} ({e})") from e
    pairs = parse_manifest(text, base_dir=path.parent)
    logger.info(f"[Corpus] Manifeste {path} : {len(pairs)} paire(s) de fichiers")
    return pairs
