# core/gcode.py
"""
Lexer et parser de G-code pour les dialectes Marlin et Sailfish.

Chaque ligne source devient un GcodeLine immuable qui garde son texte
verbatim : serialize(parse_line(x)) == x pour toute ligne acceptée.
Les valeurs numériques sont stockées en virgule fixe (Decimal, 5 décimales)
à côté du texte d'origine, pour que les sommes cumulées d'extrusion restent
exactes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_EVEN
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from core.errors import MalformedParameter
from utils.logging_config import logger


# ==================== CONSTANTES ====================

FRACTION_DIGITS = 5
QUANTUM = Decimal(1).scaleb(-FRACTION_DIGITS)  # 0.00001

MOTION_COMMANDS = frozenset({"G0", "G1"})
RESET_COMMAND = "G92"

# Commandes dont l'argument est du texte libre (M117 Hello -> pas de paramètre H)
STRING_ARG_COMMANDS = frozenset({"M23", "M28", "M29", "M30", "M32", "M36", "M117", "M118"})

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)\Z")
_WORD_RE = re.compile(r"([A-Za-z])([^A-Za-z\s]*)")
_PAREN_COMMENT_RE = re.compile(r"\([^)]*\)?")


class Flavor(str, Enum):
    """Dialecte d'un fichier G-code."""

    MARLIN = "marlin"
    SAILFISH = "sailfish"

    @classmethod
    def parse(cls, value: str) -> "Flavor":
        try:
            return cls(value.strip().lower())
        except ValueError:
            choices = ", ".join(f.value for f in cls)
            raise ValueError(f"Dialecte inconnu : {value!r} (attendu : {choices})") from None


class LineKind(str, Enum):
    """Classification d'une ligne."""

    EXTRUDING_MOVE = "extruding_move"
    TRAVEL_MOVE = "travel_move"
    EXTRUSION_RESET = "extrusion_reset"
    LAYER_MARKER = "layer_marker"
    OTHER = "other"
    COMMENT_ONLY = "comment_only"
    BLANK = "blank"


# Marqueurs de changement de couche (préfixe, insensible à la casse).
# Sailfish : commentaires PrusaSlicer, "; layer N" et les "(<layer> z )" de MakerBot.
DEFAULT_LAYER_MARKERS: Dict[Flavor, Tuple[str, ...]] = {
    Flavor.MARLIN: (";LAYER_CHANGE", ";LAYER:"),
    Flavor.SAILFISH: (";LAYER_CHANGE", "; layer", "(<layer>", "(Slice"),
}


def to_fixed(value: Decimal) -> Decimal:
    """Arrondit une valeur à la grille virgule fixe (5 décimales)."""
    return value.quantize(QUANTUM, rounding=ROUND_HALF_EVEN)


# ==================== NOMBRES ====================

@dataclass(frozen=True)
class NumericToken:
    """Nombre tel qu'écrit dans la source + sa valeur virgule fixe."""

    text: str
    value: Decimal

    @classmethod
    def parse(cls, text: str) -> "NumericToken":
        """
        Lit un nombre G-code (signe optionnel, ".5" et "3." acceptés).

        Raises:
            MalformedParameter: si le texte n'est pas un nombre
        """
        if not _NUMBER_RE.match(text):
            raise MalformedParameter(f"nombre illisible : {text!r}")
        return cls(text=text, value=to_fixed(Decimal(text)))

    @classmethod
    def from_value(cls, value: Decimal, fmt: "NumberFormat") -> "NumericToken":
        return cls(text=fmt.render(value), value=to_fixed(value))

    @property
    def fraction_digits(self) -> int:
        body = self.text.lstrip("+-")
        return len(body.split(".", 1)[1]) if "." in body else 0


@dataclass(frozen=True)
class NumberFormat:
    """
    Style d'écriture des nombres d'un flux (nombre de décimales, zéros de fin,
    zéro avant la virgule).
    """

    decimals: int = FRACTION_DIGITS
    trim_zeros: bool = False
    leading_zero: bool = True

    def render(self, value: Decimal) -> str:
        """
        Écrit une valeur dans ce style.

        Si la valeur demande plus de décimales que le style n'en prévoit, les
        décimales nécessaires sont gardées : le rendu ne perd jamais de précision.
        """
        value = to_fixed(value)
        if value.is_zero():
            value = abs(value)
        exponent = value.normalize().as_tuple().exponent
        needed = -exponent if isinstance(exponent, int) and exponent < 0 else 0
        digits = max(self.decimals, needed)

        text = f"{value:.{digits}f}"
        if self.trim_zeros and "." in text:
            text = text.rstrip("0").rstrip(".")
        if not self.leading_zero:
            if text.startswith("0."):
                text = text[1:]
            elif text.startswith("-0."):
                text = "-" + text[2:]
        return text

    @classmethod
    def detect(cls, texts: Iterable[str], default: Optional["NumberFormat"] = None) -> "NumberFormat":
        """
        Déduit le style dominant d'une série de nombres.

        Args:
            texts: Textes verbatim des nombres (ex: valeurs E d'un fichier)
            default: Style renvoyé si la série est vide

        Returns:
            Le style détecté
        """
        widths: List[int] = []
        trailing_zero = False
        bare_point = False
        for text in texts:
            body = text.lstrip("+-")
            if body.startswith("."):
                bare_point = True
            fraction = body.split(".", 1)[1] if "." in body else ""
            widths.append(len(fraction))
            if fraction.endswith("0"):
                trailing_zero = True

        if not widths:
            return default if default is not None else cls()

        decimals = min(max(widths), FRACTION_DIGITS)
        uniform = len(set(widths)) == 1
        # Largeur fixe : un zéro final conservé, ou toutes les valeurs à la même largeur
        trim = not trailing_zero and not (uniform and decimals > 0)
        return cls(decimals=decimals, trim_zeros=trim, leading_zero=not bare_point)

    @property
    def label(self) -> str:
        """Forme texte : "fixed:5", "trim:3", "trim:5:bare"."""
        text = f"{'trim' if self.trim_zeros else 'fixed'}:{self.decimals}"
        return text if self.leading_zero else text + ":bare"

    @classmethod
    def parse(cls, text: str) -> Optional["NumberFormat"]:
        """
        Lit la forme texte d'un style ("auto" -> None : style à détecter).

        Raises:
            ValueError: forme illisible ou plus de 5 décimales
        """
        text = text.strip().lower()
        if text == "auto":
            return None
        parts = text.split(":")
        if len(parts) not in (2, 3) or parts[0] not in ("fixed", "trim") or not parts[1].isdigit():
            raise ValueError(f"format attendu 'auto', 'fixed:N' ou 'trim:N' (reçu {text!r})")
        if len(parts) == 3 and parts[2] != "bare":
            raise ValueError(f"suffixe inconnu {parts[2]!r} (seul 'bare' est accepté)")
        decimals = int(parts[1])
        if decimals > FRACTION_DIGITS:
            raise ValueError(f"{FRACTION_DIGITS} décimales au plus (reçu {decimals})")
        return cls(decimals=decimals, trim_zeros=parts[0] == "trim", leading_zero=len(parts) == 2)


# ==================== LIGNES ====================

@dataclass(frozen=True)
class GcodeLine:
    """
    Une ligne de G-code analysée.

    `raw` est la source de vérité pour la sérialisation ; les autres champs en
    sont dérivés. Les préfixes N.../suffixes *cs sont rangés dans line_number
    et checksum et ne participent ni au classement ni à l'appariement.
    """

    raw: str
    kind: LineKind
    command: Optional[str] = None
    params: Mapping[str, NumericToken] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()
    comment: Optional[str] = None
    argument: Optional[str] = None
    line_number: Optional[str] = None
    checksum: Optional[str] = None
    diagnostic: Optional[str] = None
    spans: Mapping[str, Tuple[int, int]] = field(default_factory=dict, repr=False, compare=False)

    def serialize(self) -> str:
        return self.raw

    def value(self, letter: str) -> Optional[Decimal]:
        token = self.params.get(letter)
        return token.value if token is not None else None

    @property
    def is_motion(self) -> bool:
        return self.command in MOTION_COMMANDS

    @property
    def has_xy(self) -> bool:
        return "X" in self.params or "Y" in self.params

    @property
    def carries_extrusion(self) -> bool:
        """Mouvement G0/G1 portant un E (extrusion, rétraction ou amorçage)."""
        return self.is_motion and "E" in self.params


@dataclass(frozen=True)
class Diagnostic:
    """Problème relevé sur une ligne conservée telle quelle."""

    line_index: int
    message: str
    text: str


@dataclass(frozen=True)
class ParsedFile:
    """Fichier analysé : une ligne par ligne source, dans l'ordre."""

    lines: Tuple[GcodeLine, ...]
    diagnostics: Tuple[Diagnostic, ...]
    flavor: Flavor
    trailing_newline: bool = True
    source: Optional[str] = None

    def to_text(self) -> str:
        return serialize(self.lines, trailing_newline=self.trailing_newline)


# ==================== PARSING ====================

def _matches_marker(text: str, markers: Sequence[str]) -> bool:
    """
    Préfixe insensible à la casse ; un marqueur finissant par une lettre doit
    être suivi d'un séparateur ("; layer 3" oui, "; layer_height" non).
    """
    lowered = text.lower()
    for marker in markers:
        prefix = marker.lower()
        if not lowered.startswith(prefix):
            continue
        rest = lowered[len(prefix):]
        if prefix[-1:].isalnum() and rest[:1] and (rest[0].isalnum() or rest[0] == "_"):
            continue
        return True
    return False


def _normalize_command(letter: str, token: NumericToken) -> str:
    value = token.value
    if value == value.to_integral_value():
        return f"{letter}{int(value)}"
    return f"{letter}{value.normalize()}"


def _classify(command: Optional[str], params: Mapping[str, NumericToken]) -> LineKind:
    if command in MOTION_COMMANDS:
        if "E" in params and ("X" in params or "Y" in params):
            return LineKind.EXTRUDING_MOVE
        return LineKind.TRAVEL_MOVE
    if command == RESET_COMMAND and "E" in params:
        return LineKind.EXTRUSION_RESET
    return LineKind.OTHER


def parse_line(text: str, flavor: Flavor = Flavor.MARLIN, markers: Optional[Sequence[str]] = None) -> GcodeLine:
    """
    Analyse une ligne source (sans saut de ligne).

    Un paramètre illisible ne fait jamais perdre la ligne : elle est gardée
    en kind=OTHER avec un diagnostic.

    Args:
        text: Ligne source
        flavor: Dialecte (choisit les marqueurs de couche par défaut)
        markers: Liste de marqueurs de couche à la place de ceux du dialecte

    Returns:
        Le GcodeLine correspondant
    """
    if "\n" in text:
        raise ValueError("parse_line attend une seule ligne (saut de ligne trouvé)")
    if markers is None:
        markers = DEFAULT_LAYER_MARKERS[flavor]

    stripped = text.strip()
    if not stripped:
        return GcodeLine(raw=text, kind=LineKind.BLANK)

    # ---------- Commentaires ----------
    comment: Optional[str] = None
    semi = text.find(";")
    code_region = text if semi == -1 else text[:semi]
    if semi != -1:
        comment = text[semi + 1:]

    paren_comments: List[str] = []

    def _blank_out(match: "re.Match[str]") -> str:
        paren_comments.append(match.group(0).strip("()"))
        return " " * len(match.group(0))

    # Masque les commentaires (...) sans décaler les positions
    masked = _PAREN_COMMENT_RE.sub(_blank_out, code_region)
    if comment is None and paren_comments:
        comment = paren_comments[0]

    diagnostic: Optional[str] = None
    spans: Dict[str, Tuple[int, int]] = {}

    # ---------- Checksum (*cs) ----------
    checksum: Optional[str] = None
    star = masked.rfind("*")
    if star != -1:
        checksum = masked[star + 1:].strip()
        if not checksum.isdigit():
            diagnostic = f"checksum illisible : {checksum!r}"
        spans["*"] = (star, star + 1 + len(masked[star + 1:].rstrip()))
        masked = masked[:star] + " " * (len(masked) - star)

    if not masked.strip():
        kind = LineKind.COMMENT_ONLY
        if _matches_marker(stripped, markers):
            kind = LineKind.LAYER_MARKER
        elif comment is None:
            kind = LineKind.OTHER
        return GcodeLine(raw=text, kind=kind, comment=comment, checksum=checksum,
                         diagnostic=diagnostic, spans=spans)

    if masked.strip() == "%":
        return GcodeLine(raw=text, kind=LineKind.OTHER, comment=comment)

    # ---------- Mots lettre+nombre ----------
    line_number: Optional[str] = None
    command: Optional[str] = None
    argument: Optional[str] = None
    params: Dict[str, NumericToken] = {}
    flags: List[str] = []
    cursor = 0

    for match in _WORD_RE.finditer(masked):
        stray = masked[cursor:match.start()].strip()
        if stray and diagnostic is None:
            diagnostic = f"texte inattendu : {stray!r}"
        cursor = match.end()

        letter = match.group(1).upper()
        value_text = match.group(2)
        # le préfixe N ne compte pas comme premier mot
        is_first_word = command is None and not params and not flags

        if letter == "N" and line_number is None and is_first_word and value_text.isdigit():
            line_number = value_text
            continue

        if not value_text:
            flags.append(letter)
            continue

        try:
            token = NumericToken.parse(value_text)
        except MalformedParameter as e:
            if diagnostic is None:
                diagnostic = f"paramètre {letter} : {e}"
            continue

        if is_first_word and letter in "GMT":
            command = _normalize_command(letter, token)
            if command in STRING_ARG_COMMANDS:
                argument = masked[match.end():].strip()
                cursor = len(masked)
                break
            continue

        params[letter] = token
        spans[letter] = match.span(2)

    stray = masked[cursor:].strip()
    if stray and diagnostic is None:
        diagnostic = f"texte inattendu : {stray!r}"

    kind = LineKind.OTHER if diagnostic else _classify(command, params)
    if diagnostic:
        logger.debug(f"[Parser] Ligne gardée avec diagnostic ({diagnostic}) : {text!r}")

    return GcodeLine(
        raw=text,
        kind=kind,
        command=command,
        params=params,
        flags=tuple(flags),
        comment=comment,
        argument=argument,
        line_number=line_number,
        checksum=checksum,
        diagnostic=diagnostic,
        spans=spans,
    )


def parse_file(
    text: str,
    flavor: Flavor = Flavor.MARLIN,
    markers: Optional[Sequence[str]] = None,
    source: Optional[str] = None,
) -> ParsedFile:
    """
    Analyse un fichier complet : une GcodeLine par ligne source.

    Args:
        text: Contenu du fichier
        flavor: Dialecte du fichier
        markers: Marqueurs de couche (défaut: ceux du dialecte)
        source: Nom du fichier, pour les logs et les enregistrements

    Returns:
        ParsedFile avec les lignes et les diagnostics (MalformedParameter, ...)
    """
    if not text:
        return ParsedFile(lines=(), diagnostics=(), flavor=flavor, trailing_newline=False, source=source)

    parts = text.split("\n")
    trailing_newline = parts[-1] == ""
    if trailing_newline:
        parts.pop()

    lines: List[GcodeLine] = []
    diagnostics: List[Diagnostic] = []
    for index, part in enumerate(parts):
        line = parse_line(part, flavor, markers)
        lines.append(line)
        if line.diagnostic:
            diagnostics.append(Diagnostic(line_index=index, message=line.diagnostic, text=part))

    if diagnostics:
        logger.info(f"[Parser] {source or '<texte>'} : {len(diagnostics)} diagnostic(s) sur {len(lines)} lignes")

    return ParsedFile(
        lines=tuple(lines),
        diagnostics=tuple(diagnostics),
        flavor=flavor,
        trailing_newline=trailing_newline,
        source=source,
    )


def load_file(path: Path, flavor: Flavor, markers: Optional[Sequence[str]] = None) -> ParsedFile:
    """Lit et analyse un fichier G-code texte (UTF-8)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    return parse_file(text, flavor, markers, source=str(path))


def serialize(lines: Iterable[GcodeLine], trailing_newline: bool = False) -> str:
    """Recolle des lignes en texte, à l'octet près."""
    text = "\n".join(line.raw for line in lines)
    if trailing_newline and text:
        text += "\n"
    return text


# ==================== RÉÉCRITURE ====================

def compute_checksum(text: str) -> int:
    """Checksum RepRap : XOR de tous les octets avant '*'."""
    checksum = 0
    for byte in text.encode("utf-8"):
        checksum ^= byte
    return checksum


def replace_params(line: GcodeLine, updates: Mapping[str, str]) -> GcodeLine:
    """
    Réécrit le texte de certains paramètres d'une ligne et ré-analyse le résultat.

    Le reste de la ligne (espaces, commentaire, préfixe N) est gardé tel quel ;
    un checksum présent est recalculé.

    Args:
        line: Ligne d'origine
        updates: {lettre: nouveau texte numérique}

    Returns:
        La nouvelle ligne

    Raises:
        KeyError: si une lettre n'existe pas dans la ligne
    """
    if not updates:
        return line

    raw = line.raw
    for letter, _ in sorted(updates.items(), key=lambda item: line.spans[item[0]][0], reverse=True):
        start, end = line.spans[letter]
        raw = raw[:start] + updates[letter] + raw[end:]

    if line.checksum is not None and "*" in line.spans:
        # La position de '*' a bougé de la différence de longueur
        shift = len(raw) - len(line.raw)
        star_start, star_end = line.spans["*"]
        star_start += shift
        star_end += shift
        raw = f"{raw[:star_start]}*{compute_checksum(raw[:star_start])}{raw[star_end:]}"

    # Une ligne de commande ne dépend pas des marqueurs de couche
    return parse_line(raw, markers=())
