"""Reading, writing, and replaying amplification networks.

Three interchangeable on-disk formats carry a network: a JSON document (the
canonical one), a plain-text reaction list, and a matrix pair.  All three
round-trip bit-exactly through :func:`save_network` / :func:`load_network`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from hyperamp.hypergraph import Hypergraph

__all__ = [
    "ParseError",
    "NetworkDocument",
    "RunRecord",
    "parse_reaction",
    "format_reaction",
    "load_network",
    "save_network",
    "replay",
]


class ParseError(ValueError):
    """A malformed reaction line or network file.

    ``offset`` is the byte position (UTF-8) of the failure within the parsed
    text; ``line_no`` is set when the text came from a multi-line file.
    """

    def __init__(self, message: str, *, offset: int = 0,
                 line_no: int | None = None):
        prefix = f"line {line_no}, " if line_no is not None else ""
        super().__init__(f"{prefix}byte {offset}: {message}")
        self.offset = offset
        self.line_no = line_no


_IDENT_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def parse_reaction(line: str) -> tuple[dict[str, int], dict[str, int]]:
    """Parse ``"adp_c + pi_c + 4 h_e -> atp_c + 3 h_c + h2o_c"`` into
    source and target multiplicity maps.

    Grammar: ``term ("+" term)* ("->" | "→") term ("+" term)*`` where a term
    is an optional positive integer coefficient (adjacent or space-separated;
    default 1) followed by an identifier of ``[A-Za-z0-9_]+``.  A leading
    digit run followed by more identifier characters is read as the
    coefficient, so a species name cannot begin with a digit unless it is
    all digits.  Repeated species on one side accumulate.  Raises
    :class:`ParseError` on anything else, including a zero coefficient.
    """
    i, n = 0, len(line)

    def skip_ws() -> None:
        nonlocal i
        while i < n and line[i] in " \t":
            i += 1

    def fail(message: str) -> ParseError:
        return ParseError(message, offset=_byte_offset(line, i))

    def term() -> tuple[str, int]:
        nonlocal i
        skip_ws()
        start = i
        while i < n and line[i].isdigit():
            i += 1
        digits = line[start:i]
        skip_ws()
        ident_start = i
        while i < n and line[i] in _IDENT_CHARS:
            i += 1
        ident = line[ident_start:i]
        if not ident:
            if digits:
                # a bare digit run is its own (numeric) identifier
                return digits, 1
            raise fail("expected a species identifier")
        coeff = int(digits) if digits else 1
        if digits and coeff == 0:
            i = start
            raise fail("zero coefficient")
        return ident, coeff

    def side() -> dict[str, int]:
        nonlocal i
        out: dict[str, int] = {}
        while True:
            name, coeff = term()
            out[name] = out.get(name, 0) + coeff
            skip_ws()
            if i < n and line[i] == "+":
                i += 1
                continue
            return out

    source = side()
    skip_ws()
    if line.startswith("->", i):
        i += 2
    elif i < n and line[i] == "→":
        i += 1
    else:
        raise fail("expected '->'")
    target = side()
    skip_ws()
    if i < n:
        raise fail("unexpected trailing text")
    return source, target


def format_reaction(source: Mapping[str, int], target: Mapping[str, int]) -> str:
    """The inverse of :func:`parse_reaction`: ``"a + 2 b -> c"``."""

    def side(mapping: Mapping[str, int]) -> str:
        parts = []
        for name, coeff in mapping.items():
            parts.append(name if coeff == 1 else f"{coeff} {name}")
        return " + ".join(parts)

    return f"{side(source)} -> {side(target)}"


@dataclass
class NetworkDocument:
    """A named network: species, reactions, and optional feature sets.

    Parameters
    ----------
    name : str
        Display name of the network.
    species : list of str
        Node identifiers in matrix row order.
    reactions : list of (str, dict, dict)
        Per reaction: identifier, source multiplicity map, target
        multiplicity map.  Coefficients are positive integers.
    sources, sinks, non_amplifying : frozenset of str
        Optional feature sets, by species identifier.
    """

    name: str
    species: list[str]
    reactions: list[tuple[str, dict[str, int], dict[str, int]]]
    sources: frozenset[str] = frozenset()
    sinks: frozenset[str] = frozenset()
    non_amplifying: frozenset[str] = frozenset()

    def validate(self, *, permissive: bool = False) -> None:
        """Check invariants; under ``permissive`` unknown species referenced
        by reactions are appended to the species list instead of rejected."""
        known = set(self.species)
        if len(known) != len(self.species):
            raise ValueError("duplicate species identifier")
        for rid, source, target in self.reactions:
            for mapping in (source, target):
                for name, coeff in mapping.items():
                    if not (isinstance(coeff, int) and coeff > 0):
                        raise ValueError(
                            f"reaction {rid!r}: coefficient of {name!r} "
                            "must be a positive integer")
                    if name not in known:
                        if not permissive:
                            raise ValueError(
                                f"reaction {rid!r} references unknown "
                                f"species {name!r}")
                        known.add(name)
                        self.species.append(name)
        for label, feature in (("sources", self.sources),
                               ("sinks", self.sinks),
                               ("non_amplifying", self.non_amplifying)):
            unknown = feature - known
            if unknown:
                raise ValueError(
                    f"feature set {label} references unknown species "
                    f"{sorted(unknown)[0]!r}")

    def to_hypergraph(self) -> Hypergraph:
        """Build the incidence-matrix form (rows follow ``species`` order)."""
        pos = {name: i for i, name in enumerate(self.species)}
        n, a = len(self.species), len(self.reactions)
        s = np.zeros((n, a), dtype=np.int64)
        t = np.zeros((n, a), dtype=np.int64)
        for j, (_, source, target) in enumerate(self.reactions):
            for name, coeff in source.items():
                s[pos[name], j] = coeff
            for name, coeff in target.items():
                t[pos[name], j] = coeff
        return Hypergraph(tuple(self.species),
                          tuple(rid for rid, _, _ in self.reactions), s, t)

    @classmethod
    def from_hypergraph(cls, h: Hypergraph, name: str = "network"
                        ) -> "NetworkDocument":
        reactions = []
        for j, rid in enumerate(h.arcs):
            source = {h.nodes[i]: int(h.input_matrix[i, j])
                      for i in np.flatnonzero(h.input_matrix[:, j])}
            target = {h.nodes[i]: int(h.output_matrix[i, j])
                      for i in np.flatnonzero(h.output_matrix[:, j])}
            reactions.append((rid, source, target))
        return cls(name, list(h.nodes), reactions)

    def feature_indices(self, h: Hypergraph) -> tuple[frozenset[int], ...]:
        """The three feature sets as node indices of ``h``."""
        pos = {name: i for i, name in enumerate(h.nodes)}
        return tuple(
            frozenset(pos[name] for name in feature)
            for feature in (self.sources, self.sinks, self.non_amplifying))


# --- the three formats --------------------------------------------------------


def document_to_payload(doc: NetworkDocument) -> dict:
    """The JSON-ready dict form of a document (inverse of
    :func:`document_from_payload`)."""
    payload: dict = {
        "name": doc.name,
        "species": list(doc.species),
        "reactions": [
            {"id": rid, "source": dict(source), "target": dict(target)}
            for rid, source, target in doc.reactions
        ],
    }
    features = {
        key: sorted(value)
        for key, value in (("sources", doc.sources), ("sinks", doc.sinks),
                           ("non_amplifying", doc.non_amplifying))
        if value
    }
    if features:
        payload["features"] = features
    return payload


def document_from_payload(payload: dict, *,
                          permissive: bool = False) -> NetworkDocument:
    """Rebuild a validated document from its dict form."""
    if not isinstance(payload, dict):
        raise ParseError("expected a JSON object")
    try:
        species = [str(name) for name in payload.get("species", [])]
        reactions = [
            (str(entry["id"]),
             {str(k): int(v) for k, v in entry["source"].items()},
             {str(k): int(v) for k, v in entry["target"].items()})
            for entry in payload["reactions"]
        ]
    except (KeyError, TypeError, AttributeError) as err:
        raise ParseError(f"malformed network document: {err}") from None
    features = payload.get("features", {})
    doc = NetworkDocument(
        str(payload.get("name", "network")), species, reactions,
        frozenset(features.get("sources", ())),
        frozenset(features.get("sinks", ())),
        frozenset(features.get("non_amplifying", ())))
    doc.validate(permissive=permissive)
    return doc


def _doc_to_json(doc: NetworkDocument) -> str:
    return json.dumps(document_to_payload(doc), indent=2) + "\n"


def _doc_from_json(text: str, permissive: bool) -> NetworkDocument:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err.msg}", offset=err.pos) from None
    return document_from_payload(payload, permissive=permissive)


def _doc_to_reactions(doc: NetworkDocument) -> str:
    lines = [f"# {doc.name}"]
    for rid, source, target in doc.reactions:
        lines.append(f"{rid}: {format_reaction(source, target)}")
    return "\n".join(lines) + "\n"


def _doc_from_reactions(text: str, name: str) -> NetworkDocument:
    species: list[str] = []
    seen: set[str] = set()
    reactions: list[tuple[str, dict[str, int], dict[str, int]]] = []
    title = name
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            comment = line.lstrip("#").strip()
            if comment and line_no == 1:
                title = comment
            continue
        if not line:
            continue
        rid = f"R{len(reactions) + 1}"
        head, sep, rest = line.partition(":")
        if sep and all(ch in _IDENT_CHARS for ch in head.strip()) \
                and head.strip():
            rid, line = head.strip(), rest.strip()
        try:
            source, target = parse_reaction(line)
        except ParseError as err:
            raise ParseError(str(err).split(": ", 1)[1], offset=err.offset,
                             line_no=line_no) from None
        for mapping in (source, target):
            for ident in mapping:
                if ident not in seen:
                    seen.add(ident)
                    species.append(ident)
        reactions.append((rid, source, target))
    if not reactions:
        raise ParseError("no reactions found")
    if len({rid for rid, _, _ in reactions}) != len(reactions):
        raise ParseError("duplicate reaction identifier")
    return NetworkDocument(title, species, reactions)


def _doc_to_matrix(doc: NetworkDocument) -> str:
    h = doc.to_hypergraph()
    width = max((len(str(int(v)))
                 for v in np.concatenate(
                     [h.input_matrix.ravel(), h.output_matrix.ravel()])),
                default=1)

    def block(matrix: np.ndarray) -> list[str]:
        return [" ".join(f"{int(v):>{width}}" for v in row) for row in matrix]

    lines = [f"# {doc.name}", " ".join(h.nodes), " ".join(h.arcs)]
    lines += block(h.input_matrix)
    lines.append("")
    lines += block(h.output_matrix)
    return "\n".join(lines) + "\n"


def _doc_from_matrix(text: str, name: str) -> NetworkDocument:
    title = name
    lines = text.splitlines()
    body: list[tuple[int, str]] = []
    for line_no, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            comment = stripped.lstrip("#").strip()
            if comment and line_no == 1:
                title = comment
            continue
        body.append((line_no, raw))
    while body and not body[0][1].strip():
        body.pop(0)
    while body and not body[-1][1].strip():
        body.pop()
    if len(body) < 2:
        raise ParseError("expected node and arc name header rows")
    nodes = body[0][1].split()
    arcs = body[1][1].split()
    rows = body[2:]
    expected = 2 * len(nodes) + 1
    if len(rows) != expected:
        raise ParseError(
            f"expected {len(nodes)} matrix rows, a blank line, and "
            f"{len(nodes)} more rows; found {len(rows)} lines",
            line_no=rows[0][0] if rows else body[1][0])
    blank_no, blank = rows[len(nodes)]
    if blank.strip():
        raise ParseError("expected a blank line between the two matrices",
                         line_no=blank_no)

    def block(chunk: list[tuple[int, str]]) -> np.ndarray:
        values = []
        for line_no, raw in chunk:
            cells = raw.split()
            if len(cells) != len(arcs):
                raise ParseError(
                    f"expected {len(arcs)} entries, found {len(cells)}",
                    line_no=line_no)
            try:
                values.append([int(cell) for cell in cells])
            except ValueError:
                raise ParseError("matrix entries must be integers",
                                 line_no=line_no) from None
        return np.array(values, dtype=np.int64).reshape(len(nodes), len(arcs))

    s = block(rows[:len(nodes)])
    t = block(rows[len(nodes) + 1:])
    reactions = []
    for j, rid in enumerate(arcs):
        source = {nodes[i]: int(s[i, j]) for i in np.flatnonzero(s[:, j])}
        target = {nodes[i]: int(t[i, j]) for i in np.flatnonzero(t[:, j])}
        reactions.append((rid, source, target))
    doc = NetworkDocument(title, list(nodes), reactions)
    doc.validate()
    return doc


_WRITERS = {
    "json": _doc_to_json,
    "reactions": _doc_to_reactions,
    "matrix": _doc_to_matrix,
}

_SUFFIX_FORMATS = {".json": "json", ".txt": "reactions", ".mat": "matrix"}


def detect_format(text: str) -> str:
    """``"json"`` if the text opens a JSON value, ``"reactions"`` if any
    line contains an arrow, else ``"matrix"``."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return "json"
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            continue
        if "->" in line or "→" in line:
            return "reactions"
    return "matrix"


def load_network(path: str | Path, *, fmt: str | None = None,
                 permissive: bool = False
                 ) -> tuple[Hypergraph, NetworkDocument]:
    """Read a network file in any of the three formats.

    The format is detected from the content (see :func:`detect_format`)
    unless ``fmt`` is given.  ``permissive`` lets JSON documents reference
    species missing from their species list (they are appended in first-use
    order).  Raises :class:`ParseError` on malformed input — an empty file
    included — and propagates invariant violations from the hypergraph
    constructor.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise ParseError(f"{path}: empty network file")
    fmt = fmt or detect_format(text)
    try:
        if fmt == "json":
            doc = _doc_from_json(text, permissive)
        elif fmt == "reactions":
            doc = _doc_from_reactions(text, path.stem)
        elif fmt == "matrix":
            doc = _doc_from_matrix(text, path.stem)
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except ParseError as err:
        raise ParseError(f"{path}: {err.args[0].split(': ', 1)[-1]}",
                         offset=err.offset, line_no=err.line_no) from None
    return doc.to_hypergraph(), doc


def save_network(doc: NetworkDocument | Hypergraph, path: str | Path,
                 *, fmt: str | None = None) -> None:
    """Write ``doc`` in ``fmt`` (default: by file suffix, else JSON).

    Output is canonical: loading a saved file and saving it again
    reproduces the bytes exactly, in every format.
    """
    if isinstance(doc, Hypergraph):
        doc = NetworkDocument.from_hypergraph(doc)
    path = Path(path)
    fmt = fmt or _SUFFIX_FORMATS.get(path.suffix.lower(), "json")
    if fmt not in _WRITERS:
        raise ValueError(f"unknown format {fmt!r}")
    path.write_text(_WRITERS[fmt](doc), encoding="utf-8")


def network_digest(doc: NetworkDocument) -> str:
    """SHA-256 of the canonical JSON rendering (feature sets included)."""
    return hashlib.sha256(_doc_to_json(doc).encode("utf-8")).hexdigest()


# --- run records --------------------------------------------------------------


@dataclass
class RunRecord:
    """A reproducible record of one solver invocation.

    ``command`` names the operation (``"maf"``, ``"search"``, ...);
    ``config`` snapshots the numeric parameters; ``input_digest`` pins the
    network (see :func:`network_digest`).  ``result`` holds the solver
    outputs keyed by name, and ``timings_ms`` the per-iteration wall-clock
    milliseconds.  :func:`replay` re-runs the command and checks alpha.
    """

    command: str
    config: dict
    input_digest: str
    result: dict
    timings_ms: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {"command": self.command, "config": self.config,
             "input_digest": self.input_digest, "result": self.result,
             "timings_ms": self.timings_ms}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        payload = json.loads(text)
        return cls(payload["command"], payload["config"],
                   payload["input_digest"], payload["result"],
                   list(payload.get("timings_ms", ())))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _maf_config(config: dict) -> "MafConfig":
    from hyperamp.maf import MafConfig

    return MafConfig(
        epsilon_rho=float(config.get("epsilon_rho", MafConfig.epsilon_rho)),
        max_iterations=int(config.get("max_iterations",
                                      MafConfig.max_iterations)),
        delta=float(config.get("delta", MafConfig.delta)))


def record_run(command: str, doc: NetworkDocument, config: dict,
               *, alpha: float, extra: dict | None = None,
               timings_ms: Iterable[float] = ()) -> RunRecord:
    """Assemble a :class:`RunRecord` for a finished solve."""
    result = {"alpha": alpha}
    result.update(extra or {})
    return RunRecord(command, dict(config), network_digest(doc), result,
                     list(timings_ms))


def replay(record: RunRecord, doc: NetworkDocument,
           *, tolerance: float = 1e-6) -> float:
    """Re-run a record's command on ``doc`` and return the fresh alpha.

    Raises :class:`ValueError` if the document digest differs from the
    recorded one or the fresh alpha strays beyond ``tolerance``.
    """
    from hyperamp.maf import bisection_maf, compute_maf
    from hyperamp.preprocess import solve_by_components
    from hyperamp.subnet import FeatureSpec, find_max_subnet, \
        first_self_amplifying

    digest = network_digest(doc)
    if digest != record.input_digest:
        raise ValueError(
            f"input digest {digest[:12]} does not match the recorded "
            f"{record.input_digest[:12]}")
    h = doc.to_hypergraph()
    cfg = _maf_config(record.config)
    command = record.command
    if command in ("maf", "oracle"):
        pos = {name: i for i, name in enumerate(h.nodes)}
        m = frozenset(pos[name] for name in record.result["m"])
        if command == "maf":
            alpha = compute_maf(h, m, cfg).alpha
        else:
            alpha = bisection_maf(h, m, delta=cfg.delta)
    elif command in ("search", "first", "components"):
        sources, sinks, non_amp = doc.feature_indices(h)
        feats = FeatureSpec(sources, sinks, non_amp)
        if command == "search":
            alpha = find_max_subnet(h, feats, cfg).alpha
        elif command == "first":
            sol = first_self_amplifying(h, feats, cfg)
            alpha = 0.0 if sol is None else sol.alpha
        else:
            alpha = solve_by_components(h, feats, cfg).alpha
    else:
        raise ValueError(f"cannot replay command {record.command!r}")
    recorded = float(record.result["alpha"])
    if abs(alpha - recorded) > tolerance:
        raise ValueError(
            f"replayed alpha {alpha!r} differs from recorded {recorded!r} "
            f"by more than {tolerance}")
    return alpha
