"""Bundled example networks and their distinguished node sets.

The package ships small fixture networks in all three file formats.  For the
cores — subnetworks studied with a fixed amplifying set M — this module also
records which reactions and which M to use, keyed by core name.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from hyperamp.hypergraph import Hypergraph
from hyperamp.io import NetworkDocument, load_network

__all__ = [
    "dataset_path",
    "list_datasets",
    "load_dataset",
    "CoreDefinition",
    "CORES",
    "core_subnet",
]


def dataset_path(name: str) -> Path:
    """Filesystem path of a bundled network file (e.g. ``"triangle.mat"``)."""
    path = Path(str(resources.files("hyperamp") / "data" / name))
    if not path.is_file():
        raise FileNotFoundError(
            f"no bundled dataset {name!r}; available: "
            f"{', '.join(list_datasets())}")
    return path


def list_datasets() -> tuple[str, ...]:
    """Names of all bundled network files."""
    data_dir = Path(str(resources.files("hyperamp") / "data"))
    return tuple(sorted(p.name for p in data_dir.iterdir() if p.is_file()))


def load_dataset(name: str) -> tuple[Hypergraph, NetworkDocument]:
    """Load a bundled network by file name."""
    return load_network(dataset_path(name))


@dataclass(frozen=True)
class CoreDefinition:
    """A core: a dataset, the reaction subset, and the amplifying set M."""

    dataset: str
    reactions: tuple[str, ...]
    amplifying: frozenset[str]


CORES: dict[str, CoreDefinition] = {
    # whole-file cores: every bundled reaction participates
    "formose_green": CoreDefinition(
        "formose_green_core.txt",
        ("R1", "R2", "R3", "R5", "R6", "R9", "R38"),
        frozenset({"C2a", "C2b", "C3a", "C3b", "C4a", "C4b", "C5c"})),
    "formose_blue": CoreDefinition(
        "formose_blue_core.txt",
        ("R4", "R5", "R7", "R10", "R12", "R16", "R37"),
        frozenset({"C3b", "C3c", "C4b", "C4c", "C5d", "C5e", "C6e"})),
    "formose_red": CoreDefinition(
        "formose_red_core.txt",
        ("R1", "R2", "R3", "R5", "R6", "R8", "R11", "R13", "R17", "R20",
         "R34"),
        frozenset({"C2a", "C2b", "C3a", "C3b", "C4a", "C4b", "C5a", "C5b",
                   "C6a", "C6b", "C7b"})),
    "ecoli_green": CoreDefinition(
        "ecoli_green_core.json", ("R18", "R20", "R41"),
        frozenset({"atp_c", "h_c", "pi_c"})),
    "ecoli_blue": CoreDefinition(
        "ecoli_blue_core.json", ("R18", "R20", "R42"),
        frozenset({"atp_c", "h_c", "pi_c"})),
    "ecoli_red": CoreDefinition(
        "ecoli_red_core.json", ("R13", "R18", "R20"),
        frozenset({"atp_c", "h_c", "pi_c"})),
    # cores carved out of the 13-reaction E. coli subnetwork
    "ecoli_core1": CoreDefinition(
        "ecoli_13.txt", ("R7", "R12"), frozenset({"h_c", "nadp_c"})),
    "ecoli_core2": CoreDefinition(
        "ecoli_13.txt", ("R11", "R12"), frozenset({"h_c", "glu__L_c"})),
    "ecoli_core3": CoreDefinition(
        "ecoli_13.txt", ("R4", "R5"), frozenset({"adp_c", "atp_c"})),
    "ecoli_core4": CoreDefinition(
        "ecoli_13.txt", ("R1", "R6", "R8", "R9"),
        frozenset({"f6p_c", "fdp_c", "g3p_c", "dhap_c"})),
    "ecoli_core5": CoreDefinition(
        "ecoli_13.txt", ("R1", "R3", "R5", "R6", "R9", "R10"),
        frozenset({"adp_c", "f6p_c", "fdp_c", "h2o_c", "pep_c", "g3p_c"})),
}


def core_subnet(name: str) -> tuple[Hypergraph, frozenset[int]]:
    """A core as a standalone hypergraph plus its M as node indices.

    The hypergraph keeps only the core's reactions (in their recorded order)
    and the species they touch, in the parent dataset's species order.
    """
    core = CORES[name]
    h, doc = load_dataset(core.dataset)
    wanted = set(core.reactions)
    reactions = [entry for entry in doc.reactions if entry[0] in wanted]
    missing = wanted - {rid for rid, _, _ in reactions}
    if missing:
        raise ValueError(f"dataset {core.dataset!r} lacks reaction "
                         f"{sorted(missing)[0]!r}")
    touched = set()
    for _, source, target in reactions:
        touched.update(source)
        touched.update(target)
    species = [name_ for name_ in doc.species if name_ in touched]
    sub = NetworkDocument(core.dataset, species, reactions).to_hypergraph()
    pos = {name_: i for i, name_ in enumerate(sub.nodes)}
    return sub, frozenset(pos[name_] for name_ in core.amplifying)
