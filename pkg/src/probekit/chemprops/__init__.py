"""Molecular properties computed from SMILES: atom counts, functional groups, pairs."""

from probekit.chemprops.patterns import (
    AtomPredicate,
    BondPredicate,
    Group,
    Pattern,
    RingConstraint,
    RingQuery,
    UnknownGroupError,
    default_library,
    detect_group,
    group_matches,
    group_names,
    load_library,
    match_pattern,
    perceive_rings,
    resolve_group,
)
from probekit.chemprops.labels import RecordError, compute_label_table, count_atoms, property_names, write_error_sidecar
from probekit.chemprops.pairs import (
    DisconnectedError,
    MolPair,
    RemovalError,
    TooSmallError,
    ValenceRepairError,
    gen_pairs,
    read_pairs_csv,
    remove_group,
    write_pairs,
)
