"""Stable relative homology ranks of grid, path and tree windows.

Each window should show one class in degree n (the dimension of the
lattice) and nothing else once the system of covers has stabilized.
"""
import sys

from coarsehx.cover import build_anti_cech
from coarsehx.limit import DirectSystem, limit_report
from coarsehx.pipeline import build_homology_system
from coarsehx.space import generate

from _common import emit, parser

WINDOWS = [
    ("path(17)", {"kind": "path", "length": 17}),
    ("grid(1,33)", {"kind": "grid", "n": 1, "side": 33}),
    ("grid(2,33)", {"kind": "grid", "n": 2, "side": 33}),
    ("tree(2,5)", {"kind": "tree", "arity": 2, "depth": 5}),
]


def main(argv=None):
    args = parser(__doc__).parse_args(argv)
    rows = []
    for name, spec in WINDOWS:
        s, _ = generate({**spec, "frontier": "window-boundary"})
        system = build_anti_cech(s, "ball-doubling(1)", 3)
        hs = build_homology_system(system, (0, 1, 2))
        for k in (0, 1, 2):
            rep = limit_report(DirectSystem.from_homology_system(hs, k))
            st = rep.stable
            rows.append({"window": name, "stages": len(system), "degree": k,
                         "stage_ranks": rep.ranks,
                         "stable": None if st is None else st.rank,
                         "determined": st is not None and not st.undetermined})
    emit(rows, args.json)


if __name__ == "__main__":
    sys.exit(main())
