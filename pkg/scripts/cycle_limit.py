"""Fate of the loop class of a cycle along the ball-doubling system.

Prints the H_1 rank at every stage, the stage at which the stage-1 class
first maps to zero, and whether some nerve has a cone vertex.
"""
import sys

from coarsehx.cover import build_anti_cech
from coarsehx.limit import DirectSystem, element_is_limit_trivial
from coarsehx.pipeline import build_homology_system
from coarsehx.space import generate

from _common import emit, parser


def main(argv=None):
    p = parser(__doc__)
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--stages", type=int, default=7)
    args = p.parse_args(argv)
    s, _ = generate({"kind": "cycle", "length": args.length})
    system = build_anti_cech(s, "ball-doubling(1)", args.stages, allow_window_cap_override=True)
    hs = build_homology_system(system, (1,))
    d = DirectSystem.from_homology_system(hs, 1)
    verdict = element_is_limit_trivial(d, 1, [1] * d.ranks[0]) if d.ranks[0] else None
    rows = [{"stage": i + 1, "scale": str(lam), "h1_rank": r}
            for i, (lam, r) in enumerate(zip(system.scales, d.ranks))]
    emit(rows, args.json)
    if not args.json:
        print("verdict:", None if verdict is None else verdict.to_dict())
        for w in system.warnings:
            print("warning:", w)


if __name__ == "__main__":
    sys.exit(main())
