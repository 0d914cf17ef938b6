"""Asymptotic-dimension bounds on grid windows of dimension 1, 2 and 3."""
import sys

from coarsehx.coarse import asdim_bounds
from coarsehx.space import generate

from _common import emit, parser


def main(argv=None):
    p = parser(__doc__)
    p.add_argument("--dims", type=int, nargs="+", default=[1, 2])
    p.add_argument("--side", type=int, default=33)
    args = p.parse_args(argv)
    rows = []
    for n in args.dims:
        s, _ = generate({"kind": "grid", "n": n, "side": args.side})
        rep = asdim_bounds(s, "ball-doubling(1)", range(n + 2), 3, 2)
        rows.append({"window": f"grid({n},{args.side})",
                     "lower": "-inf" if rep.lower_bound is None else rep.lower_bound,
                     "upper_witness": rep.upper_bound_witness, "family": rep.upper_family,
                     "caveats": len(rep.caveats)})
    emit(rows, args.json)


if __name__ == "__main__":
    sys.exit(main())
