"""Separation check and the duality scenario for a column of a grid."""
import sys

from coarsehx.coarse import ScenarioConfig, check_separation, pd_scenario
from coarsehx.space import generate

from _common import emit, parser


def main(argv=None):
    p = parser(__doc__)
    p.add_argument("--side", type=int, default=33)
    args = p.parse_args(argv)
    s, sub = generate({"kind": "grid", "n": 2, "side": args.side,
                       "subset": {"type": "column"}})
    A = sorted(sub.members)
    sep = check_separation(s, A)
    rows = [{"r": c.r, "d": str(c.d), "components": c.n_components,
             "deep": c.n_deep, "separated": c.separated}
            for c in sep.cells]
    emit(rows, args.json)
    scen = pd_scenario(s, A, ScenarioConfig())
    if not args.json:
        print("separation:", sep.verdict)
        print("scenario:", scen.verdict)
        for f in scen.findings:
            print("  ", f)


if __name__ == "__main__":
    sys.exit(main())
