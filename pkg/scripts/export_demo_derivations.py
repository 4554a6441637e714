#!/usr/bin/env python3
"""Generate the demonstration derivation scripts, replay each, and write the
script plus DOT renderings of the start and end networks.

Usage: python scripts/export_demo_derivations.py [--out DIR] [--convex NAME]
"""

import argparse
import json
import sys
from pathlib import Path

from divnet import get_generator, resolve_coordinates, to_dot
from divnet.derivations import (centroid_insertion_roundtrip,
                                connection_contraction,
                                line_connection_deformation,
                                parallelogram_scripts)
from divnet.netmodel import network_from_json
from divnet.rewrite import replay


def export(name: str, script: dict, out: Path, spec) -> bool:
    report = replay(script, spec)
    (out / f"{name}.json").write_text(json.dumps(script, indent=2,
                                                 sort_keys=True) + "\n")
    for tag, key in (("start", "initial"), ("end", "final")):
        net = network_from_json(script[key])
        coords = resolve_coordinates(net, spec)
        (out / f"{name}.{tag}.dot").write_text(to_dot(net, coords))
    steps = " -> ".join(s["rule"] for s in script["steps"])
    print(f"{name}: {steps}")
    print(f"  phi {report.phi_initial:.9f} constant={report.passed} "
          f"max_residual={report.max_residual:.2e}")
    return report.passed


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="derivations_out")
    parser.add_argument("--convex", default="negative_entropy")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = get_generator(args.convex, 2)
    positive = spec.domain.kind == "positive"
    a, b = ((0.5, 0.5), (0.25, 0.75)) if positive else ((0.0, 1.0), (2.0, -1.0))

    ok = export("centroid_insertion_roundtrip",
                centroid_insertion_roundtrip(spec, [a, b], [1.0, 1.0],
                                             (0.4, 0.6) if positive else (1.0, 0.0)),
                out, spec)
    ok &= export("line_connection_deformation",
                 line_connection_deformation(spec, a, b, 1.0, 2.0), out, spec)
    ok &= export("connection_contraction",
                 connection_contraction(spec, a, b, 1.0, 2.0), out, spec)
    q, s = ((0.6, 0.3), (0.2, 0.9)) if positive else ((2.0, 0.0), (0.0, 2.0))
    p = tuple(0.45 * (qi + si) for qi, si in zip(q, s))
    r = tuple(qi + si - pi for qi, si, pi in zip(q, s, p))
    fan, star = parallelogram_scripts(spec, p, q, r, s)
    ok &= export("parallelogram_cycle_to_fans", fan, out, spec)
    ok &= export("parallelogram_star_to_diagonals", star, out, spec)
    print(f"wrote {args.out}/")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
