"""Time the hot kernels under numba and under the plain-Python fallback.

    python benchmarks/bench_kernels.py            # both backends, side by side
    python benchmarks/bench_kernels.py --worker   # current backend only, JSON out

Each backend runs in its own interpreter because the switch is read at import
time.  Outputs are hashed so the two backends are also checked for agreement.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time
from pathlib import Path

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "gtrees" / "fixtures"


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def workloads(scale: int):
    from gtrees import _kernels as K
    from gtrees.gog import GraphOfGroupsSpec
    from gtrees.lfcore import ElementSet, dagger_oracle, gog_oracle, good_pair_values, sum_oracle
    from gtrees.mgraph import MarkedMetricGraph
    from gtrees.refine import orbit_metric
    from gtrees.words import enumerate_words, words_array

    A = GraphOfGroupsSpec.load(FIXTURES / "example10_A.json")
    B = GraphOfGroupsSpec.load(FIXTURES / "example10_B.json")
    G = MarkedMetricGraph.load(FIXTURES / "rose2_phi2.json")
    neck = words_array(4, 4 + scale, cyclic=True)
    ball = words_array(2, 8 + scale)
    lm = sum_oracle(gog_oracle(A), gog_oracle(B))
    gp = good_pair_values(lm, A.alphabet.parse("a b"), A.alphabet.parse("a' b'"))
    sample = list(enumerate_words(A.alphabet, 2))[: 40 + 10 * scale]
    om = orbit_metric(dagger_oracle(lm, gp), sample, check=False)

    yield "enumerate_necklaces", lambda: words_array(4, 4 + scale, cyclic=True)
    yield "enumerate_reduced", lambda: words_array(2, 8 + scale)
    yield "gog_lengths", lambda: A.batch_lengths(*neck)[:1]
    yield "mgraph_lengths", lambda: G.batch_lengths(*ball)[:1]
    S = ElementSet.ball(G.alphabet, 4)
    yield "axiom_scan", lambda: (_axioms(G, S),)
    yield "four_point", lambda: (K.four_point_violation(om.D),)
    yield "alignment", lambda: (K.alignment_violation(om.D, om.D, om.D * 0),)


def _axioms(G, S):
    import numpy as np

    from gtrees.lfcore import check_axioms, mgraph_oracle

    rep = check_axioms(mgraph_oracle(G), S)
    return np.array([rep.ok, rep.witness is not None])


def worker(scale: int, repeat: int) -> dict:
    from gtrees._accel import backend

    out = {"backend": backend(), "results": {}}
    for name, fn in workloads(scale):
        fn()  # warm up (compilation or cache load)
        best = float("inf")
        for _ in range(repeat):
            t = time.perf_counter()
            res = fn()
            best = min(best, time.perf_counter() - t)
        out["results"][name] = {"seconds": best, "digest": _digest(*res)}
    return out


def run_backend(disable: bool, scale: int, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["GTREES_DISABLE_NUMBA"] = "1"
    else:
        env.pop("GTREES_DISABLE_NUMBA", None)
    cmd = [sys.executable, __file__, "--worker", "--scale", str(scale), "--repeat", str(repeat)]
    r = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(r.stdout)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--worker", action="store_true")
    p.add_argument("--scale", type=int, default=0, help="grow every workload (default 0)")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if args.worker:
        print(json.dumps(worker(args.scale, args.repeat)))
        return 0
    fast = run_backend(False, args.scale, args.repeat)
    slow = run_backend(True, args.scale, 1)
    print(f"{'kernel':<22}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}  agree")
    agree_all = True
    for name, f in fast["results"].items():
        s = slow["results"][name]
        agree = f["digest"] == s["digest"]
        agree_all &= agree
        speed = s["seconds"] / f["seconds"] if f["seconds"] > 0 else float("inf")
        print(f"{name:<22}{f['seconds']:>11.4f}s{s['seconds']:>11.4f}s{speed:>9.1f}x  {'yes' if agree else 'NO'}")
    return 0 if agree_all else 1


if __name__ == "__main__":
    sys.exit(main())
