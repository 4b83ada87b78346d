"""Re-run the GHZ-family search and rewrite the committed cached setup."""
import argparse
import json
import time
from pathlib import Path

from hidden_influence.correlations import ghz_family, violation_search
from hidden_influence.locality_lp import decompose_quantum

OUT = Path(__file__).resolve().parents[1] / "src" / "hidden_influence" / "data" / "cached_setup.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--restarts", type=int, default=200)
    ap.add_argument("--sweeps", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    t0 = time.time()
    res = violation_search(ghz_family(4), restarts=args.restarts, sweeps=args.sweeps, seed=args.seed)
    lp = decompose_quantum(res.setup)
    meta = {
        "family": "ghz",
        "params": [float(v) for v in res.params],
        "setup": res.setup.to_dict(),
        "denominator": 10 ** 6,
        "screening_score": res.screening_score,
        "lp_status": lp.status,
        "certified": bool(res.certified),
        "margin": str(res.margin) if res.certified else None,
        "rounding_bound": lp.rounding_bound,
        "certificate": lp.certificate.dumps() if lp.certificate is not None else None,
        "search": {"restarts": args.restarts, "sweeps": args.sweeps, "seed": args.seed,
                   "seconds": round(time.time() - t0, 1)},
    }
    args.out.write_text(json.dumps(meta, indent=1) + "\n")
    print(f"screening score {res.screening_score:.6g}, lp {lp.status}, certified {res.certified}")


if __name__ == "__main__":
    main()
