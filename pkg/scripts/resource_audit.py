"""Resource table for n = 6..N, with the built circuits checked against the closed forms."""
import argparse
from dataclasses import dataclass

from hybrid_hhl.hhl import RESOURCE_FIELDS, audit_resources


@dataclass
class Config:
    n_max: int = 10


def main(cfg: Config):
    print("n   method    " + "  ".join(f"{f:>22s}" for f in RESOURCE_FIELDS) + "  match")
    for n in range(6, cfg.n_max + 1):
        a = audit_resources(n)
        for m, row in a["measured"].items():
            print(f"{n:<3d} {m:9s} " + "  ".join(f"{row[f]:>22d}" for f in RESOURCE_FIELDS)
                  + f"  {row == a['formula'][m]}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n_max", type=int, default=Config.n_max)
    main(Config(**vars(ap.parse_args())))
