"""Train the sphere constraint model, report quality metrics, and leave the
model file where the learned-manifold planning config expects it."""

from pathlib import Path

from seqmanifold.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    out = ROOT / "runs" / "sphere"
    code = cli(["learn", "--config", str(ROOT / "configs" / "sphere_learn.json"), "--out", str(out)])
    if code != 0:
        raise SystemExit(code)
    print(f"\nmodel written to {out / 'model.json'}")
    print("plan on it with:")
    print(f"  seqmanifold plan --task {ROOT / 'configs' / 'hourglass_learned.json'} --out runs/hourglass")


if __name__ == "__main__":
    main()
