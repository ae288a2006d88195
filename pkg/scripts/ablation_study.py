"""Train every ablation variant of the constraint learner on the sphere
dataset and tabulate projection success rates."""

from pathlib import Path

from seqmanifold.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    code = cli(
        [
            "ablate",
            "--config",
            str(ROOT / "configs" / "ablation.json"),
            "--out",
            str(ROOT / "runs" / "ablation"),
        ]
    )
    raise SystemExit(code)


if __name__ == "__main__":
    main()
