"""Sweep the intersection spacing and the per-manifold sample budget on the
3D-point benchmark; writes tables and plots under runs/sweeps/."""

from pathlib import Path

from seqmanifold.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    out = ROOT / "runs" / "sweeps"
    for config in ("rho_sweep.json", "m_sweep.json"):
        code = cli(
            [
                "sweep",
                "--config",
                str(ROOT / "configs" / config),
                "--out",
                str(out / config.split("_")[0]),
            ]
        )
        if code != 0:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
