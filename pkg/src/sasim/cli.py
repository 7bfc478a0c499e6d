"""Command-line front end.

Subcommands: ``simulate``, ``chsh``, ``tomography``, ``g2`` and ``sweep``.
Each takes ``--preset`` and/or ``--config`` (the file overrides preset
keys), an optional ``--seed`` override, and writes its artifacts under
``--out``. The analysis modes (``chsh``, ``tomography``) alternatively
accept ``--input`` with a counts CSV produced earlier, or by a real
experiment, in the documented schema.

Exit codes: 0 success, 2 config error, 3 data error, 4 convergence
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analyzer import AnalyzerSetting
from .config import (
    ExperimentConfig,
    PRESETS,
    build_chsh_settings,
    build_effective_rho,
    build_rates,
    build_stokes_singles_state,
    load_config,
)
from .csvio import (
    read_counts_csv,
    write_counts_csv,
    write_density_matrix_csv,
    write_histogram_csv,
    write_table_csv,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateInput,
    IncompleteSettings,
    InsufficientData,
    InvalidMixture,
    InvalidRates,
)
from .estimators import CHSH_PAIR_LABELS, ChshSettings, chsh_from_counts
from .polarization import BELL_STATES, fidelity_to_pure, purity
from .simulate import RNG_NAME, delay_histogram, g2_zero, simulate_settings
from .tomography import TomographySet, tomography_linear, tomography_mle, tomography_settings

VH_CHANNELS = (("VV", 0.0, 0.0), ("VH", 0.0, 90.0), ("HV", 90.0, 0.0), ("HH", 90.0, 90.0))


def _metadata(cfg: ExperimentConfig, command: str, preset: str | None) -> dict:
    return {
        "tool": f"sasim {__version__}",
        "command": command,
        "preset": preset or "-",
        "config-sha256": cfg.sha(),
        "seed": cfg.seed,
        "rng": RNG_NAME,
    }


def _labelled_settings(cfg: ExperimentConfig, rho) -> list[tuple[str, AnalyzerSetting]]:
    channels = cfg["simulate.channels"]
    if channels == "vh4":
        return [
            (label, AnalyzerSetting.linear(s_deg, a_deg))
            for label, s_deg, a_deg in VH_CHANNELS
        ]
    if channels == "chsh":
        return build_chsh_settings(cfg, rho).setting_pairs()
    return tomography_settings(cfg["tomography.mode"])


def _simulate_rows(cfg: ExperimentConfig, labelled: list[tuple[str, AnalyzerSetting]]):
    rho = build_effective_rho(cfg)
    rates = build_rates(cfg)
    counts = simulate_settings(
        rho,
        rates,
        [setting for _, setting in labelled],
        cfg.n_pulses,
        cfg.seed,
        s_single_state=build_stokes_singles_state(cfg),
        as_single_state=None,
    )
    return [(label, setting, c) for (label, setting), c in zip(labelled, counts)]


def run_simulate(cfg: ExperimentConfig, out_dir: Path, preset: str | None) -> int:
    rho = build_effective_rho(cfg)
    rows = _simulate_rows(cfg, _labelled_settings(cfg, rho))
    out_path = out_dir / "counts.csv"
    write_counts_csv(out_path, rows, _metadata(cfg, "simulate", preset))
    print(f"wrote {out_path} ({len(rows)} settings, {cfg.n_pulses} pulses each)")
    for label, _, counts in rows:
        print(
            f"  {label}: pp={counts.n_pp} pm={counts.n_pm} "
            f"mp={counts.n_mp} mm={counts.n_mm}"
        )
    return 0


def _chsh_counts_from_file(path: Path) -> dict:
    rows, _ = read_counts_csv(path)
    if len(rows) != 4:
        raise DataFormatError(f"{path}: CHSH analysis needs exactly 4 rows")
    by_label = {label: counts for label, _, counts in rows}
    if set(by_label) == set(CHSH_PAIR_LABELS):
        return by_label
    # Fall back to the angle structure: two analyzer angles per arm,
    # lower angle first. Waveplate angles are half the analyzer angles.
    s_angles = sorted({row[1].stokes.plates.hwp_deg for row in rows})
    a_angles = sorted({row[1].antistokes.plates.hwp_deg for row in rows})
    if len(s_angles) != 2 or len(a_angles) != 2:
        raise DataFormatError(f"{path}: rows do not form a 2x2 CHSH angle pattern")
    mapping = {}
    for _, setting, counts in rows:
        i = s_angles.index(setting.stokes.plates.hwp_deg)
        j = a_angles.index(setting.antistokes.plates.hwp_deg)
        mapping[CHSH_PAIR_LABELS[2 * i + j]] = counts
    if len(mapping) != 4:
        raise DataFormatError(f"{path}: duplicate CHSH angle pairs")
    return mapping


def run_chsh(cfg: ExperimentConfig, out_dir: Path, preset: str | None,
             input_path: Path | None) -> int:
    if input_path is not None:
        counts_by_pair = _chsh_counts_from_file(input_path)
    else:
        settings = build_chsh_settings(cfg, build_effective_rho(cfg))
        rows = _simulate_rows(cfg, settings.setting_pairs())
        out_path = out_dir / "counts.csv"
        write_counts_csv(out_path, rows, _metadata(cfg, "chsh", preset))
        print(f"wrote {out_path}")
        counts_by_pair = {label: counts for label, _, counts in rows}
    s, e_values = chsh_from_counts(counts_by_pair)
    for label in CHSH_PAIR_LABELS:
        e = e_values[label]
        print(f"E({label}) = {e.value:+.4f} +- {e.stderr:.4f}")
    print(f"S = {s.value:.4f} +- {s.stderr:.4f}")
    return 0


def run_tomography(cfg: ExperimentConfig, out_dir: Path, preset: str | None,
                   input_path: Path | None) -> int:
    if input_path is not None:
        rows, _ = read_counts_csv(input_path)
        pairs = [(setting, counts) for _, setting, counts in rows]
    else:
        labelled = tomography_settings(cfg["tomography.mode"])
        sim_rows = _simulate_rows(cfg, labelled)
        out_path = out_dir / "counts.csv"
        write_counts_csv(out_path, sim_rows, _metadata(cfg, "tomography", preset))
        print(f"wrote {out_path}")
        pairs = [(setting, counts) for _, setting, counts in sim_rows]

    tset = TomographySet.from_counts(pairs, use_all_ports=cfg["tomography.mode"] == "36")
    exit_code = 0
    if cfg["tomography.method"] == "linear":
        from .tomography import project_to_physical

        rho_hat = project_to_physical(tomography_linear(tset))
        method = "linear"
    else:
        result = tomography_mle(
            tset, tol=cfg["tomography.tol"], max_iter=cfg["tomography.max_iter"]
        )
        rho_hat = result.rho
        method = "mle"
        if not result.converged:
            print(
                f"warning: likelihood ascent hit max_iter={cfg['tomography.max_iter']} "
                "before converging",
                file=sys.stderr,
            )
            exit_code = 4

    metadata = _metadata(cfg, "tomography", preset)
    metadata["method"] = method
    rho_path = out_dir / "rho.csv"
    write_density_matrix_csv(rho_path, rho_hat.entries, metadata)
    print(f"wrote {rho_path}")
    print(f"purity = {purity(rho_hat):.4f}")
    for name, bell in BELL_STATES.items():
        print(f"fidelity({name}) = {fidelity_to_pure(rho_hat, bell):.4f}")
    return exit_code


def run_g2(cfg: ExperimentConfig, out_dir: Path, preset: str | None) -> int:
    histogram = delay_histogram(
        build_rates(cfg),
        build_effective_rho(cfg),
        cfg.n_pulses,
        cfg["g2.max_delay"],
        cfg.seed,
        s_single_state=build_stokes_singles_state(cfg),
        as_single_state=None,
    )
    out_path = out_dir / "histogram.csv"
    write_histogram_csv(out_path, histogram, _metadata(cfg, "g2", preset))
    print(f"wrote {out_path}")
    g2 = g2_zero(histogram)
    print(f"g2(0) = {g2.value:.3f} +- {g2.stderr:.3f}")
    return 0


def run_sweep(cfg: ExperimentConfig, out_dir: Path, preset: str | None) -> int:
    parameter = cfg["sweep.parameter"]
    if parameter == "none":
        raise ConfigError("sweep.parameter must be 'theta' or 'shift'")
    values = np.linspace(cfg["sweep.start"], cfg["sweep.stop"], cfg["sweep.steps"])
    key = "crystal.theta_deg" if parameter == "theta" else "spectral.shift_cm1"
    factor = cfg["sweep.calibration_factor"]

    lines = []
    for index, value in enumerate(values):
        stage = dict(cfg.values)
        stage[key] = float(value)
        stage["run.seed"] = int(np.uint64(cfg.seed) ^ np.uint64(0x9E3779B9 * (index + 1)))
        stage_cfg = ExperimentConfig(values=stage)
        rho = build_effective_rho(stage_cfg)
        rows = _simulate_rows(stage_cfg, _labelled_settings(stage_cfg, rho))
        for label, _, counts in rows:
            rate = factor * counts.n_pp / max(counts.n_pulses, 1)
            lines.append(
                f"{parameter},{value:.4f},{label},{counts.n_pp},{counts.n_pm},"
                f"{counts.n_mp},{counts.n_mm},{counts.n_pulses},{rate:.6e}"
            )
    out_path = out_dir / "sweep.csv"
    header = "param,value,setting_id,n_pp,n_pm,n_mp,n_mm,n_pulses,rate_pp"
    write_table_csv(out_path, header, lines, _metadata(cfg, "sweep", preset))
    print(f"wrote {out_path} ({len(values)} values)")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sasim",
        description="Simulate and analyze polarization-entangled photon-pair "
        "coincidence experiments.",
    )
    parser.add_argument("--version", action="version", version=f"sasim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_input in (
        ("simulate", False),
        ("chsh", True),
        ("tomography", True),
        ("g2", False),
        ("sweep", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="config file path")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named scenario")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out", type=Path, default=Path("sasim-out"))
        if needs_input:
            p.add_argument("--input", type=Path, help="analyze an existing counts CSV")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    input_path = getattr(args, "input", None)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        if input_path is not None and args.config is None and args.preset is None:
            # Pure analysis runs do not need run parameters.
            overrides.setdefault("run.seed", 0)
            overrides["run.n_pulses"] = 0
        config_text = None
        source = "<defaults>"
        if args.config is not None:
            config_text = Path(args.config).read_text(encoding="utf-8")
            source = str(args.config)
        cfg = load_config(
            preset=args.preset,
            config_text=config_text,
            source=source,
            overrides=overrides,
        )
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return run_simulate(cfg, args.out, args.preset)
        if args.command == "chsh":
            return run_chsh(cfg, args.out, args.preset, input_path)
        if args.command == "tomography":
            return run_tomography(cfg, args.out, args.preset, input_path)
        if args.command == "g2":
            return run_g2(cfg, args.out, args.preset)
        return run_sweep(cfg, args.out, args.preset)
    except (ConfigError, InvalidRates, InvalidMixture) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, InsufficientData, IncompleteSettings, DegenerateInput) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
