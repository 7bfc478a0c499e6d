"""CSV emission and ingestion for counts and histograms.

Counts CSV schema (one row per analyzer setting, LF newlines):

    setting_id,hwp_s_deg,qwp_s_deg,hwp_as_deg,qwp_as_deg,n_pp,n_pm,n_mp,n_mm,n_pulses

Angles are decimal degrees with four fractional digits; the PBS "+" port
is the reflected (V) port on both arms by convention. Histogram CSV has
the header ``delay_pulses,counts`` with signed integer delays. Every
output file starts with ``#``-prefixed metadata lines (config hash, seed,
RNG identity, tool version), which readers skip. Writes go to a temporary
file first and are moved into place atomically.
"""

from __future__ import annotations

import os
from pathlib import Path

from .analyzer import AnalyzerSetting, ArmSetting, WaveplateSetting
from .errors import DataFormatError
from .simulate import CoincidenceCounts, DelayHistogram

COUNTS_HEADER = "setting_id,hwp_s_deg,qwp_s_deg,hwp_as_deg,qwp_as_deg,n_pp,n_pm,n_mp,n_mm,n_pulses"
HISTOGRAM_HEADER = "delay_pulses,counts"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _metadata_lines(metadata: dict) -> list[str]:
    return [f"# {key}: {value}" for key, value in metadata.items()]


def write_counts_csv(path, rows, metadata: dict) -> None:
    """Write labelled (setting, counts) rows with metadata headers.

    ``rows`` is an iterable of ``(setting_id, AnalyzerSetting,
    CoincidenceCounts)`` triples.
    """
    path = Path(path)
    lines = _metadata_lines(metadata)
    lines.append(COUNTS_HEADER)
    for setting_id, setting, counts in rows:
        s_pl = setting.stokes.plates
        a_pl = setting.antistokes.plates
        lines.append(
            f"{setting_id},{s_pl.hwp_deg:.4f},{s_pl.qwp_deg:.4f},"
            f"{a_pl.hwp_deg:.4f},{a_pl.qwp_deg:.4f},"
            f"{counts.n_pp},{counts.n_pm},{counts.n_mp},{counts.n_mm},"
            f"{counts.n_pulses}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_counts_csv(path):
    """Read a counts CSV back into labelled settings and counters.

    Settings are rebuilt with the default reflected "+" ports. Returns
    ``(rows, metadata)`` where rows are ``(setting_id, AnalyzerSetting,
    CoincidenceCounts)`` triples.
    """
    path = Path(path)
    metadata: dict[str, str] = {}
    rows = []
    header_seen = False
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition(":")
            if value:
                metadata[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.strip() != COUNTS_HEADER:
                raise DataFormatError(
                    f"{path}:{lineno}: expected header {COUNTS_HEADER!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise DataFormatError(f"{path}:{lineno}: expected 10 columns")
        try:
            setting = AnalyzerSetting(
                stokes=ArmSetting(WaveplateSetting(float(parts[1]), float(parts[2]))),
                antistokes=ArmSetting(WaveplateSetting(float(parts[3]), float(parts[4]))),
            )
            counts = CoincidenceCounts(
                n_pp=int(parts[5]),
                n_pm=int(parts[6]),
                n_mp=int(parts[7]),
                n_mm=int(parts[8]),
                n_pulses=int(parts[9]),
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        rows.append((parts[0], setting, counts))
    if not header_seen:
        raise DataFormatError(f"{path}: no header line found")
    return rows, metadata


def write_histogram_csv(path, histogram: DelayHistogram, metadata: dict) -> None:
    path = Path(path)
    lines = _metadata_lines(metadata)
    lines.append(HISTOGRAM_HEADER)
    for delay, count in zip(histogram.delays(), histogram.counts):
        lines.append(f"{delay},{count}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_density_matrix_csv(path, rho_entries, metadata: dict) -> None:
    """Write a 4x4 complex matrix as a real block then an imaginary block."""
    path = Path(path)
    lines = _metadata_lines(metadata)
    for name, block in (("real", rho_entries.real), ("imag", rho_entries.imag)):
        lines.append(f"# block: {name}")
        for row in block:
            lines.append(",".join(f"{x:.12e}" for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_table_csv(path, header: str, rows, metadata: dict) -> None:
    """Generic long-format table with metadata headers."""
    path = Path(path)
    lines = _metadata_lines(metadata)
    lines.append(header)
    lines.extend(rows)
    _atomic_write(path, "\n".join(lines) + "\n")
