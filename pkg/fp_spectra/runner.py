"""Preset scans, exponent fits and record output.

A scan runs every (size, trial) cell of an :class:`ExperimentConfig`. Each cell
generates A from the family template with the seed ``derive_seed(seed, size, trial)``,
measures the preset quantity and compares it to the preset bound. Records are
returned in (size, trial) order whatever the worker count; with ``record_timing``
off the elapsed time is written as 0, so the output bytes depend on the config only.
"""

import csv
import io
import json
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
from rich.progress import track
from rich.table import Table

from fp_spectra.config import get_settings
from fp_spectra.errors import ConfigInvalidError, InsufficientDataError
from fp_spectra.field import MAX_MODULUS, is_prime, make_field
from fp_spectra.fset import SetFamilySpec, gen_set
from fp_spectra.parallel import run_tasks
from fp_spectra.presets import PRESET_NAMES, Cell, get_preset, in_window
from fp_spectra.rng import derive_seed

CSV_COLUMNS = (
    "preset",
    "p",
    "card_A",
    "d",
    "trial",
    "seed",
    "measured",
    "bound",
    "ratio",
    "exact",
    "hypothesis_ok",
    "elapsed_s",
)


class ExperimentConfig(BaseModel):
    """A scan: one preset over a grid of set sizes and trials.

    Attributes:
        preset: Preset name (see ``fp_spectra.presets.PRESETS``)
        p: Prime modulus
        family: Template for the generated sets; size and seed are set per cell
        sizes: Set sizes to scan; explicit families always use their own size
        d: Dimension, defaulting to the preset's
        trials: Repetitions per size
        seed: Root seed
        budget: Enumeration budget (defaults to settings)
        workers: Worker processes for independent cells (defaults to settings)
        record_timing: Write wall time into elapsed_s instead of 0
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: str
    p: int
    family: SetFamilySpec
    sizes: list[int] = Field(default_factory=list)
    d: int | None = None
    trials: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    budget: int | None = Field(default=None, ge=1)
    workers: int | None = Field(default=None, ge=1)
    record_timing: bool = False

    @field_validator("preset")
    @classmethod
    def validate_preset(cls, v: str) -> str:
        if v not in PRESET_NAMES:
            msg = f"Unknown preset '{v}'. Expected one of {', '.join(PRESET_NAMES)}"
            raise ValueError(msg)
        return v

    @field_validator("p")
    @classmethod
    def validate_prime(cls, v: int) -> int:
        if v >= MAX_MODULUS or v < 3 or not is_prime(v):
            msg = f"p must be an odd prime below 2**31, got {v}"
            raise ValueError(msg)
        return v

    @model_validator(mode="after")
    def check_grid(self) -> "ExperimentConfig":
        preset = get_preset(self.preset)
        if self.d is not None and self.d not in preset.dims:
            msg = f"Preset {self.preset} supports d in {list(preset.dims)}, got {self.d}"
            raise ValueError(msg)
        if self.family.kind == "explicit":
            size = len(self.family.elements)
            if self.sizes and self.sizes != [size]:
                msg = f"An explicit family has size {size}; sizes {self.sizes} do not apply"
                raise ValueError(msg)
        elif not self.sizes:
            msg = "At least one size is required"
            raise ValueError(msg)
        for size in self.sizes:
            if not 1 <= size <= self.p:
                msg = f"Size {size} is outside [1, p={self.p}]"
                raise ValueError(msg)
        return self

    @property
    def dim(self) -> int:
        return get_preset(self.preset).default_d if self.d is None else self.d

    @property
    def cell_sizes(self) -> list[int]:
        if self.family.kind == "explicit":
            return [len(self.family.elements)]
        return sorted(set(self.sizes))


def make_config(**values: object) -> ExperimentConfig:
    """Validate an experiment description.

    Raises:
        ConfigInvalidError: With pydantic's message if validation fails
    """
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        msg = f"Invalid experiment configuration: {e}"
        logger.error(msg)
        raise ConfigInvalidError(msg) from e


class ExperimentRecord(BaseModel):
    """One measured (size, trial) cell.

    ``detail`` carries preset-specific diagnostics (active bound branch, component
    cardinalities) for display; it is not part of the CSV/JSON schema.
    """

    model_config = ConfigDict(frozen=True)

    preset: str
    p: int
    card_A: int
    d: int
    trial: int
    seed: int
    measured: int | float
    bound: float
    ratio: float
    exact: bool
    hypothesis_ok: bool
    elapsed_s: float = 0.0
    detail: dict[str, object] = Field(default_factory=dict, exclude=True)

    @property
    def hypothesis_violated(self) -> bool:
        return not self.hypothesis_ok


def _run_cell(cfg: ExperimentConfig, size: int, trial: int, budget: int) -> ExperimentRecord:
    started = time.perf_counter()
    preset = get_preset(cfg.preset)
    ctx = make_field(cfg.p)
    d = cfg.dim
    seed = derive_seed(cfg.seed, size, trial)
    A = gen_set(ctx, cfg.family.with_size(size, seed))
    companions = (
        gen_set(ctx, cfg.family.with_size(size, derive_seed(seed, 1))),
        gen_set(ctx, cfg.family.with_size(size, derive_seed(seed, 2))),
    )
    m = preset.measure(Cell(A=A, d=d, budget=budget, companions=companions))

    hypothesis_ok = m.hypothesis_ok
    if preset.window is not None and not in_window(A.card, cfg.p, preset.window(d)):
        hypothesis_ok = False
    if not hypothesis_ok:
        logger.warning(f"{cfg.preset}: |A|={A.card}, p={cfg.p} is outside the hypotheses")

    return ExperimentRecord(
        preset=cfg.preset,
        p=cfg.p,
        card_A=A.card,
        d=d,
        trial=trial,
        seed=seed,
        measured=m.measured,
        bound=m.bound,
        ratio=m.measured / m.bound if m.bound > 0 else 0.0,
        exact=m.exact,
        hypothesis_ok=hypothesis_ok,
        elapsed_s=time.perf_counter() - started if cfg.record_timing else 0.0,
        detail=m.detail,
    )


def run_scan(cfg: ExperimentConfig, progress: bool = False) -> list[ExperimentRecord]:
    """Run every (size, trial) cell of a scan.

    Args:
        cfg: Validated experiment configuration
        progress: Show a rich progress bar (serial runs only)

    Returns:
        Records in (size, trial) order

    Raises:
        BudgetExceededWithoutCertificateError: For presets that need exact counts
            beyond the budget

    Example:
        >>> cfg = make_config(preset="thm3", p=5, family={"kind": "explicit", "elements": [0, 1]})
        >>> run_scan(cfg)[0].measured
        3
    """
    settings = get_settings()
    budget = settings.budget if cfg.budget is None else cfg.budget
    workers = settings.workers if cfg.workers is None else cfg.workers
    tasks = [(cfg, size, trial, budget) for size in cfg.cell_sizes for trial in range(cfg.trials)]
    logger.info(f"Scanning {cfg.preset} over F_{cfg.p}: {len(tasks)} cells on {workers} workers")

    if progress and workers <= 1:
        return [_run_cell(*task) for task in track(tasks, description=f"{cfg.preset}...")]
    return run_tasks(_run_cell, tasks, workers)


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares fit of log(measured) = slope * log|A| + intercept.

    Attributes:
        slope: Fitted exponent
        intercept: Fitted log-constant
        residual: Root mean square of the log-space residuals
        points: Records used
        lower_bound: True if any measurement was a certificate, in which case the
            slope is a lower-bound slope
    """

    slope: float
    intercept: float
    residual: float
    points: int
    lower_bound: bool


def estimate_exponent(records: Sequence[ExperimentRecord]) -> ExponentFit:
    """Fit the growth exponent of measured against |A|.

    Raises:
        InsufficientDataError: If fewer than two distinct sizes have positive measurements
    """
    usable = [r for r in records if r.measured > 0]
    if len({r.card_A for r in usable}) < 2:
        msg = "Exponent fit needs at least two distinct set sizes"
        logger.error(msg)
        raise InsufficientDataError(msg)
    x = np.log([r.card_A for r in usable])
    y = np.log([float(r.measured) for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=float(np.sqrt(np.mean(residuals**2))),
        points=len(usable),
        lower_bound=any(not r.exact for r in usable),
    )


def _format_number(value: float) -> str:
    """Integers verbatim, everything else at 6 significant digits."""
    if isinstance(value, int):
        return str(value)
    if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.6g}"


def _cell_text(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int | float):
        return _format_number(value)
    return str(value)


def record_row(record: ExperimentRecord) -> dict[str, str]:
    """A record as CSV cells in schema order."""
    data = record.model_dump()
    return {column: _cell_text(data[column]) for column in CSV_COLUMNS}


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record_row(record))
    return buffer.getvalue()


def records_to_json(records: Sequence[ExperimentRecord]) -> str:
    """JSON array mirroring the CSV schema, numbers at the same precision."""
    rows = []
    for record in records:
        texts = record_row(record)
        row: dict[str, object] = {"preset": record.preset}
        for column in CSV_COLUMNS[1:]:
            # "true"/"false" and the formatted numbers are valid JSON literals
            row[column] = json.loads(texts[column])
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def write_records(records: Sequence[ExperimentRecord], path: Path) -> None:
    """Write records as CSV or JSON, chosen by the file suffix.

    Raises:
        ConfigInvalidError: If the suffix is neither .csv nor .json
    """
    suffix = path.suffix.lower()
    if suffix == ".csv":
        text = records_to_csv(records)
    elif suffix == ".json":
        text = records_to_json(records)
    else:
        msg = f"Output file must end in .csv or .json, got '{path.name}'"
        logger.error(msg)
        raise ConfigInvalidError(msg)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {len(records)} records to {path}")


def render_records(records: Sequence[ExperimentRecord]) -> Table:
    """Rich table of records with hypothesis violations highlighted."""
    table = Table(title="Scan results")
    for column in ("|A|", "d", "trial", "measured", "bound", "ratio", "exact", "hypothesis"):
        table.add_column(column, justify="right")
    for record in records:
        row = record_row(record)
        table.add_row(
            row["card_A"],
            row["d"],
            row["trial"],
            row["measured"],
            row["bound"],
            row["ratio"],
            "yes" if record.exact else "[yellow]lower bound[/yellow]",
            "ok" if record.hypothesis_ok else "[red]violated[/red]",
        )
    return table
