"""Seeded Monte Carlo orchestration of the three sweep experiments.

fig4 compares hybrid structures and phase-shifter kinds over SNR for both
links; fig5 sweeps the effective SI-channel estimation error at fixed SNRs;
fig6 varies the receive-chain count per subarray to expose the reach of
digital cancellation against ideal references.

Every random draw site gets its own generator seeded from
hash(master_seed, experiment, site, trial), so results are reproducible
byte-for-byte regardless of worker count, and all schemes within a trial
share the same channel drop for paired comparisons.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigurationError
from .scenario import (AccessLinkDesign, BackhaulLinkDesign, Realization, Scenario,
                       build_scenario, draw_realization, full_digital_backhaul_se)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "scheme", "link", "duplex", "snr_db", "sigma_e", "L",
               "ps_kind", "trial", "se_bps_hz", "rfil_db")

SORT_KEYS = ("experiment", "scheme", "snr_db", "sigma_e", "L", "trial", "link",
             "duplex", "ps_kind")


@dataclass
class SweepResult:
    """All sampled rows of one run, sorted for deterministic output."""

    rows: list[dict]
    config: ExperimentConfig

    def sort(self) -> None:
        self.rows.sort(key=lambda r: tuple(r[k] for k in SORT_KEYS))


def derive_seed(master_seed: int, experiment: str, site: str, trial: int) -> int:
    """Stable 64-bit seed independent of execution order and platform."""
    text = f"{master_seed}|{experiment}|{site}|{trial}"
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _seeder(master_seed: int, experiment: str, trial: int):
    def make(site: str) -> np.random.Generator:
        return np.random.default_rng(derive_seed(master_seed, experiment, site, trial))
    return make


def _row(experiment, scheme, link, duplex, snr_db, sigma_e, chains, ps_kind, trial,
         se, rfil_db) -> dict:
    return {"experiment": experiment, "scheme": scheme, "link": link, "duplex": duplex,
            "snr_db": float(snr_db), "sigma_e": float(sigma_e), "L": int(chains),
            "ps_kind": ps_kind, "trial": int(trial), "se_bps_hz": float(se),
            "rfil_db": float(rfil_db)}


def _draw_cee_noise(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _trial_fig4(cfg: ExperimentConfig, scn: Scenario, trial: int) -> list[dict]:
    seeder = _seeder(cfg.master_seed, "fig4", trial)
    real = draw_realization(scn, seeder)
    rows = []
    for structure in cfg.structures:
        access = AccessLinkDesign(scn, real, structure)
        backhaul = BackhaulLinkDesign(scn, real, access, structure,
                                      cfg.rx_chains_per_subarray)
        for ps_kind in cfg.ps_kinds:
            bh_tx, bh_rx = backhaul.budgets(ps_kind)
            ac_tx, ac_user = access.budgets(ps_kind)
            for snr_db in cfg.snr_db_grid:
                snr = scn.snr_point(snr_db)
                if "backhaul" in cfg.links:
                    results = backhaul.evaluate(ps_kind, snr, duplexes=cfg.duplexes)
                    for duplex, res in results.items():
                        rows.append(_row("fig4", structure, "backhaul", duplex, snr_db,
                                         0.0, cfg.rx_chains_per_subarray, ps_kind, trial,
                                         res.se_bps_hz, bh_tx.total_db + bh_rx.total_db))
                if "access" in cfg.links:
                    wanted = {d if d != "fd_perfect_sic" else "fd" for d in cfg.duplexes}
                    results = access.evaluate(ps_kind, snr, duplexes=tuple(sorted(wanted)))
                    if "fd_perfect_sic" in cfg.duplexes:
                        # no self-interference at the users: equals full duplex
                        results["fd_perfect_sic"] = results["fd"]
                        if "fd" not in cfg.duplexes:
                            del results["fd"]
                    for duplex, res in results.items():
                        rows.append(_row("fig4", structure, "access", duplex, snr_db,
                                         0.0, cfg.rx_chains_per_subarray, ps_kind, trial,
                                         res.se_bps_hz, ac_tx.total_db + ac_user.total_db))
    return rows


def _trial_fig5(cfg: ExperimentConfig, scn: Scenario, trial: int) -> list[dict]:
    seeder = _seeder(cfg.master_seed, "fig5", trial)
    real = draw_realization(scn, seeder)
    chains = cfg.rx_chains_per_subarray
    m = cfg.users * chains
    rows = []
    for structure in cfg.structures:
        access = AccessLinkDesign(scn, real, structure)
        backhaul = BackhaulLinkDesign(scn, real, access, structure, chains)
        cee_noise = _draw_cee_noise(seeder(f"cee/{structure}"),
                                    (cfg.subcarriers, m, cfg.users))
        for ps_kind in cfg.cee_ps_kinds:
            bh_tx, bh_rx = backhaul.budgets(ps_kind)
            rfil_db = bh_tx.total_db + bh_rx.total_db
            for snr_db in cfg.cee_snrs_db:
                snr = scn.snr_point(snr_db)
                for sigma_e in cfg.sigma_e_grid:
                    results = backhaul.evaluate(ps_kind, snr, sigma_e, cee_noise,
                                                duplexes=("fd", "hd"))
                    for duplex, res in results.items():
                        rows.append(_row("fig5", structure, "backhaul", duplex, snr_db,
                                         sigma_e, chains, ps_kind, trial,
                                         res.se_bps_hz, rfil_db))
    return rows


def _trial_fig6(cfg: ExperimentConfig, scn: Scenario, trial: int) -> list[dict]:
    seeder = _seeder(cfg.master_seed, "fig6", trial)
    real = draw_realization(scn, seeder)
    snr = scn.snr_point(cfg.sic_snr_db)
    rows = []
    access = AccessLinkDesign(scn, real, "subarray")
    for chains in cfg.sic_chain_counts:
        backhaul = BackhaulLinkDesign(scn, real, access, "subarray", chains)
        results = backhaul.evaluate("ideal", snr, duplexes=("fd", "fd_perfect_sic"),
                                    include_no_dsic=True)
        rows.append(_row("fig6", "subarray", "backhaul", "fd", cfg.sic_snr_db, 0.0,
                         chains, "ideal", trial, results["fd"].se_bps_hz, 0.0))
        rows.append(_row("fig6", "subarray-no-dsic", "backhaul", "fd", cfg.sic_snr_db,
                         0.0, chains, "ideal", trial, results["fd_no_dsic"].se_bps_hz, 0.0))
        rows.append(_row("fig6", "subarray", "backhaul", "fd_perfect_sic", cfg.sic_snr_db,
                         0.0, chains, "ideal", trial,
                         results["fd_perfect_sic"].se_bps_hz, 0.0))
    fc_access = AccessLinkDesign(scn, real, "fully-connected")
    fc = BackhaulLinkDesign(scn, real, fc_access, "fully-connected",
                            cfg.rx_chains_per_subarray)
    ideal_fc = fc.evaluate("ideal", snr, duplexes=("fd_perfect_sic",))
    rows.append(_row("fig6", "fully-connected", "backhaul", "fd_perfect_sic",
                     cfg.sic_snr_db, 0.0, cfg.rx_chains_per_subarray, "ideal", trial,
                     ideal_fc["fd_perfect_sic"].se_bps_hz, 0.0))
    digital = full_digital_backhaul_se(real, scn, snr)
    rows.append(_row("fig6", "full-digital", "backhaul", "fd_perfect_sic", cfg.sic_snr_db,
                     0.0, 0, "ideal", trial, digital.se_bps_hz, 0.0))
    return rows


_TRIALS = {"fig4": _trial_fig4, "fig5": _trial_fig5, "fig6": _trial_fig6}


def run_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Run the configured experiments over all trials; deterministic in the seed.

    A failing trial is logged and skipped; more than 10 percent failures
    abort the run.
    """
    cfg.validate()
    tasks = [(experiment, trial) for experiment in cfg.experiments
             for trial in range(cfg.trials)]
    scenarios = {}
    for experiment in cfg.experiments:
        exp_cfg = cfg
        if experiment == "fig5":
            exp_cfg = replace(cfg, backhaul_distance_m=cfg.cee_backhaul_distance_m)
        elif experiment == "fig6":
            exp_cfg = replace(cfg, backhaul_distance_m=cfg.sic_backhaul_distance_m)
        scenarios[experiment] = build_scenario(exp_cfg)

    failures: list[tuple[str, int, Exception]] = []

    def run_task(task):
        experiment, trial = task
        try:
            return _TRIALS[experiment](cfg, scenarios[experiment], trial)
        except Exception as exc:  # noqa: BLE001 - sweep keeps going, counted below
            log.warning("trial failed: experiment=%s trial=%d master_seed=%d: %s",
                        experiment, trial, cfg.master_seed, exc)
            failures.append((experiment, trial, exc))
            return []

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            chunks = list(pool.map(run_task, tasks))
    else:
        chunks = [run_task(t) for t in tasks]

    if len(failures) > 0.1 * len(tasks):
        raise RuntimeError(
            f"{len(failures)} of {len(tasks)} trials failed; first error: {failures[0][2]}")

    result = SweepResult([row for chunk in chunks for row in chunk], cfg)
    result.sort()
    return result


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv(result: SweepResult, path) -> None:
    """UTF-8 CSV with the fixed column set, floats at 6 significant digits."""
    if not result.rows:
        raise ConfigurationError("empty-result: nothing to write")
    result.sort()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([_format_cell(row[c]) for c in CSV_COLUMNS])


def read_csv(path) -> list[dict]:
    """Read back a results CSV with numeric fields restored."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            record["snr_db"] = float(record["snr_db"])
            record["sigma_e"] = float(record["sigma_e"])
            record["L"] = int(record["L"])
            record["trial"] = int(record["trial"])
            record["se_bps_hz"] = float(record["se_bps_hz"])
            record["rfil_db"] = float(record["rfil_db"])
            out.append(record)
    return out


FIGURE_VIEWS = {
    "fig4a": {"experiment": "fig4", "link": "backhaul",
              "keys": ("scheme", "duplex", "ps_kind", "snr_db")},
    "fig4b": {"experiment": "fig4", "link": "access",
              "keys": ("scheme", "duplex", "ps_kind", "snr_db")},
    "fig5a": {"experiment": "fig5", "ps_kind": "active",
              "keys": ("scheme", "duplex", "snr_db", "sigma_e")},
    "fig5b": {"experiment": "fig5", "ps_kind": "passive",
              "keys": ("scheme", "duplex", "snr_db", "sigma_e")},
    "fig6": {"experiment": "fig6", "keys": ("scheme", "duplex", "L")},
}

AGGREGATE_COLUMNS = ("figure", "scheme", "link", "duplex", "ps_kind", "snr_db",
                     "sigma_e", "L", "se_mean", "se_std", "num_trials")


def aggregate_figure(rows: list[dict], figure: str) -> list[dict]:
    """Mean and standard deviation of SE per grid cell of one figure view."""
    if figure not in FIGURE_VIEWS:
        raise ConfigurationError(
            f"figure-id: {figure!r} not one of {tuple(FIGURE_VIEWS)}")
    view = FIGURE_VIEWS[figure]
    keys = view["keys"]
    filters = {k: v for k, v in view.items() if k != "keys"}
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if any(row[k] != v for k, v in filters.items()):
            continue
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for group_key in sorted(groups, key=lambda g: tuple(map(str, g))):
        members = groups[group_key]
        se = np.array([m["se_bps_hz"] for m in members])
        cell = dict(members[0])
        cell.update({
            "figure": figure,
            "se_mean": float(se.mean()),
            "se_std": float(se.std(ddof=1)) if len(se) > 1 else 0.0,
            "num_trials": len(se),
        })
        out.append({c: cell.get(c, "") for c in AGGREGATE_COLUMNS})
    return out


def write_figure_csv(rows: list[dict], figures: list[str], path) -> None:
    aggregated = [cell for figure in figures for cell in aggregate_figure(rows, figure)]
    if not aggregated:
        raise ConfigurationError("empty-result: no rows match the requested figures")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for cell in aggregated:
            writer.writerow([_format_cell(cell[c]) for c in AGGREGATE_COLUMNS])
