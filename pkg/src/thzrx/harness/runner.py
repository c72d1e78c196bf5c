"""Scenario runners: wire the pipeline modules, execute sweeps, write CSV
artifacts plus a metadata sidecar, and render figures.

Every run resolves its configuration first, validates it, then writes
into the output directory: one or more CSV files, ``run_metadata.json``
(resolved config + seed + toolkit version) and, unless disabled, PNG
figures.  All randomness flows from the master seed through per-cell
``SeedSequence`` derivations, so reruns are byte-identical regardless of
thread count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import __version__, classify as clf, detector, equalize, predict
from ..channel import AbsorptionTable, ChannelModel, frequency_response, impulse_response
from ..signals import SampledSignal, convolve
from ..waveform import (
    GaussianPulseParams,
    RaisedCosineParams,
    SlotConfig,
    constellation,
    gaussian_pulse,
    modulate_cbm,
    modulate_pbm,
)
from .config import ConfigError, ExperimentConfig

__all__ = [
    "NumericFailure",
    "run",
    "run_channel_response",
    "run_mode_detect_sweep",
    "run_classify_sweep",
    "run_predict",
]


class NumericFailure(RuntimeError):
    """Non-convergence or singularity while executing a scenario."""


# Exceptions that indicate a numeric breakdown rather than bad input.
_NUMERIC_ERRORS = (
    detector.NoCrossingError,
    equalize.SingularSpectrumError,
    equalize.IllConditionedError,
    clf.EmFailureError,
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_sidecar(out_dir: Path, config: ExperimentConfig, artifacts: list[str]) -> None:
    payload = {
        "toolkit": "thzrx",
        "version": __version__,
        "scenario": config.scenario,
        "master_seed": config.seed,
        "config": config.resolved(),
        "artifacts": sorted(artifacts),
    }
    (out_dir / "run_metadata.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )


def _slot_config(config: ExperimentConfig) -> SlotConfig:
    return SlotConfig(
        config.slot_period_s,
        config.samples_per_slot,
        config.slots,
        carrier_hz=config.carrier_hz,
        carrier_phase=config.carrier_phase,
    )


def _mode_detect_waveforms(config: ExperimentConfig):
    slots = _slot_config(config)
    pulse = GaussianPulseParams(
        config.pulse_amplitude, config.pulse_center, config.pulse_spread_s
    )
    rc = RaisedCosineParams(config.slot_period_s, config.rc_alpha)
    s0 = modulate_pbm(pulse, slots, config.pbm_bits)
    s1 = modulate_cbm(rc, slots, config.cbm_symbols)
    return slots, s0, s1


def _channel_model(config: ExperimentConfig) -> ChannelModel:
    table = AbsorptionTable.from_csv(
        config.absorption_path(),
        pressure_atm=config.pressure_atm,
        temperature_k=config.temperature_k,
    )
    return ChannelModel(
        distance_m=config.distance_m,
        antenna_design_frequency_hz=config.f0_hz,
        nfft=config.nfft,
        sample_period=config.channel_sample_period_s,
        absorption=table,
        pressure_atm=config.pressure_atm,
        temperature_k=config.temperature_k,
    )


# ---------------------------------------------------------------------------
# channel-response
# ---------------------------------------------------------------------------


def run_channel_response(config: ExperimentConfig) -> list[str]:
    model = _channel_model(config)
    gains = frequency_response(model)
    h = impulse_response(model)
    t_probe = np.arange(8 * config.samples_per_slot) * model.sample_period
    probe = gaussian_pulse(
        GaussianPulseParams(
            1.0, config.probe_pulse_center_s, config.probe_pulse_spread_s
        ),
        t_probe,
    )
    received = convolve(probe, h)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []

    _write_csv(out / "cir.csv", ["t_s", "value"], zip(h.times, h.samples))
    artifacts.append("cir.csv")
    _write_csv(
        out / "freq_response.csv",
        ["f_hz", "magnitude", "phase_rad"],
        zip(model.frequencies_hz, np.abs(gains), np.angle(gains)),
    )
    artifacts.append("freq_response.csv")
    pad = np.zeros(len(received) - len(probe.samples))
    _write_csv(
        out / "pulse_response.csv",
        ["t_s", "input", "output"],
        zip(received.times, np.concatenate([probe.samples, pad]), received.samples),
    )
    artifacts.append("pulse_response.csv")

    if config.figures:
        from . import plotting

        artifacts += plotting.channel_response_figures(out, model, gains, h, probe, received)
    _write_sidecar(out, config, artifacts)
    return artifacts


# ---------------------------------------------------------------------------
# mode-detect
# ---------------------------------------------------------------------------


def run_mode_detect_sweep(config: ExperimentConfig) -> list[str]:
    slots, s0, s1 = _mode_detect_waveforms(config)
    n_window = slots.observation_samples
    sweep = config.sweep_variable
    curve_values = config.etas if sweep == "snr" else config.snrs_db
    if not curve_values:
        raise ConfigError("mode-detect needs at least one curve parameter")

    def run_curve(job):
        index, value = job
        if sweep == "snr":
            base = detector.DetectorConfig(
                n_window, float(value), detector.sigma2_from_snr_db(
                    config.sweep_grid[0], config.snr_convention
                )
            )
        else:
            base = detector.DetectorConfig(
                n_window,
                config.sweep_grid[0],
                detector.sigma2_from_snr_db(float(value), config.snr_convention),
            )
        rows = detector.error_sweep(
            s0,
            s1,
            base,
            sweep,
            config.sweep_grid,
            snr_convention=config.snr_convention,
            signal_scaling=config.signal_scaling,
            mc_trials=config.mc_trials,
            seed=config.seed + 7919 * index,
        )
        try:
            crossing, pe = detector.pareto_point(
                s0,
                s1,
                base,
                sweep,
                (config.sweep_grid[0], config.sweep_grid[-1]),
                snr_convention=config.snr_convention,
                signal_scaling=config.signal_scaling,
            )
        except detector.NoCrossingError:
            crossing, pe = None, None
        return index, value, rows, crossing, pe

    jobs = list(enumerate(curve_values))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run_curve, jobs))
    else:
        results = [run_curve(job) for job in jobs]
    results.sort(key=lambda item: item[0])

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    parameter = "eta" if sweep == "snr" else "snr_db"
    summary_rows = []
    curves = []
    for _, value, rows, crossing, pe in results:
        name = f"mode_detect_{sweep}_sweep_{parameter}_{value:g}.csv"
        _write_csv(
            out / name,
            ["sweep_var", "pe1_analytic", "pe2_analytic", "pe1_mc", "pe2_mc", "trials"],
            (
                (r.sweep_value, r.pe1_analytic, r.pe2_analytic, r.pe1_mc, r.pe2_mc, r.trials)
                for r in rows
            ),
        )
        artifacts.append(name)
        summary_rows.append((value, crossing, pe))
        curves.append((value, rows))
    _write_csv(
        out / "pareto_summary.csv",
        [parameter, f"crossing_{sweep}", "crossing_pe"],
        summary_rows,
    )
    artifacts.append("pareto_summary.csv")

    if config.figures:
        from . import plotting

        artifacts += plotting.mode_detect_figures(out, sweep, parameter, curves)
    _write_sidecar(out, config, artifacts)
    return artifacts


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------


def _symbol_rate_taps(config: ExperimentConfig) -> np.ndarray:
    """Symbol-rate tap vector sampled from the physical CIR around its peak.

    Normalized to unit norm: the classifier operates on AGC-normalized
    symbol estimates, so only the tap shape matters.
    """
    model = _channel_model(config)
    h = impulse_response(model)
    stride = max(int(round(config.slot_period_s / model.sample_period)), 1)
    peak = int(np.argmax(np.abs(h.samples)))
    idx = peak + stride * np.arange(config.taps_order + 1)
    idx = idx[idx < len(h.samples)]
    taps = h.samples[idx].astype(complex)
    norm = np.linalg.norm(taps)
    if norm == 0:
        raise NumericFailure("channel taps are identically zero")
    return taps / norm


def _thz_classify_cell(
    scheme: str,
    snr_db: float,
    config: ExperimentConfig,
    db: clf.TemplateDatabase,
    em_config: clf.EmConfig,
    taps: np.ndarray,
    entropy,
) -> clf.PccCell:
    """LS-estimate + deconvolve + EM classification through the tap channel."""
    rng = np.random.default_rng(np.random.SeedSequence(list(entropy)))
    sigma2 = 10.0 ** (-snr_db / 10.0)
    const = constellation(scheme)
    L = len(taps) - 1
    n_train = config.training_symbols
    if n_train - 1 < 2 * L:
        raise ConfigError("training_symbols too short for the tap order (k_m-k_1 >= 2L)")
    n_total = n_train + config.samples_per_trial
    declared = []
    divergences = np.empty((config.classify_trials, len(db)))
    hits = 0
    bpsk_train = constellation("BPSK")
    for trial in range(config.classify_trials):
        payload = clf.sample_symbols(const, config.samples_per_trial, rng)
        train = clf.sample_symbols(bpsk_train, n_train, rng)
        symbols = np.concatenate([train, payload])
        received = np.convolve(symbols, taps)[:n_total]
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(n_total) + 1j * rng.standard_normal(n_total)
        )
        received = received + noise
        block = equalize.TrainingBlock(train)
        estimate = equalize.ls_estimate(received[L:n_train], block, L, sigma2=sigma2)
        cleaned = equalize.deconvolve(
            SampledSignal(received, config.slot_period_s),
            estimate,
            epsilon=config.deconv_epsilon,
        )
        samples = cleaned.samples[n_train:]
        result = clf.classify(samples, db, em_config)
        declared.append(result.declared)
        divergences[trial] = result.divergences
        hits += result.declared == const.scheme
    pcc = hits / config.classify_trials
    stderr = float(np.sqrt(max(pcc * (1 - pcc), 1e-12) / config.classify_trials))
    return clf.PccCell(
        const.scheme,
        float(snr_db),
        pcc,
        stderr,
        config.classify_trials,
        tuple(declared),
        divergences,
    )


def _kld_vs_snr_rows(config: ExperimentConfig):
    """Pairwise template divergences against SNR (known-parameter case)."""
    rows = []
    for snr_db in config.classify_snrs_db:
        sigma2 = 10.0 ** (-snr_db / 10.0)
        db = clf.TemplateDatabase.standard(sigma2, config.schemes)
        for i in range(len(db)):
            for j in range(i + 1, len(db)):
                a, b = db.templates[i], db.templates[j]
                if a.dimension == 1:
                    a = clf.embed_1d_in_2d(a, float(a.covariances[0, 0, 0]))
                if b.dimension == 1:
                    b = clf.embed_1d_in_2d(b, float(b.covariances[0, 0, 0]))
                rows.append(
                    (
                        snr_db,
                        f"{db.schemes[i]}|{db.schemes[j]}",
                        clf.mixture_symmetric_kld(a, b),
                    )
                )
    return rows


def _kld_em_error_rows(config: ExperimentConfig, rng: np.random.Generator):
    """Self-KLD and nearest pairwise divergence under mean perturbation.

    Models EM estimation error as zero-mean Gaussian noise added to the
    fitted template means (std swept); reports how the self-divergence
    and the closest wrong-template divergence evolve.
    """
    sigma2 = 0.01  # sigma = 0.1 reference noise level
    db = clf.TemplateDatabase.standard(sigma2, config.schemes)
    rows = []
    for std in config.em_error_stds:
        for i, (scheme, template) in enumerate(db):
            perturbed_means = template.means + std * rng.standard_normal(
                template.means.shape
            )
            perturbed = clf.Gmm(
                template.dimension,
                template.weights,
                perturbed_means,
                template.covariances,
            )
            self_kld = clf.mixture_symmetric_kld(perturbed, template)
            pairwise = []
            for j, other in enumerate(db.templates):
                if j == i:
                    continue
                a, b = perturbed, other
                if a.dimension != b.dimension:
                    if a.dimension == 1:
                        a = clf.embed_1d_in_2d(a, float(a.covariances[0, 0, 0]))
                    if b.dimension == 1:
                        b = clf.embed_1d_in_2d(b, float(b.covariances[0, 0, 0]))
                pairwise.append(clf.mixture_symmetric_kld(a, b))
            nearest = min(pairwise) if pairwise else None
            gap = None if nearest is None else nearest - self_kld
            rows.append((scheme, std, self_kld, nearest, gap))
    return rows


def run_classify_sweep(config: ExperimentConfig) -> list[str]:
    em_config = clf.EmConfig(
        max_iterations=config.em_max_iterations, epsilon=config.em_epsilon
    )
    schemes = [constellation(s).scheme for s in config.schemes]
    if config.classify_channel == "awgn":
        result = clf.pcc_sweep(
            schemes,
            config.classify_snrs_db,
            config.classify_trials,
            samples_per_trial=config.samples_per_trial,
            em_config=em_config,
            seed=config.seed,
            threads=config.threads,
        )
        cells = list(result.cells)
    else:
        taps = _symbol_rate_taps(config)
        jobs = []
        for si, scheme in enumerate(schemes):
            for gi, snr_db in enumerate(config.classify_snrs_db):
                sigma2 = 10.0 ** (-snr_db / 10.0)
                db = clf.TemplateDatabase.standard(sigma2, schemes)
                jobs.append((scheme, snr_db, db, (config.seed, si, gi)))

        def run_cell(job):
            scheme, snr_db, db, entropy = job
            return _thz_classify_cell(
                scheme, snr_db, config, db, em_config, taps, entropy
            )

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                cells = list(pool.map(run_cell, jobs))
        else:
            cells = [run_cell(job) for job in jobs]

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []

    _write_csv(
        out / "pcc.csv",
        ["scheme", "snr_db", "pcc", "stderr", "trials"],
        ((c.scheme, c.snr_db, c.pcc, c.stderr, c.trials) for c in cells),
    )
    artifacts.append("pcc.csv")

    div_cols = [f"dsym_{s.lower().replace('-', '')}" for s in schemes]
    trial_rows = []
    for cell in cells:
        for t, declared in enumerate(cell.declared):
            trial_rows.append(
                (t, cell.snr_db, cell.scheme, declared, *cell.divergences[t])
            )
    _write_csv(
        out / "classification_trials.csv",
        ["trial", "snr_db", "true_scheme", "declared_scheme", *div_cols],
        trial_rows,
    )
    artifacts.append("classification_trials.csv")

    kld_rows = _kld_vs_snr_rows(config)
    _write_csv(out / "kld_vs_snr.csv", ["snr_db", "pair", "dsym"], kld_rows)
    artifacts.append("kld_vs_snr.csv")

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xE11]))
    em_rows = _kld_em_error_rows(config, rng)
    _write_csv(
        out / "kld_em_error.csv",
        ["scheme", "perturb_std", "self_dsym", "nearest_pair_dsym", "gap"],
        em_rows,
    )
    artifacts.append("kld_em_error.csv")

    if config.figures:
        from . import plotting

        artifacts += plotting.classify_figures(out, cells, kld_rows, em_rows)
    _write_sidecar(out, config, artifacts)
    return artifacts


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def run_predict(config: ExperimentConfig) -> list[str]:
    chain = predict.MarkovChain.from_file(config.chain_path())
    try:
        state = predict.StateVector(np.asarray(config.initial_state, dtype=float))
    except predict.PredictError as exc:
        raise ConfigError(str(exc)) from exc

    rows = []
    labels = chain.state_labels
    current = state
    predicted = predict.predict_modulation(current, chain)
    rows.append((0, *current.probabilities, predicted, labels[predicted]))
    for k in range(1, config.predict_steps + 1):
        current = predict.step(current, chain, 1)
        predicted = predict.predict_modulation(current, chain)
        rows.append((k, *current.probabilities, predicted, labels[predicted]))

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    prob_cols = [f"p_state{i + 1}" for i in range(5)]
    _write_csv(
        out / "prediction.csv",
        ["step", *prob_cols, "predicted_index", "predicted_scheme"],
        rows,
    )
    artifacts.append("prediction.csv")
    if config.figures:
        from . import plotting

        artifacts += plotting.predict_figures(out, labels, rows)
    _write_sidecar(out, config, artifacts)
    return artifacts


_RUNNERS = {
    "channel-response": run_channel_response,
    "mode-detect": run_mode_detect_sweep,
    "classify": run_classify_sweep,
    "predict": run_predict,
}


def run(config: ExperimentConfig) -> list[str]:
    """Execute the configured scenario; returns the artifact names."""
    runner = _RUNNERS[config.scenario]
    try:
        return runner(config)
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
