use biphoton_povm::entanglement::{
    gaussian_schmidt_number, negativity, negativity_trace_norm, schmidt_decompose,
};
use biphoton_povm::grid::{inner_product, FrequencyGrid, SpectralAmplitude};
use biphoton_povm::jsa::{build_jsa, cw_limit_jsa, gaussian_jsa, CouplingChi, GaussianJsaParams, JointSpectralAmplitude, PhaseMatchSpec};
use biphoton_povm::povm::{
    born_probability, gram_matrix, mix_elements, null_element, povm_element, purity, retrodicted_state,
    sfg_amplitude, CompletenessScan, PovmElement,
};
use biphoton_povm::teleport::{
    fidelity_sweep, numeric_closed_form_check, numeric_grid, sentinel_bandwidth, SweepRegime, TeleportScenario,
};
use biphoton_povm::Checked;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{
    JsaConfig, Panel, PovmConfig, SfgConfig, SourceConfig, TeleportConfig, TeleportMode,
};
use crate::error::CliError;
use crate::report::{RunReport, Table};

/// Phasematching and coupling available to sources that need them.
struct SourceContext<'a> {
    pm: &'a PhaseMatchSpec,
    chi: CouplingChi,
}

fn build_source(
    source: &SourceConfig,
    ctx: Option<&SourceContext>,
    gs: &FrequencyGrid,
    gi: &FrequencyGrid,
    report: &mut RunReport,
) -> Result<JointSpectralAmplitude, CliError> {
    let needs_context = |what: &str| {
        CliError::Config(format!("a '{what}' source needs the phasematching and chi of the sfg command"))
    };
    let nu = gs.sum_grid(gi);
    match source {
        SourceConfig::Pdc { pump, phasematching, chi } => {
            let pm = phasematching.build()?;
            let chi = chi.build(&mut report.warnings)?;
            let pump = pump.build(&nu?, &mut report.warnings)?;
            let Checked { value: (jsa, w), warnings } = build_jsa(&pump, &pm, chi, gs, gi)?;
            report.warnings.extend(warnings);
            report.result("emission_weight", w);
            Ok(jsa)
        }
        SourceConfig::Gaussian { gamma, alpha } => {
            let params = GaussianJsaParams::new(*gamma, *alpha)?;
            if alpha.abs() < 1.0 {
                report.result("closed_form_schmidt_number", gaussian_schmidt_number(*alpha)?);
            }
            Ok(gaussian_jsa(params, gs, gi)?)
        }
        SourceConfig::CwRidge { gamma } => Ok(cw_limit_jsa(*gamma, gs, gi)?),
        SourceConfig::Separable { pulse } => {
            let ctx = ctx.ok_or_else(|| needs_context("separable"))?;
            let pulse = pulse.build(&nu?, &mut report.warnings)?;
            Ok(JointSpectralAmplitude::from_fn(gs.clone(), gi.clone(), |a, b| pulse.at(a + b) * ctx.pm.eval(a, b))
                .normalized()?)
        }
        SourceConfig::Measurement { mode } => {
            let ctx = ctx.ok_or_else(|| needs_context("measurement"))?;
            let mode = mode.build(&nu?, &mut report.warnings)?;
            let Checked { value: (jsa, w), warnings } = build_jsa(&mode, ctx.pm, ctx.chi, gs, gi)?;
            report.warnings.extend(warnings);
            report.result("input_weight", w);
            Ok(jsa)
        }
        SourceConfig::Random { seed, envelope } => {
            if !(*envelope > 0.0) {
                return Err(CliError::Config(format!("random envelope must be positive, got {envelope}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let (cs, ci) = (gs.center(), gi.center());
            let mut values = DMatrix::zeros(gs.len(), gi.len());
            // Column-major fill keeps the draw order fixed.
            for k in 0..gi.len() {
                for j in 0..gs.len() {
                    let (x, y) = (gs.point(j) - cs, gi.point(k) - ci);
                    let env = (-(x * x + y * y) / (2.0 * envelope * envelope)).exp();
                    let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    values[(j, k)] = z * env;
                }
            }
            Ok(JointSpectralAmplitude::new(gs.clone(), gi.clone(), values)?.normalized()?)
        }
    }
}

fn grid_diagnostics(report: &mut RunReport, gs: &FrequencyGrid, gi: &FrequencyGrid) {
    report.diagnostic(
        "grid",
        json!({
            "points": [gs.len(), gi.len()],
            "step": [gs.step(), gi.step()],
            "signal_range": [gs.first(), gs.last()],
            "idler_range": [gi.first(), gi.last()],
        }),
    );
}

/// Parity of the amplitude under reflection of the sum frequency about the
/// grid center, when both axes share one grid.
fn sum_parity(jsa: &JointSpectralAmplitude) -> Option<&'static str> {
    if !jsa.grid_s().matches(jsa.grid_i()) {
        return None;
    }
    let v = jsa.values();
    let n = v.nrows();
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * peak;
    let mut even = true;
    let mut odd = true;
    for j in 0..n {
        for k in 0..n {
            let m = v[(n - 1 - k, n - 1 - j)];
            even &= (v[(j, k)] - m).norm() <= tol;
            odd &= (v[(j, k)] + m).norm() <= tol;
        }
    }
    Some(if odd {
        "odd"
    } else if even {
        "even"
    } else {
        "none"
    })
}

pub fn run_jsa(cfg: &JsaConfig, report: &mut RunReport) -> Result<(), CliError> {
    let (gs, gi) = cfg.grid.grids()?;
    grid_diagnostics(report, &gs, &gi);
    let jsa = build_source(&cfg.source, None, &gs, &gi, report)?;
    let schmidt = schmidt_decompose(&jsa, cfg.schmidt_cutoff)?;

    report.result("norm_sqr", jsa.norm_sqr());
    report.result("schmidt_number", schmidt.schmidt_number);
    report.result(
        "schmidt_coefficients",
        schmidt.coefficients.iter().take(cfg.report_coefficients).collect::<Vec<_>>(),
    );
    if matches!(cfg.source, SourceConfig::Gaussian { .. }) {
        report.result("zeta", schmidt.zeta);
    }
    if let Some(parity) = sum_parity(&jsa) {
        report.result("sum_frequency_parity", parity);
        report.result("antidiagonal_node", parity == "odd");
    }
    report.diagnostic("schmidt_cutoff", cfg.schmidt_cutoff);
    report.diagnostic("schmidt_modes_kept", schmidt.coefficients.len());

    let v = jsa.values();
    report.tables.push(Table::joint("magnitude", &gs, &gi, &v.map(|z| z.norm())));
    report.tables.push(Table::joint("real", &gs, &gi, &v.map(|z| z.re)));
    report.tables.push(Table::joint("imag", &gs, &gi, &v.map(|z| z.im)));
    Ok(())
}

fn family_elements(
    members: &[SpectralAmplitude],
    pm: &PhaseMatchSpec,
    chi: CouplingChi,
    gs: &FrequencyGrid,
    gi: &FrequencyGrid,
    report: &mut RunReport,
) -> Result<Vec<PovmElement>, CliError> {
    members
        .iter()
        .enumerate()
        .map(|(n, m)| {
            let Checked { value, warnings } = povm_element(format!("mode {n}"), m, pm, chi, gs, gi)?;
            report.warnings.extend(warnings);
            Ok(value)
        })
        .collect()
}

pub fn run_povm(cfg: &PovmConfig, report: &mut RunReport) -> Result<(), CliError> {
    let (gs, gi) = cfg.grid.grids()?;
    grid_diagnostics(report, &gs, &gi);
    let pm = cfg.phasematching.build()?;
    let chi = cfg.chi.build(&mut report.warnings)?;
    let family = cfg.family.build()?;
    let nu = gs.sum_grid(&gi)?;
    let Checked { value: members, warnings } = family.members(&nu)?;
    report.warnings.extend(warnings);
    let elements = family_elements(&members, &pm, chi, &gs, &gi, report)?;

    let weights: Vec<f64> = elements.iter().map(|e| e.weights()[0]).collect();
    let gram = gram_matrix(&elements)?;
    let id_err = gram
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            let (r, c) = (idx % gram.nrows(), idx / gram.nrows());
            (g - if r == c { 1.0 } else { 0.0 }).norm()
        })
        .fold(0.0, f64::max);
    let purities = elements.iter().map(|e| e.retrodicted_purity()).collect::<Result<Vec<_>, _>>()?;
    report.result("weights", &weights);
    report.result("gram_identity_error", id_err);
    report.result("element_purities", &purities);

    let mixed = match &cfg.mixing {
        Some(qs) => {
            if qs.is_empty() || qs.len() > elements.len() {
                return Err(CliError::Config(format!(
                    "mixing needs between 1 and {} weights, got {}",
                    elements.len(),
                    qs.len()
                )));
            }
            let mixed = mix_elements(qs, &elements[..qs.len()])?;
            report.result("mixed_trace", mixed.trace());
            report.result("mixed_purity", mixed.retrodicted_purity()?);
            Some(mixed)
        }
        None => None,
    };

    if cfg.dense {
        let target = mixed.as_ref().unwrap_or(&elements[0]);
        let rho = retrodicted_state(target)?;
        report.result(
            "dense",
            json!({
                "element": target.label(),
                "purity": purity(&rho),
                "min_eigenvalue": rho.min_eigenvalue(),
                "negativity": negativity(&rho)?,
                "negativity_trace_norm": negativity_trace_norm(&rho)?,
            }),
        );
    }

    let sweep = cfg.completeness_sweep.clone().unwrap_or_else(|| vec![family.n_modes]);
    let scan = CompletenessScan::new(&family, &pm, chi, &gs, &gi)?;
    let defects = scan.defects(&sweep)?;
    let c2 = chi.magnitude().powi(2);
    report.result("completeness_defects", &defects);
    report.result("completeness_monotone", defects.windows(2).all(|w| w[1] <= w[0]));
    let null = null_element(&family, &pm, chi, &gs, &gi)?;
    report.result("completeness_defect", null.completeness_defect);
    report.result("relative_completeness_defect", null.relative_defect);
    report.diagnostic("completeness_max_excess", null.max_excess);
    report.diagnostic("completeness_region", "both axes within a quarter span of the grid center");
    report.diagnostic("n_max", family.n_modes);
    report.diagnostic("sum_grid", json!({"points": nu.len(), "step": nu.step()}));

    let index: Vec<f64> = (0..elements.len()).map(|n| n as f64).collect();
    report.tables.push(Table::matrix("gram_real", "mode", &index, &index, &gram.map(|z| z.re)));
    report.tables.push(Table::matrix("gram_imag", "mode", &index, &index, &gram.map(|z| z.im)));
    report.tables.push(Table::new(
        "completeness",
        vec!["n_modes".into(), "defect".into(), "relative_defect".into()],
        sweep.iter().zip(&defects).map(|(n, d)| vec![*n as f64, *d, d / c2]).collect(),
    ));
    report.tables.push(Table::joint("null_diagonal", &gs, &gi, &null.null.diagonal));
    Ok(())
}

pub fn run_teleport(cfg: &TeleportConfig, report: &mut RunReport) -> Result<(), CliError> {
    match cfg.mode {
        TeleportMode::ClosedForm | TeleportMode::Check => {
            let scenario =
                TeleportScenario::new(cfg.alpha, cfg.beta, cfg.gamma_s.0, cfg.gamma_m.0, cfg.gamma_c)?;
            let regime = scenario.regime()?;
            report.result("regime", format!("{regime:?}"));
            report.result("sigma", scenario.sigma_ratio()?);
            report.result("closed_form", scenario.closed_form()?);
            if cfg.mode == TeleportMode::Check {
                let check = numeric_closed_form_check(&scenario, Some(cfg.points))?;
                let grid = numeric_grid(&scenario, Some(cfg.points))?;
                report.result("numeric", check.numeric);
                report.result("discrepancy", check.discrepancy);
                report.result("tolerance", check.tolerance);
                report.result("within_tolerance", check.passed());
                report.result("herald_weight", check.herald_weight);
                report.diagnostic("grid", json!({"points": grid.len(), "span": grid.span(), "step": grid.step()}));
                if scenario.gamma_s.is_infinite() || scenario.gamma_m.is_infinite() {
                    report.diagnostic("infinite_bandwidth_realized_as", sentinel_bandwidth(&scenario));
                }
            }
        }
        TeleportMode::Sweep => {
            let s = &cfg.sweep;
            if s.panels.is_empty() {
                return Err(CliError::Config("sweep.panels must name at least one panel".into()));
            }
            let mut extremes = serde_json::Map::new();
            for panel in &s.panels {
                let (name, regime, corner) = match panel {
                    Panel::A => ("panel_a", SweepRegime::IdealMeasurement, "alpha\\sigma"),
                    Panel::B => ("panel_b", SweepRegime::EqualBandwidthsFixedBeta(s.fixed), "alpha\\sigma"),
                    Panel::C => ("panel_c", SweepRegime::EqualBandwidthsFixedAlpha(s.fixed), "beta\\sigma"),
                };
                let surface = fidelity_sweep(regime, s.correlation, s.sigma, s.resolution)?;
                let min = surface.values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = surface.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                extremes.insert(name.into(), json!({"min": min, "max": max}));
                report.tables.push(Table::matrix(name, corner, &surface.correlation, &surface.sigma, &surface.values));
            }
            report.result("panels", extremes);
            report.diagnostic("resolution", s.resolution);
        }
    }
    Ok(())
}

pub fn run_sfg(cfg: &SfgConfig, report: &mut RunReport) -> Result<(), CliError> {
    let (gs, gi) = cfg.grid.grids()?;
    grid_diagnostics(report, &gs, &gi);
    let pm = cfg.phasematching.build()?;
    let chi = cfg.chi.build(&mut report.warnings)?;
    let ctx = SourceContext { pm: &pm, chi };
    let input = build_source(&cfg.input, Some(&ctx), &gs, &gi, report)?;
    let up = sfg_amplitude(&input, &pm, chi)?;
    let nu = up.sigma().grid().clone();

    let family = cfg.family.build()?;
    let Checked { value: members, warnings } = family.members(&nu)?;
    report.warnings.extend(warnings);
    let elements = family_elements(&members, &pm, chi, &gs, &gi, report)?;

    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (n, (mode, element)) in members.iter().zip(&elements).enumerate() {
        let p_sfg = up.detection_probability(mode)?;
        let p_born = born_probability(&input, element)?;
        // Relative to the probability, floored so parity zeros do not divide by noise.
        let scale = p_born.max(p_sfg).max(1e-12 * element.weights()[0]);
        let residual = (p_sfg - p_born).abs() / scale;
        worst = worst.max(residual);
        rows.push(vec![n as f64, p_sfg, p_born, element.weights()[0], residual]);
    }
    report.result("detection_probabilities", rows.iter().map(|r| r[1]).collect::<Vec<_>>());
    report.result("total_detection_probability", rows.iter().map(|r| r[1]).sum::<f64>());
    report.result("born_residual", worst);

    match &cfg.input {
        SourceConfig::Separable { pulse } => {
            let pulse = pulse.build(&nu, &mut report.warnings)?;
            let overlap = inner_product(&pulse, &up.sigma().normalized()?)?.norm_sqr();
            report.result("recovered_pulse_overlap", overlap);
        }
        SourceConfig::Measurement { mode } => {
            let mode = mode.build(&nu, &mut report.warnings)?;
            report.result("input_mode_probability", up.detection_probability(&mode)?);
        }
        _ => {}
    }
    report.diagnostic("sum_grid", json!({"points": nu.len(), "step": nu.step()}));
    report.diagnostic("n_max", family.n_modes);

    let sigma = up.sigma().values();
    report.tables.push(Table::new(
        "sigma",
        vec!["nu".into(), "real".into(), "imag".into(), "abs".into()],
        nu.points().iter().zip(sigma).map(|(x, z)| vec![*x, z.re, z.im, z.norm()]).collect(),
    ));
    report.tables.push(Table::new(
        "probabilities",
        ["mode", "p_sfg", "p_born", "weight", "residual"].iter().map(|s| s.to_string()).collect(),
        rows,
    ));
    Ok(())
}
