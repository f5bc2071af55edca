//! One function per subcommand: validated config in, result table out.

use std::f64::consts::PI;

use rymet::dipolar::{
    self, C3Convention, CloudGeometry, CloudKind, DipolarParams, QuadratureSpec,
};
use rymet::estimation::{run_estimation, sensitivity_pipeline, LikelihoodTable, ThetaGrid};
use rymet::multiparticle::{
    fisher_information, fit_decay_rate, normalized_fi, super_rabi_means, LossOrder, ProtocolParams,
};
use rymet::toy_model::{self, ToyConfig};
use rymet::units::{self, ATOMIC_DIPOLE};

use crate::config::Config;
use crate::error::CliError;
use crate::table::{Cell, Table};

/// Keys accepted by every subcommand.
const COMMON: &[&str] = &["seed"];

pub const DEFAULT_N0: f64 = 55.0;
pub const DEFAULT_ETA: f64 = 0.02;
pub const DEFAULT_GAMMA_TAU: f64 = 0.034;
pub const DEFAULT_RABI_FREQUENCY: f64 = 2.0 * PI * 0.66e6;
/// C3/h of the tabulated pair, Hz·m³.
pub const DEFAULT_C3_OVER_H: f64 = 3.709e-9;

fn allowed(keys: &[&'static str]) -> Vec<&'static str> {
    keys.iter().chain(COMMON).copied().collect()
}

fn theta_list(config: &Config, default_points: usize, range: f64) -> Result<Vec<f64>, CliError> {
    if let Some(thetas) = config.list_opt("thetas")? {
        if config.f64_opt("theta_points")?.is_some() {
            return Err(CliError::Config("give thetas or theta_points, not both".into()));
        }
        if thetas.is_empty() {
            return Err(CliError::Config("thetas is empty".into()));
        }
        return Ok(thetas);
    }
    let points = config.usize_or("theta_points", default_points)?;
    if points == 0 {
        return Err(CliError::Config("theta_points must be positive".into()));
    }
    if points == 1 {
        return Ok(vec![0.5 * range]);
    }
    Ok((0..points)
        .map(|i| range * i as f64 / (points - 1) as f64)
        .collect())
}

fn parse_loss_order(name: &str) -> Result<LossOrder, CliError> {
    match name {
        "after" => Ok(LossOrder::AfterInteraction),
        "before" => Ok(LossOrder::BeforeInteraction),
        other => Err(CliError::Config(format!(
            "loss order {other} is not one of after, before"
        ))),
    }
}

fn protocol(config: &Config, gamma_tau: f64) -> Result<ProtocolParams, CliError> {
    let order = match config.string_opt("loss_order")? {
        Some(name) => parse_loss_order(&name)?,
        None => LossOrder::AfterInteraction,
    };
    Ok(ProtocolParams::new(
        config.f64_or("n0", DEFAULT_N0)?,
        config.f64_or("eta", DEFAULT_ETA)?,
        gamma_tau,
        order,
    )?)
}

pub fn toy_fi(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&["etas", "thetas", "theta_points"]))?;
    let etas = config.list_opt("etas")?.unwrap_or_else(|| vec![0.02]);
    if etas.is_empty() {
        return Err(CliError::Config("etas is empty".into()));
    }
    let thetas = theta_list(config, 101, PI)?;
    let mut table = Table::new(
        "toy-fi",
        &[
            "eta",
            "theta",
            "fi_without",
            "fi_with",
            "qfi_bound",
            "mean_nd_with",
            "mean_nd_without",
            "peak_ratio",
        ],
    );
    for eta in etas {
        let toy = ToyConfig::new(eta, thetas.clone())?;
        let curve = toy_model::enhancement_curve(&toy)?;
        let means = toy_model::expectation_curves(eta, &thetas)?;
        let ratio = toy_model::peak_enhancement_ratio(eta)?;
        for (fi, m) in curve.iter().zip(&means) {
            table.push(vec![
                eta.into(),
                fi.theta.into(),
                fi.fi_without.into(),
                fi.fi_with.into(),
                fi.qfi_bound.into(),
                m.nd_with.into(),
                m.nd_without.into(),
                ratio.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn decay_scan(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&["n0", "eta", "gamma", "thetas", "theta_points", "taus"]))?;
    let gamma = config.f64_or("gamma", 4.61e3)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CliError::Config(format!("gamma = {gamma} must be positive")));
    }
    let thetas = theta_list(config, 7, 0.5 * PI)?;
    let taus = match config.list_opt("taus")? {
        Some(t) => t,
        None => (0..=10).map(|i| i as f64 * 1e-6).collect(),
    };
    if taus.len() < 2 {
        return Err(CliError::Config("taus needs at least two delays".into()));
    }
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::Config(format!("delay {t} must be non-negative")));
    }
    let n0 = config.f64_or("n0", DEFAULT_N0)?;
    let mut table = Table::new(
        "decay-scan",
        &["theta", "tau", "mean_nd", "fitted_rate", "p_population", "fitted_gamma"],
    );
    for &theta in &thetas {
        let means = taus
            .iter()
            .map(|&tau| {
                let params = protocol(config, gamma * tau)?;
                Ok(super_rabi_means(&params, theta).0)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let (_, rate) = fit_decay_rate(&taus, &means)?;
        // an undecayed curve fits to -0.0
        let rate = rate + 0.0;
        let p_population = n0 * (0.5 * theta).sin().powi(2);
        let fitted_gamma = if p_population > 0.0 {
            rate / p_population
        } else {
            f64::NAN
        };
        for (&tau, &mean) in taus.iter().zip(&means) {
            table.push(vec![
                theta.into(),
                tau.into(),
                mean.into(),
                rate.into(),
                p_population.into(),
                fitted_gamma.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn super_rabi(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&[
        "n0",
        "eta",
        "gamma_tau",
        "thetas",
        "theta_points",
        "loss_order",
    ]))?;
    let params = protocol(config, config.f64_or("gamma_tau", DEFAULT_GAMMA_TAU)?)?;
    let reference = protocol(config, 0.0)?;
    let mut table = Table::new(
        "super-rabi",
        &[
            "theta",
            "mean_nd",
            "mean_np",
            "reference_nd",
            "reference_np",
            "total",
        ],
    );
    for theta in theta_list(config, 91, PI)? {
        let (nd, np) = super_rabi_means(&params, theta);
        let (rd, rp) = super_rabi_means(&reference, theta);
        table.push(vec![
            theta.into(),
            nd.into(),
            np.into(),
            rd.into(),
            rp.into(),
            (nd + np).into(),
        ]);
    }
    Ok(table)
}

pub fn fi_scan(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&[
        "n0",
        "eta",
        "gamma_taus",
        "loss_orders",
        "thetas",
        "theta_points",
    ]))?;
    let gamma_taus = config
        .list_opt("gamma_taus")?
        .unwrap_or_else(|| vec![0.0, 0.02, 0.04, 0.08, 0.16]);
    let orders = config
        .string_list_opt("loss_orders")?
        .unwrap_or_else(|| vec!["after".into(), "before".into()])
        .iter()
        .map(|name| parse_loss_order(name))
        .collect::<Result<Vec<_>, _>>()?;
    if gamma_taus.is_empty() || orders.is_empty() {
        return Err(CliError::Config("gamma_taus and loss_orders must be non-empty".into()));
    }
    let thetas = theta_list(config, 91, PI)?;
    let n0 = config.f64_or("n0", DEFAULT_N0)?;
    let eta = config.f64_or("eta", DEFAULT_ETA)?;
    let mut table = Table::new(
        "fi-scan",
        &["loss_order", "gamma_tau", "theta", "fi", "normalized_fi"],
    );
    for &order in &orders {
        for &gt in &gamma_taus {
            let params = ProtocolParams::new(n0, eta, gt, order)?;
            for &theta in &thetas {
                table.push(vec![
                    order.name().into(),
                    gt.into(),
                    theta.into(),
                    fisher_information(&params, theta)?.into(),
                    normalized_fi(&params, theta)?.into(),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn ml_experiment(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&[
        "n0",
        "eta",
        "gamma_tau",
        "loss_order",
        "thetas",
        "total_shots",
        "shots_per_realization",
        "bootstrap",
        "grid_points",
    ]))?;
    let params = protocol(config, config.f64_or("gamma_tau", DEFAULT_GAMMA_TAU)?)?;
    let thetas = config
        .list_opt("thetas")?
        .unwrap_or_else(|| vec![0.6, 1.0, 1.4, 1.8, 2.2, 2.6]);
    if thetas.is_empty() {
        return Err(CliError::Config("thetas is empty".into()));
    }
    let total = config.usize_or("total_shots", 10_000)?;
    let per = config.usize_or("shots_per_realization", 100)?;
    let bootstrap = config.usize_or("bootstrap", rymet::estimation::DEFAULT_BOOTSTRAP)?;
    let grid = ThetaGrid::half_period(
        config.usize_or("grid_points", rymet::estimation::DEFAULT_GRID_POINTS)?,
    )?;
    let seed = config.u64_opt("seed")?.unwrap_or(0);
    let table_ll = LikelihoodTable::new(&params, grid);
    let mut table = Table::new(
        "ml-experiment",
        &[
            "theta_true",
            "theta_hat",
            "variance",
            "fi_per_shot",
            "fi_error",
            "bias",
            "fi_analytic",
            "realizations",
            "few_realizations",
        ],
    );
    for (i, &theta) in thetas.iter().enumerate() {
        let r = run_estimation(&table_ll, theta, total, per, bootstrap, seed.wrapping_add(i as u64))?;
        table.push(vec![
            r.theta_true.into(),
            r.theta_hat_mean.into(),
            r.variance.into(),
            r.fi_per_shot.into(),
            r.fi_error.into(),
            r.bias.into(),
            fisher_information(&params, theta)?.into(),
            r.realizations.into(),
            r.few_realizations.into(),
        ]);
    }
    Ok(table)
}

pub fn sensitivity(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&[
        "n0",
        "eta",
        "gamma_tau",
        "loss_order",
        "rabi_frequency",
        "dipole_moment",
        "fi_per_shot",
        "grid_points",
    ]))?;
    let params = protocol(config, config.f64_or("gamma_tau", 0.04)?)?;
    let omega = config.f64_or("rabi_frequency", DEFAULT_RABI_FREQUENCY)?;
    let dipole = config.f64_required("dipole_moment")?;
    let fi = config.f64_opt("fi_per_shot")?;
    let grid = ThetaGrid::half_period(
        config.usize_or("grid_points", rymet::estimation::DEFAULT_GRID_POINTS)?,
    )?;
    let report = sensitivity_pipeline(&params, &grid, omega, dipole, fi)?;
    let mut table = Table::new(
        "sensitivity",
        &[
            "theta_star",
            "pulse_time",
            "delta_theta",
            "delta_e_v_per_cm",
            "sensitivity_v_per_cm_sqrt_hz",
            "rabi_frequency",
            "dipole_moment",
            "dipole_moment_au",
        ],
    );
    table.push(vec![
        report.theta_star.unwrap_or(f64::NAN).into(),
        report.pulse_time_t.into(),
        report.delta_theta.into(),
        report.delta_e.into(),
        report.sensitivity_s.into(),
        omega.into(),
        dipole.into(),
        (dipole / ATOMIC_DIPOLE).into(),
    ]);
    Ok(table)
}

pub fn dipolar(config: &Config) -> Result<Table, CliError> {
    config.check_keys(&allowed(&["c3_over_h", "cloud", "dimensions", "times"]))?;
    let c3_ghz_um3 = config.f64_or("c3_over_h", DEFAULT_C3_OVER_H)? * 1e9;
    let kind = match config.string_opt("cloud")?.as_deref() {
        None | Some("box") => CloudKind::Box,
        Some("gaussian") => CloudKind::Gaussian,
        Some(other) => {
            return Err(CliError::Config(format!("cloud {other} is not one of box, gaussian")))
        }
    };
    let dims = config
        .list_opt("dimensions")?
        .unwrap_or_else(|| vec![80e-6, 80e-6, 4000e-6]);
    let dims: [f64; 3] = dims
        .iter()
        .map(|d| d * 1e6)
        .collect::<Vec<_>>()
        .try_into()
        .map_err(|_| CliError::Config("dimensions needs exactly three lengths".into()))?;
    let times = config
        .list_opt("times")?
        .unwrap_or_else(|| vec![1e-8, 3e-8, 1e-7, 3e-7, 1e-6]);
    if times.is_empty() {
        return Err(CliError::Config("times is empty".into()));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::Config(format!("time {t} must be positive")));
    }
    let cloud = CloudGeometry::new(kind, dims)?;
    let params = DipolarParams::from_c3_ghz(c3_ghz_um3, C3Convention::Angular, cloud)?;
    let spec = QuadratureSpec::default();
    let times_us: Vec<f64> = times.iter().map(|t| t * units::US_PER_S).collect();
    let values = times_us
        .iter()
        .map(|&t| dipolar::excluded_volume_integral(t, &params, &spec))
        .collect::<Result<Vec<_>, _>>()?;
    let re: Vec<f64> = values.iter().map(|a| a.value.re).collect();
    let (slope, _) = dipolar::fit_linear_rate(&times_us, &re);
    let q_fit = units::um3_per_us_to_m3_per_s(slope);
    let gamma_angular = units::per_us_to_per_s(2.0 * slope / cloud.effective_volume());
    let gamma_plain = gamma_angular / (2.0 * PI);
    let mut table = Table::new(
        "dipolar",
        &["t", "re_a", "im_a", "q_fit", "gamma_angular", "gamma_plain"],
    );
    for (&t, a) in times.iter().zip(&values) {
        table.push(vec![
            Cell::Num(t),
            (a.value.re / units::UM3_PER_M3).into(),
            (a.value.im / units::UM3_PER_M3).into(),
            q_fit.into(),
            gamma_angular.into(),
            gamma_plain.into(),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> Config {
        Config::from_json(json).unwrap()
    }

    #[test]
    fn theta_grid_forms() {
        assert_eq!(theta_list(&config("{}"), 3, PI).unwrap(), vec![0.0, 0.5 * PI, PI]);
        assert_eq!(theta_list(&config(r#"{"thetas": 0.3}"#), 3, PI).unwrap(), vec![0.3]);
        assert!(theta_list(&config(r#"{"thetas": []}"#), 3, PI).is_err());
        assert!(theta_list(&config(r#"{"theta_points": 0}"#), 3, PI).is_err());
        assert!(theta_list(&config(r#"{"thetas": [1], "theta_points": 2}"#), 3, PI).is_err());
    }

    #[test]
    fn decay_scan_rate_is_zero_without_p_population() {
        let t = decay_scan(&config(r#"{"thetas": [0.0, 1.0], "taus": [0, 1e-6, 2e-6]}"#)).unwrap();
        assert_eq!(t.rows[0][3], Cell::Num(0.0));
        match t.rows[3][5] {
            Cell::Num(g) => assert!(g > 0.0),
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dipolar_rejects_non_positive_time() {
        assert!(dipolar(&config(r#"{"times": [1e-7, 0]}"#)).is_err());
    }

    #[test]
    fn dipolar_fit_matches_closed_form() {
        let t = dipolar(&config(r#"{"times": [1e-8, 1e-6]}"#)).unwrap();
        let params = DipolarParams::experimental(C3Convention::Angular);
        let q = units::um3_per_us_to_m3_per_s(dipolar::volumetric_rate_q(&params));
        match t.rows[0][3] {
            Cell::Num(fit) => assert!((fit / q - 1.0).abs() < 5e-3, "{fit} {q}"),
            ref other => panic!("{other:?}"),
        }
    }
}
