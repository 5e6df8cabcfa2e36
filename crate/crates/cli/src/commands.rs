use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fluxline::config::{DeviceConfig, QubitConfig};
use fluxline::fit::{self, DataSeries, FitResult, Model, TuningOptions};
use fluxline::modulation::{second_order_shift, time_average_oracle, FluxDrive, HarmonicSeries};
use fluxline::rf::{check_spec, diplexer::default_grid, log_grid, DiplexerSpec};
use fluxline::signal_chain::{chain_total, spurious_shift_report, LineBudget};
use fluxline::transmon::{diagonalize, f01_asymptotic, FluxPoint};
use fluxline::Error;
use serde::Serialize;
use serde_json::json;

use crate::output::{num, print_stdout, to_json, write_file, Sink, Table};
use crate::{
    CliError, ConfigArg, CrosstalkArgs, DiplexerArgs, FitArgs, FitKind, ModulateArgs, SpectrumArgs,
    EXIT_NONCONVERGENCE,
};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("reading {}: {e}", path.display())))
}

fn load_config(arg: &ConfigArg) -> Result<DeviceConfig, CliError> {
    let path = arg.config.as_ref().ok_or_else(|| {
        CliError::input("no config given (positional argument or FLUXLINE_CONFIG)")
    })?;
    DeviceConfig::from_json(&read(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn linear_grid(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::input(format!("{what}: need at least one point")));
    }
    if !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(CliError::input(format!(
            "{what}: need finite min <= max, got [{lo}, {hi}]"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    qubit: &'a str,
    points: usize,
    f_max_mhz: f64,
    phi_at_max: f64,
    f_min_mhz: f64,
    phi_at_min: f64,
    anharmonicity_at_max_mhz: f64,
    all_converged: bool,
}

pub fn spectrum(args: SpectrumArgs, json: bool) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let qubit = config.qubit(&args.qubit)?;
    let params = qubit.params()?;
    let grid = linear_grid(args.phi_min, args.phi_max, args.points, "flux grid")?;
    let mut table = Table::new(&[
        "phi",
        "f01_asymptotic_mhz",
        "f01_diag_mhz",
        "anharmonicity_mhz",
    ]);
    let mut top = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut bottom = (f64::INFINITY, 0.0);
    let mut all_converged = true;
    for &phi in &grid {
        let s = diagonalize(&params, FluxPoint::new(phi), args.basis)?;
        all_converged &= s.converged;
        table.push(vec![
            Some(phi),
            f01_asymptotic(&params, phi).ok(),
            Some(s.f01),
            Some(s.anharmonicity),
        ]);
        if s.f01 > top.0 {
            top = (s.f01, phi, s.anharmonicity);
        }
        if s.f01 < bottom.0 {
            bottom = (s.f01, phi);
        }
    }
    let sink = Sink {
        json,
        out: args.out,
    };
    sink.table(&table)?;
    let summary = SpectrumSummary {
        qubit: &qubit.name,
        points: table.len(),
        f_max_mhz: top.0,
        phi_at_max: top.1,
        f_min_mhz: bottom.0,
        phi_at_min: bottom.1,
        anharmonicity_at_max_mhz: top.2,
        all_converged,
    };
    let mut human = format!(
        "{}: f_max {} MHz at phi {}, f_min {} MHz at phi {}, anharmonicity {} MHz\n",
        qubit.name,
        num(top.0),
        num(top.1),
        num(bottom.0),
        num(bottom.1),
        num(top.2)
    );
    append_measured(&mut human, qubit);
    if !all_converged {
        human.push_str("warning: some grid points are not converged in the charge basis\n");
    }
    sink.summary(&human, &summary)
}

fn append_measured(human: &mut String, qubit: &QubitConfig) {
    let keys = [
        ("f_max_mhz", "f_max"),
        ("f_min_mhz", "f_min"),
        ("eta_mhz", "anharmonicity"),
    ];
    let listed: Vec<String> = keys
        .iter()
        .filter_map(|(k, label)| qubit.measured(k).map(|v| format!("{label} {} MHz", num(v))))
        .collect();
    if !listed.is_empty() {
        let _ = writeln!(human, "  measured: {}", listed.join(", "));
    }
}

#[derive(Serialize)]
struct ModulateSummary<'a> {
    qubit: &'a str,
    phi_dc: f64,
    order: usize,
    points: usize,
    static_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_series_oracle_deviation_mhz: Option<f64>,
}

pub fn modulate(args: ModulateArgs, json: bool) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let qubit = config.qubit(&args.qubit)?;
    let params = qubit.params()?;
    let amplitudes = if args.phi_ac.is_empty() {
        linear_grid(args.ac_min, args.ac_max, args.points, "amplitude grid")?
    } else {
        args.phi_ac.clone()
    };
    let series = match HarmonicSeries::new(&params, args.order) {
        Ok(s) => Some(s),
        Err(Error::SeriesBoundary) if args.oracle => {
            log::warn!(
                "symmetric SQUID: harmonic series unavailable, reporting the time average only"
            );
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut header = vec!["phi_ac", "f_bar_series_mhz"];
    if args.oracle {
        header.push("f_bar_oracle_mhz");
    }
    header.extend(["delta_hz", "second_order_hz"]);
    let mut table = Table::new(&header);
    let mut static_mhz = None;
    let mut worst: Option<f64> = None;
    for &phi_ac in &amplitudes {
        let drive = FluxDrive::with_amplitude(args.phi_dc, phi_ac)?;
        let f_bar = series.as_ref().map(|s| s.evaluate(&drive));
        if static_mhz.is_none() {
            static_mhz = series
                .as_ref()
                .map(|s| s.evaluate(&FluxDrive::with_amplitude(args.phi_dc, 0.0).unwrap()));
        }
        let mut row = vec![Some(phi_ac), f_bar];
        if args.oracle {
            let oracle = time_average_oracle(&params, &drive, args.oracle_steps)?;
            if let Some(f) = f_bar {
                let d = (f - oracle).abs();
                worst = Some(worst.map_or(d, |w| w.max(d)));
            }
            row.push(Some(oracle));
        }
        row.push(series.as_ref().map(|s| s.shift(&drive) * 1e6));
        row.push(Some(second_order_shift(&params, phi_ac)));
        table.push(row);
    }
    let sink = Sink {
        json,
        out: args.out,
    };
    sink.table(&table)?;
    let summary = ModulateSummary {
        qubit: &qubit.name,
        phi_dc: args.phi_dc,
        order: args.order,
        points: table.len(),
        static_mhz,
        max_series_oracle_deviation_mhz: worst,
    };
    let mut human = format!(
        "{}: {} amplitudes at phi_dc {}",
        qubit.name,
        table.len(),
        num(args.phi_dc)
    );
    if let Some(f) = static_mhz {
        let _ = write!(human, ", static f {} MHz", num(f));
    }
    if let Some(w) = worst {
        let _ = write!(human, ", max |series - oracle| {} MHz", num(w));
    }
    human.push('\n');
    sink.summary(&human, &summary)
}

pub fn crosstalk(args: CrosstalkArgs, json: bool) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let qubit = config.qubit(&args.qubit)?;
    let params = qubit.params()?;
    let gamma_db = match (&args.chain, args.gamma_db) {
        (Some(name), _) => chain_total(config.chain(name)?)?.total_db,
        (None, Some(g)) => g,
        (None, None) => return Err(CliError::input("give --gamma-db or --chain")),
    };
    let budget = LineBudget::new(
        gamma_db,
        args.r_ohm,
        args.m_fh.unwrap_or(qubit.m_fh),
        args.v_p,
    )?;
    let report = spurious_shift_report(&params, &budget, args.linewidth_hz)?;
    print_stdout(
        &(to_json(&json!({
            "qubit": qubit.name,
            "gamma_db": budget.gamma_db,
            "r_ohm": budget.r_ohm,
            "m_fH": budget.m_fh,
            "v_p": budget.v_p,
            "current_a": report.current_a,
            "phi_ac": report.phi_ac,
            "delta_f_hz": report.delta_f_hz,
            "linewidth_hz": report.linewidth_hz,
            "detectable": report.detectable,
        }))? + "\n"),
    )?;
    if !json {
        eprintln!(
            "{}: I = {} A, phi_ac = {} Phi0, shift {} Hz ({} the {} Hz linewidth)",
            qubit.name,
            num(report.current_a),
            num(report.phi_ac),
            num(report.delta_f_hz),
            if report.detectable { "above" } else { "below" },
            num(report.linewidth_hz)
        );
    }
    Ok(())
}

pub fn diplexer(args: DiplexerArgs, json: bool) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let mut design = config.diplexer.clone();
    if let Some(n) = args.lp_order {
        design.lp_order = n;
    }
    if let Some(n) = args.bp_order {
        design.bp_order = n;
    }
    if let Some(path) = &args.spec {
        design.spec = serde_json::from_str::<DiplexerSpec>(&read(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    let diplexer = design.build()?;
    let grid = if args.points == default_grid().len() {
        default_grid()
    } else if args.points >= 2 {
        log_grid(10.0, 15000.0, args.points)
    } else {
        return Err(CliError::input("--points must be >= 2"));
    };
    let response = diplexer.evaluate(&grid)?;
    let mut table = Table::new(&["frequency_mhz", "s31_db", "s32_db", "s12_db", "s33_db"]);
    for p in &response {
        table.push(vec![
            Some(p.frequency_mhz),
            Some(p.s31_db()),
            Some(p.s32_db()),
            Some(p.s12_db()),
            Some(p.s33_db()),
        ]);
    }
    let report = check_spec(&response, &design.spec)?;
    let body = json!({
        "lp_order": design.lp_order,
        "bp_order": design.bp_order,
        "z0": design.z0,
        "absorber_ohm_per_ghz": design.absorber_ohm_per_ghz,
        "spec": design.spec,
        "report": report,
    });
    if let Some(path) = &args.report {
        write_file(path, &(to_json(&body)? + "\n"))?;
    }
    let sink = Sink {
        json,
        out: args.out,
    };
    sink.table(&table)?;
    let mut human = format!(
        "diplexer LP n={} / BP n={}: spec {}\n",
        design.lp_order,
        design.bp_order,
        if report.pass { "PASS" } else { "FAIL" }
    );
    for item in &report.items {
        let _ = writeln!(
            human,
            "  {:<14} {}  measured {}  target {}  margin {}",
            item.name,
            if item.pass { "pass" } else { "FAIL" },
            item.measured.map(num).unwrap_or_else(|| "-".into()),
            num(item.target),
            num(item.margin)
        );
    }
    sink.summary(&human, &body)
}

fn write_residuals(
    path: &PathBuf,
    model: &dyn Model,
    data: &DataSeries,
    result: &FitResult,
) -> Result<(), CliError> {
    let params: Vec<f64> = result.params.values().copied().collect();
    let mut table = Table::new(&["x", "y", "model", "residual"]);
    for p in &data.points {
        let m = model.value(p.x, &params);
        table.push(vec![Some(p.x), Some(p.y), Some(m), Some(p.y - m)]);
    }
    write_file(path, &table.to_csv())
}

pub fn fit(args: FitArgs, json: bool) -> Result<(), CliError> {
    let data = DataSeries::from_csv(&read(&args.data)?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.data.display())))?;
    let beta_model;
    let (result, model): (FitResult, &dyn Model) = match args.kind {
        FitKind::T1 => (fit::fit_t1(&data)?, &fit::ExpDecay),
        FitKind::Ramsey => (fit::fit_ramsey(&data)?, &fit::RamseyFringe),
        FitKind::Rb => (fit::fit_rb(&data)?, &fit::RbDecay),
        FitKind::Tuning => {
            let options = TuningOptions {
                fixed_e_c: args.fixed_e_c,
                refine_exact: args.refine_exact,
            };
            let model: &dyn Model = if args.refine_exact {
                &fit::TuningCurveExact {
                    basis_size: fluxline::transmon::DEFAULT_BASIS_SIZE,
                }
            } else {
                &fit::TuningCurve
            };
            (fit::fit_tuning_curve(&data, options)?, model)
        }
        FitKind::Beta => {
            let config = load_config(&args.config)?;
            let qubit = match &args.qubit {
                Some(name) => config.qubit(name)?,
                None => config
                    .qubits
                    .first()
                    .ok_or_else(|| CliError::input("config has no qubits"))?,
            };
            let params = qubit.params()?;
            beta_model = fit::BetaModel::new(&params, args.phi_dc)?;
            (fit::fit_beta(&data, &params, args.phi_dc)?, &beta_model)
        }
    };
    if let Some(path) = &args.residuals {
        if result.converged {
            write_residuals(path, model, &data, &result)?;
        }
    }
    print_stdout(&(to_json(&result)? + "\n"))?;
    if !json {
        let mut human = String::new();
        for (name, value) in &result.params {
            let _ = writeln!(
                human,
                "  {name:<14} {} ± {}",
                num(*value),
                num(result.std_errors[name])
            );
        }
        for (name, value) in &result.derived {
            let _ = writeln!(human, "  {name:<14} {}", num(*value));
        }
        for w in &result.warnings {
            let _ = writeln!(human, "warning: {w}");
        }
        eprint!("{human}");
    }
    if result.converged {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_NONCONVERGENCE,
            message: format!(
                "fit did not converge after {} iterations (residual norm {}, gradient measure {}){}",
                result.iterations,
                num(result.residual_norm),
                num(result.gradient_norm),
                result.warnings.first().map(|w| format!(": {w}")).unwrap_or_default()
            ),
        })
    }
}
