use std::f64::consts::SQRT_2;
use std::process::ExitCode;

use anyhow::{bail, Result};
use serde::Serialize;

use qkdlab_core::gaussian_channel::Quadrature;
use qkdlab_core::gkp_code::{shift_error_prob, sqrt_pi, ErrorMethod};
use qkdlab_core::protocol::{estimate_error_rates, predicted_error_rate, simulate, ProtocolOutcome, Transcript};
use qkdlab_core::security_analysis::{
    convert, delta_from_tilde, delta_xi, max_distance, solve_secure_delta, LossScenario, SqueezeParams, SqueezeSpec,
    DEFAULT_ERROR_THRESHOLD,
};

use crate::output::{emit, to_json, NumberStyle, Table};
use crate::{Cli, Command, ConvertArgs, SweepArgs, SweepVariable};

const OPERATING_POINTS: [f64; 2] = [0.01, 1e-6];

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let style = NumberStyle { pretty: cli.pretty };
    let mut code = ExitCode::SUCCESS;
    let text = match &cli.command {
        Command::Threshold { threshold } => threshold_report(threshold.unwrap_or(DEFAULT_ERROR_THRESHOLD), cli, style)?,
        Command::Convert(args) => convert_report(args, cli, style)?,
        Command::LossSweep(args) => render(loss_sweep(args, style)?, cli)?,
        Command::ErrorCurve {
            tilde_delta,
            lo,
            hi,
            points,
        } => {
            let widths = match tilde_delta {
                Some(t) => vec![*t],
                None => grid(*lo, *hi, *points)?,
            };
            render(error_curve(&widths, style)?, cli)?
        }
        Command::Wigner { tilde_delta } => render(wigner(*tilde_delta, style)?, cli)?,
        Command::Run { config, transcript } => {
            let config = config.build()?;
            let run = simulate(&config)?;
            if !run.outcome.status.is_completed() {
                code = ExitCode::from(2);
            }
            if *transcript {
                #[derive(Serialize)]
                struct WithTranscript<'a> {
                    outcome: &'a ProtocolOutcome,
                    transcript: &'a Transcript,
                }
                to_json(
                    &WithTranscript {
                        outcome: &run.outcome,
                        transcript: &run.transcript,
                    },
                    cli.pretty,
                )?
            } else {
                to_json(&run.outcome, cli.pretty)?
            }
        }
        Command::Estimate { config, trials } => {
            let config = config.build()?;
            let est = estimate_error_rates(&config, *trials)?;
            let mut t = Table::new(&["basis", "trials", "flips", "p_hat", "stderr", "predicted_channel_only"]);
            for (basis, flips) in [(Quadrature::Q, est.flips_z), (Quadrature::P, est.flips_x)] {
                let (p, se) = est.rate(basis);
                t.push(vec![
                    basis.to_string(),
                    est.trials.to_string(),
                    flips.to_string(),
                    style.num(p),
                    style.num(se),
                    style.num(predicted_error_rate(&config, basis)?),
                ]);
            }
            render(t, cli)?
        }
    };
    emit(&text, cli.out.as_deref())?;
    Ok(code)
}

fn render(table: Table, cli: &Cli) -> Result<String> {
    if cli.json {
        to_json(&table.to_json(), cli.pretty)
    } else {
        Ok(table.to_csv())
    }
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        bail!("range must satisfy lo < hi (got {lo}, {hi})");
    }
    if points < 2 {
        bail!("need at least 2 points (got {points})");
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    threshold: f64,
    #[serde(flatten)]
    params: SqueezeParams,
}

#[derive(Debug, Serialize)]
struct ThresholdReport {
    #[serde(flatten)]
    secure: ThresholdRow,
    operating_points: Vec<ThresholdRow>,
}

fn threshold_row(threshold: f64) -> Result<ThresholdRow> {
    let delta = solve_secure_delta(threshold)?;
    Ok(ThresholdRow {
        threshold,
        params: convert(SqueezeSpec::Delta(delta))?,
    })
}

fn params_cells(p: &SqueezeParams, style: NumberStyle) -> Vec<String> {
    [p.delta, p.tilde_delta, p.r, p.r_two_mode, p.db]
        .iter()
        .map(|&x| style.num(x))
        .collect()
}

fn threshold_report(threshold: f64, cli: &Cli, style: NumberStyle) -> Result<String> {
    let report = ThresholdReport {
        secure: threshold_row(threshold)?,
        operating_points: OPERATING_POINTS
            .iter()
            .filter(|&&t| t != threshold)
            .map(|&t| threshold_row(t))
            .collect::<Result<_>>()?,
    };
    if cli.json {
        return to_json(&report, cli.pretty);
    }
    let mut t = Table::new(&["threshold", "delta", "tilde_delta", "r", "r_two_mode", "db"]);
    for row in std::iter::once(&report.secure).chain(&report.operating_points) {
        let mut cells = vec![style.num(row.threshold)];
        cells.extend(params_cells(&row.params, style));
        t.push(cells);
    }
    Ok(t.to_csv())
}

fn convert_report(args: &ConvertArgs, cli: &Cli, style: NumberStyle) -> Result<String> {
    let spec = match (args.delta, args.tilde_delta, args.r, args.r_two_mode, args.db) {
        (Some(v), ..) => SqueezeSpec::Delta(v),
        (_, Some(v), ..) => SqueezeSpec::TildeDelta(v),
        (_, _, Some(v), ..) => SqueezeSpec::R(v),
        (.., Some(v), _) => SqueezeSpec::RTwoMode(v),
        (.., Some(v)) => SqueezeSpec::Db(v),
        _ => bail!("give one of --delta, --tilde-delta, --r, --r-two-mode, --db"),
    };
    let params = convert(spec)?;
    if cli.json {
        return to_json(&params, cli.pretty);
    }
    let mut t = Table::new(&["delta", "tilde_delta", "r", "r_two_mode", "db"]);
    t.push(params_cells(&params, style));
    Ok(t.to_csv())
}

fn loss_sweep(args: &SweepArgs, style: NumberStyle) -> Result<Table> {
    match args.variable {
        SweepVariable::TildeDelta => {
            let (lo, hi) = (args.lo.unwrap_or(0.01), args.hi.unwrap_or(0.74));
            if !(lo > 0.0 && hi <= 1.0) {
                bail!("tilde-delta range must lie in (0, 1] (got {lo}, {hi})");
            }
            let mut t = Table::new(&["tilde_delta", "kappa_d_max_noamp", "kappa_d_max_amp"]);
            for td in grid(lo, hi, args.points)? {
                t.push(vec![
                    style.num(td),
                    style.num(max_distance(td, false)),
                    style.num(max_distance(td, true)),
                ]);
            }
            Ok(t)
        }
        SweepVariable::KappaD => {
            let (lo, hi) = (args.lo.unwrap_or(0.0), args.hi.unwrap_or(0.5));
            if lo < 0.0 {
                bail!("kappa-d range must be non-negative (got {lo})");
            }
            let mut t = Table::new(&["kappa_d", "delta_xi", "p_exact_series"]);
            for kd in grid(lo, hi, args.points)? {
                let width = delta_xi(args.tilde_delta, LossScenario::new(kd, args.amplify)?)?;
                t.push(vec![
                    style.num(kd),
                    style.num(width),
                    style.num(shift_error_prob(width, ErrorMethod::ExactSeries)?),
                ]);
            }
            Ok(t)
        }
    }
}

fn error_curve(widths: &[f64], style: NumberStyle) -> Result<Table> {
    let mut t = Table::new(&["tilde_delta", "delta", "p_window", "p_exact_series", "p_tail_bound"]);
    for &td in widths {
        let d = delta_from_tilde(td)?;
        let mut row = vec![style.num(td), style.num(d)];
        for method in [ErrorMethod::Window, ErrorMethod::ExactSeries, ErrorMethod::TailBound] {
            row.push(style.num(shift_error_prob(d, method)?));
        }
        t.push(row);
    }
    Ok(t)
}

fn wigner(tilde_delta: f64, style: NumberStyle) -> Result<Table> {
    if !(tilde_delta > 0.0 && tilde_delta.is_finite()) {
        bail!("--tilde-delta must be a finite width > 0 (got {tilde_delta})");
    }
    let narrow = tilde_delta / SQRT_2;
    let wide = 1.0 / (tilde_delta * SQRT_2);
    let mut t = Table::new(&["squeezed", "center_q", "center_p", "semi_axis_q", "semi_axis_p"]);
    for basis in Quadrature::BOTH {
        for k in [-1.0, 0.0, 1.0] {
            let c = k * sqrt_pi();
            let (cq, cp, aq, ap) = match basis {
                Quadrature::Q => (c, 0.0, narrow, wide),
                Quadrature::P => (0.0, c, wide, narrow),
            };
            t.push(vec![
                basis.to_string(),
                style.num(cq),
                style.num(cp),
                style.num(aq),
                style.num(ap),
            ]);
        }
    }
    Ok(t)
}
