use std::time::Instant;

use ellipk_core::moduli::{solve_kr, K_PRIME_400_NOTE};
use ellipk_core::numeric::agreement_digits;
use ellipk_core::oracle::{e_ref_pair, k_ref_from_complement, nome, theta3};
use ellipk_core::series::{
    four_e_over_pi_series, gamma_quarter_geometric_rate, gamma_quarter_series,
    two_k_over_pi_series, NORMALIZATION_NOTE,
};
use ellipk_core::verify::{parse_selection, run, CheckKind};
use ellipk_core::{make_context, BigReal, Error, ModulusPair, PrecisionContext, Rational64};

use crate::report::{whole_digits, RunReport};
use crate::{ConstantName, Kind, Method};

/// Digits-per-term figure usually quoted for the headline series.
const QUOTED_RATE: f64 = 120.0;

pub enum Failure {
    Core(Error),
    /// Verification ran but a check failed; the report is still printed.
    Verification(Box<RunReport>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OracleMismatch { .. } | Error::RootSelection { .. } => 3,
        _ => 2,
    }
}

fn value_digits(ctx: &PrecisionContext, v: &BigReal) -> String {
    ctx.to_decimal(v, ctx.target_digits() as usize)
}

pub fn constant(name: ConstantName, digits: u32) -> Result<RunReport, Failure> {
    let ConstantName::GammaQuarter = name;
    let start = Instant::now();
    let ctx = make_context(digits)?;
    let (value, report) = gamma_quarter_series(None, &ctx)?;
    let geometric = gamma_quarter_geometric_rate(&ctx)?;
    Ok(RunReport {
        command: "constant gamma-quarter".into(),
        target_digits: digits,
        value_digits: value_digits(&ctx, &value),
        terms_used: report.terms_used,
        digits_per_term: finite(report.digits_per_term),
        oracle_agreement_digits: whole_digits(report.final_error_vs_oracle, ctx.working_digits()),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        warnings: vec![
            NORMALIZATION_NOTE.into(),
            K_PRIME_400_NOTE.into(),
            format!(
                "digits per term: measured {:.2}, geometric estimate -2 log10 w = {geometric:.2}, quoted figure about {QUOTED_RATE:.0}",
                report.digits_per_term
            ),
        ],
    })
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::K => "K",
        Kind::E => "E",
    }
}

pub fn elliptic(
    kind: Kind,
    r: Rational64,
    method: Method,
    digits: u32,
) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let ctx = make_context(digits)?;
    if method != Method::Agm && r == Rational64::from_integer(1) {
        return Err(Error::SingularConfiguration {
            r: r.to_string(),
            detail: "k_1 = 1/sqrt2 makes 1 - 2k^2 vanish, so the series weights are singular; use --method agm".into(),
        }
        .into());
    }
    let pair = solve_kr(r, &ctx)?;
    let half_pi = &ctx.pi() / 2;
    let agm_value = match kind {
        Kind::K => pair.k_value(&ctx)?,
        Kind::E => e_ref_pair(&pair.k, &pair.k_prime, &ctx)?,
    };
    let mut warnings = Vec::new();
    let (value, terms, rate, agreement) = match method {
        Method::Agm => {
            let agreement = agm_self_check(kind, &pair, &agm_value, &ctx)?;
            warnings.push(match kind {
                Kind::K => "agreement is against pi/2 theta3(q)^2".to_string(),
                Kind::E => "agreement is the Legendre relation residual".to_string(),
            });
            (agm_value, 0, None, agreement)
        }
        Method::Series | Method::Both => {
            let (scaled, report) = match kind {
                Kind::K => two_k_over_pi_series(&pair, &ctx)?,
                Kind::E => four_e_over_pi_series(&pair, &ctx)?,
            };
            // series give 2K/π and 4E/π
            let factor = match kind {
                Kind::K => half_pi.clone(),
                Kind::E => &half_pi / 2,
            };
            let value = &scaled * &factor;
            let agreement = agreement_digits(&value, &agm_value);
            if method == Method::Both {
                warnings.push(format!(
                    "series and AGM agree to {:.1} digits",
                    agreement.min(f64::from(ctx.working_digits()))
                ));
            }
            (
                value,
                report.terms_used,
                finite(report.digits_per_term),
                agreement,
            )
        }
    };
    let method_name = match method {
        Method::Series => "series",
        Method::Agm => "agm",
        Method::Both => "both",
    };
    let oracle_agreement_digits = whole_digits(agreement, ctx.working_digits());
    let required = f64::from(digits) - 5.0;
    if (oracle_agreement_digits as f64) < required {
        return Err(Error::OracleMismatch {
            agreement,
            required,
        }
        .into());
    }
    Ok(RunReport {
        command: format!(
            "elliptic {} --r {r} --method {method_name}",
            kind_name(kind)
        ),
        target_digits: digits,
        value_digits: value_digits(&ctx, &value),
        terms_used: terms,
        digits_per_term: rate,
        oracle_agreement_digits,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

/// Independent check of an AGM value: `K = π θ₃(q)² / 2` or the Legendre
/// relation `E K' + E' K - K K' = π/2`.
fn agm_self_check(
    kind: Kind,
    pair: &ModulusPair,
    value: &BigReal,
    ctx: &PrecisionContext,
) -> Result<f64, Error> {
    let half_pi = &ctx.pi() / 2;
    match kind {
        Kind::K => {
            let theta = theta3(&nome(pair.r, ctx)?.q, ctx)?;
            Ok(agreement_digits(value, &(&theta.square() * &half_pi)))
        }
        Kind::E => {
            let k = k_ref_from_complement(&pair.k_prime, ctx)?;
            let kc = k_ref_from_complement(&pair.k, ctx)?;
            let ec = e_ref_pair(&pair.k_prime, &pair.k, ctx)?;
            let lhs = &(&(value * &kc) + &(&ec * &k)) - &(&k * &kc);
            Ok(agreement_digits(&lhs, &half_pi))
        }
    }
}

pub fn verify(selection: &str, digits: u32, table: bool) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let suites = parse_selection(selection)?;
    let ctx = make_context(digits)?;
    let report = run(&suites, &ctx);
    // the table is the human-readable output; with JSON it goes to stderr
    if table {
        println!("{report}");
    } else {
        eprintln!("{report}");
    }
    let mut warnings: Vec<String> = report
        .outcomes
        .iter()
        .filter(|o| o.kind != CheckKind::Gate)
        .map(|o| format!("{}: {}", o.name, o.detail))
        .collect();
    if let Some(worst) = report.worst_failure() {
        warnings.push(format!(
            "worst failure: {} {} at {:.1} digits (needs {:.0}) {}",
            worst.suite, worst.name, worst.digits, worst.required, worst.detail
        ));
    }
    let passed = report.outcomes.iter().filter(|o| o.passed).count();
    let run_report = RunReport {
        command: format!(
            "verify --selection {}",
            suites
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(",")
        ),
        target_digits: digits,
        value_digits: format!("{passed}/{} checks passed", report.outcomes.len()),
        terms_used: 0,
        digits_per_term: None,
        oracle_agreement_digits: whole_digits(report.min_gate_digits(), ctx.working_digits()),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        warnings,
    };
    if report.all_passed() {
        Ok(run_report)
    } else {
        Err(Failure::Verification(Box::new(run_report)))
    }
}

pub fn bench(targets: &[u32]) -> Result<Vec<RunReport>, Failure> {
    if let Some(&low) = targets.iter().find(|&&d| d < 100) {
        return Err(Error::Domain(format!(
            "bench targets must be at least 100 digits, got {low}"
        ))
        .into());
    }
    let mut out = Vec::new();
    for &digits in targets {
        out.push(constant(ConstantName::GammaQuarter, digits)?);

        let start = Instant::now();
        let ctx = make_context(digits)?;
        let pair = ellipk_core::moduli::k100_closed_form(&ctx)?;
        let (value, report) = two_k_over_pi_series(&pair, &ctx)?;
        let geometric = -2.0 * pair.k.log10_abs();
        out.push(RunReport {
            command: "bench 2K/pi at r = 100".into(),
            target_digits: digits,
            value_digits: value_digits(&ctx, &value),
            terms_used: report.terms_used,
            digits_per_term: finite(report.digits_per_term),
            oracle_agreement_digits: whole_digits(
                report.final_error_vs_oracle,
                ctx.working_digits(),
            ),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            warnings: vec![format!(
                "geometric estimate -2 log10 k_100 = {geometric:.2}"
            )],
        });
    }
    Ok(out)
}
