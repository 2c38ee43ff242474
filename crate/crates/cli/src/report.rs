use serde::Serialize;

/// One command's result as printed on stdout.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub target_digits: u32,
    pub value_digits: String,
    pub terms_used: usize,
    /// `null` for runs that do not sum a series.
    pub digits_per_term: Option<f64>,
    pub oracle_agreement_digits: i64,
    pub elapsed_seconds: f64,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn text(&self) -> String {
        let mut out = format!("{}\n  value      {}\n", self.command, self.value_digits);
        out += &format!(
            "  digits     {} requested, {} agree with oracle\n",
            self.target_digits, self.oracle_agreement_digits
        );
        match self.digits_per_term {
            Some(rate) => {
                out += &format!("  terms      {} ({rate:.2} digits/term)\n", self.terms_used)
            }
            None if self.terms_used > 0 => out += &format!("  terms      {}\n", self.terms_used),
            None => {}
        }
        out += &format!("  elapsed    {:.3} s\n", self.elapsed_seconds);
        for w in &self.warnings {
            out += &format!("  warning    {w}\n");
        }
        out
    }
}

/// Agreement as a whole number of digits, capped at `cap` when the values
/// coincide exactly.
pub fn whole_digits(agreement: f64, cap: u32) -> i64 {
    if agreement.is_nan() {
        return 0;
    }
    agreement.min(f64::from(cap)).floor() as i64
}
