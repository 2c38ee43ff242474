//! Reference evaluators built on the arithmetic-geometric mean and the θ₃
//! q-series. Nothing here touches the Legendre-series code; these are the
//! values the series are checked against.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::numeric::{BigReal, PrecisionContext};

const MAX_AGM_STEPS: usize = 10_000;

/// The nome `q = exp(-π√r)` attached to a singular modulus `k_r`.
#[derive(Debug, Clone)]
pub struct NomeValue {
    pub r: Rational64,
    pub q: BigReal,
}

fn converged(a: &BigReal, b: &BigReal, ctx: &PrecisionContext) -> bool {
    (a - b).log10_abs() < a.log10_abs() - f64::from(ctx.working_digits())
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(a: &BigReal, b: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::Domain("agm requires positive arguments".into()));
    }
    let mut a = ctx.coerce(a);
    let mut b = ctx.coerce(b);
    for _ in 0..MAX_AGM_STEPS {
        if converged(&a, &b, ctx) {
            break;
        }
        let next_a = &(&a + &b) / 2;
        let next_b = ctx.sqrt(&(&a * &b))?;
        a = next_a;
        b = next_b;
    }
    Ok(a)
}

fn check_modulus(k: &BigReal, allow_one: bool, ctx: &PrecisionContext) -> Result<()> {
    if k.is_negative() {
        return Err(Error::Domain(format!(
            "modulus must be non-negative, got {}",
            k.to_f64()
        )));
    }
    let one = ctx.one();
    let too_big = if allow_one { *k > one } else { *k >= one };
    if too_big {
        return Err(Error::Domain(format!(
            "modulus {} outside the admissible range for this integral",
            k.to_f64()
        )));
    }
    Ok(())
}

/// `k' = sqrt((1 - k)(1 + k))`.
pub fn complementary(k: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    let one = ctx.one();
    ctx.sqrt(&(&(&one - k) * &(&one + k)))
}

/// Complete elliptic integral of the first kind, `K(k) = π / (2·agm(1, k'))`.
pub fn k_ref(k: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    check_modulus(k, false, ctx)?;
    k_ref_from_complement(&complementary(k, ctx)?, ctx)
}

/// `K` evaluated from the complementary modulus `k'` directly. For tiny `k`
/// the pair `(k, k')` is known more accurately than `k` alone determines
/// `k'`, so moduli code calls this form.
pub fn k_ref_from_complement(k_prime: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    let m = agm(&ctx.one(), k_prime, ctx)?;
    Ok(&ctx.pi() / &(&m * 2))
}

/// Complete elliptic integral of the second kind.
pub fn e_ref(k: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    check_modulus(k, true, ctx)?;
    if *k == ctx.one() {
        return Ok(ctx.one());
    }
    e_ref_pair(k, &complementary(k, ctx)?, ctx)
}

/// `E(k)` via the AGM side sum `E = K·(1 - Σ 2^(n-1) c_n²)`, with
/// `c_0 = k` and `c_(n+1) = c_n² / (4 a_(n+1))` (the cancellation-free form
/// of `(a_n - b_n)/2`).
pub fn e_ref_pair(k: &BigReal, k_prime: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    if k_prime.is_zero() {
        return Ok(ctx.one());
    }
    let mut a = ctx.one();
    let mut b = ctx.coerce(k_prime);
    let mut c_sq = ctx.coerce(k).square();
    // running Σ 2^(n-1) c_n², starting with the n = 0 term c_0²/2
    let mut side = &c_sq / 2;
    let mut weight = ctx.one();
    let floor = -f64::from(ctx.working_digits()) - 2.0;
    for _ in 0..MAX_AGM_STEPS {
        if converged(&a, &b, ctx) && (&c_sq * &weight).log10_abs() < floor {
            break;
        }
        let next_a = &(&a + &b) / 2;
        let next_b = ctx.sqrt(&(&a * &b))?;
        c_sq = &c_sq.square() / &(&next_a.square() * 16);
        a = next_a;
        b = next_b;
        side = &side + &(&c_sq * &weight);
        weight = &weight * 2;
    }
    let k_val = &ctx.pi() / &(&a * 2);
    Ok(&k_val * &(&ctx.one() - &side))
}

/// `θ₃(q) = 1 + 2 Σ_{n≥1} q^(n²)`.
///
/// The sum stops at the first term below `10^(-working_digits)`. Terms are
/// `q^(n²)`, so at most `sqrt(working_digits / |log10 q|) + 1` of them are
/// added: about 11 for `q = e^(-π)` at 500 digits.
pub fn theta3(q: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    if q.is_negative() {
        return Err(Error::Domain("theta3 nome must be non-negative".into()));
    }
    if *q >= ctx.coerce(&ctx.one()) {
        return Err(Error::Domain("theta3 diverges for q >= 1".into()));
    }
    let q = ctx.coerce(q);
    let mut sum = ctx.zero();
    let q_sq = q.square();
    // term = q^(n²), step = q^(2n+1)
    let mut term = q.clone();
    let mut step = &q * &q_sq;
    let floor = -f64::from(ctx.working_digits());
    while !term.is_zero() && term.log10_abs() >= floor {
        sum = &sum + &term;
        term = &term * &step;
        step = &step * &q_sq;
    }
    Ok(&(&sum * 2) + 1)
}

/// `q = exp(-π√r)`.
pub fn nome(r: Rational64, ctx: &PrecisionContext) -> Result<NomeValue> {
    if *r.numer() <= 0 {
        return Err(Error::Domain(format!("nome requires r > 0, got {r}")));
    }
    let root_r = ctx.sqrt(&ctx.ratio(r))?;
    let q = ctx.exp(&-(&ctx.pi() * &root_r));
    Ok(NomeValue { r, q })
}

/// `Γ(1/4)²` from the lemniscatic identity `Γ(1/4)² = 2π^(3/2) / agm(1, 1/√2)`.
pub fn gamma_quarter_squared(ctx: &PrecisionContext) -> Result<BigReal> {
    let pi = ctx.pi();
    let inv_sqrt2 = ctx.sqrt(&ctx.frac(1, 2))?;
    let m = agm(&ctx.one(), &inv_sqrt2, ctx)?;
    let pi_three_halves = &pi * &ctx.sqrt(&pi)?;
    Ok(&(&pi_three_halves * 2) / &m)
}

/// `b(1/4) = Γ(1/4)² / Γ(1/2) · sqrt(tan(π/4)) = Γ(1/4)² / √π`.
pub fn b_quarter(ctx: &PrecisionContext) -> Result<BigReal> {
    let gamma_sq = gamma_quarter_squared(ctx)?;
    let gamma_half = ctx.sqrt(&ctx.pi())?;
    let tan_factor = ctx.sqrt(&ctx.tan_pi(Rational64::new(1, 4))?)?;
    Ok(&(&gamma_sq / &gamma_half) * &tan_factor)
}

/// Reference value of the headline constant `Γ(1/4)² / π^(3/2) = b(1/4)/π`.
pub fn gamma_quarter_constant(ctx: &PrecisionContext) -> Result<BigReal> {
    Ok(&b_quarter(ctx)? / &ctx.pi())
}
