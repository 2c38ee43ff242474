//! Singular moduli `k_r`, defined by `K(k'_r) / K(k_r) = √r`.
//!
//! Provides a numeric solver for the defining equation, the radical closed
//! form of `k_100`, the Landen ascent `r → 4r` and the chain
//! `100 → 400 → 1600 → 6400`, the multipliers `M_n(m) = K[n²m] / K[m]` for
//! `n ∈ {2, 3, 5}`, and the `K[16r]` / `K[64r]` scaling factors.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::numeric::{make_context, relative_agreement_digits, BigReal, PrecisionContext};
use crate::oracle::{agm, complementary, k_ref_from_complement};

/// How a [`ModulusPair`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    LandenChain,
    NumericSolve,
}

/// A singular modulus `k_r` together with its complement `k'_r`.
#[derive(Debug, Clone)]
pub struct ModulusPair {
    pub r: Rational64,
    pub k: BigReal,
    pub k_prime: BigReal,
    pub provenance: Provenance,
}

fn tolerance_exponent(ctx: &PrecisionContext) -> f64 {
    -f64::from(ctx.working_digits()) + 5.0
}

impl ModulusPair {
    /// Validates `0 < k < 1`, `0 < k' ≤ 1` and `k² + k'² = 1` to working
    /// tolerance. `k' = 1` is admitted because for `r` in the thousands
    /// `1 - k'` is below the working precision while `k` is still exact.
    pub fn new(
        r: Rational64,
        k: BigReal,
        k_prime: BigReal,
        provenance: Provenance,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        if *r.numer() <= 0 {
            return Err(Error::InvalidModulus(format!(
                "r must be positive, got {r}"
            )));
        }
        let one = ctx.one();
        if !k.is_positive() || k >= one {
            return Err(Error::InvalidModulus(format!(
                "k = {:e} outside (0, 1)",
                k.to_f64()
            )));
        }
        if !k_prime.is_positive() || k_prime > one {
            return Err(Error::InvalidModulus(format!(
                "k' = {:e} outside (0, 1]",
                k_prime.to_f64()
            )));
        }
        let defect = &(&k.square() + &k_prime.square()) - &one;
        if defect.log10_abs() > tolerance_exponent(ctx) {
            return Err(Error::InvalidModulus(format!(
                "k² + k'² - 1 = 10^{:.1} at r = {r}",
                defect.log10_abs()
            )));
        }
        Ok(Self {
            r,
            k,
            k_prime,
            provenance,
        })
    }

    /// `K(k_r)`.
    pub fn k_value(&self, ctx: &PrecisionContext) -> Result<BigReal> {
        k_ref_from_complement(&self.k_prime, ctx)
    }

    /// `K(k'_r)`.
    pub fn k_complement_value(&self, ctx: &PrecisionContext) -> Result<BigReal> {
        k_ref_from_complement(&self.k, ctx)
    }

    /// `|K(k') / K(k) - √r|`.
    pub fn modular_residual(&self, ctx: &PrecisionContext) -> Result<BigReal> {
        let ratio = modular_ratio(&self.k, &self.k_prime, ctx)?;
        Ok((&ratio - &ctx.sqrt(&ctx.ratio(self.r))?).abs())
    }

    /// `true` when the defining-equation residual is below `10^(-working+5)`.
    pub fn satisfies_modular_relation(&self, ctx: &PrecisionContext) -> Result<bool> {
        Ok(self.modular_residual(ctx)?.log10_abs() < tolerance_exponent(ctx))
    }
}

/// `K(k') / K(k) = agm(1, k') / agm(1, k)`.
fn modular_ratio(k: &BigReal, k_prime: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    let one = ctx.one();
    Ok(&agm(&one, k_prime, ctx)? / &agm(&one, k, ctx)?)
}

fn ratio_at(k: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    modular_ratio(k, &complementary(k, ctx)?, ctx)
}

/// Solves `K(k') / K(k) = √r` for `k`.
///
/// The ratio falls strictly from `+∞` to `0` as `k` runs over `(0, 1)`. For
/// `r ≥ 1` the root lies in `[4√q / e, min(4√q, 1/√2)]` with `q = e^(-π√r)`,
/// so a bisection in `ln k` at 30 digits brackets it to ~12 digits. Newton
/// steps at full precision, with a central-difference derivative of relative
/// step `10^(-working/2)`, finish the job. `r < 1` is reduced to `1/r` by
/// swapping `k` and `k'`.
pub fn solve_kr(r: Rational64, ctx: &PrecisionContext) -> Result<ModulusPair> {
    if *r.numer() <= 0 {
        return Err(Error::Domain(format!(
            "singular modulus requires r > 0, got {r}"
        )));
    }
    let one = Rational64::from_integer(1);
    if r == one {
        let k = ctx.sqrt(&ctx.frac(1, 2))?;
        return ModulusPair::new(r, k.clone(), k, Provenance::NumericSolve, ctx);
    }
    if r < one {
        let dual = solve_kr(r.recip(), ctx)?;
        return ModulusPair::new(r, dual.k_prime, dual.k, Provenance::NumericSolve, ctx);
    }

    let k0 = bracket_ln_k(r)?;
    let mut k = ctx.coerce(&k0);
    let sqrt_r = ctx.sqrt(&ctx.ratio(r))?;
    let wd = ctx.working_digits();
    let rel_step = ctx.eps(wd / 2);
    let done = -f64::from(wd) + 2.0;
    let mut converged = false;
    for _ in 0..60 {
        let f = &ratio_at(&k, ctx)? - &sqrt_r;
        let h = &k * &rel_step;
        let up = ratio_at(&(&k + &h), ctx)?;
        let down = ratio_at(&(&k - &h), ctx)?;
        let slope = (&up - &down).checked_div(&(&h * 2))?;
        let dk = f.checked_div(&slope)?;
        k = &k - &dk;
        if dk.log10_abs() - k.log10_abs() < done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { limit: 60 });
    }
    let k_prime = complementary(&k, ctx)?;
    let pair = ModulusPair::new(r, k, k_prime, Provenance::NumericSolve, ctx)?;
    if !pair.satisfies_modular_relation(ctx)? {
        return Err(Error::NonConvergence { limit: 60 });
    }
    Ok(pair)
}

/// Low-precision bisection on `t = ln k` for `r > 1`.
fn bracket_ln_k(r: Rational64) -> Result<BigReal> {
    let lo_ctx = make_context(30)?;
    let ctx = &lo_ctx;
    let sqrt_r = ctx.sqrt(&ctx.ratio(r))?;
    let f = |t: &BigReal| -> Result<BigReal> { Ok(&ratio_at(&ctx.exp(t), ctx)? - &sqrt_r) };

    // ln(4√q) = ln 4 - π√r/2
    let asym = &ctx.ln(&ctx.int(4))? - &(&(&ctx.pi() * &sqrt_r) / 2);
    let ln_half_sqrt2 = -&(&ctx.ln(&ctx.int(2))? / 2);
    let mut hi = if asym < ln_half_sqrt2 {
        asym.clone()
    } else {
        ln_half_sqrt2.clone()
    };
    let mut lo = &asym - 1;
    while f(&lo)?.is_negative() {
        lo = &lo - 1;
    }
    while f(&hi)?.is_positive() && hi < ln_half_sqrt2 {
        hi = &(&hi + &ln_half_sqrt2) / 2;
    }
    for _ in 0..45 {
        let mid = &(&lo + &hi) / 2;
        if f(&mid)?.is_positive() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ctx.exp(&(&(&lo + &hi) / 2)))
}

/// Landen ascent `r → 4r`:
/// `k_4r = (1 - k') / (1 + k') = k² / (1 + k')²` and `k'_4r = 2√k' / (1 + k')`.
///
/// The squared form of `k_4r` is algebraically identical and avoids the
/// cancellation in `1 - k'` when `k` is small. `k'_4r` is never taken from
/// `sqrt(1 - k_4r²)`.
pub fn landen_up(p: &ModulusPair, ctx: &PrecisionContext) -> Result<ModulusPair> {
    let one_plus = &ctx.one() + &p.k_prime;
    let k = &p.k.square() / &one_plus.square();
    let k_prime = &(&ctx.sqrt(&p.k_prime)? * 2) / &one_plus;
    ModulusPair::new(p.r * 4, k, k_prime, Provenance::LandenChain, ctx)
}

/// `p = 2 + 216·5^(1/4) - 96·5^(3/4)`, just below 4.
pub fn p_parameter(ctx: &PrecisionContext) -> Result<BigReal> {
    let five = ctx.int(5);
    let q1 = ctx.root(&five, 4)?;
    let q3 = &q1 * &ctx.sqrt(&five)?;
    Ok(&(&(&q1 * 216) - &(&q3 * 96)) + 2)
}

/// Radical closed form of `k_100` and its complement:
/// `k = (2 - √p) / (2 + √p)`, `k' = 2√2·p^(1/4) / (2 + √p)`.
///
/// `p` is evaluated with 12 extra digits since `2 - √p ≈ 2.4·10⁻⁶` and
/// `4 - p` cancel against terms of size ~300.
pub fn k100_closed_form(ctx: &PrecisionContext) -> Result<ModulusPair> {
    let wide = ctx.widened(12);
    let p = p_parameter(&wide)?;
    let sqrt_p = wide.sqrt(&p)?;
    let denom = &sqrt_p + 2;
    let k = &(&wide.int(2) - &sqrt_p) / &denom;
    let k_prime = &(&(&wide.sqrt(&wide.int(2))? * 2) * &wide.root(&p, 4)?) / &denom;
    let pair = ModulusPair::new(
        Rational64::from_integer(100),
        ctx.coerce(&k),
        ctx.coerce(&k_prime),
        Provenance::ClosedForm,
        ctx,
    )?;
    if !pair.satisfies_modular_relation(ctx)? {
        return Err(Error::InvalidModulus(
            "k_100 closed form fails K(k')/K(k) = 10".into(),
        ));
    }
    Ok(pair)
}

/// Pairs for `r = 100, 400, 1600, 6400` by Landen ascent from the `k_100`
/// closed form.
pub fn landen_chain_from_k100(ctx: &PrecisionContext) -> Result<Vec<ModulusPair>> {
    let mut pairs = vec![k100_closed_form(ctx)?];
    for _ in 0..3 {
        let next = landen_up(pairs.last().expect("non-empty"), ctx)?;
        pairs.push(next);
    }
    Ok(pairs)
}

/// Comparison of one printed radical display against the ascent value.
#[derive(Debug, Clone)]
pub struct PrintedFormCheck {
    pub label: &'static str,
    pub printed: BigReal,
    pub derived: BigReal,
    /// Relative decimal digits of agreement.
    pub agreement_digits: f64,
    pub note: Option<&'static str>,
}

impl PrintedFormCheck {
    pub fn agrees(&self, ctx: &PrecisionContext) -> bool {
        self.agreement_digits >= f64::from(ctx.target_digits()) - 5.0
    }
}

/// The Landen chain together with its printed-form cross-checks.
#[derive(Debug, Clone)]
pub struct Chain {
    pub pairs: Vec<ModulusPair>,
    pub printed: Vec<PrintedFormCheck>,
}

pub const K_PRIME_400_NOTE: &str =
    "printed k'_400 coefficient 2^(7/3) disagrees with the Landen ascent; \
     the ascent gives 2^(7/4), which is used throughout";

/// Builds the `100 → 6400` chain and evaluates the printed displays for
/// `k_400`, `k'_400`, `k_1600` and `k_6400 = w` next to it.
pub fn chain_to_6400(ctx: &PrecisionContext) -> Result<Chain> {
    let pairs = landen_chain_from_k100(ctx)?;
    // the printed k_1600 and w lose ~27 and ~55 digits to cancellation
    let wide = ctx.widened(80);
    let printed = printed_forms(&wide)?;
    let derived = [
        &pairs[1].k,
        &pairs[1].k_prime,
        &pairs[1].k_prime,
        &pairs[2].k,
        &pairs[3].k,
    ];
    let labels = [
        ("k400", None),
        ("k'400 [printed 2^(7/3)]", Some(K_PRIME_400_NOTE)),
        ("k'400 [exponent 7/4]", None),
        ("k1600", None),
        ("k6400 = w", None),
    ];
    let printed = printed
        .into_iter()
        .zip(derived)
        .zip(labels)
        .map(|((value, derived), (label, note))| {
            let value = ctx.coerce(&value);
            PrintedFormCheck {
                label,
                agreement_digits: relative_agreement_digits(&value, derived),
                printed: value,
                derived: derived.clone(),
                note,
            }
        })
        .collect();
    Ok(Chain { pairs, printed })
}

/// Printed displays, in the order `k400`, `k'400` (2^(7/3)), `k'400` (2^(7/4)),
/// `k1600`, `w`.
fn printed_forms(ctx: &PrecisionContext) -> Result<Vec<BigReal>> {
    let p = p_parameter(ctx)?;
    let sqrt2 = ctx.sqrt(&ctx.int(2))?;
    let p4 = ctx.root(&p, 4)?;
    let p8 = ctx.root(&p, 8)?;
    let p16 = ctx.root(&p, 16)?;
    let sqrt_p = ctx.sqrt(&p)?;
    let two_plus_sqrt_p = &sqrt_p + 2;
    let pow2 = |e: Rational64| ctx.pow_ratio(&ctx.int(2), e);

    let k400 = (&(&sqrt2 - &p4) / &(&sqrt2 + &p4)).square();
    let a = (&sqrt2 + &p4).square();
    let tail = &p8 * &ctx.sqrt(&two_plus_sqrt_p)?;
    let kp400_printed = &(&pow2(Rational64::new(7, 3))? * &tail) / &a;
    let kp400_fixed = &(&pow2(Rational64::new(7, 4))? * &tail) / &a;

    let x = &(&pow2(Rational64::new(3, 4))? * 2) * &tail;
    let k1600 = &(&a - &x) / &(&a + &x);

    // w: numerator and denominator differ only in the sign of `b`
    let inner = &(&(&(&sqrt2 * 2) + &(&p4 * 4)) + &(&sqrt2 * &sqrt_p));
    let b = &(&(&(&pow2(Rational64::new(5, 8))? * 2) * &ctx.root(&two_plus_sqrt_p, 4)?)
        * &ctx.sqrt(inner)?)
        * &p16;
    let rest = &(&(&(&ctx.int(2) + &x) + &(&(&sqrt2 * 2) * &p4)) + &sqrt_p);
    let w = &(rest - &b) / &(rest + &b);

    Ok(vec![k400, kp400_printed, kp400_fixed, k1600, w])
}

/// `M_n(m) = K[n²m] / K[m]` with the root that was selected.
#[derive(Debug, Clone)]
pub struct MultiplierResult {
    pub n: u32,
    pub m: Rational64,
    pub value: BigReal,
    /// Residual of the defining polynomial at `value`; zero for `n = 2`.
    pub residual: BigReal,
    /// `log10 |K[n²m] - M·K[m]| - log10 K[m]` for the selected root.
    pub k_ratio_mismatch_log10: f64,
    /// Other real roots in `(0, 1)` that did not reproduce the K ratio.
    pub rejected_roots: Vec<f64>,
}

/// Multiplier `M_n(m)` for `n ∈ {2, 3, 5}`.
///
/// `n = 2` is `(1 + k'_m)/2`. For `n = 3` and `n = 5` the real roots in
/// `(0, 1)` of
/// `27M⁴ - 18M² - 8(1 - 2k²)M - 1` and `(5M - 1)⁵(1 - M) - 256k²(1 - k²)M`
/// are located by a sign scan with step `10⁻³`, bisected in double precision
/// and Newton-polished at full precision; the root matching
/// `K[n²m] / K[m]` (AGM oracle) is returned.
pub fn multiplier(n: u32, m: Rational64, ctx: &PrecisionContext) -> Result<MultiplierResult> {
    if ![2, 3, 5].contains(&n) {
        return Err(Error::Domain(format!(
            "multiplier defined here for n in {{2, 3, 5}}, got {n}"
        )));
    }
    let base = solve_kr(m, ctx)?;
    let scaled = solve_kr(m * Rational64::from_integer(i64::from(n * n)), ctx)?;
    let k_base = base.k_value(ctx)?;
    let k_scaled = scaled.k_value(ctx)?;
    let mismatch =
        |value: &BigReal| (&k_scaled - &(value * &k_base)).log10_abs() - k_base.log10_abs();

    if n == 2 {
        let value = &(&ctx.one() + &base.k_prime) / 2;
        return Ok(MultiplierResult {
            n,
            m,
            k_ratio_mismatch_log10: mismatch(&value),
            value,
            residual: ctx.zero(),
            rejected_roots: Vec::new(),
        });
    }

    let k_sq = base.k.square();
    let kp_sq = base.k_prime.square();
    let poly = MultiplierPoly::new(n, &k_sq, &kp_sq);
    let candidates = poly.roots_in_unit_interval(ctx);

    let mut scored: Vec<(BigReal, f64)> = candidates
        .into_iter()
        .map(|root| {
            let miss = mismatch(&root);
            (root, miss)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut scored = scored.into_iter();
    let best = scored.next();
    let rejected = scored.map(|(root, _)| root.to_f64()).collect();
    let required = -f64::from(ctx.target_digits()) + 10.0;
    match best {
        Some((value, miss)) if miss < required => Ok(MultiplierResult {
            n,
            m,
            residual: poly.eval(&value).abs(),
            value,
            k_ratio_mismatch_log10: miss,
            rejected_roots: rejected,
        }),
        other => Err(Error::RootSelection {
            n,
            m: m.to_string(),
            best_log10: other.map_or(f64::INFINITY, |(_, miss)| miss),
        }),
    }
}

/// The modular-equation polynomials for `M_3` and `M_5`, in terms of
/// `k²` and `k'² = 1 - k²`.
struct MultiplierPoly {
    n: u32,
    // n = 3: 8(1 - 2k²) = 8(k'² - k²); n = 5: 256 k² k'²
    coeff: BigReal,
}

impl MultiplierPoly {
    fn new(n: u32, k_sq: &BigReal, kp_sq: &BigReal) -> Self {
        let coeff = match n {
            3 => &(kp_sq - k_sq) * 8,
            _ => &(k_sq * kp_sq) * 256,
        };
        Self { n, coeff }
    }

    fn eval(&self, m: &BigReal) -> BigReal {
        if self.n == 3 {
            let m2 = m.square();
            &(&(&(&m2.square() * 27) - &(&m2 * 18)) - &(&self.coeff * m)) - 1
        } else {
            let u = &(m * 5) - 1;
            &(&u.powi(5) * &(&(m * -1) + 1)) - &(&self.coeff * m)
        }
    }

    fn derivative(&self, m: &BigReal) -> BigReal {
        if self.n == 3 {
            &(&(&m.powi(3) * 108) - &(m * 36)) - &self.coeff
        } else {
            let u = &(m * 5) - 1;
            let one_minus = &(m * -1) + 1;
            &(&(&(&u.powi(4) * 25) * &one_minus) - &u.powi(5)) - &self.coeff
        }
    }

    fn second_derivative(&self, m: &BigReal) -> BigReal {
        if self.n == 3 {
            &(&m.square() * 324) - 36
        } else {
            let u = &(m * 5) - 1;
            let one_minus = &(m * -1) + 1;
            &(&(&u.powi(3) * 500) * &one_minus) - &(&u.powi(4) * 50)
        }
    }

    fn eval_f64(&self, m: f64, c: f64) -> f64 {
        if self.n == 3 {
            27.0 * m.powi(4) - 18.0 * m * m - c * m - 1.0
        } else {
            (5.0 * m - 1.0).powi(5) * (1.0 - m) - c * m
        }
    }

    fn derivative_f64(&self, m: f64, c: f64) -> f64 {
        if self.n == 3 {
            108.0 * m.powi(3) - 36.0 * m - c
        } else {
            let u = 5.0 * m - 1.0;
            25.0 * u.powi(4) * (1.0 - m) - u.powi(5) - c
        }
    }

    /// Simple roots from sign changes of the polynomial, plus double roots
    /// (sign changes of the derivative where the polynomial nearly vanishes).
    fn roots_in_unit_interval(&self, ctx: &PrecisionContext) -> Vec<BigReal> {
        let c = self.coeff.to_f64();
        let f = |m: f64| self.eval_f64(m, c);
        let df = |m: f64| self.derivative_f64(m, c);
        let mut roots: Vec<BigReal> = sign_changes(f)
            .into_iter()
            .filter(|&r| r > 0.0 && r < 1.0)
            .filter_map(|r| self.polish(ctx.from_f64(r), ctx))
            .collect();
        let double = sign_changes(df)
            .into_iter()
            .filter(|&r| r > 0.0 && r < 1.0 && f(r).abs() < 1e-6 * (1.0 + c.abs()))
            .filter_map(|r| self.polish_double(ctx.from_f64(r), ctx));
        for m in double {
            if roots.iter().all(|x| (x - &m).log10_abs() > -8.0) {
                roots.push(m);
            }
        }
        roots
    }

    fn polish_double(&self, mut m: BigReal, ctx: &PrecisionContext) -> Option<BigReal> {
        let done = -f64::from(ctx.working_digits()) + 2.0;
        for _ in 0..100 {
            let step = self
                .derivative(&m)
                .checked_div(&self.second_derivative(&m))
                .ok()?;
            m = &m - &step;
            if step.log10_abs() < done {
                return Some(m);
            }
        }
        None
    }

    fn polish(&self, mut m: BigReal, ctx: &PrecisionContext) -> Option<BigReal> {
        let done = -f64::from(ctx.working_digits()) + 2.0;
        for _ in 0..100 {
            let step = self.eval(&m).checked_div(&self.derivative(&m)).ok()?;
            m = &m - &step;
            if step.log10_abs() < done {
                return Some(m);
            }
        }
        Some(m)
    }
}

/// Bisected sign changes of `f` on a grid of step `10⁻³` over `[0, 1]`.
fn sign_changes(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let steps = 1000;
    for i in 0..steps {
        let (mut a, mut b) = (i as f64 / steps as f64, (i + 1) as f64 / steps as f64);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if f(mid).signum() == f(a).signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// `((1 + √k')/2)²`, the factor with `K[16r] = factor · K[r]`.
pub fn k_scale_16(p: &ModulusPair, ctx: &PrecisionContext) -> Result<BigReal> {
    let s = &(&ctx.sqrt(&p.k_prime)? + 1) / 2;
    Ok(s.square())
}

/// `(√(1 + k') + √(2√k'))² / 8`, the factor with `K[64r] = factor · K[r]`.
pub fn k_scale_64(p: &ModulusPair, ctx: &PrecisionContext) -> Result<BigReal> {
    let a = ctx.sqrt(&(&p.k_prime + 1))?;
    let b = ctx.sqrt(&(&ctx.sqrt(&p.k_prime)? * 2))?;
    Ok(&(&a + &b).square() / 8)
}

/// `(4 + 2√5 + √2(3 + 2·5^(1/4))) / 80`, the algebraic part of `K[100] / b(1/4)`.
pub fn k100_radical_coefficient(ctx: &PrecisionContext) -> Result<BigReal> {
    let five = ctx.int(5);
    let inner = &(&ctx.root(&five, 4)? * 2) + 3;
    let bracket = &(&(&ctx.sqrt(&five)? * 2) + 4) + &(&ctx.sqrt(&ctx.int(2))? * &inner);
    Ok(&bracket / 80)
}

/// `K[100] = (4 + 2√5 + √2(3 + 2·5^(1/4)))/80 · b(1/4)`.
pub fn k100_closed_value(ctx: &PrecisionContext) -> Result<BigReal> {
    Ok(&k100_radical_coefficient(ctx)? * &crate::oracle::b_quarter(ctx)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::agreement_digits;
    use crate::oracle::k_ref;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn solve_r1_and_r4() {
        let ctx = make_context(60).unwrap();
        let p1 = solve_kr(r(1), &ctx).unwrap();
        assert!(ctx.approx_eq(&p1.k, &ctx.sqrt(&ctx.frac(1, 2)).unwrap()));
        let p4 = solve_kr(r(4), &ctx).unwrap();
        let expected = &ctx.int(3) - &(&ctx.sqrt(&ctx.int(2)).unwrap() * 2);
        assert!(ctx.approx_eq(&p4.k, &expected));
        assert_eq!(p4.provenance, Provenance::NumericSolve);
        assert!(p4.satisfies_modular_relation(&ctx).unwrap());
    }

    #[test]
    fn solve_fractional_r_swaps() {
        let ctx = make_context(40).unwrap();
        let quarter = solve_kr(Rational64::new(1, 4), &ctx).unwrap();
        let four = solve_kr(r(4), &ctx).unwrap();
        assert!(ctx.approx_eq(&quarter.k, &four.k_prime));
        assert!(quarter.satisfies_modular_relation(&ctx).unwrap());
        assert!(solve_kr(r(0), &ctx).is_err());
    }

    #[test]
    fn solve_r100_matches_closed_form() {
        let ctx = make_context(80).unwrap();
        let solved = solve_kr(r(100), &ctx).unwrap();
        let closed = k100_closed_form(&ctx).unwrap();
        assert!((solved.k.to_f64() - 6.028069101559711e-7).abs() < 1e-20);
        assert!(agreement_digits(&solved.k, &closed.k) > 80.0);
        assert_eq!(closed.provenance, Provenance::ClosedForm);
    }

    #[test]
    fn p_parameter_just_below_four() {
        let ctx = make_context(30).unwrap();
        let p = p_parameter(&ctx).unwrap();
        assert!((p.to_f64() - 3.999990355101065).abs() < 1e-14);
        let gap = &ctx.int(2) - &ctx.sqrt(&p).unwrap();
        assert!((gap.to_f64() - 2.411_226_187_120_077e-6).abs() < 1e-18);
    }

    #[test]
    fn landen_up_examples() {
        let ctx = make_context(60).unwrap();
        let p1 = solve_kr(r(1), &ctx).unwrap();
        let up = landen_up(&p1, &ctx).unwrap();
        let s = ctx.sqrt(&ctx.frac(1, 2)).unwrap();
        let direct = &(&ctx.one() - &s) / &(&ctx.one() + &s);
        assert!(ctx.approx_eq(&up.k, &direct));
        assert_eq!(up.r, r(4));
        assert_eq!(up.provenance, Provenance::LandenChain);
        for base in [1, 2, 3] {
            let up = landen_up(&solve_kr(r(base), &ctx).unwrap(), &ctx).unwrap();
            let direct = solve_kr(r(4 * base), &ctx).unwrap();
            assert!(ctx.approx_eq(&up.k, &direct.k), "r = {base}");
            assert!(ctx.approx_eq(&up.k_prime, &direct.k_prime), "r = {base}");
        }
    }

    #[test]
    fn landen_up_tiny_modulus() {
        let ctx = make_context(40).unwrap();
        let k = ctx.eps(30);
        let kp = complementary(&k, &ctx).unwrap();
        let pair = ModulusPair::new(r(5000), k, kp, Provenance::ClosedForm, &ctx).unwrap();
        let up = landen_up(&pair, &ctx).unwrap();
        assert!(ctx.approx_eq(&up.k_prime, &ctx.one()));
        assert!((up.k.log10_abs() - (-60.0 - 4f64.log10())).abs() < 1e-9);
    }

    #[test]
    fn pair_validation() {
        let ctx = make_context(20).unwrap();
        let half = ctx.frac(1, 2);
        assert!(
            ModulusPair::new(r(1), ctx.zero(), ctx.one(), Provenance::ClosedForm, &ctx).is_err()
        );
        assert!(
            ModulusPair::new(r(1), ctx.one(), ctx.zero(), Provenance::ClosedForm, &ctx).is_err()
        );
        assert!(ModulusPair::new(r(1), half.clone(), half, Provenance::ClosedForm, &ctx).is_err());
    }

    #[test]
    fn chain_orders_of_magnitude() {
        let ctx = make_context(200).unwrap();
        let chain = chain_to_6400(&ctx).unwrap();
        let rs: Vec<_> = chain.pairs.iter().map(|p| p.r).collect();
        assert_eq!(rs, vec![r(100), r(400), r(1600), r(6400)]);
        let w = &chain.pairs[3].k;
        // w ≈ 4 exp(-40π)
        let estimate = 4f64.log10() - 40.0 * std::f64::consts::PI / std::f64::consts::LN_10;
        assert!((w.log10_abs() - estimate).abs() < 1e-6);
        for p in &chain.pairs {
            assert!(p.satisfies_modular_relation(&ctx).unwrap(), "r = {}", p.r);
        }
        let by_label = |l: &str| chain.printed.iter().find(|c| c.label == l).unwrap();
        assert!(by_label("k400").agrees(&ctx));
        assert!(by_label("k'400 [exponent 7/4]").agrees(&ctx));
        assert!(by_label("k1600").agrees(&ctx));
        assert!(by_label("k6400 = w").agrees(&ctx));
        let typo = by_label("k'400 [printed 2^(7/3)]");
        assert!(!typo.agrees(&ctx));
        assert!(typo.note.is_some());
    }

    #[test]
    fn multipliers_at_m1() {
        let ctx = make_context(60).unwrap();
        let m2 = multiplier(2, r(1), &ctx).unwrap();
        let expected = &(&ctx.one() + &ctx.sqrt(&ctx.frac(1, 2)).unwrap()) / 2;
        assert!(ctx.approx_eq(&m2.value, &expected));
        assert!((m2.value.to_f64() - 0.8535533905932737).abs() < 1e-15);
        for n in [3, 5] {
            let res = multiplier(n, r(1), &ctx).unwrap();
            assert!(res.residual.log10_abs() < -50.0, "n = {n}");
            assert!(res.k_ratio_mismatch_log10 < -50.0, "n = {n}");
            let v = res.value.to_f64();
            assert!(v > 0.0 && v < 1.0);
        }
        assert!(multiplier(4, r(1), &ctx).is_err());
    }

    #[test]
    fn scaling_factors() {
        let ctx = make_context(60).unwrap();
        let limit = ModulusPair {
            r: r(1),
            k: ctx.eps(40),
            k_prime: ctx.one(),
            provenance: Provenance::ClosedForm,
        };
        assert!(ctx.approx_eq(&k_scale_16(&limit, &ctx).unwrap(), &ctx.one()));
        assert!(ctx.approx_eq(&k_scale_64(&limit, &ctx).unwrap(), &ctx.one()));

        let p1 = solve_kr(r(1), &ctx).unwrap();
        let k1 = p1.k_value(&ctx).unwrap();
        let f16 = k_scale_16(&p1, &ctx).unwrap();
        let k16 = solve_kr(r(16), &ctx).unwrap().k_value(&ctx).unwrap();
        assert!(ctx.approx_eq(&(&f16 * &k1), &k16));

        // factor16 twice: r → 16r → 256r
        let p16 = landen_up(&landen_up(&p1, &ctx).unwrap(), &ctx).unwrap();
        let f16_again = k_scale_16(&p16, &ctx).unwrap();
        let k256 = solve_kr(r(256), &ctx).unwrap().k_value(&ctx).unwrap();
        assert!(ctx.approx_eq(&(&(&f16 * &f16_again) * &k1), &k256));

        let f64_ = k_scale_64(&p1, &ctx).unwrap();
        let k64 = solve_kr(r(64), &ctx).unwrap().k_value(&ctx).unwrap();
        assert!(ctx.approx_eq(&(&f64_ * &k1), &k64));

        // factor64(r) = factor16(4r) · M2(r)
        let p4 = landen_up(&p1, &ctx).unwrap();
        let composed = &k_scale_16(&p4, &ctx).unwrap() * &(&(&p1.k_prime + 1) / 2);
        assert!(ctx.approx_eq(&composed, &f64_));
    }

    #[test]
    fn k100_value_matches_agm() {
        let ctx = make_context(60).unwrap();
        let coeff = k100_radical_coefficient(&ctx).unwrap();
        assert!((coeff.to_f64() - 0.211_803_271_198_514).abs() < 1e-14);
        let closed = k100_closed_value(&ctx).unwrap();
        let pair = k100_closed_form(&ctx).unwrap();
        assert!(ctx.approx_eq(&closed, &pair.k_value(&ctx).unwrap()));
        assert!(ctx.approx_eq(&closed, &k_ref(&pair.k, &ctx).unwrap()));
    }
}
