//! Fox H-function evaluation.
//!
//! ```text
//!                      1   ⌠  Π_{j≤m} Γ(b_j + β_j s) Π_{i≤n} Γ(1 - a_i - α_i s)
//! H^{m,n}_{p,q}[z] = ───── │  ───────────────────────────────────────────────── z^{-s} ds
//!                     2πi  ⌡L Π_{j>m} Γ(1 - b_j - β_j s) Π_{i>n} Γ(a_i + α_i s)
//! ```
//!
//! The contour is a vertical line `Re s = c` between the left poles
//! `-(b_j + l)/β_j` and the right poles `(1 - a_i + k)/α_i`. For real
//! parameters the integrand is conjugate-symmetric, so only the upper half
//! line is integrated. The abscissa is placed at the saddle of
//! `|integrand(c)|` on the real axis, which keeps the cancellation in the
//! oscillatory integral small for both tiny and large `z`.
//!
//! [`leading_residues`] gives the small-`z` expansion from the rightmost
//! left poles, handling simple and double poles.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::special_fn::{digamma_real, gamma, ln_gamma_unchecked, nonpositive_integer};

/// Largest argument accepted by [`evaluate`].
pub const MAX_ARGUMENT: f64 = 1e6;

/// Default relative tolerance for contour quadrature.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Poles closer than this are treated as coincident.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Pole-collision check depth in `l` and `k`.
const COLLISION_DEPTH: usize = 64;

/// Below this log-scale the bound on `|H|` is checked against [`LN_ZERO`].
const UNDERFLOW_SCALE: f64 = -700.0;

/// `|H| < e^{LN_ZERO}` rounds to zero in `f64`.
const LN_ZERO: f64 = -760.0;

/// One `(shift, scale)` coefficient pair, `(a_i, α_i)` or `(b_j, β_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub shift: f64,
    pub scale: f64,
}

impl Pair {
    pub const fn new(shift: f64, scale: f64) -> Self {
        Self { shift, scale }
    }
}

impl From<(f64, f64)> for Pair {
    fn from((shift, scale): (f64, f64)) -> Self {
        Self { shift, scale }
    }
}

/// Orders and coefficient pairs of one H-function.
///
/// `p = upper.len()`, `q = lower.len()`. Construction validates the
/// structural ranges and pole separation.
#[derive(Debug, Clone, PartialEq)]
pub struct HParams {
    m: usize,
    n: usize,
    upper: Vec<Pair>,
    lower: Vec<Pair>,
}

impl HParams {
    pub fn new(
        m: usize,
        n: usize,
        upper: impl IntoIterator<Item = impl Into<Pair>>,
        lower: impl IntoIterator<Item = impl Into<Pair>>,
    ) -> Result<Self> {
        let params = Self {
            m,
            n,
            upper: upper.into_iter().map(Into::into).collect(),
            lower: lower.into_iter().map(Into::into).collect(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.upper.len()
    }
    pub fn q(&self) -> usize {
        self.lower.len()
    }
    pub fn upper(&self) -> &[Pair] {
        &self.upper
    }
    pub fn lower(&self) -> &[Pair] {
        &self.lower
    }

    /// Checks orders, coefficient ranges and left/right pole separation.
    pub fn validate(&self) -> Result<()> {
        if self.m > self.q() || self.n > self.p() {
            return Err(Error::InvalidParams(format!(
                "orders m={} n={} exceed q={} p={}",
                self.m,
                self.n,
                self.q(),
                self.p()
            )));
        }
        for (name, pairs) in [("upper", &self.upper), ("lower", &self.lower)] {
            for (idx, pr) in pairs.iter().enumerate() {
                if !pr.shift.is_finite() || !pr.scale.is_finite() || pr.scale <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "{name}[{idx}] = ({}, {}) needs finite shift and positive scale",
                        pr.shift, pr.scale
                    )));
                }
            }
        }
        for (j, b) in self.lower[..self.m].iter().enumerate() {
            for (i, a) in self.upper[..self.n].iter().enumerate() {
                for l in 0..=COLLISION_DEPTH {
                    let left = -(b.shift + l as f64) / b.scale;
                    // solve for the k whose right pole is nearest `left`
                    let k_real = left * a.scale - 1.0 + a.shift;
                    let k0 = k_real.round().max(0.0);
                    for k in [k0 as usize, k0 as usize + 1] {
                        if k > COLLISION_DEPTH {
                            continue;
                        }
                        let right = (1.0 - a.shift + k as f64) / a.scale;
                        if (left - right).abs() <= TIE_TOLERANCE * left.abs().max(1.0) {
                            return Err(Error::PoleCollision { j, l, i, k, at: left });
                        }
                    }
                }
            }
        }
        if self.a_star() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "a* = {} must be positive for a convergent vertical contour",
                self.a_star()
            )));
        }
        Ok(())
    }

    /// Exponential decay rate parameter of the integrand along vertical lines.
    pub fn a_star(&self) -> f64 {
        let up: f64 = self.upper.iter().enumerate().map(|(i, a)| if i < self.n { a.scale } else { -a.scale }).sum();
        let lo: f64 = self.lower.iter().enumerate().map(|(j, b)| if j < self.m { b.scale } else { -b.scale }).sum();
        up + lo
    }

    /// Rightmost left pole, or `-inf` when `m = 0`.
    pub fn max_left_pole(&self) -> f64 {
        self.lower[..self.m].iter().map(|b| -b.shift / b.scale).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Leftmost right pole, or `+inf` when `n = 0`.
    pub fn min_right_pole(&self) -> f64 {
        self.upper[..self.n].iter().map(|a| (1.0 - a.shift) / a.scale).fold(f64::INFINITY, f64::min)
    }

    /// `log` of the gamma-ratio kernel at `s`.
    #[inline]
    fn log_kernel(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, b) in self.lower.iter().enumerate() {
            if j < self.m {
                acc += ln_gamma_unchecked(b.scale * s + b.shift);
            } else {
                acc -= ln_gamma_unchecked(1.0 - b.shift - b.scale * s);
            }
        }
        for (i, a) in self.upper.iter().enumerate() {
            if i < self.n {
                acc += ln_gamma_unchecked(1.0 - a.shift - a.scale * s);
            } else {
                acc -= ln_gamma_unchecked(a.scale * s + a.shift);
            }
        }
        acc
    }

    fn scale_sum(&self) -> f64 {
        self.upper.iter().chain(&self.lower).map(|pr| pr.scale).sum()
    }

    /// Evaluates at `z` with an automatically placed contour.
    pub fn eval(&self, z: f64, rel_tol: f64) -> Result<HValue> {
        let contour = ContourSpec::auto(self, z, rel_tol)?;
        evaluate(self, z, &contour)
    }

    /// Like [`HParams::eval`] but accepts any positive finite `z`.
    ///
    /// Above [`MAX_ARGUMENT`] it uses `H[z] = k H[z^k]` with every scale
    /// multiplied by `k`, where `z^k = sqrt(MAX_ARGUMENT)`.
    pub fn eval_scaled(&self, z: f64, rel_tol: f64) -> Result<HValue> {
        if !(z > MAX_ARGUMENT && z.is_finite()) {
            return self.eval(z, rel_tol);
        }
        let k = 0.5 * MAX_ARGUMENT.ln() / z.ln();
        let stretch = |pairs: &[Pair]| pairs.iter().map(|p| Pair::new(p.shift, k * p.scale)).collect();
        let scaled = Self { m: self.m, n: self.n, upper: stretch(&self.upper), lower: stretch(&self.lower) };
        let v = scaled.eval(MAX_ARGUMENT.sqrt(), rel_tol)?;
        Ok(HValue { value: k * v.value, abs_error: k * v.abs_error, rel_error: v.rel_error })
    }
}

/// Vertical integration line `Re s = abscissa`, `|Im s| <= half_height`.
///
/// `half_height` is a starting value; [`evaluate`] doubles it until the
/// neglected tail is below a tenth of the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub abscissa: f64,
    pub half_height: f64,
    pub rel_tol: f64,
}

impl ContourSpec {
    /// Saddle-point placement of the abscissa for argument `z`.
    pub fn auto(params: &HParams, z: f64, rel_tol: f64) -> Result<Self> {
        check_argument(z)?;
        let left = params.max_left_pole();
        let right = params.min_right_pole();
        if left >= right {
            return Err(Error::NoContour { left, right });
        }
        let ln_z = z.ln();
        let phi = |c: f64| params.log_kernel(Complex64::new(c, 0.0)).re - c * ln_z;
        let abscissa = saddle(&phi, left, right);
        let half_height = initial_height(params, abscissa, rel_tol);
        Self::new(params, abscissa, half_height, rel_tol)
    }

    pub fn new(params: &HParams, abscissa: f64, half_height: f64, rel_tol: f64) -> Result<Self> {
        let left = params.max_left_pole();
        let right = params.min_right_pole();
        if !(abscissa > left && abscissa < right) {
            return Err(Error::InvalidParams(format!(
                "abscissa {abscissa} not strictly inside ({left}, {right})"
            )));
        }
        if !(half_height > 0.0) || !(rel_tol > 0.0 && rel_tol <= 1e-3) {
            return Err(Error::InvalidParams(format!(
                "half-height {half_height} must be positive and tolerance {rel_tol} in (0, 1e-3]"
            )));
        }
        Ok(Self { abscissa, half_height, rel_tol })
    }
}

fn check_argument(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("fox_h::evaluate", format!("z = {z} must be positive")));
    }
    if z > MAX_ARGUMENT {
        return Err(Error::Overflow { z });
    }
    Ok(())
}

/// Minimizes `phi` over the open interval between the poles.
fn saddle(phi: &impl Fn(f64) -> f64, left: f64, right: f64) -> f64 {
    // map x in R onto the admissible interval
    let map: Box<dyn Fn(f64) -> f64> = match (left.is_finite(), right.is_finite()) {
        (true, true) => {
            let gap = right - left;
            Box::new(move |x: f64| left + gap / (1.0 + (-x).exp()))
        }
        (true, false) => Box::new(move |x: f64| left + x.exp()),
        (false, true) => Box::new(move |x: f64| right - (-x).exp()),
        (false, false) => Box::new(|x: f64| x),
    };
    let (lo, hi) = match (left.is_finite(), right.is_finite()) {
        (true, true) => (-14.0, 14.0),
        (true, false) => (-14.0, 16.0),
        (false, true) => (-16.0, 14.0),
        (false, false) => (-1e3, 1e3),
    };
    let steps = 112;
    let h = (hi - lo) / steps as f64;
    let eval = |x: f64| {
        let v = phi(map(x));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (mut best_x, mut best_v) = (lo, f64::INFINITY);
    for k in 0..=steps {
        let x = lo + h * k as f64;
        let v = eval(x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    // golden-section refinement inside the bracketing grid cell pair
    let (mut a, mut b) = (best_x - h, best_x + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..40 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2);
        }
    }
    let x = 0.5 * (a + b);
    let c = map(if eval(x) <= best_v { x } else { best_x });
    if c > left && c < right {
        c
    } else {
        map(best_x)
    }
}

fn initial_height(params: &HParams, c: f64, rel_tol: f64) -> f64 {
    let base = params.log_kernel(Complex64::new(c, 0.0)).re;
    let target = rel_tol.ln() - 6.0;
    let mut t = 1.0;
    let mut prev = f64::INFINITY;
    while t < 4e6 {
        let v = params.log_kernel(Complex64::new(c, t)).re - base;
        if v < target && v < prev {
            return t;
        }
        prev = v;
        t *= 2.0;
    }
    t
}

/// Value of a contour evaluation together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub value: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Evaluates `H[z]` along `contour`.
pub fn evaluate(params: &HParams, z: f64, contour: &ContourSpec) -> Result<HValue> {
    check_argument(z)?;
    let ln_z = z.ln();
    let c = contour.abscissa;
    let left = params.max_left_pole();
    let right = params.min_right_pole();
    if !(c > left && c < right) {
        return Err(Error::NoContour { left, right });
    }
    let origin = Complex64::new(c, 0.0);
    let scale = params.log_kernel(origin).re - c * ln_z;
    if !scale.is_finite() {
        return Err(Error::Overflow { z });
    }
    let log_integrand = |t: f64| {
        let s = Complex64::new(c, t);
        params.log_kernel(s) - s * ln_z - scale
    };
    let integrand = |t: f64| {
        let v = log_integrand(t);
        v.re.exp() * v.im.cos()
    };

    if scale < UNDERFLOW_SCALE {
        let envelope = |t: f64| log_integrand(t).re.exp();
        let height = contour.half_height;
        let mass = integrate(envelope, 0.0, height, &QuadOptions::rel(1e-3).panels(16)).value
            + envelope(height) * height;
        if scale + (mass / PI).ln() < LN_ZERO {
            return Ok(HValue { value: 0.0, abs_error: 0.0, rel_error: 0.0 });
        }
    }

    let tol = contour.rel_tol;
    let decay = 0.5 * PI * params.a_star();
    let freq_base = ln_z.abs() + 1.0;
    let panels_for = |lo: f64, hi: f64| {
        let coef = params.scale_sum() * (1.0 + (1.0 + hi * params.scale_sum()).ln());
        (((hi - lo) * (freq_base + coef) / PI).ceil() as usize).clamp(4, 4000)
    };

    let mut height = contour.half_height;
    let first = integrate(
        integrand,
        0.0,
        height,
        &QuadOptions { rel_tol: 0.5 * tol, abs_tol: 0.0, initial_panels: panels_for(0.0, height), max_panels: 60_000 },
    );
    let mut total = first.value;
    let mut error = first.abs_error;
    let mut converged = first.converged;
    let mut doublings = 0;
    loop {
        let here = log_integrand(height).re;
        let ahead = log_integrand(height * 1.01).re;
        let slope = (here - ahead) / (0.01 * height);
        let tail = if slope > 0.0 { here.exp() / slope.max(0.5 * decay) } else { f64::INFINITY };
        if tail <= 0.1 * tol * total.abs() || (tail < 1e-300 && total == 0.0) {
            error += tail;
            break;
        }
        if doublings >= 16 {
            error += tail;
            converged = false;
            break;
        }
        let next = 2.0 * height;
        let extra = integrate(
            integrand,
            height,
            next,
            &QuadOptions {
                rel_tol: 0.0,
                abs_tol: 0.25 * tol * total.abs(),
                initial_panels: panels_for(height, next),
                max_panels: 60_000,
            },
        );
        total += extra.value;
        error += extra.abs_error;
        converged &= extra.converged;
        height = next;
        doublings += 1;
    }

    let factor = scale.exp() / PI;
    let value = total * factor;
    let abs_error = error * factor;
    // measured before rescaling so that an underflowing value keeps its accuracy
    let rel_error = if total != 0.0 { error / total.abs() } else { f64::INFINITY };
    if !value.is_finite() {
        return Err(Error::Overflow { z });
    }
    if !converged || rel_error > tol {
        return Err(Error::NonConvergence { value, rel_error });
    }
    Ok(HValue { value, abs_error, rel_error })
}

/// One term `coefficient · z^exponent · (ln z)^{0 or 1}` of the small-`z` expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueTerm {
    pub exponent: f64,
    pub log_term: bool,
    pub coefficient: f64,
}

impl ResidueTerm {
    pub fn at(&self, z: f64) -> f64 {
        let base = self.coefficient * z.powf(self.exponent);
        if self.log_term {
            base * z.ln()
        } else {
            base
        }
    }
}

/// Sums a truncated residue expansion at `z`.
pub fn residue_sum(terms: &[ResidueTerm], z: f64) -> f64 {
    terms.iter().map(|t| t.at(z)).sum()
}

/// Laurent data of one gamma-ratio factor at a pole location.
struct Laurent {
    order: i32,
    lead: f64,
    slope: f64,
}

/// `Γ(A + Bε)^{sign}` expanded to first order around `ε = 0`.
fn expand_factor(arg: f64, coef: f64, numerator: bool) -> Result<Laurent> {
    if let Some(l) = nonpositive_integer(arg, TIE_TOLERANCE) {
        let lf = l as f64;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let fact = gamma(lf + 1.0)?;
        let psi = digamma_real(lf + 1.0);
        if numerator {
            // Γ(-l + δ) = (-1)^l / l! (1/δ + ψ(l+1) + O(δ))
            Ok(Laurent { order: -1, lead: sign / (fact * coef), slope: psi * coef })
        } else {
            // 1/Γ(-l + δ) = (-1)^l l! δ (1 - ψ(l+1) δ + O(δ²))
            Ok(Laurent { order: 1, lead: sign * fact * coef, slope: -psi * coef })
        }
    } else {
        let g = gamma(arg)?;
        let psi = digamma_real(arg);
        if numerator {
            Ok(Laurent { order: 0, lead: g, slope: coef * psi })
        } else {
            Ok(Laurent { order: 0, lead: 1.0 / g, slope: -coef * psi })
        }
    }
}

/// Leading terms of the small-`z` expansion, from the `count` rightmost
/// left poles that survive cancellation against denominator zeros.
///
/// Simple poles give one term; double poles give a `z^e ln z` term and a
/// `z^e` term. Higher orders are rejected.
pub fn leading_residues(params: &HParams, count: usize) -> Result<Vec<ResidueTerm>> {
    let depth = COLLISION_DEPTH + count;
    let mut poles: Vec<f64> = params.lower[..params.m]
        .iter()
        .flat_map(|b| (0..depth).map(move |l| -(b.shift + l as f64) / b.scale))
        .collect();
    poles.sort_by(|a, b| b.total_cmp(a));
    let mut groups: Vec<f64> = Vec::new();
    for u in poles {
        match groups.last() {
            Some(&g) if (g - u).abs() <= TIE_TOLERANCE * g.abs().max(1.0) => {}
            _ => groups.push(u),
        }
    }

    let mut out = Vec::new();
    let mut found = 0;
    for u0 in groups {
        if found == count {
            break;
        }
        let mut order = 0i32;
        let mut lead = 1.0;
        let mut slope = 0.0;
        let mut push = |f: Laurent| {
            order -= f.order;
            lead *= f.lead;
            slope += f.slope;
        };
        for (j, b) in params.lower.iter().enumerate() {
            if j < params.m {
                push(expand_factor(b.shift + b.scale * u0, b.scale, true)?);
            } else {
                push(expand_factor(1.0 - b.shift - b.scale * u0, -b.scale, false)?);
            }
        }
        for (i, a) in params.upper.iter().enumerate() {
            if i < params.n {
                push(expand_factor(1.0 - a.shift - a.scale * u0, -a.scale, true)?);
            } else {
                push(expand_factor(a.shift + a.scale * u0, a.scale, false)?);
            }
        }
        let exponent = -u0;
        match order {
            o if o <= 0 => continue,
            1 => out.push(ResidueTerm { exponent, log_term: false, coefficient: lead }),
            2 => {
                // residue of ε^{-2} (1 + D ε)(1 - ε ln z) z^{-u0}
                out.push(ResidueTerm { exponent, log_term: true, coefficient: -lead });
                out.push(ResidueTerm { exponent, log_term: false, coefficient: lead * slope });
            }
            o => return Err(Error::ResidueOrder { order: o, at: u0 }),
        }
        found += 1;
    }
    Ok(out)
}
