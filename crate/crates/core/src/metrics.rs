//! Average BER, ergodic capacity and outage probability of a cascade.
//!
//! Exact values are finite sums of Fox H-functions over the active mixture
//! terms of [`CascadeChannel::enumerate_terms`]. High-SNR forms come from
//! the residues at the rightmost left poles of those H-functions.

use serde::{Deserialize, Serialize};

use crate::channel::{CascadeChannel, Detection, Domain, MixtureTerm};
use crate::error::{Error, Result};
use crate::fox_h::{leading_residues, residue_sum, HParams, Pair};
use crate::special_fn::{digamma, gamma, EULER_GAMMA};

/// `τ = e / 2π` in `C = E[ln(1 + τγ)]`.
pub const TAU: f64 = std::f64::consts::E / (2.0 * std::f64::consts::PI);

/// H arguments must be below this for the asymptotic BER to apply.
pub const ASYMPTOTIC_ARGUMENT: f64 = 1e-2;

/// Unified BER parameters: `P_b(γ) = δ / (2Γ(p)) Σ_k Γ(p, q_k γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub name: String,
    pub delta: f64,
    pub p: f64,
    pub q_list: Vec<f64>,
    /// Detection scheme the parameters were tabulated for, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<Detection>,
}

impl Modulation {
    pub fn new(name: impl Into<String>, delta: f64, p: f64, q_list: Vec<f64>) -> Result<Self> {
        let m = Self { name: name.into(), delta, p, q_list, detection: None };
        m.validate()?;
        Ok(m)
    }

    pub fn invalid_field(&self) -> Option<(String, String)> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Some(("delta".into(), format!("{} must be positive", self.delta)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Some(("p".into(), format!("{} must be positive", self.p)));
        }
        if self.q_list.is_empty() {
            return Some(("q_list".into(), "must not be empty".into()));
        }
        for (k, q) in self.q_list.iter().enumerate() {
            if !(*q > 0.0 && q.is_finite()) {
                return Some((format!("q_list[{k}]"), format!("{q} must be positive")));
            }
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        match self.invalid_field() {
            Some((field, msg)) => Err(Error::InvalidModulation(format!("{}: {field}: {msg}", self.name))),
            None => Ok(()),
        }
    }

    /// Conditional bit-error probability at instantaneous SNR `snr`.
    pub fn conditional_ber(&self, snr: f64) -> f64 {
        let sum: f64 = self
            .q_list
            .iter()
            .map(|q| crate::special_fn::upper_incomplete_gamma_unchecked(self.p, q * snr))
            .sum();
        self.delta / (2.0 * gamma(self.p).expect("p > 0")) * sum
    }

    fn prefactor(&self) -> Result<f64> {
        Ok(self.delta / (2.0 * gamma(self.p)?))
    }
}

/// `H^{N,2}_{2,N+1}[x | (1,1),(1-p,1); pairs, (0,1)]`.
pub fn ber_params(term: &MixtureTerm, p: f64) -> Result<HParams> {
    let lower = term.pairs.iter().copied().chain([Pair::new(0.0, 1.0)]);
    HParams::new(term.pairs.len(), 2, [(1.0, 1.0), (1.0 - p, 1.0)], lower)
}

/// `H^{N+2,1}_{2,N+2}[x | (0,1),(1,r); pairs, (0,1),(0,r)]`.
pub fn capacity_params(term: &MixtureTerm, r: f64) -> Result<HParams> {
    let lower = term.pairs.iter().copied().chain([Pair::new(0.0, 1.0), Pair::new(0.0, r)]);
    HParams::new(term.pairs.len() + 2, 1, [(0.0, 1.0), (1.0, r)], lower)
}

fn check_modulation(md: &Modulation) -> Result<()> {
    md.validate()
}

/// Closed-form average BER.
pub fn avg_ber_exact(ch: &CascadeChannel, md: &Modulation) -> Result<f64> {
    check_modulation(md)?;
    let mut total = 0.0;
    for term in ch.active_terms(Domain::Snr) {
        let params = ber_params(&term, md.p)?;
        for q in &md.q_list {
            total += term.weight * params.eval_scaled(term.scale / q, ch.tolerance())?.value;
        }
    }
    Ok(md.prefactor()? * total)
}

/// High-SNR average BER with a flag for whether the regime applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    pub value: f64,
    /// Every H argument was below [`ASYMPTOTIC_ARGUMENT`].
    pub in_regime: bool,
}

/// Two-layer high-SNR BER in closed form.
///
/// Keeps, for each of the four branch combinations, the residues at the
/// first pole of every gamma factor. The exponential-exponential term has a
/// double pole at `s = -1/r`; both its `x^{1/r} ln x` part and its `x^{1/r}`
/// part are kept.
pub fn avg_ber_asymptotic(ch: &CascadeChannel, md: &Modulation) -> Result<Asymptotic> {
    check_modulation(md)?;
    let [l1, l2] = ch.layers() else {
        return Err(Error::NotApplicable(format!(
            "closed-form asymptotic BER needs exactly 2 layers, got {}",
            ch.layers().len()
        )));
    };
    let r = ch.r();
    let p = md.p;
    let base = ch.r() * ch.mean_irradiance().ln() - ch.mu_r().ln();
    let arg = |s1: f64, s2: f64, q: f64| (base - r * (s1.ln() + s2.ln()) - q.ln()).exp();
    let g = |x: f64| -> Result<f64> {
        gamma(x).map_err(|_| Error::NotApplicable(format!("coincident poles (Γ pole at {x})")))
    };
    let (d1, d2) = (l1.a * l1.c, l2.a * l2.c);
    let mut total = 0.0;
    let mut max_arg: f64 = 0.0;
    for &q in &md.q_list {
        let mut sum = 0.0;
        if l1.omega > 0.0 && l2.omega > 0.0 {
            let x = arg(l1.lambda, l2.lambda, q);
            max_arg = max_arg.max(x);
            let gp = g(p + 1.0 / r)?;
            let psi = digamma(p + 1.0 / r)?;
            let bracket = (-x.ln() - psi + r) / r - 2.0 * EULER_GAMMA;
            sum += l1.omega * l2.omega * gp * x.powf(1.0 / r) * bracket;
        }
        // exponential in one layer, GG in the other
        for (exp_l, gg_l, d) in [(l1, l2, d2), (l2, l1, d1)] {
            if exp_l.omega > 0.0 && gg_l.omega < 1.0 {
                let x = arg(exp_l.lambda, gg_l.b, q);
                max_arg = max_arg.max(x);
                let first = g(p + 1.0 / r)? * g(gg_l.a - 1.0 / gg_l.c)? * x.powf(1.0 / r);
                let second = gg_l.c * g(-d)? * g(p + d / r)? * x.powf(d / r);
                sum += exp_l.omega * (1.0 - gg_l.omega) / g(gg_l.a)? * (first - second);
            }
        }
        if l1.omega < 1.0 && l2.omega < 1.0 {
            let x = arg(l1.b, l2.b, q);
            max_arg = max_arg.max(x);
            let t1 = g(p + d1 / r)? * g(l2.a - d1 / l2.c)? / (g(l1.a + 1.0)? * g(l2.a)?) * x.powf(d1 / r);
            let t2 = g(p + d2 / r)? * g(l1.a - d2 / l1.c)? / (g(l1.a)? * g(l2.a + 1.0)?) * x.powf(d2 / r);
            sum += (1.0 - l1.omega) * (1.0 - l2.omega) * (t1 + t2);
        }
        total += sum;
    }
    Ok(Asymptotic { value: md.prefactor()? * total, in_regime: max_arg < ASYMPTOTIC_ARGUMENT })
}

/// High-SNR BER for any `N` from the leading residues of every term.
///
/// Fails with [`Error::ResidueOrder`] when three or more exponential
/// branches produce a pole of order above two.
pub fn avg_ber_leading_order(ch: &CascadeChannel, md: &Modulation) -> Result<f64> {
    check_modulation(md)?;
    let mut total = 0.0;
    for term in ch.active_terms(Domain::Snr) {
        let params = ber_params(&term, md.p)?;
        let residues = leading_residues(&params, term.pairs.len())?;
        for q in &md.q_list {
            total += term.weight * residue_sum(&residues, term.scale / q);
        }
    }
    Ok(md.prefactor()? * total)
}

/// `min({1/r} ∪ {a_n c_n / r})` over the branches with non-zero weight.
///
/// Derived for two layers; the same pole argument gives it for any `N`.
pub fn diversity_order(ch: &CascadeChannel) -> f64 {
    let r = ch.r();
    let mut order = f64::INFINITY;
    for layer in ch.layers() {
        if layer.omega > 0.0 {
            order = order.min(1.0 / r);
        }
        if layer.omega < 1.0 {
            order = order.min(layer.a * layer.c / r);
        }
    }
    order
}

/// Ergodic capacity in nats per channel use.
pub fn ergodic_capacity_exact(ch: &CascadeChannel) -> Result<f64> {
    let r = ch.r();
    let mut total = 0.0;
    for term in ch.active_terms(Domain::Snr) {
        let params = capacity_params(&term, r)?;
        total += term.weight * params.eval_scaled(term.scale / TAU, ch.tolerance())?.value;
    }
    Ok(r * total)
}

/// `ln τ + E[ln γ]`, the high-SNR limit of the ergodic capacity.
///
/// With `γ = μ_r (I/E[I])^r` this is
/// `ln(τ μ_r) + r Σ_n E[ln I_n] - r ln E[I]`, where
/// `E[ln I_n] = ω(ln λ - γ_E) + (1-ω)(ln b + ψ(a)/c)`.
pub fn ergodic_capacity_asymptotic(ch: &CascadeChannel) -> f64 {
    let r = ch.r();
    let mean_log: f64 = ch.layers().iter().map(|l| l.mean_log()).sum();
    (TAU * ch.mu_r()).ln() + r * mean_log - r * ch.mean_irradiance().ln()
}

/// `P(γ ≤ threshold)`.
pub fn outage_probability(ch: &CascadeChannel, threshold: f64) -> Result<f64> {
    ch.snr_cdf(threshold)
}

/// Small-argument residue expansion of the outage probability.
pub fn outage_leading_order(ch: &CascadeChannel, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::domain("outage_leading_order", format!("threshold {threshold} must be positive")));
    }
    let mut total = 0.0;
    for term in ch.active_terms(Domain::Snr) {
        let params = term.cdf_params()?;
        let residues = leading_residues(&params, term.pairs.len())?;
        total += term.weight * residue_sum(&residues, term.scale * threshold);
    }
    Ok(total)
}

/// Converts nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
