//! Mixture EGG layers and the exact statistics of their cascade.
//!
//! A layer's irradiance has density
//!
//! ```text
//! f(I) = (ω/λ) e^{-I/λ} + (1-ω) c I^{ac-1} e^{-(I/b)^c} / (b^{ac} Γ(a))
//! ```
//!
//! The product of `N` independent layers expands into `2^N` mixture terms,
//! one per choice of branch in each layer, and each term is a single
//! `H^{N,0}_{0,N}` function of the end-to-end irradiance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fox_h::{HParams, Pair, DEFAULT_TOLERANCE};
use crate::special_fn::{gamma, ln_gamma};

/// Maximum number of layers; the term count grows as `2^N`.
pub const MAX_LAYERS: usize = 20;

/// Argument above which the CDF uses the complementary representation.
const CDF_SWITCH: f64 = 1.0;

/// One water-column layer of mixture Exponential-Generalized-Gamma fading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EggLayer {
    /// Weight of the exponential branch.
    pub omega: f64,
    /// Exponential scale.
    pub lambda: f64,
    /// Generalized-gamma shape.
    pub a: f64,
    /// Generalized-gamma scale.
    pub b: f64,
    /// Generalized-gamma exponent.
    pub c: f64,
    /// Free-text tag such as `"[2.4, 0.05]"` (bubble level, temperature gradient).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EggLayer {
    pub fn new(omega: f64, lambda: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        let layer = Self { omega, lambda, a, b, c, label: None };
        layer.validate()?;
        Ok(layer)
    }

    /// Returns the name of the first field that breaks the invariants.
    pub fn invalid_field(&self) -> Option<(&'static str, String)> {
        if !(self.omega >= 0.0 && self.omega <= 1.0) {
            return Some(("omega", format!("{} is outside [0, 1]", self.omega)));
        }
        for (name, v) in [("lambda", self.lambda), ("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Some((name, format!("{v} must be positive and finite")));
            }
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        match self.invalid_field() {
            Some((field, msg)) => Err(Error::InvalidChannel(format!("{field}: {msg}"))),
            None => Ok(()),
        }
    }

    /// Density by the closed-form mixture.
    pub fn pdf_direct(&self, irradiance: f64) -> Result<f64> {
        if !(irradiance > 0.0) {
            return Err(Error::domain("layer_pdf_direct", format!("I = {irradiance} must be positive")));
        }
        let exp_part = if self.omega > 0.0 {
            self.omega / self.lambda * (-irradiance / self.lambda).exp()
        } else {
            0.0
        };
        let gg_part = if self.omega < 1.0 {
            let ac = self.a * self.c;
            let ln = self.c.ln() + (ac - 1.0) * irradiance.ln() - (irradiance / self.b).powf(self.c)
                - ac * self.b.ln()
                - ln_gamma(self.a);
            (1.0 - self.omega) * ln.exp()
        } else {
            0.0
        };
        Ok(exp_part + gg_part)
    }

    /// Density through the two `H^{1,0}_{0,1}` kernels
    /// `H[x | (0,1)] = e^{-x}` and `H[x | (a,1)] = x^a e^{-x}`.
    pub fn pdf_h(&self, irradiance: f64, rel_tol: f64) -> Result<f64> {
        if !(irradiance > 0.0) {
            return Err(Error::domain("layer_pdf_h", format!("I = {irradiance} must be positive")));
        }
        let mut total = 0.0;
        if self.omega > 0.0 {
            let h = HParams::new(1, 0, Vec::<Pair>::new(), [(0.0, 1.0)])?;
            total += self.omega / self.lambda * h.eval_scaled(irradiance / self.lambda, rel_tol)?.value;
        }
        if self.omega < 1.0 {
            let h = HParams::new(1, 0, Vec::<Pair>::new(), [(self.a, 1.0)])?;
            let arg = (irradiance / self.b).powf(self.c);
            let kernel = h.eval_scaled(arg, rel_tol)?.value;
            total += self.c * (1.0 - self.omega) / (irradiance * gamma(self.a)?) * kernel;
        }
        Ok(total)
    }

    /// `E[I] = ωλ + (1-ω) b Γ(a + 1/c) / Γ(a)`.
    pub fn mean(&self) -> f64 {
        let gg = self.b * (ln_gamma(self.a + 1.0 / self.c) - ln_gamma(self.a)).exp();
        self.omega * self.lambda + (1.0 - self.omega) * gg
    }

    /// `E[ln I]`.
    pub fn mean_log(&self) -> f64 {
        use crate::special_fn::{digamma, EULER_GAMMA};
        let psi = digamma(self.a).expect("a > 0 by invariant");
        self.omega * (self.lambda.ln() - EULER_GAMMA) + (1.0 - self.omega) * (self.b.ln() + psi / self.c)
    }
}

/// Detection scheme; `r = 1` heterodyne, `r = 2` intensity modulation / direct detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Detection {
    Heterodyne,
    IntensityModulation,
}

impl Detection {
    pub fn r(self) -> u8 {
        match self {
            Detection::Heterodyne => 1,
            Detection::IntensityModulation => 2,
        }
    }

    pub fn exponent(self) -> f64 {
        f64::from(self.r())
    }
}

impl TryFrom<u8> for Detection {
    type Error = String;

    fn try_from(r: u8) -> std::result::Result<Self, String> {
        match r {
            1 => Ok(Detection::Heterodyne),
            2 => Ok(Detection::IntensityModulation),
            other => Err(format!("detection exponent r must be 1 or 2, got {other}")),
        }
    }
}

impl From<Detection> for u8 {
    fn from(d: Detection) -> u8 {
        d.r()
    }
}

/// Whether statistics refer to the irradiance product or the electrical SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Irradiance,
    Snr,
}

/// One branch combination `(i_1, ..., i_N)` of the cascade.
///
/// Its density contribution is `weight · H^{N,0}_{0,N}[scale · x | pairs] / x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    /// `i_n = 0` picks the exponential branch of layer `n`, `1` the GG branch.
    pub index: Vec<u8>,
    pub weight: f64,
    pub scale: f64,
    pub pairs: Vec<Pair>,
}

impl MixtureTerm {
    /// Parameters of the density kernel `H^{N,0}_{0,N}`.
    pub fn pdf_params(&self) -> Result<HParams> {
        HParams::new(self.pairs.len(), 0, Vec::<Pair>::new(), self.pairs.iter().copied())
    }

    /// Parameters of the CDF kernel `H^{N,1}_{1,N+1}[x | (1,1); pairs, (0,1)]`.
    pub fn cdf_params(&self) -> Result<HParams> {
        let lower = self.pairs.iter().copied().chain([Pair::new(0.0, 1.0)]);
        HParams::new(self.pairs.len(), 1, [(1.0, 1.0)], lower)
    }

    /// Parameters of the complementary CDF kernel
    /// `H^{N+1,0}_{1,N+1}[x | (1,1); pairs, (0,1)]`.
    pub fn ccdf_params(&self) -> Result<HParams> {
        let lower = self.pairs.iter().copied().chain([Pair::new(0.0, 1.0)]);
        HParams::new(self.pairs.len() + 1, 0, [(1.0, 1.0)], lower)
    }

    /// `Π Γ(b_j)`, the limit of the CDF kernel at infinity.
    pub fn total_mass(&self) -> Result<f64> {
        self.pairs.iter().try_fold(1.0, |acc, p| Ok(acc * gamma(p.shift)?))
    }
}

/// Ordered stack of layers plus the detection scheme and average SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeChannel {
    layers: Vec<EggLayer>,
    detection: Detection,
    mu_r: f64,
    rel_tol: f64,
}

impl CascadeChannel {
    /// `mu_r` is the linear average electrical SNR.
    pub fn new(layers: Vec<EggLayer>, detection: Detection, mu_r: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidChannel("at least one layer is required".into()));
        }
        if layers.len() > MAX_LAYERS {
            return Err(Error::InvalidChannel(format!(
                "{} layers exceed the limit of {MAX_LAYERS}",
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if let Some((field, msg)) = layer.invalid_field() {
                return Err(Error::InvalidChannel(format!("layers[{i}].{field}: {msg}")));
            }
        }
        if !(mu_r > 0.0 && mu_r.is_finite()) {
            return Err(Error::InvalidChannel(format!("mu_r = {mu_r} must be positive")));
        }
        Ok(Self { layers, detection, mu_r, rel_tol: DEFAULT_TOLERANCE })
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_mu_r(&self, mu_r: f64) -> Result<Self> {
        Self::new(self.layers.clone(), self.detection, mu_r).map(|c| c.with_tolerance(self.rel_tol))
    }

    pub fn layers(&self) -> &[EggLayer] {
        &self.layers
    }
    pub fn detection(&self) -> Detection {
        self.detection
    }
    pub fn r(&self) -> f64 {
        self.detection.exponent()
    }
    pub fn mu_r(&self) -> f64 {
        self.mu_r
    }
    pub fn tolerance(&self) -> f64 {
        self.rel_tol
    }

    /// `E[Π I_n] = Π E[I_n]`.
    pub fn mean_irradiance(&self) -> f64 {
        self.layers.iter().map(EggLayer::mean).product()
    }

    /// All `2^N` branch combinations, including zero-weight ones.
    ///
    /// In the SNR domain `γ = μ_r (I / E[I])^r`, so the kernel argument is
    /// `(E[I]^r / μ_r) Π s_n^r γ` with `s_n = 1/λ_n` or `1/b_n`, and the
    /// pairs are `(1, r)` or `(a_n, r/c_n)`.
    pub fn enumerate_terms(&self, domain: Domain) -> Vec<MixtureTerm> {
        let (r, ln_base) = match domain {
            Domain::Irradiance => (1.0, 0.0),
            Domain::Snr => {
                let r = self.r();
                (r, r * self.mean_irradiance().ln() - self.mu_r.ln())
            }
        };
        let count = 1usize << self.layers.len();
        (0..count)
            .map(|mask| {
                let mut index = Vec::with_capacity(self.layers.len());
                let mut weight = 1.0;
                let mut ln_scale = ln_base;
                let mut pairs = Vec::with_capacity(self.layers.len());
                for (k, layer) in self.layers.iter().enumerate() {
                    let bit = ((mask >> k) & 1) as u8;
                    index.push(bit);
                    if bit == 0 {
                        weight *= layer.omega;
                        ln_scale -= r * layer.lambda.ln();
                        pairs.push(Pair::new(1.0, r));
                    } else {
                        weight *= (1.0 - layer.omega) * (-ln_gamma(layer.a)).exp();
                        ln_scale -= r * layer.b.ln();
                        pairs.push(Pair::new(layer.a, r / layer.c));
                    }
                }
                MixtureTerm { index, weight, scale: ln_scale.exp(), pairs }
            })
            .collect()
    }

    /// Terms with non-zero weight; degenerate `ω ∈ {0, 1}` branches are dropped.
    pub fn active_terms(&self, domain: Domain) -> Vec<MixtureTerm> {
        self.enumerate_terms(domain).into_iter().filter(|t| t.weight > 0.0).collect()
    }

    fn density(&self, domain: Domain, x: f64, op: &'static str) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::domain(op, format!("argument {x} must be positive")));
        }
        let mut total = 0.0;
        for term in self.active_terms(domain) {
            let h = term.pdf_params()?.eval_scaled(term.scale * x, self.rel_tol)?;
            total += term.weight * h.value;
        }
        Ok(total / x)
    }

    /// Density of the end-to-end irradiance `Π I_n`.
    pub fn irradiance_pdf(&self, irradiance: f64) -> Result<f64> {
        self.density(Domain::Irradiance, irradiance, "cascade_irradiance_pdf")
    }

    /// Density of the instantaneous electrical SNR.
    pub fn snr_pdf(&self, snr: f64) -> Result<f64> {
        self.density(Domain::Snr, snr, "cascade_snr_pdf")
    }

    /// `P(γ ≤ snr)`.
    ///
    /// Each term integrates to `H^{N,1}_{1,N+1}`; above argument 1 the
    /// complement `Π Γ(b_j) - H^{N+1,0}_{1,N+1}` is used instead so the
    /// upper tail keeps its relative accuracy.
    pub fn snr_cdf(&self, snr: f64) -> Result<f64> {
        if !(snr > 0.0) {
            return Err(Error::domain("cascade_snr_cdf", format!("γ = {snr} must be positive")));
        }
        if snr.is_infinite() {
            return Ok(1.0);
        }
        let mut below = 0.0;
        let mut above = 0.0;
        let mut mass = 0.0;
        for term in self.active_terms(Domain::Snr) {
            let z = term.scale * snr;
            if z <= CDF_SWITCH {
                below += term.weight * term.cdf_params()?.eval_scaled(z, self.rel_tol)?.value;
            } else {
                mass += term.weight * term.total_mass()?;
                above += term.weight * term.ccdf_params()?.eval_scaled(z, self.rel_tol)?.value;
            }
        }
        Ok((below + (mass - above)).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn layer(omega: f64, lambda: f64, a: f64, b: f64, c: f64) -> EggLayer {
        EggLayer::new(omega, lambda, a, b, c).unwrap()
    }

    #[test]
    fn layer_direct_examples() {
        let l = layer(1.0, 2.0, 1.0, 1.0, 1.0);
        assert!(rel(l.pdf_direct(2.0).unwrap(), 0.5 * (-1.0f64).exp()) < 1e-15);
        let l = layer(0.0, 1.0, 1.0, 1.0, 1.0);
        assert!(rel(l.pdf_direct(1.0).unwrap(), (-1.0f64).exp()) < 1e-14);
        // arbitrary-precision reference value
        let l = layer(0.3, 0.5, 1.2, 0.8, 2.0);
        assert!(rel(l.pdf_direct(0.9).unwrap(), 0.733_158_698_092_000_8) < 1e-13);
        assert!(l.pdf_direct(0.0).is_err());
        assert!(l.pdf_direct(-1.0).is_err());
    }

    #[test]
    fn layer_h_form_reduces_per_branch() {
        let l = layer(1.0, 0.7, 2.0, 1.0, 3.0);
        for x in [0.05, 0.7, 3.0] {
            assert!(rel(l.pdf_h(x, 1e-10).unwrap(), (-x / 0.7f64).exp() / 0.7) < 1e-9);
        }
        let l = layer(0.0, 0.7, 1.4, 1.1, 2.5);
        for x in [0.05, 0.7, 1.5] {
            assert!(rel(l.pdf_h(x, 1e-10).unwrap(), l.pdf_direct(x).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(EggLayer::new(1.2, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(EggLayer::new(0.5, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(EggLayer::new(0.5, 1.0, 1.0, 1.0, f64::NAN).is_err());
        let l = layer(0.5, 1.0, 1.0, 1.0, 1.0);
        assert!(CascadeChannel::new(vec![], Detection::Heterodyne, 1.0).is_err());
        assert!(CascadeChannel::new(vec![l.clone(); 21], Detection::Heterodyne, 1.0).is_err());
        assert!(CascadeChannel::new(vec![l.clone()], Detection::Heterodyne, 0.0).is_err());
        assert!(Detection::try_from(3).is_err());
        let mut bad = l.clone();
        bad.omega = -0.1;
        let err = CascadeChannel::new(vec![l, bad], Detection::Heterodyne, 1.0).unwrap_err();
        assert!(err.to_string().contains("layers[1].omega"));
    }

    #[test]
    fn means() {
        assert!(rel(layer(1.0, 3.0, 1.0, 1.0, 1.0).mean(), 3.0) < 1e-15);
        assert!(rel(layer(0.0, 3.0, 1.0, 2.0, 1.0).mean(), 2.0) < 1e-14);
    }

    #[test]
    fn two_layer_term_weights() {
        let l1 = layer(0.3, 0.5, 1.2, 0.8, 2.0);
        let l2 = layer(0.6, 1.5, 0.7, 1.1, 3.0);
        let ch = CascadeChannel::new(vec![l1.clone(), l2.clone()], Detection::Heterodyne, 1.0).unwrap();
        let terms = ch.enumerate_terms(Domain::Irradiance);
        assert_eq!(terms.len(), 4);
        let g1 = gamma(l1.a).unwrap();
        let g2 = gamma(l2.a).unwrap();
        let expect = [
            (vec![0, 0], 0.3 * 0.6, 1.0 / (0.5 * 1.5)),
            (vec![1, 0], 0.7 * 0.6 / g1, 1.0 / (0.8 * 1.5)),
            (vec![0, 1], 0.3 * 0.4 / g2, 1.0 / (0.5 * 1.1)),
            (vec![1, 1], 0.7 * 0.4 / (g1 * g2), 1.0 / (0.8 * 1.1)),
        ];
        for (term, (idx, w, s)) in terms.iter().zip(expect) {
            assert_eq!(term.index, idx);
            assert!(rel(term.weight, w) < 1e-13);
            assert!(rel(term.scale, s) < 1e-13);
        }
        assert_eq!(terms[3].pairs, vec![Pair::new(1.2, 0.5), Pair::new(0.7, 1.0 / 3.0)]);
        assert_eq!(terms[0].pairs, vec![Pair::new(1.0, 1.0), Pair::new(1.0, 1.0)]);
    }

    #[test]
    fn single_exponential_snr() {
        let ch = CascadeChannel::new(vec![layer(1.0, 2.0, 1.0, 1.0, 1.0)], Detection::Heterodyne, 5.0).unwrap();
        for g in [0.1, 2.0, 9.0] {
            assert!(rel(ch.snr_pdf(g).unwrap(), (-g / 5.0f64).exp() / 5.0) < 1e-9);
            assert!(rel(ch.snr_cdf(g).unwrap(), 1.0 - (-g / 5.0f64).exp()) < 1e-9);
        }
    }

    #[test]
    fn degenerate_weights_skip_unused_branch() {
        let ch = CascadeChannel::new(
            vec![layer(1.0, 1.0, 1.0, 1.0, 1.0), layer(1.0, 1.0, 1.0, 1.0, 1.0)],
            Detection::Heterodyne,
            1.0,
        )
        .unwrap();
        assert_eq!(ch.enumerate_terms(Domain::Irradiance).len(), 4);
        assert_eq!(ch.active_terms(Domain::Irradiance).len(), 1);
    }
}
