#![allow(dead_code)]

use rayon::prelude::*;
use uwoc::channel::{CascadeChannel, Detection, Domain, EggLayer};
use uwoc::fox_h::MAX_ARGUMENT;
use uwoc::quad::{integrate, QuadOptions};
use uwoc::special_fn::{gamma, upper_incomplete_gamma};

/// EGG fits of the magnitude reported for laboratory water tanks.
pub const FITS: [(f64, f64, f64, f64, f64); 4] = [
    (0.2130, 0.3291, 1.4299, 1.1817, 17.1984),
    (0.1665, 0.1207, 0.1559, 1.5216, 22.8754),
    (0.1261, 0.0681, 0.0393, 2.0602, 32.2450),
    (0.4951, 0.3754, 0.2829, 1.0109, 34.9916),
];

pub fn layer(p: (f64, f64, f64, f64, f64)) -> EggLayer {
    EggLayer::new(p.0, p.1, p.2, p.3, p.4).unwrap()
}

pub fn fit(i: usize) -> EggLayer {
    layer(FITS[i])
}

pub fn cascade(layers: Vec<EggLayer>, r: u8, mu_r_db: f64) -> CascadeChannel {
    let det = Detection::try_from(r).unwrap();
    CascadeChannel::new(layers, det, 10f64.powf(mu_r_db / 10.0)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫_{e^lo}^{e^hi} f(x) dx` via `x = e^u`, split at `breaks` and run in parallel.
pub fn log_integral<F>(f: F, lo: f64, hi: f64, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let opts = QuadOptions { rel_tol, abs_tol, initial_panels: 1, max_panels: 4000 };
    let parts: Vec<f64> = pts
        .par_windows(2)
        .map(|w| {
            let r = integrate(|u| { let x = u.exp(); x * f(x) }, w[0], w[1], &opts);
            assert!(r.converged, "quadrature on [{}, {}] did not converge: {:?}", w[0], w[1], r);
            r.value
        })
        .collect();
    parts.iter().sum()
}

/// Log-axis window and breakpoints that resolve every mixture term of `ch`.
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
}

pub fn window(ch: &CascadeChannel, domain: Domain) -> Window {
    let terms = ch.active_terms(domain);
    let max_scale = terms.iter().map(|t| t.scale).fold(0.0, f64::max);
    let lo = (1e-40 / max_scale).ln();
    let hi = (0.5 * MAX_ARGUMENT / max_scale).ln();
    let mut breaks = Vec::new();
    for t in &terms {
        let centre = -t.scale.ln();
        for k in -12..=12 {
            breaks.push(centre + 0.05 * k as f64);
        }
        for k in [-20.0, -10.0, -5.0, -2.0, 2.0, 5.0] {
            breaks.push(centre + k);
        }
    }
    Window { lo, hi, breaks }
}

/// `∫ f_γ(γ) g(γ) dγ` by quadrature over the SNR density.
pub fn snr_expectation<G>(ch: &CascadeChannel, g: G, abs_tol: f64) -> f64
where
    G: Fn(f64) -> f64 + Sync,
{
    let w = window(ch, Domain::Snr);
    log_integral(|x| ch.snr_pdf(x).unwrap() * g(x), w.lo, w.hi, &w.breaks, 1e-9, abs_tol)
}

/// Upper-tail probability of a χ² variable with `dof` degrees of freedom.
pub fn chi2_sf(stat: f64, dof: f64) -> f64 {
    upper_incomplete_gamma(0.5 * dof, 0.5 * stat).unwrap() / gamma(0.5 * dof).unwrap()
}

/// Prints the verdict line of one criterion and returns whether it passed.
pub fn verdict(id: &str, ok: bool, detail: impl AsRef<str>) -> bool {
    println!("{} criterion {id}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    ok
}
