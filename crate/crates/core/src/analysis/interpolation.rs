//! Empirical constant of the interpolation inequality
//! `|u|_{H^m} <= K |u|_{H^k}^{m/k} |u|_{L2}^{1-m/k}`.

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::RepuNetwork;
use crate::quadrature::{derivative_norms_sq, QuadratureRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRecord {
    pub m: u32,
    pub k: u32,
    /// One ratio per object; `None` where `|u|_{L2} < 1e-12`.
    pub ratios: Vec<Option<f64>>,
    pub k_fit: f64,
    pub median: f64,
    pub skipped: usize,
}

/// Norm threshold below which a ratio is treated as degenerate.
const DEGENERATE_L2: f64 = 1e-12;

/// `K_fit = max_u |u|_{H^m} / (|u|_{H^k}^{m/k} |u|_{L2}^{1-m/k})`.
///
/// All three norms come from one set of per-derivative integrals summed
/// cumulatively by order, so the `m = 0` and `m = k` ratios are exactly 1.
pub fn interpolation_check(objects: &[RepuNetwork], m: u32, k: u32, rule: &QuadratureRule) -> Result<InterpolationRecord> {
    if m > k {
        return Err(Error::Domain(format!("interpolation order m = {m} exceeds k = {k}")));
    }
    let theta = f64::from(m) / f64::from(k);
    let mut ratios = Vec::with_capacity(objects.len());
    for (i, u) in objects.iter().enumerate() {
        let parts = derivative_norms_sq(u, k, rule)?;
        let mut cumulative = vec![0.0; k as usize + 1];
        for (alpha, v) in &parts {
            cumulative[alpha.order() as usize] += v;
        }
        for s in 1..cumulative.len() {
            cumulative[s] += cumulative[s - 1];
        }
        let l2 = cumulative[0].sqrt();
        if l2 < DEGENERATE_L2 {
            info!("interpolation check: object {i} has L2 norm {l2:e}, skipped");
            ratios.push(None);
            continue;
        }
        let hm = cumulative[m as usize].sqrt();
        let hk = cumulative[k as usize].sqrt();
        ratios.push(Some(hm / (hk.powf(theta) * l2.powf(1.0 - theta))));
    }
    let mut valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    valid.sort_by(f64::total_cmp);
    let k_fit = valid.last().copied().unwrap_or(f64::NAN);
    let median = match valid.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => valid[n / 2],
        n => 0.5 * (valid[n / 2 - 1] + valid[n / 2]),
    };
    Ok(InterpolationRecord {
        m,
        k,
        skipped: ratios.iter().filter(|r| r.is_none()).count(),
        ratios,
        k_fit,
        median,
    })
}
