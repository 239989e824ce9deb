//! Closed-form kinks and antikinks, truncated profiles, multi-soliton
//! superpositions and the pointwise energy-density gap `F_Q`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KinkError, Result};
use crate::grid::{FieldConfig, Grid, TWO_PI};

/// `E(m) = 8` for a single kink on the whole line.
pub const KINK_ENERGY: f64 = 8.0;

const SECH_CLAMP: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Kink,
    Antikink,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Kink => 1.0,
            Sign::Antikink => -1.0,
        }
    }

    pub fn of_charge(q: i64) -> Self {
        if q < 0 {
            Sign::Antikink
        } else {
            Sign::Kink
        }
    }
}

/// Ordered soliton centers with a common orientation.
///
/// `truncation = None` means exact profiles; `Some(R)` uses the profile that
/// coincides with the kink on `|x − ξ| ≤ R` and reaches the vacua at `R + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    centers: Vec<f64>,
    sign: Sign,
    truncation: Option<f64>,
}

impl SolitonParams {
    pub fn new(centers: Vec<f64>, sign: Sign, truncation: Option<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("at least one center is required"));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(invalid("centers must be finite"));
        }
        if centers.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("centers must be sorted non-decreasingly"));
        }
        if let Some(r) = truncation {
            if !(r > 0.0) {
                return Err(invalid(format!("truncation radius must be positive, got {r}")));
            }
        }
        Ok(Self { centers, sign, truncation })
    }

    pub fn kinks(centers: Vec<f64>) -> Result<Self> {
        Self::new(centers, Sign::Kink, None)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// Sector reached by the superposition.
    pub fn charge(&self) -> i32 {
        self.sign.value() as i32 * self.centers.len() as i32
    }

    pub fn min_gap(&self) -> f64 {
        self.centers
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn with_centers(&self, centers: Vec<f64>) -> Result<Self> {
        Self::new(centers, self.sign, self.truncation)
    }

    /// Checks `|ξ_j| ≤ L − R − 1` for truncated profiles.
    pub fn check_admissible(&self, grid: &Grid) -> Result<()> {
        if let Some(r) = self.truncation {
            let limit = grid.half_length() - r - 1.0;
            if let Some(&c) = self.centers.iter().find(|c| c.abs() > limit) {
                return Err(KinkError::CenterTooCloseToBoundary { center: c, limit });
            }
        }
        Ok(())
    }
}

/// `2 / (e^u + e^{-u})`; exactly zero once `|u|` passes the overflow clamp.
#[inline]
pub fn sech(u: f64) -> f64 {
    let u = u.abs();
    if u >= SECH_CLAMP {
        return 0.0;
    }
    let e = (-u).exp();
    2.0 * e / (1.0 + e * e)
}

/// `m_ξ(x) = 4 arctan(e^{x−ξ})` for a kink, `4 arctan(e^{−(x−ξ)})` for an antikink.
pub fn kink_value(sign: Sign, center: f64, x: f64) -> f64 {
    let u = sign.value() * (x - center);
    if u > 0.0 {
        TWO_PI - 4.0 * (-u).exp().atan()
    } else {
        4.0 * u.exp().atan()
    }
}

/// `∂_ξ m_ξ(x) = −s·2 sech(x − ξ)`.
pub fn tangent_value(sign: Sign, center: f64, x: f64) -> f64 {
    -sign.value() * 2.0 * sech(x - center)
}

/// `∂_x m_ξ(x) = s·2 sech(x − ξ)`.
pub fn kink_slope(sign: Sign, center: f64, x: f64) -> f64 {
    sign.value() * 2.0 * sech(x - center)
}

/// Profile of a single rising kink centered at 0, truncated at radius `r`.
fn truncated_rising(u: f64, r: Option<f64>) -> f64 {
    let Some(r) = r else {
        return kink_value(Sign::Kink, 0.0, u);
    };
    let a = u.abs();
    if a <= r {
        return kink_value(Sign::Kink, 0.0, u);
    }
    if a >= r + 1.0 {
        return if u > 0.0 { TWO_PI } else { 0.0 };
    }
    // cubic Hermite on the collar: value and slope of m at the inner edge,
    // vacuum value and zero slope at the outer edge
    let t = a - r;
    let h00 = 2.0 * t.powi(3) - 3.0 * t * t + 1.0;
    let h10 = t.powi(3) - 2.0 * t * t + t;
    let h01 = -2.0 * t.powi(3) + 3.0 * t * t;
    let slope = 2.0 * sech(r);
    if u > 0.0 {
        let m_r = kink_value(Sign::Kink, 0.0, r);
        h00 * m_r + h10 * slope + h01 * TWO_PI
    } else {
        // mirror image: m(−u) = 2π − m(u)
        let m_r = kink_value(Sign::Kink, 0.0, r);
        TWO_PI - (h00 * m_r + h10 * slope + h01 * TWO_PI)
    }
}

/// Sign-adjusted single profile used in superpositions: `s·m(x − ξ)`, which
/// rises `0 → 2π` for kinks and falls `0 → −2π` for antikinks.
fn signed_profile(sign: Sign, center: f64, x: f64, r: Option<f64>) -> f64 {
    sign.value() * truncated_rising(x - center, r)
}

/// Node samples of a single (possibly truncated) kink or antikink
/// `m^ε(· − ξ)`; antikinks use the falling profile `4 arctan(e^{−(x−ξ)})`.
pub fn approx_kink_field(p: &SolitonParams, grid: &Grid) -> Result<Vec<f64>> {
    if p.len() != 1 {
        return Err(invalid("approx_kink_field takes exactly one center"));
    }
    p.check_admissible(grid)?;
    let c = p.centers()[0];
    let r = p.truncation();
    Ok((0..grid.n_nodes())
        .map(|i| {
            let x = grid.x(i);
            match p.sign() {
                Sign::Kink => truncated_rising(x - c, r),
                Sign::Antikink => truncated_rising(c - x, r),
            }
        })
        .collect())
}

/// `Σ_j s·m^ε(· − ξ_j)` with endpoints pinned to `0` and `2π·s·k`.
pub fn multi_soliton_field(p: &SolitonParams, grid: &Grid) -> Result<Vec<f64>> {
    p.check_admissible(grid)?;
    let mut v: Vec<f64> = (0..grid.n_nodes())
        .map(|i| {
            let x = grid.x(i);
            p.centers()
                .iter()
                .map(|&c| signed_profile(p.sign(), c, x, p.truncation()))
                .sum()
        })
        .collect();
    let last = v.len() - 1;
    v[0] = 0.0;
    v[last] = TWO_PI * p.charge() as f64;
    Ok(v)
}

pub fn multi_soliton_config(p: &SolitonParams, grid: &Grid) -> Result<FieldConfig> {
    let v = multi_soliton_field(p, grid)?;
    FieldConfig::new(*grid, v, p.charge())
}

/// Raw tangent vectors `∂_{ξ_j} m_ξ` at every node.
pub fn raw_tangents(p: &SolitonParams, grid: &Grid) -> Vec<Vec<f64>> {
    p.centers()
        .iter()
        .map(|&c| {
            (0..grid.n_nodes())
                .map(|i| truncated_tangent(p.sign(), c, grid.x(i), p.truncation()))
                .collect()
        })
        .collect()
}

fn truncated_tangent(sign: Sign, center: f64, x: f64, r: Option<f64>) -> f64 {
    match r {
        Some(r) if (x - center).abs() > r => {
            // derivative of the blended collar with respect to the center
            let a = (x - center).abs();
            if a >= r + 1.0 {
                return 0.0;
            }
            let t = a - r;
            let dh00 = 6.0 * t * t - 6.0 * t;
            let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
            let dh01 = -6.0 * t * t + 6.0 * t;
            let m_r = kink_value(Sign::Kink, 0.0, r);
            let slope = 2.0 * sech(r);
            let d_dt = dh00 * m_r + dh10 * slope + dh01 * TWO_PI;
            // d/dξ: t depends on |x − ξ|; on either side the rising profile has
            // slope d_dt in |u|, and ∂_ξ = −∂_x
            -sign.value() * d_dt
        }
        _ => tangent_value(sign, center, x),
    }
}

/// `∫ e^{−(|y−x| + |z−x|)} dx = (1 + |y−z|) e^{−|y−z|}`.
pub fn conv_integral(y: f64, z: f64) -> f64 {
    let d = (y - z).abs();
    (1.0 + d) * (-d).exp()
}

/// Half-angles `m_j(x)/2` of the exact kinks, each in `[0, π]`.
fn half_angles(p: &SolitonParams, x: f64) -> Vec<f64> {
    p.centers()
        .iter()
        .map(|&c| 0.5 * kink_value(Sign::Kink, c, x))
        .collect()
}

/// Pointwise energy-density gap of the exact superposition over the sum of
/// single-kink densities.
///
/// The gap is invariant under `m ↦ −m`, so antikink parameters give the same
/// values as the mirrored kinks.
pub fn fq_direct(p: &SolitonParams, x: f64) -> f64 {
    let a = half_angles(p, x);
    let k = a.len();
    let sines: Vec<f64> = a.iter().map(|t| t.sin()).collect();
    let mut pair = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            pair += sines[i] * sines[j];
        }
    }
    let total: f64 = a.iter().sum();
    let singles: f64 = a.iter().map(|t| (2.0 * t).cos()).sum();
    4.0 * pair + 1.0 - k as f64 - (2.0 * total).cos() + singles
}

/// The same gap through the many-body representation: explicit two-body
/// terms and, for every subset of size `n ≥ 3`, the product-to-sum expansion
/// over all sign vectors `e ∈ {±1}^n`.
pub fn fq_expansion(p: &SolitonParams, x: f64) -> f64 {
    let a = half_angles(p, x);
    let k = a.len();
    let mut value = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            value += 4.0 * a[i].sin() * a[j].sin() * ((a[i] + a[j]).cos() + 1.0);
        }
    }
    if k >= 3 {
        let mut subset = Vec::with_capacity(k);
        for mask in 0u32..(1u32 << k) {
            if mask.count_ones() < 3 {
                continue;
            }
            subset.clear();
            subset.extend((0..k).filter(|&i| mask & (1 << i) != 0).map(|i| a[i]));
            value += n_body_by_signs(&subset);
        }
    }
    value
}

/// `−Σ_e Π e_j · cos(Σ (1 + e_j) a_j)`, the expanded n-body term.
pub(crate) fn n_body_by_signs(a: &[f64]) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for signs in 0u32..(1u32 << n) {
        let mut phase = 0.0;
        let mut parity = 1.0;
        for (j, &aj) in a.iter().enumerate() {
            if signs & (1 << j) != 0 {
                phase += 2.0 * aj;
            } else {
                parity = -parity;
            }
        }
        acc += parity * phase.cos();
    }
    -acc
}

/// `2^n Π sin a_j · (±sin or ±cos)(Σ a_j)`: the compact n-body form.
#[cfg(test)]
pub(crate) fn n_body_product(a: &[f64]) -> f64 {
    let n = a.len() as i32;
    let prod: f64 = a.iter().map(|t| t.sin()).product();
    let s: f64 = a.iter().sum();
    let trig = if n % 2 == 1 {
        (-1f64).powi((n - 1) / 2) * s.sin()
    } else {
        (-1f64).powi((n - 2) / 2) * s.cos()
    };
    2f64.powi(n) * prod * trig
}

/// `U(a) = 1 − cos a`.
pub fn superposition_defect(parts: &[f64]) -> f64 {
    let u = |t: f64| 1.0 - t.cos();
    let s: f64 = parts.iter().sum();
    (u(s) - parts.iter().map(|&t| u(t)).sum::<f64>()).abs()
}
