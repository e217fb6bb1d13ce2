//! Rate-distortion functions by Blahut-Arimoto.
//!
//! Curves are traced parametrically: each slope `s > 0` weights distortion in
//! the Lagrangian `I(X; Xt) + s * E[d(X, Xt)]` (rate in nats). A conditional
//! rate-distortion problem decomposes into one unconditional problem per
//! value of the side information at a shared slope, so conditional curves are
//! probability-weighted sums of per-condition solutions.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pixel::{build_joint, PixelModelParams, R, X, XHAT_P, X_P};
use crate::prob::{Alphabet, JointPmf};

/// Chord tolerance used when assembling the lower convex envelope.
const ENVELOPE_TOL: f64 = 1e-12;

/// Kernel entries and output probabilities below this are flushed to zero so
/// that products stay clear of subnormal arithmetic.
const FLUSH: f64 = 1e-150;

/// Output probability given back to a flushed letter whose update factor
/// exceeds one.
const REVIVE: f64 = 1e-100;

/// Nonnegative distortion between source and reconstruction symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "distortion matrix needs {rows}x{cols} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter(
                "distortions must be finite and nonnegative".into(),
            ));
        }
        Ok(DistortionMatrix { rows, cols, data })
    }

    /// Squared error between symbol values.
    pub fn squared_error(source: &Alphabet, recon: &Alphabet) -> Self {
        let data = (0..source.len())
            .flat_map(|i| {
                (0..recon.len()).map(move |j| {
                    let e = source.value(i) - recon.value(j);
                    e * e
                })
            })
            .collect();
        DistortionMatrix {
            rows: source.len(),
            cols: recon.len(),
            data,
        }
    }

    pub fn hamming(n: usize) -> Self {
        let data = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { 1.0 })
            .collect();
        DistortionMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaConfig {
    pub max_iters: usize,
    /// Stop once the Lagrangian is provably within this many bits of its
    /// minimum.
    pub tol: f64,
}

impl Default for BaConfig {
    fn default() -> Self {
        BaConfig {
            max_iters: 200_000,
            tol: 1e-10,
        }
    }
}

/// One point of a rate-distortion curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    /// Bits per symbol.
    pub rate: f64,
    pub distortion: f64,
    pub slope: f64,
    /// False when the iteration budget ran out before the duality gap
    /// closed.
    pub converged: bool,
    /// Certified bound, in bits, on how far the Lagrangian `rate + slope *
    /// distortion / ln 2` of this point exceeds its minimum at this slope.
    pub gap: f64,
    pub iterations: usize,
}

/// Blahut-Arimoto on a dense source distribution. `source[i]` is the
/// probability of row `i` of `dist`.
pub fn blahut_arimoto_dense(
    source: &[f64],
    dist: &DistortionMatrix,
    slope: f64,
    config: &BaConfig,
) -> Result<RdPoint> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "slope must be positive, got {slope}"
        )));
    }
    if source.len() != dist.rows() {
        return Err(Error::InvalidParameter(format!(
            "source has {} symbols, distortion matrix {} rows",
            source.len(),
            dist.rows()
        )));
    }
    let support: Vec<(usize, f64)> = source
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    if support.is_empty() {
        return Err(Error::InvalidDistribution("source has no mass".into()));
    }
    let n_rec = dist.cols();
    let tol_nats = config.tol * std::f64::consts::LN_2;

    // Zero-rate solution: everything maps to the letter with the smallest
    // expected distortion. It is optimal when no letter has c_j > 1.
    let expected: Vec<f64> = (0..n_rec)
        .map(|j| support.iter().map(|&(i, p)| p * dist.get(i, j)).sum())
        .collect();
    let best = (0..n_rec)
        .min_by(|&a, &b| expected[a].total_cmp(&expected[b]))
        .expect("nonempty reconstruction alphabet");
    let max_c = (0..n_rec)
        .map(|j| {
            support
                .iter()
                .map(|&(i, p)| p * (-slope * (dist.get(i, j) - dist.get(i, best))).exp())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if max_c.ln() <= tol_nats {
        return Ok(RdPoint {
            rate: 0.0,
            distortion: expected[best],
            slope,
            converged: true,
            gap: 0.0,
            iterations: 0,
        });
    }

    // Row-shifted kernel exp(-s (d_ij - min_j d_ij)), one row per support
    // symbol.
    let mut kernel = Vec::with_capacity(support.len() * n_rec);
    for &(i, _) in &support {
        let row = dist.row(i);
        let dmin = row.iter().copied().fold(f64::INFINITY, f64::min);
        kernel.extend(row.iter().map(|&d| {
            let k = (-slope * (d - dmin)).exp();
            if k < FLUSH {
                0.0
            } else {
                k
            }
        }));
    }
    let rows = || kernel.chunks_exact(n_rec);

    let mut q = vec![1.0 / n_rec as f64; n_rec];
    let mut c = vec![0.0; n_rec];
    let mut z = vec![0.0; support.len()];
    let mut gap;
    let mut iterations = 0;
    loop {
        for (zi, k) in z.iter_mut().zip(rows()) {
            *zi = k.iter().zip(&q).map(|(a, b)| a * b).sum();
        }
        if z.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            gap = f64::INFINITY;
            break;
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        for ((&(_, p), k), &zi) in support.iter().zip(rows()).zip(&z) {
            let scale = p / zi;
            for (cj, kj) in c.iter_mut().zip(k) {
                *cj += scale * kj;
            }
        }
        gap = c.iter().copied().fold(0.0, f64::max).ln().max(0.0);
        if gap <= tol_nats || iterations == config.max_iters {
            break;
        }
        iterations += 1;
        for (qj, &cj) in q.iter_mut().zip(&c) {
            *qj *= cj;
            if *qj < FLUSH {
                *qj = if *qj == 0.0 && cj > 1.0 { REVIVE } else { 0.0 };
            }
        }
    }

    // Channel induced by q: w_ij = q_j k_ij / z_i, with output marginal
    // q_j c_j, so w_ij / out_j = k_ij / (z_i c_j).
    let mut rate = 0.0;
    let mut distortion = 0.0;
    for ((&(i, p), k), &zi) in support.iter().zip(rows()).zip(&z) {
        for j in 0..n_rec {
            let w = q[j] * k[j] / zi;
            if w > 0.0 {
                rate += p * w * (k[j] / (zi * c[j])).ln();
                distortion += p * w * dist.get(i, j);
            }
        }
    }
    let gap_bits = gap / std::f64::consts::LN_2;
    Ok(RdPoint {
        rate: (rate / std::f64::consts::LN_2).max(0.0),
        distortion,
        slope,
        converged: gap <= tol_nats,
        gap: gap_bits,
        iterations,
    })
}

/// Dense probabilities of a single-variable pmf, in alphabet order.
fn dense_source(source: &JointPmf) -> Result<(String, Vec<f64>)> {
    if source.num_vars() != 1 {
        return Err(Error::InvalidParameter(format!(
            "source must have exactly one variable, got {source}"
        )));
    }
    let name = source.names().next().expect("one variable").to_string();
    let n = source.alphabet(&name)?.len();
    let mut probs = vec![0.0; n];
    for (&code, &p) in source.atom_codes(&name)?.iter().zip(source.atom_probs()) {
        probs[code as usize] += p;
    }
    Ok((name, probs))
}

/// Blahut-Arimoto for a one-variable source.
pub fn blahut_arimoto(
    source: &JointPmf,
    recon: &Alphabet,
    dist: &DistortionMatrix,
    slope: f64,
    config: &BaConfig,
) -> Result<RdPoint> {
    let (_, probs) = dense_source(source)?;
    if dist.cols() != recon.len() {
        return Err(Error::InvalidParameter(format!(
            "distortion matrix has {} columns for {} reconstruction symbols",
            dist.cols(),
            recon.len()
        )));
    }
    blahut_arimoto_dense(&probs, dist, slope, config)
}

/// Rate-distortion curve: lower convex envelope of solver points, sorted by
/// distortion.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    /// Builds the lower convex, nonincreasing envelope of `points`. At equal
    /// distortion the lower rate is kept.
    pub fn from_points(label: impl Into<String>, mut points: Vec<RdPoint>) -> Self {
        points.sort_by(|a, b| {
            a.distortion
                .total_cmp(&b.distortion)
                .then(a.rate.total_cmp(&b.rate))
        });
        points.dedup_by(|later, earlier| later.distortion == earlier.distortion);
        let mut hull: Vec<RdPoint> = Vec::with_capacity(points.len());
        for p in points {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // Drop b when it lies above the chord from a to p.
                let t = (b.distortion - a.distortion) / (p.distortion - a.distortion);
                let chord = a.rate + t * (p.rate - a.rate);
                if b.rate > chord + ENVELOPE_TOL {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // Past the minimum rate the envelope is flat; drop rising tails.
        if let Some(min_at) = hull
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.rate.total_cmp(&b.1.rate))
            .map(|(i, _)| i)
        {
            hull.truncate(min_at + 1);
        }
        RdCurve {
            label: label.into(),
            points: hull,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    pub fn distortion_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.distortion, self.points.last()?.distortion))
    }

    /// Rate at distortion `d` by linear interpolation on the envelope; `None`
    /// outside the sampled distortion range.
    pub fn rate_at(&self, d: f64) -> Option<f64> {
        let (lo, hi) = self.distortion_range()?;
        if d < lo || d > hi {
            return None;
        }
        let k = self.points.partition_point(|p| p.distortion < d);
        if k == 0 {
            return Some(self.points[0].rate);
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        let t = (d - a.distortion) / (b.distortion - a.distortion);
        Some(a.rate + t * (b.rate - a.rate))
    }

    /// Largest `self.rate - other.rate` over the vertices of `self` inside
    /// the distortion range of `other`. Each vertex of `self` is a solver
    /// point and the chords of `other` lie on or above its curve, so a small
    /// value means `self` lies below `other`.
    pub fn max_excess_over(&self, other: &RdCurve) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| other.rate_at(p.distortion).map(|r| p.rate - r))
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))))
    }

    /// Largest chord violation: how far a vertex lies above the chord of its
    /// neighbours (negative for strictly convex curves).
    pub fn max_convexity_violation(&self) -> f64 {
        self.points
            .windows(3)
            .map(|w| {
                let t = (w[1].distortion - w[0].distortion) / (w[2].distortion - w[0].distortion);
                w[1].rate - (w[0].rate + t * (w[2].rate - w[0].rate))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub const CSV_HEADER: [&'static str; 4] = ["label", "slope", "rate_bits", "distortion_mse"];
}

/// `count` logarithmically spaced slopes from `lo` to `hi`.
pub fn log_slopes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// 64 slopes from 1e-3 to 1e3.
pub fn default_slopes() -> Vec<f64> {
    log_slopes(1e-3, 1e3, 64)
}

/// Unconditional curve of a one-variable source.
pub fn rd_curve(
    label: &str,
    source: &JointPmf,
    recon: &Alphabet,
    dist: &DistortionMatrix,
    slopes: &[f64],
    config: &BaConfig,
) -> Result<RdCurve> {
    let points = slopes
        .par_iter()
        .map(|&s| blahut_arimoto(source, recon, dist, s, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::from_points(label, points))
}

/// Conditional curve of `source_var` given `cond_var`: at each slope, solve
/// the problem for every condition value and average rate and distortion
/// with the condition probabilities.
#[allow(clippy::too_many_arguments)]
pub fn conditional_rd_curve(
    label: &str,
    joint: &JointPmf,
    source_var: &str,
    cond_var: &str,
    recon: &Alphabet,
    dist: &DistortionMatrix,
    slopes: &[f64],
    config: &BaConfig,
) -> Result<RdCurve> {
    if source_var == cond_var {
        return Err(Error::OverlappingVariables(source_var.to_string()));
    }
    let pair = joint.marginalize(&[source_var, cond_var])?;
    let cond_alpha = pair.alphabet(cond_var)?.clone();
    let source_len = pair.alphabet(source_var)?.len();
    if dist.rows() != source_len || dist.cols() != recon.len() {
        return Err(Error::InvalidParameter(format!(
            "distortion matrix is {}x{}, expected {source_len}x{}",
            dist.rows(),
            dist.cols(),
            recon.len()
        )));
    }
    // One dense conditional source per condition value with positive mass.
    let mut cells: Vec<(f64, Vec<f64>)> = vec![(0.0, vec![0.0; source_len]); cond_alpha.len()];
    let codes_s = pair.atom_codes(source_var)?;
    let codes_c = pair.atom_codes(cond_var)?;
    for ((&s, &c), &p) in codes_s.iter().zip(codes_c).zip(pair.atom_probs()) {
        cells[c as usize].0 += p;
        cells[c as usize].1[s as usize] += p;
    }
    let cells: Vec<(f64, Vec<f64>)> = cells
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, probs)| (w, probs.into_iter().map(|p| p / w).collect()))
        .collect();

    let points = slopes
        .par_iter()
        .map(|&slope| {
            let mut rate = 0.0;
            let mut distortion = 0.0;
            let mut converged = true;
            let mut gap = 0.0;
            let mut iterations = 0;
            for (w, probs) in &cells {
                let pt = blahut_arimoto_dense(probs, dist, slope, config)?;
                rate += w * pt.rate;
                distortion += w * pt.distortion;
                converged &= pt.converged;
                gap += w * pt.gap;
                iterations = iterations.max(pt.iterations);
            }
            Ok(RdPoint {
                rate,
                distortion,
                slope,
                converged,
                gap,
                iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::from_points(label, points))
}

/// The four curves compared by [`compare_paradigms`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParadigmCurves {
    /// Residual coding: `R` without side information.
    pub residual: RdCurve,
    /// Conditional coding with the full prediction: `X` given `X_p`.
    pub conditional_ideal: RdCurve,
    /// Conditional coding through the bottleneck: `X` given `Xhat_p`.
    pub conditional: RdCurve,
    /// Conditional residual coding: `R` given `Xhat_p`.
    pub conditional_residual: RdCurve,
}

impl ParadigmCurves {
    pub fn all(&self) -> [&RdCurve; 4] {
        [
            &self.residual,
            &self.conditional_ideal,
            &self.conditional,
            &self.conditional_residual,
        ]
    }
}

pub const LABEL_RES: &str = "R_Res";
pub const LABEL_COND_IDEAL: &str = "R_Cond_ideal";
pub const LABEL_COND: &str = "R_Cond";
pub const LABEL_COND_RES: &str = "R_CondRes";

/// Rate-distortion curves of the four coders on the pixel model, under
/// squared error. Residual curves measure `(R - Rt)^2`, which equals the
/// frame error because `x - (x_p + rt) = r - rt`.
pub fn compare_paradigms(
    params: &PixelModelParams,
    slopes: &[f64],
    config: &BaConfig,
) -> Result<ParadigmCurves> {
    let joint = build_joint(params)?;
    let x_alpha = joint.alphabet(X)?.clone();
    let r_alpha = joint.alphabet(R)?.clone();
    let dx = DistortionMatrix::squared_error(&x_alpha, &x_alpha);
    let dr = DistortionMatrix::squared_error(&r_alpha, &r_alpha);
    let residual = rd_curve(
        LABEL_RES,
        &joint.marginalize(&[R])?,
        &r_alpha,
        &dr,
        slopes,
        config,
    )?;
    let conditional_ideal =
        conditional_rd_curve(LABEL_COND_IDEAL, &joint, X, X_P, &x_alpha, &dx, slopes, config)?;
    let conditional =
        conditional_rd_curve(LABEL_COND, &joint, X, XHAT_P, &x_alpha, &dx, slopes, config)?;
    let conditional_residual =
        conditional_rd_curve(LABEL_COND_RES, &joint, R, XHAT_P, &r_alpha, &dr, slopes, config)?;
    Ok(ParadigmCurves {
        residual,
        conditional_ideal,
        conditional,
        conditional_residual,
    })
}

/// Writes curves as `label,slope,rate_bits,distortion_mse`.
pub fn write_curves_csv<W: Write>(writer: W, curves: &[&RdCurve]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RdCurve::CSV_HEADER)?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                curve.label.clone(),
                crate::analysis::sig9(p.slope),
                crate::analysis::sig9(p.rate),
                crate::analysis::sig9(p.distortion),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn h2(d: f64) -> f64 {
        if d <= 0.0 || d >= 1.0 {
            0.0
        } else {
            -d * d.log2() - (1.0 - d) * (1.0 - d).log2()
        }
    }

    #[test]
    fn binary_uniform_hamming_matches_closed_form() {
        let d = DistortionMatrix::hamming(2);
        for target in [0.01f64, 0.05, 0.1, 0.2, 0.3, 0.45] {
            // The optimal test channel at slope s has crossover 1 / (1 + e^s).
            let slope = ((1.0 - target) / target).ln();
            let pt = blahut_arimoto_dense(&[0.5, 0.5], &d, slope, &BaConfig::default()).unwrap();
            assert!(pt.converged);
            assert!((pt.distortion - target).abs() < 1e-9);
            assert!((pt.rate - (1.0 - h2(pt.distortion))).abs() < 1e-6);
        }
    }

    #[test]
    fn small_slope_gives_zero_rate_endpoint() {
        let source = [0.1, 0.2, 0.3, 0.4];
        let a = Alphabet::integers("x", 0, 3).unwrap();
        let d = DistortionMatrix::squared_error(&a, &a);
        let pt = blahut_arimoto_dense(&source, &d, 1e-4, &BaConfig::default()).unwrap();
        let dmax = (0..4)
            .map(|j| (0..4).map(|i| source[i] * d.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!(pt.rate < 1e-9);
        assert!((pt.distortion - dmax).abs() < 1e-9);
    }

    #[test]
    fn point_mass_has_zero_rate_and_distortion() {
        let a = Alphabet::integers("x", 0, 4).unwrap();
        let d = DistortionMatrix::squared_error(&a, &a);
        for slope in [1e-3, 0.1, 1.0, 1e3] {
            let pt = blahut_arimoto_dense(&[0.0, 0.0, 1.0, 0.0, 0.0], &d, slope, &BaConfig::default()).unwrap();
            assert_eq!(pt.rate, 0.0);
            assert_eq!(pt.distortion, 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = DistortionMatrix::hamming(2);
        assert!(blahut_arimoto_dense(&[0.5, 0.5], &d, 0.0, &BaConfig::default()).is_err());
        assert!(blahut_arimoto_dense(&[0.5, 0.3, 0.2], &d, 1.0, &BaConfig::default()).is_err());
        assert!(DistortionMatrix::new(1, 2, vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn iteration_budget_is_flagged() {
        let a = Alphabet::integers("x", 0, 7).unwrap();
        let d = DistortionMatrix::squared_error(&a, &a);
        let src = [0.3, 0.05, 0.1, 0.05, 0.2, 0.1, 0.15, 0.05];
        let cfg = BaConfig { max_iters: 2, tol: 1e-14 };
        let pt = blahut_arimoto_dense(&src, &d, 0.5, &cfg).unwrap();
        assert!(!pt.converged);
        assert_eq!(pt.iterations, 2);
    }

    #[test]
    fn envelope_drops_points_above_chords() {
        let p = |r: f64, d: f64| RdPoint { rate: r, distortion: d, slope: 1.0, converged: true, gap: 0.0, iterations: 1 };
        let c = RdCurve::from_points("t", vec![p(2.0, 0.0), p(1.5, 1.0), p(0.5, 2.0), p(0.0, 4.0), p(0.4, 2.0), p(0.1, 5.0)]);
        let ds: Vec<f64> = c.points.iter().map(|x| x.distortion).collect();
        assert_eq!(ds, vec![0.0, 2.0, 4.0]);
        assert_eq!(c.points[1].rate, 0.4);
        assert!((c.rate_at(1.0).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(c.rate_at(5.0), None);
    }

    #[test]
    fn independent_side_information_changes_nothing() {
        let n = 5;
        let px = [0.1, 0.3, 0.2, 0.25, 0.15];
        let pg = [0.6, 0.4];
        let a = Alphabet::integers("S", 0, n as i64 - 1).unwrap();
        let g = Alphabet::integers("G", 0, 1).unwrap();
        let table: Vec<f64> = px.iter().flat_map(|x| pg.iter().map(move |y| x * y)).collect();
        let joint = JointPmf::from_weights(vec![("S".into(), a.clone()), ("G".into(), g)], table).unwrap();
        let d = DistortionMatrix::squared_error(&a, &a);
        let slopes = log_slopes(1e-2, 1e2, 24);
        let cond = conditional_rd_curve("c", &joint, "S", "G", &a, &d, &slopes, &BaConfig::default()).unwrap();
        let plain = rd_curve("u", &joint.marginalize(&["S"]).unwrap(), &a, &d, &slopes, &BaConfig::default()).unwrap();
        assert_eq!(cond.points.len(), plain.points.len());
        for (x, y) in cond.points.iter().zip(&plain.points) {
            assert!((x.rate - y.rate).abs() < 1e-9);
            assert!((x.distortion - y.distortion).abs() < 1e-9);
        }
    }

    #[test]
    fn copy_side_information_is_free() {
        let a = Alphabet::integers("S", 0, 3).unwrap();
        let mut table = vec![0.0; 16];
        for (i, w) in [0.1, 0.2, 0.3, 0.4].iter().enumerate() {
            table[i * 4 + i] = *w;
        }
        let joint = JointPmf::dense(vec![("S".into(), a.clone()), ("C".into(), Alphabet::integers("C", 0, 3).unwrap())], table).unwrap();
        let d = DistortionMatrix::squared_error(&a, &a);
        let c = conditional_rd_curve("c", &joint, "S", "C", &a, &d, &default_slopes(), &BaConfig::default()).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].rate, 0.0);
        assert_eq!(c.points[0].distortion, 0.0);
    }

    #[test]
    fn perfect_prediction_collapses_curves() {
        let slopes = log_slopes(1e-2, 1e2, 8);
        let params = PixelModelParams::new(8, 0.0, Rational64::from_integer(1)).unwrap();
        let curves = compare_paradigms(&params, &slopes, &BaConfig::default()).unwrap();
        for c in curves.all() {
            assert!(c.points.iter().all(|p| p.rate == 0.0), "{}", c.label);
            assert_eq!(c.points[0].distortion, 0.0, "{}", c.label);
        }
        // Through a coarse bottleneck the conditional coder still pays for
        // the lost bit.
        let params = PixelModelParams::new(8, 0.0, Rational64::from_integer(2)).unwrap();
        let curves = compare_paradigms(&params, &slopes, &BaConfig::default()).unwrap();
        assert!(curves.conditional.points.iter().any(|p| p.rate > 0.5));
        for c in [&curves.residual, &curves.conditional_ideal, &curves.conditional_residual] {
            assert!(c.points.iter().all(|p| p.rate == 0.0), "{}", c.label);
        }
    }

    #[test]
    fn no_bottleneck_makes_conditional_curves_coincide() {
        let params = PixelModelParams::new(8, 0.5, Rational64::from_integer(1)).unwrap();
        let curves = compare_paradigms(&params, &log_slopes(1e-2, 1e2, 16), &BaConfig::default()).unwrap();
        let ideal = &curves.conditional_ideal;
        for other in [&curves.conditional, &curves.conditional_residual] {
            assert!(other.max_excess_over(ideal).unwrap().abs() < 1e-9, "{}", other.label);
            assert!(ideal.max_excess_over(other).unwrap().abs() < 1e-9, "{}", other.label);
        }
    }

    #[test]
    fn pixel_model_orderings_hold() {
        let params = PixelModelParams::new(16, 0.3, Rational64::from_integer(4)).unwrap();
        let curves = compare_paradigms(&params, &default_slopes(), &BaConfig::default()).unwrap();
        for c in curves.all() {
            assert!(c.points.iter().all(|p| p.gap < 1e-7), "{}", c.label);
            assert!(c.max_convexity_violation() <= 1e-6, "{}", c.label);
            assert!(c.points.windows(2).all(|w| w[1].rate <= w[0].rate), "{}", c.label);
        }
        let cr = &curves.conditional_residual;
        assert!(cr.max_excess_over(&curves.conditional).unwrap() <= 1e-6);
        assert!(cr.max_excess_over(&curves.residual).unwrap() <= 1e-6);
        assert!(curves.conditional_ideal.max_excess_over(&curves.residual).unwrap() <= 1e-6);
        assert!(curves.conditional_ideal.max_excess_over(&curves.conditional).unwrap() <= 1e-6);
    }

    #[test]
    fn tightest_slope_approaches_conditional_entropy() {
        let params = PixelModelParams::new(16, 0.3, Rational64::from_integer(4)).unwrap();
        let report = crate::pixel::entropy_report(&params).unwrap();
        let curves = compare_paradigms(&params, &default_slopes(), &BaConfig::default()).unwrap();
        let top = |c: &RdCurve| c.points[0].rate;
        assert!((top(&curves.conditional) - report.h_x_given_xphat.value()).abs() < 0.05);
        assert!((top(&curves.conditional_residual) - report.h_r_given_xphat.value()).abs() < 0.05);
        assert!((top(&curves.residual) - report.h_r.value()).abs() < 0.05);
        assert!((top(&curves.conditional_ideal) - report.h_x_given_xp.value()).abs() < 0.05);
    }

    #[test]
    fn solver_is_deterministic() {
        let params = PixelModelParams::new(8, 0.7, Rational64::from_integer(2)).unwrap();
        let slopes = log_slopes(1e-2, 1e2, 12);
        let a = compare_paradigms(&params, &slopes, &BaConfig::default()).unwrap();
        let b = compare_paradigms(&params, &slopes, &BaConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
