//! Single-pixel temporal prediction model.
//!
//! The current pixel `X` is uniform over `0..M`. With probability `1 - p` the
//! prediction `X_p` equals `X`; with probability `p` (an occlusion) it is an
//! independent uniform draw. The prediction path degrades `X_p` to
//! `Xhat_p = floor(X_p / Q) * Q`, and the residual is `R = X - X_p`.

use std::cmp::Ordering;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{conditional_entropy, entropy, mutual_information, Bits};
use crate::prob::{Alphabet, DeterministicMap, JointPmf, Symbol};

pub const X: &str = "X";
pub const X_P: &str = "X_p";
pub const XHAT_P: &str = "Xhat_p";
pub const R: &str = "R";

/// Parses a quantizer step such as `2`, `1.4` or `7/5` into an exact ratio.
pub fn parse_quant_step(text: &str) -> Result<Rational64> {
    let bad = || Error::InvalidParameter(format!("cannot parse quantizer step `{text}`"));
    let text = text.trim();
    let value = if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Rational64::new(num, den)
    } else {
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.len() > 12 || (int.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: i64 = digits.parse().map_err(|_| bad())?;
        Rational64::new(num, 10i64.pow(frac.len() as u32))
    };
    Ok(value)
}

/// Uniform quantizer of the prediction path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantizer {
    step: Rational64,
}

impl Quantizer {
    pub fn new(step: Rational64) -> Result<Self> {
        if step < Rational64::from_integer(1) {
            return Err(Error::InvalidParameter(format!(
                "quantizer step must be at least 1, got {step}"
            )));
        }
        Ok(Quantizer { step })
    }

    pub fn step(&self) -> Rational64 {
        self.step
    }

    /// Cell index `floor(x / Q)`, evaluated exactly.
    pub fn cell(&self, x: &Symbol) -> i64 {
        (x / self.step).floor().to_integer()
    }

    pub fn reconstruct(&self, x: &Symbol) -> Symbol {
        Symbol::from_integer(self.cell(x)) * self.step
    }

    /// The quantizer as a map from `domain` onto the occupied cells.
    pub fn map(&self, domain: &Alphabet) -> Result<DeterministicMap> {
        DeterministicMap::with_image_codomain(domain.clone(), XHAT_P, |x| self.reconstruct(x))
    }
}

/// Parameters of the pixel model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelModelParams {
    pub alphabet_size: usize,
    pub occlusion_prob: f64,
    pub quant_step: Rational64,
}

impl PixelModelParams {
    pub fn new(alphabet_size: usize, occlusion_prob: f64, quant_step: Rational64) -> Result<Self> {
        let params = PixelModelParams {
            alphabet_size,
            occlusion_prob,
            quant_step,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size < 2 || self.alphabet_size > u16::MAX as usize + 1 {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in 2..=65536, got {}",
                self.alphabet_size
            )));
        }
        if !(0.0..=1.0).contains(&self.occlusion_prob) {
            return Err(Error::InvalidParameter(format!(
                "occlusion probability must lie in [0, 1], got {}",
                self.occlusion_prob
            )));
        }
        Quantizer::new(self.quant_step).map(|_| ())
    }

    pub fn quantizer(&self) -> Quantizer {
        Quantizer {
            step: self.quant_step,
        }
    }

    pub fn pixel_alphabet(&self, name: &str) -> Alphabet {
        Alphabet::integers(name, 0, self.alphabet_size as i64 - 1).expect("size >= 2")
    }

    /// `Pr(x_p | x)`.
    pub fn prediction_prob(&self, x: usize, x_p: usize) -> f64 {
        let p = self.occlusion_prob;
        let hit = if x == x_p { 1.0 - p } else { 0.0 };
        p / self.alphabet_size as f64 + hit
    }
}

/// Joint distribution of `(X, X_p, Xhat_p, R)`.
pub fn build_joint(params: &PixelModelParams) -> Result<JointPmf> {
    params.validate()?;
    let m = params.alphabet_size;
    let weights: Vec<f64> = (0..m * m)
        .map(|cell| params.prediction_prob(cell / m, cell % m) / m as f64)
        .collect();
    let base = JointPmf::from_weights(
        vec![
            (X.to_string(), params.pixel_alphabet(X)),
            (X_P.to_string(), params.pixel_alphabet(X_P)),
        ],
        weights,
    )?;
    let quantizer = params.quantizer().map(&params.pixel_alphabet(X_P))?;
    base.adjoin_map(X_P, &quantizer, XHAT_P)?
        .adjoin_difference(X, X_P, R)
}

/// The entropies and mutual informations that determine the rates of the
/// three lossless coders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyReport {
    pub h_r: Bits,
    pub h_x_given_xp: Bits,
    pub h_x_given_xphat: Bits,
    pub h_r_given_xphat: Bits,
    pub h_r_given_xp: Bits,
    pub i_x_xp: Bits,
    pub i_x_xphat: Bits,
    pub i_r_xp: Bits,
    pub i_r_xphat: Bits,
}

impl EntropyReport {
    /// Column names, in CSV order.
    pub const FIELDS: [&'static str; 9] = [
        "H_R",
        "H_X_given_Xp",
        "H_X_given_Xphat",
        "H_R_given_Xphat",
        "H_R_given_Xp",
        "I_X_Xp",
        "I_X_Xphat",
        "I_R_Xp",
        "I_R_Xphat",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.h_r.value(),
            self.h_x_given_xp.value(),
            self.h_x_given_xphat.value(),
            self.h_r_given_xphat.value(),
            self.h_r_given_xp.value(),
            self.i_x_xp.value(),
            self.i_x_xphat.value(),
            self.i_r_xp.value(),
            self.i_r_xphat.value(),
        ]
    }

    pub fn from_values(v: [f64; 9]) -> Result<Self> {
        let b = |i: usize| Bits::checked(Self::FIELDS[i], v[i]);
        Ok(EntropyReport {
            h_r: b(0)?,
            h_x_given_xp: b(1)?,
            h_x_given_xphat: b(2)?,
            h_r_given_xphat: b(3)?,
            h_r_given_xp: b(4)?,
            i_x_xp: b(5)?,
            i_x_xphat: b(6)?,
            i_r_xp: b(7)?,
            i_r_xphat: b(8)?,
        })
    }

    /// Computes the report from any joint carrying the four model variables.
    pub fn from_joint(joint: &JointPmf) -> Result<Self> {
        Ok(EntropyReport {
            h_r: entropy(joint, &[R])?,
            h_x_given_xp: conditional_entropy(joint, &[X], &[X_P])?,
            h_x_given_xphat: conditional_entropy(joint, &[X], &[XHAT_P])?,
            h_r_given_xphat: conditional_entropy(joint, &[R], &[XHAT_P])?,
            h_r_given_xp: conditional_entropy(joint, &[R], &[X_P])?,
            i_x_xp: mutual_information(joint, &[X], &[X_P])?,
            i_x_xphat: mutual_information(joint, &[X], &[XHAT_P])?,
            i_r_xp: mutual_information(joint, &[R], &[X_P])?,
            i_r_xphat: mutual_information(joint, &[R], &[XHAT_P])?,
        })
    }
}

pub fn entropy_report(params: &PixelModelParams) -> Result<EntropyReport> {
    EntropyReport::from_joint(&build_joint(params)?)
}

/// One grid point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub quant_step: Rational64,
    pub occlusion_prob: f64,
    pub report: EntropyReport,
}

/// Entropy reports over the grid `q_list x p_grid`, ordered by `(Q, p)`.
pub fn sweep_p(p_grid: &[f64], q_list: &[Rational64], alphabet_size: usize) -> Result<Vec<SweepRow>> {
    if p_grid.is_empty() || q_list.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be nonempty".into()));
    }
    let mut points: Vec<(Rational64, f64)> = q_list
        .iter()
        .flat_map(|&q| p_grid.iter().map(move |&p| (q, p)))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points
        .par_iter()
        .map(|&(q, p)| {
            let params = PixelModelParams::new(alphabet_size, p, q)?;
            Ok(SweepRow {
                quant_step: q,
                occlusion_prob: p,
                report: entropy_report(&params)?,
            })
        })
        .collect()
}

/// Location where `H(X|Xhat_p) - H(R)` changes sign between two consecutive
/// occlusion probabilities at the same quantizer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossover {
    pub quant_step: Rational64,
    pub p_before: f64,
    pub p_after: f64,
    /// Linear interpolation of the zero crossing.
    pub p_estimate: f64,
}

pub fn conditional_vs_residual_crossovers(rows: &[SweepRow]) -> Vec<Crossover> {
    let gap = |r: &SweepRow| r.report.h_x_given_xphat.value() - r.report.h_r.value();
    rows.windows(2)
        .filter(|w| w[0].quant_step == w[1].quant_step)
        .filter_map(|w| {
            let (g0, g1) = (gap(&w[0]), gap(&w[1]));
            let sign = |g: f64| g.partial_cmp(&0.0).unwrap_or(Ordering::Equal);
            if sign(g0) == sign(g1) || g0.is_zero() && g1.is_zero() {
                return None;
            }
            let (p0, p1) = (w[0].occlusion_prob, w[1].occlusion_prob);
            let t = if g1 == g0 { 0.0 } else { g0 / (g0 - g1) };
            Some(Crossover {
                quant_step: w[0].quant_step,
                p_before: p0,
                p_after: p1,
                p_estimate: p0 + t * (p1 - p0),
            })
        })
        .collect()
}

/// Default occlusion grid `0.01, 0.02, ..., 1.00`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// Default quantizer steps `1, 1.4, 2, 64`.
pub fn default_q_list() -> Vec<Rational64> {
    vec![
        Rational64::from_integer(1),
        Rational64::new(7, 5),
        Rational64::from_integer(2),
        Rational64::from_integer(64),
    ]
}

pub fn quant_step_f64(q: &Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
