//! Parsers for grid and list arguments.

use condres_core::pixel::parse_quant_step;
use num_rational::Rational64;

/// A parsed list argument, kept whole so clap treats it as one value.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

pub fn p_grid(text: &str) -> Result<List<f64>, String> {
    parse_p_grid(text).map(List)
}

pub fn q_list(text: &str) -> Result<List<Rational64>, String> {
    parse_q_list(text).map(List)
}

pub fn slopes(text: &str) -> Result<List<f64>, String> {
    parse_slopes(text).map(List)
}

pub fn shape(text: &str) -> Result<List<usize>, String> {
    parse_shape(text).map(List)
}

/// Occlusion probabilities: `0.1,0.5,1` or an inclusive range
/// `start:stop:step`.
pub fn parse_p_grid(text: &str) -> Result<Vec<f64>, String> {
    let values = if text.contains(':') {
        let parts = numbers(text, ':')?;
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got `{text}`"));
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(format!("empty or invalid range `{text}`"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| round12(start + k as f64 * step))
            .collect()
    } else {
        numbers(text, ',')?
    };
    if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(format!("occlusion probabilities must lie in [0, 1]: `{text}`"));
    }
    Ok(values)
}

/// Quantizer steps: `1,1.4,2,64` or fractions such as `7/5`.
pub fn parse_q_list(text: &str) -> Result<Vec<Rational64>, String> {
    text.split(',')
        .map(|t| parse_quant_step(t).map_err(|e| e.to_string()))
        .collect()
}

/// Slopes: `lo:hi:count` for logarithmic spacing, or an explicit list.
pub fn parse_slopes(text: &str) -> Result<Vec<f64>, String> {
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("expected lo:hi:count, got `{text}`"));
        };
        let lo = number(lo)?;
        let hi = number(hi)?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad slope count `{count}`"))?;
        if count == 0 || hi < lo {
            return Err(format!("empty slope range `{text}`"));
        }
        condres_core::rd::log_slopes(lo, hi, count)
    } else {
        numbers(text, ',')?
    };
    if values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(format!("slopes must be positive: `{text}`"));
    }
    Ok(values)
}

/// Axis sizes such as `8x8` or `4x4x4`.
pub fn parse_shape(text: &str) -> Result<Vec<usize>, String> {
    let shape: Vec<usize> = text
        .split('x')
        .map(|t| t.trim().parse().map_err(|_| format!("bad shape `{text}`")))
        .collect::<Result<_, _>>()?;
    if shape.contains(&0) {
        return Err(format!("shape axes must be positive: `{text}`"));
    }
    Ok(shape)
}

fn number(t: &str) -> Result<f64, String> {
    t.trim().parse().map_err(|_| format!("bad number `{t}`"))
}

fn numbers(text: &str, sep: char) -> Result<Vec<f64>, String> {
    text.split(sep).map(number).collect()
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}
