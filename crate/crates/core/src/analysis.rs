//! Bjøntegaard delta rate and tabular output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::pixel::{parse_quant_step, EntropyReport, SweepRow};
use crate::rd::{RdCurve, RdPoint};

/// Formats like C's `%.9g`.
pub fn sig9(v: f64) -> String {
    format_g(v, 9)
}

fn format_g(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a quantizer step as an integer, a terminating decimal, or `n/d`.
pub fn format_quant_step(q: &Rational64) -> String {
    if q.is_integer() {
        return q.to_integer().to_string();
    }
    let (num, den) = (*q.numer(), *q.denom());
    let mut scale: i64 = 1;
    for k in 1..=12 {
        scale *= 10;
        if scale % den == 0 {
            let scaled = num * (scale / den);
            let sign = if scaled < 0 { "-" } else { "" };
            let abs = scaled.unsigned_abs();
            let int = abs / scale as u64;
            let frac = abs % scale as u64;
            let frac = format!("{frac:0k$}");
            return format!("{sign}{int}.{}", frac.trim_end_matches('0'));
        }
    }
    format!("{num}/{den}")
}

/// Peak signal-to-noise ratio in dB; infinite for zero error.
pub fn mse_to_psnr(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Rate-quality points, sorted by rate, strictly increasing in both.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityCurve {
    points: Vec<(f64, f64)>,
}

impl QualityCurve {
    pub const MIN_POINTS: usize = 4;

    /// Accepts `(rate, quality)` pairs in any order.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "quality curve needs at least {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            )));
        }
        if points
            .iter()
            .any(|&(r, q)| !(r > 0.0 && r.is_finite() && q.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "rates must be positive and finite, qualities finite".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
            return Err(Error::InvalidParameter(
                "quality curve must be strictly increasing in rate and quality".into(),
            ));
        }
        Ok(QualityCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn quality_range(&self) -> (f64, f64) {
        (self.points[0].1, self.points[self.points.len() - 1].1)
    }

    /// Builds a curve from a rate-distortion curve, keeping the points with
    /// rate at least `min_rate` and PSNR at most `max_psnr`. Near-zero rates
    /// and the flat high-quality tail would otherwise dominate the cubic fit.
    pub fn from_rd_curve(curve: &RdCurve, peak: f64, min_rate: f64, max_psnr: f64) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for p in &curve.points {
            let q = mse_to_psnr(p.distortion, peak);
            if p.rate >= min_rate && q.is_finite() && q <= max_psnr {
                points.push((p.rate, q));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|later, earlier| !(later.0 > earlier.0 && later.1 > earlier.1));
        QualityCurve::new(points)
    }
}

/// Least-squares cubic for `log10(rate)` as a function of normalized
/// quality `t = (quality - center) / half_width`.
fn fit_log_rate(curve: &QualityCurve, center: f64, half_width: f64) -> Result<[f64; 4]> {
    let n = curve.points.len();
    let a = DMatrix::from_fn(n, 4, |i, k| {
        ((curve.points[i].1 - center) / half_width).powi(k as i32)
    });
    let b = DVector::from_fn(n, |i, _| curve.points[i].0.log10());
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("cubic fit failed: {e}")))?;
    Ok([coef[0], coef[1], coef[2], coef[3]])
}

fn integrate_cubic(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let anti = |t: f64| c[0] * t + c[1] * t * t / 2.0 + c[2] * t.powi(3) / 3.0 + c[3] * t.powi(4) / 4.0;
    anti(hi) - anti(lo)
}

/// Interpolation variant used by [`bd_rate`], written into BD outputs.
pub const BD_METHOD: &str = "least-squares cubic of log10(rate) over quality";

/// Average rate difference of `test` against `reference`, in percent, over
/// their common quality interval. Negative values mean `test` saves rate.
pub fn bd_rate(reference: &QualityCurve, test: &QualityCurve) -> Result<f64> {
    let (r_lo, r_hi) = reference.quality_range();
    let (t_lo, t_hi) = test.quality_range();
    let lo = r_lo.max(t_lo);
    let hi = r_hi.min(t_hi);
    if hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "quality ranges do not overlap: [{r_lo}, {r_hi}] and [{t_lo}, {t_hi}]"
        )));
    }
    let center = (lo + hi) / 2.0;
    let half = (hi - lo) / 2.0;
    let fr = fit_log_rate(reference, center, half)?;
    let ft = fit_log_rate(test, center, half)?;
    let diff = [ft[0] - fr[0], ft[1] - fr[1], ft[2] - fr[2], ft[3] - fr[3]];
    let avg = integrate_cubic(&diff, -1.0, 1.0) / 2.0;
    Ok(100.0 * (10f64.powf(avg) - 1.0))
}

/// Percent with four decimals.
pub fn format_percent(v: f64) -> String {
    format!("{v:.4}%")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_provenance<W: Write>(w: &mut W, path: &Path, provenance: Option<&str>) -> Result<()> {
    if let Some(line) = provenance {
        writeln!(w, "# {line}").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn flush(path: &Path, w: &mut impl Write) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const SWEEP_LEAD: [&str; 2] = ["Q", "p"];

pub fn sweep_header() -> Vec<&'static str> {
    SWEEP_LEAD.iter().chain(EntropyReport::FIELDS.iter()).copied().collect()
}

/// Writes sweep rows with an optional leading `#` comment line.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], provenance: Option<&str>) -> Result<()> {
    let mut file = create(path)?;
    write_provenance(&mut file, path, provenance)?;
    let mut w = csv::Writer::from_writer(&mut file);
    w.write_record(sweep_header()).map_err(csv_err(path))?;
    for row in rows {
        let mut rec = vec![format_quant_step(&row.quant_step), sig9(row.occlusion_prob)];
        rec.extend(row.report.values().iter().map(|&v| sig9(v)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    drop(w);
    flush(path, &mut file)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad number `{field}`", path.display())))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err(path))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &sweep_header())?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let quant_step = parse_quant_step(&rec[0])?;
        let occlusion_prob = parse_f64(path, &rec[1])?;
        let mut values = [0.0; 9];
        for (k, v) in values.iter_mut().enumerate() {
            *v = parse_f64(path, &rec[k + 2])?;
        }
        rows.push(SweepRow {
            quant_step,
            occlusion_prob,
            report: EntropyReport::from_values(values)?,
        });
    }
    Ok(rows)
}

pub fn write_rd_csv(path: &Path, curves: &[&RdCurve], provenance: Option<&str>) -> Result<()> {
    let mut file = create(path)?;
    write_provenance(&mut file, path, provenance)?;
    crate::rd::write_curves_csv(&mut file, curves).map_err(csv_err(path))?;
    flush(path, &mut file)
}

/// Reads curves back, grouped by label in order of first appearance. Solver
/// diagnostics are not stored, so points read back as converged.
pub fn read_rd_csv(path: &Path) -> Result<Vec<RdCurve>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &RdCurve::CSV_HEADER)?;
    let mut curves: Vec<RdCurve> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let point = RdPoint {
            slope: parse_f64(path, &rec[1])?,
            rate: parse_f64(path, &rec[2])?,
            distortion: parse_f64(path, &rec[3])?,
            converged: true,
            gap: 0.0,
            iterations: 0,
        };
        match curves.iter_mut().find(|c| c.label == rec[0]) {
            Some(c) => c.points.push(point),
            None => curves.push(RdCurve {
                label: rec[0].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

/// Writes a theorem report as CSV.
pub fn write_theorem_csv(
    path: &Path,
    report: &crate::theorems::TheoremReport,
    provenance: Option<&str>,
) -> Result<()> {
    let mut file = create(path)?;
    write_provenance(&mut file, path, provenance)?;
    report.write_csv(&mut file).map_err(csv_err(path))?;
    flush(path, &mut file)
}
