//! Shannon measures over a [`JointPmf`].
//!
//! Every measure is a signed combination of joint entropies computed by one
//! kernel ([`joint_entropy`]), so identities that subtract measures from each
//! other see consistent rounding.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::prob::{neumaier_add, JointPmf};

/// Negative results down to this value are float noise and clamp to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Information quantity in bits per symbol. Never negative.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Bits(f64);

impl Bits {
    pub const ZERO: Bits = Bits(0.0);

    /// Clamps values in `[-CLAMP_TOL, 0)` to zero and rejects anything more
    /// negative.
    pub fn checked(measure: &str, value: f64) -> Result<Bits> {
        if value >= 0.0 {
            Ok(Bits(value))
        } else if value >= -CLAMP_TOL {
            Ok(Bits(0.0))
        } else {
            Err(Error::NegativeMeasure {
                measure: measure.to_string(),
                value,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Bits> for f64 {
    fn from(b: Bits) -> f64 {
        b.0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bit", self.0)
    }
}

/// Unclamped joint entropy of a set of variables (base 2, `0 log 0 = 0`).
/// The empty set has entropy zero.
pub fn joint_entropy(pmf: &JointPmf, vars: &[&str]) -> Result<f64> {
    if vars.is_empty() {
        return Ok(0.0);
    }
    let idx = pmf.var_indices(vars)?;
    let (mut sum, mut comp) = (0.0, 0.0);
    for (_, q) in pmf.grouped(&idx) {
        if q > 0.0 {
            neumaier_add(&mut sum, &mut comp, -q * q.log2());
        }
    }
    Ok(sum + comp)
}

fn disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for set in sets {
        for name in set.iter() {
            if !seen.insert(*name) {
                return Err(Error::OverlappingVariables(name.to_string()));
            }
        }
    }
    Ok(())
}

fn union<'a>(sets: &[&[&'a str]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

fn label(kind: &str, parts: &[&[&str]]) -> String {
    let parts: Vec<String> = parts.iter().map(|p| p.join(",")).collect();
    format!("{kind}({})", parts.join(";"))
}

/// `H(vars)`.
pub fn entropy(pmf: &JointPmf, vars: &[&str]) -> Result<Bits> {
    if vars.is_empty() {
        return Err(Error::EmptySelection);
    }
    Bits::checked(&label("H", &[vars]), joint_entropy(pmf, vars)?)
}

/// `H(target | given) = H(target, given) - H(given)`.
pub fn conditional_entropy(pmf: &JointPmf, target: &[&str], given: &[&str]) -> Result<Bits> {
    if target.is_empty() {
        return Err(Error::EmptySelection);
    }
    disjoint(&[target, given])?;
    let h = joint_entropy(pmf, &union(&[target, given]))? - joint_entropy(pmf, given)?;
    Bits::checked(&format!("H({}|{})", target.join(","), given.join(",")), h)
}

/// `I(a; b) = H(a) + H(b) - H(a, b)`.
pub fn mutual_information(pmf: &JointPmf, a: &[&str], b: &[&str]) -> Result<Bits> {
    conditional_mutual_information(pmf, a, b, &[])
}

/// `I(a; b | given) = H(a, g) + H(b, g) - H(a, b, g) - H(g)`.
pub fn conditional_mutual_information(
    pmf: &JointPmf,
    a: &[&str],
    b: &[&str],
    given: &[&str],
) -> Result<Bits> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySelection);
    }
    disjoint(&[a, b, given])?;
    let hag = joint_entropy(pmf, &union(&[a, given]))?;
    let hbg = joint_entropy(pmf, &union(&[b, given]))?;
    let habg = joint_entropy(pmf, &union(&[a, b, given]))?;
    let hg = joint_entropy(pmf, given)?;
    let name = if given.is_empty() {
        label("I", &[a, b])
    } else {
        format!("I({};{}|{})", a.join(","), b.join(","), given.join(","))
    };
    Bits::checked(&name, (hag - habg) + (hbg - hg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Alphabet, DeterministicMap, Symbol};

    fn var(name: &str, n: i64) -> (String, Alphabet) {
        (name.to_string(), Alphabet::integers(name, 0, n - 1).unwrap())
    }

    fn uniform(n: usize) -> JointPmf {
        JointPmf::dense(vec![var("X", n as i64)], vec![1.0 / n as f64; n]).unwrap()
    }

    fn copy(n: usize) -> JointPmf {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            t[i * n + i] = 1.0 / n as f64;
        }
        JointPmf::dense(vec![var("X", n as i64), var("Y", n as i64)], t).unwrap()
    }

    #[test]
    fn entropy_basics() {
        assert_eq!(entropy(&uniform(256), &["X"]).unwrap().value(), 8.0);
        let point = JointPmf::dense(vec![var("X", 3)], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(entropy(&point, &["X"]).unwrap().value(), 0.0);
        assert!(matches!(
            entropy(&point, &["Q"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn triangular_residual_entropy() {
        let n = 256;
        let a = Alphabet::integers("X", 0, 255).unwrap();
        let pmf = JointPmf::dense(
            vec![("X".into(), a.clone()), ("Xp".into(), a)],
            vec![1.0 / (n * n) as f64; n * n],
        )
        .unwrap()
        .adjoin_difference("X", "Xp", "R")
        .unwrap();
        // Oracle: Pr(R = d) = (256 - |d|) / 256^2.
        let oracle: f64 = (-255i64..=255)
            .map(|d| {
                let p = (256 - d.abs()) as f64 / 65536.0;
                -p * p.log2()
            })
            .sum();
        let h = entropy(&pmf, &["R"]).unwrap().value();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 8.72).abs() < 0.01);
    }

    #[test]
    fn conditional_entropy_cases() {
        let c = copy(8);
        assert_eq!(conditional_entropy(&c, &["X"], &["Y"]).unwrap().value(), 0.0);
        assert!(matches!(
            conditional_entropy(&c, &["X"], &["X"]),
            Err(Error::OverlappingVariables(_))
        ));

        let ind = JointPmf::dense(vec![var("X", 2), var("G", 2)], vec![0.12, 0.28, 0.18, 0.42])
            .unwrap();
        let hx = entropy(&ind, &["X"]).unwrap().value();
        let hxg = conditional_entropy(&ind, &["X"], &["G"]).unwrap().value();
        assert!((hx - hxg).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let ind = JointPmf::dense(vec![var("X", 2), var("Y", 2)], vec![0.12, 0.28, 0.18, 0.42])
            .unwrap();
        assert!(mutual_information(&ind, &["X"], &["Y"]).unwrap().value() < 1e-12);
        let c = copy(256);
        let i = mutual_information(&c, &["X"], &["Y"]).unwrap().value();
        assert!((i - 8.0).abs() < 1e-12);
        assert!(mutual_information(&c, &["X"], &["X"]).is_err());
    }

    #[test]
    fn cmi_degenerate_cases() {
        let pmf = JointPmf::dense(
            vec![var("A", 2), var("B", 2), var("G", 2)],
            vec![0.125; 8],
        )
        .unwrap();
        let v = conditional_mutual_information(&pmf, &["A"], &["B"], &["G"]).unwrap();
        assert!(v.value() < 1e-12);

        // G is the pair (A, B).
        let base = JointPmf::random(&[3, 3], 1.0, 3).unwrap();
        let g = base.adjoin_sum("v0", "v1", "S").unwrap();
        let pair_code = DeterministicMap::identity(g.alphabet("v0").unwrap().clone());
        let g = g.adjoin_map("v0", &pair_code, "A").unwrap();
        let v = conditional_mutual_information(&g, &["v0"], &["v1"], &["A", "S"]).unwrap();
        assert!(v.value() < 1e-12);
        assert!(conditional_mutual_information(&g, &["v0"], &["v1"], &["v0"]).is_err());
    }

    #[test]
    fn cmi_matches_brute_force_triple_sum() {
        let pmf = JointPmf::random(&[4, 4, 4], 1.0, 1234).unwrap();
        let p = |a: i64, b: i64, g: i64| {
            pmf.prob(&[
                ("v0", Symbol::from_integer(a)),
                ("v1", Symbol::from_integer(b)),
                ("v2", Symbol::from_integer(g)),
            ])
            .unwrap()
        };
        let mut oracle = 0.0;
        for g in 0..4 {
            let pg: f64 = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| p(a, b, g)).sum();
            for a in 0..4 {
                let pag: f64 = (0..4).map(|b| p(a, b, g)).sum();
                for b in 0..4 {
                    let pbg: f64 = (0..4).map(|a| p(a, b, g)).sum();
                    let pabg = p(a, b, g);
                    oracle += pabg * ((pabg / pg) / ((pag / pg) * (pbg / pg))).log2();
                }
            }
        }
        let v = conditional_mutual_information(&pmf, &["v0"], &["v1"], &["v2"])
            .unwrap()
            .value();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn bits_clamping() {
        assert_eq!(Bits::checked("x", -5e-13).unwrap().value(), 0.0);
        assert!(matches!(
            Bits::checked("x", -1e-6),
            Err(Error::NegativeMeasure { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn chain_rule_and_nonnegativity(
                sizes in prop::collection::vec(1usize..6, 3),
                seed in any::<u64>(),
            ) {
                let pmf = JointPmf::random(&sizes, 1.0, seed).unwrap();
                let hab = entropy(&pmf, &["v0", "v1"]).unwrap().value();
                let ha = entropy(&pmf, &["v0"]).unwrap().value();
                let hba = conditional_entropy(&pmf, &["v1"], &["v0"]).unwrap().value();
                prop_assert!((hab - ha - hba).abs() < 1e-9);
                let i = mutual_information(&pmf, &["v0"], &["v1"]).unwrap().value();
                let j = mutual_information(&pmf, &["v1"], &["v0"]).unwrap().value();
                prop_assert!(i >= 0.0 && (i - j).abs() < 1e-12);
                prop_assert!(conditional_mutual_information(&pmf, &["v0"], &["v1"], &["v2"]).is_ok());
                let bound: f64 = sizes.iter().map(|&n| (n as f64).log2()).sum();
                prop_assert!(entropy(&pmf, &["v0", "v1", "v2"]).unwrap().value() <= bound + 1e-9);
            }

            #[test]
            fn processing_loses_information(
                n in 2usize..7,
                seed in any::<u64>(),
                images in prop::collection::vec(0usize..4, 7),
            ) {
                let pmf = JointPmf::random(&[n, n], 1.0, seed).unwrap();
                let domain = pmf.alphabet("v1").unwrap().clone();
                let codomain = Alphabet::integers("f", 0, 3).unwrap();
                let map = DeterministicMap::from_indices(domain, codomain, images[..n].to_vec()).unwrap();
                let pmf = pmf.adjoin_map("v1", &map, "f").unwrap();
                let full = mutual_information(&pmf, &["v0"], &["v1"]).unwrap().value();
                let processed = mutual_information(&pmf, &["v0"], &["f"]).unwrap().value();
                prop_assert!(processed <= full + 1e-9);
                let h_full = conditional_entropy(&pmf, &["v0"], &["v1"]).unwrap().value();
                let h_proc = conditional_entropy(&pmf, &["v0"], &["f"]).unwrap().value();
                prop_assert!(h_proc >= h_full - 1e-9);
                prop_assert!(conditional_entropy(&pmf, &["f"], &["v1"]).unwrap().value() < 1e-12);
            }
        }
    }
}
