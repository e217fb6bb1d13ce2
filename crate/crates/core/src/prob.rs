//! Finite joint distributions.
//!
//! A [`JointPmf`] is stored as a list of atoms. Each atom carries a probability
//! and one symbol index per variable. Distributions built with
//! [`JointPmf::dense`] have one atom per cell of the full product of the
//! alphabets. Variables added later with [`JointPmf::adjoin_map`] or
//! [`JointPmf::adjoin_difference`] are deterministic functions of existing
//! ones, so they only add a column of indices and never multiply the table
//! size.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;

use crate::error::{Error, Result};

/// Exact symbol value. Integers and quantizer outputs such as `k * 7/5` are
/// both represented without rounding.
pub type Symbol = Rational64;

/// Tolerance for "sums to one" checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Mixed-radix products above this size are grouped by sorting instead of a
/// dense accumulator.
const DENSE_GROUP_LIMIT: u64 = 1 << 22;

/// Ordered, duplicate-free list of symbol values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    name: String,
    symbols: Vec<Symbol>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<Symbol>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet {
                name,
                reason: "alphabet must contain at least one symbol".into(),
            });
        }
        if let Some(w) = symbols.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidAlphabet {
                name,
                reason: format!("symbols must be strictly ascending ({} before {})", w[0], w[1]),
            });
        }
        Ok(Alphabet { name, symbols })
    }

    /// Consecutive integers `lo..=hi`.
    pub fn integers(name: impl Into<String>, lo: i64, hi: i64) -> Result<Self> {
        Self::new(name, (lo..=hi).map(Symbol::from_integer).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: usize) -> &Symbol {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &Symbol) -> Option<usize> {
        self.symbols.binary_search(symbol).ok()
    }

    /// Symbol value as a float, for distortion measures.
    pub fn value(&self, index: usize) -> f64 {
        to_f64(&self.symbols[index])
    }
}

pub(crate) fn to_f64(s: &Symbol) -> f64 {
    *s.numer() as f64 / *s.denom() as f64
}

/// Total function between two alphabets, stored as one codomain index per
/// domain symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicMap {
    domain: Alphabet,
    codomain: Alphabet,
    table: Vec<usize>,
}

impl DeterministicMap {
    pub fn from_indices(domain: Alphabet, codomain: Alphabet, table: Vec<usize>) -> Result<Self> {
        if table.len() != domain.len() {
            return Err(Error::AlphabetMismatch(format!(
                "map table has {} entries for a domain of {} symbols",
                table.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&t| t >= codomain.len()) {
            return Err(Error::AlphabetMismatch(format!(
                "image index {bad} outside codomain `{}` of size {}",
                codomain.name(),
                codomain.len()
            )));
        }
        Ok(DeterministicMap {
            domain,
            codomain,
            table,
        })
    }

    /// Builds the map from a symbol function. Every image must be listed in
    /// `codomain`.
    pub fn from_fn(
        domain: Alphabet,
        codomain: Alphabet,
        f: impl Fn(&Symbol) -> Symbol,
    ) -> Result<Self> {
        let table = domain
            .symbols()
            .iter()
            .map(|s| {
                let image = f(s);
                codomain
                    .index_of(&image)
                    .ok_or_else(|| Error::UnknownSymbol(format!("{image} (image of {s})")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(domain, codomain, table)
    }

    /// Builds the map and its codomain at once: the codomain is the set of
    /// images.
    pub fn with_image_codomain(
        domain: Alphabet,
        codomain_name: impl Into<String>,
        f: impl Fn(&Symbol) -> Symbol,
    ) -> Result<Self> {
        let images: Vec<Symbol> = domain.symbols().iter().map(&f).collect();
        let set: BTreeSet<Symbol> = images.iter().copied().collect();
        let codomain = Alphabet::new(codomain_name, set.into_iter().collect())?;
        let table = images
            .iter()
            .map(|s| codomain.index_of(s).expect("image collected above"))
            .collect();
        Self::from_indices(domain, codomain, table)
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let table = (0..alphabet.len()).collect();
        DeterministicMap {
            codomain: alphabet.clone(),
            domain: alphabet,
            table,
        }
    }

    pub fn constant(domain: Alphabet, value: Symbol) -> Result<Self> {
        let codomain = Alphabet::new("const", vec![value])?;
        let table = vec![0; domain.len()];
        Self::from_indices(domain, codomain, table)
    }

    pub fn domain(&self) -> &Alphabet {
        &self.domain
    }

    pub fn codomain(&self) -> &Alphabet {
        &self.codomain
    }

    /// Codomain index of the image of domain index `i`.
    pub fn image_index(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn apply(&self, s: &Symbol) -> Option<Symbol> {
        self.domain
            .index_of(s)
            .map(|i| *self.codomain.symbol(self.table[i]))
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Variable {
    name: String,
    alphabet: Alphabet,
}

/// Joint probability distribution over named finite variables.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    vars: Vec<Variable>,
    probs: Vec<f64>,
    // codes[v][atom] is the symbol index of variable v at that atom.
    codes: Vec<Vec<u32>>,
}

impl JointPmf {
    /// Dense table in row-major order (the last variable varies fastest).
    /// The table must sum to one within [`NORMALIZATION_TOL`].
    pub fn dense(vars: Vec<(String, Alphabet)>, table: Vec<f64>) -> Result<Self> {
        let total = checked_total(&table)?;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "table sums to {total:.17}, not 1"
            )));
        }
        Self::build_dense(vars, table)
    }

    /// Dense table from nonnegative weights, normalized to sum to one.
    pub fn from_weights(vars: Vec<(String, Alphabet)>, mut weights: Vec<f64>) -> Result<Self> {
        let total = checked_total(&weights)?;
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::build_dense(vars, weights)
    }

    fn build_dense(vars: Vec<(String, Alphabet)>, table: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut seen = BTreeSet::new();
        for (name, _) in &vars {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }
        let sizes: Vec<usize> = vars.iter().map(|(_, a)| a.len()).collect();
        let cells: usize = sizes.iter().product();
        if cells != table.len() {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, alphabets need {cells}",
                table.len()
            )));
        }
        if cells > u32::MAX as usize {
            return Err(Error::InvalidParameter("table too large".into()));
        }
        let mut codes = Vec::with_capacity(vars.len());
        let mut inner = cells;
        for &size in &sizes {
            inner /= size;
            codes.push(
                (0..cells)
                    .map(|atom| ((atom / inner) % size) as u32)
                    .collect(),
            );
        }
        Ok(JointPmf {
            vars: vars
                .into_iter()
                .map(|(name, alphabet)| Variable { name, alphabet })
                .collect(),
            probs: table,
            codes,
        })
    }

    /// Random distribution over `shape` with Dirichlet(`concentration`)
    /// weights. Variables are named `v0`, `v1`, ... with alphabets `0..n`.
    pub fn random(shape: &[usize], concentration: f64, seed: u64) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "every alphabet size must be at least 1, got {shape:?}"
            )));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concentration must be positive, got {concentration}"
            )));
        }
        let vars = shape
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let name = format!("v{i}");
                Alphabet::integers(name.clone(), 0, n as i64 - 1).map(|a| (name, a))
            })
            .collect::<Result<Vec<_>>>()?;
        let cells: usize = shape.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = dirichlet_weights(&mut rng, cells, concentration)?;
        Self::from_weights(vars, weights)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn alphabet(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.vars[self.var_index(name)?].alphabet)
    }

    /// Number of stored atoms (including zero-probability cells).
    pub fn num_atoms(&self) -> usize {
        self.probs.len()
    }

    pub fn atom_probs(&self) -> &[f64] {
        &self.probs
    }

    /// Symbol indices of `name` at every atom.
    pub fn atom_codes(&self, name: &str) -> Result<&[u32]> {
        Ok(&self.codes[self.var_index(name)?])
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.probs.iter().copied())
    }

    pub(crate) fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub(crate) fn var_indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut seen = BTreeSet::new();
        names
            .iter()
            .map(|n| {
                if !seen.insert(*n) {
                    return Err(Error::DuplicateVariable(n.to_string()));
                }
                self.var_index(n)
            })
            .collect()
    }

    /// Probability of the event that each listed variable takes the given
    /// symbol.
    pub fn prob(&self, assignment: &[(&str, Symbol)]) -> Result<f64> {
        let mut wanted = Vec::with_capacity(assignment.len());
        for (name, symbol) in assignment {
            let v = self.var_index(name)?;
            match self.vars[v].alphabet.index_of(symbol) {
                Some(i) => wanted.push((v, i as u32)),
                None => return Ok(0.0),
            }
        }
        Ok(neumaier_sum((0..self.probs.len()).filter_map(|a| {
            wanted
                .iter()
                .all(|&(v, i)| self.codes[v][a] == i)
                .then_some(self.probs[a])
        })))
    }

    /// Group atoms by the joint value of `vars`. Returns one key (mixed-radix
    /// index over the selected alphabets, ascending) and one mass per group
    /// that actually occurs.
    pub(crate) fn grouped(&self, vars: &[usize]) -> Vec<(u64, f64)> {
        let mut radix = Vec::with_capacity(vars.len());
        let mut product: u64 = 1;
        for &v in vars.iter().rev() {
            radix.push(product);
            product = product
                .checked_mul(self.vars[v].alphabet.len() as u64)
                .expect("alphabet product overflows u64");
        }
        radix.reverse();
        let key = |atom: usize| -> u64 {
            vars.iter()
                .zip(&radix)
                .map(|(&v, &r)| self.codes[v][atom] as u64 * r)
                .sum()
        };

        if product <= DENSE_GROUP_LIMIT {
            let n = product as usize;
            let mut sum = vec![0.0f64; n];
            let mut comp = vec![0.0f64; n];
            let mut hit = vec![false; n];
            for (atom, &p) in self.probs.iter().enumerate() {
                let k = key(atom) as usize;
                neumaier_add(&mut sum[k], &mut comp[k], p);
                hit[k] = true;
            }
            (0..n)
                .filter(|&k| hit[k])
                .map(|k| (k as u64, sum[k] + comp[k]))
                .collect()
        } else {
            let mut keyed: Vec<(u64, f64)> = self
                .probs
                .iter()
                .enumerate()
                .map(|(atom, &p)| (key(atom), p))
                .collect();
            keyed.sort_by_key(|&(k, _)| k);
            let mut out: Vec<(u64, f64)> = Vec::new();
            let mut comp = 0.0;
            for (k, p) in keyed {
                match out.last_mut() {
                    Some((last, s)) if *last == k => neumaier_add(s, &mut comp, p),
                    _ => {
                        if let Some((_, s)) = out.last_mut() {
                            *s += comp;
                        }
                        comp = 0.0;
                        out.push((k, p));
                    }
                }
            }
            if let Some((_, s)) = out.last_mut() {
                *s += comp;
            }
            out
        }
    }

    /// Marginal over `keep`, in the order given.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::EmptySelection);
        }
        let idx = self.var_indices(keep)?;
        let groups = self.grouped(&idx);
        let sizes: Vec<u64> = idx
            .iter()
            .map(|&v| self.vars[v].alphabet.len() as u64)
            .collect();
        let mut codes = vec![Vec::with_capacity(groups.len()); idx.len()];
        let mut probs = Vec::with_capacity(groups.len());
        for (key, mass) in groups {
            let mut rest = key;
            for (slot, &size) in sizes.iter().enumerate().rev() {
                codes[slot].push((rest % size) as u32);
                rest /= size;
            }
            probs.push(mass);
        }
        Ok(JointPmf {
            vars: idx.iter().map(|&v| self.vars[v].clone()).collect(),
            probs,
            codes,
        })
    }

    /// Distribution of the remaining variables given `var = value`.
    pub fn condition(&self, var: &str, value: &Symbol) -> Result<JointPmf> {
        let v = self.var_index(var)?;
        let zero = || Error::ZeroProbability {
            var: var.to_string(),
            value: value.to_string(),
        };
        let code = self.vars[v].alphabet.index_of(value).ok_or_else(zero)? as u32;
        if self.vars.len() == 1 {
            return Err(Error::InvalidParameter(
                "cannot condition away the only variable".into(),
            ));
        }
        let atoms: Vec<usize> = (0..self.probs.len())
            .filter(|&a| self.codes[v][a] == code)
            .collect();
        let mass = neumaier_sum(atoms.iter().map(|&a| self.probs[a]));
        if mass <= 0.0 {
            return Err(zero());
        }
        let vars = self
            .vars
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != v)
            .map(|(_, var)| var.clone())
            .collect();
        let codes = self
            .codes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != v)
            .map(|(_, col)| atoms.iter().map(|&a| col[a]).collect())
            .collect();
        Ok(JointPmf {
            vars,
            probs: atoms.iter().map(|&a| self.probs[a] / mass).collect(),
            codes,
        })
    }

    fn ensure_fresh(&self, name: &str) -> Result<()> {
        if self.has_var(name) {
            Err(Error::DuplicateVariable(name.to_string()))
        } else {
            Ok(())
        }
    }

    fn with_column(&self, name: &str, alphabet: Alphabet, column: Vec<u32>) -> JointPmf {
        let mut out = self.clone();
        out.vars.push(Variable {
            name: name.to_string(),
            alphabet,
        });
        out.codes.push(column);
        out
    }

    /// Adds `new_var = map(source_var)`.
    pub fn adjoin_map(
        &self,
        source_var: &str,
        map: &DeterministicMap,
        new_var: &str,
    ) -> Result<JointPmf> {
        let v = self.var_index(source_var)?;
        self.ensure_fresh(new_var)?;
        if map.domain().symbols() != self.vars[v].alphabet.symbols() {
            return Err(Error::AlphabetMismatch(format!(
                "map domain `{}` differs from the alphabet of `{source_var}`",
                map.domain().name()
            )));
        }
        let column = self.codes[v]
            .iter()
            .map(|&c| map.image_index(c as usize) as u32)
            .collect();
        Ok(self.with_column(new_var, map.codomain().clone(), column))
    }

    /// Adds `new_var = op(a, b)`. The new alphabet is the image of every
    /// pair of alphabet symbols.
    pub fn adjoin_binary(
        &self,
        a: &str,
        b: &str,
        new_var: &str,
        op: impl Fn(&Symbol, &Symbol) -> Symbol,
    ) -> Result<JointPmf> {
        let va = self.var_index(a)?;
        let vb = self.var_index(b)?;
        self.ensure_fresh(new_var)?;
        let (alpha, beta) = (&self.vars[va].alphabet, &self.vars[vb].alphabet);
        let pair_values: Vec<Symbol> = alpha
            .symbols()
            .iter()
            .flat_map(|x| beta.symbols().iter().map(|y| op(x, y)).collect::<Vec<_>>())
            .collect();
        let mut support = pair_values.clone();
        support.sort();
        support.dedup();
        let alphabet = Alphabet::new(new_var, support)?;
        let pair_index: Vec<u32> = pair_values
            .iter()
            .map(|s| alphabet.index_of(s).expect("collected above") as u32)
            .collect();
        let width = beta.len();
        let column = self.codes[va]
            .iter()
            .zip(&self.codes[vb])
            .map(|(&i, &j)| pair_index[i as usize * width + j as usize])
            .collect();
        Ok(self.with_column(new_var, alphabet, column))
    }

    /// Adds `new_var = minuend - subtrahend`. The new alphabet holds every
    /// difference of alphabet symbols, so integer alphabets `0..M` give
    /// `-(M-1)..=M-1`.
    pub fn adjoin_difference(
        &self,
        minuend: &str,
        subtrahend: &str,
        new_var: &str,
    ) -> Result<JointPmf> {
        self.adjoin_binary(minuend, subtrahend, new_var, |x, y| x - y)
    }

    /// Adds `new_var = a + b`.
    pub fn adjoin_sum(&self, a: &str, b: &str, new_var: &str) -> Result<JointPmf> {
        self.adjoin_binary(a, b, new_var, |x, y| x + y)
    }

    /// Renames a variable.
    pub fn rename(&self, old: &str, new: &str) -> Result<JointPmf> {
        let v = self.var_index(old)?;
        if old != new {
            self.ensure_fresh(new)?;
        }
        let mut out = self.clone();
        out.vars[v].name = new.to_string();
        Ok(out)
    }

    /// Draws `n` atoms and returns their symbol indices, one tuple per draw
    /// in variable order.
    pub fn sample_indices(&self, n: usize, seed: u64) -> Vec<Vec<usize>> {
        if n == 0 {
            return Vec::new();
        }
        let dist = WeightedIndex::new(&self.probs).expect("valid distribution has positive mass");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let atom = dist.sample(&mut rng);
                self.codes.iter().map(|col| col[atom] as usize).collect()
            })
            .collect()
    }

    /// Draws `n` symbol tuples. Reproducible for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<Symbol>> {
        self.sample_indices(n, seed)
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .zip(&self.vars)
                    .map(|(i, v)| *v.alphabet.symbol(i))
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for JointPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.names().collect();
        write!(f, "JointPmf({}; {} atoms)", names.join(", "), self.num_atoms())
    }
}

/// Unnormalized Dirichlet(`concentration`) weights. With
/// `concentration >= 1` every weight is strictly positive.
pub(crate) fn dirichlet_weights(
    rng: &mut impl rand::Rng,
    n: usize,
    concentration: f64,
) -> Result<Vec<f64>> {
    let gamma =
        Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            // Shape >= 1 draws underflow only with negligible probability;
            // keep the support full when they do.
            if concentration >= 1.0 {
                g.max(f64::MIN_POSITIVE)
            } else {
                g
            }
        })
        .collect())
}

fn checked_total(table: &[f64]) -> Result<f64> {
    if let Some(bad) = table.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidDistribution(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    Ok(neumaier_sum(table.iter().copied()))
}

#[inline]
pub(crate) fn neumaier_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0, 0.0);
    for x in values {
        neumaier_add(&mut sum, &mut comp, x);
    }
    sum + comp
}
