//! Finite words over `{1, …, N}`, matrix products along words, and
//! (step-n) Bernoulli measures on the code space.
//!
//! Symbols are stored zero based: symbol `i` of the alphabet is `i - 1`
//! internally. [`Word`]'s `Display` prints the usual one-based form.

use std::fmt;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::numeric::neumaier_sum;

/// Largest `N^n` [`enumerate_words`] will agree to walk.
pub const ENUMERATION_LIMIT: u128 = 1 << 31;

/// A finite word; `Word::default()` is the empty word.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    /// A word from zero-based symbols.
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// A word from one-based symbols as written in the literature.
    pub fn from_one_based(symbols: &[usize]) -> Result<Self> {
        symbols
            .iter()
            .map(|&s| {
                s.checked_sub(1)
                    .ok_or_else(|| invalid("one-based symbols start at 1"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// `prefix · cycle · cycle · …` truncated to `len` symbols.
    pub fn periodic(prefix: &Word, cycle: &Word, len: usize) -> Self {
        let mut out: Vec<usize> = prefix.0.iter().copied().take(len).collect();
        if !cycle.is_empty() {
            out.extend(cycle.0.iter().copied().cycle().take(len - out.len()));
        }
        Word(out)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The first `n` symbols (the whole word if it is shorter).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// Longest common beginning `self ∧ other`.
    pub fn common_prefix(&self, other: &Word) -> Word {
        let n = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        self.prefix(n)
    }

    /// Fails unless every symbol is below `n_branches`.
    pub fn check_alphabet(&self, n_branches: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= n_branches) {
            Some(s) => Err(invalid(format!(
                "symbol {} outside alphabet 1..={n_branches}",
                s + 1
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        Ok(())
    }
}

/// `N^n`, or `None` on overflow.
pub fn word_count(n_branches: usize, len: usize) -> Option<u128> {
    (n_branches as u128).checked_pow(u32::try_from(len).ok()?)
}

pub(crate) fn check_budget(what: &str, n_branches: usize, len: usize, limit: u128) -> Result<u128> {
    match word_count(n_branches, len) {
        Some(c) if c <= limit => Ok(c),
        c => Err(Error::Budget {
            what: format!("{what} ({n_branches}^{len} words)"),
            required: c.unwrap_or(u128::MAX),
            limit,
        }),
    }
}

/// All `N^n` words of length `n` in lexicographic order.
pub fn enumerate_words(n_branches: usize, len: usize) -> Result<WordIter> {
    if n_branches < 2 {
        return Err(invalid(format!("need at least 2 branches, got {n_branches}")));
    }
    check_budget("word enumeration", n_branches, len, ENUMERATION_LIMIT)?;
    Ok(WordIter {
        n_branches,
        next: Some(vec![0; len]),
    })
}

/// Lexicographic odometer over `Σ_n`.
#[derive(Debug, Clone)]
pub struct WordIter {
    n_branches: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.n_branches {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(Word(current))
    }
}

/// `A_{i_1} ⋯ A_{i_n}`; the identity for the empty word.
pub fn word_product(matrices: &[Matrix], w: &Word) -> Result<Matrix> {
    let first = matrices
        .first()
        .ok_or_else(|| invalid("no matrices given"))?;
    w.check_alphabet(matrices.len())?;
    let d = first.nrows();
    Ok(w
        .symbols()
        .iter()
        .fold(Matrix::identity(d, d), |acc, &s| acc * &matrices[s]))
}

/// A Bernoulli measure on `(Σ_n)^ℕ`: i.i.d. blocks of length `n` drawn from
/// a finite weight table. `n = 1` with full support is the ordinary
/// Bernoulli measure `ν_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMeasure {
    block_len: usize,
    support: Vec<Word>,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl StepMeasure {
    /// Builds a step measure; zero-weight words are dropped and the support is
    /// sorted lexicographically.
    pub fn new(block_len: usize, support: Vec<Word>, weights: Vec<f64>) -> Result<Self> {
        if block_len == 0 {
            return Err(invalid("block length must be at least 1"));
        }
        if support.len() != weights.len() {
            return Err(invalid("support and weights differ in length"));
        }
        let mut pairs = Vec::with_capacity(support.len());
        for (w, p) in support.into_iter().zip(weights) {
            if !p.is_finite() || p < 0.0 {
                return Err(invalid(format!("weight {p} of word {w} is not a probability")));
            }
            if w.len() != block_len {
                return Err(invalid(format!(
                    "support word {w} has length {}, expected {block_len}",
                    w.len()
                )));
            }
            if p > 0.0 {
                pairs.push((w, p));
            }
        }
        if pairs.is_empty() {
            return Err(invalid("measure has empty support"));
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(invalid("support contains a repeated word"));
        }
        let total = neumaier_sum(pairs.iter().map(|p| p.1));
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        let (support, weights): (Vec<Word>, Vec<f64>) = pairs.into_iter().unzip();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            block_len,
            support,
            weights,
            cdf,
        })
    }

    /// The Bernoulli measure `ν_p` on `Σ`.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        let support = (0..p.len()).map(|i| Word(vec![i])).collect();
        Self::new(1, support, p.to_vec())
    }

    /// Uniform weights on all of `Σ_n`.
    pub fn uniform(n_branches: usize, block_len: usize) -> Result<Self> {
        let words: Vec<Word> = enumerate_words(n_branches, block_len)?.collect();
        let w = 1.0 / words.len() as f64;
        let weights = vec![w; words.len()];
        Self::new(block_len, words, weights)
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn support(&self) -> &[Word] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Entropy in nats per original symbol, `-(1/n) Σ w log w`.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().map(|&w| w * w.ln()).sum::<f64>() / self.block_len as f64
    }

    /// Mass of the cylinder `[w]` for words made of whole blocks.
    pub fn cylinder_mass(&self, w: &Word) -> Option<f64> {
        if w.len() % self.block_len != 0 {
            return None;
        }
        Some(
            w.symbols()
                .chunks(self.block_len)
                .map(|block| {
                    self.support
                        .binary_search_by(|s| s.symbols().cmp(block))
                        .map_or(0.0, |i| self.weights[i])
                })
                .product(),
        )
    }

    /// Index into the support of one block drawn by inverse CDF.
    pub fn sample_block_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.support.len() - 1)
    }

    /// `blocks` i.i.d. blocks concatenated into one word of length
    /// `n · blocks`.
    pub fn sample_word<R: Rng + ?Sized>(&self, blocks: usize, rng: &mut R) -> Word {
        let mut out = Vec::with_capacity(blocks * self.block_len);
        for _ in 0..blocks {
            let i = self.sample_block_index(rng);
            out.extend_from_slice(self.support[i].symbols());
        }
        Word(out)
    }

    /// Largest symbol used plus one.
    pub fn alphabet_size(&self) -> usize {
        self.support
            .iter()
            .flat_map(|w| w.symbols().iter().copied())
            .max()
            .map_or(0, |m| m + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn enumeration_counts_and_order() {
        let e: Vec<Word> = enumerate_words(2, 0).unwrap().collect();
        assert_eq!(e, vec![Word::empty()]);
        let e: Vec<Word> = enumerate_words(2, 3).unwrap().collect();
        assert_eq!(e.len(), 8);
        assert_eq!(e[0], Word::from_one_based(&[1, 1, 1]).unwrap());
        assert_eq!(e[7], Word::from_one_based(&[2, 2, 2]).unwrap());
        assert!(e.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(enumerate_words(3, 4).unwrap().count(), 81);
    }

    #[test]
    fn enumeration_budget() {
        assert!(matches!(enumerate_words(2, 32), Err(Error::Budget { .. })));
        assert!(enumerate_words(2, 31).is_ok());
        assert!(enumerate_words(1, 3).is_err());
    }

    #[test]
    fn word_operations() {
        let a = Word::from_one_based(&[1, 2, 3]).unwrap();
        let b = Word::from_one_based(&[1, 2, 1, 1]).unwrap();
        assert_eq!(a.common_prefix(&b), Word::from_one_based(&[1, 2]).unwrap());
        assert_eq!(a.concat(&b).len(), 7);
        assert_eq!(a.to_string(), "1,2,3");
        assert_eq!(Word::empty().to_string(), "ε");
        let p = Word::periodic(&Word::new(vec![2]), &Word::new(vec![0, 1]), 6);
        assert_eq!(p.symbols(), &[2, 0, 1, 0, 1, 0]);
        assert!(a.check_alphabet(3).is_ok());
        assert!(a.check_alphabet(2).is_err());
        assert!(Word::from_one_based(&[0]).is_err());
    }

    #[test]
    fn products() {
        let a1 = Matrix::from_diagonal(&crate::Vector::from_vec(vec![2.0, 3.0]));
        let a2 = Matrix::from_diagonal(&crate::Vector::from_vec(vec![5.0, 7.0]));
        let ms = vec![a1, a2];
        assert_eq!(word_product(&ms, &Word::empty()).unwrap(), Matrix::identity(2, 2));
        let p = word_product(&ms, &Word::new(vec![0, 1])).unwrap();
        assert_eq!(p, Matrix::from_diagonal(&crate::Vector::from_vec(vec![10.0, 21.0])));
        assert!(word_product(&ms, &Word::new(vec![2])).is_err());
    }

    #[test]
    fn product_is_associative() {
        let mut rng = stream(5, 0);
        let ms: Vec<Matrix> = (0..3)
            .map(|_| Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        for _ in 0..50 {
            let w1 = Word::new((0..rng.random_range(0..6)).map(|_| rng.random_range(0..3)).collect());
            let w2 = Word::new((0..rng.random_range(0..6)).map(|_| rng.random_range(0..3)).collect());
            let whole = word_product(&ms, &w1.concat(&w2)).unwrap();
            let split = word_product(&ms, &w1).unwrap() * word_product(&ms, &w2).unwrap();
            assert!((&whole - &split).amax() <= 1e-12 * whole.amax().max(1.0));
        }
    }

    #[test]
    fn entropy_examples() {
        let m = StepMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert!((m.entropy() - 2f64.ln()).abs() < 1e-15);
        let m = StepMeasure::uniform(2, 2).unwrap();
        assert_eq!(m.support().len(), 4);
        assert!((m.entropy() - 2f64.ln()).abs() < 1e-15);
        let m = StepMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        assert!((m.entropy() - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn entropy_is_maximal_at_uniform() {
        let uniform = StepMeasure::uniform(3, 1).unwrap().entropy();
        assert!((uniform - 3f64.ln()).abs() < 1e-15);
        for eps in [1e-3, 1e-2, 0.1] {
            let m = StepMeasure::bernoulli(&[1.0 / 3.0 + eps, 1.0 / 3.0 - eps, 1.0 / 3.0]).unwrap();
            assert!(m.entropy() < uniform);
        }
    }

    #[test]
    fn measure_validation() {
        assert!(StepMeasure::bernoulli(&[0.5, 0.6]).is_err());
        assert!(StepMeasure::bernoulli(&[-0.5, 1.5]).is_err());
        let m = StepMeasure::bernoulli(&[1.0, 0.0]).unwrap();
        assert_eq!(m.support().len(), 1);
        assert!(StepMeasure::new(2, vec![Word::new(vec![0])], vec![1.0]).is_err());
        assert!(StepMeasure::new(
            1,
            vec![Word::new(vec![0]), Word::new(vec![0])],
            vec![0.5, 0.5]
        )
        .is_err());
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let w = Word::new(vec![1, 0, 1]);
        let m = StepMeasure::new(3, vec![w.clone()], vec![1.0]).unwrap();
        let s = m.sample_word(4, &mut stream(1, 0));
        assert_eq!(s, Word::periodic(&Word::empty(), &w, 12));

        let m = StepMeasure::bernoulli(&[0.3, 0.7]).unwrap();
        assert_eq!(
            m.sample_word(100, &mut stream(9, 0)),
            m.sample_word(100, &mut stream(9, 0))
        );
    }

    #[test]
    fn sampling_frequency() {
        let m = StepMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let n = 100_000;
        let w = m.sample_word(n, &mut stream(2024, 0));
        let ones = w.symbols().iter().filter(|&&s| s == 0).count() as f64 / n as f64;
        let sigma = 0.5 / (n as f64).sqrt();
        assert!((ones - 0.5).abs() <= 3.0 * sigma, "frequency {ones}");
    }

    proptest! {
        #[test]
        fn bernoulli_cylinders_multiply(
            p0 in 0.05f64..0.95,
            a in proptest::collection::vec(0usize..2, 0..8),
            b in proptest::collection::vec(0usize..2, 0..8),
        ) {
            let m = StepMeasure::bernoulli(&[p0, 1.0 - p0]).unwrap();
            let (wa, wb) = (Word::new(a), Word::new(b));
            let joint = m.cylinder_mass(&wa.concat(&wb)).unwrap();
            let split = m.cylinder_mass(&wa).unwrap() * m.cylinder_mass(&wb).unwrap();
            prop_assert!((joint - split).abs() <= 1e-14);
        }
    }
}
