//! Classical reconciliation and privacy amplification with a CSS code pair.
//!
//! Alice's raw key string `u` is masked with a random codeword `v ∈ C₁` and
//! `u ⊕ v` is announced. Bob, holding `u ⊕ e`, decodes `v ⊕ e` to the nearest
//! `C₁` codeword. Both keep the coset `v + C₂` as the key: `k₁ − k₂` bits per
//! block.
//!
//! Words are bit strings of length `n ≤ 64` given as `&[u8]` of 0/1 values.
//! Nearest-codeword decoding is exhaustive and limited to `n ≤ 24`.

mod gf2;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::{QkdError, Result};
use gf2::TaggedBasis;

pub const MAX_CODE_LEN: usize = 64;
pub const MAX_DECODE_LEN: usize = 24;

pub fn pack(bits: &[u8]) -> Result<u64> {
    if bits.len() > MAX_CODE_LEN {
        return Err(QkdError::LengthMismatch {
            expected: MAX_CODE_LEN,
            actual: bits.len(),
        });
    }
    bits.iter().enumerate().try_fold(0u64, |acc, (i, &b)| match b {
        0 => Ok(acc),
        1 => Ok(acc | 1 << i),
        other => Err(QkdError::InvalidBit(other)),
    })
}

pub fn unpack(word: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| (word >> i & 1) as u8).collect()
}

pub fn xor_bits(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(QkdError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// Binary linear `[n, k]` code with generator and parity-check matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr", into = "CodeRepr")]
pub struct BinaryCode {
    n: usize,
    k: usize,
    generator: Vec<u64>,
    parity_check: Vec<u64>,
    leaders: OnceLock<Vec<u64>>,
}

/// Row-major bit-array form used on the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodeRepr {
    n: usize,
    k: usize,
    generator: Vec<Vec<u8>>,
    parity_check: Vec<Vec<u8>>,
}

impl From<BinaryCode> for CodeRepr {
    fn from(c: BinaryCode) -> Self {
        CodeRepr {
            n: c.n,
            k: c.k,
            generator: c.generator_rows(),
            parity_check: c.parity_check_rows(),
        }
    }
}

impl TryFrom<CodeRepr> for BinaryCode {
    type Error = QkdError;

    fn try_from(r: CodeRepr) -> Result<Self> {
        let generator = pack_rows(&r.generator, r.n)?;
        let parity_check = pack_rows(&r.parity_check, r.n)?;
        let code = BinaryCode::from_matrices(r.n, generator, parity_check)?;
        if code.k != r.k {
            return Err(QkdError::InvalidCode(format!(
                "declared k = {} but generator has rank {}",
                r.k, code.k
            )));
        }
        Ok(code)
    }
}

fn pack_rows(rows: &[Vec<u8>], n: usize) -> Result<Vec<u64>> {
    rows.iter()
        .map(|row| {
            if row.len() != n {
                return Err(QkdError::LengthMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            pack(row)
        })
        .collect()
}

impl PartialEq for BinaryCode {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.generator == other.generator && self.parity_check == other.parity_check
    }
}

fn check_len(n: usize) -> Result<()> {
    if (1..=MAX_CODE_LEN).contains(&n) {
        Ok(())
    } else {
        Err(QkdError::InvalidCode(format!("length {n} outside 1..={MAX_CODE_LEN}")))
    }
}

impl BinaryCode {
    /// Code spanned by `rows` (which must be independent).
    pub fn from_generator(n: usize, rows: Vec<u64>) -> Result<Self> {
        check_len(n)?;
        let parity_check = gf2::null_space(&rows, n);
        Self::from_matrices(n, rows, parity_check)
    }

    /// Code annihilated by `rows` (which must be independent).
    pub fn from_parity_check(n: usize, rows: Vec<u64>) -> Result<Self> {
        check_len(n)?;
        let generator = gf2::null_space(&rows, n);
        Self::from_matrices(n, generator, rows)
    }

    fn from_matrices(n: usize, generator: Vec<u64>, parity_check: Vec<u64>) -> Result<Self> {
        check_len(n)?;
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if generator.iter().chain(&parity_check).any(|&r| r & !mask != 0) {
            return Err(QkdError::InvalidCode("row wider than code length".into()));
        }
        let k = generator.len();
        if gf2::rank(&generator, n) != k {
            return Err(QkdError::InvalidCode("generator rows are dependent".into()));
        }
        if gf2::rank(&parity_check, n) != parity_check.len() || parity_check.len() != n - k {
            return Err(QkdError::InvalidCode(
                "parity-check matrix must have n - k independent rows".into(),
            ));
        }
        if generator
            .iter()
            .any(|&g| parity_check.iter().any(|&h| gf2::dot(g, h) != 0))
        {
            return Err(QkdError::InvalidCode(
                "generator is not orthogonal to parity check".into(),
            ));
        }
        Ok(Self {
            n,
            k,
            generator,
            parity_check,
            leaders: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generator_rows(&self) -> Vec<Vec<u8>> {
        self.generator.iter().map(|&r| unpack(r, self.n)).collect()
    }

    pub fn parity_check_rows(&self) -> Vec<Vec<u8>> {
        self.parity_check.iter().map(|&r| unpack(r, self.n)).collect()
    }

    #[cfg(test)]
    pub(crate) fn generator_words(&self) -> &[u64] {
        &self.generator
    }

    fn syndrome_word(&self, word: u64) -> u64 {
        self.parity_check
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &h)| acc | (gf2::dot(h, word) as u64) << i)
    }

    pub fn contains_word(&self, word: u64) -> bool {
        self.syndrome_word(word) == 0
    }

    pub fn codewords(&self) -> impl Iterator<Item = u64> + '_ {
        (0u64..1 << self.k).map(|mask| self.encode_mask(mask))
    }

    fn encode_mask(&self, mask: u64) -> u64 {
        self.generator
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold(0, |acc, (_, &g)| acc ^ g)
    }

    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mask = if self.k == 0 {
            0
        } else {
            rng.random::<u64>() >> (64 - self.k)
        };
        self.encode_mask(mask)
    }

    fn word(&self, bits: &[u8]) -> Result<u64> {
        if bits.len() != self.n {
            return Err(QkdError::LengthMismatch {
                expected: self.n,
                actual: bits.len(),
            });
        }
        pack(bits)
    }

    // Minimum-weight error for every syndrome, ties to the lexicographically
    // smallest pattern (bit 0 compared first).
    fn coset_leaders(&self) -> Result<&[u64]> {
        if self.n > MAX_DECODE_LEN {
            return Err(QkdError::InvalidCode(format!(
                "exhaustive decoding supports n <= {MAX_DECODE_LEN}, got {}",
                self.n
            )));
        }
        Ok(self.leaders.get_or_init(|| {
            let n = self.n;
            let size = 1usize << (n - self.k);
            let mut table = vec![u64::MAX; size];
            let mut found = 0;
            'weights: for w in 0..=n {
                // Gosper's hack walks weight-w keys in increasing order; the
                // key reverses bit order so numeric order is lexicographic.
                let mut key: u64 = (1u64 << w) - 1;
                while key < 1u64 << n {
                    let pattern = key.reverse_bits() >> (64 - n);
                    let s = self.syndrome_word(pattern) as usize;
                    if table[s] == u64::MAX {
                        table[s] = pattern;
                        found += 1;
                        if found == size {
                            break 'weights;
                        }
                    }
                    if key == 0 {
                        break;
                    }
                    let c = key & key.wrapping_neg();
                    let r = key + c;
                    key = (((r ^ key) >> 2) / c) | r;
                }
            }
            table
        }))
    }

    fn decode_word(&self, word: u64) -> Result<u64> {
        let leaders = self.coset_leaders()?;
        Ok(word ^ leaders[self.syndrome_word(word) as usize])
    }
}

/// `H·wordᵀ` over GF(2).
pub fn syndrome(code: &BinaryCode, word: &[u8]) -> Result<Vec<u8>> {
    let s = code.syndrome_word(code.word(word)?);
    Ok(unpack(s, code.n - code.k))
}

/// Closest codeword to `word`; among equally close codewords the one whose
/// error pattern is lexicographically smallest.
pub fn decode_nearest(code: &BinaryCode, word: &[u8]) -> Result<Vec<u8>> {
    let w = code.word(word)?;
    Ok(unpack(code.decode_word(w)?, code.n))
}

/// Nested codes `C₂ ⊂ C₁` with rows of `C₁` completing a basis of `C₂`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PairRepr", into = "PairRepr")]
pub struct CssPair {
    c1: BinaryCode,
    c2: BinaryCode,
    coset_basis: Vec<u64>,
    labeler: TaggedBasis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRepr {
    c1: BinaryCode,
    c2: BinaryCode,
    coset_basis: Vec<Vec<u8>>,
}

impl From<CssPair> for PairRepr {
    fn from(p: CssPair) -> Self {
        PairRepr {
            coset_basis: p.coset_basis_rows(),
            c1: p.c1,
            c2: p.c2,
        }
    }
}

impl TryFrom<PairRepr> for CssPair {
    type Error = QkdError;

    fn try_from(r: PairRepr) -> Result<Self> {
        let basis = pack_rows(&r.coset_basis, r.c1.n)?;
        CssPair::with_coset_basis(r.c1, r.c2, basis)
    }
}

impl PartialEq for CssPair {
    fn eq(&self, other: &Self) -> bool {
        self.c1 == other.c1 && self.c2 == other.c2 && self.coset_basis == other.coset_basis
    }
}

impl CssPair {
    /// Pairs `c2 ⊂ c1`, completing `c2`'s basis greedily from `c1`'s
    /// generator rows.
    pub fn new(c1: BinaryCode, c2: BinaryCode) -> Result<Self> {
        let mut span = TaggedBasis::default();
        for &g in &c2.generator {
            span.push(g);
        }
        let coset_basis: Vec<u64> = c1.generator.iter().copied().filter(|&g| span.push(g)).collect();
        Self::with_coset_basis(c1, c2, coset_basis)
    }

    pub fn with_coset_basis(c1: BinaryCode, c2: BinaryCode, coset_basis: Vec<u64>) -> Result<Self> {
        if c1.n != c2.n {
            return Err(QkdError::InvalidCode("C1 and C2 lengths differ".into()));
        }
        if c2.generator.iter().any(|&g| !c1.contains_word(g)) {
            return Err(QkdError::InvalidCode("C2 is not a subcode of C1".into()));
        }
        if coset_basis.len() + c2.k != c1.k || coset_basis.is_empty() {
            return Err(QkdError::InvalidCode(format!(
                "coset basis must have k1 - k2 = {} >= 1 rows",
                c1.k as i64 - c2.k as i64
            )));
        }
        let mut labeler = TaggedBasis::default();
        for &g in c2.generator.iter().chain(&coset_basis) {
            if !c1.contains_word(g) || !labeler.push(g) {
                return Err(QkdError::InvalidCode(
                    "coset basis must extend C2 to a basis of C1".into(),
                ));
            }
        }
        Ok(Self {
            c1,
            c2,
            coset_basis,
            labeler,
        })
    }

    pub fn c1(&self) -> &BinaryCode {
        &self.c1
    }

    pub fn c2(&self) -> &BinaryCode {
        &self.c2
    }

    pub fn n(&self) -> usize {
        self.c1.n
    }

    /// Key bits per block, `k₁ − k₂`.
    pub fn key_bits(&self) -> usize {
        self.coset_basis.len()
    }

    pub fn coset_basis_rows(&self) -> Vec<Vec<u8>> {
        self.coset_basis.iter().map(|&r| unpack(r, self.c1.n)).collect()
    }

    fn label_word(&self, v: u64) -> Result<u64> {
        let (residual, coords) = self.labeler.reduce(v);
        if residual != 0 {
            return Err(QkdError::NotInCode("C1"));
        }
        Ok(coords >> self.c2.k)
    }
}

/// Steane pair: `C₁` the `[7,4]` Hamming code, `C₂` its `[7,3]` dual; one
/// key bit per block, any single bit flip corrected.
pub fn steane_css() -> CssPair {
    // column j (1-based) of H is the binary expansion of j
    let h: Vec<u64> = (0..3)
        .map(|bit| {
            (1..=7u64)
                .filter(|j| j >> bit & 1 == 1)
                .fold(0, |acc, j| acc | 1 << (j - 1))
        })
        .collect();
    let c1 = BinaryCode::from_parity_check(7, h.clone()).expect("Hamming parity check is valid");
    let c2 = BinaryCode::from_generator(7, h).expect("simplex generator is valid");
    CssPair::new(c1, c2).expect("Hamming code contains its dual")
}

/// Random nested pair with `dim C₁ = k1`, `dim C₂ = k2`, for `n ≤ 24`.
pub fn random_css<R: Rng + ?Sized>(n: usize, k1: usize, k2: usize, rng: &mut R) -> Result<CssPair> {
    if !(1..=MAX_DECODE_LEN).contains(&n) || k2 >= k1 || k1 > n {
        return Err(QkdError::InvalidCode(format!(
            "need 0 <= k2 < k1 <= n <= {MAX_DECODE_LEN}, got n={n} k1={k1} k2={k2}"
        )));
    }
    let mut c1_basis = TaggedBasis::default();
    let mut c1_rows = Vec::with_capacity(k1);
    while c1_rows.len() < k1 {
        let v = rng.random::<u64>() >> (64 - n);
        if c1_basis.push(v) {
            c1_rows.push(v);
        }
    }
    let c1 = BinaryCode::from_generator(n, c1_rows)?;
    let mut c2_basis = TaggedBasis::default();
    let mut c2_rows = Vec::with_capacity(k2);
    while c2_rows.len() < k2 {
        let v = c1.random_codeword(rng);
        if c2_basis.push(v) {
            c2_rows.push(v);
        }
    }
    let c2 = BinaryCode::from_generator(n, c2_rows)?;
    CssPair::new(c1, c2)
}

/// Key bits naming the `C₂` coset of `v ∈ C₁`.
pub fn coset_label(pair: &CssPair, v: &[u8]) -> Result<Vec<u8>> {
    let w = pair.c1.word(v)?;
    Ok(unpack(pair.label_word(w)?, pair.key_bits()))
}

/// Alice's half of reconciliation: masks `u` with a random `v ∈ C₁`.
/// Returns the public string `u ⊕ v` and Alice's key, the coset of `v`.
pub fn announce_coset<R: Rng + ?Sized>(pair: &CssPair, alice_bits: &[u8], rng: &mut R) -> Result<(Vec<u8>, Vec<u8>)> {
    let u = pair.c1.word(alice_bits)?;
    let v = pair.c1.random_codeword(rng);
    let key = unpack(pair.label_word(v)?, pair.key_bits());
    Ok((unpack(u ^ v, pair.n()), key))
}

/// Bob's half: decodes `(u ⊕ e) ⊕ (u ⊕ v)` to `C₁` and labels the coset.
pub fn recover_key(pair: &CssPair, bob_bits: &[u8], announced: &[u8]) -> Result<Vec<u8>> {
    let received = pair.c1.word(bob_bits)?;
    let masked = pair.c1.word(announced)?;
    let decoded = pair.c1.decode_word(received ^ masked)?;
    Ok(unpack(pair.label_word(decoded)?, pair.key_bits()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub key_a: Vec<u8>,
    pub key_b: Vec<u8>,
    pub announced: Vec<u8>,
}

pub fn reconcile_and_extract<R: Rng + ?Sized>(
    pair: &CssPair,
    alice_bits: &[u8],
    bob_bits: &[u8],
    rng: &mut R,
) -> Result<Reconciliation> {
    if alice_bits.len() != bob_bits.len() {
        return Err(QkdError::LengthMismatch {
            expected: alice_bits.len(),
            actual: bob_bits.len(),
        });
    }
    let (announced, key_a) = announce_coset(pair, alice_bits, rng)?;
    let key_b = recover_key(pair, bob_bits, &announced)?;
    Ok(Reconciliation {
        key_a,
        key_b,
        announced,
    })
}

/// Which form of the check-sampling bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// `M = n/2` tested out of `N = 3n/2`.
    Simple,
    /// `tested` of `total` values sampled.
    General { tested: f64, total: f64 },
}

/// Bound on the probability that the untested values carry an error
/// fraction above `p + ε′` when a fraction `p` of the tested ones did.
pub fn sample_bound(n_keys: u64, p: f64, eps_prime: f64, mode: SampleMode) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(QkdError::param("p", p, "0 < p < 1"));
    }
    if !(eps_prime >= 0.0 && eps_prime.is_finite()) {
        return Err(QkdError::param("eps_prime", eps_prime, "a finite value >= 0"));
    }
    let variance = p * (1.0 - p);
    let exponent = match mode {
        SampleMode::Simple => {
            if n_keys == 0 {
                return Err(QkdError::param("n_keys", 0.0, "n_keys >= 1"));
            }
            n_keys as f64 * eps_prime * eps_prime / (9.0 * variance)
        }
        SampleMode::General { tested, total } => {
            if !(tested > 0.0 && tested < total && total.is_finite()) {
                return Err(QkdError::param("tested", tested, "0 < M < N"));
            }
            let untested = total - tested;
            tested * untested * untested * eps_prime * eps_prime / (2.0 * total * total * variance)
        }
    };
    Ok((-exponent).exp())
}

/// A permutation in "gather" form: `permuted[i] = original[indices[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(rng);
        Permutation(idx)
    }

    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; indices.len()];
        for &i in &indices {
            if i >= indices.len() || std::mem::replace(&mut seen[i], true) {
                return Err(QkdError::Config(format!("not a permutation of 0..{}", indices.len())));
            }
        }
        Ok(Permutation(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn apply<T: Clone>(&self, words: &[T]) -> Result<Vec<T>> {
        if words.len() != self.0.len() {
            return Err(QkdError::LengthMismatch {
                expected: self.0.len(),
                actual: words.len(),
            });
        }
        Ok(self.0.iter().map(|&i| words[i].clone()).collect())
    }

    pub fn invert<T: Clone>(&self, permuted: &[T]) -> Result<Vec<T>> {
        if permuted.len() != self.0.len() {
            return Err(QkdError::LengthMismatch {
                expected: self.0.len(),
                actual: permuted.len(),
            });
        }
        let mut out: Vec<Option<T>> = vec![None; permuted.len()];
        for (value, &i) in permuted.iter().zip(&self.0) {
            out[i] = Some(value.clone());
        }
        Ok(out.into_iter().map(|v| v.expect("bijection")).collect())
    }
}

/// Fisher-Yates shuffle of `words`; returns the shuffled copy and the
/// permutation that undoes it via [`unscramble`].
pub fn scramble<T: Clone, R: Rng + ?Sized>(words: &[T], rng: &mut R) -> (Vec<T>, Permutation) {
    let perm = Permutation::random(words.len(), rng);
    let permuted = perm.apply(words).expect("lengths match");
    (permuted, perm)
}

pub fn unscramble<T: Clone>(permuted: &[T], perm: &Permutation) -> Result<Vec<T>> {
    perm.invert(permuted)
}

#[cfg(test)]
mod tests;
