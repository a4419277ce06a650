//! Exact construction and verification of small list-decodable codes.
//!
//! Words of length `r` are held as `u64` masks whose most significant of the
//! `r` bits is the first character, so numeric order is lexicographic order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base::{floor_mul, rat_parts, BitString, Rat};
use crate::codec::BlockProfile;
use crate::error::{Error, Result};

pub const DEFAULT_BRUTEFORCE_CAP: usize = 16;
pub const VERIFIER_VERSION: &str = "ball-enum-1";

/// Cap on block length for exhaustive work; `MASSRED_BRUTEFORCE_CAP` overrides it.
pub fn bruteforce_cap() -> usize {
    std::env::var("MASSRED_BRUTEFORCE_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .map(|c: usize| c.min(24))
        .unwrap_or(DEFAULT_BRUTEFORCE_CAP)
}

fn check_cap(r: usize) -> Result<()> {
    let cap = bruteforce_cap();
    if r > cap {
        return Err(Error::BlockLengthTooLarge { r, cap });
    }
    Ok(())
}

/// Largest Hamming distance `d` inside the strict ball, i.e. `d < q·r`.
/// `None` when even distance 0 is excluded.
pub fn ball_radius(q: &Rat, r: usize) -> Option<u32> {
    let (num, den) = rat_parts(q);
    let lim = num * r as u64;
    (0..=r as u32).rev().find(|&d| den.clone() * d < lim)
}

/// Whether distance `d` lies in the strict `q`-ball at length `r`.
pub fn in_ball(d: u32, q: &Rat, r: usize) -> bool {
    ball_radius(q, r).is_some_and(|rad| d <= rad)
}

/// All masks of weight at most `rad` among `r` bits.
fn ball_masks(r: usize, rad: Option<u32>) -> Vec<u64> {
    match rad {
        None => Vec::new(),
        Some(rad) => (0u64..1 << r).filter(|m| m.count_ones() <= rad).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub verified_max_list: usize,
    pub verifier_version: String,
}

#[derive(Serialize, Deserialize)]
struct CodeRepr {
    r: usize,
    #[serde(with = "crate::base::rat_json")]
    q: Rat,
    #[serde(rename = "L")]
    l: usize,
    words: Vec<BitString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
}

/// A code of distinct length-`r` words in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr", into = "CodeRepr")]
pub struct ListCode {
    pub r: usize,
    pub q: Rat,
    pub l: usize,
    words: Vec<u64>,
    cert: Option<Certificate>,
}

impl TryFrom<CodeRepr> for ListCode {
    type Error = Error;
    fn try_from(c: CodeRepr) -> Result<Self> {
        let mut words = Vec::with_capacity(c.words.len());
        for w in &c.words {
            if w.len() != c.r {
                return Err(Error::LengthMismatch(w.len(), c.r));
            }
            words.push(mask_of(w));
        }
        let code = ListCode::new(c.r, c.q, c.l, words)?;
        match c.certificate {
            // a stored certificate is only trusted after re-verification
            Some(cert) => {
                let code = code.certify()?;
                if code.cert.as_ref() != Some(&cert) {
                    return Err(Error::UncertifiedCode(format!(
                        "stored certificate {cert:?} does not verify"
                    )));
                }
                Ok(code)
            }
            None => Ok(code),
        }
    }
}

impl From<ListCode> for CodeRepr {
    fn from(c: ListCode) -> Self {
        let words = (0..c.words.len()).map(|i| c.word(i)).collect();
        CodeRepr {
            r: c.r,
            q: c.q,
            l: c.l,
            words,
            certificate: c.cert,
        }
    }
}

fn mask_of(w: &BitString) -> u64 {
    w.bits().iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

impl ListCode {
    /// Words must be strictly increasing and fit in `r` bits.
    pub fn new(r: usize, q: Rat, l: usize, words: Vec<u64>) -> Result<Self> {
        if r > 63 {
            return Err(Error::BlockLengthTooLarge { r, cap: 63 });
        }
        if let Some(i) = words.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!(
                "words not strictly increasing at {}",
                i + 1
            )));
        }
        if let Some(w) = words.iter().find(|&&w| w >> r != 0) {
            return Err(Error::Invalid(format!("word {w} exceeds {r} bits")));
        }
        Ok(ListCode {
            r,
            q,
            l,
            words,
            cert: None,
        })
    }

    pub fn from_strings(q: Rat, l: usize, words: &[&str]) -> Result<Self> {
        let parsed = words
            .iter()
            .map(|s| BitString::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let r = parsed.first().map_or(0, |w| w.len());
        ListCode::try_from(CodeRepr {
            r,
            q,
            l,
            words: parsed,
            certificate: None,
        })
    }

    pub fn masks(&self) -> &[u64] {
        &self.words
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, i: usize) -> BitString {
        BitString::from_nat(&crate::base::nat(self.words[i]), self.r)
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.cert.as_ref()
    }

    /// Runs the verifier and attaches a certificate when the list bound holds.
    pub fn certify(mut self) -> Result<Self> {
        let m = verify_list_max(self.r, &self.words, &self.q)?;
        if m > self.l {
            return Err(Error::Infeasible(format!(
                "max list {m} exceeds L={} at r={}",
                self.l, self.r
            )));
        }
        self.cert = Some(Certificate {
            verified_max_list: m,
            verifier_version: VERIFIER_VERSION.into(),
        });
        Ok(self)
    }

    /// Certified for radius `q` and list size `l`.
    pub fn is_certified_for(&self, q: &Rat, l: usize) -> bool {
        self.q == *q && self.cert.as_ref().is_some_and(|c| c.verified_max_list <= l)
    }

    /// `⌊log₂ |C|⌋ / r`.
    pub fn achieved_rate(&self) -> f64 {
        if self.r == 0 || self.words.is_empty() {
            return 0.0;
        }
        (self.words.len() as f64).log2() / self.r as f64
    }
}

/// Max over all `σ ∈ 2^r` of the number of words strictly `q`-close to `σ`.
pub fn verify_list_max(r: usize, words: &[u64], q: &Rat) -> Result<usize> {
    check_cap(r)?;
    let masks = ball_masks(r, ball_radius(q, r));
    let mut counts = vec![0u32; 1 << r];
    for &w in words {
        for &m in &masks {
            counts[(w ^ m) as usize] += 1;
        }
    }
    Ok(counts.into_iter().max().unwrap_or(0) as usize)
}

pub fn verify_code(code: &ListCode, q: &Rat) -> Result<usize> {
    verify_list_max(code.r, &code.words, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    LexGreedy,
    RandomGreedy { seed: u64 },
    Exhaustive,
}

/// Incremental ball bookkeeping: `counts[σ]` is the list size at `σ`.
struct Balls {
    masks: Vec<u64>,
    counts: Vec<u32>,
    l: u32,
}

impl Balls {
    fn new(r: usize, q: &Rat, l: usize) -> Self {
        Balls {
            masks: ball_masks(r, ball_radius(q, r)),
            counts: vec![0; 1 << r],
            l: l as u32,
        }
    }

    fn admits(&self, w: u64) -> bool {
        self.masks
            .iter()
            .all(|&m| self.counts[(w ^ m) as usize] < self.l)
    }

    fn add(&mut self, w: u64) {
        for &m in &self.masks {
            self.counts[(w ^ m) as usize] += 1;
        }
    }

    fn remove(&mut self, w: u64) {
        for &m in &self.masks {
            self.counts[(w ^ m) as usize] -= 1;
        }
    }
}

fn greedy(
    r: usize,
    q: &Rat,
    l: usize,
    order: impl Iterator<Item = u64>,
    target: Option<usize>,
) -> Vec<u64> {
    let mut balls = Balls::new(r, q, l);
    let mut words = Vec::new();
    for w in order {
        if target.is_some_and(|t| words.len() >= t) {
            break;
        }
        if balls.admits(w) {
            balls.add(w);
            words.push(w);
        }
    }
    words.sort_unstable();
    words
}

fn exhaustive(r: usize, q: &Rat, l: usize, target: usize) -> Option<Vec<u64>> {
    fn go(balls: &mut Balls, next: u64, end: u64, need: usize, acc: &mut Vec<u64>) -> bool {
        if need == 0 {
            return true;
        }
        let mut w = next;
        while w < end && (end - w) as usize >= need {
            if balls.admits(w) {
                balls.add(w);
                acc.push(w);
                if go(balls, w + 1, end, need - 1, acc) {
                    return true;
                }
                acc.pop();
                balls.remove(w);
            }
            w += 1;
        }
        false
    }
    let mut balls = Balls::new(r, q, l);
    let mut acc = Vec::new();
    go(&mut balls, 0, 1 << r, target, &mut acc).then_some(acc)
}

/// Builds and certifies a code with at least `target_size` words.
pub fn build_code(
    r: usize,
    q: &Rat,
    l: usize,
    target_size: usize,
    strategy: Strategy,
) -> Result<ListCode> {
    check_cap(r)?;
    let all = 0u64..1 << r;
    let words = match strategy {
        Strategy::LexGreedy => greedy(r, q, l, all, Some(target_size)),
        Strategy::RandomGreedy { seed } => {
            let mut v: Vec<u64> = all.collect();
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            greedy(r, q, l, v.into_iter(), Some(target_size))
        }
        Strategy::Exhaustive => exhaustive(r, q, l, target_size).ok_or_else(|| {
            Error::Infeasible(format!("no code of size {target_size} exists at r={r}"))
        })?,
    };
    if words.len() < target_size {
        return Err(Error::Infeasible(format!(
            "reached size {} < {target_size} at r={r}",
            words.len()
        )));
    }
    ListCode::new(r, q.clone(), l, words)?.certify()
}

/// Lex-greedy run to maximality, for rate benchmarks.
pub fn build_maximal(r: usize, q: &Rat, l: usize) -> Result<ListCode> {
    check_cap(r)?;
    let words = greedy(r, q, l, 0u64..1 << r, None);
    ListCode::new(r, q.clone(), l, words)?.certify()
}

/// One certified code per distinct block length, shared across indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFamily {
    #[serde(with = "crate::base::rat_json")]
    pub q: Rat,
    #[serde(rename = "L")]
    pub l: usize,
    pub profile: BlockProfile,
    codes: BTreeMap<usize, ListCode>,
}

impl CodeFamily {
    pub fn new(q: Rat, l: usize, profile: BlockProfile, codes: Vec<ListCode>) -> Result<Self> {
        let codes: BTreeMap<usize, ListCode> = codes.into_iter().map(|c| (c.r, c)).collect();
        if let Some(r) = profile.lens().iter().find(|r| !codes.contains_key(r)) {
            return Err(Error::MissingArtifact(format!("no code of length {r}")));
        }
        Ok(CodeFamily {
            q,
            l,
            profile,
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn lens(&self) -> &[usize] {
        self.profile.lens()
    }

    /// `C_{ĥ(n)}`.
    pub fn code(&self, n: usize) -> &ListCode {
        &self.codes[&self.profile.lens()[n]]
    }

    /// `u(n) = |C_{ĥ(n)}|`.
    pub fn sizes(&self) -> Vec<usize> {
        (0..self.len()).map(|n| self.code(n).size()).collect()
    }

    pub fn distinct_codes(&self) -> impl Iterator<Item = &ListCode> {
        self.codes.values()
    }

    /// Every code is certified for the family's `(q, L)`.
    pub fn check_certified(&self, q: &Rat) -> Result<()> {
        if self.q != *q {
            return Err(Error::UncertifiedCode(format!(
                "family radius {} != {q}",
                self.q
            )));
        }
        for c in self.codes.values() {
            if !c.is_certified_for(q, self.l) {
                return Err(Error::UncertifiedCode(format!(
                    "length {} not certified",
                    c.r
                )));
            }
        }
        Ok(())
    }
}

/// Lex-greedy codes of size `2^⌊rate·ĥ(n)⌋`, one per distinct length.
pub fn code_family(profile: &BlockProfile, q: &Rat, l: usize, rate: &Rat) -> Result<CodeFamily> {
    let mut codes: BTreeMap<usize, ListCode> = BTreeMap::new();
    for (n, &r) in profile.lens().iter().enumerate() {
        if codes.contains_key(&r) {
            continue;
        }
        check_cap(r)?;
        let target = 1usize << floor_mul(rate, r as u64);
        let code = build_code(r, q, l, target, Strategy::LexGreedy).map_err(|e| match e {
            Error::Infeasible(_) => {
                let got = greedy(r, q, l, 0u64..1 << r, Some(target)).len();
                Error::Infeasible(format!("n={n}: achieved size {got} < {target} at r={r}"))
            }
            e => e,
        })?;
        codes.insert(r, code);
    }
    Ok(CodeFamily {
        q: q.clone(),
        l,
        profile: profile.clone(),
        codes,
    })
}
