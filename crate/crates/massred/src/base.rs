//! Exact arithmetic, bit strings, order-function expressions, densities and
//! finite-horizon relation checks.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::slalom::Slalom;

pub type Nat = BigUint;
pub type Rat = BigRational;

/// Largest exponent (in bits) any expression may produce.
pub const MAX_BITS: u64 = 1 << 24;

pub fn nat(v: u64) -> Nat {
    Nat::from(v)
}

pub fn rat(num: u64, den: u64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_from_nats(num: &Nat, den: &Nat) -> Rat {
    Rat::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Numerator and denominator of a nonnegative rational.
pub fn rat_parts(q: &Rat) -> (Nat, Nat) {
    (
        q.numer().to_biguint().unwrap_or_default(),
        q.denom().to_biguint().unwrap_or_default(),
    )
}

/// `⌊q · r⌋` for a nonnegative rational.
pub fn floor_mul(q: &Rat, r: u64) -> u64 {
    let (n, d) = rat_parts(q);
    (n * nat(r) / d).to_u64().unwrap_or(u64::MAX)
}

pub fn pow2(e: u64) -> Nat {
    Nat::one() << e
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum NumRepr {
    S(String),
    U(u64),
}

fn parse_nat<E: serde::de::Error>(r: NumRepr) -> std::result::Result<Nat, E> {
    match r {
        NumRepr::U(v) => Ok(nat(v)),
        NumRepr::S(s) => s
            .parse::<Nat>()
            .map_err(|_| E::custom(format!("not a decimal natural: {s:?}"))),
    }
}

/// Serde adapter: `Nat` as a decimal string (integers also accepted on input).
pub mod dec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Nat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Nat, D::Error> {
        parse_nat(NumRepr::deserialize(d)?)
    }
}

/// Serde adapter: `Vec<Nat>` as an array of decimal strings.
pub mod dec_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Nat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|x| x.to_str_radix(10)).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Nat>, D::Error> {
        Vec::<NumRepr>::deserialize(d)?
            .into_iter()
            .map(parse_nat)
            .collect()
    }
}

/// Serde adapter: `Vec<Vec<Nat>>` as nested arrays of decimal strings.
pub mod dec_vec_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Nat>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = v
            .iter()
            .map(|row| row.iter().map(|x| x.to_str_radix(10)).collect())
            .collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Nat>>, D::Error> {
        Vec::<Vec<NumRepr>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(parse_nat).collect())
            .collect()
    }
}

/// Serde adapter: `Rat` as `{"num": "..", "den": ".."}`.
pub mod rat_json {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: NumRepr,
        den: NumRepr,
    }

    pub fn serialize<S: Serializer>(q: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (n, d) = rat_parts(q);
        Repr {
            num: NumRepr::S(n.to_str_radix(10)),
            den: NumRepr::S(d.to_str_radix(10)),
        }
        .serialize(s)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Input {
        Parts(Repr),
        Text(String),
    }

    /// Accepts `{"num", "den"}` or a string `"a/b"` (or `"a"`).
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let r = match Input::deserialize(d)? {
            Input::Parts(r) => r,
            Input::Text(s) => {
                let (a, b) = s.split_once('/').unwrap_or((&s, "1"));
                Repr {
                    num: NumRepr::S(a.trim().to_string()),
                    den: NumRepr::S(b.trim().to_string()),
                }
            }
        };
        let num = parse_nat::<D::Error>(r.num)?;
        let den = parse_nat::<D::Error>(r.den)?;
        if den.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(rat_from_nats(&num, &den))
    }
}

/// A finite word over {0,1}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        BitString(vec![true; len])
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Invalid(format!("bad bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }

    /// Big-endian binary expansion of `v` with exactly `len` digits.
    pub fn from_nat(v: &Nat, len: usize) -> Self {
        BitString((0..len).map(|i| v.bit((len - 1 - i) as u64)).collect())
    }

    /// Big-endian reading of the bits as a number.
    pub fn to_nat(&self) -> Nat {
        let mut v = Nat::zero();
        let len = self.0.len();
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                v.set_bit((len - 1 - i) as u64, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn extend(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    pub fn slice(&self, lo: usize, hi: usize) -> BitString {
        BitString(self.0[lo..hi].to_vec())
    }

    pub fn complement(&self) -> BitString {
        BitString(self.0.iter().map(|b| !b).collect())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitString::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Expression tree for order functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OrderFuncExpr {
    Const {
        #[serde(with = "dec")]
        value: Nat,
    },
    /// The identity `n`.
    N,
    /// `a^n`.
    Pow {
        #[serde(with = "dec")]
        base: Nat,
    },
    /// `2^e(n)`.
    Exp2 { arg: Box<OrderFuncExpr> },
    /// `⌊2^(n/k)⌋`.
    RootExp2 { k: u32 },
    Mul {
        lhs: Box<OrderFuncExpr>,
        rhs: Box<OrderFuncExpr>,
    },
    Add {
        lhs: Box<OrderFuncExpr>,
        rhs: Box<OrderFuncExpr>,
    },
    /// `e(2n)`.
    Rescale { arg: Box<OrderFuncExpr> },
    /// `outer(inner(n))`.
    Compose {
        outer: Box<OrderFuncExpr>,
        inner: Box<OrderFuncExpr>,
    },
}

fn to_u64_checked(v: &Nat, what: &str) -> Result<u64> {
    match v.to_u64() {
        Some(x) if x <= MAX_BITS => Ok(x),
        _ => Err(Error::RangeExceeded(format!("{what} too large"))),
    }
}

impl OrderFuncExpr {
    pub fn constant(v: u64) -> Self {
        OrderFuncExpr::Const { value: nat(v) }
    }

    pub fn pow(a: u64) -> Self {
        OrderFuncExpr::Pow { base: nat(a) }
    }

    pub fn exp2(arg: OrderFuncExpr) -> Self {
        OrderFuncExpr::Exp2 { arg: Box::new(arg) }
    }

    pub fn root_exp2(k: u32) -> Self {
        OrderFuncExpr::RootExp2 { k }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(lhs: OrderFuncExpr, rhs: OrderFuncExpr) -> Self {
        OrderFuncExpr::Mul {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(lhs: OrderFuncExpr, rhs: OrderFuncExpr) -> Self {
        OrderFuncExpr::Add {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn rescale(arg: OrderFuncExpr) -> Self {
        OrderFuncExpr::Rescale { arg: Box::new(arg) }
    }

    pub fn compose(outer: OrderFuncExpr, inner: OrderFuncExpr) -> Self {
        OrderFuncExpr::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    /// Evaluation without the monotonicity check.
    pub fn eval_at(&self, n: &Nat) -> Result<Nat> {
        use OrderFuncExpr::*;
        Ok(match self {
            Const { value } => value.clone(),
            N => n.clone(),
            Pow { base } => {
                let e = to_u64_checked(n, "exponent")?;
                if base.bits().saturating_mul(e) > MAX_BITS {
                    return Err(Error::RangeExceeded("power too large".into()));
                }
                base.pow(e as u32)
            }
            Exp2 { arg } => pow2(to_u64_checked(&arg.eval_at(n)?, "exponent")?),
            RootExp2 { k } => {
                if *k == 0 {
                    return Err(Error::Invalid("root index 0".into()));
                }
                pow2(to_u64_checked(n, "exponent")?).nth_root(*k)
            }
            Mul { lhs, rhs } => lhs.eval_at(n)? * rhs.eval_at(n)?,
            Add { lhs, rhs } => lhs.eval_at(n)? + rhs.eval_at(n)?,
            Rescale { arg } => arg.eval_at(&(n * 2u32))?,
            Compose { outer, inner } => outer.eval_at(&inner.eval_at(n)?)?,
        })
    }

    pub fn eval_raw(&self, n: u64) -> Result<Nat> {
        self.eval_at(&nat(n))
    }

    /// Values at `0..len`, checked nondecreasing.
    pub fn table(&self, len: usize) -> Result<Vec<Nat>> {
        let mut out: Vec<Nat> = Vec::with_capacity(len);
        for i in 0..len {
            let v = self.eval_raw(i as u64)?;
            if let Some(prev) = out.last() {
                if &v < prev {
                    return Err(Error::NonMonotone(i));
                }
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Whether `e(n) > x`, decided without materializing towers of exponentials.
    pub fn value_gt(&self, n: u64, x: &Nat) -> Result<bool> {
        if let OrderFuncExpr::Exp2 { arg } = self {
            if x.is_zero() {
                return Ok(true);
            }
            // 2^a > x  <=>  a >= bits(x)  <=>  a > bits(x) - 1
            return arg.value_gt(n, &nat(x.bits() - 1));
        }
        Ok(&self.eval_raw(n)? > x)
    }

    /// Whether `e(n) > 2^w`.
    pub fn exceeds_pow2(&self, n: u64, w: &Nat) -> Result<bool> {
        if let OrderFuncExpr::Exp2 { arg } = self {
            return arg.value_gt(n, w);
        }
        let v = self.eval_raw(n)?;
        let bits = nat(v.bits());
        let w1 = w + 1u32;
        Ok(bits > w1 || (bits == w1 && v != Nat::one() << w.to_u64().unwrap_or(0)))
    }
}

/// A table value that must fit a machine word.
pub fn need_u64(v: &Nat, n: usize) -> Result<u64> {
    v.to_u64().ok_or_else(|| Error::BoundViolation {
        n,
        detail: format!("{v} does not fit 64 bits"),
    })
}

/// Evaluate `e(n)`, failing if `e` decreases anywhere on `0..=n`.
pub fn eval_order(e: &OrderFuncExpr, n: usize) -> Result<Nat> {
    let t = e.table(n + 1)?;
    Ok(t[n].clone())
}

/// Finite stand-ins for "almost everywhere" and "infinitely often".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    #[serde(rename = "N")]
    pub n: usize,
    pub tail: usize,
    pub hits: usize,
}

impl Horizon {
    pub fn new(n: usize, tail: usize, hits: usize) -> Result<Self> {
        let h = Horizon { n, tail, hits };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tail >= self.n {
            return Err(Error::InvalidHorizon(format!(
                "tail {} >= N {}",
                self.tail, self.n
            )));
        }
        if self.hits == 0 {
            return Err(Error::InvalidHorizon("hits must be >= 1".into()));
        }
        Ok(())
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.tail..self.n
    }
}

/// A finite table of naturals, optionally bounded by an order function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinFunc {
    #[serde(with = "dec_vec")]
    pub values: Vec<Nat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<OrderFuncExpr>,
}

impl FinFunc {
    pub fn new(values: Vec<Nat>) -> Self {
        FinFunc {
            values,
            bound: None,
        }
    }

    pub fn from_u64s(values: &[u64]) -> Self {
        FinFunc::new(values.iter().map(|&v| nat(v)).collect())
    }

    pub fn bounded(values: Vec<Nat>, bound: OrderFuncExpr) -> Result<Self> {
        let f = FinFunc {
            values,
            bound: Some(bound),
        };
        f.check_bound()?;
        Ok(f)
    }

    pub fn check_bound(&self) -> Result<()> {
        if let Some(b) = &self.bound {
            let t = b.table(self.values.len())?;
            for (n, (v, u)) in self.values.iter().zip(&t).enumerate() {
                if v >= u {
                    return Err(Error::BoundViolation {
                        n,
                        detail: format!("{v} >= {u}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Position-wise agreement indicator `x ↔ y`.
pub fn iff_seq(x: &BitString, y: &BitString) -> Result<BitString> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok(BitString::new(
        x.bits().iter().zip(y.bits()).map(|(a, b)| a == b).collect(),
    ))
}

/// Minimum of `|z ∩ n| / n` over `n ∈ [max(from,1), len(z)]`.
pub fn lower_density_estimate(z: &BitString, from: usize) -> Result<Rat> {
    if from >= z.len() {
        return Err(Error::EmptyRange { from, len: z.len() });
    }
    let (num, den) = min_prefix_ratio(z, from.max(1));
    Ok(rat(num as u64, den as u64))
}

/// The minimizing prefix ratio as `(ones, length)`, compared exactly.
fn min_prefix_ratio(z: &BitString, start: usize) -> (usize, usize) {
    let mut ones = 0usize;
    let mut best: Option<(usize, usize)> = None;
    for (i, &b) in z.bits().iter().enumerate() {
        ones += b as usize;
        let n = i + 1;
        if n < start {
            continue;
        }
        best = match best {
            Some((bn, bd)) if bn * n <= ones * bd => Some((bn, bd)),
            _ => Some((ones, n)),
        };
    }
    best.unwrap_or((0, 1))
}

/// Normalized Hamming distance.
pub fn hamming_norm(x: &BitString, y: &BitString) -> Result<Rat> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::ZeroLength);
    }
    let diff = x
        .bits()
        .iter()
        .zip(y.bits())
        .filter(|(a, b)| a != b)
        .count();
    Ok(rat(diff as u64, x.len() as u64))
}

/// Normalized distance between two values read as `r`-bit strings.
pub fn block_distance(x: &Nat, y: &Nat, r: usize) -> Result<Rat> {
    if r == 0 {
        return Err(Error::ZeroLength);
    }
    let diff = (x ^ y).count_ones();
    Ok(rat(diff, r as u64))
}

/// The four relation families, with bounds materialized as tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RelationKind {
    /// `x ≠*_h y`: all values differ on the tail; `y < h`.
    NeqStar {
        #[serde(with = "dec_vec")]
        h: Vec<Nat>,
    },
    /// `x ⋈_p y`: agreement lower density above `p`.
    Bowtie {
        #[serde(with = "rat_json")]
        p: Rat,
    },
    /// Blocks of length `lens(n)` disagree on a proportion of at least `q`.
    BlockNeq {
        lens: Vec<usize>,
        #[serde(with = "rat_json")]
        q: Rat,
    },
    /// `s ∌* y` for an `L`-slalom bounded by `u`.
    SlalomAvoid {
        #[serde(with = "dec_vec")]
        u: Vec<Nat>,
        #[serde(rename = "L")]
        l: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Func(&'a [Nat]),
    Bits(&'a BitString),
    Slalom(&'a Slalom),
}

fn func<'a>(o: Operand<'a>, side: &str) -> Result<&'a [Nat]> {
    match o {
        Operand::Func(f) => Ok(f),
        _ => Err(Error::TypeMismatch(format!("{side} must be a function"))),
    }
}

fn bits<'a>(o: Operand<'a>, side: &str) -> Result<&'a BitString> {
    match o {
        Operand::Bits(b) => Ok(b),
        _ => Err(Error::TypeMismatch(format!("{side} must be a bit string"))),
    }
}

fn need_len(len: usize, hz: &Horizon) -> Result<()> {
    if len != hz.n {
        return Err(Error::LengthMismatch(len, hz.n));
    }
    Ok(())
}

fn need_below(v: &Nat, bound: &Nat, n: usize) -> Result<()> {
    if v >= bound {
        return Err(Error::BoundViolation {
            n,
            detail: format!("{v} >= {bound}"),
        });
    }
    Ok(())
}

/// Per-index (or per-prefix) indicator of the "witness" event whose
/// absence on the tail is the relation, and whose frequency is the co-relation.
fn witness_events(
    kind: &RelationKind,
    lhs: Operand<'_>,
    rhs: Operand<'_>,
    hz: &Horizon,
) -> Result<Vec<bool>> {
    hz.validate()?;
    match kind {
        RelationKind::NeqStar { h } => {
            let (x, y) = (func(lhs, "lhs")?, func(rhs, "rhs")?);
            need_len(x.len(), hz)?;
            need_len(y.len(), hz)?;
            need_len(h.len(), hz)?;
            for n in 0..hz.n {
                need_below(&y[n], &h[n], n)?;
            }
            Ok((hz.tail..hz.n).map(|n| x[n] == y[n]).collect())
        }
        RelationKind::Bowtie { p } => {
            let (x, y) = (bits(lhs, "lhs")?, bits(rhs, "rhs")?);
            need_len(x.len(), hz)?;
            let z = iff_seq(x, y)?;
            let mut ones = 0u64;
            let mut out = Vec::new();
            for (i, &b) in z.bits().iter().enumerate() {
                ones += b as u64;
                let m = i + 1;
                if m >= hz.tail.max(1) {
                    out.push(rat(ones, m as u64) <= *p);
                }
            }
            Ok(out)
        }
        RelationKind::BlockNeq { lens, q } => {
            let (x, y) = (func(lhs, "lhs")?, func(rhs, "rhs")?);
            need_len(x.len(), hz)?;
            need_len(y.len(), hz)?;
            need_len(lens.len(), hz)?;
            for n in 0..hz.n {
                let b = pow2(lens[n] as u64);
                need_below(&x[n], &b, n)?;
                need_below(&y[n], &b, n)?;
            }
            (hz.tail..hz.n)
                .map(|n| Ok(block_distance(&x[n], &y[n], lens[n])? < *q))
                .collect()
        }
        RelationKind::SlalomAvoid { u, l } => {
            let s = match lhs {
                Operand::Slalom(s) => s,
                _ => return Err(Error::TypeMismatch("lhs must be a slalom".into())),
            };
            let y = func(rhs, "rhs")?;
            need_len(s.len(), hz)?;
            need_len(y.len(), hz)?;
            need_len(u.len(), hz)?;
            for n in 0..hz.n {
                let e = &s.entries[n];
                if e.len() > *l {
                    return Err(Error::BoundViolation {
                        n,
                        detail: format!("slalom entry of size {} > L={l}", e.len()),
                    });
                }
                for v in e {
                    need_below(v, &u[n], n)?;
                }
                need_below(&y[n], &u[n], n)?;
            }
            Ok((hz.tail..hz.n).map(|n| s.contains(n, &y[n])).collect())
        }
    }
}

/// Finite-horizon verdict for `lhs R rhs`: no witness event on the tail
/// (for `Bowtie`, every prefix from `max(tail,1)` has agreement above `p`).
pub fn check_relation(
    kind: &RelationKind,
    lhs: Operand<'_>,
    rhs: Operand<'_>,
    hz: &Horizon,
) -> Result<bool> {
    Ok(!witness_events(kind, lhs, rhs, hz)?.iter().any(|&e| e))
}

/// Finite-horizon verdict for the dual `¬(lhs R rhs)` read as
/// "infinitely often": at least `hits` witness events on the tail.
pub fn check_co_relation(
    kind: &RelationKind,
    lhs: Operand<'_>,
    rhs: Operand<'_>,
    hz: &Horizon,
) -> Result<bool> {
    let c = witness_events(kind, lhs, rhs, hz)?
        .iter()
        .filter(|&&e| e)
        .count();
    Ok(c >= hz.hits)
}
