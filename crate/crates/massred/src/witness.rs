//! Finite-scale witness families for relational cardinal characteristics,
//! checked by exhaustive enumeration, and the family maps between them.

use serde::{Deserialize, Serialize};

use crate::base::{
    check_co_relation, check_relation, nat, BitString, Horizon, Nat, Operand, Rat, RelationKind,
};
use crate::codec::{concat_l, even_odd_split, interleave, split_k, BlockFunc, BlockProfile};
use crate::error::{Error, Result};
use crate::listcode::CodeFamily;
use crate::slalom::{ball_trace, block_concat_width, block_extract_widths, encode_index, Slalom};

pub const DEFAULT_UNIVERSE_CAP: usize = 1 << 16;

/// Cap on universe size. `MASSRED_UNIVERSE_CAP` sets it directly; otherwise
/// `MASSRED_BRUTEFORCE_CAP = r` allows universes of `2^r` elements.
pub fn universe_cap() -> usize {
    let env = |k: &str| std::env::var(k).ok().and_then(|s| s.parse::<usize>().ok());
    env("MASSRED_UNIVERSE_CAP")
        .or_else(|| env("MASSRED_BRUTEFORCE_CAP").map(|r| 1usize << r.min(24)))
        .unwrap_or(DEFAULT_UNIVERSE_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Element {
    Bits(BitString),
    Func(#[serde(with = "crate::base::dec_vec")] Vec<Nat>),
    Slalom(Slalom),
}

impl Element {
    pub fn operand(&self) -> Operand<'_> {
        match self {
            Element::Bits(b) => Operand::Bits(b),
            Element::Func(f) => Operand::Func(f),
            Element::Slalom(s) => Operand::Slalom(s),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Element::Bits(_) => "bit string",
            Element::Func(_) => "function",
            Element::Slalom(_) => "slalom",
        }
    }

    fn func(&self) -> Result<&[Nat]> {
        match self {
            Element::Func(f) => Ok(f),
            e => Err(Error::TypeMismatch(format!(
                "expected a function, got a {}",
                e.kind_name()
            ))),
        }
    }

    fn bits(&self) -> Result<&BitString> {
        match self {
            Element::Bits(b) => Ok(b),
            e => Err(Error::TypeMismatch(format!(
                "expected a bit string, got a {}",
                e.kind_name()
            ))),
        }
    }

    fn slalom(&self) -> Result<&Slalom> {
        match self {
            Element::Slalom(s) => Ok(s),
            e => Err(Error::TypeMismatch(format!(
                "expected a slalom, got a {}",
                e.kind_name()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

/// Every element of one finite space, enumerated in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub side: Side,
    pub n: usize,
    pub members: Vec<Element>,
}

fn check_size(size: u128) -> Result<usize> {
    let cap = universe_cap();
    if size > cap as u128 {
        return Err(Error::UniverseTooLarge {
            size: size.to_string(),
            cap,
        });
    }
    Ok(size as usize)
}

/// Mixed-radix enumeration of the product of `choices`.
fn product<T: Clone>(choices: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let size = choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    let size = check_size(size)?;
    let mut out = Vec::with_capacity(size);
    let mut idx = vec![0usize; choices.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(out);
    }
    loop {
        out.push(
            idx.iter()
                .zip(choices)
                .map(|(&i, c)| c[i].clone())
                .collect(),
        );
        let mut k = choices.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn small(b: &Nat, n: usize) -> Result<u64> {
    crate::base::need_u64(b, n)
}

/// Subsets of `0..u` of size at most `l`, in increasing order of size then lex.
fn small_subsets(u: u64, l: usize) -> Vec<Vec<Nat>> {
    fn go(start: u64, u: u64, left: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for v in start..u {
            cur.push(v);
            go(v + 1, u, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, u, l, &mut Vec::new(), &mut out);
    out.sort_by_key(|s| s.len());
    out.into_iter()
        .map(|s| s.into_iter().map(nat).collect())
        .collect()
}

impl Universe {
    /// All functions `f` with `f(n) < bound(n)`.
    pub fn funcs(side: Side, bound: &[Nat]) -> Result<Self> {
        let choices = bound
            .iter()
            .enumerate()
            .map(|(n, b)| Ok((0..small(b, n)?).map(nat).collect()))
            .collect::<Result<Vec<Vec<Nat>>>>()?;
        let members = product(&choices)?.into_iter().map(Element::Func).collect();
        Ok(Universe {
            side,
            n: bound.len(),
            members,
        })
    }

    /// All bit strings of length `n`.
    pub fn bits(side: Side, n: usize) -> Result<Self> {
        let choices = vec![vec![false, true]; n];
        let members = product(&choices)?
            .into_iter()
            .map(|b| Element::Bits(BitString::new(b)))
            .collect();
        Ok(Universe { side, n, members })
    }

    /// All `L`-slaloms bounded by `bound`.
    pub fn slaloms(side: Side, l: usize, bound: &[Nat]) -> Result<Self> {
        let choices = bound
            .iter()
            .enumerate()
            .map(|(n, b)| Ok(small_subsets(small(b, n)?, l)))
            .collect::<Result<Vec<_>>>()?;
        let members = product(&choices)?
            .into_iter()
            .map(|entries| Slalom::new(l, bound.to_vec(), entries).map(Element::Slalom))
            .collect::<Result<Vec<_>>>()?;
        Ok(Universe {
            side,
            n: bound.len(),
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// `∀x ∃y ∈ G: x R y`.
    D,
    /// `∀y ∃x ∈ F: ¬(x R y)`.
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFamily {
    pub role: Role,
    pub relation: RelationKind,
    pub members: Vec<Element>,
}

impl WitnessFamily {
    pub fn new(role: Role, relation: RelationKind, members: Vec<Element>) -> Self {
        WitnessFamily {
            role,
            relation,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Exhaustive finite check of the witness property against `uni`.
pub fn is_witness(fam: &WitnessFamily, uni: &Universe, hz: &Horizon) -> Result<bool> {
    check_size(uni.len() as u128)?;
    let rel = &fam.relation;
    for u in &uni.members {
        let mut found = false;
        for m in &fam.members {
            let hit = match fam.role {
                Role::D => check_relation(rel, u.operand(), m.operand(), hz)?,
                Role::B => check_co_relation(rel, m.operand(), u.operand(), hz)?,
            };
            if hit {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The universe element that no member handles, if any.
pub fn counterexample<'a>(
    fam: &WitnessFamily,
    uni: &'a Universe,
    hz: &Horizon,
) -> Result<Option<&'a Element>> {
    for u in &uni.members {
        let single = WitnessFamily::new(fam.role, fam.relation.clone(), fam.members.clone());
        let one = Universe {
            side: uni.side,
            n: uni.n,
            members: vec![u.clone()],
        };
        if !is_witness(&single, &one, hz)? {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepId {
    /// d: all `p₀ ⊕ p₁`.
    Interleave,
    /// d: `K_h(y)`.
    SplitBlocks,
    /// d: `1 − L_h(y)`.
    ComplementConcat,
    /// d: `ỹ(n) = C_{y(n)}`.
    EncodeIndex,
    /// d: all `p₀ ⊕ p₁`, for slalom relations.
    Doubling,
    /// d: all `L`-tuples `(y_1, …, y_L)` as block concatenations.
    BlockTuples,
    /// b: `n ↦ p(2n)` and `n ↦ p(2n+1)`.
    Projection,
    /// b: `K_h(1 − x)`.
    ComplementSplit,
    /// b: `s_x`, the ball trace.
    BallTrace,
    /// b: `i`-th block of the `i`-th element.
    BlockAdversaries,
}

/// Per-step data; only the fields a step uses need to be set.
#[derive(Debug, Clone, Default)]
pub struct StepParams {
    pub target: Option<RelationKind>,
    pub profile: Option<BlockProfile>,
    pub codes: Option<CodeFamily>,
    pub q: Option<Rat>,
    pub l: usize,
    /// Block widths for tuple steps; `2^n` when absent.
    pub widths: Option<Vec<u128>>,
}

impl StepParams {
    pub fn to(target: RelationKind) -> Self {
        StepParams {
            target: Some(target),
            ..Default::default()
        }
    }

    fn profile(&self) -> Result<&BlockProfile> {
        self.profile
            .as_ref()
            .ok_or_else(|| Error::MissingArtifact("block profile".into()))
    }

    fn codes(&self) -> Result<&CodeFamily> {
        self.codes
            .as_ref()
            .ok_or_else(|| Error::MissingArtifact("code family".into()))
    }

    fn widths(&self, len: usize) -> Result<Vec<u128>> {
        match &self.widths {
            Some(w) if w.len() == len => Ok(w.clone()),
            Some(w) => Err(Error::LengthMismatch(w.len(), len)),
            None => (0..len)
                .map(|n| {
                    if n >= 100 {
                        Err(Error::RangeExceeded(format!("2^{n}-bit blocks")))
                    } else {
                        Ok(1u128 << n)
                    }
                })
                .collect(),
        }
    }
}

fn dedup(mut v: Vec<Element>) -> Vec<Element> {
    let mut seen = Vec::with_capacity(v.len());
    v.retain(|e| {
        if seen.contains(e) {
            false
        } else {
            seen.push(e.clone());
            true
        }
    });
    v
}

fn all_tuples(members: &[Element], l: usize) -> Result<Vec<Vec<&[Nat]>>> {
    let funcs = members
        .iter()
        .map(|m| m.func())
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Vec<&[Nat]>> = vec![vec![]];
    for _ in 0..l {
        out = out
            .into_iter()
            .flat_map(|t| {
                funcs.iter().map(move |f| {
                    let mut t = t.clone();
                    t.push(*f);
                    t
                })
            })
            .collect();
    }
    Ok(out)
}

/// The d-side family map of `step`. Output relation is `params.target`
/// (or the source relation when unset).
pub fn transform_witness_d(
    step: StepId,
    g: &WitnessFamily,
    params: &StepParams,
) -> Result<WitnessFamily> {
    if g.role != Role::D {
        return Err(Error::TypeMismatch(
            "d-side step applied to a b-side family".into(),
        ));
    }
    let members: Vec<Element> = match step {
        StepId::Interleave | StepId::Doubling => {
            let funcs = g
                .members
                .iter()
                .map(|m| m.func())
                .collect::<Result<Vec<_>>>()?;
            let mut out = Vec::with_capacity(funcs.len() * funcs.len());
            for a in &funcs {
                for b in &funcs {
                    out.push(Element::Func(interleave(a, b)?));
                }
            }
            out
        }
        StepId::SplitBlocks => g
            .members
            .iter()
            .map(|m| Ok(Element::Func(split_k(params.profile()?, m.bits()?)?.values)))
            .collect::<Result<_>>()?,
        StepId::ComplementConcat => g
            .members
            .iter()
            .map(|m| {
                let x = BlockFunc::new(params.profile()?.clone(), m.func()?.to_vec())?;
                Ok(Element::Bits(concat_l(&x).complement()))
            })
            .collect::<Result<_>>()?,
        StepId::EncodeIndex => g
            .members
            .iter()
            .map(|m| {
                Ok(Element::Func(
                    encode_index(m.func()?, params.codes()?)?.values,
                ))
            })
            .collect::<Result<_>>()?,
        StepId::BlockTuples => {
            let len = g
                .members
                .first()
                .map_or(0, |m| m.func().map_or(0, |f| f.len()));
            let widths = params.widths(len)?;
            all_tuples(&g.members, params.l)?
                .into_iter()
                .map(|t| {
                    if let Some(f) = t.iter().find(|f| f.len() != len) {
                        return Err(Error::LengthMismatch(f.len(), len));
                    }
                    let v = (0..len)
                        .map(|n| {
                            block_concat_width(
                                &t.iter().map(|f| &f[n]).collect::<Vec<_>>(),
                                widths[n],
                                n,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Element::Func(v))
                })
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::TypeMismatch(format!(
                "{step:?} is not a d-side step"
            )))
        }
    };
    Ok(WitnessFamily::new(
        Role::D,
        params.target.clone().unwrap_or_else(|| g.relation.clone()),
        members,
    ))
}

/// The b-side family map of `step`.
pub fn transform_witness_b(
    step: StepId,
    f: &WitnessFamily,
    params: &StepParams,
) -> Result<WitnessFamily> {
    if f.role != Role::B {
        return Err(Error::TypeMismatch(
            "b-side step applied to a d-side family".into(),
        ));
    }
    let members: Vec<Element> = match step {
        StepId::Projection => {
            let mut out = Vec::with_capacity(2 * f.len());
            for m in &f.members {
                let (e, o) = even_odd_split(m.func()?)?;
                out.push(Element::Func(e));
                out.push(Element::Func(o));
            }
            dedup(out)
        }
        StepId::ComplementConcat => f
            .members
            .iter()
            .map(|m| {
                let x = BlockFunc::new(params.profile()?.clone(), m.func()?.to_vec())?;
                Ok(Element::Bits(concat_l(&x).complement()))
            })
            .collect::<Result<_>>()?,
        StepId::ComplementSplit => f
            .members
            .iter()
            .map(|m| {
                Ok(Element::Func(
                    split_k(params.profile()?, &m.bits()?.complement())?.values,
                ))
            })
            .collect::<Result<_>>()?,
        StepId::BallTrace => {
            let codes = params.codes()?;
            let q = params.q.clone().unwrap_or_else(|| codes.q.clone());
            f.members
                .iter()
                .map(|m| {
                    let x = BlockFunc::new(codes.profile.clone(), m.func()?.to_vec())?;
                    Ok(Element::Slalom(ball_trace(&x, codes, &q)?))
                })
                .collect::<Result<_>>()?
        }
        StepId::BlockAdversaries => {
            let mut out = Vec::new();
            for m in &f.members {
                let s = m.slalom()?;
                let widths = params.widths(s.len())?;
                out.extend(
                    block_extract_widths(s, params.l, &widths)?
                        .into_iter()
                        .map(Element::Func),
                );
            }
            dedup(out)
        }
        _ => {
            return Err(Error::TypeMismatch(format!(
                "{step:?} is not a b-side step"
            )))
        }
    };
    Ok(WitnessFamily::new(
        Role::B,
        params.target.clone().unwrap_or_else(|| f.relation.clone()),
        members,
    ))
}
