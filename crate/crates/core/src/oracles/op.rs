//! Query operators as sparse label-rewriting rules.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::isometry::{Punctured, StageOp};
use crate::state::label::{KeyLayout, Label, Layout, Schema};
use crate::state::purified::{PurifiedState, C64};

/// Path-recording primitives acting on the A register and one (S, T) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    FL,
    FR,
    FLdag,
    FRdag,
    VL,
    VR,
    VLdag,
    VRdag,
    /// |y⟩_A |L ∪ {(x,y)}⟩ ↦ |x⟩_A |y⟩_{A′} |L⟩.
    FLextract,
    /// |x⟩_A |R ∪ {(x,y)}⟩ ↦ |y⟩_A |x⟩_{A′} |R⟩.
    FRextract,
    FLextractDag,
    FRextractDag,
}

impl Prim {
    pub fn adjoint(self) -> Prim {
        use Prim::*;
        match self {
            FL => FLdag,
            FLdag => FL,
            FR => FRdag,
            FRdag => FR,
            VL => VLdag,
            VLdag => VL,
            VR => VRdag,
            VRdag => VR,
            FLextract => FLextractDag,
            FLextractDag => FLextract,
            FRextract => FRextractDag,
            FRextractDag => FRextract,
        }
    }
}

/// Where an XOR mask on A reads its key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskSource {
    Literal(u8),
    /// Key register 0, 1 or 2 (K₁, K₂, K₃).
    Register(usize),
}

pub type Mat = DMatrix<C64>;

#[derive(Clone)]
pub enum Op {
    Identity,
    Path { prim: Prim, pair: usize },
    Xor(MaskSource),
    /// Unitary on A.
    UnitaryA(Arc<Mat>),
    /// Unitary on A ⊗ B with index a·D_B + b.
    UnitaryAB(Arc<Mat>),
    Stage(StageOp),
    Punctured(Arc<Punctured>, bool),
    /// Applied left to right.
    Seq(Vec<Op>),
    Sum(Vec<(C64, Op)>),
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Identity => write!(f, "id"),
            Op::Path { prim, pair } => write!(f, "{prim:?}[{pair}]"),
            Op::Xor(MaskSource::Literal(k)) => write!(f, "X^{k}"),
            Op::Xor(MaskSource::Register(i)) => write!(f, "X^k{}", i + 1),
            Op::UnitaryA(m) => write!(f, "U{}", m.nrows()),
            Op::UnitaryAB(m) => write!(f, "A{}", m.nrows()),
            Op::Stage(s) => write!(f, "{s:?}"),
            Op::Punctured(p, dag) => write!(f, "S•[{}]{}", p.family.name(), if *dag { "†" } else { "" }),
            Op::Seq(ops) => {
                write!(f, "(")?;
                for (i, o) in ops.iter().rev().enumerate() {
                    if i > 0 {
                        write!(f, "·")?;
                    }
                    write!(f, "{o:?}")?;
                }
                write!(f, ")")
            }
            Op::Sum(terms) => {
                write!(f, "(")?;
                for (i, (c, o)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}·{o:?}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

impl Op {
    pub fn path(prim: Prim, pair: usize) -> Op {
        Op::Path { prim, pair }
    }

    /// Matrix product A·B·C (C acts first).
    pub fn product<I: IntoIterator<Item = Op>>(factors: I) -> Op {
        let mut v: Vec<Op> = factors.into_iter().collect();
        v.reverse();
        Op::Seq(v)
    }

    pub fn sum<I: IntoIterator<Item = (f64, Op)>>(terms: I) -> Op {
        Op::Sum(terms.into_iter().map(|(c, o)| (C64::new(c, 0.0), o)).collect())
    }

    /// a − b.
    pub fn minus(a: Op, b: Op) -> Op {
        Op::sum([(1.0, a), (-1.0, b)])
    }

    /// X·(id − Y·Y†) + (id − X·X†)·Y† expanded, for left part X and right part Y.
    fn combine(left: Prim, right: Prim, pair: usize) -> Op {
        let p = |prim| Op::path(prim, pair);
        Op::sum([
            (1.0, p(left)),
            (-1.0, Op::product([p(left), p(right), p(right.adjoint())])),
            (1.0, p(right.adjoint())),
            (-1.0, Op::product([p(left), p(left.adjoint()), p(right.adjoint())])),
        ])
    }

    /// F = F^L(id − F^R F^{R†}) + (id − F^L F^{L†}) F^{R†}.
    pub fn f(pair: usize) -> Op {
        Op::combine(Prim::FL, Prim::FR, pair)
    }

    pub fn f_dag(pair: usize) -> Op {
        Op::f(pair).adjoint()
    }

    /// V = V^L(id − V^R V^{R†}) + (id − V^L V^{L†}) V^{R†}.
    pub fn v(pair: usize) -> Op {
        Op::combine(Prim::VL, Prim::VR, pair)
    }

    pub fn v_dag(pair: usize) -> Op {
        Op::v(pair).adjoint()
    }

    pub fn xor_key(i: usize) -> Op {
        Op::Xor(MaskSource::Register(i))
    }

    pub fn adjoint(&self) -> Op {
        match self {
            Op::Identity => Op::Identity,
            Op::Path { prim, pair } => Op::Path { prim: prim.adjoint(), pair: *pair },
            Op::Xor(m) => Op::Xor(*m),
            Op::UnitaryA(m) => Op::UnitaryA(Arc::new(m.adjoint())),
            Op::UnitaryAB(m) => Op::UnitaryAB(Arc::new(m.adjoint())),
            Op::Stage(s) => Op::Stage(s.adjoint()),
            Op::Punctured(p, dag) => Op::Punctured(p.clone(), !dag),
            Op::Seq(ops) => Op::Seq(ops.iter().rev().map(Op::adjoint).collect()),
            Op::Sum(terms) => Op::Sum(terms.iter().map(|(c, o)| (c.conj(), o.adjoint())).collect()),
        }
    }

    /// Schema of the output when applied to states of schema `s`.
    pub fn out_schema(&self, s: &Schema) -> Result<Schema> {
        match self {
            Op::Identity => Ok(*s),
            Op::Path { prim, pair } => {
                if *pair > 1 || (*pair == 1 && s.layout != Layout::Split) {
                    return Err(Error::SchemaMismatch(format!("relation pair {pair} absent in {s:?}")));
                }
                match prim {
                    Prim::FLextract | Prim::FRextract => {
                        if s.aux {
                            return Err(Error::SchemaMismatch("A′ already present".into()));
                        }
                        Ok(s.with_aux(true))
                    }
                    Prim::FLextractDag | Prim::FRextractDag => {
                        if !s.aux {
                            return Err(Error::SchemaMismatch("A′ absent".into()));
                        }
                        Ok(s.with_aux(false))
                    }
                    _ => Ok(*s),
                }
            }
            Op::Xor(MaskSource::Literal(k)) => {
                s.dim.elem(*k as usize)?;
                Ok(*s)
            }
            Op::Xor(MaskSource::Register(i)) => {
                let present = match s.keys {
                    KeyLayout::None => false,
                    KeyLayout::Outer => *i != 1,
                    KeyLayout::Full => *i < 3,
                };
                if present {
                    Ok(*s)
                } else {
                    Err(Error::SchemaMismatch(format!("key register {} absent in {s:?}", i + 1)))
                }
            }
            Op::UnitaryA(m) => {
                if m.nrows() != s.dim.n() || m.ncols() != s.dim.n() {
                    return Err(Error::SchemaMismatch(format!("unitary on A must be {0}x{0}", s.dim.n())));
                }
                Ok(*s)
            }
            Op::UnitaryAB(m) => {
                let d = s.dim.n() * s.b_dim as usize;
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::SchemaMismatch(format!("unitary on AB must be {d}x{d}")));
                }
                Ok(*s)
            }
            Op::Stage(st) => st.out_schema(s),
            Op::Punctured(p, dag) => p.out_schema(s, *dag),
            Op::Seq(ops) => ops.iter().try_fold(*s, |acc, o| o.out_schema(&acc)),
            Op::Sum(terms) => {
                let mut out: Option<Schema> = None;
                for (_, o) in terms {
                    let t = o.out_schema(s)?;
                    match out {
                        None => out = Some(t),
                        Some(prev) => prev.expect(&t, "sum terms")?,
                    }
                }
                out.ok_or_else(|| Error::SchemaMismatch("empty sum".into()))
            }
        }
    }

    /// Applies the operator to a state.
    pub fn apply(&self, s: &PurifiedState) -> Result<PurifiedState> {
        let schema = *s.schema();
        let out_schema = self.out_schema(&schema)?;
        match self {
            Op::Identity => Ok(s.clone()),
            Op::Seq(ops) => {
                let mut cur = s.clone();
                for o in ops {
                    cur = o.apply(&cur)?;
                }
                Ok(cur)
            }
            Op::Sum(terms) => {
                let mut acc = PurifiedState::zero(out_schema);
                for (c, o) in terms {
                    acc.axpy(*c, &o.apply(s)?)?;
                }
                Ok(acc)
            }
            _ => {
                let mut out: FxHashMap<Label, C64> = FxHashMap::default();
                for (l, c) in s.iter() {
                    self.rule(l, &schema, &mut |l2, c2| *out.entry(l2).or_default() += c * c2)?;
                }
                Ok(PurifiedState::from_map(out_schema, out))
            }
        }
    }

    /// Same result as `apply`, but evaluates composites label by label and merges
    /// only the final images. Faster for short products of small fan-out.
    pub fn apply_local(&self, s: &PurifiedState) -> Result<PurifiedState> {
        self.apply_local_capped(s, usize::MAX)
    }

    /// `apply_local` that gives up once the image holds more than `max_labels` labels.
    pub fn apply_local_capped(&self, s: &PurifiedState, max_labels: usize) -> Result<PurifiedState> {
        let schema = *s.schema();
        let out_schema = self.out_schema(&schema)?;
        let mut out: FxHashMap<Label, C64> = FxHashMap::default();
        out.reserve(s.len().min(max_labels));
        for (l, c) in s.iter() {
            self.local_column(l, &schema, *c, &mut |l2, c2| *out.entry(l2).or_default() += c2)?;
            if out.len() > max_labels {
                return Err(Error::Budget(format!("purified support exceeds {max_labels} labels")));
            }
        }
        Ok(PurifiedState::from_map(out_schema, out))
    }

    fn local_column(&self, l: &Label, s: &Schema, c: C64, emit: &mut dyn FnMut(Label, C64)) -> Result<()> {
        match self {
            Op::Identity => emit(l.clone(), c),
            Op::Seq(ops) => {
                let mut cur = vec![(l.clone(), c)];
                let mut sch = *s;
                for o in ops {
                    let mut next = Vec::new();
                    for (lab, cc) in &cur {
                        o.local_column(lab, &sch, *cc, &mut |l2, c2| next.push((l2, c2)))?;
                    }
                    sch = o.out_schema(&sch)?;
                    cur = next;
                }
                for (lab, cc) in cur {
                    emit(lab, cc);
                }
            }
            Op::Sum(terms) => {
                for (ct, o) in terms {
                    o.local_column(l, s, c * ct, emit)?;
                }
            }
            _ => self.rule(l, s, &mut |l2, c2| emit(l2, c * c2))?,
        }
        Ok(())
    }

    /// Image of one basis label as sorted (label, amplitude) terms.
    pub fn column(&self, label: &Label, schema: &Schema) -> Result<Vec<(Label, C64)>> {
        let out = self.apply(&PurifiedState::basis(*schema, label.clone())?)?;
        Ok(out.terms().into_iter().map(|(l, c)| (l.clone(), c)).collect())
    }

    /// Label-level rule for non-composite operators.
    fn rule(&self, l: &Label, s: &Schema, emit: &mut dyn FnMut(Label, C64)) -> Result<()> {
        match self {
            Op::Path { prim, pair } => path_rule(*prim, *pair, l, s, emit),
            Op::Xor(src) => {
                let k = match src {
                    MaskSource::Literal(k) => *k,
                    MaskSource::Register(i) => l.keys[*i].ok_or_else(|| {
                        Error::SchemaMismatch(format!("key register {} empty on {l:?}", i + 1))
                    })?,
                };
                let mut o = l.clone();
                o.a ^= k;
                emit(o, one());
                Ok(())
            }
            Op::UnitaryA(m) => {
                let col = l.a as usize;
                for row in 0..m.nrows() {
                    let c = m[(row, col)];
                    if c.norm() > 0.0 {
                        let mut o = l.clone();
                        o.a = row as u8;
                        emit(o, c);
                    }
                }
                Ok(())
            }
            Op::UnitaryAB(m) => {
                let nb = s.b_dim as usize;
                let col = l.a as usize * nb + l.b as usize;
                for row in 0..m.nrows() {
                    let c = m[(row, col)];
                    if c.norm() > 0.0 {
                        let mut o = l.clone();
                        o.a = (row / nb) as u8;
                        o.b = (row % nb) as u16;
                        emit(o, c);
                    }
                }
                Ok(())
            }
            Op::Stage(st) => st.rule(l, s, emit),
            Op::Punctured(p, dag) => p.rule(l, s, *dag, emit),
            Op::Identity | Op::Seq(_) | Op::Sum(_) => unreachable!("composite operators apply state-wise"),
        }
    }
}

fn path_rule(prim: Prim, pair: usize, l: &Label, s: &Schema, emit: &mut dyn FnMut(Label, C64)) -> Result<()> {
    let n = s.dim.n();
    let inv_sqrt_n = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let (si, ti) = (2 * pair, 2 * pair + 1);
    let left = &l.rels[si];
    let right = &l.rels[ti];
    match prim {
        Prim::FL => {
            let x = l.a;
            let used = left.im();
            for y in s.dim.values().filter(|y| !used.contains(*y)) {
                let mut o = l.clone();
                o.a = y;
                o.rels[si] = left.with((x, y));
                emit(o, inv_sqrt_n);
            }
        }
        Prim::FR => {
            let y = l.a;
            let used = right.dom();
            for x in s.dim.values().filter(|x| !used.contains(*x)) {
                let mut o = l.clone();
                o.a = x;
                o.rels[ti] = right.with((x, y));
                emit(o, inv_sqrt_n);
            }
        }
        Prim::FLdag => {
            let y = l.a;
            if left.count_im(y) == 1 {
                let &(x, _) = left.pairs().iter().find(|p| p.1 == y).expect("counted");
                let mut o = l.clone();
                o.a = x;
                o.rels[si] = left.without((x, y)).expect("present");
                emit(o, inv_sqrt_n);
            }
        }
        Prim::FRdag => {
            let x = l.a;
            if right.count_dom(x) == 1 {
                let &(_, y) = right.pairs().iter().find(|p| p.0 == x).expect("counted");
                let mut o = l.clone();
                o.a = y;
                o.rels[ti] = right.without((x, y)).expect("present");
                emit(o, inv_sqrt_n);
            }
        }
        Prim::VL => {
            if left.len() + right.len() >= n {
                return Err(Error::Precondition(format!("V^L needs |L|+|R| < N on {l:?}")));
            }
            let x = l.a;
            let used = left.im().union(right.im());
            let c = C64::new(1.0 / ((n - used.len()) as f64).sqrt(), 0.0);
            for y in s.dim.values().filter(|y| !used.contains(*y)) {
                let mut o = l.clone();
                o.a = y;
                o.rels[si] = left.with((x, y));
                emit(o, c);
            }
        }
        Prim::VR => {
            if left.len() + right.len() >= n {
                return Err(Error::Precondition(format!("V^R needs |L|+|R| < N on {l:?}")));
            }
            let y = l.a;
            let used = left.dom().union(right.dom());
            let c = C64::new(1.0 / ((n - used.len()) as f64).sqrt(), 0.0);
            for x in s.dim.values().filter(|x| !used.contains(*x)) {
                let mut o = l.clone();
                o.a = x;
                o.rels[ti] = right.with((x, y));
                emit(o, c);
            }
        }
        Prim::VLdag => {
            // pre-images violating |L|+|R| < N contribute nothing
            let y = l.a;
            if left.count_im(y) == 1 && !right.im().contains(y) {
                let &(x, _) = left.pairs().iter().find(|p| p.1 == y).expect("counted");
                let rest = left.without((x, y)).expect("present");
                if rest.len() + right.len() < n {
                    let used = rest.im().union(right.im()).len();
                    let mut o = l.clone();
                    o.a = x;
                    o.rels[si] = rest;
                    emit(o, C64::new(1.0 / ((n - used) as f64).sqrt(), 0.0));
                }
            }
        }
        Prim::VRdag => {
            let x = l.a;
            if right.count_dom(x) == 1 && !left.dom().contains(x) {
                let &(_, y) = right.pairs().iter().find(|p| p.0 == x).expect("counted");
                let rest = right.without((x, y)).expect("present");
                if rest.len() + left.len() < n {
                    let used = rest.dom().union(left.dom()).len();
                    let mut o = l.clone();
                    o.a = y;
                    o.rels[ti] = rest;
                    emit(o, C64::new(1.0 / ((n - used) as f64).sqrt(), 0.0));
                }
            }
        }
        Prim::FLextract => {
            let y = l.a;
            if left.is_i_distinct() && left.count_im(y) == 1 {
                let &(x, _) = left.pairs().iter().find(|p| p.1 == y).expect("counted");
                let mut o = l.clone();
                o.a = x;
                o.aux = Some(y);
                o.rels[si] = left.without((x, y)).expect("present");
                emit(o, one());
            }
        }
        Prim::FLextractDag => {
            let x = l.a;
            let y = l.aux.ok_or_else(|| Error::SchemaMismatch("A′ empty".into()))?;
            if left.is_i_distinct() && !left.im().contains(y) {
                let mut o = l.clone();
                o.a = y;
                o.aux = None;
                o.rels[si] = left.with((x, y));
                emit(o, one());
            }
        }
        Prim::FRextract => {
            let x = l.a;
            if right.is_d_distinct() && right.count_dom(x) == 1 {
                let &(_, y) = right.pairs().iter().find(|p| p.0 == x).expect("counted");
                let mut o = l.clone();
                o.a = y;
                o.aux = Some(x);
                o.rels[ti] = right.without((x, y)).expect("present");
                emit(o, one());
            }
        }
        Prim::FRextractDag => {
            let y = l.a;
            let x = l.aux.ok_or_else(|| Error::SchemaMismatch("A′ empty".into()))?;
            if right.is_d_distinct() && !right.dom().contains(x) {
                let mut o = l.clone();
                o.a = x;
                o.aux = None;
                o.rels[ti] = right.with((x, y));
                emit(o, one());
            }
        }
    }
    Ok(())
}
