//! Operator norms of rule-defined maps restricted to a truncated domain.
//!
//! The restricted matrix splits into connected components of the bipartite
//! column/row graph. Each component reachable from a representative column is
//! materialized and its largest singular value computed densely or by power
//! iteration.

use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::op::Op;
use crate::state::label::{Label, Schema};
use crate::state::purified::C64;

#[derive(Clone, Debug)]
pub struct NormOptions {
    /// Cap on columns plus rows held by one component.
    pub max_component_labels: usize,
    /// Cap on total columns visited.
    pub max_columns: usize,
    pub max_time: Duration,
    /// Components with at most this many columns are solved densely.
    pub dense_limit: usize,
    pub power_tol: f64,
    pub power_max_iter: usize,
    /// Also verify that M†M has spectrum in {0, 1}.
    pub spectrum: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            max_component_labels: 4_000_000,
            max_columns: 50_000_000,
            max_time: Duration::from_secs(600),
            dense_limit: 2000,
            power_tol: 1e-12,
            power_max_iter: 100_000,
            spectrum: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NormReport {
    pub norm: f64,
    pub representatives: usize,
    pub components: usize,
    pub columns: usize,
    pub rows: usize,
    pub largest_component: usize,
    /// max over eigenvalues λ of M†M of min(|λ|, |λ − 1|), when requested.
    pub spectrum_residual: Option<f64>,
    /// Components solved by power iteration.
    pub iterative_components: usize,
    pub seconds: f64,
}

fn fingerprint(l: &Label) -> u64 {
    let mut h = FxHasher::default();
    l.hash(&mut h);
    h.finish()
}

struct Component {
    /// Sparse columns: (row index, entry).
    cols: Vec<Vec<(u32, C64)>>,
    nrows: usize,
}

impl Component {
    fn gram(&self) -> DMatrix<C64> {
        let nc = self.cols.len();
        let mut by_row: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                by_row[r as usize].push((j as u32, v));
            }
        }
        let mut g = DMatrix::<C64>::zeros(nc, nc);
        for entries in &by_row {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    g[(i as usize, j as usize)] += a.conj() * b;
                }
            }
        }
        g
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); self.nrows];
        for (col, &x) in self.cols.iter().zip(v) {
            for &(r, c) in col {
                w[r as usize] += c * x;
            }
        }
        w
    }

    fn apply_adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.cols.iter().map(|col| col.iter().map(|&(r, c)| c.conj() * w[r as usize]).sum()).collect()
    }

    /// Largest singular value by power iteration on M†M.
    fn power_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut v: Vec<C64> = (0..self.cols.len()).map(|_| C64::new(rng.random::<f64>() + 0.5, 0.0)).collect();
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if nv == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let w = self.apply(&v);
            let lambda = w.iter().map(|x| x.norm_sqr()).sum::<f64>();
            if lambda == 0.0 || (lambda - last).abs() <= tol * lambda {
                return Ok(lambda.sqrt());
            }
            last = lambda;
            v = self.apply_adjoint(&w);
        }
        Err(Error::Budget(format!("power iteration did not converge in {max_iter} steps")))
    }
}

/// One connected component of the restricted matrix.
pub struct ComponentMatrix {
    pub columns: Vec<Label>,
    pub rows: Vec<Label>,
    cols: Vec<Vec<(u32, C64)>>,
}

impl ComponentMatrix {
    pub fn dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.columns.len());
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r as usize, j)] += v;
            }
        }
        m
    }

    fn into_sparse(self) -> Component {
        Component { nrows: self.rows.len(), cols: self.cols }
    }
}

/// Collects the component of `seed` by alternating column expansion and
/// adjoint row expansion, keeping only columns accepted by `domain`.
#[allow(clippy::too_many_arguments)]
pub fn component(
    op: &Op,
    adj: &Op,
    schema: &Schema,
    out_schema: &Schema,
    seed: Label,
    domain: &dyn Fn(&Label) -> bool,
    max_labels: usize,
    deadline: Option<(Instant, Duration)>,
) -> Result<ComponentMatrix> {
    let mut col_index: FxHashMap<Label, u32> = FxHashMap::default();
    let mut row_index: FxHashMap<Label, u32> = FxHashMap::default();
    let mut rows: Vec<Label> = Vec::new();
    let mut cols: Vec<Vec<(u32, C64)>> = vec![Vec::new()];
    let mut queue: Vec<Label> = vec![seed.clone()];
    col_index.insert(seed, 0);
    let mut head = 0;
    while head < queue.len() {
        if let Some((start, limit)) = deadline {
            if start.elapsed() > limit {
                return Err(Error::Budget(format!("norm computation exceeded {limit:?}")));
            }
        }
        let ci = head;
        head += 1;
        for (r, v) in op.column(&queue[ci].clone(), schema)? {
            if v.norm() == 0.0 {
                continue;
            }
            let ri = match row_index.get(&r) {
                Some(&i) => i,
                None => {
                    let i = rows.len() as u32;
                    row_index.insert(r.clone(), i);
                    for (c2, w) in adj.column(&r, out_schema)? {
                        if w.norm() == 0.0 || col_index.contains_key(&c2) || !domain(&c2) {
                            continue;
                        }
                        col_index.insert(c2.clone(), queue.len() as u32);
                        queue.push(c2);
                        cols.push(Vec::new());
                    }
                    rows.push(r);
                    i
                }
            };
            cols[ci].push((ri, v));
        }
        if col_index.len() + row_index.len() > max_labels {
            return Err(Error::Budget(format!("component exceeds {max_labels} labels")));
        }
    }
    Ok(ComponentMatrix { columns: queue, rows, cols })
}

/// ‖M P‖ where M is `op` acting on `schema` and P projects onto the labels
/// accepted by `domain`. Every component containing a label of the domain must
/// be equivalent to one containing a representative.
pub fn restricted_norm<I>(
    op: &Op,
    schema: &Schema,
    reps: I,
    domain: &dyn Fn(&Label) -> bool,
    opts: &NormOptions,
) -> Result<NormReport>
where
    I: IntoIterator<Item = Label>,
{
    let start = Instant::now();
    let out_schema = op.out_schema(schema)?;
    let adj = op.adjoint();
    let mut visited: FxHashSet<u64> = FxHashSet::default();
    let mut rep = NormReport::default();
    let mut residual: f64 = 0.0;

    for seed in reps {
        rep.representatives += 1;
        if !domain(&seed) || visited.contains(&fingerprint(&seed)) {
            continue;
        }
        let cm = component(
            op,
            &adj,
            schema,
            &out_schema,
            seed,
            domain,
            opts.max_component_labels,
            Some((start, opts.max_time)),
        )?;
        for c in &cm.columns {
            visited.insert(fingerprint(c));
        }
        rep.columns += cm.columns.len();
        rep.rows += cm.rows.len();
        rep.components += 1;
        rep.largest_component = rep.largest_component.max(cm.columns.len());
        if rep.columns > opts.max_columns {
            return Err(Error::Budget(format!("more than {} columns visited", opts.max_columns)));
        }
        let comp = cm.into_sparse();
        let norm = if comp.cols.len() <= opts.dense_limit {
            let eig = SymmetricEigen::new(comp.gram()).eigenvalues;
            if opts.spectrum {
                for &l in eig.iter() {
                    residual = residual.max(l.abs().min((l - 1.0).abs()));
                }
            }
            eig.iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
        } else {
            if opts.spectrum {
                return Err(Error::Budget(format!(
                    "spectrum check needs a dense component, got {} columns",
                    comp.cols.len()
                )));
            }
            rep.iterative_components += 1;
            comp.power_norm(opts.power_tol, opts.power_max_iter)?
        };
        rep.norm = rep.norm.max(norm);
    }
    if opts.spectrum {
        rep.spectrum_residual = Some(residual);
    }
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Largest singular value of a dense matrix.
pub fn dense_norm(m: &DMatrix<C64>) -> f64 {
    let g = m.adjoint() * m;
    SymmetricEigen::new(g).eigenvalues.iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Null space of a dense matrix: right singular vectors with singular value below `tol`.
pub fn null_space(m: &DMatrix<C64>, tol: f64) -> Vec<DVector<C64>> {
    let g = m.adjoint() * m;
    let eig = SymmetricEigen::new(g);
    (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].max(0.0).sqrt() < tol)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::op::Prim;
    use crate::relations::{relations_up_to, Dim, Distinctness, Relation};

    fn sum_truncated(dim: Dim, t: usize) -> Vec<Label> {
        let ls = relations_up_to(dim, t, Distinctness::Outputs);
        let rs = relations_up_to(dim, t, Distinctness::Inputs);
        let mut out = Vec::new();
        for a in dim.values() {
            for l in &ls {
                for r in rs.iter().filter(|r| l.len() + r.len() <= t) {
                    out.push(Label::joint(a, l.clone(), r.clone()));
                }
            }
        }
        out
    }

    fn in_domain(t: usize) -> impl Fn(&Label) -> bool {
        move |l: &Label| {
            l.rels[0].is_i_distinct() && l.rels[1].is_d_distinct() && l.rels[0].len() + l.rels[1].len() <= t
        }
    }

    #[test]
    fn fl_dagger_fl_minus_identity_is_t_over_n() {
        // F^{L,†}F^L = (1 − |L|/N) on I-distinct inputs
        let dim = Dim::new(4).unwrap();
        let schema = Schema::joint(dim);
        let fl = Op::path(Prim::FL, 0);
        let op = Op::minus(Op::product([Op::path(Prim::FLdag, 0), fl]), Op::Identity);
        for t in 1..=2 {
            let r = restricted_norm(&op, &schema, sum_truncated(dim, t), &in_domain(t), &NormOptions::default())
                .unwrap();
            assert!((r.norm - t as f64 / 4.0).abs() < 1e-12, "{}", r.norm);
        }
    }

    #[test]
    fn f_family_is_a_contraction() {
        let dim = Dim::new(4).unwrap();
        let schema = Schema::joint(dim);
        for op in [Op::f(0), Op::f_dag(0), Op::path(Prim::FL, 0), Op::path(Prim::FR, 0)] {
            let r = restricted_norm(&op, &schema, sum_truncated(dim, 2), &in_domain(2), &NormOptions::default())
                .unwrap();
            assert!(r.norm <= 1.0 + 1e-12, "{op:?} {}", r.norm);
        }
    }

    #[test]
    fn v_is_a_partial_isometry() {
        let dim = Dim::new(4).unwrap();
        let schema = Schema::joint(dim);
        let opts = NormOptions { spectrum: true, ..NormOptions::default() };
        let r = restricted_norm(&Op::v(0), &schema, sum_truncated(dim, 2), &in_domain(2), &opts).unwrap();
        assert!(r.spectrum_residual.unwrap() < 1e-9);
        assert!((r.norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let dim = Dim::new(4).unwrap();
        let schema = Schema::joint(dim);
        let op = Op::minus(Op::v(0), Op::f(0));
        let dense = restricted_norm(&op, &schema, sum_truncated(dim, 2), &in_domain(2), &NormOptions::default())
            .unwrap();
        let sparse_opts = NormOptions { dense_limit: 0, ..NormOptions::default() };
        let sparse = restricted_norm(&op, &schema, sum_truncated(dim, 2), &in_domain(2), &sparse_opts).unwrap();
        assert!((dense.norm - sparse.norm).abs() < 1e-6, "{} {}", dense.norm, sparse.norm);
    }

    #[test]
    fn component_budget_is_enforced() {
        let dim = Dim::new(4).unwrap();
        let schema = Schema::joint(dim);
        let opts = NormOptions { max_component_labels: 1, ..NormOptions::default() };
        let seed = Label::joint(0, Relation::empty(), Relation::empty());
        let r = restricted_norm(&Op::f(0), &schema, [seed], &in_domain(1), &opts);
        assert!(matches!(r, Err(Error::Budget(_))));
    }

    #[test]
    fn null_space_of_rank_one() {
        let one = C64::new(1.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[one, one, one, one]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-10);
        assert!((dense_norm(&m) - 2.0).abs() < 1e-12);
    }
}
