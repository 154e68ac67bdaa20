//! Taylor-series integration of polynomial ODEs `ż = F(z)`.
//!
//! The right-hand side is compiled into a tape of products of series, so the
//! Taylor coefficients of the solution are produced order by order with
//! automatic differentiation. The same tape drives the variational equation
//! `Ṁ = DF(z) M`. Steps follow the Jorba–Zou size control and every step keeps
//! its coefficients, giving dense output of arbitrary points for free.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};

#[derive(Clone, Debug)]
enum Node {
    Var(usize),
    Mul(usize, usize),
}

/// Linear combination of tape nodes plus a constant.
#[derive(Clone, Debug, Default)]
struct Output {
    constant: f64,
    terms: Vec<(f64, usize)>,
}

/// A compiled set of polynomials in `nvars` variables sharing monomials.
#[derive(Clone, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    outputs: Vec<Output>,
}

impl Tape {
    pub fn compile(polys: &[&Polynomial<f64>]) -> Self {
        let nvars = polys.first().map_or(0, |p| p.nvars());
        let mut nodes: Vec<Node> = (0..nvars).map(Node::Var).collect();
        let mut memo: HashMap<Monomial, usize> = HashMap::new();
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 1;
            memo.insert(e, i);
        }
        fn node_for(e: &Monomial, nodes: &mut Vec<Node>, memo: &mut HashMap<Monomial, usize>) -> usize {
            if let Some(&id) = memo.get(e) {
                return id;
            }
            let last = e.iter().rposition(|&k| k > 0).expect("non-constant monomial");
            let mut rest = e.clone();
            rest[last] -= 1;
            let id = if rest.iter().all(|&k| k == 0) {
                last
            } else {
                let a = node_for(&rest, nodes, memo);
                nodes.push(Node::Mul(a, last));
                nodes.len() - 1
            };
            memo.insert(e.clone(), id);
            id
        }
        let outputs = polys
            .iter()
            .map(|p| {
                let mut out = Output::default();
                for (e, &c) in p.terms() {
                    if e.iter().all(|&k| k == 0) {
                        out.constant += c;
                    } else {
                        let id = node_for(e, &mut nodes, &mut memo);
                        out.terms.push((c, id));
                    }
                }
                out
            })
            .collect();
        Self { nodes, outputs }
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Taylor coefficients of all outputs along an input series
    /// (`series[k]` holds order `k` of every variable).
    pub fn eval_series(&self, series: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut ev = SeriesEval::new(self, series.len());
        let mut out = vec![Vec::with_capacity(series.len()); self.outputs.len()];
        for zk in series {
            for (o, v) in out.iter_mut().zip(ev.push(zk)) {
                o.push(v);
            }
        }
        out
    }

    /// Evaluates all outputs at a point.
    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            v[i] = match *node {
                Node::Var(j) => z[j],
                Node::Mul(a, b) => v[a] * v[b],
            };
        }
        self.outputs.iter().map(|o| o.constant + o.terms.iter().map(|&(c, id)| c * v[id]).sum::<f64>()).collect()
    }
}

/// Incremental Taylor-coefficient evaluator of a tape along a series whose
/// coefficients are supplied one order at a time.
struct SeriesEval<'a> {
    tape: &'a Tape,
    /// `node_series[node][k]`.
    node_series: Vec<Vec<f64>>,
}

impl<'a> SeriesEval<'a> {
    fn new(tape: &'a Tape, order: usize) -> Self {
        Self { tape, node_series: vec![Vec::with_capacity(order + 1); tape.nodes.len()] }
    }

    /// Pushes order `k` of the input variables and returns order `k` of all
    /// outputs. Inputs of orders `< k` must already have been pushed.
    fn push(&mut self, zk: &[f64]) -> Vec<f64> {
        let k = self.node_series.first().map_or(0, Vec::len);
        for i in 0..self.tape.nodes.len() {
            let v = match self.tape.nodes[i] {
                Node::Var(j) => zk[j],
                Node::Mul(a, b) => {
                    let (sa, sb) = (&self.node_series[a], &self.node_series[b]);
                    let mut acc = 0.0;
                    for j in 0..=k {
                        acc += sa[j] * sb[k - j];
                    }
                    acc
                }
            };
            self.node_series[i].push(v);
        }
        self.tape
            .outputs
            .iter()
            .map(|o| {
                let c = if k == 0 { o.constant } else { 0.0 };
                c + o.terms.iter().map(|&(w, id)| w * self.node_series[id][k]).sum::<f64>()
            })
            .collect()
    }
}

/// An autonomous polynomial system with optional variational equations.
#[derive(Clone, Debug)]
pub struct PolySystem {
    dim: usize,
    rhs: Tape,
    /// Jacobian entries `∂F_i/∂z_j` row-major, compiled on a shared tape.
    jac: Tape,
}

impl PolySystem {
    pub fn new(rhs: &[Polynomial<f64>]) -> Self {
        let dim = rhs.len();
        let jac_polys: Vec<Polynomial<f64>> = rhs.iter().flat_map(|f| (0..dim).map(move |j| f.derivative(j))).collect();
        Self {
            dim,
            rhs: Tape::compile(&rhs.iter().collect::<Vec<_>>()),
            jac: Tape::compile(&jac_polys.iter().collect::<Vec<_>>()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rhs(&self, z: &[f64]) -> Vec<f64> {
        self.rhs.eval(z)
    }

    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.jac.eval(z))
    }

    /// Taylor coefficients `z_0 … z_order` of the solution through `z0`.
    pub fn series(&self, z0: &[f64], order: usize) -> Vec<Vec<f64>> {
        let mut ev = SeriesEval::new(&self.rhs, order);
        let mut coeffs = vec![z0.to_vec()];
        for k in 0..order {
            let fk = ev.push(&coeffs[k]);
            coeffs.push(fk.iter().map(|v| v / (k + 1) as f64).collect());
        }
        coeffs
    }

    /// Taylor coefficients of the state and of the fundamental matrix `M`
    /// starting from `(z0, m0)`.
    pub fn series_variational(
        &self,
        z0: &[f64],
        m0: &DMatrix<f64>,
        order: usize,
    ) -> (Vec<Vec<f64>>, Vec<DMatrix<f64>>) {
        let z = self.series(z0, order);
        let mut jev = SeriesEval::new(&self.jac, order);
        let d = self.dim;
        let mut jk: Vec<DMatrix<f64>> = Vec::with_capacity(order);
        let mut ms = vec![m0.clone()];
        for k in 0..order {
            jk.push(DMatrix::from_row_slice(d, d, &jev.push(&z[k])));
            let mut acc = DMatrix::zeros(d, m0.ncols());
            for j in 0..=k {
                acc.gemm(1.0, &jk[j], &ms[k - j], 1.0);
            }
            ms.push(acc / (k + 1) as f64);
        }
        (z, ms)
    }
}

/// Integrator settings.
#[derive(Clone, Copy, Debug)]
pub struct TaylorOptions {
    /// Relative local tolerance.
    pub tol: f64,
    pub order: usize,
    pub max_steps: usize,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self { tol: 1e-10, order: 24, max_steps: 200_000 }
    }
}

#[derive(Clone, Debug)]
struct Step {
    t0: f64,
    z: Vec<Vec<f64>>,
    m: Option<Vec<DMatrix<f64>>>,
}

/// Dense-output solution of a [`PolySystem`] on `[0, t_end]` (or `[t_end, 0]`).
#[derive(Clone, Debug)]
pub struct TaylorSolution {
    dim: usize,
    t_end: f64,
    steps: Vec<Step>,
}

fn horner_vec(c: &[Vec<f64>], s: f64) -> Vec<f64> {
    let mut acc = c.last().cloned().unwrap_or_default();
    for ck in c.iter().rev().skip(1) {
        for (a, b) in acc.iter_mut().zip(ck) {
            *a = *a * s + b;
        }
    }
    acc
}

fn horner_mat(c: &[DMatrix<f64>], s: f64) -> DMatrix<f64> {
    let mut acc = c.last().cloned().expect("non-empty series");
    for ck in c.iter().rev().skip(1) {
        acc *= s;
        acc += ck;
    }
    acc
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl TaylorSolution {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    fn step_for(&self, t: f64) -> Result<&Step> {
        let fwd = self.t_end >= 0.0;
        let inside = if fwd {
            t >= -1e-15 && t <= self.t_end * (1.0 + 1e-14) + 1e-300
        } else {
            t <= 1e-15 && t >= self.t_end * (1.0 + 1e-14) - 1e-300
        };
        if !inside {
            return Err(Error::Integration { t, reason: format!("outside the integrated window [0, {}]", self.t_end) });
        }
        let idx = self.steps.partition_point(|s| if fwd { s.t0 <= t } else { s.t0 >= t });
        Ok(&self.steps[idx.saturating_sub(1)])
    }

    pub fn state(&self, t: f64) -> Result<Vec<f64>> {
        let s = self.step_for(t)?;
        Ok(horner_vec(&s.z, t - s.t0))
    }

    /// Fundamental matrix at `t`; `None` when variational equations were not
    /// integrated.
    pub fn matrix(&self, t: f64) -> Result<Option<DMatrix<f64>>> {
        let s = self.step_for(t)?;
        Ok(s.m.as_ref().map(|m| horner_mat(m, t - s.t0)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Integrates `ż = F(z)` from `z0` over `[0, t_end]`; with `m0` the
/// variational equation is carried along.
pub fn integrate(
    sys: &PolySystem,
    z0: &[f64],
    m0: Option<&DMatrix<f64>>,
    t_end: f64,
    opts: TaylorOptions,
) -> Result<TaylorSolution> {
    let p = opts.order;
    let dir = if t_end >= 0.0 { 1.0 } else { -1.0 };
    let mut t = 0.0f64;
    let mut z = z0.to_vec();
    let mut m = m0.cloned();
    let mut steps = Vec::new();
    let eps = opts.tol * inf_norm(z0).max(1.0);
    loop {
        if steps.len() >= opts.max_steps {
            return Err(Error::Integration { t, reason: "maximum number of steps exceeded".into() });
        }
        let (zs, ms) = match &m {
            Some(m) => {
                let (zs, ms) = sys.series_variational(&z, m, p);
                (zs, Some(ms))
            }
            None => (sys.series(&z, p), None),
        };
        let norm_k = |k: usize| -> f64 {
            let mut v = inf_norm(&zs[k]);
            if let Some(ms) = &ms {
                v = v.max(ms[k].amax());
            }
            v
        };
        let mut h = f64::INFINITY;
        for k in [p - 1, p] {
            let nk = norm_k(k);
            if nk > 0.0 {
                h = h.min((eps / nk).powf(1.0 / k as f64));
            }
        }
        h *= 0.8;
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if !h.is_finite() || (h < 1e-14 * t.abs().max(1.0) && !last) {
            return Err(Error::Integration { t, reason: "step size underflow".into() });
        }
        let hs = dir * h;
        let znew = horner_vec(&zs, hs);
        if znew.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { t, reason: "non-finite state".into() });
        }
        let mnew = ms.as_ref().map(|ms| horner_mat(ms, hs));
        steps.push(Step { t0: t, z: zs, m: ms });
        if last {
            break;
        }
        t += hs;
        z = znew;
        m = mnew;
    }
    Ok(TaylorSolution { dim: sys.dim(), t_end, steps })
}
