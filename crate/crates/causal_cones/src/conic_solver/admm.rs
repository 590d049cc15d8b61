use std::collections::VecDeque;
use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::affine::AffineProjector;
use super::problem::SDPProblem;
use crate::error::{Error, Result};
use crate::operator_core::basis::HsTransform;
use crate::operator_core::linalg::{eigvalsh, project_psd};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Over-relaxation factor in (0, 2).
    pub alpha: f64,
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Anderson acceleration memory; 0 disables it.
    pub anderson: usize,
    pub ruiz_iters: usize,
    /// Threshold of the normalized infeasibility-certificate tests.
    pub eps_infeas: f64,
    #[serde(skip)]
    pub residual_log: Option<PathBuf>,
    #[serde(skip)]
    pub warm_start: Option<WarmStart>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_iter: 200_000,
            alpha: 1.6,
            rho: 1.0,
            adaptive_rho: true,
            check_every: 20,
            anderson: 5,
            ruiz_iters: 10,
            eps_infeas: 1e-7,
            residual_log: None,
            warm_start: None,
        }
    }
}

/// Initial point in the unscaled problem: primal `x` and dual slack `s`.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SDPSolution {
    /// Primal point, inside the cone.
    pub x: Vec<f64>,
    /// Equality multipliers: `c − Aᵀ y = s`.
    pub y: Vec<f64>,
    /// Dual slack, inside the dual cone (zero on free scalars).
    pub s: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// Measured on the equilibrated problem.
    pub residuals: Residuals,
    pub iterations: usize,
    pub status: SolveStatus,
    pub seconds: f64,
}

struct Scaling {
    row: Vec<f64>,
    col: Vec<f64>,
    sigma_b: f64,
    sigma_c: f64,
}

fn column_classes(p: &SDPProblem) -> Vec<usize> {
    let mut class = Vec::with_capacity(p.n_cols());
    for (b, blk) in p.psd_blocks.iter().enumerate() {
        class.extend(std::iter::repeat(b).take(blk.n_coords()));
    }
    let nb = p.psd_blocks.len();
    class.extend((0..p.free_scalars).map(|i| nb + i));
    class
}

/// Ruiz equilibration with one factor per PSD block so the cone is preserved.
fn equilibrate(p: &SDPProblem, iters: usize) -> Scaling {
    let class = column_classes(p);
    let n_class = p.psd_blocks.len() + p.free_scalars;
    let mut row = vec![1.0; p.n_rows];
    let mut cls = vec![1.0; n_class];
    for _ in 0..iters {
        let mut rmax = vec![0.0f64; p.n_rows];
        let mut cmax = vec![0.0f64; n_class];
        for &(i, j, v) in &p.triplets {
            let a = (v * row[i] * cls[class[j]]).abs();
            rmax[i] = rmax[i].max(a);
            cmax[class[j]] = cmax[class[j]].max(a);
        }
        for (r, m) in row.iter_mut().zip(&rmax) {
            if *m > 0.0 {
                *r /= m.sqrt();
            }
        }
        for (c, m) in cls.iter_mut().zip(&cmax) {
            if *m > 0.0 {
                *c /= m.sqrt();
            }
        }
    }
    let col: Vec<f64> = class.iter().map(|&k| cls[k]).collect();
    let bnorm = p.rhs.iter().zip(&row).map(|(b, r)| (b * r).abs()).fold(0.0, f64::max);
    let cnorm = p.objective.iter().map(|&(j, v)| (v * col[j]).abs()).fold(0.0, f64::max);
    Scaling {
        row,
        col,
        sigma_b: if bnorm > 0.0 { 1.0 / bnorm } else { 1.0 },
        sigma_c: if cnorm > 0.0 { 1.0 / cnorm } else { 1.0 },
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projection onto the product of PSD blocks (free scalars untouched).
struct ConeProjector {
    ranges: Vec<(usize, usize, usize)>,
    transforms: Vec<HsTransform>,
    psd_end: usize,
}

impl ConeProjector {
    fn new(p: &SDPProblem) -> Self {
        let mut cache: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut transforms = Vec::new();
        let mut ranges = Vec::new();
        let off = p.block_offsets();
        for (b, blk) in p.psd_blocks.iter().enumerate() {
            let t = *cache.entry(blk.dims.clone()).or_insert_with(|| {
                transforms.push(HsTransform::new(&blk.dims));
                transforms.len() - 1
            });
            ranges.push((off[b], off[b + 1], t));
        }
        ConeProjector { ranges, transforms, psd_end: p.n_psd_coords() }
    }

    fn split<'a>(&self, v: &'a mut [f64]) -> Vec<(&'a mut [f64], usize)> {
        let mut out = Vec::with_capacity(self.ranges.len());
        let mut rest = &mut v[..self.psd_end];
        let mut pos = 0;
        for &(a, b, t) in &self.ranges {
            let (_, tail) = rest.split_at_mut(a - pos);
            let (blk, tail) = tail.split_at_mut(b - a);
            out.push((blk, t));
            rest = tail;
            pos = b;
        }
        out
    }

    fn project(&self, v: &mut [f64]) {
        let transforms = &self.transforms;
        self.split(v).into_par_iter().for_each(|(blk, t)| {
            let tr = &transforms[t];
            let n = tr.dims().iter().product::<usize>();
            let mut m = tr.from_coords(blk);
            project_psd(&mut m, n);
            blk.copy_from_slice(&tr.to_coords(&m));
        });
    }

    /// Smallest eigenvalue over all blocks, relative to the largest block norm.
    fn min_eig(&self, v: &[f64]) -> f64 {
        let mut worst = f64::INFINITY;
        for &(a, b, t) in &self.ranges {
            let tr = &self.transforms[t];
            let n = tr.dims().iter().product::<usize>();
            let ev = eigvalsh(&tr.from_coords(&v[a..b]), n);
            worst = worst.min(ev.first().cloned().unwrap_or(0.0));
        }
        worst
    }
}

struct Anderson {
    mem: usize,
    /// Differences of consecutive images and of consecutive residuals.
    dx: VecDeque<Vec<f64>>,
    dg: VecDeque<Vec<f64>>,
    /// `gram[i][j] = dg[i]·dg[j]`, kept in step with `dg`.
    gram: VecDeque<VecDeque<f64>>,
    /// Last image and residual.
    fx: Vec<f64>,
    g: Vec<f64>,
    primed: bool,
}

impl Anderson {
    fn new(mem: usize) -> Self {
        Anderson {
            mem,
            dx: VecDeque::new(),
            dg: VecDeque::new(),
            gram: VecDeque::new(),
            fx: Vec::new(),
            g: Vec::new(),
            primed: false,
        }
    }

    fn reset(&mut self) {
        self.dx.clear();
        self.dg.clear();
        self.gram.clear();
        self.primed = false;
    }

    /// Type-II step: given iterate `x` and its image `fx`, returns the
    /// extrapolated point or `None` when the least-squares system degenerates.
    fn step(&mut self, x: &[f64], fx: &[f64]) -> Option<Vec<f64>> {
        if !self.primed {
            self.fx = fx.to_vec();
            self.g = fx.iter().zip(x).map(|(a, b)| a - b).collect();
            self.primed = true;
            return None;
        }
        let (mut dxi, mut dgi) = if self.dx.len() == self.mem {
            self.gram.pop_front();
            for row in self.gram.iter_mut() {
                row.pop_front();
            }
            (self.dx.pop_front().unwrap(), self.dg.pop_front().unwrap())
        } else {
            (vec![0.0; fx.len()], vec![0.0; fx.len()])
        };
        for j in 0..fx.len() {
            let gj = fx[j] - x[j];
            dxi[j] = fx[j] - self.fx[j];
            dgi[j] = gj - self.g[j];
            self.fx[j] = fx[j];
            self.g[j] = gj;
        }
        let mut row: VecDeque<f64> = self.dg.iter().map(|d| dot(d, &dgi)).collect();
        row.push_back(dot(&dgi, &dgi));
        for (r, &v) in self.gram.iter_mut().zip(&row) {
            r.push_back(v);
        }
        self.gram.push_back(row);
        self.dx.push_back(dxi);
        self.dg.push_back(dgi);

        let m = self.dg.len();
        let scale = (0..m).map(|i| self.gram[i][i]).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        let mut gram = faer::Mat::<f64>::from_fn(m, m, |i, j| self.gram[i][j]);
        for i in 0..m {
            gram[(i, i)] += 1e-10 * scale;
        }
        let rhs = faer::Mat::<f64>::from_fn(m, 1, |i, _| dot(&self.dg[i], &self.g));
        let gamma = faer::linalg::solvers::Solve::solve(&gram.partial_piv_lu(), &rhs);
        if (0..m).any(|i| !gamma[(i, 0)].is_finite()) {
            return None;
        }
        let mut out = self.fx.clone();
        for (i, d) in self.dx.iter().enumerate() {
            let gi = gamma[(i, 0)];
            for (o, t) in out.iter_mut().zip(d) {
                *o -= gi * t;
            }
        }
        Some(out)
    }
}

/// Largest growth of the fixed-point residual tolerated after an
/// extrapolated step.
const SAFEGUARD: f64 = 1.0;

/// Operator-splitting solve of `min c·x, A x = b, x ∈ K`.
pub fn solve(p: &SDPProblem, cfg: &SolverConfig) -> Result<SDPSolution> {
    let start = Instant::now();
    p.validate()?;
    let sc = equilibrate(p, cfg.ruiz_iters);
    let n = p.n_cols();
    let triplets: Vec<(usize, usize, f64)> =
        p.triplets.iter().map(|&(i, j, v)| (i, j, v * sc.row[i] * sc.col[j])).collect();
    let b: Vec<f64> = p.rhs.iter().zip(&sc.row).map(|(b, r)| b * r * sc.sigma_b).collect();
    let mut c = vec![0.0; n];
    for &(j, v) in &p.objective {
        c[j] += v * sc.col[j] * sc.sigma_c;
    }
    let aff = AffineProjector::new(p.n_rows, n, &triplets, &b)?;
    let cone = ConeProjector::new(p);
    log::debug!(
        "solver: {} cols, {} rows, {} components in {} groups",
        n,
        p.n_rows,
        aff.n_components(),
        aff.n_groups()
    );
    // Rows without variables hold only when their right-hand side vanishes.
    let stray = aff.empty_rows().iter().fold(0.0f64, |m, &i| m.max(b[i].abs()));
    let inconsistent = stray > cfg.eps_abs + cfg.eps_rel * norm_inf(&b);

    let mut rho = cfg.rho;
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    if let Some(ws) = &cfg.warm_start {
        if ws.x.len() != n || ws.s.len() != n {
            return Err(Error::BadParams("warm start has the wrong length".into()));
        }
        for j in 0..n {
            z[j] = ws.x[j] / sc.col[j] * sc.sigma_b;
            u[j] = -ws.s[j] * sc.col[j] * sc.sigma_c / rho;
        }
        cone.project(&mut z);
    }
    let mut log_file = match &cfg.residual_log {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
            writeln!(f, "iter,primal,dual,gap,rho,objective,slack_norm").ok();
            Some(f)
        }
        None => None,
    };

    // The iteration runs on w = z + u: z = Π_K(w) and u = w − z is the
    // matching point of the polar cone.
    let mut w: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + b).collect();
    let mut w_prev = vec![0.0; n];
    let mut fallback = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut anderson = Anderson::new(cfg.anderson);
    let mut safeguard: Option<f64> = None;
    let mut rejected = 0usize;
    let mut prev_s: Option<Vec<f64>> = None;
    let mut status = SolveStatus::MaxIter;
    let mut res = Residuals::default();
    let mut y = vec![0.0; p.n_rows];
    let mut iter = 0;
    let mut last_adapt = 0;
    if inconsistent {
        status = SolveStatus::Infeasible;
    }
    let mut t_cone = 0.0f64;
    let mut t_aff = 0.0f64;
    let mut t_and = 0.0f64;

    while iter < cfg.max_iter && !inconsistent {
        iter += 1;
        w_prev.copy_from_slice(&w);
        let t0 = Instant::now();
        z.copy_from_slice(&w);
        cone.project(&mut z);
        t_cone += t0.elapsed().as_secs_f64();
        for j in 0..n {
            u[j] = w[j] - z[j];
            tmp[j] = z[j] - u[j] - c[j] / rho;
        }
        let t0 = Instant::now();
        aff.project(&tmp, &mut x);
        t_aff += t0.elapsed().as_secs_f64();
        for j in 0..n {
            w[j] = cfg.alpha * x[j] + (1.0 - cfg.alpha) * z[j] + u[j];
        }

        if cfg.anderson > 0 {
            let res_norm = w.iter().zip(&w_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if matches!(safeguard, Some(prev) if res_norm > SAFEGUARD * prev) {
                // The extrapolated point made things worse: resume from the
                // plain image it replaced.
                w.copy_from_slice(&fallback);
                anderson.reset();
                safeguard = None;
                rejected += 1;
            } else {
                safeguard = None;
                let t0 = Instant::now();
                let step = anderson.step(&w_prev, &w);
                t_and += t0.elapsed().as_secs_f64();
                match step {
                    Some(acc) if acc.iter().all(|t| t.is_finite()) => {
                        fallback.copy_from_slice(&w);
                        w = acc;
                        safeguard = Some(res_norm);
                    }
                    Some(_) => anderson.reset(),
                    None => {}
                }
            }
        }

        if iter % cfg.check_every != 0 && iter != cfg.max_iter {
            continue;
        }
        // Residuals are measured on the last split, z in the cone and u in
        // the polar cone.
        let (pz, pu) = (&z, &u);
        let az = aff.apply(pz);
        let pri: Vec<f64> = az.iter().zip(&b).map(|(a, bb)| a - bb).collect();
        let s: Vec<f64> = pu.iter().map(|t| -rho * t).collect();
        let cs: Vec<f64> = c.iter().zip(&s).map(|(a, bb)| a - bb).collect();
        let (yy, dres) = aff.dual(&cs);
        y = yy;
        let pobj = dot(&c, pz);
        let dobj = dot(&b, &y);
        res = Residuals { primal: norm_inf(&pri), dual: norm_inf(&dres), gap: (pobj - dobj).abs() };
        let pri_scale = norm_inf(&az).max(norm_inf(&b));
        let dual_scale = norm_inf(&c).max(norm_inf(&s));
        let pri_tol = cfg.eps_abs + cfg.eps_rel * pri_scale;
        let dual_tol = cfg.eps_abs + cfg.eps_rel * dual_scale;
        let gap_tol = cfg.eps_abs + cfg.eps_rel * pobj.abs().max(dobj.abs());
        if let Some(f) = log_file.as_mut() {
            writeln!(f, "{iter},{:e},{:e},{:e},{:e},{:e},{:e}", res.primal, res.dual, res.gap, rho, pobj, norm_inf(&s)).ok();
        }
        if res.primal <= pri_tol && res.dual <= dual_tol && res.gap <= gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if let Some(ps) = &prev_s {
            if certify_infeasible(&aff, &cone, &b, &s, ps, cfg.eps_infeas) {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        prev_s = Some(s);

        if cfg.adaptive_rho && iter - last_adapt >= 5 * cfg.check_every {
            let rp = res.primal / pri_scale.max(1e-12);
            let rd = res.dual / dual_scale.max(1e-12);
            let ratio = (rp / rd.max(1e-300)).sqrt().clamp(1e-3, 1e3);
            if !(0.2..=5.0).contains(&ratio) {
                rho *= ratio;
                for j in 0..n {
                    u[j] /= ratio;
                    w[j] = z[j] + u[j];
                }
                anderson.reset();
                safeguard = None;
                last_adapt = iter;
            }
        }
    }

    log::debug!("solver: {iter} iterations, {rejected} rejected extrapolations");
    log::debug!(
        "solver time: cone {t_cone:.2}s, affine {t_aff:.2}s, acceleration {t_and:.2}s, total {:.2}s",
        start.elapsed().as_secs_f64()
    );
    // Unscale.
    let s_scaled: Vec<f64> = u.iter().map(|t| -rho * t).collect();
    let xs: Vec<f64> = (0..n).map(|j| z[j] * sc.col[j] / sc.sigma_b).collect();
    let ss: Vec<f64> = (0..n).map(|j| s_scaled[j] / sc.col[j] / sc.sigma_c).collect();
    let ys: Vec<f64> = (0..p.n_rows).map(|i| y[i] * sc.row[i] / sc.sigma_c).collect();
    let objective = p.objective.iter().map(|&(j, cv)| cv * xs[j]).sum();
    let dual_objective = dot(&p.rhs, &ys);
    Ok(SDPSolution {
        x: xs,
        y: ys,
        s: ss,
        objective,
        dual_objective,
        residuals: res,
        iterations: iter,
        status,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Farkas test on the dual-slack increment `δs`: `Aᵀŷ = δs ∈ K*` with
/// `b·ŷ < 0` proves `{A x = b, x ∈ K}` empty.
fn certify_infeasible(
    aff: &AffineProjector,
    cone: &ConeProjector,
    b: &[f64],
    s: &[f64],
    prev: &[f64],
    eps: f64,
) -> bool {
    let ds: Vec<f64> = s.iter().zip(prev).map(|(a, p)| a - p).collect();
    let norm = norm_inf(&ds);
    if norm < 1e-6 * (1.0 + norm_inf(s)) {
        return false;
    }
    let scaled: Vec<f64> = ds.iter().map(|t| t / norm).collect();
    let (yhat, res) = aff.dual(&scaled);
    if norm_inf(&res) > eps || dot(b, &yhat) > -eps {
        return false;
    }
    if scaled[cone.psd_end..].iter().any(|t| t.abs() > eps) {
        return false;
    }
    cone.min_eig(&scaled) >= -eps
}

#[cfg(test)]
mod tests {
    use super::super::problem::PsdBlock;
    use super::*;

    #[test]
    fn affine_only_problem() {
        // min r  s.t.  r = 5.
        let p = SDPProblem {
            psd_blocks: vec![],
            free_scalars: 1,
            n_rows: 1,
            triplets: vec![(0, 0, 1.0)],
            rhs: vec![5.0],
            objective: vec![(0, 1.0)],
        };
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-7, "{sol:?}");
    }

    #[test]
    fn psd_boundary_problem() {
        // min r  s.t.  X ⪰ 0, X = diag(1, r), in coordinates over one qubit:
        // X = (x0 𝟙 + x3 Z)/√2, so X00 = (x0+x3)/√2, X11 = (x0−x3)/√2.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = SDPProblem {
            psd_blocks: vec![PsdBlock { dims: vec![2], label: "X".into() }],
            free_scalars: 1,
            n_rows: 4,
            triplets: vec![
                (0, 0, h),
                (0, 3, h),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (3, 0, h),
                (3, 3, -h),
                (3, 4, -1.0),
            ],
            rhs: vec![1.0, 0.0, 0.0, 0.0],
            objective: vec![(4, 1.0)],
        };
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective.abs() < 1e-7, "{}", sol.objective);
    }

    #[test]
    fn infeasible_problem_is_certified() {
        // X ⪰ 0 with X00 = −1.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = SDPProblem {
            psd_blocks: vec![PsdBlock { dims: vec![2], label: "X".into() }],
            free_scalars: 0,
            n_rows: 1,
            triplets: vec![(0, 0, h), (0, 3, h)],
            rhs: vec![-1.0],
            objective: vec![],
        };
        let sol = solve(&p, &SolverConfig { max_iter: 20_000, ..Default::default() }).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }
}
