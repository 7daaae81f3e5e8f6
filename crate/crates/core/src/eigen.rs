//! Zeros of analytic functions in rectangles: winding numbers from phase
//! accumulation along contours, contour moments for initial guesses, and Newton
//! refinement with a central-difference derivative.

use crate::asymptotic::EPS_ESS;
use crate::cgle::{dist_to_essential, Branch, CgleParams, Pulse};
use crate::error::{Error, Result};
use crate::fredholm::{determinant, KernelForm};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Smallest |f| accepted on a contour node.
pub const MIN_CONTOUR_ABS: f64 = 1e-13;
const MAX_CONTOUR_NODES: usize = 1 << 16;

/// A function of λ that is analytic in the region being searched.
pub trait Analytic: Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;
}

impl<F> Analytic for F
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        self(z)
    }
}

/// λ ↦ d₁,Q(λ) for a fixed pulse.
pub struct DeterminantD1<'a> {
    pub pulse: &'a Pulse,
    pub form: KernelForm,
}

impl Analytic for DeterminantD1<'_> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = determinant(self.pulse, z, self.form)?;
        r.d1.ok_or(Error::Overflow { lambda: z })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Shape {
    /// Axis-aligned rectangle with opposite corners `lo` (lower left) and `hi`.
    Rect { lo: Complex64, hi: Complex64 },
    Circle { center: Complex64, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contour {
    pub shape: Shape,
    /// Initial number of quadrature nodes.
    pub n_quad: usize,
}

impl Contour {
    pub fn rect(a: Complex64, b: Complex64, n_quad: usize) -> Self {
        let lo = Complex64::new(a.re.min(b.re), a.im.min(b.im));
        let hi = Complex64::new(a.re.max(b.re), a.im.max(b.im));
        Self { shape: Shape::Rect { lo, hi }, n_quad }
    }

    pub fn circle(center: Complex64, radius: f64, n_quad: usize) -> Self {
        Self { shape: Shape::Circle { center, radius }, n_quad }
    }

    /// Counterclockwise position at arc-length fraction s ∈ [0, 1).
    pub fn point(&self, s: f64) -> Complex64 {
        match self.shape {
            Shape::Circle { center, radius } => center + Complex64::from_polar(radius, 2.0 * PI * s),
            Shape::Rect { lo, hi } => {
                let (w, h) = (hi.re - lo.re, hi.im - lo.im);
                let mut d = s * 2.0 * (w + h);
                if d < w {
                    return Complex64::new(lo.re + d, lo.im);
                }
                d -= w;
                if d < h {
                    return Complex64::new(hi.re, lo.im + d);
                }
                d -= h;
                if d < w {
                    return Complex64::new(hi.re - d, hi.im);
                }
                d -= w;
                Complex64::new(lo.re, hi.im - d)
            }
        }
    }

    pub fn center(&self) -> Complex64 {
        match self.shape {
            Shape::Circle { center, .. } => center,
            Shape::Rect { lo, hi } => (lo + hi) * 0.5,
        }
    }
}

/// Phase-resolved samples of f along a closed contour.
#[derive(Clone, Debug)]
pub struct Winding {
    pub count: i64,
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
}

impl Winding {
    pub fn median_abs(&self) -> f64 {
        let mut a: Vec<f64> = self.values.iter().map(|v| v.norm()).collect();
        a.sort_by(f64::total_cmp);
        a[a.len() / 2]
    }

    /// (1/2πi) ∮ (z − c)^p f′/f dz for p = 1..=k, trapezoidal in z along phase-resolved segments.
    pub fn moments(&self, c: Complex64, k: usize) -> Vec<Complex64> {
        let m = self.points.len();
        let mut out = vec![Complex64::new(0.0, 0.0); k];
        for j in 0..m {
            let j1 = (j + 1) % m;
            let dlog = (self.values[j1] / self.values[j]).ln();
            let (a, b) = (self.points[j] - c, self.points[j1] - c);
            let (mut pa, mut pb) = (a, b);
            for o in out.iter_mut() {
                *o += (pa + pb) * 0.5 * dlog;
                pa *= a;
                pb *= b;
            }
        }
        out.iter().map(|s| s / Complex64::new(0.0, 2.0 * PI)).collect()
    }
}

fn eval_all<F: Analytic + ?Sized>(f: &F, pts: &[Complex64]) -> Result<Vec<Complex64>> {
    pts.par_iter().map(|&z| f.eval(z)).collect()
}

/// Winding number of f around the contour.
pub fn count_zeros<F: Analytic + ?Sized>(f: &F, contour: &Contour) -> Result<Winding> {
    let mut m = contour.n_quad.max(8);
    let mut points: Vec<Complex64> = (0..m).map(|k| contour.point(k as f64 / m as f64)).collect();
    let mut values = eval_all(f, &points)?;
    let mut previous: Option<i64> = None;
    loop {
        if let Some(k) = values.iter().position(|v| !(v.norm() > MIN_CONTOUR_ABS)) {
            return Err(Error::ZeroOnContour { lambda: points[k] });
        }
        let mut total = 0.0;
        let mut max_jump: f64 = 0.0;
        for j in 0..m {
            let d = (values[(j + 1) % m] / values[j]).arg();
            total += d;
            max_jump = max_jump.max(d.abs());
        }
        let count = (total / (2.0 * PI)).round() as i64;
        if previous == Some(count) && max_jump < PI / 2.0 {
            return Ok(Winding { count, points, values });
        }
        previous = Some(count);
        if 2 * m > MAX_CONTOUR_NODES {
            return Err(Error::NonConvergent { nodes: 2 * m });
        }
        let mids: Vec<Complex64> = (0..m).map(|k| contour.point((2 * k + 1) as f64 / (2 * m) as f64)).collect();
        let mid_vals = eval_all(f, &mids)?;
        let mut p2 = Vec::with_capacity(2 * m);
        let mut v2 = Vec::with_capacity(2 * m);
        for k in 0..m {
            p2.extend([points[k], mids[k]]);
            v2.extend([values[k], mid_vals[k]]);
        }
        points = p2;
        values = v2;
        m *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop when |Δλ| < tol.
    pub tol: f64,
    /// Stop when |f(λ)| ≤ residual_tol.
    pub residual_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-10, residual_tol: 0.0, max_iters: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonResult {
    pub lambda: Complex64,
    pub residual: f64,
    pub iters: usize,
}

pub fn newton_refine<F: Analytic + ?Sized>(f: &F, lambda0: Complex64, config: &NewtonConfig) -> Result<NewtonResult> {
    let mut z = lambda0;
    let mut fz = f.eval(z)?;
    for it in 1..=config.max_iters {
        if fz.norm() <= config.residual_tol {
            return Ok(NewtonResult { lambda: z, residual: fz.norm(), iters: it - 1 });
        }
        let h = 1e-6 * z.norm().max(1.0);
        let d = (f.eval(z + h)? - f.eval(z - h)?) / (2.0 * h);
        if d.norm() < 1e-300 {
            return Err(Error::Stagnation { lambda: z });
        }
        let step = fz / d;
        z -= step;
        fz = f.eval(z)?;
        if step.norm() < config.tol {
            return Ok(NewtonResult { lambda: z, residual: fz.norm(), iters: it });
        }
    }
    Err(Error::MaxIters { iters: config.max_iters, lambda: z })
}

/// Roots of the monic polynomial whose roots have power sums s₁..s_k.
pub fn roots_from_power_sums(s: &[Complex64]) -> Vec<Complex64> {
    let k = s.len();
    if k == 0 {
        return Vec::new();
    }
    // Newton identities: e_m = (1/m) Σ_{i=1}^{m} (−1)^{i−1} e_{m−i} s_i
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for m in 1..=k {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[m - i] * s[i - 1] * sign;
        }
        e.push(acc / m as f64);
    }
    // p(z) = Σ (−1)^m e_m z^{k−m}
    let coef: Vec<Complex64> = (0..=k).map(|m| if m % 2 == 0 { e[m] } else { -e[m] }).collect();
    let eval = |z: Complex64| coef.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let scale = 1.0 + coef.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    // Durand-Kerner
    let mut r: Vec<Complex64> = (0..k).map(|j| Complex64::from_polar(0.4 * scale, 0.9 + 2.0 * PI * j as f64 / k as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for j in 0..k {
            let mut den = Complex64::new(1.0, 0.0);
            for (l, rl) in r.iter().enumerate() {
                if l != j {
                    den *= r[j] - rl;
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let d = eval(r[j]) / den;
            r[j] -= d;
            moved = moved.max(d.norm());
        }
        if moved <= 1e-15 * scale {
            break;
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub max_roots_per_cell: usize,
    /// Cells with diameter below this are not subdivided further.
    pub min_cell: f64,
    pub tol: f64,
    pub n_quad: usize,
    /// Extra subdivision levels allowed for cells touching the essential spectrum.
    pub max_essential_depth: usize,
    pub max_depth: usize,
    pub form: KernelForm,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_roots_per_cell: 2,
            min_cell: 1e-6,
            tol: 1e-10,
            n_quad: 32,
            max_essential_depth: 3,
            max_depth: 20,
            form: KernelForm::Eff2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    #[serde(skip)]
    pub lambda: Complex64,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub iters: usize,
    pub multiplicity: i64,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRecord {
    pub lo_re: f64,
    pub lo_im: f64,
    pub hi_re: f64,
    pub hi_im: f64,
    pub depth: usize,
    pub count: Option<i64>,
    pub nodes: usize,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RootReport {
    pub roots: Vec<Root>,
    pub cells: Vec<CellRecord>,
    pub depth: usize,
}

impl RootReport {
    pub fn has_failures(&self) -> bool {
        self.cells.iter().any(|c| c.status.starts_with("error"))
    }
}

const SPLIT: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug)]
struct Cell {
    lo: Complex64,
    hi: Complex64,
    depth: usize,
    ess_depth: usize,
}

impl Cell {
    fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    fn contains(&self, z: Complex64, margin: f64) -> bool {
        let (mx, my) = (margin * (self.hi.re - self.lo.re), margin * (self.hi.im - self.lo.im));
        z.re >= self.lo.re - mx && z.re <= self.hi.re + mx && z.im >= self.lo.im - my && z.im <= self.hi.im + my
    }

    fn quarters(&self) -> [Cell; 4] {
        // Cut at the golden section rather than the midpoint: zeros of symmetric
        // problems sit on the axes, and midpoint cuts of symmetric regions hit them.
        let m = self.lo + (self.hi - self.lo) * SPLIT;
        let d = self.depth + 1;
        let e = self.ess_depth;
        [
            Cell { lo: self.lo, hi: m, depth: d, ess_depth: e },
            Cell { lo: Complex64::new(m.re, self.lo.im), hi: Complex64::new(self.hi.re, m.im), depth: d, ess_depth: e },
            Cell { lo: Complex64::new(self.lo.re, m.im), hi: Complex64::new(m.re, self.hi.im), depth: d, ess_depth: e },
            Cell { lo: m, hi: self.hi, depth: d, ess_depth: e },
        ]
    }

    fn record(&self, count: Option<i64>, nodes: usize, status: impl Into<String>) -> CellRecord {
        CellRecord {
            lo_re: self.lo.re,
            lo_im: self.lo.im,
            hi_re: self.hi.re,
            hi_im: self.hi.im,
            depth: self.depth,
            count,
            nodes,
            status: status.into(),
        }
    }
}

/// Whether the half-line e + t·d, t ≥ 0, meets the rectangle padded by `pad`.
fn ray_hits_rect(e: Complex64, d: Complex64, lo: Complex64, hi: Complex64, pad: f64) -> bool {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for (o, v, a, b) in [(e.re, d.re, lo.re - pad, hi.re + pad), (e.im, d.im, lo.im - pad, hi.im + pad)] {
        if v == 0.0 {
            if o < a || o > b {
                return false;
            }
        } else {
            let (ta, tb) = ((a - o) / v, (b - o) / v);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    t0 <= t1
}

fn touches_essential(params: &CgleParams, cell: &Cell) -> bool {
    [Branch::Plus, Branch::Minus].into_iter().any(|br| {
        let dir = -Complex64::new(params.beta, br.sign() * 0.5 * params.d);
        ray_hits_rect(params.edge(br), dir, cell.lo, cell.hi, 10.0 * EPS_ESS)
    })
}

/// Zeros of f in the rectangle with corners z0, z1. When `params` is given, cells
/// meeting the essential spectrum of those parameters are treated specially.
pub fn find_zeros<F: Analytic + ?Sized>(
    f: &F,
    params: Option<&CgleParams>,
    z0: Complex64,
    z1: Complex64,
    config: &SearchConfig,
) -> RootReport {
    let lo = Complex64::new(z0.re.min(z1.re), z0.im.min(z1.im));
    let hi = Complex64::new(z0.re.max(z1.re), z0.im.max(z1.im));
    let mut queue = vec![Cell { lo, hi, depth: 0, ess_depth: 0 }];
    let mut report = RootReport::default();
    let newton = NewtonConfig { tol: config.tol, ..Default::default() };
    let mut found: Vec<(Root, Complex64)> = Vec::new();

    while !queue.is_empty() {
        let level = std::mem::take(&mut queue);
        let results: Vec<_> = level.par_iter().map(|cell| process_cell(f, params, cell, config, &newton)).collect();
        for (cell, outcome) in level.iter().zip(results) {
            report.depth = report.depth.max(cell.depth);
            match outcome {
                CellOutcome::Split(rec, children) => {
                    report.cells.push(rec);
                    queue.extend(children);
                }
                CellOutcome::Done(rec, roots) => {
                    report.cells.push(rec);
                    found.extend(roots.into_iter().map(|r| (r, cell.lo)));
                }
            }
        }
    }

    // merge duplicates, keeping the smaller residual
    let merge = 10.0 * config.tol;
    let mut roots: Vec<Root> = Vec::new();
    for (r, _) in found {
        if let Some(q) = roots.iter_mut().find(|q| (q.lambda - r.lambda).norm() <= merge) {
            q.multiplicity += r.multiplicity;
            if r.residual < q.residual {
                let m = q.multiplicity;
                *q = Root { multiplicity: m, ..r };
            }
        } else {
            roots.push(r);
        }
    }
    if let Some(p) = params {
        for r in &mut roots {
            if dist_to_essential(p, r.lambda) <= 10.0 * EPS_ESS {
                r.flags.push("near-essential".into());
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    report.roots = roots;
    report
}

enum CellOutcome {
    Split(CellRecord, Vec<Cell>),
    Done(CellRecord, Vec<Root>),
}

fn process_cell<F: Analytic + ?Sized>(
    f: &F,
    params: Option<&CgleParams>,
    cell: &Cell,
    config: &SearchConfig,
    newton: &NewtonConfig,
) -> CellOutcome {
    let can_split = cell.diameter() >= config.min_cell && cell.depth < config.max_depth;
    if let Some(p) = params {
        if touches_essential(p, cell) {
            if can_split && cell.ess_depth < config.max_essential_depth {
                let children = cell.quarters().map(|mut c| {
                    c.ess_depth += 1;
                    c
                });
                return CellOutcome::Split(cell.record(None, 0, "subdivided-essential"), children.to_vec());
            }
            return CellOutcome::Done(cell.record(None, 0, "intersects-essential"), Vec::new());
        }
    }
    let contour = Contour::rect(cell.lo, cell.hi, config.n_quad);
    let w = match count_zeros(f, &contour) {
        Ok(w) => w,
        Err(e) => return CellOutcome::Done(cell.record(None, 0, format!("error: {e}")), Vec::new()),
    };
    let nodes = w.points.len();
    if w.count <= 0 {
        let status = if w.count < 0 { "negative-count" } else { "empty" };
        return CellOutcome::Done(cell.record(Some(w.count), nodes, status), Vec::new());
    }
    if w.count as usize > config.max_roots_per_cell && can_split {
        return CellOutcome::Split(cell.record(Some(w.count), nodes, "subdivided"), cell.quarters().to_vec());
    }

    let k = w.count as usize;
    let c = contour.center();
    let mut seeds: Vec<Complex64> = roots_from_power_sums(&w.moments(c, k)).into_iter().map(|r| r + c).collect();
    seeds.push(c);
    let scale = 1e-8 * w.median_abs().max(1.0);
    let mut roots: Vec<Root> = Vec::new();
    for seed in seeds {
        if roots.len() >= k {
            break;
        }
        let Ok(res) = newton_refine(f, seed, newton) else { continue };
        if !cell.contains(res.lambda, 0.1) {
            continue;
        }
        if roots.iter().any(|r| (r.lambda - res.lambda).norm() <= 10.0 * config.tol) {
            continue;
        }
        let mut flags = Vec::new();
        if res.residual > scale {
            flags.push("residual-high".into());
        }
        roots.push(Root {
            lambda: res.lambda,
            re: res.lambda.re,
            im: res.lambda.im,
            residual: res.residual,
            iters: res.iters,
            multiplicity: 1,
            flags,
        });
    }
    let status = if roots.is_empty() { "unrefined" } else { "refined" };
    let extra = w.count - roots.len() as i64;
    if let Some(first) = roots.first_mut() {
        first.multiplicity += extra.max(0);
    }
    CellOutcome::Done(cell.record(Some(w.count), nodes, status), roots)
}

/// Eigenvalue candidates of the pulse as zeros of d₁,Q in the rectangle z0–z1.
pub fn find_point_spectrum(pulse: &Pulse, z0: Complex64, z1: Complex64, config: &SearchConfig) -> RootReport {
    let f = DeterminantD1 { pulse, form: config.form };
    find_zeros(&f, Some(&pulse.params), z0, z1, config)
}
