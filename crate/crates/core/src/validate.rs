//! Validation campaigns: simulations of the sketch compared with the
//! analytic oracle, grouped in suites and numbered as acceptance criteria
//! 1 to 13.
//!
//! | suite | criteria |
//! |-------|----------|
//! | `distribution` | 3, 4, 5, 13 |
//! | `moments` | 1, 2, 6, 8, 12 |
//! | `colors` | 7 |
//! | `multiplicity` | 9 |
//! | `blackgreen` | 10 |
//! | `asymmetric` | 11 |
//! | `all` | 1 to 13 |

use std::f64::consts::LN_2;
use std::str::FromStr;

use crate::analytics::special::{ln_factorial, sum, StirlingTable};
use crate::analytics::{e_inv_u, ModelParams};
use crate::error::{AnalyticsError, SimulationError};
use crate::montecarlo::{
    joint_tv, ks_critical, ks_statistic, merge_harness, normal_cdf, run_trials,
    step_cdf_distance, tv_distance, wasserstein_to_normal, Check, ColorClass, Execution, Metric,
    Multiplicity, Order, Pipeline, Report, SketchConfig, StreamSpec, Tolerance, TrialConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Distribution,
    Moments,
    Colors,
    Multiplicity,
    BlackGreen,
    Asymmetric,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Distribution => &[3, 4, 5, 13],
            Suite::Moments => &[1, 2, 6, 8, 12],
            Suite::Colors => &[7],
            Suite::Multiplicity => &[9],
            Suite::BlackGreen => &[10],
            Suite::Asymmetric => &[11],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
        }
    }
}

impl FromStr for Suite {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "distribution" => Suite::Distribution,
            "moments" => Suite::Moments,
            "colors" => Suite::Colors,
            "multiplicity" => Suite::Multiplicity,
            "blackgreen" => Suite::BlackGreen,
            "asymmetric" => Suite::Asymmetric,
            "all" => Suite::All,
            _ => return Err(SimulationError::InvalidSpec(format!("unknown suite {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateConfig {
    pub seed: u64,
    /// Multiplies every tolerance; `0` makes every check fail.
    pub tolerance_scale: f64,
    /// Replaces the trial count of every simulation.
    pub trials: Option<u64>,
    /// Bit-zero probability of the asymmetric suite.
    pub asymmetric_q: f64,
    pub execution: Execution,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance_scale: 1.0,
            trials: None,
            asymmetric_q: 0.7,
            execution: Execution::default(),
        }
    }
}

struct Ctx<'a> {
    cfg: &'a ValidateConfig,
    criterion: u8,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    fn trials(&self, default: u64) -> u64 {
        self.cfg.trials.unwrap_or(default)
    }

    fn trial_config(&self, default: u64, pipeline: Pipeline) -> TrialConfig {
        // one master seed per criterion keeps campaigns independent
        TrialConfig::new(self.trials(default), self.cfg.seed ^ (self.criterion as u64) << 56)
            .with_pipeline(pipeline)
            .with_execution(self.cfg.execution)
    }

    fn check(&mut self, name: &str, empirical: f64, theoretical: f64, tol: Tolerance) {
        let tol = tol.scaled(self.cfg.tolerance_scale);
        self.checks.push(Check::new(self.criterion, name, empirical, theoretical, tol));
    }
}

pub fn run_suite(suite: Suite, cfg: &ValidateConfig) -> Result<Report, SimulationError> {
    let mut report = Report::default();
    for &k in suite.criteria() {
        report.extend(run_criterion(k, cfg)?);
    }
    Ok(report)
}

/// Runs acceptance criterion `k` (1 to 13).
pub fn run_criterion(k: u8, cfg: &ValidateConfig) -> Result<Vec<Check>, SimulationError> {
    let mut ctx = Ctx { cfg, criterion: k, checks: Vec::new() };
    match k {
        1 => unbiasedness(&mut ctx)?,
        2 => variance_z(&mut ctx)?,
        3 => exact_law(&mut ctx)?,
        4 => r_moments(&mut ctx)?,
        5 => w_distribution(&mut ctx)?,
        6 => d_moments(&mut ctx)?,
        7 => colors(&mut ctx)?,
        8 => inverse_r(&mut ctx)?,
        9 => multiplicities(&mut ctx)?,
        10 => black_green(&mut ctx)?,
        11 => asymmetric(&mut ctx)?,
        12 => oracle_triangle(&mut ctx)?,
        13 => merge_soundness(&mut ctx)?,
        _ => return Err(SimulationError::InvalidSpec(format!("no criterion {k}"))),
    }
    Ok(ctx.checks)
}

fn lg(x: f64) -> f64 {
    x.log2()
}

fn two_color(n: u64, p: f64, law: Multiplicity, order: Order) -> StreamSpec {
    StreamSpec {
        n,
        colors: vec![
            ColorClass { tag: 1, proportion: p, multiplicity: law },
            ColorClass { tag: 0, proportion: 1.0 - p, multiplicity: Multiplicity::Constant(1) },
        ],
        order,
        seed: 0,
    }
}

fn unbiasedness(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let spec = StreamSpec::distinct(1 << 16, 0);
    let stats = run_trials(
        &spec,
        &SketchConfig::new(64, 0.5),
        &ctx.trial_config(10_000, Pipeline::LevelOnly),
        &[Metric::Z],
    )?;
    ctx.check("mean(R 2^D)/n, n=2^16 b=64", stats.mean(Metric::Z), 1.0, Tolerance::Abs(0.01));
    Ok(())
}

fn variance_z(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let spec = StreamSpec::distinct(1 << 16, 0);
    for (b, label) in [(64u32, "Var(Z), b=64"), (101, "Var(Z), b=101")] {
        let stats = run_trials(
            &spec,
            &SketchConfig::new(b, 0.5),
            &ctx.trial_config(10_000, Pipeline::LevelOnly),
            &[Metric::Z],
        )?;
        let theory = ModelParams::symmetric(b)?.variance_z()?;
        let var = stats.variance(Metric::Z);
        if b == 64 {
            ctx.check(label, var, theory, Tolerance::Rel(0.15));
        } else {
            ctx.check("relative sd of R 2^D, b=101", var.sqrt(), 0.12, Tolerance::Abs(0.02));
            ctx.check("analytic sqrt(Var Z), b=101", theory.sqrt(), 0.12, Tolerance::Abs(0.02));
        }
    }
    Ok(())
}

fn exact_law(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let (n, b) = (4096u64, 16u32);
    // (R, D) does not depend on arrival order, so the keys are fed sorted
    let stats = run_trials(
        &StreamSpec::distinct(n, 0),
        &SketchConfig::new(b, 0.5),
        &ctx.trial_config(100_000, Pipeline::Full),
        &[],
    )?;
    let law = ModelParams::symmetric(b)?.joint_law(n)?;
    let tv = joint_tv(&stats.joint_pmf(), &law);
    ctx.check("TV((R,D) empirical, exact law), n=4096 b=16", tv, 0.0, Tolerance::Abs(0.02));
    Ok(())
}

fn r_moments(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let (n, b) = (1u64 << 20, 64u32);
    let stats = run_trials(
        &StreamSpec::distinct(n, 0),
        &SketchConfig::new(b, 0.5),
        &ctx.trial_config(100_000, Pipeline::LevelOnly),
        &[Metric::R],
    )?;
    let m = ModelParams::symmetric(b)?;
    let rm = m.moments_r()?;
    let bf = b as f64;
    ctx.check("mean(R) vs b/(2L)", stats.mean(Metric::R), bf / (2.0 * LN_2), Tolerance::Rel(0.02));
    let var = bf * (3.0 * LN_2 * bf - 2.0 * bf + LN_2) / (8.0 * LN_2 * LN_2);
    ctx.check("Var(R) vs b(3Lb-2b+L)/(8L^2)", stats.variance(Metric::R), var, Tolerance::Rel(0.10));
    let empirical = stats.r_pmf(b);
    ctx.check("TV(pmf of R, phi(r,0))", tv_distance(&empirical, &rm.pmf), 0.0, Tolerance::Abs(0.02));

    // Diagnostics: the same sample against the finite-n law at this n.
    let exact = m.joint_law(n)?.marginal_r();
    let mean_exact: f64 = exact.iter().enumerate().map(|(r, p)| r as f64 * p).sum();
    let second: f64 = exact.iter().enumerate().map(|(r, p)| (r * r) as f64 * p).sum();
    ctx.check("diagnostic: mean(R) vs exact law at n", stats.mean(Metric::R), mean_exact, Tolerance::Rel(0.02));
    ctx.check(
        "diagnostic: Var(R) vs exact law at n",
        stats.variance(Metric::R),
        second - mean_exact * mean_exact,
        Tolerance::Rel(0.10),
    );
    ctx.check("diagnostic: TV(pmf of R, exact law at n)", tv_distance(&empirical, &exact), 0.0, Tolerance::Abs(0.02));
    Ok(())
}

fn w_distribution(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let (n, b) = (1u64 << 12, 16u32);
    let stats = run_trials(
        &StreamSpec::distinct(n, 0),
        &SketchConfig::new(b, 0.5),
        &ctx.trial_config(100_000, Pipeline::Full),
        &[Metric::W],
    )?;
    let m = ModelParams::symmetric(b)?;
    let frac = lg(n as f64).fract();
    let w = stats.values(Metric::W);
    // surfaces parameter errors once; the closure below cannot return them
    m.w_cdf(0.0, frac)?;
    let dist = step_cdf_distance(&w, stats.trials(), |a| m.w_cdf(a, frac).unwrap_or(f64::NAN));
    ctx.check("sup |F_W empirical - w_cdf|, n=2^12 b=16", dist, 0.0, Tolerance::Abs(0.02));
    Ok(())
}

fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn d_moments(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let bs = [64u32, 128, 256, 512];
    let xs: Vec<f64> = bs.iter().map(|&b| lg(b as f64)).collect();
    let ys = bs
        .iter()
        .map(|&b| Ok(ModelParams::symmetric(b)?.expected_depth_offset()))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    ctx.check("slope of sum m_1,r on lg b", regression_slope(&xs, &ys), -1.0, Tolerance::Abs(0.05));

    let (n, b) = (1u64 << 20, 64u32);
    let stats = run_trials(
        &StreamSpec::distinct(n, 0),
        &SketchConfig::new(b, 0.5),
        &ctx.trial_config(100_000, Pipeline::LevelOnly),
        &[Metric::D],
    )?;
    let offset = ModelParams::symmetric(b)?.expected_depth_offset();
    ctx.check("mean(D) - lg n vs sum m_1,r, b=64", stats.mean(Metric::D) - 20.0, offset, Tolerance::Abs(0.05));
    Ok(())
}

fn colors(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let (n, b, p) = (1u64 << 14, 64u32, 0.2);
    let sketch = SketchConfig::new(b, 0.5);
    let spec = two_color(n, p, Multiplicity::Constant(1), Order::Sorted);
    let stats = run_trials(&spec, &sketch, &ctx.trial_config(10_000, Pipeline::Full), &[Metric::PHat(1)])?;
    let l = LN_2;
    let bf = b as f64;
    ctx.check("mean(U/R), p=0.2", stats.mean(Metric::PHat(1)), p, Tolerance::Abs(0.005));
    ctx.check("Var(U/R) vs pq/(Lb)", stats.variance(Metric::PHat(1)), p * (1.0 - p) / (l * bf), Tolerance::Rel(0.15));

    let three = StreamSpec {
        n,
        colors: vec![
            ColorClass { tag: 1, proportion: 0.3, multiplicity: Multiplicity::Constant(1) },
            ColorClass { tag: 2, proportion: 0.3, multiplicity: Multiplicity::Constant(1) },
            ColorClass { tag: 0, proportion: 0.4, multiplicity: Multiplicity::Constant(1) },
        ],
        order: Order::Sorted,
        seed: 0,
    };
    let stats = run_trials(
        &three,
        &sketch,
        &ctx.trial_config(10_000, Pipeline::Full),
        &[Metric::PHat(1), Metric::PHat(2)],
    )?;
    let cov = stats.covariance(Metric::PHat(1), Metric::PHat(2));
    ctx.check("Cov(U1/R, U2/R) vs -p1p2/(Lb)", cov, -0.09 / (l * bf), Tolerance::Rel(0.20));

    // Gaussian limit at b = 30
    let b30 = SketchConfig::new(30, 0.5);
    let stats = run_trials(&spec, &b30, &ctx.trial_config(10_000, Pipeline::Full), &[Metric::R, Metric::PHat(1)])?;
    let q = 1.0 - p;
    let (rs, ps) = (stats.column(Metric::R).unwrap_or(&[]), stats.column(Metric::PHat(1)).unwrap_or(&[]));
    let (mut t, mut inv_sqrt_r) = (Vec::new(), Vec::new());
    for (&r, &ph) in rs.iter().zip(ps) {
        if r > 0.0 && ph.is_finite() {
            t.push(r.sqrt() * (ph - p) / (p * q).sqrt());
            inv_sqrt_r.push(1.0 / r.sqrt());
        }
    }
    let ks = ks_statistic(&t, normal_cdf);
    ctx.check("KS of sqrt(R)(U/R-p)/sqrt(pq) vs N(0,1), b=30, alpha=0.01", ks, 0.0, Tolerance::Abs(ks_critical(t.len(), 0.01)));
    let kappa = (q * q - p * p) / (p * q).sqrt() + 4.0 * ((p.powi(3) + q.powi(3)) / (p * q) - 1.0).sqrt();
    let bound = kappa * inv_sqrt_r.iter().sum::<f64>() / inv_sqrt_r.len() as f64;
    let w1 = wasserstein_to_normal(&t);
    ctx.check("Wasserstein distance <= kappa E(1/sqrt R), b=30", w1, bound, Tolerance::Upper(1.0));
    Ok(())
}

fn inverse_r(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let b = 256u32;
    let m = ModelParams::symmetric(b)?;
    let pmf = m.moments_r()?.pmf;
    let direct = sum(pmf.iter().enumerate().skip(1).map(|(r, p)| p / r as f64));
    let bf = b as f64;
    ctx.check("sum pmf(r)/r vs 1/(Lb), b=256", direct, 1.0 / (LN_2 * bf), Tolerance::Rel(0.10));
    ctx.check(
        "general formula at alpha=1/2 vs 2(sqrt2-1)/(L sqrt b)",
        m.inv_r_moment(0.5)?,
        2.0 * (2f64.sqrt() - 1.0) / (LN_2 * bf.sqrt()),
        Tolerance::Rel(1e-12),
    );
    ctx.check("general formula at alpha=2 vs 3/(2Lb^2)", m.inv_r_moment(2.0)?, 3.0 / (2.0 * LN_2 * bf * bf), Tolerance::Rel(1e-12));
    ctx.check("general formula at alpha=1 vs 1/(Lb)", m.inv_r_moment(1.0)?, 1.0 / (LN_2 * bf), Tolerance::Rel(1e-12));
    Ok(())
}

fn multiplicities(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let (n, b, p) = (1u64 << 14, 64u32, 0.5);
    let law = Multiplicity::Uniform { lo: 1, hi: 9 };
    let spec = two_color(n, p, law, Order::Sorted);
    let stats = run_trials(
        &spec,
        &SketchConfig::new(b, 0.5),
        &ctx.trial_config(10_000, Pipeline::Full),
        &[Metric::MuHat(1), Metric::NcRatio(1)],
    )?;
    ctx.check("mean(mu_hat), uniform{1..9}", stats.mean(Metric::MuHat(1)), 5.0, Tolerance::Rel(0.01));
    ctx.check(
        "Var(mu_hat) vs sigma^2 e_inv_u(b,p)",
        stats.variance(Metric::MuHat(1)),
        law.variance() * e_inv_u(b, p)?,
        Tolerance::Rel(0.20),
    );
    let n_c = spec.class_size(1).unwrap_or(0) as f64;
    let var_nc = stats.variance(Metric::NcRatio(1)) * (n_c / n as f64).powi(2);
    ctx.check("Var(n_C hat)/n^2 vs p/(Lb)", var_nc, p / (LN_2 * b as f64), Tolerance::Rel(0.20));
    Ok(())
}

fn black_green(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let n = 3u64 << 14;
    let spec = StreamSpec {
        n,
        colors: vec![
            ColorClass { tag: 0, proportion: 0.25, multiplicity: Multiplicity::Constant(1) },
            ColorClass { tag: 1, proportion: 0.75, multiplicity: Multiplicity::Constant(3) },
        ],
        order: Order::Shuffled,
        seed: 0,
    };
    let stats = run_trials(
        &spec,
        &SketchConfig::new(64, 0.5).with_green(3),
        &ctx.trial_config(1_000, Pipeline::Full),
        &[Metric::DepthGap, Metric::NgRatio, Metric::NbRatio],
    )?;
    ctx.check("mean(D) - mean(D*) vs -lg p, p=1/4", stats.mean(Metric::DepthGap), 2.0, Tolerance::Abs(0.5));
    ctx.check("mean(n_G hat)/n_G", stats.mean(Metric::NgRatio), 1.0, Tolerance::Abs(0.03));
    ctx.check("mean(n_B hat)/n_B", stats.mean(Metric::NbRatio), 1.0, Tolerance::Abs(0.03));
    Ok(())
}

/// Largest absolute difference between the general-`q` formulas evaluated at
/// `q = 1/2` and their symmetric closed forms.
fn symmetric_specialization_error() -> Result<f64, AnalyticsError> {
    let mut worst: f64 = 0.0;
    let mut note = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for b in [2u32, 8, 16, 50, 64] {
        let m = ModelParams::new(b, 0.5)?;
        let bf = b as f64;
        let l = LN_2;
        let rm = m.moments_r()?;
        note(rm.mean, bf / (2.0 * l));
        note(rm.second_moment, bf * (3.0 * bf + 1.0) / (8.0 * l));
        note(rm.variance, bf * (3.0 * l * bf - 2.0 * bf + l) / (8.0 * l * l));
        note(rm.pmf[0], 1.0 - (1..=b).map(|u| 1.0 / (u as f64 * 2f64.powi(u as i32) * l)).sum::<f64>());
        for r in 1..=b {
            let s: f64 = (0..=b - r)
                .map(|k| {
                    let c = (r + k) as f64;
                    (crate::analytics::special::ln_gamma(c)
                        - ln_factorial(r as u64)
                        - ln_factorial(k as u64)
                        - c * LN_2)
                        .exp()
                })
                .sum();
            note(rm.pmf[r as usize], (1.0 / r as f64 - s) / l);
        }
        note(m.variance_z()?, 1.0 / ((bf - 1.0) * l));
        note(m.inv_r_moment(1.0)?, 1.0 / (l * bf));
        for r in 0..=b.min(16) {
            for eta in [-2.0, -0.5, 0.0, 1.0, 3.0] {
                let lam: f64 = 2f64.powf(-eta);
                let inner: f64 = (0..=b - r)
                    .map(|k| (k as f64 * lam.ln() - ln_factorial(k as u64)).exp())
                    .sum();
                let direct = (-lam + r as f64 * lam.ln() - ln_factorial(r as u64)).exp()
                    * (1.0 - (-lam).exp() * inner);
                note(m.asym_density(r, eta)?, direct);
            }
        }
    }
    let m = ModelParams::new(16, 0.5)?;
    let t = StirlingTable::new(5);
    for k in 1..=5u32 {
        let s: f64 = (1..k)
            .map(|i| {
                let falling: f64 = ((16 - k + 1)..=(16 - i)).map(f64::from).product();
                t.get(k as usize, i as usize) * (2f64.powi((k - i) as i32) - 1.0)
                    / ((k - i) as f64 * falling)
            })
            .sum();
        note(m.moments_z(k)?, 1.0 + s / LN_2);
    }
    Ok(worst)
}

fn asymmetric(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let q = ctx.cfg.asymmetric_q;
    let (n, b) = (1u64 << 16, 64u32);
    let m = ModelParams::new(b, q)?;
    let p = 1.0 - q;
    let l = m.l();
    let bf = b as f64;
    let stats = run_trials(
        &StreamSpec::distinct(n, 0),
        &SketchConfig::new(b, q),
        &ctx.trial_config(10_000, Pipeline::LevelOnly),
        &[Metric::R, Metric::Z, Metric::InvR],
    )?;
    ctx.check("mean(R) vs pb/L", stats.mean(Metric::R), p * bf / l, Tolerance::Rel(0.03));
    ctx.check("Var(Z) vs p/((b-1)qL)", stats.variance(Metric::Z), p / ((bf - 1.0) * q * l), Tolerance::Rel(0.20));
    let target = p / (q * l * bf);
    let pmf = m.moments_r()?.pmf;
    let direct = sum(pmf.iter().enumerate().skip(1).map(|(r, x)| x / r as f64));
    ctx.check("sum pmf(r)/r vs p/(qLb)", direct, target, Tolerance::Rel(0.15));
    ctx.check("mean(1/R) vs p/(qLb)", stats.mean(Metric::InvR), target, Tolerance::Rel(0.15));
    ctx.check("general formulas at q=1/2 vs symmetric forms", symmetric_specialization_error()?, 0.0, Tolerance::Abs(1e-10));
    Ok(())
}

fn trapezoid(m: &ModelParams, r: u32) -> Result<f64, AnalyticsError> {
    let h = 2e-3;
    let (lo, hi) = (-12.0 * LN_2 / m.l(), 60.0);
    let steps = ((hi - lo) / h) as usize;
    let mut acc = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc.push(w * m.asym_density(r, lo + i as f64 * h)?);
    }
    Ok(sum(acc) * h)
}

fn oracle_triangle(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let grid = [(8u32, 0.7), (8, 0.5), (16, 0.5), (12, 0.3), (5, 0.85)];
    let (mut quad, mut deriv, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for &(b, q) in &grid {
        let m = ModelParams::new(b, q)?;
        for r in 0..=b {
            quad = quad.max((trapezoid(&m, r)? - m.laplace_phi(r, 0.0)?).abs());
            let h = 1e-3;
            let f = |a: f64| m.laplace_phi(r, a);
            let d = |h: f64| -> Result<f64, AnalyticsError> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
            let richardson = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
            deriv = deriv.max((richardson - m.moments_d(1, r)?).abs());
        }
        norm = norm.max((sum((0..=b).map(|r| m.laplace_phi(r, 0.0).unwrap_or(f64::NAN))) - 1.0).abs());
        if b >= 2 {
            norm = norm.max((sum(m.moments_r()?.pmf) - 1.0).abs());
        }
        for n in [100u64, 4096] {
            norm = norm.max((m.joint_law(n)?.total_mass() - 1.0).abs());
        }
        norm = norm.max((sum((0..=b).map(|r| m.grid_marginal_r(r, 0.3).unwrap_or(f64::NAN))) - 1.0).abs());
    }
    ctx.check("max |quadrature of f - phi(r,0)|", quad, 0.0, Tolerance::Abs(1e-8));
    ctx.check("max |Richardson phi'(r,0) - m_1,r|", deriv, 0.0, Tolerance::Abs(1e-6));
    ctx.check("max |pmf mass - 1|", norm, 0.0, Tolerance::Abs(1e-8));
    Ok(())
}

fn merge_soundness(ctx: &mut Ctx) -> Result<(), SimulationError> {
    let trials = ctx.trials(1_000);
    let rep = merge_harness(20_000, 64, 0.5, trials, ctx.cfg.seed ^ 13 << 56, ctx.cfg.execution)?;
    let mismatch = 1.0 - rep.identical_fraction();
    ctx.check(
        &format!("fraction of merged != single sketches ({} itemized)", rep.discrepancies.len()),
        mismatch,
        0.0,
        Tolerance::Abs(0.01),
    );
    Ok(())
}
