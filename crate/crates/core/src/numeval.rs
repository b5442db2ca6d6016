//! Pseudo-spectral evaluation and RK4 time stepping of generated flows on a circle.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use thiserror::Error;

use crate::diffpoly::DiffPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumevalError {
    #[error("grid size {0} is not a power of two")]
    GridSize(usize),
    #[error("domain length must be positive and finite, got {0}")]
    Length(f64),
    #[error("expected {expected} fields, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error("field {index} has {got} samples, expected {expected}")]
    SampleCount { index: usize, expected: usize, got: usize },
    #[error("non-finite value at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("invalid profile `{0}`")]
    Profile(String),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
}

/// Sampled fields `u_i(z_k)`, `z_k = k·L/N`, at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridState {
    pub fields: Vec<Vec<f64>>,
    pub length: f64,
    pub t: f64,
}

impl GridState {
    pub fn new(fields: Vec<Vec<f64>>, length: f64) -> Result<Self, NumevalError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(NumevalError::Length(length));
        }
        let n = fields.first().map_or(0, Vec::len);
        if !n.is_power_of_two() {
            return Err(NumevalError::GridSize(n));
        }
        for (index, f) in fields.iter().enumerate() {
            if f.len() != n {
                return Err(NumevalError::SampleCount {
                    index,
                    expected: n,
                    got: f.len(),
                });
            }
        }
        Ok(GridState {
            fields,
            length,
            t: 0.0,
        })
    }

    pub fn from_profile(profile: &Profile, rank: usize, n: usize, length: f64) -> Result<Self, NumevalError> {
        let field: Vec<f64> = (0..n)
            .map(|k| profile.sample(k as f64 * length / n as f64, length))
            .collect();
        GridState::new(vec![field; rank], length)
    }

    pub fn points(&self) -> usize {
        self.fields[0].len()
    }

    pub fn rank(&self) -> usize {
        self.fields.len()
    }

    pub fn dz(&self) -> f64 {
        self.length / self.points() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.points()).map(|k| k as f64 * dz).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.fields
            .iter()
            .flatten()
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Built-in initial data, centred on the middle of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Zero,
    /// `a·sin(2π·mode·z/L)`.
    Sine { amplitude: f64, mode: u32 },
    /// `a·exp(−((z − L/2)/w)²)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `a·sech((z − L/2)/w)`.
    Sech { amplitude: f64, width: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Sech {
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

impl Profile {
    pub fn sample(&self, z: f64, length: f64) -> f64 {
        let c = z - length / 2.0;
        match *self {
            Profile::Zero => 0.0,
            Profile::Sine { amplitude, mode } => {
                amplitude * (2.0 * std::f64::consts::PI * mode as f64 * z / length).sin()
            }
            Profile::Gaussian { amplitude, width } => amplitude * (-(c / width).powi(2)).exp(),
            Profile::Sech { amplitude, width } => amplitude / (c / width).cosh(),
        }
    }
}

/// Parses `zero`, `sine[:a,mode]`, `gaussian[:a,w]`, `sech[:a,w]`.
impl FromStr for Profile {
    type Err = NumevalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumevalError::Profile(s.to_string());
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums: Vec<f64> = match args {
            Some(a) => a
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let pair = |d0: f64, d1: f64| -> Result<(f64, f64), NumevalError> {
            match nums.as_slice() {
                [] => Ok((d0, d1)),
                [a, b] if a.is_finite() && b.is_finite() => Ok((*a, *b)),
                _ => Err(bad()),
            }
        };
        match kind {
            "zero" if nums.is_empty() => Ok(Profile::Zero),
            "sine" => {
                let (amplitude, mode) = pair(1.0, 1.0)?;
                if mode < 1.0 || mode.fract() != 0.0 {
                    return Err(bad());
                }
                Ok(Profile::Sine {
                    amplitude,
                    mode: mode as u32,
                })
            }
            "gaussian" | "sech" => {
                let (amplitude, width) = pair(1.0, 1.0)?;
                if width <= 0.0 {
                    return Err(bad());
                }
                Ok(if kind == "sech" {
                    Profile::Sech { amplitude, width }
                } else {
                    Profile::Gaussian { amplitude, width }
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Spectral differentiation on a fixed periodic grid.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl Spectral {
    pub fn new(n: usize, length: f64) -> Result<Self, NumevalError> {
        if !n.is_power_of_two() || n < 2 {
            return Err(NumevalError::GridSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(NumevalError::Length(length));
        }
        let mut planner = FftPlanner::new();
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|k| {
                let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                k * base
            })
            .collect();
        Ok(Spectral {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumbers,
        })
    }

    /// Largest resolved wavenumber `πN/L`.
    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumbers[self.n / 2].abs()
    }

    /// `[f, f', …, f^(max_order)]`.
    pub fn derivatives(&self, f: &[f64], max_order: u32) -> Vec<Vec<f64>> {
        let mut out = vec![f.to_vec()];
        if max_order == 0 {
            return out;
        }
        let mut hat: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut hat);
        let scale = 1.0 / self.n as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for order in 1..=max_order {
            for (k, (b, h)) in buf.iter_mut().zip(&hat).enumerate() {
                // Odd derivatives of the Nyquist mode are not representable on the grid.
                if order % 2 == 1 && k == self.n / 2 {
                    *b = Complex64::new(0.0, 0.0);
                    continue;
                }
                let ik = Complex64::new(0.0, self.wavenumbers[k]).powu(order);
                *b = h * ik * scale;
            }
            self.inverse.process(&mut buf);
            out.push(buf.iter().map(|c| c.re).collect());
        }
        out
    }

    pub fn derivative(&self, f: &[f64], order: u32) -> Vec<f64> {
        self.derivatives(f, order).pop().expect("at least the input")
    }
}

/// `(field index, derivative order, exponent)`.
type Factor = (usize, u32, u32);

/// A differential polynomial compiled for pointwise evaluation on jets.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<Factor>)>,
}

impl CompiledPoly {
    pub fn new(p: &DiffPoly) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .factors()
                    .iter()
                    .map(|&(v, e)| (v.index() - 1, v.order(), e))
                    .collect();
                (c.to_f64().unwrap_or(f64::NAN), factors)
            })
            .collect();
        CompiledPoly { terms }
    }

    pub fn max_order(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|(_, f)| f.iter().map(|&(_, o, _)| o))
            .max()
            .unwrap_or(0)
    }

    /// `jets[i][k][x]` is `u_{i+1}^(k)` at grid point `x`.
    pub fn eval(&self, jets: &[Vec<Vec<f64>>], points: usize) -> Vec<f64> {
        let mut out = vec![0.0; points];
        for (c, factors) in &self.terms {
            for (x, o) in out.iter_mut().enumerate() {
                let mut t = *c;
                for &(i, k, e) in factors {
                    t *= jets[i][k as usize][x].powi(e as i32);
                }
                *o += t;
            }
        }
        out
    }

    /// Sum of `|c|·κ^k` over terms linear in a single jet `u_i^(k)`: the growth
    /// rate of the linearized operator at wavenumber `κ`.
    fn linear_growth(&self, kappa: f64) -> f64 {
        self.terms
            .iter()
            .filter(|(_, f)| f.len() == 1 && f[0].2 == 1)
            .map(|(c, f)| c.abs() * kappa.powi(f[0].1 as i32))
            .sum()
    }
}

/// Evaluates `∂_t u_i = rhs_i(u)` on grid states.
#[derive(Clone)]
pub struct Evaluator {
    rhs: Vec<CompiledPoly>,
    max_order: u32,
    spectral: Spectral,
}

/// Compiles flow right sides for a fixed grid.
pub fn compile_rhs(rhs: &[DiffPoly], n: usize, length: f64) -> Result<Evaluator, NumevalError> {
    let rhs: Vec<CompiledPoly> = rhs.iter().map(CompiledPoly::new).collect();
    let max_order = rhs.iter().map(CompiledPoly::max_order).max().unwrap_or(0);
    Ok(Evaluator {
        rhs,
        max_order,
        spectral: Spectral::new(n, length)?,
    })
}

impl Evaluator {
    pub fn rank(&self) -> usize {
        self.rhs.len()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn jets(&self, fields: &[Vec<f64>], order: u32) -> Vec<Vec<Vec<f64>>> {
        fields
            .iter()
            .map(|f| self.spectral.derivatives(f, order))
            .collect()
    }

    fn eval_fields(&self, fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let jets = self.jets(fields, self.max_order);
        let points = fields[0].len();
        self.rhs.iter().map(|p| p.eval(&jets, points)).collect()
    }

    pub fn eval(&self, state: &GridState) -> Result<Vec<Vec<f64>>, NumevalError> {
        self.check(state)?;
        Ok(self.eval_fields(&state.fields))
    }

    fn check(&self, state: &GridState) -> Result<(), NumevalError> {
        if state.rank() != self.rank() {
            return Err(NumevalError::FieldCount {
                expected: self.rank(),
                got: state.rank(),
            });
        }
        if state.points() != self.spectral.n {
            return Err(NumevalError::GridSize(state.points()));
        }
        Ok(())
    }

    /// `dt` times the linearized growth rate at the largest wavenumber.
    pub fn stability_number(&self, dt: f64) -> f64 {
        let kappa = self.spectral.max_wavenumber();
        dt * self
            .rhs
            .iter()
            .map(|p| p.linear_growth(kappa))
            .fold(0.0, f64::max)
    }
}

/// RK4 is stable on the imaginary axis up to `2√2`; this leaves a small margin.
pub const RK4_STABILITY_LIMIT: f64 = 2.8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Scheme {
    #[default]
    Rk4,
}

/// Frames of an integration run, including the initial state.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub frames: Vec<GridState>,
}

impl Trajectory {
    pub fn last(&self) -> &GridState {
        self.frames.last().expect("trajectory holds the initial state")
    }

    /// CSV rows `t,z,u1,…,ur`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,z");
        for i in 1..=self.frames[0].rank() {
            let _ = write!(out, ",u{i}");
        }
        out.push('\n');
        for frame in &self.frames {
            for (k, z) in frame.grid().into_iter().enumerate() {
                let _ = write!(out, "{},{}", frame.t, z);
                for f in &frame.fields {
                    let _ = write!(out, ",{}", f[k]);
                }
                out.push('\n');
            }
        }
        out
    }
}

fn axpy(base: &[Vec<f64>], k: &[Vec<f64>], a: f64) -> Vec<Vec<f64>> {
    base.iter()
        .zip(k)
        .map(|(b, k)| b.iter().zip(k).map(|(x, y)| x + a * y).collect())
        .collect()
}

/// Integrates `steps` steps of size `dt`, keeping every `stride`-th state.
pub fn integrate(
    s0: &GridState,
    eval: &Evaluator,
    dt: f64,
    steps: usize,
    stride: usize,
    scheme: Scheme,
) -> Result<Trajectory, NumevalError> {
    eval.check(s0)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NumevalError::TimeStep(dt));
    }
    let stability = eval.stability_number(dt);
    if stability > RK4_STABILITY_LIMIT {
        log::warn!(
            "dt·growth = {stability:.3} exceeds the RK4 stability limit {RK4_STABILITY_LIMIT}; expect blow-up"
        );
    }
    let stride = stride.max(1);
    let mut frames = vec![s0.clone()];
    let mut u = s0.fields.clone();
    let Scheme::Rk4 = scheme;
    for step in 1..=steps {
        let k1 = eval.eval_fields(&u);
        let k2 = eval.eval_fields(&axpy(&u, &k1, dt / 2.0));
        let k3 = eval.eval_fields(&axpy(&u, &k2, dt / 2.0));
        let k4 = eval.eval_fields(&axpy(&u, &k3, dt));
        for (i, f) in u.iter_mut().enumerate() {
            for (x, v) in f.iter_mut().enumerate() {
                *v += dt / 6.0 * (k1[i][x] + 2.0 * k2[i][x] + 2.0 * k3[i][x] + k4[i][x]);
            }
        }
        let t = s0.t + step as f64 * dt;
        if u.iter().flatten().any(|x| !x.is_finite()) {
            return Err(NumevalError::NonFinite { step, t });
        }
        if step % stride == 0 || step == steps {
            frames.push(GridState {
                fields: u.clone(),
                length: s0.length,
                t,
            });
        }
    }
    Ok(Trajectory { frames })
}

/// `∫₀ᴸ p(u) dz`, spectrally accurate for smooth periodic data.
pub fn integral(p: &CompiledPoly, state: &GridState, spectral: &Spectral) -> f64 {
    let jets: Vec<_> = state
        .fields
        .iter()
        .map(|f| spectral.derivatives(f, p.max_order()))
        .collect();
    p.eval(&jets, state.points()).iter().sum::<f64>() * state.dz()
}

/// Time series of one conserved quantity.
#[derive(Clone, Debug, Serialize)]
pub struct DensitySeries {
    pub density: String,
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    pub max_rel_drift: f64,
    /// False when the initial integral vanished and the drift is absolute.
    pub relative: bool,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub densities: Vec<DensitySeries>,
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.densities
            .iter()
            .map(|d| d.max_rel_drift)
            .fold(0.0, f64::max)
    }
}

/// Below this the initial integral counts as zero and drift is reported absolutely.
const ZERO_INTEGRAL: f64 = 1e-12;

/// Evaluates each named density on every frame and measures drift from `t = 0`.
pub fn monitor(traj: &Trajectory, densities: &[(String, DiffPoly)]) -> Result<ConservationReport, NumevalError> {
    let first = &traj.frames[0];
    let spectral = Spectral::new(first.points(), first.length)?;
    let mut out = Vec::new();
    for (name, p) in densities {
        let compiled = CompiledPoly::new(p);
        let values: Vec<f64> = traj
            .frames
            .iter()
            .map(|s| integral(&compiled, s, &spectral))
            .collect();
        let initial = values[0];
        let relative = initial.abs() > ZERO_INTEGRAL;
        let scale = if relative { initial.abs() } else { 1.0 };
        let max_rel_drift = values
            .iter()
            .map(|v| (v - initial).abs() / scale)
            .fold(0.0, f64::max);
        out.push(DensitySeries {
            density: name.clone(),
            initial,
            final_value: *values.last().expect("nonempty"),
            max_rel_drift,
            relative,
            times: traj.frames.iter().map(|s| s.t).collect(),
            values,
        });
    }
    Ok(ConservationReport { densities: out })
}

/// Shift `s ∈ [0, L)` maximizing the periodic cross-correlation `Σ a(z) b(z + s)`,
/// refined to sub-grid accuracy by a parabolic fit.
pub fn correlation_shift(a: &[f64], b: &[f64], length: f64) -> f64 {
    let n = a.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut c: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    inv.process(&mut c);
    let corr: Vec<f64> = c.iter().map(|z| z.re).collect();
    let (k, _) = corr
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
    let (l, r) = (corr[(k + n - 1) % n], corr[(k + 1) % n]);
    let denom = l - 2.0 * corr[k] + r;
    let frac = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    ((k as f64 + frac) * length / n as f64).rem_euclid(length)
}
