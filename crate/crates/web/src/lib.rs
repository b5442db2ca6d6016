//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: rendering a flow and its density, running the
//! symbolic check suite, and stepping a periodic simulation while tracking the
//! drift of conserved integrals. Each binding wraps a plain Rust function that
//! returns `Result<_, String>` so the logic can be tested natively.

use mkdv_core::checks::{run_checks, CheckKind};
use mkdv_core::conserved::hamiltonian_density;
use mkdv_core::numeval::{compile_rhs, integral, integrate, CompiledPoly, Evaluator, GridState, Profile, Scheme};
use mkdv_core::{AlgebraCtx, Hierarchy};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn ctx(rank: usize) -> Result<AlgebraCtx, String> {
    AlgebraCtx::new(rank).map_err(|e| e.to_string())
}

fn parse_flows(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad flow `{}`", t.trim())))
        .collect()
}

/// `{algebra, n, latex, text, density_latex, density_text}` for flow `n`.
pub fn flow_summary(rank: usize, n: u32) -> Result<String, String> {
    let hier = Hierarchy::new(ctx(rank)?);
    let degree = n as i32 + 2;
    let flow = hier.flow(n, degree).map_err(|e| e.to_string())?;
    let h = hamiltonian_density(&hier, n, degree).map_err(|e| e.to_string())?;
    Ok(json!({
        "algebra": flow.ctx.name(),
        "n": n,
        "latex": flow.to_latex(),
        "text": flow.rhs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "density_latex": h.value.to_latex(),
        "density_text": h.value.to_string(),
    })
    .to_string())
}

/// The check report as JSON. `checks` is a comma-separated list or `all`.
pub fn check_report(rank: usize, flows: &str, checks: &str) -> Result<String, String> {
    let hier = Hierarchy::new(ctx(rank)?);
    let flows = parse_flows(flows)?;
    let kinds = if checks.trim() == "all" {
        CheckKind::ALL.to_vec()
    } else {
        checks
            .split(',')
            .map(|s| s.parse::<CheckKind>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    let degree = Hierarchy::min_degree(&flows);
    let report = run_checks(&hier, &flows, degree, &kinds).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = flowSummary)]
pub fn flow_summary_js(rank: usize, n: u32) -> Result<String, JsError> {
    flow_summary(rank, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = checkReport)]
pub fn check_report_js(rank: usize, flows: &str, checks: &str) -> Result<String, JsError> {
    check_report(rank, flows, checks).map_err(|e| JsError::new(&e))
}

/// A running integration of one flow on a periodic grid.
#[wasm_bindgen]
pub struct Simulation {
    eval: Evaluator,
    state: GridState,
    dt: f64,
    densities: Vec<(String, CompiledPoly, f64)>,
}

impl Simulation {
    pub fn create(rank: usize, n: u32, points: usize, length: f64, dt: f64, profile: &str) -> Result<Self, String> {
        let ctx = ctx(rank)?;
        let hier = Hierarchy::new(ctx);
        let flow = hier.flow(n, n as i32 + 2).map_err(|e| e.to_string())?;
        let profile: Profile = profile.parse().map_err(|e: mkdv_core::numeval::NumevalError| e.to_string())?;
        let eval = compile_rhs(&flow.rhs, points, length).map_err(|e| e.to_string())?;
        let state = GridState::from_profile(&profile, rank, points, length).map_err(|e| e.to_string())?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(format!("time step {dt} must be positive"));
        }
        let mut densities = Vec::new();
        for k in (1..=n).filter(|&k| ctx.is_exponent(k as i64)) {
            let h = hamiltonian_density(&hier, k, k as i32 + 2).map_err(|e| e.to_string())?;
            let compiled = CompiledPoly::new(&h.value);
            let initial = integral(&compiled, &state, eval.spectral());
            densities.push((h.label(), compiled, initial));
        }
        Ok(Simulation { eval, state, dt, densities })
    }

    pub fn step(&mut self, steps: usize) -> Result<(), String> {
        if steps == 0 {
            return Ok(());
        }
        let traj = integrate(&self.state, &self.eval, self.dt, steps, steps, Scheme::Rk4).map_err(|e| e.to_string())?;
        self.state = traj.last().clone();
        Ok(())
    }

    /// `[{density, initial, current, drift}]`, drift relative unless the initial value vanishes.
    pub fn drift(&self) -> String {
        let rows: Vec<_> = self
            .densities
            .iter()
            .map(|(name, p, initial)| {
                let current = integral(p, &self.state, self.eval.spectral());
                let scale = if initial.abs() > 1e-12 { initial.abs() } else { 1.0 };
                json!({
                    "density": name,
                    "initial": initial,
                    "current": current,
                    "drift": (current - initial).abs() / scale,
                })
            })
            .collect();
        serde_json::Value::Array(rows).to_string()
    }
}

#[wasm_bindgen]
impl Simulation {
    /// `profile` is `zero`, `sine[:a,mode]`, `gaussian[:a,w]` or `sech[:a,w]`.
    #[wasm_bindgen(constructor)]
    pub fn new(rank: usize, n: u32, points: usize, length: f64, dt: f64, profile: &str) -> Result<Simulation, JsError> {
        Simulation::create(rank, n, points, length, dt, profile).map_err(|e| JsError::new(&e))
    }

    /// Advances `steps` RK4 steps.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        self.step(steps).map_err(|e| JsError::new(&e))
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// `dt` times the fastest linear growth rate; RK4 is stable below about 2.8.
    pub fn stability(&self) -> f64 {
        self.eval.stability_number(self.dt)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.state.grid()
    }

    /// Values of field `i` (0-based) on the grid.
    pub fn field(&self, i: usize) -> Vec<f64> {
        self.state.fields.get(i).cloned().unwrap_or_default()
    }

    #[wasm_bindgen(js_name = driftJson)]
    pub fn drift_json(&self) -> String {
        self.drift()
    }
}
