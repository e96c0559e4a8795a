//! Exact mode solutions, fixed-step RK4, conservation drift, and the
//! Poisson-tensor test for fields with an added interaction `W`.

use std::io::Write;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::model::{
    flow_operator, hamiltonian_form, Degeneracy, FrequencyTriple, LinearOperator, Mat6, PUParams,
    PoissonTensor, QuadraticForm, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trig {
    Sin,
    Cos,
}

/// `t^power · trig(ω t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTerm {
    pub power: u32,
    pub omega: f64,
    pub trig: Trig,
}

impl ModeTerm {
    /// `dʳ/dtʳ trig(ωt)`.
    fn trig_derivative(&self, r: u32, t: f64) -> f64 {
        let (s, c) = (self.omega * t).sin_cos();
        let shift = match self.trig {
            Trig::Sin => r,
            Trig::Cos => r + 1,
        };
        let v = match shift % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        };
        self.omega.powi(r as i32) * v
    }

    /// `dⁿ/dtⁿ [tᵐ trig(ωt)]` by the Leibniz rule.
    pub fn derivative(&self, n: u32, t: f64) -> f64 {
        let m = self.power;
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut falling = 1.0;
        for k in 0..=n.min(m) {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
                falling *= (m - k + 1) as f64;
            }
            total += binom * falling * t.powi((m - k) as i32) * self.trig_derivative(n - k, t);
        }
        total
    }
}

/// Superposition of six basis terms matching the degeneracy class:
///
/// - non-degenerate: `sin ω₁t, cos ω₁t, sin ω₂t, cos ω₂t, sin ω₃t, cos ω₃t`;
/// - partially degenerate (simple ωₐ, double ω_b): `sin ωₐt, cos ωₐt,
///   t sin ω_bt, t cos ω_bt, sin ω_bt, cos ω_bt`;
/// - fully degenerate: `sin ωt, cos ωt, t sin ωt, t cos ωt, t² sin ωt, t² cos ωt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub frequencies: FrequencyTriple,
    pub terms: [ModeTerm; 6],
    pub coefficients: [f64; 6],
}

fn basis(f: &FrequencyTriple) -> [ModeTerm; 6] {
    let t = |power, omega, trig| ModeTerm { power, omega, trig };
    let w = f.omega();
    let tol = f.tolerance();
    match f.degeneracy() {
        Degeneracy::NonDegenerate => [
            t(0, w[0], Trig::Sin),
            t(0, w[0], Trig::Cos),
            t(0, w[1], Trig::Sin),
            t(0, w[1], Trig::Cos),
            t(0, w[2], Trig::Sin),
            t(0, w[2], Trig::Cos),
        ],
        Degeneracy::PartiallyDegenerate => {
            let sq = f.squares();
            let (simple, double) = if (sq[0] - sq[1]).abs() <= tol {
                (w[2], 0.5 * (w[0] + w[1]))
            } else {
                (w[0], 0.5 * (w[1] + w[2]))
            };
            [
                t(0, simple, Trig::Sin),
                t(0, simple, Trig::Cos),
                t(1, double, Trig::Sin),
                t(1, double, Trig::Cos),
                t(0, double, Trig::Sin),
                t(0, double, Trig::Cos),
            ]
        }
        Degeneracy::FullyDegenerate => {
            let om = (w[0] + w[1] + w[2]) / 3.0;
            [
                t(0, om, Trig::Sin),
                t(0, om, Trig::Cos),
                t(1, om, Trig::Sin),
                t(1, om, Trig::Cos),
                t(2, om, Trig::Sin),
                t(2, om, Trig::Cos),
            ]
        }
    }
}

/// Matches the six mode coefficients to `initial` at `t = 0`.
pub fn solve_exact(f: &FrequencyTriple, initial: &StateVector) -> Result<ExactSolution> {
    if initial.iter().any(|x| !x.is_finite()) {
        return Err(PuError::NonFinite { time: 0.0 });
    }
    let terms = basis(f);
    let b = Matrix6::from_fn(|n, k| terms[k].derivative(n as u32, 0.0));
    let scale = b.amax();
    let lu = b.lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(6) {
        return Err(PuError::SingularModeMatrix);
    }
    let c = lu.solve(initial).ok_or(PuError::SingularModeMatrix)?;
    Ok(ExactSolution {
        frequencies: *f,
        terms,
        coefficients: [c[0], c[1], c[2], c[3], c[4], c[5]],
    })
}

impl ExactSolution {
    /// `q⁽ⁿ⁾(t)`.
    pub fn derivative(&self, n: u32, t: f64) -> f64 {
        self.terms
            .iter()
            .zip(self.coefficients)
            .map(|(term, c)| c * term.derivative(n, t))
            .sum()
    }

    pub fn eval(&self, t: f64) -> StateVector {
        StateVector::from_fn(|i, _| self.derivative(i as u32, t))
    }

    /// `(q, q̇, …, q⁽⁶⁾)`.
    pub fn jet(&self, t: f64) -> [f64; 7] {
        std::array::from_fn(|i| self.derivative(i as u32, t))
    }

    /// True when a `t`- or `t²`-multiplied term is excited.
    pub fn has_secular_terms(&self) -> bool {
        let scale = self
            .coefficients
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
        self.terms
            .iter()
            .zip(self.coefficients)
            .any(|(t, c)| t.power > 0 && c.abs() > 1e-12 * scale)
    }

    pub fn sample(&self, times: &[f64]) -> Trajectory {
        Trajectory {
            times: times.to_vec(),
            states: times.iter().map(|&t| self.eval(t)).collect(),
            method: Method::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    Rk4,
    /// Repeated application of `exp(F h)`.
    Propagator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub method: Method,
}

impl Trajectory {
    /// Columns `t, q, q1..q5, H1, H2, H3`.
    pub fn write_csv<W: Write>(&self, p: &PUParams, out: W) -> Result<()> {
        let h: Vec<QuadraticForm> = (1..=3)
            .map(|n| hamiltonian_form(n, p))
            .collect::<Result<_>>()?;
        let io = |e: csv::Error| PuError::InvalidStep(format!("CSV output failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "q", "q1", "q2", "q3", "q4", "q5", "H1", "H2", "H3"])
            .map_err(io)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut rec = vec![format!("{t:.16e}")];
            rec.extend(s.iter().map(|x| format!("{x:.16e}")));
            rec.extend(h.iter().map(|f| format!("{:.16e}", f.eval(s))));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()
            .map_err(|e| PuError::InvalidStep(format!("CSV output failed: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `W(x) = λ x⁴ / 4`.
    Quartic { lambda: f64 },
    /// `W(x) = Σ cₖ xᵏ`.
    Polynomial { coefficients: Vec<f64> },
}

/// Potential `W` of one state slot, entering as `−W′` in the last component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub potential: Potential,
    /// 0 for `q`, 1 for `q̇`, … 5 for `q⁽⁵⁾`.
    #[serde(default)]
    pub slot: usize,
}

impl InteractionSpec {
    pub fn quartic(lambda: f64, slot: usize) -> Self {
        Self {
            potential: Potential::Quartic { lambda },
            slot,
        }
    }

    /// Requires a valid slot, finite coefficients and degree at least 3.
    pub fn validate(&self) -> Result<()> {
        if self.slot > 5 {
            return Err(PuError::InvalidInteraction(format!(
                "slot {} out of range 0..=5",
                self.slot
            )));
        }
        match &self.potential {
            Potential::Quartic { lambda } => {
                if !lambda.is_finite() || *lambda == 0.0 {
                    return Err(PuError::InvalidInteraction(
                        "quartic coupling must be finite and nonzero".into(),
                    ));
                }
            }
            Potential::Polynomial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(PuError::InvalidInteraction(
                        "coefficients must be finite".into(),
                    ));
                }
                let degree = coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                if degree < 3 {
                    return Err(PuError::InvalidInteraction(format!(
                        "polynomial degree {degree} < 3 only shifts the linear model"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `W′(x)`.
    pub fn dw(&self, x: f64) -> f64 {
        match &self.potential {
            Potential::Quartic { lambda } => lambda * x * x * x,
            Potential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c * x.powi(k as i32 - 1))
                .sum(),
        }
    }

    /// `W″(x)`.
    pub fn d2w(&self, x: f64) -> f64 {
        match &self.potential {
            Potential::Quartic { lambda } => 3.0 * lambda * x * x,
            Potential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| (k * (k - 1)) as f64 * c * x.powi(k as i32 - 2))
                .sum(),
        }
    }
}

/// `v(s) = F s − W′(s_slot) e₆`.
pub fn vector_field(p: &PUParams, w: Option<&InteractionSpec>, s: &StateVector) -> StateVector {
    let mut v = flow_operator(p).apply(s);
    if let Some(w) = w {
        v[5] -= w.dw(s[w.slot]);
    }
    v
}

/// Classical fixed-step RK4 with `n = round(t_end/dt)` steps of size `t_end/n`.
pub fn integrate_rk4(
    p: &PUParams,
    initial: &StateVector,
    t_end: f64,
    dt: f64,
    interaction: Option<&InteractionSpec>,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(PuError::InvalidStep(format!(
            "need dt > 0 and t_end > 0, got dt={dt}, t_end={t_end}"
        )));
    }
    if let Some(w) = interaction {
        w.validate()?;
    }
    let n = ((t_end / dt).round() as usize).max(1);
    let h = t_end / n as f64;
    let field = |s: &StateVector| vector_field(p, interaction, s);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut s = *initial;
    times.push(0.0);
    states.push(s);
    for step in 1..=n {
        let k1 = field(&s);
        let k2 = field(&(s + k1 * (0.5 * h)));
        let k3 = field(&(s + k2 * (0.5 * h)));
        let k4 = field(&(s + k3 * h));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t = step as f64 * h;
        if s.iter().any(|x| !x.is_finite()) {
            return Err(PuError::NonFinite { time: t });
        }
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::Rk4,
    })
}

/// Linear flow sampled at `t = k·h`, `k = 0..=n`, via `exp(F h)`; valid for
/// any parameters, including non-oscillatory ones.
pub fn propagate_linear(
    p: &PUParams,
    initial: &StateVector,
    h: f64,
    n: usize,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(PuError::InvalidStep(format!("need h > 0, got {h}")));
    }
    let step: Mat6 = (flow_operator(p).0 * h).exp();
    let mut s = *initial;
    let mut times = vec![0.0];
    let mut states = vec![s];
    for k in 1..=n {
        s = step * s;
        let t = k as f64 * h;
        if s.iter().any(|x| !x.is_finite()) {
            return Err(PuError::NonFinite { time: t });
        }
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::Propagator,
    })
}

/// Per form, `max_t |H(s(t)) − H(s(0))| / max(|H(s(0))|, 1e-300)`.
pub fn conservation_drift(traj: &Trajectory, forms: &[QuadraticForm]) -> Vec<f64> {
    forms
        .iter()
        .map(|h| {
            let h0 = h.eval(&traj.states[0]);
            let floor = h0.abs().max(1e-300);
            traj.states
                .iter()
                .map(|s| (h.eval(s) - h0).abs() / floor)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `∂v/∂s` at `s`: `F` with `−W″(s_slot)` added at `(5, slot)`.
pub fn interaction_field_jacobian(
    p: &PUParams,
    w: Option<&InteractionSpec>,
    s: &StateVector,
) -> LinearOperator {
    let mut m = flow_operator(p).0;
    if let Some(w) = w {
        m[(5, w.slot)] -= w.d2w(s[w.slot]);
    }
    LinearOperator(m)
}

/// `Jac·J + J·Jacᵀ`, the Lie derivative of a constant tensor along the field
/// linearised at one point.
pub fn lie_derivative_residual(jac: &LinearOperator, j: &PoissonTensor) -> Mat6 {
    jac.0 * j.matrix() + j.matrix() * jac.0.transpose()
}

/// `‖ds/dt − F s‖` for an exact solution at `t`.
pub fn flow_residual(sol: &ExactSolution, p: &PUParams, t: f64) -> f64 {
    let s = sol.eval(t);
    let ds = Vector6::from_fn(|i, _| sol.derivative(i as u32 + 1, t));
    (ds - flow_operator(p).apply(&s)).norm()
}
