//! The hierarchy `Hₙ` of conserved quadratic Hamiltonians and combined flows
//! `J̄ ∇H̄` built from weighted sums of tensors and Hamiltonians.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::model::{
    flow_operator, frequencies_from_params, hamiltonian_form, poisson_tensor, FrequencyTriple,
    LinearOperator, Mat6, PUParams, PoissonTensor, QuadraticForm, DEFAULT_DEGENERACY_TOL,
};
use crate::symmetries::{lie_generator, symmetry_action_on_form};

/// `M` advances `(H₁,H₂,H₃)` by one step of `X₅`; `M = U D U⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyMatrix {
    pub m: Matrix3<f64>,
    pub u: Matrix3<f64>,
    /// `(ω₁²ω₂², ω₁²ω₃², ω₂²ω₃²)` for sorted frequencies.
    pub d: Vector3<f64>,
}

/// Pair products `(ω₁²ω₂², ω₁²ω₃², ω₂²ω₃²)`.
pub(crate) fn pair_products(f: &FrequencyTriple) -> [f64; 3] {
    let [l1, l2, l3] = f.squares();
    [l1 * l2, l1 * l3, l2 * l3]
}

fn m_matrix(p: &PUParams) -> Matrix3<f64> {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, g * g, -a * g, b)
}

pub fn hierarchy_matrix(p: &PUParams) -> Result<HierarchyMatrix> {
    let f = frequencies_from_params(p, DEFAULT_DEGENERACY_TOL)?;
    f.require_non_degenerate()?;
    let d = pair_products(&f);
    let u = Matrix3::from_fn(|r, c| match r {
        0 => 1.0 / (d[c] * d[c]),
        1 => 1.0 / d[c],
        _ => 1.0,
    });
    Ok(HierarchyMatrix {
        m: m_matrix(p),
        u,
        d: Vector3::from(d),
    })
}

/// Weights `(x₁, x₂, x₃)` with `Hₙ = x₁H₁ + x₂H₂ + x₃H₃`, from the
/// frequency-polynomial closed form.
pub fn closed_form_weights(n: usize, f: &FrequencyTriple) -> Result<[f64; 3]> {
    if n == 0 {
        return Err(PuError::InvalidIndex {
            what: "hierarchy (n >= 1)",
            index: n,
        });
    }
    f.require_non_degenerate()?;
    let [w1, w2, w3] = f.squares();
    let m = n as i32 - 2;
    let (p12, p13, p23) = (w1 * w2, w1 * w3, w2 * w3);
    let x1 = w3 * w3 * p12.powi(m + 1) / ((w1 - w3) * (w2 - w3))
        + w1 * w1 * p23.powi(m + 1) / ((w1 - w2) * (w1 - w3))
        + w2 * w2 * p13.powi(m + 1) / ((w2 - w1) * (w2 - w3));
    let x2 = w2 * (w1 + w3) * p13.powi(m) / ((w1 - w2) * (w2 - w3))
        - w3 * (w1 + w2) * p12.powi(m) / ((w1 - w3) * (w2 - w3))
        - w1 * (w2 + w3) * p23.powi(m) / ((w1 - w2) * (w1 - w3));
    let x3 = p12.powi(m) / ((w1 - w3) * (w2 - w3)) + p23.powi(m) / ((w1 - w2) * (w1 - w3))
        - p13.powi(m) / ((w1 - w2) * (w2 - w3));
    Ok([x1, x2, x3])
}

fn combine(w: [f64; 3], p: &PUParams) -> Result<QuadraticForm> {
    Ok(w[0] * hamiltonian_form(1, p)?
        + w[1] * hamiltonian_form(2, p)?
        + w[2] * hamiltonian_form(3, p)?)
}

/// `Hₙ` from the closed form. Refused for (nearly) degenerate frequencies.
pub fn hamiltonian_n_closed(n: usize, p: &PUParams) -> Result<QuadraticForm> {
    let f = frequencies_from_params(p, DEFAULT_DEGENERACY_TOL)?;
    combine(closed_form_weights(n, &f)?, p)
}

/// `Hₙ` from `A_{k+1} = J₂⁻¹ J₁ A_k` starting at `H₁`.
pub fn hamiltonian_n_recursive(n: usize, p: &PUParams) -> Result<QuadraticForm> {
    if n == 0 {
        return Err(PuError::InvalidIndex {
            what: "hierarchy (n >= 1)",
            index: n,
        });
    }
    let j1 = poisson_tensor(1, p)?;
    let j2 = poisson_tensor(2, p)?;
    let step = recursion_operator(&j2, &j1)?;
    let mut a = *hamiltonian_form(1, p)?.matrix();
    for _ in 1..n {
        let next = step * a;
        let asym = (next - next.transpose()).amax() / next.amax().max(f64::MIN_POSITIVE);
        if asym > 1e-8 {
            return Err(PuError::RecursionAsymmetry(asym));
        }
        a = next;
    }
    Ok(QuadraticForm::new(a))
}

/// `R = J_hi⁻¹ J_lo`, so that `J_hi (R A) = J_lo A`.
pub fn recursion_operator(j_hi: &PoissonTensor, j_lo: &PoissonTensor) -> Result<Mat6> {
    let inv = j_hi
        .matrix()
        .try_inverse()
        .ok_or_else(|| PuError::SingularCombination("Poisson tensor is not invertible".into()))?;
    Ok(inv * j_lo.matrix())
}

/// `Hₙ = X₅ⁿ⁻¹(H₁)`.
pub fn hamiltonian_n_symmetry(n: usize, p: &PUParams) -> Result<QuadraticForm> {
    if n == 0 {
        return Err(PuError::InvalidIndex {
            what: "hierarchy (n >= 1)",
            index: n,
        });
    }
    let x5 = lie_generator(5, p)?;
    let mut h = hamiltonian_form(1, p)?;
    for _ in 1..n {
        h = symmetry_action_on_form(&x5, &h);
    }
    Ok(h)
}

/// Tensor weights `(c₁,c₂,c₃)` and Hamiltonian weights `(c₄,c₅,c₆)` of
/// `J̄ = c₁J₁ + c₂J₂ + c₃J₃`, `H̄ = c₄H₁ + c₅H₂ + c₆H₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl CombinationCoeffs {
    pub fn new(c: [f64; 6]) -> Self {
        Self {
            c1: c[0],
            c2: c[1],
            c3: c[2],
            c4: c[3],
            c5: c[4],
            c6: c[5],
        }
    }

    pub fn tensor_weights(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    pub fn hamiltonian_weights(&self) -> [f64; 3] {
        [self.c4, self.c5, self.c6]
    }

    /// Solves for the tensor weights that make `J̄ ∇H̄` the flow, given `H̄`.
    pub fn from_hamiltonian_weights(c4: f64, c5: f64, c6: f64, p: &PUParams) -> Result<Self> {
        coeffs_dual(c4, c5, c6, p)
    }

    /// Solves for the Hamiltonian weights that make `J̄ ∇H̄` the flow, given `J̄`.
    pub fn from_tensor_weights(c1: f64, c2: f64, c3: f64, p: &PUParams) -> Result<Self> {
        if p.gamma == 0.0 {
            return Err(PuError::GammaZero);
        }
        let k = flow_weight_matrix(c1, c2, c3, p);
        let sol = k.lu().solve(&Vector3::new(1.0, 0.0, 0.0)).ok_or_else(|| {
            PuError::SingularCombination(format!(
                "no Hamiltonian weights produce the flow for tensor weights ({c1}, {c2}, {c3})"
            ))
        })?;
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(PuError::SingularCombination(format!(
                "no Hamiltonian weights produce the flow for tensor weights ({c1}, {c2}, {c3})"
            )));
        }
        Ok(Self::new([c1, c2, c3, sol[0], sol[1], sol[2]]))
    }
}

/// Rows map `(c₄,c₅,c₆)` to the coefficients of `X₁`, `−X₂`, `X₃` in `J̄Ā`.
fn flow_weight_matrix(c1: f64, c2: f64, c3: f64, p: &PUParams) -> Matrix3<f64> {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    Matrix3::new(
        c1 + a * c2 / g + (a * a - b) * c3 / (g * g),
        c2 + a * c3 / g,
        c3,
        a * c3 / (g * g) + c2 / g,
        c3 / g,
        g * c1,
        c3 / (g * g),
        c1,
        b * c1 + c2,
    )
}

/// `(c₁,c₂,c₃)` from `(c₄,c₅,c₆)` such that `J̄ ∇H̄` is the flow.
///
/// The common denominator `∏(c₄ + c₅P + c₆P²)` over the pair products `P`
/// equals `det(c₄I + c₅M + c₆M²)`.
pub fn coeffs_dual(c4: f64, c5: f64, c6: f64, p: &PUParams) -> Result<CombinationCoeffs> {
    if p.gamma == 0.0 {
        return Err(PuError::GammaZero);
    }
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let den = match frequencies_from_params(p, DEFAULT_DEGENERACY_TOL) {
        Ok(f) => {
            let mut den = 1.0;
            for pp in pair_products(&f) {
                let factor = c4 + c5 * pp + c6 * pp * pp;
                let scale = c4.abs() + c5.abs() * pp + c6.abs() * pp * pp;
                if factor.abs() <= 1e-12 * scale || scale == 0.0 {
                    return Err(PuError::SingularCombination(format!(
                        "c4 + c5 P + c6 P^2 vanishes at pair product P = {pp}"
                    )));
                }
                den *= factor;
            }
            den
        }
        Err(_) => {
            let m = m_matrix(p);
            let det = (Matrix3::identity() * c4 + m * c5 + m * m * c6).determinant();
            if det == 0.0 || !det.is_finite() {
                return Err(PuError::SingularCombination(
                    "det(c4 I + c5 M + c6 M^2) vanishes".into(),
                ));
            }
            det
        }
    };
    let n1 = -a * g * c6 * c4 - g * g * c5 * c6 + c4 * c4;
    let n2 = a * g * c4 * c5 + b * g * g * c5 * c6 + (a * b - g) * g * c4 * c6 + g * g * c5 * c5;
    let n3 = -b * g * g * c4 * c6 + g.powi(4) * c6 * c6 - g * g * c4 * c5;
    Ok(CombinationCoeffs::new([
        n1 / den,
        n2 / den,
        n3 / den,
        c4,
        c5,
        c6,
    ]))
}

/// `J̄ Ā` together with its coefficients `(k₁,k₂,k₃)` in
/// `J̄ Ā = k₁X₁ − k₂X₂ + k₃X₃`; the flow is recovered iff `k = (1,0,0)`.
pub fn combined_flow(c: &CombinationCoeffs, p: &PUParams) -> Result<(LinearOperator, [f64; 3])> {
    let j = PoissonTensor::combination(c.c1, c.c2, c.c3, p)?;
    let a = c.c4 * hamiltonian_form(1, p)?
        + c.c5 * hamiltonian_form(2, p)?
        + c.c6 * hamiltonian_form(3, p)?;
    let k = flow_weight_matrix(c.c1, c.c2, c.c3, p) * Vector3::new(c.c4, c.c5, c.c6);
    Ok((LinearOperator(j.matrix() * a.matrix()), [k[0], k[1], k[2]]))
}

/// Symmetric part of `Aₙ F`, zero iff `Hₙ` is conserved by the flow.
pub fn conservation_defect(h: &QuadraticForm, p: &PUParams) -> QuadraticForm {
    let af = h.matrix() * flow_operator(p).matrix();
    QuadraticForm::new(af)
}
