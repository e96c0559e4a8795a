//! Parameters, state, flow field, the three Hamiltonians and the three
//! Poisson tensors of the sixth-order Pais–Uhlenbeck oscillator.
//!
//! Every object acts on the six-dimensional state
//! `(q, q̇, q̈, q⁽³⁾, q⁽⁴⁾, q⁽⁵⁾)`, always in that slot order.
//! Hamiltonians are quadratic forms `H(s) = ½ sᵀ A s` stored as symmetric
//! 6×6 matrices, so every identity between them is plain linear algebra.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

pub type Mat6 = Matrix6<f64>;

/// `(q, q̇, q̈, q⁽³⁾, q⁽⁴⁾, q⁽⁵⁾)`.
pub type StateVector = Vector6<f64>;

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Coefficients of `q⁽⁶⁾ + α q⁽⁴⁾ + β q̈ + γ q = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PUParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PUParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// `δ₁ = α³ − 2αβ + γ`
    pub fn delta1(&self) -> f64 {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        a * a * a - 2.0 * a * b + g
    }

    /// `δ₂ = α⁴ − 3α²β + 2αγ + β²`
    pub fn delta2(&self) -> f64 {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        a.powi(4) - 3.0 * a * a * b + 2.0 * a * g + b * b
    }

    fn require_gamma(&self) -> Result<()> {
        if self.gamma == 0.0 {
            Err(PuError::GammaZero)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degeneracy {
    NonDegenerate,
    PartiallyDegenerate,
    FullyDegenerate,
}

/// Three angular frequencies, sorted `ω₁ ≥ ω₂ ≥ ω₃ > 0`.
///
/// Labels 1, 2, 3 used anywhere in the crate (blocks `H_jk`, permutation
/// choices, positivity inequalities) refer to this sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTriple {
    omega: [f64; 3],
    degeneracy: Degeneracy,
    tolerance: f64,
}

impl FrequencyTriple {
    pub fn new(omega: [f64; 3]) -> Result<Self> {
        Self::with_tolerance(omega, DEFAULT_DEGENERACY_TOL)
    }

    /// Sorts descending and classifies degeneracy on `|ωᵢ² − ωⱼ²| > tolerance`.
    pub fn with_tolerance(omega: [f64; 3], tolerance: f64) -> Result<Self> {
        if omega.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(PuError::NonPositiveFrequency(omega));
        }
        let mut sorted = omega;
        sorted.sort_by(|a, b| b.total_cmp(a));
        let sq = sorted.map(|w| w * w);
        let close = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .filter(|&&(i, j)| (sq[i] - sq[j]).abs() <= tolerance)
            .count();
        let degeneracy = match close {
            0 => Degeneracy::NonDegenerate,
            3 => Degeneracy::FullyDegenerate,
            _ => Degeneracy::PartiallyDegenerate,
        };
        Ok(Self {
            omega: sorted,
            degeneracy,
            tolerance,
        })
    }

    pub fn omega(&self) -> [f64; 3] {
        self.omega
    }

    /// `ωᵢ²` in sorted order.
    pub fn squares(&self) -> [f64; 3] {
        self.omega.map(|w| w * w)
    }

    pub fn degeneracy(&self) -> Degeneracy {
        self.degeneracy
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.degeneracy == Degeneracy::NonDegenerate
    }

    pub(crate) fn require_non_degenerate(&self) -> Result<()> {
        if self.is_non_degenerate() {
            Ok(())
        } else {
            Err(PuError::DegenerateFrequencies {
                omega: self.omega,
                tolerance: self.tolerance,
            })
        }
    }

    pub fn params(&self) -> PUParams {
        params_from_frequencies(self)
    }
}

/// Model selection as it appears in JSON configuration:
/// `{"alpha":..,"beta":..,"gamma":..}` or `{"omegas":[..,..,..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Params(#[serde(with = "params_repr")] PUParams),
    Omegas(#[serde(with = "omegas_repr")] [f64; 3]),
}

mod params_repr {
    use super::PUParams;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Repr {
        alpha: f64,
        beta: f64,
        gamma: f64,
    }

    pub fn serialize<S: Serializer>(p: &PUParams, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PUParams, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(PUParams::new(r.alpha, r.beta, r.gamma))
    }
}

mod omegas_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Repr {
        omegas: [f64; 3],
    }

    pub fn serialize<S: Serializer>(w: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
        Repr { omegas: *w }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
        Ok(Repr::deserialize(d)?.omegas)
    }
}

impl ModelSpec {
    pub fn params(&self) -> Result<PUParams> {
        match self {
            ModelSpec::Params(p) => Ok(*p),
            ModelSpec::Omegas(w) => Ok(FrequencyTriple::new(*w)?.params()),
        }
    }

    pub fn frequencies(&self, tol: f64) -> Result<FrequencyTriple> {
        match self {
            ModelSpec::Params(p) => frequencies_from_params(p, tol),
            ModelSpec::Omegas(w) => FrequencyTriple::with_tolerance(*w, tol),
        }
    }
}

/// Symmetric matrix `A` of `H(s) = ½ sᵀ A s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    matrix: Mat6,
}

impl QuadraticForm {
    /// Symmetrizes the input.
    pub fn new(matrix: Mat6) -> Self {
        Self {
            matrix: (matrix + matrix.transpose()) * 0.5,
        }
    }

    pub fn zero() -> Self {
        Self {
            matrix: Mat6::zeros(),
        }
    }

    pub fn matrix(&self) -> &Mat6 {
        &self.matrix
    }

    pub fn eval(&self, s: &StateVector) -> f64 {
        0.5 * s.dot(&(self.matrix * s))
    }

    pub fn gradient(&self, s: &StateVector) -> StateVector {
        self.matrix * s
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }

    /// `max|A − B| / max(max|A|, max|B|)`, zero when both forms vanish.
    pub fn rel_diff(&self, other: &QuadraticForm) -> f64 {
        rel_diff(&self.matrix, &other.matrix)
    }

    /// Eigenvalues of `A` in ascending order.
    pub fn eigenvalues(&self) -> [f64; 6] {
        let mut ev: Vec<f64> = self
            .matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3], ev[4], ev[5]]
    }
}

impl Add for QuadraticForm {
    type Output = QuadraticForm;
    fn add(self, rhs: Self) -> Self {
        Self {
            matrix: self.matrix + rhs.matrix,
        }
    }
}

impl Sub for QuadraticForm {
    type Output = QuadraticForm;
    fn sub(self, rhs: Self) -> Self {
        Self {
            matrix: self.matrix - rhs.matrix,
        }
    }
}

impl Neg for QuadraticForm {
    type Output = QuadraticForm;
    fn neg(self) -> Self {
        Self {
            matrix: -self.matrix,
        }
    }
}

impl Mul<QuadraticForm> for f64 {
    type Output = QuadraticForm;
    fn mul(self, rhs: QuadraticForm) -> QuadraticForm {
        QuadraticForm {
            matrix: rhs.matrix * self,
        }
    }
}

/// Accumulates polynomial terms into a form so printed polynomials can be
/// transcribed term by term.
#[derive(Debug, Clone, Default)]
pub struct FormBuilder {
    matrix: Mat6,
}

impl FormBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coef · sᵢ sⱼ`.
    pub fn term(mut self, coef: f64, i: usize, j: usize) -> Self {
        if i == j {
            self.matrix[(i, i)] += 2.0 * coef;
        } else {
            self.matrix[(i, j)] += coef;
            self.matrix[(j, i)] += coef;
        }
        self
    }

    /// Adds `coef · (l·s)²`.
    pub fn square(mut self, coef: f64, l: [f64; 6]) -> Self {
        let v = StateVector::from(l);
        self.matrix += v * v.transpose() * (2.0 * coef);
        self
    }

    pub fn build(self) -> QuadraticForm {
        QuadraticForm::new(self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TensorKind {
    J1,
    J2,
    J3,
    Combination { c1: f64, c2: f64, c3: f64 },
}

/// Constant antisymmetric tensor defining `{f, g} = ∇fᵀ J ∇g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonTensor {
    matrix: Mat6,
    kind: TensorKind,
}

impl PoissonTensor {
    /// Antisymmetrizes the input.
    pub fn new(matrix: Mat6, kind: TensorKind) -> Self {
        Self {
            matrix: (matrix - matrix.transpose()) * 0.5,
            kind,
        }
    }

    pub fn matrix(&self) -> &Mat6 {
        &self.matrix
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `J̄ = c₁J₁ + c₂J₂ + c₃J₃`.
    pub fn combination(c1: f64, c2: f64, c3: f64, p: &PUParams) -> Result<Self> {
        let m = poisson_tensor(1, p)?.matrix * c1
            + poisson_tensor(2, p)?.matrix * c2
            + poisson_tensor(3, p)?.matrix * c3;
        Ok(Self::new(m, TensorKind::Combination { c1, c2, c3 }))
    }
}

/// 6×6 matrix acting linearly on the state: the flow matrix or a symmetry
/// generator `X = Σ (M s)ᵢ ∂ᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOperator(pub Mat6);

impl LinearOperator {
    pub fn matrix(&self) -> &Mat6 {
        &self.0
    }

    pub fn apply(&self, s: &StateVector) -> StateVector {
        self.0 * s
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// Ostrogradsky coordinates and momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalState {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
}

pub(crate) fn rel_diff(a: &Mat6, b: &Mat6) -> f64 {
    let scale = a.amax().max(b.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}

/// `α = Σωᵢ²`, `β = Σ_{i<j} ωᵢ²ωⱼ²`, `γ = ω₁²ω₂²ω₃²`.
pub fn params_from_frequencies(f: &FrequencyTriple) -> PUParams {
    let [l1, l2, l3] = f.squares();
    PUParams::new(l1 + l2 + l3, l1 * l2 + l1 * l3 + l2 * l3, l1 * l2 * l3)
}

/// Recovers `ωᵢ = √λᵢ` from the roots of `λ³ − αλ² + βλ − γ`.
///
/// Uses the trigonometric solution of the depressed cubic; a vanishing
/// discriminant (relative 1e-12) is resolved as an exact repeated root so
/// degenerate inputs classify as degenerate.
pub fn frequencies_from_params(p: &PUParams, tol: f64) -> Result<FrequencyTriple> {
    let complex = || PuError::ComplexFrequencies {
        alpha: p.alpha,
        beta: p.beta,
        gamma: p.gamma,
    };
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    if !(a.is_finite() && b.is_finite() && g.is_finite()) {
        return Err(complex());
    }
    let shift = a / 3.0;
    let pp = b - a * a / 3.0;
    let qq = -2.0 * a * a * a / 27.0 + a * b / 3.0 - g;
    let half_q_sq = (qq / 2.0).powi(2);
    let third_p_cu = (pp / 3.0).powi(3);
    let disc = half_q_sq + third_p_cu;
    let scale = half_q_sq + third_p_cu.abs();

    let mut roots = if scale == 0.0 {
        [shift; 3]
    } else if disc > 1e-12 * scale {
        return Err(complex());
    } else if disc.abs() <= 1e-12 * scale {
        if pp.abs() <= 1e-12 * (a * a).max(b.abs()).max(f64::MIN_POSITIVE) {
            let t = (-qq).cbrt();
            [t + shift; 3]
        } else {
            let simple = 3.0 * qq / pp;
            let double = -1.5 * qq / pp;
            [simple + shift, double + shift, double + shift]
        }
    } else {
        let r = 2.0 * (-pp / 3.0).sqrt();
        let arg = ((3.0 * qq) / (2.0 * pp) * (-3.0 / pp).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let t = r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            *o = polish_root(t + shift, a, b, g);
        }
        out
    };
    roots.sort_by(|x, y| y.total_cmp(x));
    if roots.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(complex());
    }
    FrequencyTriple::with_tolerance(roots.map(f64::sqrt), tol)
}

fn polish_root(mut l: f64, a: f64, b: f64, g: f64) -> f64 {
    for _ in 0..3 {
        let f = ((l - a) * l + b) * l - g;
        let df = (3.0 * l - 2.0 * a) * l + b;
        if df == 0.0 {
            break;
        }
        let next = l - f / df;
        let f_next = ((next - a) * next + b) * next - g;
        if f_next.abs() < f.abs() {
            l = next;
        } else {
            break;
        }
    }
    l
}

/// Companion matrix `F` with `F·s = (q̇, q̈, q⁽³⁾, q⁽⁴⁾, q⁽⁵⁾, −αq⁽⁴⁾ − βq̈ − γq)`.
pub fn flow_operator(p: &PUParams) -> LinearOperator {
    let mut m = Mat6::zeros();
    for i in 0..5 {
        m[(i, i + 1)] = 1.0;
    }
    m[(5, 0)] = -p.gamma;
    m[(5, 2)] = -p.beta;
    m[(5, 4)] = -p.alpha;
    LinearOperator(m)
}

/// `H₁`, `H₂` or `H₃` as quadratic forms, transcribed term by term.
pub fn hamiltonian_form(n: usize, p: &PUParams) -> Result<QuadraticForm> {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    // α q⁽³⁾ + β q̇ + q⁽⁵⁾
    let shared = [0.0, b, 0.0, a, 0.0, 1.0];
    let form = match n {
        1 => FormBuilder::new()
            .term(0.5, 3, 3)
            .term(-0.5 * a, 2, 2)
            .term(0.5 * b, 1, 1)
            .term(0.5 * g, 0, 0)
            .term(a, 1, 3)
            .term(-1.0, 4, 2)
            .term(1.0, 1, 5)
            .build(),
        2 => FormBuilder::new()
            .square(0.5, shared)
            .term(0.5 * g * b, 0, 0)
            .term(g * a, 0, 2)
            .term(-0.5 * g * a, 1, 1)
            .term(g, 0, 4)
            .term(0.5 * g, 2, 2)
            .term(-g, 1, 3)
            .build(),
        3 => FormBuilder::new()
            .square(0.5 * b, shared)
            .term(0.5 * g * (g - 2.0 * a * b), 1, 1)
            .square(0.5 * g, [b, 0.0, a, 0.0, 0.0, 0.0])
            .term(-0.5 * g * g * a, 0, 0)
            .term(-g * g, 0, 2)
            .term(-g * (a * a + b), 1, 3)
            .term(-g * a, 1, 5)
            .term(g * a, 4, 2)
            .term(g * b, 4, 0)
            .term(-g * a, 3, 3)
            .term(-g, 3, 5)
            .term(0.5 * g, 4, 4)
            .build(),
        _ => {
            return Err(PuError::InvalidIndex {
                what: "hamiltonian (1..=3)",
                index: n,
            })
        }
    };
    Ok(form)
}

/// `J₁`, `J₂` or `J₃`.
pub fn poisson_tensor(k: usize, p: &PUParams) -> Result<PoissonTensor> {
    let (a, b) = (p.alpha, p.beta);
    let a2b = a * a - b;
    let (m, kind) = match k {
        1 => (
            Mat6::from_row_slice(&[
                0.0, 0.0, 0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, 0.0, -a, //
                0.0, 0.0, -1.0, 0.0, a, 0.0, //
                0.0, 1.0, 0.0, -a, 0.0, a2b, //
                -1.0, 0.0, a, 0.0, -a2b, 0.0,
            ]),
            TensorKind::J1,
        ),
        2 => {
            p.require_gamma()?;
            let d1 = p.delta1();
            (
                Mat6::from_row_slice(&[
                    0.0, 0.0, 0.0, -1.0, 0.0, a, //
                    0.0, 0.0, 1.0, 0.0, -a, 0.0, //
                    0.0, -1.0, 0.0, a, 0.0, -a2b, //
                    1.0, 0.0, -a, 0.0, a2b, 0.0, //
                    0.0, a, 0.0, -a2b, 0.0, d1, //
                    -a, 0.0, a2b, 0.0, -d1, 0.0,
                ]) / p.gamma,
                TensorKind::J2,
            )
        }
        3 => {
            p.require_gamma()?;
            let (d1, d2) = (p.delta1(), p.delta2());
            (
                Mat6::from_row_slice(&[
                    0.0, 1.0, 0.0, -a, 0.0, a2b, //
                    -1.0, 0.0, a, 0.0, -a2b, 0.0, //
                    0.0, -a, 0.0, a2b, 0.0, -d1, //
                    a, 0.0, -a2b, 0.0, d1, 0.0, //
                    0.0, a2b, 0.0, -d1, 0.0, d2, //
                    -a2b, 0.0, d1, 0.0, -d2, 0.0,
                ]) / (p.gamma * p.gamma),
                TensorKind::J3,
            )
        }
        _ => {
            return Err(PuError::InvalidIndex {
                what: "Poisson tensor (1..=3)",
                index: k,
            })
        }
    };
    Ok(PoissonTensor::new(m, kind))
}

/// `∇H(s) = A s`.
pub fn gradient(h: &QuadraticForm, s: &StateVector) -> StateVector {
    h.gradient(s)
}

/// Form of `{f, g}(s) = (A_f s)ᵀ J (A_g s)`; the matrix is
/// `A_f J A_g + (A_f J A_g)ᵀ` so that `½ sᵀ M s` equals the bracket.
pub fn poisson_bracket(f: &QuadraticForm, g: &QuadraticForm, j: &PoissonTensor) -> QuadraticForm {
    let prod = f.matrix() * j.matrix() * g.matrix();
    QuadraticForm::new(prod * 2.0)
}

pub fn ostrogradsky_map(s: &StateVector, p: &PUParams) -> CanonicalState {
    CanonicalState {
        q1: s[0],
        q2: s[1],
        q3: s[2],
        pi1: p.beta * s[1] + p.alpha * s[3] + s[5],
        pi2: -p.alpha * s[2] - s[4],
        pi3: s[3],
    }
}

/// `H_PU = π₁q₂ + π₂q₃ + ½π₃² + ½αq₃² − ½βq₂² + ½γq₁²`.
pub fn canonical_hamiltonian(c: &CanonicalState, p: &PUParams) -> f64 {
    c.pi1 * c.q2 + c.pi2 * c.q3 + 0.5 * c.pi3 * c.pi3 + 0.5 * p.alpha * c.q3 * c.q3
        - 0.5 * p.beta * c.q2 * c.q2
        + 0.5 * p.gamma * c.q1 * c.q1
}

/// Hamilton's equations `q̇ᵢ = ∂H/∂πᵢ`, `π̇ᵢ = −∂H/∂qᵢ` for `H_PU`.
pub fn canonical_vector_field(c: &CanonicalState, p: &PUParams) -> CanonicalState {
    CanonicalState {
        q1: c.q2,
        q2: c.q3,
        q3: c.pi3,
        pi1: -p.gamma * c.q1,
        pi2: -c.pi1 + p.beta * c.q2,
        pi3: -c.pi2 - p.alpha * c.q3,
    }
}
