//! Maps from the sixth-order model to three coupled second-order equations
//!
//! ```text
//! a_x ẍ + b_x x + g₁ y + g₂ z = 0
//! a_y ÿ + b_y y + g₁ x + g₃ z = 0
//! a_z z̈ + b_z z + g₂ x + g₃ y = 0
//! ```
//!
//! through projections `x = μ₀q + μ₂q̈ + μ₄q⁽⁴⁾` (and likewise `y` with `ν`,
//! `z` with `τ`), together with the Hamiltonians they induce.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{PuError, Result};
use crate::model::{
    flow_operator, frequencies_from_params, FrequencyTriple, Mat6, PUParams, QuadraticForm,
    StateVector, DEFAULT_DEGENERACY_TOL,
};
use crate::positivity::{
    eigenvalue_verdict, hamiltonian_weight_verdict, hbar_form, PositivityVerdict, VerdictMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Ta1,
    Ta2,
    Tb1,
    Tc1,
}

impl Kind {
    /// Expected classification of the three equations.
    pub fn pattern(&self) -> [EquationClass; 3] {
        use EquationClass::*;
        match self {
            Kind::Ta1 | Kind::Ta2 => [PuEquivalent, PuEquivalent, PuEquivalent],
            Kind::Tb1 => [PuEquivalent, PuEquivalent, Trivial],
            Kind::Tc1 => [PuEquivalent, Trivial, Trivial],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(&self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn default_a() -> [f64; 3] {
    [1.0; 3]
}

fn default_perms() -> [[usize; 3]; 3] {
    [[1, 2, 3], [1, 3, 2], [2, 3, 1]]
}

/// Scenario-specific free parameters. Frequency labels refer to the sorted
/// triple `ω₁ ≥ ω₂ ≥ ω₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FreeChoices {
    Ta1 {
        rho1_sign: Branch,
    },
    Ta2 {
        #[serde(default = "default_a")]
        a: [f64; 3],
        /// `(i,j,k)`, `(l,m,n)`, `(o,r,s)`: the x, y, z rows pair
        /// frequencies `(i,j)`, `(l,m)`, `(o,r)`; `{k,n,s} = {1,2,3}`.
        #[serde(default = "default_perms")]
        perms: [[usize; 3]; 3],
    },
    Tb1 {
        tau2_sign: Branch,
        g3_sign: Branch,
    },
    Tc1 {
        mu0: f64,
        nu0: f64,
        tau0: f64,
        kappa_sign: Branch,
    },
}

impl FreeChoices {
    pub fn kind(&self) -> Kind {
        match self {
            FreeChoices::Ta1 { .. } => Kind::Ta1,
            FreeChoices::Ta2 { .. } => Kind::Ta2,
            FreeChoices::Tb1 { .. } => Kind::Tb1,
            FreeChoices::Tc1 { .. } => Kind::Tc1,
        }
    }

    pub fn ta2_default() -> Self {
        FreeChoices::Ta2 {
            a: default_a(),
            perms: default_perms(),
        }
    }
}

/// Kinetic coefficients `a`, diagonal couplings `b`, cross couplings
/// `g = (g₁, g₂, g₃)` for the pairs `(x,y)`, `(x,z)`, `(y,z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rep3DParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub g: [f64; 3],
}

impl Rep3DParams {
    /// Symmetric potential matrix with `b` on the diagonal.
    pub fn coupling(&self) -> Matrix3<f64> {
        let (b, g) = (self.b, self.g);
        Matrix3::new(b[0], g[0], g[1], g[0], b[1], g[2], g[1], g[2], b[2])
    }
}

/// Rows of `T` as even-slot coefficients `(c₀, c₂, c₄)` of `(q, q̈, q⁽⁴⁾)`;
/// odd slots are zero by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateProjection {
    pub rows: [[f64; 3]; 3],
}

impl StateProjection {
    pub fn matrix(&self) -> SMatrix<f64, 3, 6> {
        SMatrix::<f64, 3, 6>::from_fn(|r, c| if c % 2 == 0 { self.rows[r][c / 2] } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub kind: Kind,
    pub model: PUParams,
    pub params: Rep3DParams,
    pub projection: StateProjection,
    pub free_choices: FreeChoices,
    pub auxiliary: BTreeMap<String, f64>,
}

fn complex(msg: String) -> PuError {
    PuError::ComplexBranch(msg)
}

fn zero_den(msg: &str) -> PuError {
    PuError::ZeroDenominator(msg.into())
}

/// Radicand `R` of `ρ₁ = ±½√R` for Ta1.
pub fn ta1_radicand(p: &PUParams) -> f64 {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    -3.0 * a.powi(4) + 2.0 * a.powi(3) * (9.0 * b + 4.0)
        - a * a * (3.0 * b * (9.0 * b + 10.0) + 18.0 * g + 8.0)
        + 2.0 * a * (b * (9.0 * b + 27.0 * g + 8.0) + 12.0 * g + 2.0)
        - 3.0 * (b + 3.0 * g).powi(2)
        - 4.0 * b
        - 8.0 * g
        - 1.0
}

/// `κ²` for Tc1.
pub fn tc1_kappa_squared(p: &PUParams, mu0: f64, nu0: f64, tau0: f64) -> f64 {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let k1 = nu0 * nu0 + tau0 * tau0;
    let k2 = mu0 * mu0 + k1;
    g * g
        * tau0
        * tau0
        * (2.0 * a * g.powi(3) * mu0 - g.powi(4) - k2 * (k1 - b * mu0 + mu0 * mu0).powi(2)
            + a * g * ((b - mu0) * mu0 - k1) * (k1 + 2.0 * mu0 * mu0)
            - g * g
                * (a * a * mu0 * mu0 - 3.0 * k1 * mu0 - 2.0 * mu0.powi(3)
                    + b * (k1 + 2.0 * mu0 * mu0)))
}

fn validate_perms(perms: &[[usize; 3]; 3]) -> Result<()> {
    for perm in perms {
        let mut seen = [false; 3];
        for &x in perm {
            if !(1..=3).contains(&x) || seen[x - 1] {
                return Err(PuError::InvalidPermutation(format!(
                    "{perm:?} is not a permutation of (1,2,3)"
                )));
            }
            seen[x - 1] = true;
        }
    }
    let (k, n, s) = (perms[0][2], perms[1][2], perms[2][2]);
    if k == n || k == s || n == s {
        return Err(PuError::InvalidPermutation(format!(
            "third entries ({k},{n},{s}) must be distinct"
        )));
    }
    Ok(())
}

pub fn build_representation(p: &PUParams, choices: &FreeChoices) -> Result<Representation> {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let mut aux = BTreeMap::new();
    let (params, rows) = match *choices {
        FreeChoices::Ta1 { rho1_sign } => {
            let r = ta1_radicand(p);
            if !(r >= 0.0) {
                return Err(complex(format!(
                    "Ta1 needs a non-negative rho1 radicand, got {r:e}"
                )));
            }
            let rho1 = rho1_sign.sign() * 0.5 * r.sqrt();
            let rho2 = a - a * a + 3.0 * a * b - 3.0 * g;
            let half = 0.5 * (rho2 - 1.0 + a - b);
            let m = 0.5 * (1.0 - rho2 - a + 3.0 * b);
            let bb = 0.5 * (rho2 + a - b);
            aux.insert("radicand".into(), r);
            aux.insert("rho1".into(), rho1);
            aux.insert("rho2".into(), rho2);
            (
                Rep3DParams {
                    a: [1.0; 3],
                    b: [bb + rho1, b - rho2, bb - rho1],
                    g: [half - rho1, 0.5 + b - rho2, half + rho1],
                },
                [[m + rho1, 0.0, 1.0], [rho2, 1.0, 1.0], [m - rho1, 0.0, 1.0]],
            )
        }
        FreeChoices::Ta2 { a: kin, perms } => {
            validate_perms(&perms)?;
            for (axis, &ai) in ['x', 'y', 'z'].iter().zip(&kin) {
                if ai == 0.0 {
                    return Err(PuError::ZeroKinetic { axis: *axis });
                }
            }
            let f = frequencies_from_params(p, DEFAULT_DEGENERACY_TOL)?;
            f.require_non_degenerate()?;
            let w = f.squares();
            let mut rows = [[0.0; 3]; 3];
            let mut bs = [0.0; 3];
            for e in 0..3 {
                let [i, j, k] = perms[e];
                let (wi, wj, wk) = (w[i - 1], w[j - 1], w[k - 1]);
                rows[e] = [wi * wj / kin[e], (wi + wj) / kin[e], 1.0 / kin[e]];
                bs[e] = kin[e] * wk;
            }
            (
                Rep3DParams {
                    a: kin,
                    b: bs,
                    g: [0.0; 3],
                },
                rows,
            )
        }
        FreeChoices::Tb1 { tau2_sign, g3_sign } => {
            if a == 0.0 {
                return Err(zero_den("Tb1 divides by alpha"));
            }
            let rad = 1.0 + 8.0 * a * (g - a * b);
            if !(rad >= 0.0) {
                return Err(complex(format!(
                    "Tb1 needs 1 + 8 alpha (gamma - alpha beta) >= 0, got {rad:e}"
                )));
            }
            let t2 = (1.0 + tau2_sign.sign() * rad.sqrt()) / (2.0 * a);
            if t2 == 0.0 {
                return Err(zero_den("Tb1 with tau2 = 0"));
            }
            let r3 = -2.0 * t2 * t2 - 2.0 * b * t2.powi(4) - t2.powi(6);
            if !(r3 >= 0.0) {
                return Err(complex(format!(
                    "Tb1 needs -2 tau2^2 - 2 beta tau2^4 - tau2^6 >= 0, got {r3:e}"
                )));
            }
            let g3 = (-t2.powi(3) + g3_sign.sign() * r3.sqrt()) / (2.0 * t2 * t2);
            let g2 = -g3 - t2;
            let g1 = (a * t2 - 1.0) / (2.0 * t2);
            let bxy = (1.0 + a * t2) / (2.0 * t2);
            let bz = t2 * (b + 2.0 * g3 * g3 + 2.0 * g3 * t2 + t2 * t2);
            aux.insert("tau2".into(), t2);
            aux.insert("g3".into(), g3);
            (
                Rep3DParams {
                    a: [1.0; 3],
                    b: [bxy, bxy, bz],
                    g: [g1, g2, g3],
                },
                [
                    [b + t2 * (g3 + t2), 0.0, 1.0],
                    [b - g3 * t2, 0.0, 1.0],
                    [1.0, t2, 0.0],
                ],
            )
        }
        FreeChoices::Tc1 {
            mu0,
            nu0,
            tau0,
            kappa_sign,
        } => {
            if g == 0.0 {
                return Err(zero_den("Tc1 divides by gamma"));
            }
            if tau0 == 0.0 || nu0 == 0.0 || mu0 == 0.0 {
                return Err(zero_den("Tc1 needs mu0, nu0, tau0 all nonzero"));
            }
            let k1 = nu0 * nu0 + tau0 * tau0;
            let k2 = mu0 * mu0 + k1;
            let ksq = tc1_kappa_squared(p, mu0, nu0, tau0);
            if !(ksq >= 0.0) {
                return Err(complex(format!("Tc1 needs kappa^2 >= 0, got {ksq:e}")));
            }
            let kappa = kappa_sign.sign() * ksq.sqrt();
            let s = g * g - (a * g + k2) * mu0 + b * mu0 * mu0;
            let g1 = (g * s * nu0 - kappa) / (g * g * k1);
            let g2 = (g * s * tau0 * tau0 + kappa * nu0) / (g * g * k1 * tau0);
            let g3 = (g * (k1 * (k2 - b * mu0) - 2.0 * mu0 * s) * nu0 * tau0 * tau0
                + kappa * mu0 * (tau0 * tau0 - nu0 * nu0))
                / (g * g * k1 * k1 * tau0);
            let mu2 = (a * mu0 + g1 * nu0 + g2 * tau0 - g) / mu0;
            aux.insert("kappa".into(), kappa);
            aux.insert("kappa1".into(), k1);
            aux.insert("kappa2".into(), k2);
            (
                Rep3DParams {
                    a: [1.0; 3],
                    b: [
                        a - mu2,
                        -(g1 * mu0 + g3 * tau0) / nu0,
                        -(g2 * mu0 + g3 * nu0) / tau0,
                    ],
                    g: [g1, g2, g3],
                },
                [[mu0, mu2, 1.0], [nu0, -g1, 0.0], [tau0, -g2, 0.0]],
            )
        }
    };
    let all_finite = rows
        .iter()
        .flatten()
        .chain(&params.a)
        .chain(&params.b)
        .chain(&params.g)
        .all(|x| x.is_finite());
    if !all_finite {
        return Err(zero_den("representation parameters are not finite"));
    }
    Ok(Representation {
        kind: choices.kind(),
        model: *p,
        params,
        projection: StateProjection { rows },
        free_choices: choices.clone(),
        auxiliary: aux,
    })
}

/// `(x, y, z) = T s` and `(ẋ, ẏ, ż) = T F s`.
pub fn project_state(r: &Representation, s: &StateVector) -> ([f64; 3], [f64; 3]) {
    let t = r.projection.matrix();
    let pos = t * s;
    let vel = t * flow_operator(&r.model).apply(s);
    ([pos[0], pos[1], pos[2]], [vel[0], vel[1], vel[2]])
}

/// `(ẍ, ÿ, z̈) = T F² s` along the linear flow.
pub fn project_acceleration(r: &Representation, s: &StateVector) -> [f64; 3] {
    let f = flow_operator(&r.model).0;
    let acc = r.projection.matrix() * (f * f * s);
    [acc[0], acc[1], acc[2]]
}

/// Left-hand sides of the three coupled equations.
pub fn second_order_residual(r: &Representation, pos: [f64; 3], acc: [f64; 3]) -> [f64; 3] {
    let c = r.params.coupling();
    std::array::from_fn(|e| {
        r.params.a[e] * acc[e] + (0..3).map(|f| c[(e, f)] * pos[f]).sum::<f64>()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquationClass {
    /// Reduces to a nonzero multiple of the sixth-order equation.
    PuEquivalent,
    /// Vanishes identically as a functional of `(q, q̈, q⁽⁴⁾, q⁽⁶⁾)`.
    Trivial,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub kind: Kind,
    pub classes: [EquationClass; 3],
    /// Each equation expressed in `(q, q̈, q⁽⁴⁾, q⁽⁶⁾)`.
    pub jet_rows: [[f64; 4]; 3],
    /// Max residual along the trajectory relative to the largest term.
    pub max_residual: [f64; 3],
}

/// Coefficients of each equation in `(q, q̈, q⁽⁴⁾, q⁽⁶⁾)` with relative scale.
pub fn jet_rows(r: &Representation) -> [([f64; 4], f64); 3] {
    let rows = r.projection.rows;
    let c = r.params.coupling();
    std::array::from_fn(|e| {
        let mut out = [0.0; 4];
        let mut scale = 0.0_f64;
        let ae = r.params.a[e];
        for d in 0..3 {
            out[d + 1] += ae * rows[e][d];
            scale = scale.max((ae * rows[e][d]).abs());
        }
        for f in 0..3 {
            for d in 0..3 {
                out[d] += c[(e, f)] * rows[f][d];
                scale = scale.max((c[(e, f)] * rows[f][d]).abs());
            }
        }
        (out, scale)
    })
}

const JET_TOL: f64 = 1e-9;

fn classify(row: &[f64; 4], scale: f64, p: &PUParams) -> EquationClass {
    let lead = row[3];
    let pu = [p.gamma, p.beta, p.alpha, 1.0];
    let pu_scale = pu.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let s = scale.max(lead.abs() * pu_scale).max(f64::MIN_POSITIVE);
    if row.iter().all(|x| x.abs() <= JET_TOL * s) {
        return EquationClass::Trivial;
    }
    let off = row
        .iter()
        .zip(pu)
        .map(|(x, y)| (x - lead * y).abs())
        .fold(0.0, f64::max);
    if lead.abs() > JET_TOL * s && off <= JET_TOL * s {
        EquationClass::PuEquivalent
    } else {
        EquationClass::Neither
    }
}

/// Classifies each equation and measures its residual along `traj`.
/// Fails when the classification differs from the kind's pattern or when a
/// trajectory residual exceeds `tol`.
pub fn equivalence_check(
    r: &Representation,
    traj: &Trajectory,
    tol: f64,
) -> Result<EquivalenceReport> {
    let jets = jet_rows(r);
    let classes = jets.map(|(row, scale)| classify(&row, scale, &r.model));
    let c = r.params.coupling();
    let mut max_res = [0.0_f64; 3];
    let mut max_term = [0.0_f64; 3];
    for s in &traj.states {
        let (pos, _) = project_state(r, s);
        let acc = project_acceleration(r, s);
        let res = second_order_residual(r, pos, acc);
        for e in 0..3 {
            max_res[e] = max_res[e].max(res[e].abs());
            let mut term = (r.params.a[e] * acc[e]).abs();
            for f in 0..3 {
                term = term.max((c[(e, f)] * pos[f]).abs());
            }
            max_term[e] = max_term[e].max(term);
        }
    }
    let rel: [f64; 3] = std::array::from_fn(|e| {
        if max_term[e] > 0.0 {
            max_res[e] / max_term[e]
        } else {
            0.0
        }
    });
    let expected = r.kind.pattern();
    for e in 0..3 {
        if classes[e] != expected[e] || rel[e] > tol {
            return Err(PuError::EquivalenceFailure {
                equation: e + 1,
                max_residual: rel[e],
            });
        }
    }
    Ok(EquivalenceReport {
        kind: r.kind,
        classes,
        jet_rows: jets.map(|(row, _)| row),
        max_residual: rel,
    })
}

/// `H = Σ pᵢ²/(2aᵢ) + ½ Σ bᵢ xᵢ² + g₁xy + g₂xz + g₃yz` over `(x,y,z,p_x,p_y,p_z)`.
pub fn legendre_hamiltonian(r: &Representation) -> Result<QuadraticForm> {
    for (axis, &ai) in ['x', 'y', 'z'].iter().zip(&r.params.a) {
        if ai == 0.0 {
            return Err(PuError::ZeroKinetic { axis: *axis });
        }
    }
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&r.params.coupling());
    for i in 0..3 {
        m[(i + 3, i + 3)] = 1.0 / r.params.a[i];
    }
    Ok(QuadraticForm::new(m))
}

/// Legendre Hamiltonian pulled back along `s ↦ (T s, a∘(T F s))`.
pub fn pullback_form(r: &Representation) -> Result<QuadraticForm> {
    let h = legendre_hamiltonian(r)?;
    let t = r.projection.matrix();
    let tf = t * flow_operator(&r.model).0;
    let mut l = Mat6::zeros();
    l.fixed_view_mut::<3, 6>(0, 0).copy_from(&t);
    for i in 0..3 {
        let row = tf.row(i) * r.params.a[i];
        l.fixed_view_mut::<1, 6>(i + 3, 0).copy_from(&row);
    }
    Ok(QuadraticForm::new(l.transpose() * h.matrix() * l))
}

/// `(c₄, c₅, c₆)` with `H_T = c₄H₁ + c₅H₂ + c₆H₃`.
pub fn transformed_coefficients(p: &PUParams, choices: &FreeChoices) -> Result<[f64; 3]> {
    let r = build_representation(p, choices)?;
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let c = match choices {
        FreeChoices::Ta1 { .. } => [
            1.0 - 2.0 * a + 3.0 * a * a,
            3.0 + (b - 3.0 * a * b) / g,
            (3.0 * a - 1.0) / g,
        ],
        FreeChoices::Ta2 { a: kin, perms } => {
            let w = frequencies_from_params(p, DEFAULT_DEGENERACY_TOL)?.squares();
            let mut c = [0.0; 3];
            for e in 0..3 {
                let [i, j, k] = perms[e];
                let (wi, wj, wk) = (w[i - 1], w[j - 1], w[k - 1]);
                c[0] += wk * wk / kin[e];
                c[1] -= wk * wk * (wi + wj) / (g * kin[e]);
                c[2] += wk / (g * kin[e]);
            }
            c
        }
        FreeChoices::Tb1 { .. } => {
            let t2 = r.auxiliary["tau2"];
            [2.0 * a * a + t2 * t2, 2.0 * (1.0 - a * b / g), 2.0 * a / g]
        }
        FreeChoices::Tc1 { mu0, .. } => {
            let k2 = r.auxiliary["kappa2"];
            let m = a * g + k2 - b * mu0;
            [
                a * a - b + mu0 + a * (k2 - b * mu0) / g,
                1.0 - b * m / (g * g),
                m / (g * g),
            ]
        }
    };
    Ok(c)
}

/// Relative mismatch between `c₄A₁ + c₅A₂ + c₆A₃` and the pulled-back
/// Legendre Hamiltonian, evaluated at `states`.
pub fn consistency_error(
    p: &PUParams,
    choices: &FreeChoices,
    states: &[StateVector],
) -> Result<f64> {
    let r = build_representation(p, choices)?;
    let [c4, c5, c6] = transformed_coefficients(p, choices)?;
    let direct = hbar_form(c4, c5, c6, p)?;
    let h = legendre_hamiltonian(&r)?;
    let mut worst = 0.0_f64;
    for s in states {
        let (pos, vel) = project_state(&r, s);
        let z = StateVector::new(
            pos[0],
            pos[1],
            pos[2],
            r.params.a[0] * vel[0],
            r.params.a[1] * vel[1],
            r.params.a[2] * vel[2],
        );
        let (u, v) = (direct.eval(s), h.eval(&z));
        let scale = u.abs().max(v.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((u - v).abs() / scale);
    }
    Ok(worst)
}

/// Prefactor verdict when the frequencies are real and distinct, otherwise
/// the eigenvalue verdict on the transformed Hamiltonian.
pub fn representation_positivity(p: &PUParams, choices: &FreeChoices) -> Result<PositivityVerdict> {
    let c = transformed_coefficients(p, choices)?;
    match frequencies_from_params(p, DEFAULT_DEGENERACY_TOL) {
        Ok(f) if f.is_non_degenerate() => {
            hamiltonian_weight_verdict(c, &f, VerdictMethod::Prefactor)
        }
        _ => Ok(eigenvalue_verdict(&hbar_form(c[0], c[1], c[2], p)?)),
    }
}

/// Convenience for sorted frequencies.
pub fn build_for_frequencies(f: &FrequencyTriple, choices: &FreeChoices) -> Result<Representation> {
    build_representation(&f.params(), choices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate_linear, solve_exact};

    fn ta2_example() -> (FrequencyTriple, FreeChoices) {
        (
            FrequencyTriple::new([1.0, 2.0, 3.0]).unwrap(),
            FreeChoices::Ta2 {
                a: [1.0; 3],
                perms: [[3, 2, 1], [3, 1, 2], [1, 2, 3]],
            },
        )
    }

    fn ta1_params() -> PUParams {
        FrequencyTriple::new([1.25, 0.4, 0.1]).unwrap().params()
    }

    #[test]
    fn ta2_example_rows() {
        let (f, ch) = ta2_example();
        let r = build_for_frequencies(&f, &ch).unwrap();
        let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&r.projection.rows[0], &[4.0, 5.0, 1.0]));
        assert!(close(&r.projection.rows[1], &[9.0, 10.0, 1.0]));
        assert!(close(&r.projection.rows[2], &[36.0, 13.0, 1.0]));
        assert!(close(&r.params.b, &[9.0, 4.0, 1.0]));
        let t = r.projection.matrix();
        assert!(close(
            &t.row(0).iter().copied().collect::<Vec<_>>(),
            &[4.0, 0.0, 5.0, 0.0, 1.0, 0.0]
        ));
        let (pos, _) = project_state(&r, &StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(close(&pos, &[4.0, 9.0, 36.0]));
        let (pos, _) = project_state(&r, &StateVector::zeros());
        assert_eq!(pos, [0.0; 3]);
        let (_, vel) = project_state(&r, &StateVector::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
        assert!(close(&vel, &[4.0, 9.0, 36.0]));
    }

    #[test]
    fn ta2_residual_examples() {
        let (f, ch) = ta2_example();
        let r = build_for_frequencies(&f, &ch).unwrap();
        let res = second_order_residual(&r, [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!((res[0] - (1.0 + 9.0 * 2.0)).abs() < 1e-12);
        assert_eq!(second_order_residual(&r, [0.0; 3], [0.0; 3]), [0.0; 3]);
        // q = cos 2t is annihilated by the x and z rows
        let sol = solve_exact(&f, &StateVector::new(1.0, 0.0, -4.0, 0.0, 16.0, 0.0)).unwrap();
        for k in 0..100 {
            let s = sol.eval(0.1 * k as f64);
            let (pos, _) = project_state(&r, &s);
            let acc = project_acceleration(&r, &s);
            let res = second_order_residual(&r, pos, acc);
            assert!(res.iter().all(|x| x.abs() < 1e-8));
            assert!(pos[0].abs() < 1e-9 && pos[2].abs() < 1e-9);
        }
    }

    #[test]
    fn ta2_errors() {
        let p = FrequencyTriple::new([1.0, 2.0, 3.0]).unwrap().params();
        let bad = FreeChoices::Ta2 {
            a: [1.0; 3],
            perms: [[2, 3, 1], [3, 2, 1], [1, 2, 3]],
        };
        assert!(matches!(
            build_representation(&p, &bad),
            Err(PuError::InvalidPermutation(_))
        ));
        let bad = FreeChoices::Ta2 {
            a: [1.0; 3],
            perms: [[1, 1, 2], [1, 3, 2], [2, 3, 1]],
        };
        assert!(matches!(
            build_representation(&p, &bad),
            Err(PuError::InvalidPermutation(_))
        ));
        let zero = FreeChoices::Ta2 {
            a: [1.0, 0.0, 1.0],
            perms: default_perms(),
        };
        assert_eq!(
            build_representation(&p, &zero).unwrap_err(),
            PuError::ZeroKinetic { axis: 'y' }
        );
    }

    #[test]
    fn tb1_complex_branch() {
        // 1 + 8·1·(0 − 1·10) < 0
        let p = PUParams::new(1.0, 10.0, 0.0);
        let ch = FreeChoices::Tb1 {
            tau2_sign: Branch::Plus,
            g3_sign: Branch::Plus,
        };
        assert!(matches!(
            build_representation(&p, &ch),
            Err(PuError::ComplexBranch(_))
        ));
    }

    fn check_kind(p: &PUParams, ch: &FreeChoices) {
        let r = build_representation(p, ch).unwrap();
        let traj = propagate_linear(
            p,
            &StateVector::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.2),
            0.01,
            300,
        )
        .unwrap();
        let rep = equivalence_check(&r, &traj, 1e-7).unwrap();
        assert_eq!(rep.classes, r.kind.pattern());
        let states: Vec<_> = traj.states.iter().step_by(10).copied().collect();
        assert!(consistency_error(p, ch, &states).unwrap() < 1e-7);
        let pb = pullback_form(&r).unwrap();
        let [c4, c5, c6] = transformed_coefficients(p, ch).unwrap();
        assert!(pb.rel_diff(&hbar_form(c4, c5, c6, p).unwrap()) < 1e-9);
    }

    #[test]
    fn all_kinds_match_patterns() {
        for s in [Branch::Plus, Branch::Minus] {
            check_kind(&ta1_params(), &FreeChoices::Ta1 { rho1_sign: s });
        }
        let (f, ch) = ta2_example();
        check_kind(&f.params(), &ch);
        check_kind(
            &f.params(),
            &FreeChoices::Ta2 {
                a: [0.5, 2.0, -1.5],
                perms: default_perms(),
            },
        );
        let tb = PUParams::new(1.0, -3.0, 0.5);
        for g3 in [Branch::Plus, Branch::Minus] {
            check_kind(
                &tb,
                &FreeChoices::Tb1 {
                    tau2_sign: Branch::Minus,
                    g3_sign: g3,
                },
            );
        }
        let tc = FrequencyTriple::new([2.0, 1.0, 0.5]).unwrap().params();
        for k in [Branch::Plus, Branch::Minus] {
            check_kind(
                &tc,
                &FreeChoices::Tc1 {
                    mu0: 1.0,
                    nu0: 1.0,
                    tau0: 1.0,
                    kappa_sign: k,
                },
            );
            check_kind(
                &tc,
                &FreeChoices::Tc1 {
                    mu0: 1.0,
                    nu0: 0.6,
                    tau0: 0.8,
                    kappa_sign: k,
                },
            );
        }
    }

    #[test]
    fn tc1_kappa_values() {
        let tc = FrequencyTriple::new([2.0, 1.0, 0.5]).unwrap().params();
        assert!((tc1_kappa_squared(&tc, 1.0, 1.0, 1.0) - 1.0).abs() < 1e-12);
        let p = FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap().params();
        let ch = FreeChoices::Tc1 {
            mu0: 1.0,
            nu0: 1.0,
            tau0: 1.0,
            kappa_sign: Branch::Plus,
        };
        assert!(matches!(
            build_representation(&p, &ch),
            Err(PuError::ComplexBranch(_))
        ));
        let ch = FreeChoices::Tc1 {
            mu0: 1.0,
            nu0: 1.0,
            tau0: 0.0,
            kappa_sign: Branch::Plus,
        };
        assert!(matches!(
            build_representation(&p, &ch),
            Err(PuError::ZeroDenominator(_))
        ));
    }

    #[test]
    fn legendre_examples() {
        let (f, ch) = ta2_example();
        let r = build_for_frequencies(&f, &ch).unwrap();
        let h = legendre_hamiltonian(&r).unwrap();
        let z = StateVector::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(h.eval(&z), 1.5 + 0.5 * 14.0);
        let mut bare = r.clone();
        bare.params.b = [0.0; 3];
        let h = legendre_hamiltonian(&bare).unwrap();
        assert_eq!(h.eval(&StateVector::new(3.0, 2.0, 1.0, 0.0, 0.0, 0.0)), 0.0);
        bare.params.a[2] = 0.0;
        assert_eq!(
            legendre_hamiltonian(&bare).unwrap_err(),
            PuError::ZeroKinetic { axis: 'z' }
        );
    }

    #[test]
    fn transformed_coefficient_examples() {
        let p = FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap().params();
        let c = transformed_coefficients(&p, &FreeChoices::ta2_default()).unwrap();
        assert_eq!(c[0], 81.0 + 16.0 + 1.0);
        let tb = PUParams::new(1.0, -3.0, 0.5);
        let ch = FreeChoices::Tb1 {
            tau2_sign: Branch::Minus,
            g3_sign: Branch::Plus,
        };
        let t2 = build_representation(&tb, &ch).unwrap().auxiliary["tau2"];
        let c = transformed_coefficients(&tb, &ch).unwrap();
        assert_eq!(c, [2.0 + t2 * t2, 2.0 * (1.0 + 3.0 / 0.5), 4.0]);
    }

    #[test]
    fn positivity_examples() {
        let p = FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap().params();
        assert!(
            representation_positivity(&p, &FreeChoices::ta2_default())
                .unwrap()
                .positive
        );
        let tb = PUParams::new(1.0, -3.0, 0.5);
        for g3 in [Branch::Plus, Branch::Minus] {
            let ch = FreeChoices::Tb1 {
                tau2_sign: Branch::Minus,
                g3_sign: g3,
            };
            assert!(!representation_positivity(&tb, &ch).unwrap().positive);
        }
    }

    #[test]
    fn tc1_positive_point() {
        // mu0 = 1, kappa2 = mu0² + nu0² + tau0² = 2
        let p = FrequencyTriple::new([2.798944, 0.769495, 0.48384])
            .unwrap()
            .params();
        for k in [Branch::Plus, Branch::Minus] {
            let ch = FreeChoices::Tc1 {
                mu0: 1.0,
                nu0: -0.1867,
                tau0: 0.9824,
                kappa_sign: k,
            };
            let v = representation_positivity(&p, &ch).unwrap();
            assert!(v.positive && v.min_eigenvalue > 0.0);
            check_kind(&p, &ch);
        }
    }

    #[test]
    fn representation_json_round_trip() {
        let (f, ch) = ta2_example();
        let r = build_for_frequencies(&f, &ch).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: Representation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let parsed: FreeChoices = serde_json::from_str(r#"{"kind":"Ta2"}"#).unwrap();
        assert_eq!(parsed, FreeChoices::ta2_default());
    }
}
