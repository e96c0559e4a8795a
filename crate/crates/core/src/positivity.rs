//! Positive building blocks `H_jk`, expansion of `H̄` in them, positivity
//! verdicts and region scans over tensor weights.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::hierarchy::CombinationCoeffs;
use crate::model::{hamiltonian_form, FormBuilder, FrequencyTriple, PUParams, QuadraticForm};

/// Unordered label pairs in the order used for prefactor triples.
pub const BLOCK_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

/// Relative slack on the smallest eigenvalue in the eigenvalue route.
pub const EIGEN_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveBlock {
    pub j: usize,
    pub k: usize,
    pub form: QuadraticForm,
}

fn pair_data(j: usize, k: usize, f: &FrequencyTriple) -> Result<(f64, f64, f64)> {
    let valid = |x: usize| (1..=3).contains(&x);
    if !valid(j) {
        return Err(PuError::InvalidIndex {
            what: "block label (1..=3)",
            index: j,
        });
    }
    if !valid(k) || k == j {
        return Err(PuError::InvalidIndex {
            what: "second block label (1..=3, distinct)",
            index: k,
        });
    }
    let w = f.squares();
    let i = 6 - j - k;
    Ok((w[i - 1], w[j - 1], w[k - 1]))
}

/// `H_jk = [q⁽⁵⁾ + S q⁽³⁾ + P q̇]² + ωᵢ² [q⁽⁴⁾ + S q̈ + P q]²` with
/// `S = ωⱼ² + ωₖ²`, `P = ωⱼ²ωₖ²` and `i` the remaining label.
pub fn positive_block(j: usize, k: usize, f: &FrequencyTriple) -> Result<PositiveBlock> {
    let (wi, wj, wk) = pair_data(j, k, f)?;
    let (s, p) = (wj + wk, wj * wk);
    let form = FormBuilder::new()
        .square(1.0, [0.0, p, 0.0, s, 0.0, 1.0])
        .square(wi, [p, 0.0, s, 0.0, 1.0, 0.0])
        .build();
    Ok(PositiveBlock {
        j: j.min(k),
        k: j.max(k),
        form,
    })
}

/// Scalar `λ` with `Xᵢ(H_jk) = λ H_jk`.
pub fn block_symmetry_action(i: usize, j: usize, k: usize, f: &FrequencyTriple) -> Result<f64> {
    let (_, wj, wk) = pair_data(j, k, f)?;
    let p = wj * wk;
    match i {
        1..=3 => Ok(0.0),
        4 => Ok(1.0),
        5 => Ok(p),
        6 => Ok(p * p),
        _ => Err(PuError::InvalidIndex {
            what: "Lie generator (1..=6)",
            index: i,
        }),
    }
}

/// `(ωⱼ² − ωᵢ²)(ωₖ² − ωᵢ²)` for each block pair.
fn block_denominators(f: &FrequencyTriple) -> [f64; 3] {
    let w = f.squares();
    BLOCK_PAIRS.map(|(j, k)| {
        let i = 6 - j - k;
        (w[j - 1] - w[i - 1]) * (w[k - 1] - w[i - 1])
    })
}

fn pair_product(f: &FrequencyTriple, (j, k): (usize, usize)) -> f64 {
    let w = f.squares();
    w[j - 1] * w[k - 1]
}

/// Weighted sum of the three blocks.
pub fn block_sum(weights: [f64; 3], f: &FrequencyTriple) -> Result<QuadraticForm> {
    let mut out = QuadraticForm::zero();
    for (w, (j, k)) in weights.iter().zip(BLOCK_PAIRS) {
        out = out + *w * positive_block(j, k, f)?.form;
    }
    Ok(out)
}

/// `Hₙ` as a combination of the blocks. Each unordered pair carries
/// `(ωⱼ²ωₖ²)ⁿ⁻¹ / [2(ωᵢ²−ωⱼ²)(ωᵢ²−ωₖ²)]`.
pub fn hamiltonian_n_blocks(n: usize, f: &FrequencyTriple) -> Result<QuadraticForm> {
    if n == 0 {
        return Err(PuError::InvalidIndex {
            what: "hierarchy (n >= 1)",
            index: n,
        });
    }
    f.require_non_degenerate()?;
    let den = block_denominators(f);
    let weights: [f64; 3] = std::array::from_fn(|b| {
        let p = pair_product(f, BLOCK_PAIRS[b]);
        2.0 * p.powi(n as i32 - 1) / (4.0 * den[b])
    });
    block_sum(weights, f)
}

/// Coefficients of `H₁₂, H₁₃, H₂₃` in `H̄ = c₄H₁ + c₅H₂ + c₆H₃`:
/// `(c₄ + c₅P + c₆P²) / [2(ωⱼ²−ωᵢ²)(ωₖ²−ωᵢ²)]`.
pub fn hbar_prefactors(c4: f64, c5: f64, c6: f64, f: &FrequencyTriple) -> Result<[f64; 3]> {
    f.require_non_degenerate()?;
    let den = block_denominators(f);
    Ok(std::array::from_fn(|b| {
        let p = pair_product(f, BLOCK_PAIRS[b]);
        2.0 * (c4 + c5 * p + c6 * p * p) / (4.0 * den[b])
    }))
}

/// The same prefactors expressed through the tensor weights:
/// `P² / [2(c₃ + c₂P + c₁P²)(ωⱼ²−ωᵢ²)(ωₖ²−ωᵢ²)]`.
pub fn tensor_prefactors(c1: f64, c2: f64, c3: f64, f: &FrequencyTriple) -> Result<[f64; 3]> {
    f.require_non_degenerate()?;
    let den = block_denominators(f);
    let mut out = [0.0; 3];
    for (b, o) in out.iter_mut().enumerate() {
        let p = pair_product(f, BLOCK_PAIRS[b]);
        let d = c3 + c2 * p + c1 * p * p;
        let scale = c3.abs() + c2.abs() * p + c1.abs() * p * p;
        if scale == 0.0 || d.abs() <= 1e-12 * scale {
            return Err(PuError::SingularCombination(format!(
                "c3 + c2 P + c1 P^2 vanishes at pair product P = {p}"
            )));
        }
        *o = 2.0 * p * p / (4.0 * d * den[b]);
    }
    Ok(out)
}

/// Sign conditions for positivity on the quadratic `D(P) = c₃ + c₂P + c₁P²`
/// evaluated at the sorted pair products: `D₁₂ > 0`, `D₁₃ < 0`, `D₂₃ > 0`.
///
/// The middle condition is negative because the `H₁₃` denominator
/// `(ω₁²−ω₂²)(ω₃²−ω₂²)` is negative for `ω₁ > ω₂ > ω₃`. The same conditions
/// apply to `(c₆, c₅, c₄)` in place of `(c₁, c₂, c₃)`.
pub fn tensor_weight_criterion(c1: f64, c2: f64, c3: f64, f: &FrequencyTriple) -> Result<bool> {
    f.require_non_degenerate()?;
    let d = BLOCK_PAIRS.map(|pair| {
        let p = pair_product(f, pair);
        c3 + c2 * p + c1 * p * p
    });
    Ok(d[0] > 0.0 && d[1] < 0.0 && d[2] > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictMethod {
    Prefactor,
    Eigenvalue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityVerdict {
    pub positive: bool,
    /// Coefficients of `H₁₂, H₁₃, H₂₃`; absent when the frequencies are
    /// degenerate or not real.
    pub prefactors: Option<[f64; 3]>,
    pub min_eigenvalue: f64,
    /// Eigenvector of the smallest eigenvalue when the form is not positive.
    pub witness: Option<[f64; 6]>,
    pub method: VerdictMethod,
}

/// Strict definiteness from the spectrum: positive iff the smallest
/// eigenvalue exceeds `EIGEN_SLACK` times the spectral norm.
pub fn eigenvalue_verdict(form: &QuadraticForm) -> PositivityVerdict {
    let eig = form.matrix().symmetric_eigen();
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("six eigenvalues");
    let norm = eig.eigenvalues.amax();
    let positive = norm > 0.0 && lmin > EIGEN_SLACK * norm;
    let witness = (!positive).then(|| {
        let v = eig.eigenvectors.column(imin);
        [v[0], v[1], v[2], v[3], v[4], v[5]]
    });
    PositivityVerdict {
        positive,
        prefactors: None,
        min_eigenvalue: lmin,
        witness,
        method: VerdictMethod::Eigenvalue,
    }
}

/// `c₄A₁ + c₅A₂ + c₆A₃`.
pub fn hbar_form(c4: f64, c5: f64, c6: f64, p: &PUParams) -> Result<QuadraticForm> {
    Ok(c4 * hamiltonian_form(1, p)? + c5 * hamiltonian_form(2, p)? + c6 * hamiltonian_form(3, p)?)
}

/// Verdict for `H̄ = c₄H₁ + c₅H₂ + c₆H₃`. Both routes are always evaluated;
/// `method` selects which one decides `positive`.
pub fn hamiltonian_weight_verdict(
    weights: [f64; 3],
    f: &FrequencyTriple,
    method: VerdictMethod,
) -> Result<PositivityVerdict> {
    let [c4, c5, c6] = weights;
    let prefactors = hbar_prefactors(c4, c5, c6, f)?;
    let mut verdict = eigenvalue_verdict(&hbar_form(c4, c5, c6, &f.params())?);
    verdict.prefactors = Some(prefactors);
    if method == VerdictMethod::Prefactor {
        verdict.positive = prefactors.iter().all(|&x| x > 0.0);
        verdict.method = VerdictMethod::Prefactor;
    }
    Ok(verdict)
}

/// Verdict for `H̄` built from the Hamiltonian weights `(c₄, c₅, c₆)` of `c`.
pub fn positivity_verdict(
    c: &CombinationCoeffs,
    f: &FrequencyTriple,
    method: VerdictMethod,
) -> Result<PositivityVerdict> {
    hamiltonian_weight_verdict(c.hamiltonian_weights(), f, method)
}

/// Verdict for tensor weights `(c₁, c₂, c₃)`: the Hamiltonian weights are
/// solved from the flow condition, prefactors come from the tensor form.
pub fn tensor_weight_verdict(
    c1: f64,
    c2: f64,
    c3: f64,
    f: &FrequencyTriple,
    method: VerdictMethod,
) -> Result<PositivityVerdict> {
    let prefactors = tensor_prefactors(c1, c2, c3, f)?;
    let coeffs = CombinationCoeffs::from_tensor_weights(c1, c2, c3, &f.params())?;
    let mut verdict = eigenvalue_verdict(&hbar_form(coeffs.c4, coeffs.c5, coeffs.c6, &f.params())?);
    verdict.prefactors = Some(prefactors);
    if method == VerdictMethod::Prefactor {
        verdict.positive = prefactors.iter().all(|&x| x > 0.0);
        verdict.method = VerdictMethod::Prefactor;
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.n <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedAxis {
    pub name: String,
    pub value: f64,
}

/// Two scanned tensor weights and one fixed one, named `c1`, `c2`, `c3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: FixedAxis,
}

fn weight_slot(name: &str) -> Option<usize> {
    match name {
        "c1" => Some(0),
        "c2" => Some(1),
        "c3" => Some(2),
        _ => None,
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<[usize; 3]> {
        let bad = |m: String| Err(PuError::InvalidGrid(m));
        let slots = [&self.axis1.name, &self.axis2.name, &self.fixed.name].map(|n| weight_slot(n));
        let [Some(s1), Some(s2), Some(s3)] = slots else {
            return bad("axis names must be c1, c2 or c3".into());
        };
        if s1 == s2 || s1 == s3 || s2 == s3 {
            return bad("axis names must be distinct".into());
        }
        for ax in [&self.axis1, &self.axis2] {
            if ax.n == 0 {
                return bad(format!("axis {} has no points", ax.name));
            }
            if !ax.min.is_finite() || !ax.max.is_finite() || ax.min > ax.max {
                return bad(format!(
                    "axis {} has invalid bounds [{}, {}]",
                    ax.name, ax.min, ax.max
                ));
            }
        }
        if !self.fixed.value.is_finite() {
            return bad("fixed value must be finite".into());
        }
        Ok([s1, s2, s3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellStatus {
    Positive,
    NotPositive,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub i: usize,
    pub j: usize,
    pub c_x: f64,
    pub c_y: f64,
    /// Decided by the prefactor route.
    pub status: CellStatus,
    pub eigen_positive: Option<bool>,
    pub min_eigenvalue: f64,
    pub prefactors: [f64; 3],
}

impl ScanCell {
    pub fn is_positive(&self) -> bool {
        self.status == CellStatus::Positive
    }

    /// `min |prefactor| ≤ 1e-8 · max |prefactor|`.
    pub fn in_boundary_band(&self) -> bool {
        let mn = self
            .prefactors
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()));
        let mx = self.prefactors.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        !(mn > 1e-8 * mx)
    }

    pub fn methods_disagree(&self) -> bool {
        match (&self.status, self.eigen_positive) {
            (CellStatus::Error(_), _) | (_, None) => false,
            (s, Some(e)) => (*s == CellStatus::Positive) != e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub i: usize,
    pub j: usize,
    pub in_boundary_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: GridSpec,
    /// Row-major: `axis1` index outer, `axis2` index inner.
    pub cells: Vec<ScanCell>,
    pub disagreements: Vec<Disagreement>,
}

impl ScanResult {
    pub fn positive_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_positive()).count()
    }

    /// Disagreements outside the boundary band.
    pub fn off_band_disagreements(&self) -> usize {
        self.disagreements
            .iter()
            .filter(|d| !d.in_boundary_band)
            .count()
    }

    /// Columns `c_x, c_y, verdict, min_eigenvalue, prefactor_1..3`, with
    /// seventeen significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "c_x",
            "c_y",
            "verdict",
            "min_eigenvalue",
            "prefactor_1",
            "prefactor_2",
            "prefactor_3",
        ])?;
        let num = |x: f64| format!("{x:.16e}");
        for c in &self.cells {
            let verdict = match &c.status {
                CellStatus::Positive => "positive".to_string(),
                CellStatus::NotPositive => "not_positive".to_string(),
                CellStatus::Error(e) => format!("error: {e}"),
            };
            w.write_record([
                num(c.c_x),
                num(c.c_y),
                verdict,
                num(c.min_eigenvalue),
                num(c.prefactors[0]),
                num(c.prefactors[1]),
                num(c.prefactors[2]),
            ])?;
        }
        w.flush()
    }
}

fn scan_cell(
    i: usize,
    j: usize,
    grid: &GridSpec,
    slots: [usize; 3],
    f: &FrequencyTriple,
) -> ScanCell {
    let (cx, cy) = (grid.axis1.value(i), grid.axis2.value(j));
    let mut c = [0.0; 3];
    c[slots[0]] = cx;
    c[slots[1]] = cy;
    c[slots[2]] = grid.fixed.value;
    match tensor_weight_verdict(c[0], c[1], c[2], f, VerdictMethod::Prefactor) {
        Ok(v) => {
            let prefactors = v.prefactors.expect("prefactor route fills prefactors");
            ScanCell {
                i,
                j,
                c_x: cx,
                c_y: cy,
                status: if v.positive {
                    CellStatus::Positive
                } else {
                    CellStatus::NotPositive
                },
                eigen_positive: Some(eigen_route_positive(&v)),
                min_eigenvalue: v.min_eigenvalue,
                prefactors,
            }
        }
        Err(e) => ScanCell {
            i,
            j,
            c_x: cx,
            c_y: cy,
            status: CellStatus::Error(e.to_string()),
            eigen_positive: None,
            min_eigenvalue: f64::NAN,
            prefactors: [f64::NAN; 3],
        },
    }
}

/// Eigenvalue-route decision carried inside a prefactor verdict: the
/// witness is present exactly when that route rejects the form.
fn eigen_route_positive(v: &PositivityVerdict) -> bool {
    v.witness.is_none()
}

/// Evaluates every grid cell (in parallel), returning cells in grid order.
pub fn region_scan(grid: &GridSpec, f: &FrequencyTriple) -> Result<ScanResult> {
    let slots = grid.validate()?;
    f.require_non_degenerate()?;
    let (n1, n2) = (grid.axis1.n, grid.axis2.n);
    let cells: Vec<ScanCell> = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| scan_cell(idx / n2, idx % n2, grid, slots, f))
        .collect();
    let disagreements = cells
        .iter()
        .filter(|c| c.methods_disagree())
        .map(|c| Disagreement {
            i: c.i,
            j: c.j,
            in_boundary_band: c.in_boundary_band(),
        })
        .collect();
    Ok(ScanResult {
        spec: grid.clone(),
        cells,
        disagreements,
    })
}
