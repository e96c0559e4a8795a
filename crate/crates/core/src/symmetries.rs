//! The six linear Lie point symmetries `X = Σ ξᵢ ∂ᵢ` with `ξ = M s`.

use crate::error::{PuError, Result};
use crate::model::{flow_operator, LinearOperator, Mat6, PUParams, QuadraticForm};

/// Matrix `M` of generator `Xᵢ`, `i ∈ 1..=6`. `X₁` is the flow, `X₄ = ½·I`.
pub fn lie_generator(i: usize, p: &PUParams) -> Result<LinearOperator> {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let m = match i {
        1 => return Ok(flow_operator(p)),
        2 => Mat6::from_row_slice(&[
            0.0, a, 0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, a, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, a, 0.0, 1.0, //
            -g, 0.0, -b, 0.0, 0.0, 0.0, //
            0.0, -g, 0.0, -b, 0.0, 0.0, //
            0.0, 0.0, -g, 0.0, -b, 0.0,
        ]),
        3 => Mat6::from_row_slice(&[
            0.0, b, 0.0, a, 0.0, 1.0, //
            -g, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, -g, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, -g, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -g, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, -g, 0.0,
        ]),
        4 => Mat6::identity() * 0.5,
        5 => {
            Mat6::from_row_slice(&[
                b, 0.0, a, 0.0, 1.0, 0.0, //
                0.0, b, 0.0, a, 0.0, 1.0, //
                -g, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, -g, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, -g, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -g, 0.0, 0.0,
            ]) * 0.5
        }
        6 => {
            let c0 = b * b - a * g;
            let c2 = a * b - g;
            Mat6::from_row_slice(&[
                c0,
                0.0,
                c2,
                0.0,
                b,
                0.0, //
                0.0,
                c0,
                0.0,
                c2,
                0.0,
                b, //
                -g * b,
                0.0,
                -g * a,
                0.0,
                -g,
                0.0, //
                0.0,
                -g * b,
                0.0,
                -g * a,
                0.0,
                -g, //
                g * g,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                0.0,
                g * g,
                0.0,
                0.0,
                0.0,
                0.0,
            ]) * 0.5
        }
        _ => {
            return Err(PuError::InvalidIndex {
                what: "Lie generator (1..=6)",
                index: i,
            })
        }
    };
    Ok(LinearOperator(m))
}

/// `[X₁, …, X₆]`.
pub fn generators(p: &PUParams) -> [LinearOperator; 6] {
    std::array::from_fn(|k| lie_generator(k + 1, p).expect("index in range"))
}

/// Vector-field bracket `[X_A, X_B]`.
///
/// For `X_A = (A s)ᵢ ∂ᵢ` and `X_B = (B s)ᵢ ∂ᵢ` the bracket is again linear,
/// with matrix `B·A − A·B`. That is the convention returned here.
pub fn commutator(a: &LinearOperator, b: &LinearOperator) -> LinearOperator {
    LinearOperator(b.0 * a.0 - a.0 * b.0)
}

/// Form of `X(H)(s) = (M s)·∇H(s)`, whose matrix is `Mᵀ A + A M`.
pub fn symmetry_action_on_form(x: &LinearOperator, h: &QuadraticForm) -> QuadraticForm {
    let a = h.matrix();
    QuadraticForm::new(x.0.transpose() * a + a * x.0)
}
