//! The 7×7 polynomial matrix `B(v)` acting on `[β⁶ … β 1]`, and its
//! coefficient matrices.

use nalgebra::SMatrix;

use super::charsys::CharSystem;
use crate::constraints::SolverMode;
use crate::poly::Poly;

pub type Mat7 = SMatrix<f64, 7, 7>;

/// `B(v) = Σ_k v^k B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilB {
    /// `B_0 … B_D`.
    pub coeffs: Vec<Mat7>,
    pub mode: SolverMode,
}

impl PencilB {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, v: f64) -> Mat7 {
        self.coeffs
            .iter()
            .rev()
            .fold(Mat7::zeros(), |acc, b| acc * v + b)
    }
}

/// Entry layout: three shifted copies of `[1, g₁, g₂, g₃, g₄]` (the first
/// equation times `β²`, `β`, 1) followed by four shifted copies of
/// `[w₁, w₂, w₃, w₄]` (the second equation times `β³`, `β²`, `β`, 1).
pub fn pencil_entries(cs: &CharSystem) -> [[Poly; 7]; 7] {
    let mut m: [[Poly; 7]; 7] = Default::default();
    let g_row: Vec<Poly> = std::iter::once(Poly::constant(1.0))
        .chain(cs.g.iter().cloned())
        .collect();
    for (r, offset) in [2usize, 1, 0].into_iter().enumerate() {
        for (k, p) in g_row.iter().enumerate() {
            m[r][offset + k] = p.clone();
        }
    }
    for (r, offset) in [3usize, 2, 1, 0].into_iter().enumerate() {
        for (k, p) in cs.w.iter().enumerate() {
            m[3 + r][offset + k] = p.clone();
        }
    }
    m
}

pub fn build_pencil(cs: &CharSystem) -> PencilB {
    let entries = pencil_entries(cs);
    let degree = match cs.mode {
        SolverMode::Full => 16,
        SolverMode::Linearized => 8,
    };
    let coeffs = (0..=degree)
        .map(|k| Mat7::from_fn(|r, c| entries[r][c].coeff(k)))
        .collect();
    PencilB {
        coeffs,
        mode: cs.mode,
    }
}
