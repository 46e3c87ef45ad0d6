use std::sync::Arc;

use super::VelocityBasis;
use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SpectralGrid, VectorField};

/// Kinetic perturbation `f(x, v) = Σ_β c_β(x) H_β(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteField {
    basis: Arc<VelocityBasis>,
    pub coeffs: Vec<ScalarField>,
}

/// Density and momentum moments `a = ⟨√M, f⟩`, `b = ⟨v√M, f⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub a: ScalarField,
    pub b: VectorField,
}

impl HermiteField {
    pub fn zeros(basis: Arc<VelocityBasis>, grid: &SpectralGrid) -> Self {
        let coeffs = (0..basis.len()).map(|_| ScalarField::zeros(grid)).collect();
        Self { basis, coeffs }
    }

    pub fn from_coeffs(basis: Arc<VelocityBasis>, coeffs: Vec<ScalarField>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::invalid(format!(
                "expected {} Hermite coefficients, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &Arc<VelocityBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn same_basis(&self, other: &HermiteField) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(ScalarField::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ScalarField::is_zero)
    }

    pub fn axpy(&mut self, s: f64, other: &HermiteField) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            a.axpy(s, b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            c.scale(s);
        }
    }

    pub fn sub(&self, other: &HermiteField) -> Result<HermiteField> {
        self.same_basis(other)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    pub fn max_diff(&self, other: &HermiteField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    /// `‖f‖²_{L²_{x,v}}`.
    pub fn l2_norm_sq(&self, grid: &SpectralGrid) -> f64 {
        self.coeffs.iter().map(|c| grid.l2_norm_sq(c)).sum()
    }

    /// `Σ_{|α|≤m} ‖∂^α f‖²_{L²_{x,v}}`.
    pub fn sobolev_norm_sq(&self, grid: &SpectralGrid, m: usize) -> f64 {
        let w = grid.sobolev_weights(m);
        self.coeffs.iter().map(|c| grid.sobolev_norm_sq_with(c, &w)).sum()
    }

    /// `⟨f, g⟩_{L²_{x,v}}`
    pub fn inner(&self, other: &HermiteField, grid: &SpectralGrid) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| grid.inner(a, b))
            .sum()
    }

    pub fn density(&self) -> &ScalarField {
        &self.coeffs[0]
    }

    pub fn momentum(&self, axis: usize) -> &ScalarField {
        &self.coeffs[1 + axis]
    }
}
