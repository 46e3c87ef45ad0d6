//! Velocity-space operators in the Hermite basis.
//!
//! Conventions (probabilists' Hermite, unit-variance Maxwellian):
//!
//! ```text
//! v_i H_β            = √(β_i+1) H_{β+e_i} + √β_i H_{β-e_i}
//! ∂_{v_i} H_β        = ½√β_i H_{β-e_i} − ½√(β_i+1) H_{β+e_i}
//! (½v_i − ∂_{v_i})H_β = √(β_i+1) H_{β+e_i}
//! L H_β              = −|β| H_β
//! (v_i v_j − δ_ij)√M = H_{e_i+e_j}  (i ≠ j),   √2 H_{2e_i}  (i = j)
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;

use super::{HermiteField, Moments, MultiIndex, VelocityBasis};
use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SobolevWeights, SpectralGrid, VectorField};

/// `(Lf)_β = −|β| c_β`.
pub fn apply_fokker_planck(f: &HermiteField) -> HermiteField {
    let basis = f.basis().clone();
    let mut out = f.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        c.scale(-(basis.degree(i) as f64));
    }
    out
}

/// Keeps `β ∈ {0, e_1, …, e_d}`.
pub fn project_macro(f: &HermiteField) -> HermiteField {
    let mut out = f.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        if f.basis().degree(i) > 1 {
            c.scale(0.0);
        }
    }
    out
}

/// `{I − P} f`.
pub fn project_micro(f: &HermiteField) -> HermiteField {
    let mut out = f.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        if f.basis().degree(i) <= 1 {
            c.scale(0.0);
        }
    }
    out
}

pub fn moments(f: &HermiteField) -> Moments {
    let d = f.basis().dim();
    Moments {
        a: f.coeffs[0].clone(),
        b: VectorField::new((0..d).map(|i| f.coeffs[1 + i].clone()).collect()),
    }
}

/// `v_i f` with the hard closure: images beyond `|β| = N_v` are dropped.
pub fn apply_v_multiply(f: &HermiteField, axis: usize) -> Result<HermiteField> {
    let basis = f.basis().clone();
    if axis >= basis.dim() {
        return Err(Error::invalid(format!("velocity axis {axis} out of range")));
    }
    let mut out = f.clone();
    for c in &mut out.coeffs {
        c.scale(0.0);
    }
    for (i, c) in f.coeffs.iter().enumerate() {
        for link in basis.upper_links(i).iter().filter(|l| l.axis == axis) {
            out.coeffs[link.index].axpy(link.coef, c);
        }
        for link in basis.lower_links(i).iter().filter(|l| l.axis == axis) {
            out.coeffs[link.index].axpy(link.coef, c);
        }
    }
    Ok(out)
}

/// `(½ u·v − u·∇_v) f + u·v√M`, dealiased.
///
/// The first part is a pure raising action, `Σ_i u_i √β_i c_{β−e_i}`; the
/// source lands on the `e_i` coefficients.
pub fn apply_drift_source(
    f: &HermiteField,
    u: &VectorField,
    grid: &SpectralGrid,
) -> Result<HermiteField> {
    let basis = f.basis().clone();
    if u.dim() != basis.dim() {
        return Err(Error::invalid("velocity field and basis dimensions differ"));
    }
    let u_phys: Vec<Vec<f64>> = u.comps.iter().map(|c| grid.inverse(c)).collect();
    let c_phys: Vec<Vec<f64>> = f.coeffs.iter().map(|c| grid.inverse(c)).collect();
    let mut out = HermiteField::zeros(basis.clone(), grid);
    let mut acc = vec![0.0; grid.len()];
    for i in 0..basis.len() {
        let links = basis.lower_links(i);
        if links.is_empty() {
            continue;
        }
        acc.iter_mut().for_each(|v| *v = 0.0);
        for link in links {
            let (ui, cp) = (&u_phys[link.axis], &c_phys[link.index]);
            for ((a, x), y) in acc.iter_mut().zip(ui).zip(cp) {
                *a += link.coef * x * y;
            }
        }
        out.coeffs[i] = grid.forward_dealiased(&acc);
    }
    for axis in 0..basis.dim() {
        out.coeffs[1 + axis].axpy(1.0, &u.comps[axis]);
    }
    Ok(out)
}

/// `Γ_ij(f) = ⟨(v_i v_j − δ_ij)√M, f⟩`.
pub fn gamma_ij(f: &HermiteField, i: usize, j: usize) -> Result<ScalarField> {
    let basis = f.basis();
    if i >= basis.dim() || j >= basis.dim() {
        return Err(Error::invalid(format!("Γ index ({i},{j}) out of range")));
    }
    let beta = MultiIndex::unit(i).raised(j);
    let idx = basis.index_of(beta).expect("degree-2 modes are always retained");
    let scale = if i == j { std::f64::consts::SQRT_2 } else { 1.0 };
    Ok(f.coeffs[idx].scaled(scale))
}

/// Scratch-free evaluation of `∫ (|∇_v g|² + (1+|v|²) g²) dv` for one
/// coefficient vector, using the untruncated images of `v_i` and `∂_{v_i}`.
pub(crate) struct NuForm<'a> {
    basis: &'a VelocityBasis,
    v_img: Vec<Complex64>,
    d_img: Vec<Complex64>,
}

impl<'a> NuForm<'a> {
    pub(crate) fn new(basis: &'a VelocityBasis) -> Self {
        let n = basis.extended_len();
        Self {
            basis,
            v_img: vec![Complex64::new(0.0, 0.0); n],
            d_img: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// `c` holds one coefficient per retained basis element.
    pub(crate) fn eval(&mut self, c: &[Complex64]) -> f64 {
        let basis = self.basis;
        let mut total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        for axis in 0..basis.dim() {
            self.v_img.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            self.d_img.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (i, &ci) in c.iter().enumerate() {
                if ci.re == 0.0 && ci.im == 0.0 {
                    continue;
                }
                let beta = basis.multi_index(i);
                let bi = beta.get(axis) as f64;
                let up = basis
                    .extended_index_of(beta.raised(axis))
                    .expect("extended shell covers N_v + 1");
                let up_coef = (bi + 1.0).sqrt();
                self.v_img[up] += ci * up_coef;
                self.d_img[up] -= ci * (0.5 * up_coef);
                if let Some(lo) = beta.lowered(axis) {
                    let lo = basis.extended_index_of(lo).unwrap();
                    self.v_img[lo] += ci * bi.sqrt();
                    self.d_img[lo] += ci * (0.5 * bi.sqrt());
                }
            }
            total += self.v_img.iter().map(|z| z.norm_sqr()).sum::<f64>();
            total += self.d_img.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        total
    }
}

/// `‖{I−P}f‖²_{L²_{v,ν}(H^m)}` with spatial Sobolev weights `w` (`m = 0`
/// gives the plain `L²_x` integral).
pub fn weighted_micro_norm_sq_with(
    f: &HermiteField,
    grid: &SpectralGrid,
    w: &SobolevWeights,
) -> f64 {
    let basis = f.basis();
    let micro: Vec<usize> = (0..basis.len()).filter(|&i| basis.degree(i) >= 2).collect();
    let mut form = NuForm::new(basis);
    let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
    let mut total = 0.0;
    for k in 0..grid.len() {
        let mut any = false;
        for &i in &micro {
            c[i] = f.coeffs[i].data[k];
            any |= c[i].re != 0.0 || c[i].im != 0.0;
        }
        if any {
            total += w.weight(k) * form.eval(&c);
        }
    }
    total * grid.volume()
}

/// `‖{I−P}f‖²_{L²_{v,ν}(L²_x)}`.
pub fn weighted_micro_norm(f: &HermiteField, grid: &SpectralGrid) -> f64 {
    weighted_micro_norm_sq_with(f, grid, &grid.sobolev_weights(0))
}

/// Terms of the coercivity estimate `−⟨Lf,f⟩ ≥ λ_0 ‖{I−P}f‖²_ν + |b|²`,
/// all integrated over `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivitySample {
    /// `−⟨Lf, f⟩ = Σ_β |β| ‖c_β‖²`
    pub lhs: f64,
    /// `‖{I−P}f‖²_{L²_{v,ν}}`
    pub micro_nu: f64,
    /// `‖b‖²`
    pub b_sq: f64,
}

impl CoercivitySample {
    /// Empirical `λ_0 = (lhs − |b|²)/‖{I−P}f‖²_ν`.
    pub fn lambda(&self) -> Result<f64> {
        if self.micro_nu <= 0.0 {
            return Err(Error::invalid("micro part vanishes; coercivity ratio undefined"));
        }
        Ok((self.lhs - self.b_sq) / self.micro_nu)
    }
}

pub fn coercivity_ratio(f: &HermiteField, grid: &SpectralGrid) -> CoercivitySample {
    let basis = f.basis();
    let lhs = (0..basis.len())
        .map(|i| basis.degree(i) as f64 * grid.l2_norm_sq(&f.coeffs[i]))
        .sum();
    let b_sq = (0..basis.dim()).map(|i| grid.l2_norm_sq(&f.coeffs[1 + i])).sum();
    CoercivitySample {
        lhs,
        micro_nu: weighted_micro_norm(f, grid),
        b_sq,
    }
}

/// Sharp truncated constant: the smallest generalized eigenvalue of
/// `diag(|β|)` against the `ν`-Gram matrix on the micro subspace.
pub fn truncated_coercivity_constant(basis: &VelocityBasis) -> f64 {
    let micro: Vec<usize> = (0..basis.len()).filter(|&i| basis.degree(i) >= 2).collect();
    let n = micro.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut form = NuForm::new(basis);
    let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
    // polarization on unit vectors
    let diag: Vec<f64> = micro
        .iter()
        .map(|&i| {
            c[i] = Complex64::new(1.0, 0.0);
            let q = form.eval(&c);
            c[i] = Complex64::new(0.0, 0.0);
            q
        })
        .collect();
    for a in 0..n {
        gram[(a, a)] = diag[a];
        for b in a + 1..n {
            c[micro[a]] = Complex64::new(1.0, 0.0);
            c[micro[b]] = Complex64::new(1.0, 0.0);
            let q = form.eval(&c);
            c[micro[a]] = Complex64::new(0.0, 0.0);
            c[micro[b]] = Complex64::new(0.0, 0.0);
            let off = 0.5 * (q - diag[a] - diag[b]);
            gram[(a, b)] = off;
            gram[(b, a)] = off;
        }
    }
    let chol = gram.cholesky().expect("ν-Gram matrix is positive definite");
    let l_inv = chol.l().try_inverse().expect("triangular factor is invertible");
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        micro.iter().map(|&i| basis.degree(i) as f64),
    ));
    let c_mat = &l_inv * a * l_inv.transpose();
    let sym = 0.5 * (&c_mat + c_mat.transpose());
    SymmetricEigen::new(sym).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(dim: usize, nv: usize) -> (Arc<VelocityBasis>, SpectralGrid) {
        (
            Arc::new(VelocityBasis::new(dim, nv).unwrap()),
            SpectralGrid::new(dim, 4, 2.0 * PI).unwrap(),
        )
    }

    fn constant(grid: &SpectralGrid, v: f64) -> ScalarField {
        let mut f = ScalarField::zeros(grid);
        f.coefficients_mut()[0] = Complex64::new(v, 0.0);
        f
    }

    fn mode(basis: &Arc<VelocityBasis>, grid: &SpectralGrid, beta: [u8; 3], v: f64) -> HermiteField {
        let mut f = HermiteField::zeros(basis.clone(), grid);
        let i = basis.index_of(MultiIndex(beta)).unwrap();
        f.coeffs[i] = constant(grid, v);
        f
    }

    fn coef(f: &HermiteField, beta: [u8; 3]) -> f64 {
        f.coeffs[f.basis().index_of(MultiIndex(beta)).unwrap()].mean()
    }

    #[test]
    fn fokker_planck_kernel_and_eigenvalues() {
        let (b, g) = setup(2, 4);
        assert!(apply_fokker_planck(&mode(&b, &g, [0, 0, 0], 1.0)).is_zero());
        let lf = apply_fokker_planck(&mode(&b, &g, [2, 0, 0], 1.0));
        assert_eq!(coef(&lf, [2, 0, 0]), -2.0);
    }

    #[test]
    fn macro_micro_split() {
        let (b, g) = setup(2, 4);
        let mut f = mode(&b, &g, [0, 0, 0], 1.0);
        f.axpy(1.0, &mode(&b, &g, [2, 0, 0], 1.0));
        let pf = project_macro(&f);
        let qf = project_micro(&f);
        assert_eq!(pf, mode(&b, &g, [0, 0, 0], 1.0));
        assert_eq!(qf, mode(&b, &g, [2, 0, 0], 1.0));
        assert_eq!(project_macro(&pf), pf);
    }

    #[test]
    fn moments_pick_coefficients() {
        let (b, g) = setup(3, 3);
        let m = moments(&mode(&b, &g, [0, 1, 0], 2.0));
        assert_eq!(m.a.mean(), 0.0);
        assert_eq!(m.b.comps[1].mean(), 2.0);
        assert_eq!(m.b.comps[0].mean(), 0.0);
    }

    #[test]
    fn v_multiply_raises_and_lowers() {
        let (b, g) = setup(2, 4);
        let r = apply_v_multiply(&mode(&b, &g, [0, 0, 0], 1.0), 1).unwrap();
        assert_eq!(coef(&r, [0, 1, 0]), 1.0);
        let r = apply_v_multiply(&mode(&b, &g, [1, 0, 0], 1.0), 0).unwrap();
        assert!((coef(&r, [2, 0, 0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(coef(&r, [0, 0, 0]), 1.0);
        // hard closure drops the degree N_v + 1 image
        let r = apply_v_multiply(&mode(&b, &g, [4, 0, 0], 1.0), 0).unwrap();
        assert_eq!(coef(&r, [3, 0, 0]), 2.0);
        assert!(r.coeffs.iter().enumerate().all(|(i, c)| i == b.index_of(MultiIndex([3, 0, 0])).unwrap() || c.is_zero()));
    }

    #[test]
    fn drift_source_on_constant_velocity() {
        let (b, g) = setup(2, 4);
        let u = VectorField::new(vec![constant(&g, 0.3), constant(&g, -0.7)]);
        let r = apply_drift_source(&HermiteField::zeros(b.clone(), &g), &u, &g).unwrap();
        assert!((coef(&r, [1, 0, 0]) - 0.3).abs() < 1e-15);
        assert!((coef(&r, [0, 1, 0]) + 0.7).abs() < 1e-15);
        let r = apply_drift_source(&mode(&b, &g, [0, 0, 0], 1.0), &u, &g).unwrap();
        assert!((coef(&r, [1, 0, 0]) - 0.6).abs() < 1e-15);
        assert!((coef(&r, [0, 1, 0]) + 1.4).abs() < 1e-15);
    }

    #[test]
    fn gamma_extraction() {
        let (b, g) = setup(2, 4);
        let f = mode(&b, &g, [2, 0, 0], 1.0);
        assert!((gamma_ij(&f, 0, 0).unwrap().mean() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_ij(&f, 0, 1).unwrap().mean(), 0.0);
        let f = mode(&b, &g, [1, 1, 0], 1.0);
        assert_eq!(gamma_ij(&f, 0, 1).unwrap().mean(), 1.0);
        assert_eq!(gamma_ij(&f, 1, 0).unwrap().mean(), 1.0);
        let mut f = mode(&b, &g, [0, 0, 0], 1.0);
        f.axpy(1.0, &mode(&b, &g, [0, 1, 0], 3.0));
        for i in 0..2 {
            for j in 0..2 {
                assert!(gamma_ij(&f, i, j).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn weighted_norm_single_modes() {
        let (b, g) = setup(2, 4);
        assert_eq!(weighted_micro_norm(&mode(&b, &g, [0, 0, 0], 1.0), &g), 0.0);
        // ‖H_β‖²_ν = 2.5|β| + 1 + 1.25 d for a single Hermite function
        let f = mode(&b, &g, [2, 1, 0], 1.0);
        let expect = (2.5 * 3.0 + 1.0 + 2.5) * g.volume();
        assert!((weighted_micro_norm(&f, &g) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn coercivity_equality_and_kernel() {
        let (b, g) = setup(2, 4);
        let s = coercivity_ratio(&mode(&b, &g, [1, 0, 0], 1.0), &g);
        let vol = g.volume();
        assert!((s.lhs - vol).abs() < 1e-12 && (s.b_sq - vol).abs() < 1e-12);
        assert_eq!(s.micro_nu, 0.0);
        assert!(s.lambda().is_err());
        let s = coercivity_ratio(&mode(&b, &g, [0, 0, 0], 1.0), &g);
        assert_eq!((s.lhs, s.b_sq), (0.0, 0.0));
    }

    #[test]
    fn truncated_constant_is_positive_and_below_single_mode_ratios() {
        let b = VelocityBasis::new(2, 8).unwrap();
        let lam = truncated_coercivity_constant(&b);
        assert!(lam > 0.0);
        // single H_{2e_1}: 2 / (2.5·2 + 1 + 2.5)
        assert!(lam <= 2.0 / 8.5 + 1e-12);
    }
}
