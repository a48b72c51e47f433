//! Constitutive laws: isotropic elasticity, the quadratic degradation
//! function, the spectral tension/compression stress split and its
//! consistent tangent, and the elastic driving forces of both model
//! variants.
//!
//! All operations are pure functions on 2x2 symmetric tensors; units are
//! kN and mm throughout (stresses in kN/mm^2).

use thiserror::Error;

/// Which constitutive model drives the simulation.
///
/// `Full` degrades the whole isotropic stress; `Split` degrades only the
/// tensile part of the spectral decomposition, leaving compression intact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelVariant {
    Full,
    Split,
}

/// Material and scheme parameters for one problem.
#[derive(Clone, Copy, Debug)]
pub struct MaterialParams {
    /// Shear modulus [kN/mm^2].
    pub mu_s: f64,
    /// First Lame parameter [kN/mm^2].
    pub lambda_s: f64,
    /// Critical energy release rate [kN/mm].
    pub g_c: f64,
    /// Bulk regularization of the degradation function (dimensionless).
    pub kappa: f64,
    /// Phase-field length scale [mm].
    pub eps: f64,
    /// Irreversibility penalization parameter.
    pub gamma: f64,
    /// Stabilization parameter of the mechanics subproblem.
    pub l_u: f64,
    /// Stabilization parameter of the phase-field subproblem.
    pub l_phi: f64,
    pub variant: ModelVariant,
}

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(MaterialError::InvalidParameter(what.to_string()))
            }
        };
        check(self.mu_s > 0.0, "mu_s must be > 0")?;
        check(self.lambda_s >= 0.0, "lambda_s must be >= 0")?;
        check(self.g_c > 0.0, "g_c must be > 0")?;
        check(self.kappa > 0.0 && self.kappa < 1.0, "kappa must be in (0,1)")?;
        check(self.eps > 0.0, "eps must be > 0")?;
        check(self.gamma >= 0.0, "gamma must be >= 0")?;
        check(self.l_u >= 0.0, "l_u must be >= 0")?;
        check(self.l_phi >= 0.0, "l_phi must be >= 0")?;
        Ok(())
    }
}

/// A 2x2 symmetric tensor stored as its three independent components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor { xx, yy, xy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymTensor { xx: a, yy: b, xy: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius norm, counting the off-diagonal entry twice.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx + self.yy * self.yy + 2.0 * self.xy * self.xy).sqrt()
    }

    /// Full contraction a : b.
    pub fn dot(&self, other: &SymTensor) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        SymTensor::new(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        SymTensor::new(self.xx - other.xx, self.yy - other.yy, self.xy - other.xy)
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor::new(s * self.xx, s * self.yy, s * self.xy)
    }

    /// Congruence transform R e R^T for a rotation R = [[c,-s],[s,c]].
    pub fn rotate(&self, c: f64, s: f64) -> SymTensor {
        let (c2, s2, cs) = (c * c, s * s, c * s);
        SymTensor {
            xx: c2 * self.xx + s2 * self.yy - 2.0 * cs * self.xy,
            yy: s2 * self.xx + c2 * self.yy + 2.0 * cs * self.xy,
            xy: cs * (self.xx - self.yy) + (c2 - s2) * self.xy,
        }
    }

    /// Closed-form eigendecomposition. Returns (l1, l2, c, s) with l1 >= l2
    /// and first eigenvector (c, s); the second is (-s, c).
    ///
    /// Uses the half-angle of the deviatoric part, which is stable for all
    /// inputs; repeated eigenvalues return the identity frame.
    pub fn eigen(&self) -> (f64, f64, f64, f64) {
        let half_tr = 0.5 * (self.xx + self.yy);
        let d = 0.5 * (self.xx - self.yy);
        let r = (d * d + self.xy * self.xy).sqrt();
        let l1 = half_tr + r;
        let l2 = half_tr - r;
        if r < f64::MIN_POSITIVE {
            return (l1, l2, 1.0, 0.0);
        }
        let cos2 = d / r;
        let c = (0.5 * (1.0 + cos2)).max(0.0).sqrt();
        let s_mag = (0.5 * (1.0 - cos2)).max(0.0).sqrt();
        let s = if self.xy >= 0.0 { s_mag } else { -s_mag };
        (l1, l2, c, s)
    }
}

/// Degradation function g(phi) = (1 - kappa) phi^2 + kappa.
pub fn degradation(phi: f64, kappa: f64) -> f64 {
    (1.0 - kappa) * phi * phi + kappa
}

/// Positive bracket [x]+ = max(x, 0).
pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Heaviside convention used by the split tangent: the derivative of the
/// positive bracket at zero is taken as zero (positive side inactive).
fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Undegraded isotropic stress 2 mu e + lambda tr(e) I.
pub fn full_stress(e: &SymTensor, mu: f64, lambda: f64) -> SymTensor {
    let ltr = lambda * e.trace();
    SymTensor {
        xx: 2.0 * mu * e.xx + ltr,
        yy: 2.0 * mu * e.yy + ltr,
        xy: 2.0 * mu * e.xy,
    }
}

/// Tensile/compressive parts of the stress generated by a strain.
#[derive(Clone, Copy, Debug)]
pub struct StressPair {
    pub plus: SymTensor,
    pub minus: SymTensor,
}

/// Spectral split: sigma+ = 2 mu e+ + lambda <tr e> I with e+ the positive
/// part of the strain eigendecomposition, and sigma- the remainder so that
/// sigma+ + sigma- recovers the full isotropic stress.
pub fn spectral_split(e: &SymTensor, mu: f64, lambda: f64) -> StressPair {
    let (l1, l2, c, s) = e.eigen();
    let p1 = positive_part(l1);
    let p2 = positive_part(l2);
    let (c2, s2, cs) = (c * c, s * s, c * s);
    let e_plus = SymTensor {
        xx: p1 * c2 + p2 * s2,
        yy: p1 * s2 + p2 * c2,
        xy: (p1 - p2) * cs,
    };
    let tr = e.trace();
    let tr_plus = positive_part(tr);
    let lp = lambda * tr_plus;
    let plus = SymTensor {
        xx: 2.0 * mu * e_plus.xx + lp,
        yy: 2.0 * mu * e_plus.yy + lp,
        xy: 2.0 * mu * e_plus.xy,
    };
    let lm = lambda * (tr - tr_plus);
    let minus = SymTensor {
        xx: 2.0 * mu * (e.xx - e_plus.xx) + lm,
        yy: 2.0 * mu * (e.yy - e_plus.yy) + lm,
        xy: 2.0 * mu * (e.xy - e_plus.xy),
    };
    StressPair { plus, minus }
}

/// Fourth-order tangent acting on symmetric tensors, stored as a 3x3 matrix
/// on the component vector (xx, yy, xy). The xy slot carries the tensor
/// component, not the engineering shear.
#[derive(Clone, Copy, Debug)]
pub struct Tangent(pub [[f64; 3]; 3]);

impl Tangent {
    pub fn zero() -> Self {
        Tangent([[0.0; 3]; 3])
    }

    /// Full isotropic elasticity tensor.
    pub fn isotropic(mu: f64, lambda: f64) -> Self {
        Tangent([
            [2.0 * mu + lambda, lambda, 0.0],
            [lambda, 2.0 * mu + lambda, 0.0],
            [0.0, 0.0, 2.0 * mu],
        ])
    }

    pub fn apply(&self, e: &SymTensor) -> SymTensor {
        let v = [e.xx, e.yy, e.xy];
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2];
        }
        SymTensor::new(out[0], out[1], out[2])
    }

    pub fn add(&self, other: &Tangent) -> Tangent {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j] + other.0[i][j];
            }
        }
        Tangent(out)
    }

    pub fn scale(&self, s: f64) -> Tangent {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Tangent(out)
    }

    /// Voigt form mapping (e_xx, e_yy, gamma_xy) to (s_xx, s_yy, s_xy), as
    /// consumed by B-matrix assembly.
    pub fn voigt(&self) -> [[f64; 3]; 3] {
        let t = &self.0;
        [
            [t[0][0], t[0][1], 0.5 * t[0][2]],
            [t[1][0], t[1][1], 0.5 * t[1][2]],
            [t[2][0], t[2][1], 0.5 * t[2][2]],
        ]
    }
}

/// Transformation of symmetric-tensor components under the rotation with
/// first basis vector (c, s); maps xy-frame components to the rotated frame.
fn component_rotation(c: f64, s: f64) -> [[f64; 3]; 3] {
    let (c2, s2, cs) = (c * c, s * s, c * s);
    [
        [c2, s2, 2.0 * cs],
        [s2, c2, -2.0 * cs],
        [-cs, cs, c2 - s2],
    ]
}

fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Consistent tangents (d sigma+/d e, d sigma-/d e) of the spectral split.
///
/// At eigenvalue or trace kinks the positive side is taken inactive; at
/// repeated eigenvalues the isotropic-function limit is used. The returned
/// maps are symmetric and positive semidefinite, so Newton matrices built
/// from them stay SPD.
pub fn split_tangent(e: &SymTensor, mu: f64, lambda: f64) -> (Tangent, Tangent) {
    let (l1, l2, c, s) = e.eigen();
    let h1 = heaviside(l1);
    let h2 = heaviside(l2);
    let gap = l1 - l2;
    // Shear coupling of the positive projection; isotropic limit at l1 = l2.
    let omega = if gap > 0.0 {
        (positive_part(l1) - positive_part(l2)) / gap
    } else {
        h1
    };
    let h_tr = heaviside(e.trace());
    let lt = lambda * h_tr;
    // d sigma+/d e in the eigenframe.
    let local = [
        [2.0 * mu * h1 + lt, lt, 0.0],
        [lt, 2.0 * mu * h2 + lt, 0.0],
        [0.0, 0.0, 2.0 * mu * omega],
    ];
    let to_eigen = component_rotation(c, s);
    let from_eigen = component_rotation(c, -s);
    let plus = Tangent(mat3_mul(&from_eigen, &mat3_mul(&local, &to_eigen)));
    let iso = Tangent::isotropic(mu, lambda);
    let mut minus = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            minus[i][j] = iso.0[i][j] - plus.0[i][j];
        }
    }
    (plus, Tangent(minus))
}

/// Elastic driving force of the phase-field equation.
///
/// Full variant: C e : e; split variant: sigma+ : e. Both are nonnegative
/// for the benchmark parameter ranges (lambda_s >= 0).
pub fn driving_force(e: &SymTensor, params: &MaterialParams) -> f64 {
    match params.variant {
        ModelVariant::Full => full_stress(e, params.mu_s, params.lambda_s).dot(e),
        ModelVariant::Split => spectral_split(e, params.mu_s, params.lambda_s).plus.dot(e),
    }
}

/// Constitutive stress of the degraded material: the full variant degrades
/// the whole isotropic stress, the split variant only its tensile part.
pub fn constitutive_stress(e: &SymTensor, phi: f64, params: &MaterialParams) -> SymTensor {
    let g = degradation(phi, params.kappa);
    match params.variant {
        ModelVariant::Full => full_stress(e, params.mu_s, params.lambda_s).scale(g),
        ModelVariant::Split => {
            let sp = spectral_split(e, params.mu_s, params.lambda_s);
            sp.plus.scale(g).add(&sp.minus)
        }
    }
}

/// Voigt tangent of [`constitutive_stress`] at the given strain.
pub fn constitutive_tangent(e: &SymTensor, phi: f64, params: &MaterialParams) -> [[f64; 3]; 3] {
    let g = degradation(phi, params.kappa);
    match params.variant {
        ModelVariant::Full => Tangent::isotropic(params.mu_s, params.lambda_s).scale(g).voigt(),
        ModelVariant::Split => {
            let (tp, tm) = split_tangent(e, params.mu_s, params.lambda_s);
            tp.scale(g).add(&tm).voigt()
        }
    }
}

/// Extremal eigenvalues of the isotropic elasticity tensor on symmetric
/// tensors: (2 mu, 2 mu + d lambda) with d = 2.
#[derive(Clone, Copy, Debug)]
pub struct TensorBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn tensor_bounds(mu: f64, lambda: f64) -> TensorBounds {
    TensorBounds {
        lambda_min: 2.0 * mu,
        lambda_max: 2.0 * mu + 2.0 * lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_strain(rng: &mut StdRng) -> SymTensor {
        SymTensor::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }

    #[test]
    fn degradation_values() {
        assert_eq!(degradation(1.0, 1e-10), 1.0);
        assert_eq!(degradation(1.0, 0.3), 1.0);
        assert_eq!(degradation(0.0, 1e-10), 1e-10);
        assert!((degradation(0.5, 1e-10) - 0.250000000075).abs() < 1e-15);
    }

    #[test]
    fn positive_part_values() {
        assert_eq!(positive_part(3.0), 3.0);
        assert_eq!(positive_part(-2.0), 0.0);
        assert_eq!(positive_part(0.0), 0.0);
    }

    #[test]
    fn full_stress_values() {
        assert_eq!(full_stress(&SymTensor::ZERO, 1.0, 1.0), SymTensor::ZERO);
        let s = full_stress(&SymTensor::diag(1.0, 1.0), 1.0, 1.0);
        assert_eq!(s, SymTensor::diag(4.0, 4.0));
        // Pure shear with the tension-test moduli: trace term drops out.
        let s = full_stress(&SymTensor::new(0.0, 0.0, 1.0), 80.77, 121.15);
        assert!((s.xy - 161.54).abs() < 1e-12);
        assert_eq!(s.xx, 0.0);
        assert_eq!(s.yy, 0.0);
    }

    #[test]
    fn split_simple_cases() {
        let sp = spectral_split(&SymTensor::ZERO, 1.0, 1.0);
        assert_eq!(sp.plus, SymTensor::ZERO);
        assert_eq!(sp.minus, SymTensor::ZERO);

        // Zero trace: lambda terms vanish, eigenvalues split by sign.
        let sp = spectral_split(&SymTensor::diag(1.0, -1.0), 1.0, 1.0);
        assert!((sp.plus.xx - 2.0).abs() < 1e-14 && sp.plus.yy.abs() < 1e-14);
        assert!(sp.minus.xx.abs() < 1e-14 && (sp.minus.yy + 2.0).abs() < 1e-14);

        // Fully compressive: everything lands in sigma-.
        let e = SymTensor::diag(-2.0, -1.0);
        let sp = spectral_split(&e, 1.0, 1.0);
        assert_eq!(sp.plus, SymTensor::ZERO);
        let full = full_stress(&e, 1.0, 1.0);
        assert!((sp.minus.xx - full.xx).abs() < 1e-14);
        assert!((sp.minus.yy - full.yy).abs() < 1e-14);
        assert!((full.xx + 7.0).abs() < 1e-14 && (full.yy + 5.0).abs() < 1e-14);
    }

    #[test]
    fn split_identity_random() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for _ in 0..10_000 {
            let e = random_strain(&mut rng);
            let sp = spectral_split(&e, 80.77, 121.15);
            let full = full_stress(&e, 80.77, 121.15);
            let sum = sp.plus.add(&sp.minus);
            let err = sum.sub(&full).norm();
            assert!(
                err <= 1e-12 * full.norm() + 1e-14,
                "split identity violated: err={err:e} for {e:?}"
            );
        }
    }

    #[test]
    fn split_rotation_equivariance() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..500 {
            let e = random_strain(&mut rng);
            let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let (c, s) = (theta.cos(), theta.sin());
            let rotated = e.rotate(c, s);
            let sp_rot = spectral_split(&rotated, 1.3, 0.7);
            let sp = spectral_split(&e, 1.3, 0.7);
            let expect_plus = sp.plus.rotate(c, s);
            let expect_minus = sp.minus.rotate(c, s);
            assert!(sp_rot.plus.sub(&expect_plus).norm() < 1e-12 * (1.0 + expect_plus.norm()));
            assert!(sp_rot.minus.sub(&expect_minus).norm() < 1e-12 * (1.0 + expect_minus.norm()));
        }
    }

    /// Central finite differences of the split, the independent oracle for
    /// the tangent.
    fn fd_tangent(e: &SymTensor, mu: f64, lambda: f64, step: f64) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
        let mut plus = [[0.0; 3]; 3];
        let mut minus = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut lo = *e;
            let mut hi = *e;
            match j {
                0 => {
                    lo.xx -= step;
                    hi.xx += step;
                }
                1 => {
                    lo.yy -= step;
                    hi.yy += step;
                }
                _ => {
                    lo.xy -= step;
                    hi.xy += step;
                }
            }
            let sp_hi = spectral_split(&hi, mu, lambda);
            let sp_lo = spectral_split(&lo, mu, lambda);
            let dp = sp_hi.plus.sub(&sp_lo.plus).scale(1.0 / (2.0 * step));
            let dm = sp_hi.minus.sub(&sp_lo.minus).scale(1.0 / (2.0 * step));
            plus[0][j] = dp.xx;
            plus[1][j] = dp.yy;
            plus[2][j] = dp.xy;
            minus[0][j] = dm.xx;
            minus[1][j] = dm.yy;
            minus[2][j] = dm.xy;
        }
        (plus, minus)
    }

    fn mat_err(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                num += (a[i][j] - b[i][j]).powi(2);
                den += b[i][j].powi(2);
            }
        }
        (num / den.max(1.0)).sqrt()
    }

    #[test]
    fn tangent_simple_regimes() {
        // Both eigenvalues and trace positive: split inactive, tangent is
        // the full isotropic tensor.
        let e = SymTensor::new(0.8, 0.5, 0.1);
        let (tp, tm) = split_tangent(&e, 2.0, 1.5);
        let iso = Tangent::isotropic(2.0, 1.5);
        assert!(mat_err(&tp.0, &iso.0) < 1e-13);
        for row in tm.0 {
            for v in row {
                assert!(v.abs() < 1e-12);
            }
        }
        // Fully compressive: d sigma+/d e = 0.
        let e = SymTensor::new(-0.8, -0.5, 0.1);
        let (tp, _) = split_tangent(&e, 2.0, 1.5);
        for row in tp.0 {
            for v in row {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(7);
        let (mu, lambda) = (80.77, 121.15);
        let mut checked = 0;
        while checked < 2000 {
            let e = random_strain(&mut rng);
            let (l1, l2, _, _) = e.eigen();
            // Stay away from the nondifferentiable sets.
            let safe = (l1 - l2).abs() > 1e-3
                && l1.abs() > 1e-3
                && l2.abs() > 1e-3
                && e.trace().abs() > 1e-3;
            if !safe {
                continue;
            }
            checked += 1;
            let step = 1e-6 * e.norm();
            let (tp, tm) = split_tangent(&e, mu, lambda);
            let (fp, fm) = fd_tangent(&e, mu, lambda, step);
            assert!(mat_err(&tp.0, &fp) <= 1e-5, "plus tangent mismatch for {e:?}");
            assert!(mat_err(&tm.0, &fm) <= 1e-5, "minus tangent mismatch for {e:?}");
        }
    }

    #[test]
    fn tangent_is_symmetric_map() {
        // Symmetry as a map on symmetric tensors: a : T[b] = T[a] : b.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let e = random_strain(&mut rng);
            let (tp, _) = split_tangent(&e, 3.0, 2.0);
            let a = random_strain(&mut rng);
            let b = random_strain(&mut rng);
            let lhs = a.dot(&tp.apply(&b));
            let rhs = tp.apply(&a).dot(&b);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn driving_force_values() {
        let params = MaterialParams {
            mu_s: 1.0,
            lambda_s: 1.0,
            g_c: 1.0,
            kappa: 1e-10,
            eps: 1.0,
            gamma: 0.0,
            l_u: 0.0,
            l_phi: 0.0,
            variant: ModelVariant::Full,
        };
        assert_eq!(driving_force(&SymTensor::ZERO, &params), 0.0);
        assert!((driving_force(&SymTensor::diag(1.0, 0.0), &params) - 3.0).abs() < 1e-14);

        let split = MaterialParams { variant: ModelVariant::Split, lambda_s: 0.0, ..params };
        assert_eq!(driving_force(&SymTensor::diag(-1.0, 0.0), &split), 0.0);
    }

    #[test]
    fn split_driving_force_nonnegative() {
        let mut rng = StdRng::seed_from_u64(13);
        let params = MaterialParams {
            mu_s: 80.77,
            lambda_s: 121.15,
            g_c: 1.0,
            kappa: 1e-10,
            eps: 1.0,
            gamma: 0.0,
            l_u: 0.0,
            l_phi: 0.0,
            variant: ModelVariant::Split,
        };
        for _ in 0..10_000 {
            let e = random_strain(&mut rng);
            assert!(driving_force(&e, &params) >= 0.0);
        }
    }

    #[test]
    fn tensor_bounds_values() {
        let b = tensor_bounds(80.77, 121.15);
        assert!((b.lambda_min - 161.54).abs() < 1e-12);
        assert!((b.lambda_max - 403.84).abs() < 1e-12);
        let b = tensor_bounds(1.0, 0.0);
        assert_eq!(b.lambda_min, 2.0);
        assert_eq!(b.lambda_max, 2.0);
        let b = tensor_bounds(10.95, 6.16);
        assert!((b.lambda_min - 21.90).abs() < 1e-12);
        assert!((b.lambda_max - 34.22).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn degradation_lipschitz(phi in -2.0f64..2.0, psi in -2.0f64..2.0, kappa in 1e-12f64..0.5) {
            let lhs = (degradation(phi, kappa) - degradation(psi, kappa)).abs();
            let bound = 2.0 * (1.0 - kappa) * phi.abs().max(psi.abs()) * (phi - psi).abs();
            prop_assert!(lhs <= bound * (1.0 + 1e-12) + f64::EPSILON);
        }

        #[test]
        fn split_identity_prop(xx in -1.0f64..1.0, yy in -1.0f64..1.0, xy in -1.0f64..1.0) {
            let e = SymTensor::new(xx, yy, xy);
            let sp = spectral_split(&e, 2.3, 1.1);
            let full = full_stress(&e, 2.3, 1.1);
            let err = sp.plus.add(&sp.minus).sub(&full).norm();
            prop_assert!(err <= 1e-12 * full.norm() + 1e-14);
        }

        #[test]
        fn eigen_reconstructs(xx in -1.0f64..1.0, yy in -1.0f64..1.0, xy in -1.0f64..1.0) {
            let e = SymTensor::new(xx, yy, xy);
            let (l1, l2, c, s) = e.eigen();
            // P diag(l1,l2) P^T must reproduce e.
            let re = SymTensor {
                xx: l1 * c * c + l2 * s * s,
                yy: l1 * s * s + l2 * c * c,
                xy: (l1 - l2) * c * s,
            };
            prop_assert!(re.sub(&e).norm() < 1e-13 * (1.0 + e.norm()));
            prop_assert!(l1 >= l2);
        }
    }
}
