//! Tubular coordinates `h(s, t) = g(s) + t n(g(s))` around one chart.

use nalgebra::DMatrix;

use super::chart::{wedge_of, Chart, Vector};
use super::GeometryError;

#[derive(Debug, Clone)]
pub struct TubularFrame {
    chart: Chart,
    thickness: f64,
}

impl TubularFrame {
    pub fn new(chart: Chart, thickness: f64) -> Result<Self, GeometryError> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(GeometryError::Precondition(format!("tube thickness {thickness} must be positive")));
        }
        Ok(Self { chart, thickness })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn normal(&self, s: &[f64]) -> Result<Vector, GeometryError> {
        self.chart.unit_normal(s)
    }

    /// Columns `n_{s_k}` by central differences of the unit normal.
    pub fn normal_derivatives(&self, s: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let step = 1e-6 * self.chart.length_scale();
        let n = self.chart.ambient_dim();
        let mut out = DMatrix::zeros(n, self.chart.param_dim());
        let mut sp = s.to_vec();
        for k in 0..self.chart.param_dim() {
            sp[k] = s[k] + step;
            let np = self.chart.unit_normal(&sp)?;
            sp[k] = s[k] - step;
            let nm = self.chart.unit_normal(&sp)?;
            sp[k] = s[k];
            out.set_column(k, &((np - nm) / (2.0 * step)));
        }
        Ok(out)
    }

    fn check_t(&self, t: f64) -> Result<(), GeometryError> {
        if t.abs() >= self.thickness {
            return Err(GeometryError::OutOfTube { t, thickness: self.thickness });
        }
        Ok(())
    }

    pub fn map(&self, s: &[f64], t: f64) -> Result<Vector, GeometryError> {
        self.check_t(t)?;
        Ok(self.chart.eval(s) + self.normal(s)? * t)
    }

    /// `J(s, t) = det col(g_{s_1} + t n_{s_1}, .., g_{s_{N-1}} + t n_{s_{N-1}}, n)`.
    pub fn jacobian(&self, s: &[f64], t: f64) -> Result<f64, GeometryError> {
        self.check_t(t)?;
        let g = self.chart.tangents(s);
        let dn = self.normal_derivatives(s)?;
        let n = self.normal(s)?;
        let dim = self.chart.ambient_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim - 1 {
            m.set_column(k, &(g.column(k) + dn.column(k) * t));
        }
        m.set_column(dim - 1, &n);
        let value = m.determinant();
        if !(value > 0.0) {
            return Err(GeometryError::NonPositiveJacobian { value });
        }
        Ok(value)
    }

    /// Coefficients `J_0, .., J_{N-1}` of `J(s, t) = sum_k J_k(s) t^k`,
    /// from the multilinear expansion of the determinant in its first
    /// `N - 1` columns.
    pub fn t_coefficients(&self, s: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let g = self.chart.tangents(s);
        let dn = self.normal_derivatives(s)?;
        let n = self.normal(s)?;
        let dim = self.chart.ambient_dim();
        let p = dim - 1;
        let mut coeffs = vec![0.0; dim];
        for mask in 0u32..(1 << p) {
            let mut m = DMatrix::zeros(dim, dim);
            for k in 0..p {
                if mask & (1 << k) != 0 {
                    m.set_column(k, &dn.column(k));
                } else {
                    m.set_column(k, &g.column(k));
                }
            }
            m.set_column(p, &n);
            coeffs[mask.count_ones() as usize] += m.determinant();
        }
        if !(coeffs[0] > 0.0) {
            return Err(GeometryError::DegenerateChart { chart: self.chart.name().to_string(), sigma: coeffs[0] });
        }
        Ok(coeffs)
    }

    /// `J_1(s) / J_0(s) = d_t J(s, 0) / J(s, 0)`.
    pub fn mean_curvature_proxy(&self, s: &[f64]) -> Result<f64, GeometryError> {
        let c = self.t_coefficients(s)?;
        Ok(c[1] / c[0])
    }

    /// Surface element `J(s, 0) = |g_{s_1} ^ .. ^ g_{s_{N-1}}|`.
    pub fn area_element(&self, s: &[f64]) -> f64 {
        wedge_of(&self.chart.tangents(s)).norm()
    }
}

/// Evaluates `sum_k c_k t^k`.
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}
