//! Per-step diagnostics shared by the grid flow and the invariant ODE.

use std::io::Write;

use crate::mat::{self, Mat};
use crate::scalar::Scalar;
use crate::tensor::MetricPoint;

/// One monitor sample. Column order of the CSV follows field order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonitorRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub sup_rm: f64,
    pub sup_dj2: f64,
    /// `(mean |DJ|²)^{1/2}`
    pub l2_dj2: f64,
    pub domega_inf: f64,
    pub j2_inf: f64,
    pub compat: f64,
    /// `∫ |DJ|² dV`
    pub energy: f64,
    pub l2_ric: f64,
    pub static_p: f64,
    pub static_ric: f64,
    /// `NaN` when undefined (dimension other than 4); written as an empty cell.
    pub static_wplus: f64,
    pub lambda: f64,
    /// `sup |∂ω + P|` for the induced form tendency.
    pub consistency: f64,
}

pub const MONITOR_COLUMNS: [&str; 16] = [
    "step",
    "t",
    "dt",
    "sup_rm",
    "sup_dj2",
    "l2_dj2",
    "domega_inf",
    "j2_inf",
    "compat",
    "energy",
    "l2_ric",
    "static_p",
    "static_ric",
    "static_wplus",
    "lambda",
    "consistency",
];

fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

impl MonitorRecord {
    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.dt,
            self.sup_rm,
            self.sup_dj2,
            self.l2_dj2,
            self.domega_inf,
            self.j2_inf,
            self.compat,
            self.energy,
            self.l2_ric,
            self.static_p,
            self.static_ric,
            self.static_wplus,
            self.lambda,
            self.consistency,
        ]
    }

    /// All entries finite, ignoring the optional W⁺ column.
    pub fn is_finite(&self) -> bool {
        self.values().iter().enumerate().all(|(i, v)| v.is_finite() || (i == 12 && v.is_nan()))
    }

    pub fn csv_row(&self) -> String {
        let mut s = self.step.to_string();
        for v in self.values() {
            s.push(',');
            s.push_str(&cell(v));
        }
        s
    }

    pub fn parse_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != MONITOR_COLUMNS.len() {
            return None;
        }
        let v = |i: usize| -> Option<f64> {
            if f[i].is_empty() {
                Some(f64::NAN)
            } else {
                f[i].parse().ok()
            }
        };
        Some(Self {
            step: f[0].parse().ok()?,
            t: v(1)?,
            dt: v(2)?,
            sup_rm: v(3)?,
            sup_dj2: v(4)?,
            l2_dj2: v(5)?,
            domega_inf: v(6)?,
            j2_inf: v(7)?,
            compat: v(8)?,
            energy: v(9)?,
            l2_ric: v(10)?,
            static_p: v(11)?,
            static_ric: v(12)?,
            static_wplus: v(13)?,
            lambda: v(14)?,
            consistency: v(15)?,
        })
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[MonitorRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", MONITOR_COLUMNS.join(","))?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Option<Vec<MonitorRecord>> {
    let mut lines = text.lines();
    if lines.next()? != MONITOR_COLUMNS.join(",") {
        return None;
    }
    lines.filter(|l| !l.trim().is_empty()).map(MonitorRecord::parse_csv_row).collect()
}

/// Residuals of the static equations at one point or integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticResiduals<T> {
    /// `λ = ⟨P, ω⟩ / ⟨ω, ω⟩`
    pub lambda: T,
    /// `|P − λω|`
    pub p_minus_lambda_omega: T,
    /// `|Ric^{−J}|` with `Ric^{−J} = ½(Ric − Ric(J·,J·))`
    pub ric_anti: T,
    /// Dimension 4 only.
    pub wplus_defect: Option<T>,
}

/// `⟨A, B⟩ = g^{ac} g^{bd} A_{ab} B_{cd}`
pub fn form_inner<T: Scalar, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>, ginv: &Mat<T, N>) -> T {
    mat::dot(a, &mat::mul(ginv, &mat::mul(b, ginv)))
}

pub fn ric_anti_part<T: Scalar, const N: usize>(ric: &Mat<T, N>, j: &Mat<T, N>) -> Mat<T, N> {
    mat::scale(T::of(0.5), &mat::sub(ric, &mat::congruence(j, ric)))
}

impl<T: Scalar> StaticResiduals<T> {
    pub fn from_parts<const N: usize>(
        p: &Mat<T, N>,
        omega: &Mat<T, N>,
        ric: &Mat<T, N>,
        j: &Mat<T, N>,
        g: &MetricPoint<T, N>,
        wplus_defect: Option<T>,
    ) -> Self {
        let ww = form_inner(omega, omega, &g.ginv);
        let lambda = form_inner(p, omega, &g.ginv) / ww;
        let r = mat::sub(p, &mat::scale(lambda, omega));
        let ra = ric_anti_part(ric, j);
        Self {
            lambda,
            p_minus_lambda_omega: form_inner(&r, &r, &g.ginv).max(T::zero()).sqrt(),
            ric_anti: form_inner(&ra, &ra, &g.ginv).max(T::zero()).sqrt(),
            wplus_defect,
        }
    }
}
