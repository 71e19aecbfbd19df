//! Central table of numerical tolerances. Every check in the crate reads its
//! threshold from a [`Tolerances`] value, so runs can override them.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Smallest admissible metric eigenvalue.
    pub eps_metric: f64,
    /// Allowed `|g g^-1 - 1|`.
    pub inverse_residual: f64,
    /// Allowed `|J^2 + 1|` on algebraic input.
    pub almost_complex: f64,
    /// Allowed antisymmetry defect for forms.
    pub antisymmetry: f64,
    /// Allowed `|JK + KJ|` when a J-skew endomorphism is expected.
    pub j_skew: f64,
    /// Eigenvalue floor in the polar construction of J from ω.
    pub eigen_floor: f64,
    /// Relative size of det ω below which ω counts as degenerate.
    pub degenerate_form: f64,
    /// Default pass threshold for identity checks on exact data.
    pub identity_exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}

impl Tolerances {
    /// Defaults for storage scalar `T`: residual-type bounds are raised to a
    /// small multiple of `T`'s machine epsilon, so `f32` data is not
    /// rejected for round-off.
    pub fn for_scalar<T: crate::Scalar>() -> Self {
        let eps = T::epsilon().as_f64();
        let r = |t: f64| t.max(64.0 * eps);
        Self {
            eps_metric: DEFAULT.eps_metric.max(eps),
            inverse_residual: r(DEFAULT.inverse_residual),
            almost_complex: r(DEFAULT.almost_complex),
            antisymmetry: r(DEFAULT.antisymmetry),
            j_skew: r(DEFAULT.j_skew),
            eigen_floor: DEFAULT.eigen_floor.max(eps),
            degenerate_form: DEFAULT.degenerate_form.max(eps),
            identity_exact: r(DEFAULT.identity_exact),
        }
    }
}

pub const DEFAULT: Tolerances = Tolerances {
    eps_metric: 1e-8,
    inverse_residual: 1e-12,
    almost_complex: 1e-10,
    antisymmetry: 1e-12,
    j_skew: 1e-8,
    eigen_floor: 1e-12,
    degenerate_form: 1e-12,
    identity_exact: 1e-9,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_keeps_defaults() {
        let t: Tolerances = toml::from_str("eps_metric = 1e-6").unwrap();
        assert_eq!(t.eps_metric, 1e-6);
        assert_eq!(t.identity_exact, DEFAULT.identity_exact);
        assert!(toml::from_str::<Tolerances>("bogus = 1.0").is_err());
    }
}
