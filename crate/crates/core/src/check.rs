use serde::{Deserialize, Serialize};

/// A named numerical assertion together with the residual it was judged on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        Check { name: name.into(), pass: residual <= bound, residual }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass, residual: if pass { 0.0 } else { 1.0 } }
    }
}

/// `|a| / |b|`, with `0/0` read as zero.
pub fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a
    } else {
        a / b
    }
}
