use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Value, gradient and Hessian of the conformal exponent `λ` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaJet {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl LambdaJet {
    pub fn laplacian(&self) -> f64 {
        self.hessian[0][0] + self.hessian[1][1]
    }
}

/// Registry of closed-form conformal exponents `λ` for `g = e^{2λ} δ`.
///
/// Every entry supplies `λ` together with its first and second partial
/// derivatives in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalFactor {
    /// `λ ≡ 0`, the flat disc.
    Euclidean,
    /// `λ = amplitude · exp(-|x|² / width)`.
    Bump { amplitude: f64, width: f64 },
    /// Stereographic chart of a round sphere: `λ = ln 2 - ln(1 + c|x|²)`,
    /// whose Gaussian curvature is exactly `c` everywhere.
    ConstantCurvature { curvature: f64 },
}

impl ConformalFactor {
    /// Parses registry ids such as `euclidean`, `bump(0.2, 0.5)` and
    /// `near_constant_curvature(4)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = parse_registry_call(spec)?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Registry(format!("`{name}` takes {n} argument(s): {spec}")))
            }
        };
        let factor = match name.as_str() {
            "euclidean" => {
                arity(0)?;
                ConformalFactor::Euclidean
            }
            "bump" => {
                arity(2)?;
                ConformalFactor::Bump { amplitude: args[0], width: args[1] }
            }
            "near_constant_curvature" | "constant_curvature" => {
                arity(1)?;
                ConformalFactor::ConstantCurvature { curvature: args[0] }
            }
            _ => return Err(Error::Registry(spec.to_string())),
        };
        factor.validate()?;
        Ok(factor)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConformalFactor::Euclidean => Ok(()),
            ConformalFactor::Bump { amplitude, width } => {
                if amplitude.is_finite() && width.is_finite() && width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Registry(format!("bump({amplitude}, {width}) needs a positive width")))
                }
            }
            ConformalFactor::ConstantCurvature { curvature } => {
                // 1 + c|x|² must stay positive on the closed disc.
                if curvature.is_finite() && 1.0 + curvature > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Registry(format!(
                        "near_constant_curvature({curvature}) needs c > -1"
                    )))
                }
            }
        }
    }

    pub fn registry_id(&self) -> String {
        match *self {
            ConformalFactor::Euclidean => "euclidean".to_string(),
            ConformalFactor::Bump { amplitude, width } => format!("bump({amplitude}, {width})"),
            ConformalFactor::ConstantCurvature { curvature } => {
                format!("near_constant_curvature({curvature})")
            }
        }
    }

    /// `λ(x)` only.
    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        match *self {
            ConformalFactor::Euclidean => 0.0,
            ConformalFactor::Bump { amplitude, width } => {
                amplitude * (-(x[0] * x[0] + x[1] * x[1]) / width).exp()
            }
            ConformalFactor::ConstantCurvature { curvature } => {
                std::f64::consts::LN_2 - (1.0 + curvature * (x[0] * x[0] + x[1] * x[1])).ln()
            }
        }
    }

    /// `(λ, ∇λ)` at `x`; the hot path of geodesic integration.
    #[inline]
    pub fn value_gradient(&self, x: Point) -> (f64, [f64; 2]) {
        match *self {
            ConformalFactor::Euclidean => (0.0, [0.0, 0.0]),
            ConformalFactor::Bump { amplitude, width } => {
                let v = amplitude * (-(x[0] * x[0] + x[1] * x[1]) / width).exp();
                let s = -2.0 * v / width;
                (v, [s * x[0], s * x[1]])
            }
            ConformalFactor::ConstantCurvature { curvature } => {
                let q = 1.0 + curvature * (x[0] * x[0] + x[1] * x[1]);
                let s = -2.0 * curvature / q;
                (std::f64::consts::LN_2 - q.ln(), [s * x[0], s * x[1]])
            }
        }
    }

    pub fn jet(&self, x: Point) -> LambdaJet {
        match *self {
            ConformalFactor::Euclidean => LambdaJet {
                value: 0.0,
                gradient: [0.0; 2],
                hessian: [[0.0; 2]; 2],
            },
            ConformalFactor::Bump { amplitude, width } => {
                let v = amplitude * (-(x[0] * x[0] + x[1] * x[1]) / width).exp();
                let s = -2.0 * v / width;
                let mut hessian = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hessian[i][j] = (-2.0 * delta / width + 4.0 * x[i] * x[j] / (width * width)) * v;
                    }
                }
                LambdaJet { value: v, gradient: [s * x[0], s * x[1]], hessian }
            }
            ConformalFactor::ConstantCurvature { curvature: c } => {
                let q = 1.0 + c * (x[0] * x[0] + x[1] * x[1]);
                let mut hessian = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hessian[i][j] = -2.0 * c * delta / q + 4.0 * c * c * x[i] * x[j] / (q * q);
                    }
                }
                LambdaJet {
                    value: std::f64::consts::LN_2 - q.ln(),
                    gradient: [-2.0 * c * x[0] / q, -2.0 * c * x[1] / q],
                    hessian,
                }
            }
        }
    }
}

/// Splits `name(a, b, ...)` into the name and its numeric arguments.
/// A bare `name` has no arguments.
pub fn parse_registry_call(spec: &str) -> Result<(String, Vec<f64>)> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        if spec.is_empty() || !spec.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Registry(spec.to_string()));
        }
        return Ok((spec.to_string(), Vec::new()));
    };
    if !spec.ends_with(')') {
        return Err(Error::Registry(spec.to_string()));
    }
    let name = spec[..open].trim().to_string();
    let inner = &spec[open + 1..spec.len() - 1];
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Registry(spec.to_string())))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((name, args))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_registry_ids() {
        assert_eq!(ConformalFactor::parse("euclidean").unwrap(), ConformalFactor::Euclidean);
        assert_eq!(
            ConformalFactor::parse("bump(0.2, 0.5)").unwrap(),
            ConformalFactor::Bump { amplitude: 0.2, width: 0.5 }
        );
        assert_eq!(
            ConformalFactor::parse(" near_constant_curvature( 4 ) ").unwrap(),
            ConformalFactor::ConstantCurvature { curvature: 4.0 }
        );
        assert!(ConformalFactor::parse("bump(0.2)").is_err());
        assert!(ConformalFactor::parse("bump(0.2, -1)").is_err());
        assert!(ConformalFactor::parse("saddle").is_err());
        assert!(ConformalFactor::parse("near_constant_curvature(-2)").is_err());
    }

    #[test]
    fn registry_id_round_trips() {
        for f in [
            ConformalFactor::Euclidean,
            ConformalFactor::Bump { amplitude: 0.2, width: 0.5 },
            ConformalFactor::ConstantCurvature { curvature: 0.25 },
        ] {
            assert_eq!(ConformalFactor::parse(&f.registry_id()).unwrap(), f);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for f in [
            ConformalFactor::Bump { amplitude: 0.2, width: 0.5 },
            ConformalFactor::ConstantCurvature { curvature: 0.7 },
        ] {
            for x in [[0.1, -0.3], [0.6, 0.2], [-0.5, -0.5]] {
                let jet = f.jet(x);
                for i in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
                    assert!((fd - jet.gradient[i]).abs() < 1e-9);
                    let gp = f.jet(xp).gradient;
                    let gm = f.jet(xm).gradient;
                    for j in 0..2 {
                        let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                        assert!((fd2 - jet.hessian[i][j]).abs() < 1e-8);
                    }
                }
                let (v, g) = f.value_gradient(x);
                assert!((v - jet.value).abs() < 1e-15);
                assert!((g[0] - jet.gradient[0]).abs() < 1e-15);
                assert!((g[1] - jet.gradient[1]).abs() < 1e-15);
            }
        }
    }
}
