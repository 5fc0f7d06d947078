//! Fields built from command-line expressions.

use roughpath_core::ode::{BilinearField, DrivenField, LinearField};
use roughpath_core::{Dependence, ScalarField};

use crate::error::{invalid, CliResult};
use crate::expr::{parse, Expr};

fn builtin(name: &str) -> &str {
    match name {
        "identity" => "x",
        "square" => "x^2",
        "cube" => "x^3",
        other => other,
    }
}

/// Parses an integrand in `t` and `x`. The dependence is read off the
/// expression and `∂f/∂t` is derived symbolically.
pub fn scalar_field(src: &str) -> CliResult<ScalarField> {
    let e = parse(builtin(src), &["t", "x"])?;
    let dependence = match (e.uses(0), e.uses(1)) {
        (true, true) => Dependence::Both,
        (true, false) => Dependence::TimeOnly,
        _ => Dependence::StateOnly,
    };
    if dependence == Dependence::StateOnly {
        return Ok(ScalarField::state_only(move |x| e.eval(&[0.0, x])));
    }
    let dt = e.derivative(0);
    Ok(ScalarField::new(move |t, x| e.eval(&[t, x]))
        .with_dependence(dependence)
        .with_dt_partial(move |t, x| dt.eval(&[t, x])))
}

/// A one-variable function of `x` with its symbolic derivative.
pub fn state_function(src: &str) -> CliResult<(Expr, Expr)> {
    let e = parse(builtin(src), &["x"])?;
    let d = e.derivative(0);
    Ok((e, d))
}

/// Matrix field with one expression per component over
/// `t, y1..ym, x1..xd` (and `y`, `x` when the dimension is 1).
#[derive(Debug)]
pub struct ExprField {
    m: usize,
    d: usize,
    components: Vec<Expr>,
    driver_dependent: Vec<bool>,
}

impl ExprField {
    pub fn new(m: usize, d: usize, sources: &[String]) -> CliResult<Self> {
        if m == 0 || d == 0 {
            return Err(invalid("field dimensions must be positive"));
        }
        if sources.len() != m * d {
            return Err(invalid(format!("expected {} expressions (m*d), got {}", m * d, sources.len())));
        }
        let mut names: Vec<String> = vec!["t".into()];
        names.extend((1..=m).map(|i| format!("y{i}")));
        names.extend((1..=d).map(|j| format!("x{j}")));
        names.push(if m == 1 { "y".into() } else { "_y".into() });
        names.push(if d == 1 { "x".into() } else { "_x".into() });
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = sources.iter().map(|s| parse(s, &refs)).collect::<CliResult<Vec<_>>>()?;
        let driver_dependent = components
            .iter()
            .enumerate()
            .map(|(c, e)| {
                let j = c % d;
                e.uses(1 + m + j) || (d == 1 && e.uses(1 + m + d + 1))
            })
            .collect();
        Ok(ExprField {
            m,
            d,
            components,
            driver_dependent,
        })
    }
}

impl DrivenField for ExprField {
    fn state_dim(&self) -> usize {
        self.m
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, j: usize, t: f64, y: &[f64], x: &[f64]) -> f64 {
        let mut env = Vec::with_capacity(self.m + self.d + 3);
        env.push(t);
        env.extend_from_slice(y);
        env.extend_from_slice(x);
        env.push(y[0]);
        env.push(x[0]);
        self.components[i * self.d + j].eval(&env)
    }
    fn depends_on_driver(&self, i: usize, j: usize) -> bool {
        self.driver_dependent[i * self.d + j]
    }
}

/// `linear`, `bilinear` or `expression` with the given coefficient lists.
pub fn driven_field(kind: &str, m: usize, d: usize, coef: &[f64], offset: &[f64], exprs: &[String]) -> CliResult<Box<dyn DrivenField>> {
    match kind {
        "linear" => {
            let a = if coef.is_empty() { identity_coefficients(m, d) } else { coef.to_vec() };
            let b = if offset.is_empty() { vec![0.0; m * d] } else { offset.to_vec() };
            Ok(Box::new(LinearField::new(m, d, a, b)?))
        }
        "bilinear" => {
            let c = if coef.is_empty() { vec![1.0; m * d] } else { coef.to_vec() };
            Ok(Box::new(BilinearField::new(m, d, c)?))
        }
        "expression" => Ok(Box::new(ExprField::new(m, d, exprs)?)),
        other => Err(invalid(format!("unknown field kind {other:?}; expected linear, bilinear or expression"))),
    }
}

/// `F_ij = y_i`, the default linear field.
fn identity_coefficients(m: usize, d: usize) -> Vec<f64> {
    let mut a = vec![0.0; m * d * m];
    for i in 0..m {
        for j in 0..d {
            a[(i * d + j) * m + i] = 1.0;
        }
    }
    a
}
