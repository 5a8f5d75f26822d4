use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::jet::{fd_jet, ScalarJet};
use super::profile::{Profile1D, SmoothPositivePart, SmoothStep};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func, Node};
use crate::samples::GridSamples;

/// A real function on a domain in `C^n`, closed under the operations the
/// constructions need. Composite fields differentiate through chain rules,
/// leaves through the central-difference stencil.
#[derive(Clone)]
pub struct ScalarField(Arc<Kind>);

enum Kind {
    Const(f64),
    Expr(Expr),
    Sampled(Arc<GridSamples<f64>>),
    Compose(Arc<dyn Profile1D>, ScalarField),
    Sum(Vec<ScalarField>),
    Product(ScalarField, ScalarField),
    Exp(ScalarField),
    Scale(f64, ScalarField),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.describe())
    }
}

impl ScalarField {
    fn wrap(kind: Kind) -> Self {
        Self(Arc::new(kind))
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Kind::Const(c))
    }

    /// Real part of an expression.
    pub fn from_expr(e: Expr) -> Self {
        Self::wrap(Kind::Expr(e))
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Ok(Self::from_expr(crate::expr::parse(text, n)?))
    }

    pub fn sampled(samples: GridSamples<f64>) -> Self {
        Self::wrap(Kind::Sampled(Arc::new(samples)))
    }

    /// `|z - c|²`.
    pub fn squared_distance(center: &[C64]) -> Self {
        let n = center.len();
        let term = |j: usize| {
            let diff = if center[j] == C64::new(0.0, 0.0) {
                Node::Var(j)
            } else {
                Node::Sub(Box::new(Node::Var(j)), Box::new(Node::Const(center[j])))
            };
            Node::Call(Func::Abs2, Box::new(diff))
        };
        let mut root = term(0);
        for j in 1..n {
            root = Node::Add(Box::new(root), Box::new(term(j)));
        }
        Self::from_expr(Expr::from_node(root, n))
    }

    /// `Σ_j |f_j|²`; zero for an empty tuple.
    pub fn norm_squared(tuple: &[Expr], n: usize) -> Self {
        let mut terms = tuple.iter().map(|f| Node::Call(Func::Abs2, Box::new(f.root().clone())));
        match terms.next() {
            None => Self::constant(0.0),
            Some(first) => {
                let root = terms.fold(first, |acc, t| Node::Add(Box::new(acc), Box::new(t)));
                Self::from_expr(Expr::from_node(root, n))
            }
        }
    }

    pub fn compose(profile: Arc<dyn Profile1D>, inner: ScalarField) -> Self {
        Self::wrap(Kind::Compose(profile, inner))
    }

    pub fn sum(parts: Vec<ScalarField>) -> Self {
        Self::wrap(Kind::Sum(parts))
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn product(a: ScalarField, b: ScalarField) -> Self {
        Self::wrap(Kind::Product(a, b))
    }

    pub fn exp(a: ScalarField) -> Self {
        Self::wrap(Kind::Exp(a))
    }

    pub fn scale(c: f64, a: ScalarField) -> Self {
        Self::wrap(Kind::Scale(c, a))
    }

    /// `y + M_δ(x - y)`.
    pub fn regularized_max(x: &ScalarField, y: &ScalarField, delta: f64) -> Result<Self> {
        let diff = Self::sum(vec![x.clone(), Self::scale(-1.0, y.clone())]);
        let m = Self::compose(Arc::new(SmoothPositivePart::new(delta)?), diff);
        Ok(Self::sum(vec![y.clone(), m]))
    }

    /// Radial cutoff about `center`: 1 on `|z - c| ≤ inner`, 0 on
    /// `|z - c| ≥ outer`, smooth and monotone in between.
    pub fn radial_cutoff(center: &[C64], inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::BadRadii { inner, outer });
        }
        let step = SmoothStep::new(inner * inner, outer * outer, true)?;
        Ok(Self::compose(Arc::new(step), Self::squared_distance(center)))
    }

    pub fn value(&self, z: &[C64]) -> Result<f64> {
        match &*self.0 {
            Kind::Const(c) => Ok(*c),
            Kind::Expr(e) => e.eval_real(z).map_err(|err| Error::eval(z, err)),
            Kind::Sampled(s) => sampled_value(s, z),
            Kind::Compose(p, a) => Ok(p.value(a.value(z)?)),
            Kind::Sum(parts) => parts.iter().map(|p| p.value(z)).sum(),
            Kind::Product(a, b) => Ok(a.value(z)? * b.value(z)?),
            Kind::Exp(a) => Ok(a.value(z)?.exp()),
            Kind::Scale(c, a) => Ok(c * a.value(z)?),
        }
    }

    /// Second-order jet at `z`; `steps` (one per real axis) are used by
    /// stencil leaves.
    pub fn jet(&self, z: &[C64], steps: &[f64]) -> Result<ScalarJet> {
        let n = z.len();
        match &*self.0 {
            Kind::Const(c) => Ok(ScalarJet::constant(*c, n)),
            Kind::Expr(_) | Kind::Sampled(_) => {
                let raw = fd_jet(z, steps, |p| Ok(C64::new(self.value(p)?, 0.0)))?;
                Ok(ScalarJet::from_raw(raw))
            }
            Kind::Compose(p, a) => {
                let j = a.jet(z, steps)?;
                let t = j.value;
                Ok(j.compose(p.value(t), p.d1(t), p.d2(t)))
            }
            Kind::Sum(parts) => {
                let mut acc = ScalarJet::constant(0.0, n);
                for p in parts {
                    acc = acc.add(&p.jet(z, steps)?);
                }
                Ok(acc)
            }
            Kind::Product(a, b) => Ok(a.jet(z, steps)?.mul(&b.jet(z, steps)?)),
            Kind::Exp(a) => Ok(a.jet(z, steps)?.exp()),
            Kind::Scale(c, a) => Ok(a.jet(z, steps)?.scale(*c)),
        }
    }

    pub fn describe(&self) -> String {
        match &*self.0 {
            Kind::Const(c) => format!("{c}"),
            Kind::Expr(e) => format!("re({e})"),
            Kind::Sampled(s) => format!("samples[{}]", s.domain().samples()),
            Kind::Compose(p, a) => format!("{}∘({})", p.describe(), a.describe()),
            Kind::Sum(parts) => parts.iter().map(ScalarField::describe).collect::<Vec<_>>().join(" + "),
            Kind::Product(a, b) => format!("({})*({})", a.describe(), b.describe()),
            Kind::Exp(a) => format!("exp({})", a.describe()),
            Kind::Scale(c, a) => format!("{c}*({})", a.describe()),
        }
    }
}

fn sampled_value(s: &GridSamples<f64>, z: &[C64]) -> Result<f64> {
    match s.lookup(z) {
        Some(v) if v.is_finite() => Ok(*v),
        Some(_) => Err(Error::SingularSample(z.into())),
        None => Err(Error::StencilOutOfDomain(z.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn chain_rule_matches_stencil() {
        // exp(|z|^2) through the Exp node versus the stencil on the expression
        let n = 2;
        let inner = ScalarField::squared_distance(&[c(0.1, 0.0), c(0.0, -0.2)]);
        let composite = ScalarField::exp(inner);
        let flat = ScalarField::parse("exp(abs2(z1 - 0.1) + abs2(z2 + 0.2i))", n).unwrap();
        let z = [c(0.3, 0.2), c(-0.1, 0.4)];
        let a = composite.jet(&z, &[1e-3; 4]).unwrap();
        let b = flat.jet(&z, &[1e-3; 4]).unwrap();
        for (x, y) in a.dd.iter().zip(&b.dd) {
            assert!((x - y).norm() < 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn cutoff_levels() {
        let chi = ScalarField::radial_cutoff(&[c(0.0, 0.0)], 0.5, 1.0).unwrap();
        assert_eq!(chi.value(&[c(0.3, 0.3)]).unwrap(), 1.0);
        assert_eq!(chi.value(&[c(0.9, 0.5)]).unwrap(), 0.0);
        assert!(matches!(ScalarField::radial_cutoff(&[c(0.0, 0.0)], 1.0, 0.5), Err(Error::BadRadii { .. })));
    }

    #[test]
    fn regularized_max_field() {
        let x = ScalarField::parse("abs2(z1)", 1).unwrap();
        let m = ScalarField::regularized_max(&x, &ScalarField::constant(1.0), 0.1).unwrap();
        assert!((m.value(&[c(2.0, 0.0)]).unwrap() - 4.0).abs() < 1e-14);
        assert!((m.value(&[c(0.1, 0.0)]).unwrap() - 1.0).abs() < 1e-14);
    }
}
