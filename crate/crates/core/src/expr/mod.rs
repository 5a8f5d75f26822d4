//! Scalar complex expressions in `z1..zn` and their conjugates.
//!
//! This is the textual format used for every user-supplied function: metric
//! entries, weights, defining functions, retractions and section tuples.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' int)*
//! atom   := number | number 'i' | 'i' | zK | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | abs2 | re | im | sqrt | conj
//! ```

mod parser;

use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

pub use parser::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Abs2,
    Re,
    Im,
    Sqrt,
    Conj,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs2 => "abs2",
            Func::Re => "re",
            Func::Im => "im",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs2" => Func::Abs2,
            "re" => Func::Re,
            "im" => Func::Im,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            _ => return None,
        })
    }

    /// Functions that break holomorphy syntactically.
    pub fn is_antiholomorphic_marker(self) -> bool {
        matches!(self, Func::Abs2 | Func::Re | Func::Im | Func::Sqrt | Func::Conj)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has dimension {got}, expression expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// A parsed expression together with its ambient dimension and the
/// syntactic holomorphy flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    n: usize,
    holomorphic: bool,
}

impl Expr {
    pub fn from_node(root: Node, n: usize) -> Self {
        let holomorphic = node_is_holomorphic(&root);
        Self { root, n, holomorphic }
    }

    pub fn constant(c: C64, n: usize) -> Self {
        Self::from_node(Node::Const(c), n)
    }

    pub fn variable(index: usize, n: usize) -> Self {
        assert!(index < n);
        Self::from_node(Node::Var(index), n)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: &[C64]) -> Result<C64, EvalError> {
        if z.len() != self.n {
            return Err(EvalError::DimensionMismatch { expected: self.n, got: z.len() });
        }
        eval_node(&self.root, z)
    }

    /// Real part of the value; for fields that are real by construction.
    pub fn eval_real(&self, z: &[C64]) -> Result<f64, EvalError> {
        Ok(self.eval(z)?.re)
    }

    /// Replaces each variable `z_k` by `map[k]`. The result lives in the
    /// dimension of the map components.
    pub fn substitute(&self, map: &[Expr]) -> Result<Expr, EvalError> {
        if map.len() != self.n {
            return Err(EvalError::DimensionMismatch { expected: self.n, got: map.len() });
        }
        let m = map.first().map_or(self.n, Expr::dim);
        if map.iter().any(|e| e.dim() != m) {
            return Err(EvalError::DimensionMismatch { expected: m, got: self.n });
        }
        Ok(Expr::from_node(subst_node(&self.root, map), m))
    }
    /// `∂/∂z_{var+1}` of a holomorphic expression; `None` if the expression
    /// is not syntactically holomorphic.
    pub fn derivative(&self, var: usize) -> Option<Expr> {
        if !self.holomorphic {
            return None;
        }
        Some(Expr::from_node(diff_node(&self.root, var), self.n))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, 0)
    }
}

fn node_is_holomorphic(node: &Node) -> bool {
    match node {
        Node::Const(_) | Node::Var(_) => true,
        Node::Neg(a) | Node::Pow(a, _) => node_is_holomorphic(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            node_is_holomorphic(a) && node_is_holomorphic(b)
        }
        Node::Call(func, a) => !func.is_antiholomorphic_marker() && node_is_holomorphic(a),
    }
}

fn is_const(node: &Node, value: f64) -> bool {
    matches!(node, Node::Const(c) if *c == C64::new(value, 0.0))
}

fn add(a: Node, b: Node) -> Node {
    match (is_const(&a, 0.0), is_const(&b, 0.0)) {
        (true, _) => b,
        (_, true) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return Node::Const(C64::new(0.0, 0.0));
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Node::Mul(Box::new(a), Box::new(b))
}

fn diff_node(node: &Node, var: usize) -> Node {
    let zero = || Node::Const(C64::new(0.0, 0.0));
    match node {
        Node::Const(_) => zero(),
        Node::Var(i) => Node::Const(C64::new(if *i == var { 1.0 } else { 0.0 }, 0.0)),
        Node::Neg(a) => match diff_node(a, var) {
            d if is_const(&d, 0.0) => zero(),
            d => Node::Neg(Box::new(d)),
        },
        Node::Add(a, b) => add(diff_node(a, var), diff_node(b, var)),
        Node::Sub(a, b) => {
            let db = diff_node(b, var);
            let neg = if is_const(&db, 0.0) { db } else { Node::Neg(Box::new(db)) };
            add(diff_node(a, var), neg)
        }
        Node::Mul(a, b) => add(mul(diff_node(a, var), (**b).clone()), mul((**a).clone(), diff_node(b, var))),
        Node::Div(a, b) => {
            // a'/b - a b' / b²
            let first = Node::Div(Box::new(diff_node(a, var)), b.clone());
            let db = diff_node(b, var);
            if is_const(&db, 0.0) {
                return first;
            }
            let second = Node::Div(Box::new(mul((**a).clone(), db)), Box::new(Node::Pow(b.clone(), 2)));
            Node::Sub(Box::new(first), Box::new(second))
        }
        Node::Pow(a, k) => {
            if *k == 0 {
                return zero();
            }
            let outer = mul(Node::Const(C64::new(*k as f64, 0.0)), Node::Pow(a.clone(), k - 1));
            mul(outer, diff_node(a, var))
        }
        Node::Call(func, a) => {
            let inner = diff_node(a, var);
            match func {
                Func::Exp => mul(node.clone(), inner),
                Func::Log => {
                    if is_const(&inner, 0.0) {
                        zero()
                    } else {
                        Node::Div(Box::new(inner), a.clone())
                    }
                }
                _ => unreachable!("derivative of a non-holomorphic call"),
            }
        }
    }
}

fn subst_node(node: &Node, map: &[Expr]) -> Node {
    let b = |n: &Node| Box::new(subst_node(n, map));
    match node {
        Node::Const(c) => Node::Const(*c),
        Node::Var(i) => map[*i].root.clone(),
        Node::Neg(a) => Node::Neg(b(a)),
        Node::Add(x, y) => Node::Add(b(x), b(y)),
        Node::Sub(x, y) => Node::Sub(b(x), b(y)),
        Node::Mul(x, y) => Node::Mul(b(x), b(y)),
        Node::Div(x, y) => Node::Div(b(x), b(y)),
        Node::Pow(a, k) => Node::Pow(b(a), *k),
        Node::Call(func, a) => Node::Call(*func, b(a)),
    }
}

fn eval_node(node: &Node, z: &[C64]) -> Result<C64, EvalError> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => z[*i],
        Node::Neg(a) => -eval_node(a, z)?,
        Node::Add(a, b) => eval_node(a, z)? + eval_node(b, z)?,
        Node::Sub(a, b) => eval_node(a, z)? - eval_node(b, z)?,
        Node::Mul(a, b) => eval_node(a, z)? * eval_node(b, z)?,
        Node::Div(a, b) => {
            let den = eval_node(b, z)?;
            if den == C64::new(0.0, 0.0) {
                return Err(EvalError::Domain("division by zero"));
            }
            eval_node(a, z)? / den
        }
        Node::Pow(a, k) => {
            let base = eval_node(a, z)?;
            if *k < 0 && base == C64::new(0.0, 0.0) {
                return Err(EvalError::Domain("zero raised to a negative power"));
            }
            base.powi(*k)
        }
        Node::Call(func, a) => {
            let x = eval_node(a, z)?;
            match func {
                Func::Exp => x.exp(),
                Func::Log => {
                    if x == C64::new(0.0, 0.0) {
                        return Err(EvalError::Domain("log of zero"));
                    }
                    x.ln()
                }
                Func::Abs2 => C64::new(x.norm_sqr(), 0.0),
                Func::Re => C64::new(x.re, 0.0),
                Func::Im => C64::new(x.im, 0.0),
                Func::Sqrt => x.sqrt(),
                Func::Conj => x.conj(),
            }
        }
    })
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

fn paren(
    f: &mut fmt::Formatter<'_>,
    wrap: bool,
    body: impl FnOnce(&mut fmt::Formatter<'_>) -> fmt::Result,
) -> fmt::Result {
    if wrap {
        write!(f, "(")?;
    }
    body(f)?;
    if wrap {
        write!(f, ")")?;
    }
    Ok(())
}

fn is_negative(x: f64) -> bool {
    x < 0.0 || (x == 0.0 && x.is_sign_negative())
}

fn write_const(f: &mut fmt::Formatter<'_>, c: C64, min_prec: u8) -> fmt::Result {
    if c.im == 0.0 {
        if is_negative(c.re) {
            paren(f, PREC_NEG < min_prec, |f| write!(f, "-{:?}", -c.re))
        } else {
            write!(f, "{:?}", c.re)
        }
    } else if c.re == 0.0 {
        if is_negative(c.im) {
            paren(f, PREC_NEG < min_prec, |f| write!(f, "-{:?}i", -c.im))
        } else {
            write!(f, "{:?}i", c.im)
        }
    } else {
        paren(f, PREC_ADD < min_prec, |f| {
            write_const(f, C64::new(c.re, 0.0), PREC_ADD)?;
            if is_negative(c.im) {
                write!(f, " - {:?}i", -c.im)
            } else {
                write!(f, " + {:?}i", c.im)
            }
        })
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    match node {
        Node::Const(c) => write_const(f, *c, min_prec),
        Node::Var(i) => write!(f, "z{}", i + 1),
        Node::Neg(a) => paren(f, PREC_NEG < min_prec, |f| {
            write!(f, "-")?;
            write_node(f, a, PREC_NEG)
        }),
        Node::Add(a, b) | Node::Sub(a, b) => paren(f, PREC_ADD < min_prec, |f| {
            write_node(f, a, PREC_ADD)?;
            write!(f, "{}", if matches!(node, Node::Add(..)) { " + " } else { " - " })?;
            write_node(f, b, PREC_MUL)
        }),
        Node::Mul(a, b) | Node::Div(a, b) => paren(f, PREC_MUL < min_prec, |f| {
            write_node(f, a, PREC_MUL)?;
            write!(f, "{}", if matches!(node, Node::Mul(..)) { "*" } else { "/" })?;
            write_node(f, b, PREC_NEG)
        }),
        Node::Pow(a, k) => {
            write_node(f, a, PREC_ATOM)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, 0)?;
            write!(f, ")")
        }
    }
}
