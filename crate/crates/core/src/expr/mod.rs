//! Holomorphic expressions: parsing, order-3 jet evaluation and path
//! integration.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("+" | "-") unary | power ;
//! power   = primary [ "^" unary ] ;              (* right associative *)
//! primary = number | "z" | "i" | "pi" | "e"
//!         | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "log" | "sqrt" | "sin" | "cos" | "tan" | "sinh" | "cosh" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `log`, `sqrt` and non-integer powers use the principal branch. Evaluating
//! one of them on its cut is an error, and [`integrate_path`] refuses paths
//! along which one of their arguments crosses the cut.

mod jet;
mod parser;
mod quad;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jet::{CTaylor, Jet3, Taylor};
pub use quad::integrate_polyline;

/// Default absolute tolerance for path integrals.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Default minimum distance between a path and a singularity.
pub const DEFAULT_POLE_CLEARANCE: f64 = 1e-6;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("singular point: {0}")]
    Singular(&'static str),
    #[error("argument of `{0}` lies on its branch cut")]
    BranchCut(&'static str),
    #[error("path crosses the branch cut of `{name}` near {at}")]
    BranchCrossing { name: &'static str, at: Complex64 },
    #[error("path passes within {distance:.3e} of a singularity near {at}")]
    SingularityWithinClearance { at: Complex64, distance: f64 },
    #[error("quadrature did not reach tolerance {tol:e}")]
    NoConvergence { tol: f64 },
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Var,
    Const(Complex64),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Func(Func, Box<Node>),
}

/// Exponent small enough to evaluate by repeated multiplication.
fn integer_exponent(node: &Node) -> Option<i32> {
    if node.has_var() {
        return None;
    }
    let c = node.value(Complex64::new(0.0, 0.0)).ok()?;
    (c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 64.0).then_some(c.re as i32)
}

impl Node {
    fn has_var(&self) -> bool {
        match self {
            Node::Var => true,
            Node::Const(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.has_var() || b.has_var()
            }
            Node::Neg(a) | Node::Func(_, a) => a.has_var(),
        }
    }

    fn is_multivalued(&self) -> bool {
        match self {
            Node::Var | Node::Const(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_multivalued() || b.is_multivalued()
            }
            Node::Pow(a, b) => {
                integer_exponent(b).is_none() || a.is_multivalued() || b.is_multivalued()
            }
            Node::Neg(a) => a.is_multivalued(),
            Node::Func(f, a) => matches!(f, Func::Log | Func::Sqrt) || a.is_multivalued(),
        }
    }

    fn jet(&self, z: &CTaylor) -> Result<CTaylor, ExprError> {
        Ok(match self {
            Node::Var => *z,
            Node::Const(c) => CTaylor::constant(*c),
            Node::Add(a, b) => a.jet(z)? + b.jet(z)?,
            Node::Sub(a, b) => a.jet(z)? - b.jet(z)?,
            Node::Mul(a, b) => a.jet(z)? * b.jet(z)?,
            Node::Div(a, b) => a.jet(z)?.checked_div(b.jet(z)?)?,
            Node::Neg(a) => -a.jet(z)?,
            Node::Pow(a, b) => match integer_exponent(b) {
                Some(n) => a.jet(z)?.powi(n)?,
                None => a.jet(z)?.powc(b.jet(z)?)?,
            },
            Node::Func(f, a) => {
                let x = a.jet(z)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln()?,
                    Func::Sqrt => x.sqrt()?,
                    Func::Sin => x.sin_cos().0,
                    Func::Cos => x.sin_cos().1,
                    Func::Tan => {
                        let (s, c) = x.sin_cos();
                        s.checked_div(c)?
                    }
                    Func::Sinh => x.sinh_cosh().0,
                    Func::Cosh => x.sinh_cosh().1,
                }
            }
        })
    }

    fn value(&self, z: Complex64) -> Result<Complex64, ExprError> {
        let on_cut = |a: Complex64| a.re < 0.0 && a.im.abs() <= 1e-14 * a.re.abs();
        Ok(match self {
            Node::Var => z,
            Node::Const(c) => *c,
            Node::Add(a, b) => a.value(z)? + b.value(z)?,
            Node::Sub(a, b) => a.value(z)? - b.value(z)?,
            Node::Mul(a, b) => a.value(z)? * b.value(z)?,
            Node::Div(a, b) => {
                let d = b.value(z)?;
                if d == Complex64::new(0.0, 0.0) {
                    return Err(ExprError::Singular("division by zero"));
                }
                a.value(z)? / d
            }
            Node::Neg(a) => -a.value(z)?,
            Node::Pow(a, b) => {
                let base = a.value(z)?;
                match integer_exponent(b) {
                    Some(n) if n >= 0 => base.powi(n),
                    Some(n) => {
                        if base == Complex64::new(0.0, 0.0) {
                            return Err(ExprError::Singular("negative power of zero"));
                        }
                        base.powi(n)
                    }
                    None => {
                        if base == Complex64::new(0.0, 0.0) {
                            return Err(ExprError::Singular("non-integer power of zero"));
                        }
                        if on_cut(base) {
                            return Err(ExprError::BranchCut("pow"));
                        }
                        (b.value(z)? * base.ln()).exp()
                    }
                }
            }
            Node::Func(f, a) => {
                let x = a.value(z)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log | Func::Sqrt => {
                        if x == Complex64::new(0.0, 0.0) {
                            return Err(ExprError::Singular("branch point"));
                        }
                        if on_cut(x) {
                            return Err(ExprError::BranchCut(f.name()));
                        }
                        if *f == Func::Log {
                            x.ln()
                        } else {
                            x.sqrt()
                        }
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        let c = x.cos();
                        if c == Complex64::new(0.0, 0.0) {
                            return Err(ExprError::Singular("pole of tan"));
                        }
                        x.sin() / c
                    }
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                }
            }
        })
    }

    /// Arguments of the branch-cut primitives, tagged with their name.
    fn branch_arguments(&self, z: Complex64, out: &mut Vec<(&'static str, Complex64)>) {
        match self {
            Node::Var | Node::Const(_) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.branch_arguments(z, out);
                b.branch_arguments(z, out);
            }
            Node::Pow(a, b) => {
                a.branch_arguments(z, out);
                b.branch_arguments(z, out);
                if integer_exponent(b).is_none() {
                    if let Ok(v) = a.value(z) {
                        out.push(("pow", v));
                    }
                }
            }
            Node::Neg(a) => a.branch_arguments(z, out),
            Node::Func(f, a) => {
                a.branch_arguments(z, out);
                if matches!(f, Func::Log | Func::Sqrt) {
                    if let Ok(v) = a.value(z) {
                        out.push((f.name(), v));
                    }
                }
            }
        }
    }
}

fn fmt_const(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{}", c.re)
    } else if c.re == 0.0 && c.im == 1.0 {
        write!(f, "i")
    } else if c.re == 0.0 {
        write!(f, "{}i", c.im)
    } else {
        write!(f, "({}{:+}i)", c.re, c.im)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var => write!(f, "z"),
            Node::Const(c) => fmt_const(*c, f),
            Node::Add(a, b) => write!(f, "add({a},{b})"),
            Node::Sub(a, b) => write!(f, "sub({a},{b})"),
            Node::Mul(a, b) => write!(f, "mul({a},{b})"),
            Node::Div(a, b) => write!(f, "div({a},{b})"),
            Node::Pow(a, b) => write!(f, "pow({a},{b})"),
            Node::Neg(a) => write!(f, "neg({a})"),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed holomorphic expression in the variable `z`.
///
/// Serializes as its source text.
#[derive(Clone, Debug)]
pub struct HoloExpr {
    source: Arc<str>,
    root: Arc<Node>,
    multivalued: bool,
}

impl PartialEq for HoloExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl HoloExpr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let root = parser::parse(text)?;
        let multivalued = root.is_multivalued();
        Ok(Self { source: text.into(), root: Arc::new(root), multivalued })
    }

    pub fn constant(c: Complex64) -> Self {
        let node = Node::Const(c);
        let source = node.to_string();
        Self { source: source.into(), root: Arc::new(node), multivalued: false }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// True when a principal-branch primitive occurs anywhere in the tree.
    pub fn is_multivalued(&self) -> bool {
        self.multivalued
    }

    /// Structural test for a constant expression.
    pub fn is_constant(&self) -> bool {
        !self.root.has_var()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, ExprError> {
        let v = self.root.value(z)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Taylor coefficients through order 3 at `z`.
    pub fn taylor(&self, z: Complex64) -> Result<CTaylor, ExprError> {
        let t = self.root.jet(&CTaylor::variable(z))?;
        if t.is_finite() {
            Ok(t)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Value and first three complex derivatives at `z`.
    pub fn eval_jet3(&self, z: Complex64) -> Result<Jet3, ExprError> {
        self.taylor(z).map(CTaylor::to_jet)
    }

    /// Distance to the nearest singularity as suggested by the local Taylor
    /// coefficients: for a pole at distance d the coefficient ratios tend to d.
    /// Entire and polynomial expressions report infinity.
    pub fn singularity_distance_estimate(&self, z: Complex64) -> Result<f64, ExprError> {
        let t = self.taylor(z)?;
        let ratio = |a: Complex64, b: Complex64| {
            if b.norm() == 0.0 {
                f64::INFINITY
            } else {
                a.norm() / b.norm()
            }
        };
        Ok(ratio(t.c[1], t.c[2]).max(ratio(t.c[2], t.c[3])))
    }

    fn branch_arguments(&self, z: Complex64) -> Vec<(&'static str, Complex64)> {
        let mut out = Vec::new();
        if self.multivalued {
            self.root.branch_arguments(z, &mut out);
        }
        out
    }
}

impl FromStr for HoloExpr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for HoloExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for HoloExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for HoloExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        HoloExpr::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Samples per polyline segment used by the clearance and cut-crossing scan.
const PATH_SCAN: usize = 64;

/// Checks a polyline against the expression's singularities and branch cuts.
pub fn check_path(
    exprs: &[&HoloExpr],
    path: &[Complex64],
    clearance: f64,
) -> Result<(), ExprError> {
    for w in path.windows(2) {
        let mut prev: Vec<Vec<(&'static str, Complex64)>> = vec![Vec::new(); exprs.len()];
        for k in 0..=PATH_SCAN {
            let z = w[0] + (w[1] - w[0]) * (k as f64 / PATH_SCAN as f64);
            for (e, prev_args) in exprs.iter().zip(prev.iter_mut()) {
                let d = e.singularity_distance_estimate(z).map_err(|err| match err {
                    ExprError::BranchCut(name) => ExprError::BranchCrossing { name, at: z },
                    other => other,
                })?;
                if d < clearance {
                    return Err(ExprError::SingularityWithinClearance { at: z, distance: d });
                }
                let args = e.branch_arguments(z);
                for (a, b) in prev_args.iter().zip(args.iter()) {
                    let crosses = a.1.im.signum() != b.1.im.signum() && (a.1.re < 0.0 || b.1.re < 0.0);
                    if crosses {
                        return Err(ExprError::BranchCrossing { name: b.0, at: z });
                    }
                }
                *prev_args = args;
            }
        }
    }
    Ok(())
}

/// Integral of `e` along the polyline `path` with absolute error `tol`.
pub fn integrate_path(e: &HoloExpr, path: &[Complex64], tol: f64) -> Result<Complex64, ExprError> {
    check_path(&[e], path, DEFAULT_POLE_CLEARANCE)?;
    let [v] = integrate_polyline(path, tol, |z| Ok([e.eval(z)?]))?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parse_shapes() {
        assert_eq!(HoloExpr::parse("z^2 + 1").unwrap().root().to_string(), "add(pow(z,2),1)");
        assert_eq!(HoloExpr::parse("exp(4*z)").unwrap().root().to_string(), "exp(mul(4,z))");
        assert_eq!(
            HoloExpr::parse("log((1+z)/(1-z))").unwrap().root().to_string(),
            "log(div(add(1,z),sub(1,z)))"
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(HoloExpr::parse("1-2-3").unwrap().root().to_string(), "sub(sub(1,2),3)");
        assert_eq!(HoloExpr::parse("8/2/2").unwrap().root().to_string(), "div(div(8,2),2)");
        assert_eq!(HoloExpr::parse("-z^2").unwrap().root().to_string(), "neg(pow(z,2))");
        assert_eq!(HoloExpr::parse("2^3^2").unwrap().eval(c(0.0, 0.0)).unwrap(), c(512.0, 0.0));
        assert_eq!(HoloExpr::parse("1+2*3").unwrap().eval(c(0.0, 0.0)).unwrap(), c(7.0, 0.0));
        assert_eq!(HoloExpr::parse("2e3").unwrap().eval(c(0.0, 0.0)).unwrap(), c(2000.0, 0.0));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match HoloExpr::parse("z + foo(z)") {
            Err(ExprError::UnknownIdentifier { offset, name }) => {
                assert_eq!(offset, 4);
                assert_eq!(name, "foo");
            }
            other => panic!("{other:?}"),
        }
        match HoloExpr::parse("z + * 2") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match HoloExpr::parse("(z + 1") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(HoloExpr::parse("   ").is_err());
        assert!(matches!(HoloExpr::parse("z $ 1"), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn multivalued_flag() {
        assert!(HoloExpr::parse("log(1+z)").unwrap().is_multivalued());
        assert!(HoloExpr::parse("z^0.5").unwrap().is_multivalued());
        assert!(!HoloExpr::parse("z^-2 + exp(z)").unwrap().is_multivalued());
    }

    #[test]
    fn jets_of_examples() {
        let j = HoloExpr::parse("z^2").unwrap().eval_jet3(c(1.0, 1.0)).unwrap();
        assert_eq!(j.as_array(), [c(0.0, 2.0), c(2.0, 2.0), c(2.0, 0.0), c(0.0, 0.0)]);
        let j = HoloExpr::parse("exp(4*z)").unwrap().eval_jet3(c(0.0, 0.0)).unwrap();
        assert_eq!(j.as_array(), [c(1.0, 0.0), c(4.0, 0.0), c(16.0, 0.0), c(64.0, 0.0)]);
        let j = HoloExpr::parse("log((1+z)/(1-z))").unwrap().eval_jet3(c(0.0, 0.0)).unwrap();
        let want = [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)];
        for (a, b) in j.as_array().iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_points_error() {
        let e = HoloExpr::parse("1/z").unwrap();
        assert!(matches!(e.eval_jet3(c(0.0, 0.0)), Err(ExprError::Singular(_))));
        let e = HoloExpr::parse("sqrt(z)").unwrap();
        assert!(matches!(e.eval_jet3(c(0.0, 0.0)), Err(ExprError::Singular(_))));
        assert!(matches!(e.eval_jet3(c(-1.0, 0.0)), Err(ExprError::BranchCut("sqrt"))));
        assert!(matches!(e.eval(c(-1.0, 0.0)), Err(ExprError::BranchCut("sqrt"))));
    }

    #[test]
    fn integrals_of_examples() {
        let e = HoloExpr::parse("1/(1-z^2)").unwrap();
        let v = integrate_path(&e, &[c(0.0, 0.0), c(0.5, 0.0)], 1e-12).unwrap();
        assert!((v - c(0.5f64.atanh(), 0.0)).norm() < 1e-12);

        let e = HoloExpr::parse("1").unwrap();
        let v = integrate_path(&e, &[c(0.0, 0.0), c(0.0, 1.0)], 1e-12).unwrap();
        assert!((v - c(0.0, 1.0)).norm() < 1e-14);

        let e = HoloExpr::parse("2*z").unwrap();
        let v = integrate_path(&e, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)], 1e-12).unwrap();
        assert!((v - c(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn integration_refuses_poles_and_cut_crossings() {
        let e = HoloExpr::parse("1/(1-z)").unwrap();
        let err = integrate_path(&e, &[c(0.0, 0.0), c(2.0, 0.0)], 1e-10).unwrap_err();
        assert!(matches!(err, ExprError::SingularityWithinClearance { .. } | ExprError::Singular(_)));

        let e = HoloExpr::parse("log(z)").unwrap();
        let err = integrate_path(&e, &[c(-1.0, 1.0), c(-1.0, -1.0)], 1e-10).unwrap_err();
        assert!(matches!(err, ExprError::BranchCrossing { name: "log", .. }));
        // same endpoints, path around the right side of the origin
        let ok = integrate_path(&e, &[c(-1.0, 1.0), c(1.0, 1.0), c(1.0, -1.0), c(-1.0, -1.0)], 1e-10);
        assert!(ok.is_ok());
    }
}
