//! Closed-form expressions for metric coefficients.
//!
//! Expressions are parsed once into an immutable tree and evaluated on any
//! [`Jet`] type: plain scalars, first-order duals, or second-order duals that
//! carry the exact Hessian.

mod jet;
mod parse;

use std::fmt;

pub use jet::{DualValue1, DualValue2, Jet};

use crate::linalg::Matrix;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }

    /// Value, first and second derivative at `x`.
    fn derivatives<T: Scalar>(self, x: T) -> Result<(T, T, T)> {
        let one = T::one();
        let two = T::of(2.0);
        Ok(match self {
            Func::Sin => (x.sin(), x.cos(), -x.sin()),
            Func::Cos => (x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                let t = x.tan();
                let sec2 = one + t * t;
                (t, sec2, two * t * sec2)
            }
            Func::Sinh => (x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => (x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let s = one - t * t;
                (t, s, -two * t * s)
            }
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Func::Log => {
                if !(x > T::zero()) {
                    return Err(Error::DomainFault(format!("log of nonpositive value {x}")));
                }
                (x.ln(), one / x, -one / (x * x))
            }
            Func::Sqrt => {
                if x < T::zero() {
                    return Err(Error::DomainFault(format!("sqrt of negative value {x}")));
                }
                let s = x.sqrt();
                (s, one / (two * s), -one / (T::of(4.0) * s * x))
            }
            Func::Abs => (x.abs(), if x == T::zero() { T::zero() } else { x.signum() }, T::zero()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn from_name(s: &str) -> Option<Constant> {
        match s {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Expression tree node. Literals are stored as `f64` and converted at
/// evaluation time.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_vars(&self) -> bool {
        match self {
            Node::Num(_) | Node::Const(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Bin(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Num(_) | Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.depth(),
            Node::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) | Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Bin(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    fn eval<T: Scalar, J: Jet<T>>(&self, point: &[T]) -> Result<J> {
        let n = point.len();
        match self {
            Node::Num(x) => Ok(J::constant(T::of(*x), n)),
            Node::Const(c) => Ok(J::constant(T::of(c.value()), n)),
            Node::Var(i) => Ok(J::variable(*i, point[*i], n)),
            Node::Neg(a) => Ok(a.eval::<T, J>(point)?.neg()),
            Node::Call(f, a) => {
                let u: J = a.eval(point)?;
                let (f0, f1, f2) = f.derivatives(u.value())?;
                Ok(u.chain(f0, f1, f2))
            }
            Node::Bin(op, a, b) => {
                if *op == BinOp::Pow {
                    return self.eval_pow(a, b, point);
                }
                let x: J = a.eval(point)?;
                let y: J = b.eval(point)?;
                match op {
                    BinOp::Add => Ok(x.add(&y)),
                    BinOp::Sub => Ok(x.sub(&y)),
                    BinOp::Mul => Ok(x.mul(&y)),
                    BinOp::Div => {
                        let d = y.value();
                        if d == T::zero() {
                            return Err(Error::DomainFault("division by zero".into()));
                        }
                        let one = T::one();
                        let inv = y.chain(one / d, -one / (d * d), T::of(2.0) / (d * d * d));
                        Ok(x.mul(&inv))
                    }
                    BinOp::Pow => unreachable!(),
                }
            }
        }
    }

    fn eval_pow<T: Scalar, J: Jet<T>>(&self, a: &Node, b: &Node, point: &[T]) -> Result<J> {
        let base: J = a.eval(point)?;
        if !b.has_vars() {
            let k = b.eval::<f64, f64>(&vec![0.0; point.len()])?;
            if k.fract() == 0.0 && k.abs() <= 1e6 {
                let k = k as i32;
                let x = base.value();
                if k < 0 && x == T::zero() {
                    return Err(Error::DomainFault("division by zero in negative power".into()));
                }
                let kf = T::of(k as f64);
                let f0 = x.powi(k);
                let f1 = if k == 0 { T::zero() } else { kf * x.powi(k - 1) };
                let f2 = if k == 0 || k == 1 {
                    T::zero()
                } else {
                    kf * (kf - T::one()) * x.powi(k - 2)
                };
                return Ok(base.chain(f0, f1, f2));
            }
        }
        // general exponent: a^b = exp(b log a), which rejects a <= 0
        let x = base.value();
        let (l0, l1, l2) = Func::Log.derivatives(x).map_err(|_| {
            Error::DomainFault(format!("non-integer power of nonpositive base {x}"))
        })?;
        let log_a = base.chain(l0, l1, l2);
        let exponent: J = b.eval(point)?;
        let prod = exponent.mul(&log_a);
        let e = prod.value().exp();
        Ok(prod.chain(e, e, e))
    }
}

/// A parsed expression together with the coordinate names it refers to.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    coords: Vec<String>,
}

impl Expr {
    /// Parses `source` with variables drawn from `coords`.
    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Expr> {
        let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_string()).collect();
        let root = parse::parse_node(source, &coords)?;
        Ok(Expr { root, coords })
    }

    /// Builds an expression directly from a tree.
    pub fn from_node(root: Node, coords: Vec<String>) -> Result<Expr> {
        if let Some(m) = root.max_var() {
            if m >= coords.len() {
                return Err(Error::BadParam(format!(
                    "variable index {m} out of range for {} coordinates",
                    coords.len()
                )));
            }
        }
        Ok(Expr { root, coords })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn is_constant(&self) -> bool {
        !self.root.has_vars()
    }

    fn check_point<T>(&self, point: &[T]) -> Result<()> {
        if point.len() != self.coords.len() {
            return Err(Error::BadParam(format!(
                "point has {} components, expression has {} coordinates",
                point.len(),
                self.coords.len()
            )));
        }
        Ok(())
    }

    /// Evaluates on an arbitrary jet type.
    pub fn eval_jet<T: Scalar, J: Jet<T>>(&self, point: &[T]) -> Result<J> {
        self.check_point(point)?;
        self.root.eval(point)
    }

    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T> {
        self.eval_jet::<T, T>(point)
    }

    pub fn eval1<T: Scalar>(&self, point: &[T]) -> Result<DualValue1<T>> {
        self.eval_jet(point)
    }

    /// Value, gradient and Hessian by second-order forward differentiation.
    pub fn eval2<T: Scalar>(&self, point: &[T]) -> Result<DualValue2<T>> {
        self.eval_jet(point)
    }

    /// Third derivatives along coordinate `dir`: central difference of the
    /// exact Hessian with step `cbrt(eps) * max(1, |x_dir|)`.
    pub fn eval_third_fd<T: Scalar>(&self, point: &[T], dir: usize) -> Result<Matrix<T>> {
        self.check_point(point)?;
        if dir >= point.len() {
            return Err(Error::BadParam(format!("direction {dir} out of range")));
        }
        let h = T::epsilon().cbrt() * point[dir].abs().max(T::one());
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[dir] += h;
        minus[dir] -= h;
        let hp = self.eval2(&plus)?.hessian();
        let hm = self.eval2(&minus)?.hessian();
        // use the realized step to cancel representation error in x ± h
        let width = plus[dir] - minus[dir];
        Ok(hp.sub(&hm).scale(T::one() / width))
    }
}

impl fmt::Display for Expr {
    /// Canonical, fully parenthesized form that re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.coords)
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_finite() && x >= 0.0 {
        write!(f, "{x:?}")
    } else if x.is_finite() {
        write!(f, "(-{:?})", -x)
    } else {
        // not reachable from parsed input
        write!(f, "({x})")
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, coords: &[String]) -> fmt::Result {
    match node {
        Node::Num(x) => write_num(f, *x),
        Node::Const(c) => {
            let name = match c {
                Constant::Pi => "pi",
                Constant::E => "e",
            };
            if coords.iter().any(|s| s == name) {
                write_num(f, c.value())
            } else {
                f.write_str(name)
            }
        }
        Node::Var(i) => f.write_str(&coords[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, coords)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, coords)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            f.write_str("(")?;
            write_node(f, a, coords)?;
            write!(f, " {sym} ")?;
            write_node(f, b, coords)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<&'static str> {
        vec!["x1", "x2"]
    }

    #[test]
    fn grammar_smoke() {
        let e = Expr::parse("x1^2 + sin(x2)", &xy()).unwrap();
        assert_eq!(e.depth(), 3);
        assert_eq!(e.to_string(), "((x1 ^ 2.0) + sin(x2))");
    }

    #[test]
    fn truncated_input_reports_column() {
        match Expr::parse("x1 +", &xy()).unwrap_err() {
            Error::Parse {
                line,
                column,
                expected,
                ..
            } => {
                assert_eq!((line, column), (1, 5));
                assert!(expected.contains(&"number".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = Expr::parse("x1 + y", &xy()).unwrap_err();
        assert_eq!(err.kind(), "UnknownIdentifier");
        let err = Expr::parse("foo(x1)", &xy()).unwrap_err();
        assert_eq!(err.kind(), "UnknownIdentifier");
    }

    #[test]
    fn multiline_error_position() {
        match Expr::parse("x1 +\n  * x2", &xy()).unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_fold() {
        let e = Expr::parse("2*pi", &xy()).unwrap();
        assert!(e.is_constant());
        assert_eq!(e.eval(&[0.3, -7.0]).unwrap(), 6.283185307179586);
    }

    #[test]
    fn precedence() {
        let e = Expr::parse("-x1^2", &xy()).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = Expr::parse("2^3^2", &xy()).unwrap();
        assert_eq!(e.eval::<f64>(&[0.0, 0.0]).unwrap(), 512.0);
        let e = Expr::parse("1 - 2 - 3 * 4 / 2", &xy()).unwrap();
        assert_eq!(e.eval::<f64>(&[0.0, 0.0]).unwrap(), -7.0);
        let e = Expr::parse("x1^-2", &xy()).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn polynomial_chain_rule() {
        let e = Expr::parse("x1^2", &["x1"]).unwrap();
        let d = e.eval2(&[3.0]).unwrap();
        assert_eq!((d.value, d.grad[0], d.hess(0, 0)), (9.0, 6.0, 2.0));
    }

    #[test]
    fn sine_at_origin() {
        let e = Expr::parse("sin(x1)", &["x1"]).unwrap();
        let d = e.eval2(&[0.0]).unwrap();
        assert_eq!((d.value, d.grad[0], d.hess(0, 0)), (0.0, 1.0, 0.0));
    }

    #[test]
    fn bilinear() {
        let e = Expr::parse("x1*x2", &xy()).unwrap();
        let d = e.eval2(&[2.0, 5.0]).unwrap();
        assert_eq!(d.value, 10.0);
        assert_eq!(d.grad, vec![5.0, 2.0]);
        assert_eq!((d.hess(0, 1), d.hess(1, 0), d.hess(0, 0)), (1.0, 1.0, 0.0));
    }

    #[test]
    fn domain_faults() {
        let e = Expr::parse("log(x1)", &["x1"]).unwrap();
        assert_eq!(e.eval(&[-1.0]).unwrap_err().kind(), "DomainFault");
        let e = Expr::parse("sqrt(x1)", &["x1"]).unwrap();
        assert_eq!(e.eval(&[-1.0]).unwrap_err().kind(), "DomainFault");
        let e = Expr::parse("1/x1", &["x1"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap_err().kind(), "DomainFault");
        let e = Expr::parse("x1^0.5", &["x1"]).unwrap();
        assert_eq!(e.eval(&[-4.0]).unwrap_err().kind(), "DomainFault");
        assert!((e.eval(&[4.0f64]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn variable_exponent() {
        // x^y: d/dx = y x^(y-1), d/dy = x^y ln x
        let e = Expr::parse("x1^x2", &xy()).unwrap();
        let d = e.eval2(&[2.0f64, 3.0]).unwrap();
        assert!((d.value - 8.0).abs() < 1e-14);
        assert!((d.grad[0] - 12.0).abs() < 1e-13);
        assert!((d.grad[1] - 8.0 * 2f64.ln()).abs() < 1e-13);
        // d2/dxdy = x^(y-1) (1 + y ln x)
        assert!((d.hess(0, 1) - 4.0 * (1.0 + 3.0 * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn third_derivative_fd() {
        let e = Expr::parse("x1^3", &["x1"]).unwrap();
        assert!((e.eval_third_fd(&[1.0f64], 0).unwrap()[(0, 0)] - 6.0).abs() < 1e-6);
        let e = Expr::parse("x1^2", &["x1"]).unwrap();
        for x in [-3.0f64, 0.0, 0.7, 12.0] {
            assert!(e.eval_third_fd(&[x], 0).unwrap()[(0, 0)].abs() < 1e-7);
        }
        let e = Expr::parse("sin(x1)", &["x1"]).unwrap();
        let analytic = -(0.0f64).cos();
        assert!((e.eval_third_fd(&[0.0], 0).unwrap()[(0, 0)] - analytic).abs() < 1e-6);
    }

    #[test]
    fn display_round_trip_with_shadowed_constant() {
        let e = Expr::parse("e * pi + e", &["e"]).unwrap();
        let again = Expr::parse(&e.to_string(), &["e"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), again.eval(&[2.0]).unwrap());
    }

    #[test]
    fn single_precision_evaluation() {
        let e = Expr::parse("x1^2 + sin(x2)", &xy()).unwrap();
        let d = e.eval2(&[1.5f32, 0.0]).unwrap();
        assert!((d.value - 2.25).abs() < 1e-6);
        assert!((d.grad[0] - 3.0).abs() < 1e-6);
    }
}
