//! Closed-form expressions in `x` and `y`: parsing, forward-mode
//! differentiation and interval range enclosures.

mod diff;
mod interval;
mod parser;

use std::fmt;

use thiserror::Error;

pub use interval::{Interval, INFLATION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier '{name}' at byte {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("exponent at byte {position} must be an integer literal")]
    NonIntegerExponent { position: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Coordinate axis of `[0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    X,
    Y,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// Value together with its partial derivatives in `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual {
    fn constant(v: f64) -> Dual {
        Dual { value: v, dx: 0.0, dy: 0.0 }
    }

    /// Chain rule for a unary function with value `v` and derivative `dv`.
    fn chain(self, v: f64, dv: f64) -> Dual {
        Dual {
            value: v,
            dx: dv * self.dx,
            dy: dv * self.dy,
        }
    }
}

impl Node {
    fn mentions(&self, axis: Axis) -> bool {
        match self {
            Node::Const(_) => false,
            Node::X => axis == Axis::X,
            Node::Y => axis == Axis::Y,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.mentions(axis),
            Node::Binary(_, a, b) => a.mentions(axis) || b.mentions(axis),
        }
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::X => x,
            Node::Y => y,
            Node::Neg(a) => -a.value(x, y),
            Node::Binary(op, a, b) => {
                let (a, b) = (a.value(x, y), b.value(x, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Node::Pow(a, n) => a.value(x, y).powi(*n),
            Node::Call(f, a) => {
                let a = a.value(x, y);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Sqrt => a.sqrt(),
                    Func::Log => a.ln(),
                }
            }
        }
    }

    fn dual(&self, x: f64, y: f64) -> Result<Dual, ExprError> {
        Ok(match self {
            Node::Const(c) => Dual::constant(*c),
            Node::X => Dual { value: x, dx: 1.0, dy: 0.0 },
            Node::Y => Dual { value: y, dx: 0.0, dy: 1.0 },
            Node::Neg(a) => {
                let a = a.dual(x, y)?;
                Dual { value: -a.value, dx: -a.dx, dy: -a.dy }
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (a.dual(x, y)?, b.dual(x, y)?);
                match op {
                    BinOp::Add => Dual {
                        value: a.value + b.value,
                        dx: a.dx + b.dx,
                        dy: a.dy + b.dy,
                    },
                    BinOp::Sub => Dual {
                        value: a.value - b.value,
                        dx: a.dx - b.dx,
                        dy: a.dy - b.dy,
                    },
                    BinOp::Mul => Dual {
                        value: a.value * b.value,
                        dx: a.dx * b.value + a.value * b.dx,
                        dy: a.dy * b.value + a.value * b.dy,
                    },
                    BinOp::Div => {
                        if b.value == 0.0 {
                            return Err(ExprError::Domain("division by zero"));
                        }
                        let q = a.value / b.value;
                        Dual {
                            value: q,
                            dx: (a.dx - q * b.dx) / b.value,
                            dy: (a.dy - q * b.dy) / b.value,
                        }
                    }
                }
            }
            Node::Pow(a, n) => {
                let a = a.dual(x, y)?;
                if *n < 0 && a.value == 0.0 {
                    return Err(ExprError::Domain("negative power of zero"));
                }
                match *n {
                    0 => Dual::constant(1.0),
                    n => a.chain(a.value.powi(n), n as f64 * a.value.powi(n - 1)),
                }
            }
            Node::Call(f, a) => {
                let a = a.dual(x, y)?;
                let v = a.value;
                match f {
                    Func::Sin => a.chain(v.sin(), v.cos()),
                    Func::Cos => a.chain(v.cos(), -v.sin()),
                    Func::Exp => {
                        let e = v.exp();
                        a.chain(e, e)
                    }
                    Func::Tanh => {
                        let t = v.tanh();
                        a.chain(t, 1.0 - t * t)
                    }
                    Func::Sqrt => {
                        if v <= 0.0 {
                            return Err(ExprError::Domain("sqrt of a non-positive value"));
                        }
                        let s = v.sqrt();
                        a.chain(s, 0.5 / s)
                    }
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(ExprError::Domain("log of a non-positive value"));
                        }
                        a.chain(v.ln(), 1.0 / v)
                    }
                }
            }
        })
    }

    fn range(&self, bx: Interval, by: Interval) -> Result<Interval, ExprError> {
        Ok(match self {
            Node::Const(c) => Interval::point(*c),
            Node::X => bx,
            Node::Y => by,
            Node::Neg(a) => -a.range(bx, by)?,
            Node::Binary(op, a, b) => {
                let (a, b) = (a.range(bx, by)?, b.range(bx, by)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.checked_div(b)?,
                }
            }
            Node::Pow(a, n) => a.range(bx, by)?.powi(*n)?,
            Node::Call(f, a) => {
                let a = a.range(bx, by)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Sqrt => a.sqrt()?,
                    Func::Log => a.ln()?,
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` keeps a decimal point and round-trips exactly.
            Node::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::X => write!(f, "x"),
            Node::Y => write!(f, "y"),
            Node::Neg(a) => {
                write!(f, "-")?;
                a.write_child(f, 4)
            }
            Node::Binary(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                a.write_child(f, p)?;
                write!(f, " {sym} ")?;
                // right operand binds tighter so a - (b - c) keeps its parentheses
                b.write_child(f, p + 1)
            }
            Node::Pow(a, n) => {
                a.write_child(f, 5)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed closed-form function of `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
    uses_x: bool,
    uses_y: bool,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ExprError> {
        let root = parser::parse_node(source)?;
        Ok(Expression::from_node(source.trim().to_string(), root))
    }

    pub(crate) fn from_node(source: String, root: Node) -> Expression {
        Expression {
            uses_x: root.mentions(Axis::X),
            uses_y: root.mentions(Axis::Y),
            source,
            root,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.root
    }

    pub fn uses_y(&self) -> bool {
        self.uses_y
    }

    pub fn uses_x(&self) -> bool {
        self.uses_x
    }

    /// Unchecked point evaluation. Singular inputs yield NaN or infinities;
    /// only call this on points a validated system guarantees to be regular.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.root.value(x, y)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        Ok(self.eval_with_partials(x, y)?.value)
    }

    /// Value and exact forward-mode partial derivatives at `(x, y)`.
    pub fn eval_with_partials(&self, x: f64, y: f64) -> Result<Dual, ExprError> {
        let d = self.root.dual(x, y)?;
        if d.value.is_finite() && d.dx.is_finite() && d.dy.is_finite() {
            Ok(d)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Interval enclosure of the expression over the box `bx × by`, without
    /// subdivision.
    pub fn range(&self, bx: Interval, by: Interval) -> Result<Interval, ExprError> {
        self.root.range(bx, by)
    }

    /// Symbolic partial derivative with respect to `axis`.
    pub fn derivative(&self, axis: Axis) -> Expression {
        let node = diff::differentiate(&self.root, axis);
        Expression::from_node(node.to_string(), node)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

pub fn parse(source: &str) -> Result<Expression, ExprError> {
    Expression::parse(source)
}

pub fn eval_with_partials(e: &Expression, x: f64, y: f64) -> Result<Dual, ExprError> {
    e.eval_with_partials(x, y)
}

/// Encloses `{e(x, y) : (x, y) ∈ bx × by}` by bisecting each used axis
/// `depth` times and taking the hull of the sub-box enclosures.
pub fn range_bound(
    e: &Expression,
    bx: Interval,
    by: Interval,
    depth: u32,
) -> Result<Interval, ExprError> {
    let xs = if e.uses_x && depth > 0 { bx.split(depth) } else { vec![bx] };
    let ys = if e.uses_y && depth > 0 { by.split(depth) } else { vec![by] };
    let mut acc: Option<Interval> = None;
    for &sx in &xs {
        for &sy in &ys {
            let r = e.range(sx, sy)?;
            acc = Some(match acc {
                Some(a) => a.hull(&r),
                None => r,
            });
        }
    }
    Ok(acc.expect("at least one sub-box"))
}

/// Like [`range_bound`], but on every sub-box where the partial derivatives
/// of the used axes have constant sign the enclosure is tightened to the
/// values at the extreme corners.
pub fn monotone_range_bound(
    e: &Expression,
    bx: Interval,
    by: Interval,
    depth: u32,
) -> Result<Interval, ExprError> {
    let dx = e.uses_x.then(|| e.derivative(Axis::X));
    let dy = e.uses_y.then(|| e.derivative(Axis::Y));
    // +1 increasing, -1 decreasing, 0 unknown; unused axes count as increasing
    let direction = |d: &Option<Expression>, sx: Interval, sy: Interval| -> Result<i8, ExprError> {
        Ok(match d {
            None => 1,
            Some(d) => {
                let r = d.range(sx, sy)?;
                if r.lo >= 0.0 {
                    1
                } else if r.hi <= 0.0 {
                    -1
                } else {
                    0
                }
            }
        })
    };
    let xs = if e.uses_x && depth > 0 { bx.split(depth) } else { vec![bx] };
    let ys = if e.uses_y && depth > 0 { by.split(depth) } else { vec![by] };
    let mut acc: Option<Interval> = None;
    for &sx in &xs {
        for &sy in &ys {
            let mut r = e.range(sx, sy)?;
            let (mx, my) = (direction(&dx, sx, sy)?, direction(&dy, sx, sy)?);
            if mx != 0 && my != 0 {
                let corner = |up: bool| {
                    let x = if (mx > 0) == up { sx.hi } else { sx.lo };
                    let y = if (my > 0) == up { sy.hi } else { sy.lo };
                    e.range(Interval::point(x), Interval::point(y))
                };
                let tight = corner(false)?.hull(&corner(true)?);
                r = tight.intersect(&r).unwrap_or(r);
            }
            acc = Some(match acc {
                Some(a) => a.hull(&r),
                None => r,
            });
        }
    }
    Ok(acc.expect("at least one sub-box"))
}

/// Range enclosure of the partial derivative of `e` with respect to `axis`.
pub fn partial_range(
    e: &Expression,
    axis: Axis,
    bx: Interval,
    by: Interval,
    depth: u32,
) -> Result<Interval, ExprError> {
    range_bound(&e.derivative(axis), bx, by, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn parses_scaled_variable() {
        let e = p("0.5*x");
        assert_eq!(
            *e.ast(),
            Node::Binary(BinOp::Mul, Box::new(Node::Const(0.5)), Box::new(Node::X))
        );
        assert!(!e.uses_y());
    }

    #[test]
    fn detects_y_usage() {
        assert!(p("0.125*y + 0.05*sin(pi*x)").uses_y());
        assert!(!p("0.05*sin(pi*x)").uses_y());
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(matches!(
            Expression::parse("x ^ 1.5"),
            Err(ExprError::NonIntegerExponent { position: 4 })
        ));
    }

    #[test]
    fn reports_syntax_position() {
        match Expression::parse("x + * y") {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expression::parse("(x"), Err(ExprError::Syntax { position: 2, .. })));
        assert!(matches!(Expression::parse("x y"), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("   "), Err(ExprError::Empty)));
    }

    #[test]
    fn unknown_identifier() {
        match Expression::parse("2*z") {
            Err(ExprError::UnknownIdentifier { name, position }) => {
                assert_eq!(name, "z");
                assert_eq!(position, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negation_binds_looser_than_power() {
        let e = p("-x^2");
        assert_eq!(e.value(3.0, 0.0), -9.0);
        assert_eq!(p("2^-1").value(0.0, 0.0), 0.5);
        assert_eq!(p("1 - 2 - 3").value(0.0, 0.0), -4.0);
        assert_eq!(p("8 / 4 / 2").value(0.0, 0.0), 1.0);
    }

    #[test]
    fn product_rule() {
        let d = p("x*y").eval_with_partials(2.0, 3.0).unwrap();
        assert_eq!((d.value, d.dx, d.dy), (6.0, 3.0, 2.0));
    }

    #[test]
    fn linear_partials() {
        let d = p("0.5*x").eval_with_partials(0.4, 0.9).unwrap();
        assert_eq!((d.value, d.dx, d.dy), (0.2, 0.5, 0.0));
    }

    #[test]
    fn sine_at_quarter_turn() {
        let e = p("sin(pi*x)");
        let d = e.eval_with_partials(0.5, 0.0).unwrap();
        assert!((d.value - 1.0).abs() < 1e-15);
        assert!(d.dx.abs() <= 1e-12);
        assert_eq!(d.dy, 0.0);
        // independent route: symbolic derivative evaluated pointwise
        let sym = e.derivative(Axis::X).value(0.5, 0.0);
        assert!((sym - d.dx).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(p("log(x)").eval(0.0, 0.0), Err(ExprError::Domain(_))));
        assert!(matches!(p("sqrt(x - 1)").eval(0.5, 0.0), Err(ExprError::Domain(_))));
        assert!(matches!(p("1/x").eval(0.0, 0.0), Err(ExprError::Domain(_))));
        assert!(matches!(p("x^-2").eval(0.0, 0.0), Err(ExprError::Domain(_))));
        assert!(matches!(p("exp(exp(10*x))").eval(1.0, 0.0), Err(ExprError::NonFinite)));
    }

    #[test]
    fn monotone_linear_range() {
        let r = range_bound(&p("2*x+1"), Interval::UNIT, Interval::UNIT, 0).unwrap();
        assert!((r.lo - 1.0).abs() < 1e-9 && (r.hi - 3.0).abs() < 1e-9);
        assert!(r.lo <= 1.0 && r.hi >= 3.0);
    }

    #[test]
    fn dependency_overestimate() {
        let r = range_bound(&p("x - x"), Interval::UNIT, Interval::UNIT, 0).unwrap();
        assert!(r.contains(0.0));
        assert!(r.width() <= 2.0 + 1e-9);
    }

    #[test]
    fn logistic_range_refined() {
        let e = p("x*(1-x)");
        let r = range_bound(&e, Interval::UNIT, Interval::UNIT, 6).unwrap();
        assert!(r.lo >= -0.02 && r.hi <= 0.27, "{r}");
        assert!(r.lo <= 0.0 && r.hi >= 0.25);
        // dense sampling oracle
        for k in 0..=10_000 {
            let x = k as f64 / 10_000.0;
            assert!(r.contains(e.value(x, 0.0)));
        }
    }

    #[test]
    fn constant_partials() {
        let e = p("0.5*x + 0.1*y");
        let r = partial_range(&e, Axis::X, Interval::UNIT, Interval::UNIT, 0).unwrap();
        assert!((r.lo - 0.5).abs() < 1e-9 && (r.hi - 0.5).abs() < 1e-9);
        let r = partial_range(&p("0.125*y"), Axis::Y, Interval::UNIT, Interval::UNIT, 0).unwrap();
        assert!((r.lo - 0.125).abs() < 1e-9 && (r.hi - 0.125).abs() < 1e-9);
    }

    #[test]
    fn sinusoidal_partial_range() {
        let e = p("0.5*x + 0.02*sin(2*pi*x)");
        let r = partial_range(&e, Axis::X, Interval::UNIT, Interval::UNIT, 8).unwrap();
        let (lo, hi) = (0.5 - 0.04 * PI, 0.5 + 0.04 * PI);
        assert!(r.lo <= lo && r.hi >= hi, "{r}");
        assert!(lo - r.lo <= 1e-3 && r.hi - hi <= 1e-3, "{r}");
    }

    #[test]
    fn range_rejects_singular_boxes() {
        assert!(range_bound(&p("log(x)"), Interval::UNIT, Interval::UNIT, 3).is_err());
        assert!(range_bound(&p("1/(x - 0.5)"), Interval::UNIT, Interval::UNIT, 2).is_err());
        assert!(range_bound(&p("log(1 + x)"), Interval::UNIT, Interval::UNIT, 3).is_ok());
    }

    #[test]
    fn display_reparses_to_same_function() {
        for src in ["-x^2 + 3*(y - (x - 1))/2", "0.1 - (-0.3)*x", "exp(-x)*cos(2*pi*y)", "(x*y)^3"] {
            let e = p(src);
            let again = p(&e.ast().to_string());
            assert_eq!(e.ast(), again.ast(), "{src} -> {}", e.ast());
        }
    }

    #[test]
    fn monotone_refinement_removes_boundary_overshoot() {
        let e = p("0.5*x - 0.02*sin(2*pi*x)");
        let natural = range_bound(&e, Interval::UNIT, Interval::UNIT, 8).unwrap();
        assert!(natural.lo < -1e-4);
        let tight = monotone_range_bound(&e, Interval::UNIT, Interval::UNIT, 8).unwrap();
        assert!(tight.lo >= -1e-11 && tight.hi <= 0.5 + 1e-11, "{tight}");
        assert!(natural.encloses(&tight, 0.0));
        let g = p("0.75 + 0.125*y + 0.03*x*(1-x)");
        let r = monotone_range_bound(&g, Interval::UNIT, Interval::UNIT, 6).unwrap();
        assert!(r.lo >= 0.75 - 1e-11 && r.hi <= 0.875 + 0.0075 + 1e-3, "{r}");
    }
}
