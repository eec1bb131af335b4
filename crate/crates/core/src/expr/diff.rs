//! Symbolic differentiation of expression trees.
//!
//! Only structural zero/one pruning is performed so that derivatives of
//! constant sub-trees collapse to exact zeros before interval evaluation.

use super::{Axis, BinOp, Func, Node};

fn is_zero(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 0.0)
}

fn is_one(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 1.0)
}

fn add(a: Node, b: Node) -> Node {
    match (is_zero(&a), is_zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => Node::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (is_zero(&a), is_zero(&b)) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Node::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    if is_zero(&a) || is_zero(&b) {
        Node::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Node::Binary(BinOp::Mul, Box::new(a), Box::new(b))
    }
}

fn div(a: Node, b: Node) -> Node {
    if is_zero(&a) {
        Node::Const(0.0)
    } else {
        Node::Binary(BinOp::Div, Box::new(a), Box::new(b))
    }
}

fn neg(a: Node) -> Node {
    if is_zero(&a) {
        a
    } else {
        Node::Neg(Box::new(a))
    }
}

fn call(f: Func, a: &Node) -> Node {
    Node::Call(f, Box::new(a.clone()))
}

pub(super) fn differentiate(node: &Node, axis: Axis) -> Node {
    match node {
        Node::Const(_) => Node::Const(0.0),
        Node::X => Node::Const(if axis == Axis::X { 1.0 } else { 0.0 }),
        Node::Y => Node::Const(if axis == Axis::Y { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(differentiate(a, axis)),
        Node::Binary(op, a, b) => {
            let (da, db) = (differentiate(a, axis), differentiate(b, axis));
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                BinOp::Div => {
                    // (a'b - ab') / b^2
                    let num = sub(mul(da, b.clone()), mul(a, db));
                    div(num, Node::Pow(Box::new(b), 2))
                }
            }
        }
        Node::Pow(a, n) => {
            let da = differentiate(a, axis);
            let outer = match n - 1 {
                0 => Node::Const(1.0),
                m => Node::Pow(a.clone(), m),
            };
            if *n == 0 {
                Node::Const(0.0)
            } else {
                mul(mul(Node::Const(*n as f64), outer), da)
            }
        }
        Node::Call(f, a) => {
            let da = differentiate(a, axis);
            if is_zero(&da) {
                return Node::Const(0.0);
            }
            match f {
                Func::Sin => mul(call(Func::Cos, a), da),
                Func::Cos => neg(mul(call(Func::Sin, a), da)),
                Func::Exp => mul(call(Func::Exp, a), da),
                Func::Tanh => {
                    let t2 = Node::Pow(Box::new(call(Func::Tanh, a)), 2);
                    mul(sub(Node::Const(1.0), t2), da)
                }
                Func::Sqrt => div(da, mul(Node::Const(2.0), call(Func::Sqrt, a))),
                Func::Log => div(da, a.as_ref().clone()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{Axis, Expression};

    fn d(src: &str, axis: Axis, x: f64, y: f64) -> f64 {
        Expression::parse(src).unwrap().derivative(axis).value(x, y)
    }

    #[test]
    fn constant_subtrees_vanish() {
        let e = Expression::parse("2*pi*x").unwrap().derivative(Axis::X);
        assert!(!e.uses_x() && !e.uses_y());
        assert_eq!(e.value(0.3, 0.0), 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn quotient_and_chain() {
        // d/dx x/(1+x) = 1/(1+x)^2
        assert!((d("x/(1+x)", Axis::X, 1.0, 0.0) - 0.25).abs() < 1e-15);
        // d/dy exp(x*y) = x exp(xy)
        let v = d("exp(x*y)", Axis::Y, 0.5, 2.0);
        assert!((v - 0.5 * 1f64.exp()).abs() < 1e-14);
        assert!((d("tanh(x)", Axis::X, 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((d("sqrt(x)", Axis::X, 4.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((d("log(2*x)", Axis::X, 0.5, 0.0) - 2.0).abs() < 1e-15);
        assert!((d("x^3", Axis::X, 2.0, 0.0) - 12.0).abs() < 1e-15);
        assert!((d("x^-1", Axis::X, 2.0, 0.0) + 0.25).abs() < 1e-15);
        assert_eq!(d("x^0", Axis::X, 2.0, 0.0), 0.0);
        assert_eq!(d("cos(y)", Axis::X, 2.0, 1.0), 0.0);
    }
}
