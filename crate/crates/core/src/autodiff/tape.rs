use std::fmt;

use thiserror::Error;

use super::{Arith, Bound, ParamStore};
use crate::special;

/// Primitive operation recorded on a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Softplus,
    Tanh,
    Relu,
    PowConst,
    NormalCdf,
    Max,
    Sum,
    LogSumExp,
    Dot,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("{op} at node {node} received an argument outside its domain ({argument})")]
    Domain { node: usize, op: Op, argument: f64 },
    #[error("backward called before a forward pass designated an output")]
    NotEvaluated,
    #[error("backward already ran on this tape; reset it first")]
    AlreadyDifferentiated,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Unary and binary nodes keep their parents and local partials inline.
/// N-ary nodes (`Sum`, `LogSumExp`, `Dot`) store `[offset, len]` into the
/// shared operand list instead.
#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    op: Op,
    args: [u32; 2],
    partials: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Recording,
    Differentiated,
}

/// Define-by-run computation graph. Nodes are appended in evaluation
/// order, so every parent index is smaller than its child's.
#[derive(Debug, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    operands: Vec<u32>,
    grads: Vec<f64>,
    output: Option<Var>,
    state: State,
    error: Option<AdError>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            operands: Vec::new(),
            grads: Vec::new(),
            output: None,
            state: State::Recording,
            error: None,
        }
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let mut t = Self::new();
        t.nodes.reserve(nodes);
        t
    }

    /// Clears all nodes while keeping allocations.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.operands.clear();
        self.grads.clear();
        self.output = None;
        self.state = State::Recording;
        self.error = None;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tracked leaf.
    pub fn var(&mut self, x: f64) -> Var {
        self.leaf(x)
    }

    pub fn op(&self, v: Var) -> Op {
        self.nodes[v.index()].op
    }

    /// First domain error recorded while building the graph, if any.
    pub fn check(&self) -> Result<(), AdError> {
        match &self.error {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    pub fn set_output(&mut self, v: Var) {
        self.output = Some(v);
    }

    pub fn output(&self) -> Option<Var> {
        self.output
    }

    /// Partial derivative of the output with respect to `v`; zero before
    /// [`Tape::backward`].
    pub fn grad(&self, v: Var) -> f64 {
        self.grads.get(v.index()).copied().unwrap_or(0.0)
    }

    /// Reverse sweep from the designated output.
    pub fn backward(&mut self) -> Result<(), AdError> {
        let out = self.output.ok_or(AdError::NotEvaluated)?;
        if self.state == State::Differentiated {
            return Err(AdError::AlreadyDifferentiated);
        }
        self.check()?;
        self.state = State::Differentiated;

        let n = self.nodes.len();
        self.grads.clear();
        self.grads.resize(n, 0.0);
        self.grads[out.index()] = 1.0;

        for i in (0..=out.index()).rev() {
            let g = self.grads[i];
            if g == 0.0 {
                continue;
            }
            let node = self.nodes[i];
            let [a, b] = node.args;
            let (a, b) = (a as usize, b as usize);
            match node.op {
                Op::Leaf => {}
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Max => {
                    self.grads[a] += g * node.partials[0];
                    self.grads[b] += g * node.partials[1];
                }
                Op::Neg
                | Op::Exp
                | Op::Log
                | Op::Softplus
                | Op::Tanh
                | Op::Relu
                | Op::PowConst
                | Op::NormalCdf => {
                    self.grads[a] += g * node.partials[0];
                }
                Op::Sum => {
                    for &k in &self.operands[a..a + b] {
                        self.grads[k as usize] += g;
                    }
                }
                Op::LogSumExp => {
                    for &k in &self.operands[a..a + b] {
                        let k = k as usize;
                        self.grads[k] += g * (self.nodes[k].value - node.value).exp();
                    }
                }
                Op::Dot => {
                    for pair in self.operands[a..a + 2 * b].chunks_exact(2) {
                        let (x, y) = (pair[0] as usize, pair[1] as usize);
                        let (vx, vy) = (self.nodes[x].value, self.nodes[y].value);
                        self.grads[x] += g * vy;
                        self.grads[y] += g * vx;
                    }
                }
            }
        }
        Ok(())
    }

    /// Gradients of the output with respect to every bound parameter,
    /// shaped like the originating [`ParamStore`].
    pub fn param_gradients(&self, bound: &Bound<Var>) -> Vec<Vec<f64>> {
        bound
            .tensors()
            .iter()
            .map(|t| t.iter().map(|&v| self.grad(v)).collect())
            .collect()
    }

    fn leaf(&mut self, x: f64) -> Var {
        self.push(Node {
            value: x,
            op: Op::Leaf,
            args: [0, 0],
            partials: [0.0, 0.0],
        })
    }

    fn push(&mut self, node: Node) -> Var {
        let idx = self.nodes.len();
        assert!(idx < u32::MAX as usize, "tape exceeds u32 node capacity");
        self.nodes.push(node);
        Var(idx as u32)
    }

    fn unary(&mut self, op: Op, a: Var, value: f64, da: f64) -> Var {
        self.push(Node {
            value,
            op,
            args: [a.0, 0],
            partials: [da, 0.0],
        })
    }

    fn binary(&mut self, op: Op, a: Var, b: Var, value: f64, da: f64, db: f64) -> Var {
        self.push(Node {
            value,
            op,
            args: [a.0, b.0],
            partials: [da, db],
        })
    }

    fn nary(&mut self, op: Op, offset: usize, len: usize, value: f64) -> Var {
        self.push(Node {
            value,
            op,
            args: [offset as u32, len as u32],
            partials: [0.0, 0.0],
        })
    }

    fn domain_error(&mut self, op: Op, argument: f64) {
        if self.error.is_none() {
            self.error = Some(AdError::Domain {
                node: self.nodes.len(),
                op,
                argument,
            });
        }
    }

    #[inline]
    fn val(&self, v: Var) -> f64 {
        self.nodes[v.index()].value
    }
}

impl Arith for Tape {
    type V = Var;

    fn constant(&mut self, x: f64) -> Var {
        self.leaf(x)
    }

    fn param(&mut self, x: f64) -> Var {
        self.leaf(x)
    }

    fn value(&self, v: Var) -> f64 {
        self.val(v)
    }

    fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.val(a) + self.val(b);
        self.binary(Op::Add, a, b, v, 1.0, 1.0)
    }

    fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.val(a) - self.val(b);
        self.binary(Op::Sub, a, b, v, 1.0, -1.0)
    }

    fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.val(a), self.val(b));
        self.binary(Op::Mul, a, b, x * y, y, x)
    }

    fn div(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.val(a), self.val(b));
        if y == 0.0 {
            self.domain_error(Op::Div, y);
        }
        let v = x / y;
        self.binary(Op::Div, a, b, v, 1.0 / y, -v / y)
    }

    fn neg(&mut self, a: Var) -> Var {
        let v = -self.val(a);
        self.unary(Op::Neg, a, v, -1.0)
    }

    fn exp(&mut self, a: Var) -> Var {
        let v = self.val(a).exp();
        self.unary(Op::Exp, a, v, v)
    }

    fn log(&mut self, a: Var) -> Var {
        let x = self.val(a);
        if !(x > 0.0) {
            self.domain_error(Op::Log, x);
        }
        self.unary(Op::Log, a, x.ln(), 1.0 / x)
    }

    fn softplus(&mut self, a: Var) -> Var {
        let x = self.val(a);
        self.unary(Op::Softplus, a, special::softplus(x), special::sigmoid(x))
    }

    fn tanh(&mut self, a: Var) -> Var {
        let v = self.val(a).tanh();
        self.unary(Op::Tanh, a, v, 1.0 - v * v)
    }

    fn relu(&mut self, a: Var) -> Var {
        let x = self.val(a);
        if x > 0.0 {
            self.unary(Op::Relu, a, x, 1.0)
        } else {
            self.unary(Op::Relu, a, 0.0, 0.0)
        }
    }

    fn powc(&mut self, a: Var, p: f64) -> Var {
        let x = self.val(a);
        if x < 0.0 && p.fract() != 0.0 || x == 0.0 && p < 1.0 {
            self.domain_error(Op::PowConst, x);
        }
        self.unary(Op::PowConst, a, x.powf(p), p * x.powf(p - 1.0))
    }

    fn normal_cdf(&mut self, a: Var) -> Var {
        let z = self.val(a);
        self.unary(
            Op::NormalCdf,
            a,
            special::normal_cdf(z),
            special::normal_pdf(z),
        )
    }

    fn max(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.val(a), self.val(b));
        if x >= y {
            self.binary(Op::Max, a, b, x, 1.0, 0.0)
        } else {
            self.binary(Op::Max, a, b, y, 0.0, 1.0)
        }
    }

    fn sum(&mut self, xs: &[Var]) -> Var {
        let offset = self.operands.len();
        let mut acc = 0.0;
        for &x in xs {
            acc += self.val(x);
            self.operands.push(x.0);
        }
        self.nary(Op::Sum, offset, xs.len(), acc)
    }

    fn logsumexp(&mut self, xs: &[Var]) -> Var {
        let vals: Vec<f64> = xs.iter().map(|&x| self.val(x)).collect();
        let v = special::logsumexp(&vals);
        let offset = self.operands.len();
        self.operands.extend(xs.iter().map(|x| x.0));
        self.nary(Op::LogSumExp, offset, xs.len(), v)
    }

    fn dot(&mut self, a: &[Var], b: &[Var]) -> Var {
        assert_eq!(a.len(), b.len(), "dot operands differ in length");
        let offset = self.operands.len();
        let mut acc = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            acc += self.val(x) * self.val(y);
            self.operands.push(x.0);
            self.operands.push(y.0);
        }
        self.nary(Op::Dot, offset, a.len(), acc)
    }
}

/// Records `build` on a fresh tape and returns the scalar output value.
///
/// `inputs` become untracked constants; `params` become tracked leaves whose
/// handles are returned for gradient lookup after [`Tape::backward`].
pub fn forward_eval<F>(
    tape: &mut Tape,
    inputs: &[f64],
    params: &ParamStore,
    build: F,
) -> Result<(f64, Bound<Var>), AdError>
where
    F: FnOnce(&mut Tape, &[Var], &Bound<Var>) -> Var,
{
    tape.reset();
    let bound = tape.bind(params);
    let xs: Vec<Var> = inputs.iter().map(|&x| tape.constant(x)).collect();
    let out = build(tape, &xs, &bound);
    tape.set_output(out);
    tape.check()?;
    Ok((tape.value(out), bound))
}
