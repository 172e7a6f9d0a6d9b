//! Model checking by direct recursion over the formula.
//!
//! Formulas are compiled once into a slot-indexed tree so that repeated
//! evaluation (density enumeration, sampling) does no name lookups.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::formula::{Formula, Node, Quantifier, Term};
use crate::structure::Structure;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Const(usize),
}

#[derive(Debug)]
enum Op {
    True,
    False,
    Rel(usize, SmallVec<[Slot; 4]>),
    Eq(Slot, Slot),
    Not(Box<Op>),
    And(Box<Op>, Box<Op>),
    Or(Box<Op>, Box<Op>),
    Quant {
        exists: bool,
        slot: usize,
        within: Option<(usize, Vec<Slot>)>,
        body: Box<Op>,
    },
}

/// A formula ready for evaluation. Free variable `i` occupies slot `i`.
#[derive(Debug)]
pub struct Compiled {
    op: Op,
    arity: usize,
    slots: usize,
}

struct Compiler {
    scope: Vec<(String, usize)>,
    next: usize,
}

impl Compiler {
    fn slot(&self, t: &Term) -> Slot {
        match t {
            Term::Const(c) => Slot::Const(*c),
            Term::Var(v) => {
                let (_, s) = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(name, _)| name == v)
                    .expect("every variable is bound or free");
                Slot::Var(*s)
            }
        }
    }

    fn compile(&mut self, node: &Node) -> Op {
        match node {
            Node::True => Op::True,
            Node::False => Op::False,
            Node::Rel { rel, args } => Op::Rel(*rel, args.iter().map(|t| self.slot(t)).collect()),
            Node::Eq(a, b) => Op::Eq(self.slot(a), self.slot(b)),
            Node::Not(f) => Op::Not(Box::new(self.compile(f))),
            Node::And(a, b) => Op::And(Box::new(self.compile(a)), Box::new(self.compile(b))),
            Node::Or(a, b) => Op::Or(Box::new(self.compile(a)), Box::new(self.compile(b))),
            Node::Quant {
                quantifier,
                var,
                within,
                body,
            } => {
                let within = within
                    .as_ref()
                    .map(|r| (r.radius, r.anchors.iter().map(|t| self.slot(t)).collect()));
                let slot = self.next;
                self.next += 1;
                self.scope.push((var.clone(), slot));
                let body = Box::new(self.compile(body));
                self.scope.pop();
                Op::Quant {
                    exists: *quantifier == Quantifier::Exists,
                    slot,
                    within,
                    body,
                }
            }
        }
    }
}

impl Compiled {
    pub fn new(f: &Formula) -> Self {
        let free = f.free_vars();
        let mut c = Compiler {
            scope: free.iter().cloned().zip(0..).collect(),
            next: free.len(),
        };
        let op = c.compile(f.node());
        Compiled {
            op,
            arity: free.len(),
            slots: c.next,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates with `values` bound to the free variables. No checks beyond
    /// debug assertions; see [`satisfies`] for the checked entry point.
    pub fn eval(&self, s: &Structure, values: &[usize]) -> bool {
        debug_assert_eq!(values.len(), self.arity);
        let mut env = vec![0usize; self.slots];
        env[..values.len()].copy_from_slice(values);
        Evaluator { s }.eval(&self.op, &mut env)
    }

    /// Like [`Compiled::eval`] but reuses a caller-provided environment of at
    /// least `slots` entries.
    pub(crate) fn eval_in(&self, s: &Structure, env: &mut [usize]) -> bool {
        Evaluator { s }.eval(&self.op, env)
    }

    pub(crate) fn slots(&self) -> usize {
        self.slots
    }
}

struct Evaluator<'a> {
    s: &'a Structure,
}

impl Evaluator<'_> {
    #[inline]
    fn value(&self, slot: Slot, env: &[usize]) -> usize {
        match slot {
            Slot::Var(i) => env[i],
            Slot::Const(c) => self.s.constants()[c],
        }
    }

    fn eval(&self, op: &Op, env: &mut [usize]) -> bool {
        match op {
            Op::True => true,
            Op::False => false,
            Op::Rel(rel, args) => {
                let tuple: SmallVec<[usize; 4]> = args.iter().map(|&a| self.value(a, env)).collect();
                self.s.relation(*rel).contains(&tuple)
            }
            Op::Eq(a, b) => self.value(*a, env) == self.value(*b, env),
            Op::Not(f) => !self.eval(f, env),
            Op::And(a, b) => self.eval(a, env) && self.eval(b, env),
            Op::Or(a, b) => self.eval(a, env) || self.eval(b, env),
            Op::Quant {
                exists,
                slot,
                within,
                body,
            } => {
                let saved = env[*slot];
                let result = match within {
                    None => {
                        let mut hit = !exists;
                        for v in 0..self.s.size() {
                            env[*slot] = v;
                            if self.eval(body, env) == *exists {
                                hit = *exists;
                                break;
                            }
                        }
                        hit
                    }
                    Some((radius, anchors)) => {
                        let sources: Vec<usize> = anchors.iter().map(|&a| self.value(a, env)).collect();
                        let range = self.s.gaifman().bfs_within(&sources, *radius);
                        let mut hit = !exists;
                        for (v, _) in range {
                            env[*slot] = v;
                            if self.eval(body, env) == *exists {
                                hit = *exists;
                                break;
                            }
                        }
                        hit
                    }
                };
                env[*slot] = saved;
                result
            }
        }
    }
}

pub(crate) fn check_compatible(s: &Structure, f: &Formula) -> Result<()> {
    if s.signature() != f.signature() {
        return Err(Error::SignatureMismatch);
    }
    if s.is_empty() {
        return Err(Error::EmptyStructure);
    }
    Ok(())
}

/// `S |= f[values]`, with `values[i]` assigned to the `i`-th free variable.
pub fn satisfies(s: &Structure, f: &Formula, values: &[usize]) -> Result<bool> {
    check_compatible(s, f)?;
    if values.len() < f.arity() {
        return Err(Error::Unassigned(f.free_vars()[values.len()].clone()));
    }
    if values.len() > f.arity() {
        return Err(Error::AssignmentLength {
            expected: f.arity(),
            got: values.len(),
        });
    }
    if let Some(&e) = values.iter().find(|&&e| e >= s.size()) {
        return Err(Error::ElementOutOfRange {
            element: e,
            size: s.size(),
        });
    }
    Ok(Compiled::new(f).eval(s, values))
}

/// Named-variable variant of [`satisfies`].
pub fn satisfies_named(s: &Structure, f: &Formula, assignment: &[(&str, usize)]) -> Result<bool> {
    let mut values = Vec::with_capacity(f.arity());
    for v in f.free_vars() {
        match assignment.iter().find(|(name, _)| name == v) {
            Some(&(_, e)) => values.push(e),
            None => return Err(Error::Unassigned(v.clone())),
        }
    }
    satisfies(s, f, &values)
}
