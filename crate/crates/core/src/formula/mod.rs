//! First-order formulas over a relational signature.
//!
//! Besides the usual connectives and quantifiers the syntax has
//! neighbourhood-relativised quantifiers `E y @<=r(x1,..,xk). f`, where `y`
//! ranges over the closed `r`-neighbourhood of the anchors in the Gaifman
//! graph. A formula whose quantifiers are all relativised is local, with
//! radius the largest sum of radii along a chain of nested quantifiers.

mod parser;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::structure::{Signature, Structure};

pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Index into the signature's constants.
    Const(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// Restricts a quantified variable to the closed `radius`-neighbourhood of
/// the anchor terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relativization {
    pub radius: usize,
    pub anchors: Vec<Term>,
}

/// Formula syntax tree. Implication is not a node: it is rewritten to
/// `~a | b` when built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Rel { rel: usize, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Quant {
        quantifier: Quantifier,
        var: String,
        within: Option<Relativization>,
        body: Box<Node>,
    },
}

impl Node {
    pub fn not(self) -> Node {
        Node::Not(Box::new(self))
    }

    pub fn and(self, other: Node) -> Node {
        Node::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Node) -> Node {
        Node::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Node) -> Node {
        self.not().or(other)
    }

    pub fn exists(var: &str, body: Node) -> Node {
        Node::Quant {
            quantifier: Quantifier::Exists,
            var: var.to_string(),
            within: None,
            body: Box::new(body),
        }
    }

    pub fn forall(var: &str, body: Node) -> Node {
        Node::Quant {
            quantifier: Quantifier::Forall,
            var: var.to_string(),
            within: None,
            body: Box::new(body),
        }
    }

    /// `E var @<=radius(anchors). body`
    pub fn exists_near(var: &str, radius: usize, anchors: &[&str], body: Node) -> Node {
        Node::Quant {
            quantifier: Quantifier::Exists,
            var: var.to_string(),
            within: Some(Relativization {
                radius,
                anchors: anchors.iter().map(|a| Term::Var(a.to_string())).collect(),
            }),
            body: Box::new(body),
        }
    }

    pub fn forall_near(var: &str, radius: usize, anchors: &[&str], body: Node) -> Node {
        match Node::exists_near(var, radius, anchors, body) {
            Node::Quant {
                var, within, body, ..
            } => Node::Quant {
                quantifier: Quantifier::Forall,
                var,
                within,
                body,
            },
            _ => unreachable!(),
        }
    }

    pub fn rel(rel: usize, vars: &[&str]) -> Node {
        Node::Rel {
            rel,
            args: vars.iter().map(|v| Term::Var(v.to_string())).collect(),
        }
    }

    pub fn eq(a: &str, b: &str) -> Node {
        Node::Eq(Term::Var(a.to_string()), Term::Var(b.to_string()))
    }

    pub fn qrank(&self) -> usize {
        match self {
            Node::True | Node::False | Node::Rel { .. } | Node::Eq(..) => 0,
            Node::Not(f) => f.qrank(),
            Node::And(a, b) | Node::Or(a, b) => a.qrank().max(b.qrank()),
            Node::Quant { body, .. } => body.qrank() + 1,
        }
    }

    /// Radius of the syntactic local fragment, `None` if some quantifier is
    /// not relativised. A bound variable ranging within `r` of anchors that
    /// lie within `d` of the free variables lies within `d + r` of them; the
    /// radius is the largest such bound.
    pub fn local_radius(&self) -> Option<usize> {
        fn go(node: &Node, depth: &mut Vec<(String, usize)>) -> Option<usize> {
            match node {
                Node::True | Node::False | Node::Rel { .. } | Node::Eq(..) => Some(0),
                Node::Not(f) => go(f, depth),
                Node::And(a, b) | Node::Or(a, b) => Some(go(a, depth)?.max(go(b, depth)?)),
                Node::Quant {
                    var, within, body, ..
                } => {
                    let rel = within.as_ref()?;
                    let base = rel
                        .anchors
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => depth
                                .iter()
                                .rev()
                                .find(|(name, _)| name == v)
                                .map_or(0, |&(_, d)| d),
                            Term::Const(_) => 0,
                        })
                        .max()
                        .unwrap_or(0);
                    let d = base + rel.radius;
                    depth.push((var.clone(), d));
                    let inner = go(body, depth);
                    depth.pop();
                    Some(d.max(inner?))
                }
            }
        }
        go(self, &mut Vec::new())
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        match self {
            Node::True | Node::False => {}
            Node::Rel { args, .. } => args.iter().for_each(|t| term(t, bound, out)),
            Node::Eq(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Node::Not(f) => f.collect_free(bound, out),
            Node::And(a, b) | Node::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Node::Quant {
                var, within, body, ..
            } => {
                if let Some(rel) = within {
                    rel.anchors.iter().for_each(|t| term(t, bound, out));
                }
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Free variables in order of first appearance.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn check(&self, sig: &Signature) -> Result<()> {
        let term = |t: &Term| match t {
            Term::Const(c) if *c >= sig.constants().len() => Err(Error::Format(format!(
                "constant index {c} outside the signature"
            ))),
            _ => Ok(()),
        };
        match self {
            Node::True | Node::False => Ok(()),
            Node::Rel { rel, args } => {
                let sym = sig
                    .relations()
                    .get(*rel)
                    .ok_or_else(|| Error::UnknownRelation(format!("#{rel}")))?;
                if sym.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        name: sym.name.clone(),
                        expected: sym.arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(term)
            }
            Node::Eq(a, b) => term(a).and_then(|_| term(b)),
            Node::Not(f) => f.check(sig),
            Node::And(a, b) | Node::Or(a, b) => a.check(sig).and_then(|_| b.check(sig)),
            Node::Quant { within, body, .. } => {
                if let Some(rel) = within {
                    if rel.anchors.is_empty() {
                        return Err(Error::Format("relativised quantifier without anchors".into()));
                    }
                    rel.anchors.iter().try_for_each(term)?;
                }
                body.check(sig)
            }
        }
    }

    fn substitute_free(&self, map: &HashMap<String, Term>, bound: &mut Vec<String>) -> Node {
        let sub = |t: &Term, bound: &Vec<String>| match t {
            Term::Var(v) if !bound.contains(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        };
        match self {
            Node::True => Node::True,
            Node::False => Node::False,
            Node::Rel { rel, args } => Node::Rel {
                rel: *rel,
                args: args.iter().map(|t| sub(t, bound)).collect(),
            },
            Node::Eq(a, b) => Node::Eq(sub(a, bound), sub(b, bound)),
            Node::Not(f) => f.substitute_free(map, bound).not(),
            Node::And(a, b) => a.substitute_free(map, bound).and(b.substitute_free(map, bound)),
            Node::Or(a, b) => a.substitute_free(map, bound).or(b.substitute_free(map, bound)),
            Node::Quant {
                quantifier,
                var,
                within,
                body,
            } => {
                let within = within.as_ref().map(|r| Relativization {
                    radius: r.radius,
                    anchors: r.anchors.iter().map(|t| sub(t, bound)).collect(),
                });
                bound.push(var.clone());
                let body = Box::new(body.substitute_free(map, bound));
                bound.pop();
                Node::Quant {
                    quantifier: *quantifier,
                    var: var.clone(),
                    within,
                    body,
                }
            }
        }
    }
}

/// A checked formula with its signature, quantifier rank and ordered free
/// variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    node: Node,
    signature: Arc<Signature>,
    qrank: usize,
    free: Vec<String>,
}

/// Syntactic fragment membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragmentFlags {
    pub is_sentence: bool,
    pub free_var_count: usize,
    pub is_quantifier_free: bool,
    pub syntactic_local_radius: Option<usize>,
}

impl Formula {
    pub fn new(signature: impl Into<Arc<Signature>>, node: Node) -> Result<Self> {
        let signature = signature.into();
        node.check(&signature)?;
        let qrank = node.qrank();
        let free = node.free_vars();
        Ok(Formula {
            node,
            signature,
            qrank,
            free,
        })
    }

    pub fn parse(text: &str, signature: &Signature) -> Result<Self> {
        parse(text, signature)
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn qrank(&self) -> usize {
        self.qrank
    }

    /// Free variables: first-appearance order, then any padding.
    pub fn free_vars(&self) -> &[String] {
        &self.free
    }

    pub fn arity(&self) -> usize {
        self.free.len()
    }

    pub fn classify(&self) -> FragmentFlags {
        FragmentFlags {
            is_sentence: self.free.is_empty(),
            free_var_count: self.free.len(),
            is_quantifier_free: self.qrank == 0,
            syntactic_local_radius: self.node.local_radius(),
        }
    }

    /// Same formula with extra, unused free variables appended.
    pub fn padded(&self, extra: &[&str]) -> Formula {
        let mut f = self.clone();
        for v in extra {
            if !f.free.iter().any(|x| x == v) {
                f.free.push(v.to_string());
            }
        }
        f
    }

    fn combine(&self, other: &Formula, node: Node) -> Result<Formula> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch);
        }
        let mut f = Formula::new(self.signature.clone(), node)?;
        // keep padding of both operands
        for v in self.free.iter().chain(&other.free) {
            if !f.free.contains(v) {
                f.free.push(v.clone());
            }
        }
        Ok(f)
    }

    pub fn negate(&self) -> Formula {
        let mut f = Formula::new(self.signature.clone(), self.node.clone().not())
            .expect("negation of a checked formula");
        f.free = self.free.clone();
        f
    }

    pub fn and(&self, other: &Formula) -> Result<Formula> {
        self.combine(other, self.node.clone().and(other.node.clone()))
    }

    pub fn or(&self, other: &Formula) -> Result<Formula> {
        self.combine(other, self.node.clone().or(other.node.clone()))
    }

    pub fn implies(&self, other: &Formula) -> Result<Formula> {
        self.combine(other, self.node.clone().implies(other.node.clone()))
    }

    /// Replaces the `i`-th free variable by a fresh constant, giving a
    /// sentence over the signature extended by those constants.
    pub fn nu_p(&self) -> NuP {
        let mut names = Vec::with_capacity(self.free.len());
        for i in 1..=self.free.len() {
            let mut name = format!("c{i}");
            while self.signature.has_symbol(&name) || self.free.contains(&name) {
                name.push('\'');
            }
            names.push(name);
        }
        let base = self.signature.constants().len();
        let map: HashMap<String, Term> = self
            .free
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), Term::Const(base + i)))
            .collect();
        let signature = self
            .signature
            .with_constants(names.iter().cloned())
            .expect("fresh constant names");
        let node = self.node.substitute_free(&map, &mut Vec::new());
        let sentence = Formula::new(signature, node).expect("substitution preserves validity");
        NuP {
            sentence,
            constant_names: names,
        }
    }
}

/// Result of [`Formula::nu_p`].
#[derive(Debug, Clone)]
pub struct NuP {
    pub sentence: Formula,
    pub constant_names: Vec<String>,
}

impl NuP {
    /// The expansion `(G, v1, .., vp)` the sentence is evaluated in.
    pub fn expand(&self, s: &Structure, values: &[usize]) -> Result<Structure> {
        if values.len() != self.constant_names.len() {
            return Err(Error::AssignmentLength {
                expected: self.constant_names.len(),
                got: values.len(),
            });
        }
        s.with_constants(self.constant_names.clone(), values)
    }
}

struct Printer<'a> {
    node: &'a Node,
    sig: &'a Signature,
}

impl Printer<'_> {
    fn term(&self, t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match t {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{}", self.sig.constants()[*c]),
        }
    }

    fn terms(&self, ts: &[Term], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in ts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            self.term(t, f)?;
        }
        Ok(())
    }

    fn sub<'b>(&'b self, node: &'b Node) -> Printer<'b> {
        Printer {
            node,
            sig: self.sig,
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::True => write!(f, "true"),
            Node::False => write!(f, "false"),
            Node::Rel { rel, args } => {
                write!(f, "{}(", self.sig.relations()[*rel].name)?;
                self.terms(args, f)?;
                write!(f, ")")
            }
            Node::Eq(a, b) => {
                write!(f, "(")?;
                self.term(a, f)?;
                write!(f, " = ")?;
                self.term(b, f)?;
                write!(f, ")")
            }
            Node::Not(g) => write!(f, "~{}", self.sub(g)),
            Node::And(a, b) => write!(f, "({} & {})", self.sub(a), self.sub(b)),
            Node::Or(a, b) => write!(f, "({} | {})", self.sub(a), self.sub(b)),
            Node::Quant {
                quantifier,
                var,
                within,
                body,
            } => {
                let q = match quantifier {
                    Quantifier::Exists => "E",
                    Quantifier::Forall => "A",
                };
                write!(f, "({q} {var}")?;
                if let Some(rel) = within {
                    write!(f, " @<={}(", rel.radius)?;
                    self.terms(&rel.anchors, f)?;
                    write!(f, ")")?;
                }
                write!(f, ". {})", self.sub(body))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.node,
            sig: &self.signature,
        }
        .fmt(f)
    }
}
