//! Static kind checking. Runs once per program, before any evaluation.

use std::fmt;

use super::ast::{EnumLit, Expr};
use super::builtins::{Builtin, BuiltinCatalogue, Param, Ret};
use super::DslError;

/// Static kind of an expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Bool,
    Int,
    Object,
    Box,
    Color,
    Shape,
    Size,
    Side,
    Set(std::boxed::Box<Kind>),
    Func(Vec<Kind>, std::boxed::Box<Kind>),
}

impl Kind {
    pub fn set_of(elem: Kind) -> Kind {
        Kind::Set(std::boxed::Box::new(elem))
    }

    pub fn predicate(arg: Kind) -> Kind {
        Kind::Func(vec![arg], std::boxed::Box::new(Kind::Bool))
    }

    pub fn element(&self) -> Option<&Kind> {
        match self {
            Kind::Set(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Bool => f.write_str("bool"),
            Kind::Int => f.write_str("int"),
            Kind::Object => f.write_str("object"),
            Kind::Box => f.write_str("box"),
            Kind::Color => f.write_str("color"),
            Kind::Shape => f.write_str("shape"),
            Kind::Size => f.write_str("size"),
            Kind::Side => f.write_str("side"),
            Kind::Set(e) => write!(f, "set<{e}>"),
            Kind::Func(args, ret) => {
                f.write_str("fn(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ") -> {ret}")
            }
        }
    }
}

fn mismatch(node: &Expr, expected: impl fmt::Display, got: impl fmt::Display) -> DslError {
    DslError::TypeMismatch {
        node: node.to_string(),
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

pub(crate) struct Checker<'c> {
    catalogue: &'c BuiltinCatalogue,
    env: Vec<(String, Kind)>,
}

impl<'c> Checker<'c> {
    pub(crate) fn new(catalogue: &'c BuiltinCatalogue) -> Self {
        Checker {
            catalogue,
            env: Vec::new(),
        }
    }

    fn builtin(&self, name: &str) -> Result<&'c Builtin, DslError> {
        self.catalogue.get(name).ok_or_else(|| DslError::UnknownBuiltin {
            name: name.to_string(),
            position: None,
        })
    }

    pub(crate) fn infer(&mut self, e: &Expr) -> Result<Kind, DslError> {
        match e {
            Expr::Int(_) => Ok(Kind::Int),
            Expr::Bool(_) => Ok(Kind::Bool),
            Expr::Enum(lit) => Ok(match lit {
                EnumLit::Side(_) => Kind::Side,
                EnumLit::Color(_) => Kind::Color,
                EnumLit::Shape(_) => Kind::Shape,
                EnumLit::Size(_) => Kind::Size,
            }),
            Expr::Var(name) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, k)| k.clone())
                .ok_or_else(|| DslError::UnboundVariable {
                    name: name.clone(),
                    position: None,
                }),
            Expr::Call { name, args } => {
                let args: Vec<&Expr> = args.iter().collect();
                self.call(e, name, &args)
            }
            Expr::MethodCall {
                receiver,
                name,
                args,
            } => {
                let mut all: Vec<&Expr> = vec![receiver];
                all.extend(args.iter());
                self.call(e, name, &all)
            }
            Expr::BuiltinRef(name) => {
                let b = self.builtin(name)?;
                b.value_kind()
                    .ok_or_else(|| mismatch(e, "builtin with a fixed signature", "generic builtin"))
            }
            Expr::Lambda { .. } => Err(mismatch(e, "a value", "lambda outside a predicate argument")),
            Expr::Compare { op, lhs, rhs } => {
                let l = self.infer(lhs)?;
                let r = self.infer(rhs)?;
                if l != r {
                    return Err(mismatch(rhs, &l, &r));
                }
                if matches!(l, Kind::Func(..)) {
                    return Err(mismatch(e, "comparable value", &l));
                }
                if op.is_ordering() && l != Kind::Int {
                    return Err(mismatch(lhs, Kind::Int, &l));
                }
                Ok(Kind::Bool)
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                self.check(l, &Kind::Bool)?;
                self.check(r, &Kind::Bool)?;
                Ok(Kind::Bool)
            }
            Expr::Not(inner) => {
                self.check(inner, &Kind::Bool)?;
                Ok(Kind::Bool)
            }
        }
    }

    pub(crate) fn check(&mut self, e: &Expr, expected: &Kind) -> Result<(), DslError> {
        if let Expr::Lambda { param, body } = e {
            return match expected {
                Kind::Func(params, ret) if params.len() == 1 => {
                    self.env.push((param.clone(), params[0].clone()));
                    let r = self.check(body, ret);
                    self.env.pop();
                    r
                }
                _ => Err(mismatch(e, expected, "lambda")),
            };
        }
        let got = self.infer(e)?;
        if &got != expected {
            return Err(mismatch(e, expected, got));
        }
        Ok(())
    }

    fn call(&mut self, node: &Expr, name: &str, args: &[&Expr]) -> Result<Kind, DslError> {
        let b = self.builtin(name)?;
        if b.arity() != args.len() {
            return Err(DslError::ArityMismatch {
                name: name.to_string(),
                expected: b.arity(),
                got: args.len(),
                position: None,
            });
        }
        let mut kinds: Vec<Kind> = Vec::with_capacity(args.len());
        for (param, arg) in b.params.iter().zip(args) {
            let k = match param {
                Param::Is(k) => {
                    self.check(arg, k)?;
                    k.clone()
                }
                Param::AnySet => {
                    let k = self.infer(arg)?;
                    if k.element().is_none() {
                        return Err(mismatch(arg, "set", &k));
                    }
                    k
                }
                Param::PredicateOver(i) => {
                    let elem = kinds[*i]
                        .element()
                        .cloned()
                        .ok_or_else(|| mismatch(node, "set argument", &kinds[*i]))?;
                    let k = Kind::predicate(elem);
                    self.check(arg, &k)?;
                    k
                }
            };
            kinds.push(k);
        }
        Ok(match &b.ret {
            Ret::Is(k) => k.clone(),
            Ret::SameAs(i) => kinds[*i].clone(),
        })
    }
}

/// Kind-checks a whole program; the root must be boolean.
pub fn check_program(e: &Expr, catalogue: &BuiltinCatalogue) -> Result<(), DslError> {
    Checker::new(catalogue).check(e, &Kind::Bool)
}
