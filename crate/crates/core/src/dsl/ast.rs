use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{Color, Shape, Size};

/// Box wall named in `is_touching_wall(o, Side.TOP)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Bottom, Side::Left, Side::Right];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnumLit {
    Side(Side),
    Color(Color),
    Shape(Shape),
    Size(Size),
}

impl EnumLit {
    pub fn namespace(&self) -> &'static str {
        match self {
            EnumLit::Side(_) => "Side",
            EnumLit::Color(_) => "Color",
            EnumLit::Shape(_) => "Shape",
            EnumLit::Size(_) => "Size",
        }
    }

    pub fn member(&self) -> &'static str {
        match self {
            EnumLit::Side(Side::Top) => "TOP",
            EnumLit::Side(Side::Bottom) => "BOTTOM",
            EnumLit::Side(Side::Left) => "LEFT",
            EnumLit::Side(Side::Right) => "RIGHT",
            EnumLit::Color(Color::Black) => "BLACK",
            EnumLit::Color(Color::Blue) => "BLUE",
            EnumLit::Color(Color::Yellow) => "YELLOW",
            EnumLit::Shape(Shape::Circle) => "CIRCLE",
            EnumLit::Shape(Shape::Square) => "SQUARE",
            EnumLit::Shape(Shape::Triangle) => "TRIANGLE",
            EnumLit::Size(Size::Small) => "SMALL",
            EnumLit::Size(Size::Medium) => "MEDIUM",
            EnumLit::Size(Size::Large) => "LARGE",
        }
    }

    pub fn is_namespace(name: &str) -> bool {
        matches!(name, "Side" | "Color" | "Shape" | "Size")
    }

    pub fn lookup(namespace: &str, member: &str) -> Option<EnumLit> {
        let lit = match (namespace, member) {
            ("Side", "TOP") => EnumLit::Side(Side::Top),
            ("Side", "BOTTOM") => EnumLit::Side(Side::Bottom),
            ("Side", "LEFT") => EnumLit::Side(Side::Left),
            ("Side", "RIGHT") => EnumLit::Side(Side::Right),
            ("Color", "BLACK") => EnumLit::Color(Color::Black),
            ("Color", "BLUE") => EnumLit::Color(Color::Blue),
            ("Color", "YELLOW") => EnumLit::Color(Color::Yellow),
            ("Shape", "CIRCLE") => EnumLit::Shape(Shape::Circle),
            ("Shape", "SQUARE") => EnumLit::Shape(Shape::Square),
            ("Shape", "TRIANGLE") => EnumLit::Shape(Shape::Triangle),
            ("Size", "SMALL") => EnumLit::Size(Size::Small),
            ("Size", "MEDIUM") => EnumLit::Size(Size::Medium),
            ("Size", "LARGE") => EnumLit::Size(Size::Large),
            _ => return None,
        };
        Some(lit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// Parsed meaning program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// `name(args)`; nullary builtins written bare (`all_boxes`) parse to this too.
    Call { name: String, args: Vec<Expr> },
    /// `receiver.name(args)`, equivalent to `name(receiver, args)`.
    MethodCall {
        receiver: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    /// A builtin with parameters used as a value, e.g. `filter_obj(S, is_bottom)`.
    BuiltinRef(String),
    Lambda { param: String, body: Box<Expr> },
    Var(String),
    Int(i64),
    Bool(bool),
    Enum(EnumLit),
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call {
            name: name.to_string(),
            args,
        }
    }

    fn is_compound(&self) -> bool {
        matches!(
            self,
            Expr::Lambda { .. } | Expr::Compare { .. } | Expr::And(..) | Expr::Or(..) | Expr::Not(..)
        )
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Call { args, .. } => args.iter().map(Expr::size).sum(),
            Expr::MethodCall { receiver, args, .. } => {
                receiver.size() + args.iter().map(Expr::size).sum::<usize>()
            }
            Expr::Lambda { body, .. } => body.size(),
            Expr::Compare { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
                lhs.size() + rhs.size()
            }
            Expr::Not(e) => e.size(),
            _ => 0,
        }
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
            Expr::MethodCall { receiver, args, .. } => {
                receiver.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            Expr::Lambda { body, .. } => body.walk(f),
            Expr::Compare { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Not(e) => e.walk(f),
            _ => {}
        }
    }
}

struct Operand<'a>(&'a Expr);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_compound() {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Expr]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// Pretty-printer; the output reparses to a structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Call { name, args } => {
                write!(f, "{name}(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
            Expr::MethodCall {
                receiver,
                name,
                args,
            } => {
                write!(f, "{}.{name}(", Operand(receiver))?;
                write_args(f, args)?;
                f.write_str(")")
            }
            Expr::BuiltinRef(name) | Expr::Var(name) => f.write_str(name),
            Expr::Lambda { param, body } => write!(f, "lambda {param}: {body}"),
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(true) => f.write_str("True"),
            Expr::Bool(false) => f.write_str("False"),
            Expr::Enum(lit) => write!(f, "{}.{}", lit.namespace(), lit.member()),
            Expr::Compare { op, lhs, rhs } => {
                write!(f, "{} {} {}", Operand(lhs), op.symbol(), Operand(rhs))
            }
            Expr::And(l, r) => write!(f, "{} and {}", Operand(l), Operand(r)),
            Expr::Or(l, r) => write!(f, "{} or {}", Operand(l), Operand(r)),
            Expr::Not(e) => write!(f, "not {}", Operand(e)),
        }
    }
}
