//! Meaning programs: a small boolean expression language evaluated against scenes.
//!
//! Programs are parsed, kind-checked once, and then evaluated any number of
//! times. Evaluation is total and pure.
//!
//! ```
//! use lilgym_core::dsl::Program;
//! use lilgym_core::scene::{Layout, Scene, Variant};
//!
//! let p = Program::compile("exist(all_items)").unwrap();
//! assert!(!p.evaluate(&Scene::empty(Variant::Scatter, Layout::default())));
//! ```

mod ast;
mod builtins;
mod check;
mod eval;
mod parser;

use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use ast::{CmpOp, EnumLit, Expr, Side};
pub use builtins::{Builtin, BuiltinCatalogue, BuiltinFn, DuplicateBuiltin, Param, Ret};
pub use check::{check_program, Kind};
pub use eval::{EvalOptions, Function, Interp, ObjInfo, Scope, Value, World};

use crate::scene::Scene;

/// Annotated program for "There are two towers with the same height but their
/// base is not the same in color."
pub const TOWER_EXAMPLE: &str = "exist(filter_obj(
    all_boxes, lambda x: x.is_tower() and
    exist(filter_obj(
        all_boxes, lambda y:
            y.is_tower() and
            count(x.all_items_in_box()) ==
                count(y.all_items_in_box()) and
            get_set_colors(filter_obj(
                y.all_items_in_box(),
                is_bottom)) !=
            get_set_colors(filter_obj(
                x.all_items_in_box(),
                is_bottom))))))";

/// Annotated program for "There is a box with all 3 different colors and a
/// black triangle touching the wall with its top."
pub const SCATTER_EXAMPLE: &str = "exist(filter_obj(
    all_boxes, lambda x:
        count(get_set_colors(
            x.all_items_in_box())) == 3 and
        exist(filter_obj(
            x.all_items_in_box(), lambda y:
                is_black(y) and
                is_triangle(y) and
                is_touching_wall(y, Side.TOP)))))";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unbound variable `{name}`{}", at(.position))]
    UnboundVariable {
        name: String,
        position: Option<usize>,
    },
    #[error("unknown builtin `{name}`{}", at(.position))]
    UnknownBuiltin {
        name: String,
        position: Option<usize>,
    },
    #[error("`{name}` takes {expected} argument(s), got {got}{}", at(.position))]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
        position: Option<usize>,
    },
    #[error("type mismatch in `{node}`: expected {expected}, got {got}")]
    TypeMismatch {
        node: String,
        expected: String,
        got: String,
    },
}

fn at(position: &Option<usize>) -> String {
    position.map(|p| format!(" at byte {p}")).unwrap_or_default()
}

impl DslError {
    pub fn position(&self) -> Option<usize> {
        match self {
            DslError::Syntax { position, .. } => Some(*position),
            DslError::UnboundVariable { position, .. }
            | DslError::UnknownBuiltin { position, .. }
            | DslError::ArityMismatch { position, .. } => *position,
            DslError::TypeMismatch { .. } => None,
        }
    }
}

pub fn standard_catalogue() -> &'static BuiltinCatalogue {
    shared_standard().as_ref()
}

fn shared_standard() -> &'static Arc<BuiltinCatalogue> {
    static STANDARD: OnceLock<Arc<BuiltinCatalogue>> = OnceLock::new();
    STANDARD.get_or_init(|| Arc::new(BuiltinCatalogue::standard()))
}

/// Parses program text with the standard catalogue. Resolves names and checks
/// arities but does not kind-check.
pub fn parse(src: &str) -> Result<Expr, DslError> {
    parser::parse_with(src, standard_catalogue())
}

pub fn parse_with(src: &str, catalogue: &BuiltinCatalogue) -> Result<Expr, DslError> {
    parser::parse_with(src, catalogue)
}

/// Kind-checks and evaluates a parsed program against a scene.
pub fn evaluate(ast: &Expr, scene: &Scene) -> Result<bool, DslError> {
    let cat = standard_catalogue();
    check_program(ast, cat)?;
    eval::run(ast, scene, EvalOptions::default(), cat)
}

/// A parsed and kind-checked program.
#[derive(Clone)]
pub struct Program {
    source: String,
    ast: Expr,
    catalogue: Arc<BuiltinCatalogue>,
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Program").field("source", &self.source).finish()
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl Program {
    pub fn compile(src: &str) -> Result<Self, DslError> {
        Self::compile_with(src, shared_standard().clone())
    }

    pub fn compile_with(src: &str, catalogue: Arc<BuiltinCatalogue>) -> Result<Self, DslError> {
        let ast = parser::parse_with(src, &catalogue)?;
        check_program(&ast, &catalogue)?;
        Ok(Program {
            source: src.to_string(),
            ast,
            catalogue,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn evaluate(&self, scene: &Scene) -> bool {
        self.evaluate_with(scene, EvalOptions::default())
    }

    /// Evaluation of a checked program cannot fail; a failure here is a bug in
    /// a builtin's declared signature.
    pub fn evaluate_with(&self, scene: &Scene, options: EvalOptions) -> bool {
        self.try_evaluate_with(scene, options)
            .unwrap_or_else(|e| panic!("checked program failed to evaluate: {e}"))
    }

    pub fn try_evaluate_with(&self, scene: &Scene, options: EvalOptions) -> Result<bool, DslError> {
        eval::run(&self.ast, scene, options, &self.catalogue)
    }

    /// Literal attributes a program mentions through attribute predicates or
    /// enum literals.
    pub fn mentioned_attributes(&self) -> MentionedAttributes {
        let mut m = MentionedAttributes::default();
        self.ast.walk(&mut |e| {
            let name = match e {
                Expr::Call { name, .. } | Expr::MethodCall { name, .. } | Expr::BuiltinRef(name) => name.as_str(),
                Expr::Enum(EnumLit::Color(c)) => {
                    m.colors.push(*c);
                    return;
                }
                Expr::Enum(EnumLit::Shape(s)) => {
                    m.shapes.push(*s);
                    return;
                }
                Expr::Enum(EnumLit::Size(s)) => {
                    m.sizes.push(*s);
                    return;
                }
                _ => return,
            };
            use crate::scene::{Color, Shape, Size};
            match name {
                "is_black" => m.colors.push(Color::Black),
                "is_blue" => m.colors.push(Color::Blue),
                "is_yellow" => m.colors.push(Color::Yellow),
                "is_circle" => m.shapes.push(Shape::Circle),
                "is_square" => m.shapes.push(Shape::Square),
                "is_triangle" => m.shapes.push(Shape::Triangle),
                "is_small" => m.sizes.push(Size::Small),
                "is_medium" => m.sizes.push(Size::Medium),
                "is_large" => m.sizes.push(Size::Large),
                _ => {}
            }
        });
        m.colors.sort();
        m.colors.dedup();
        m.shapes.sort();
        m.shapes.dedup();
        m.sizes.sort();
        m.sizes.dedup();
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MentionedAttributes {
    pub colors: Vec<crate::scene::Color>,
    pub shapes: Vec<crate::scene::Shape>,
    pub sizes: Vec<crate::scene::Size>,
}
