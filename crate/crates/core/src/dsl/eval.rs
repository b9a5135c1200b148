//! Tree-walking evaluator.

use std::cmp::Ordering;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::ast::{CmpOp, EnumLit, Expr, Side};
use super::builtins::BuiltinCatalogue;
use super::DslError;
use crate::scene::{Color, Layout, PlacedObject, Rect, Scene, Shape, Size, BOX_COUNT};

/// Tunable constants of the spatial predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Largest gap (px) still counted as "nearly touching". The lower bound is 1.
    pub nearly_touching_max: i32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            nearly_touching_max: 4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ObjInfo {
    pub object: PlacedObject,
    pub rect: Rect,
    pub box_index: Option<usize>,
}

/// Read-only view of a scene prepared for evaluation. Objects are stored in
/// canonical order, so results never depend on insertion order.
#[derive(Debug)]
pub struct World {
    pub layout: Layout,
    pub objects: Vec<ObjInfo>,
    pub options: EvalOptions,
}

impl World {
    pub fn new(scene: &Scene, options: EvalOptions) -> Self {
        let objects = scene
            .canonical_objects()
            .into_iter()
            .map(|o| {
                let rect = o.bounding_box(&scene.layout);
                ObjInfo {
                    object: o,
                    rect,
                    box_index: scene.layout.containing_box(&rect),
                }
            })
            .collect();
        World {
            layout: scene.layout,
            objects,
            options,
        }
    }

    pub fn obj(&self, index: usize) -> &ObjInfo {
        &self.objects[index]
    }

    pub fn box_members(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.objects.len()).filter(move |&i| self.objects[i].box_index == Some(b))
    }

    pub fn box_rect(&self, b: usize) -> Rect {
        self.layout.box_rect(b)
    }

    pub fn box_count(&self) -> usize {
        BOX_COUNT
    }
}

struct Frame<'a> {
    name: &'a str,
    value: Value<'a>,
    parent: Scope<'a>,
}

#[derive(Clone, Default)]
pub struct Scope<'a>(Option<Rc<Frame<'a>>>);

impl<'a> Scope<'a> {
    fn bind(&self, name: &'a str, value: Value<'a>) -> Scope<'a> {
        Scope(Some(Rc::new(Frame {
            name,
            value,
            parent: self.clone(),
        })))
    }

    fn lookup(&self, name: &str) -> Option<&Value<'a>> {
        let mut cur = self.0.as_ref();
        while let Some(f) = cur {
            if f.name == name {
                return Some(&f.value);
            }
            cur = f.parent.0.as_ref();
        }
        None
    }
}

#[derive(Clone)]
pub enum Function<'a> {
    Lambda {
        param: &'a str,
        body: &'a Expr,
        scope: Scope<'a>,
    },
    Builtin(&'a str),
}

/// Runtime value. Objects and boxes are indices into the [`World`].
#[derive(Clone)]
pub enum Value<'a> {
    Bool(bool),
    Int(i64),
    Object(usize),
    Box(usize),
    Color(Color),
    Shape(Shape),
    Size(Size),
    Side(Side),
    /// Sorted, deduplicated, homogeneous.
    Set(Vec<Value<'a>>),
    Func(Function<'a>),
}

impl std::fmt::Debug for Value<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Object(i) => write!(f, "obj#{i}"),
            Value::Box(i) => write!(f, "box#{i}"),
            Value::Color(c) => write!(f, "{c:?}"),
            Value::Shape(s) => write!(f, "{s:?}"),
            Value::Size(s) => write!(f, "{s:?}"),
            Value::Side(s) => write!(f, "{s:?}"),
            Value::Set(items) => f.debug_set().entries(items).finish(),
            Value::Func(_) => f.write_str("<function>"),
        }
    }
}

impl Value<'_> {
    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Object(_) => 2,
            Value::Box(_) => 3,
            Value::Color(_) => 4,
            Value::Shape(_) => 5,
            Value::Size(_) => 6,
            Value::Side(_) => 7,
            Value::Set(_) => 8,
            Value::Func(_) => 9,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Object(_) => "object",
            Value::Box(_) => "box",
            Value::Color(_) => "color",
            Value::Shape(_) => "shape",
            Value::Size(_) => "size",
            Value::Side(_) => "side",
            Value::Set(_) => "set",
            Value::Func(_) => "function",
        }
    }

    pub fn set(mut items: Vec<Self>) -> Self {
        items.sort();
        items.dedup();
        Value::Set(items)
    }
}

impl Ord for Value<'_> {
    /// Functions never appear in sets or comparisons (rejected statically), so
    /// they are treated as equal to each other.
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Object(a), Object(b)) | (Box(a), Box(b)) => a.cmp(b),
            (Color(a), Color(b)) => a.cmp(b),
            (Shape(a), Shape(b)) => a.cmp(b),
            (Size(a), Size(b)) => a.cmp(b),
            (Side(a), Side(b)) => a.cmp(b),
            (Set(a), Set(b)) => a.cmp(b),
            (Func(_), Func(_)) => Ordering::Equal,
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value<'_> {}

fn runtime_mismatch(node: &str, expected: &str, got: &Value<'_>) -> DslError {
    DslError::TypeMismatch {
        node: node.to_string(),
        expected: expected.to_string(),
        got: got.kind_name().to_string(),
    }
}

/// Evaluation state handed to builtin implementations.
pub struct Interp<'a> {
    pub world: &'a World,
    catalogue: &'a BuiltinCatalogue,
}

impl<'a> Interp<'a> {
    pub fn new(world: &'a World, catalogue: &'a BuiltinCatalogue) -> Self {
        Interp { world, catalogue }
    }

    pub fn eval(&mut self, e: &'a Expr, scope: &Scope<'a>) -> Result<Value<'a>, DslError> {
        match e {
            Expr::Int(v) => Ok(Value::Int(*v)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Enum(lit) => Ok(match *lit {
                EnumLit::Side(s) => Value::Side(s),
                EnumLit::Color(c) => Value::Color(c),
                EnumLit::Shape(s) => Value::Shape(s),
                EnumLit::Size(s) => Value::Size(s),
            }),
            Expr::Var(name) => scope.lookup(name).cloned().ok_or_else(|| DslError::UnboundVariable {
                name: name.clone(),
                position: None,
            }),
            Expr::BuiltinRef(name) => Ok(Value::Func(Function::Builtin(name))),
            Expr::Lambda { param, body } => Ok(Value::Func(Function::Lambda {
                param,
                body,
                scope: scope.clone(),
            })),
            Expr::Call { name, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, scope)?);
                }
                self.call_builtin(name, vals)
            }
            Expr::MethodCall {
                receiver,
                name,
                args,
            } => {
                let mut vals = Vec::with_capacity(args.len() + 1);
                vals.push(self.eval(receiver, scope)?);
                for a in args {
                    vals.push(self.eval(a, scope)?);
                }
                self.call_builtin(name, vals)
            }
            Expr::Compare { op, lhs, rhs } => {
                let l = self.eval(lhs, scope)?;
                let r = self.eval(rhs, scope)?;
                let ord = match (&l, &r) {
                    (Value::Int(a), Value::Int(b)) => a.cmp(b),
                    _ if op.is_ordering() => return Err(runtime_mismatch(&e.to_string(), "int", &l)),
                    _ => l.cmp(&r),
                };
                Ok(Value::Bool(match op {
                    CmpOp::Eq => ord == Ordering::Equal,
                    CmpOp::Ne => ord != Ordering::Equal,
                    CmpOp::Lt => ord == Ordering::Less,
                    CmpOp::Le => ord != Ordering::Greater,
                    CmpOp::Gt => ord == Ordering::Greater,
                    CmpOp::Ge => ord != Ordering::Less,
                }))
            }
            Expr::And(l, r) => {
                if !self.eval_bool(l, scope)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.eval_bool(r, scope)?))
            }
            Expr::Or(l, r) => {
                if self.eval_bool(l, scope)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.eval_bool(r, scope)?))
            }
            Expr::Not(inner) => Ok(Value::Bool(!self.eval_bool(inner, scope)?)),
        }
    }

    pub fn eval_bool(&mut self, e: &'a Expr, scope: &Scope<'a>) -> Result<bool, DslError> {
        match self.eval(e, scope)? {
            Value::Bool(b) => Ok(b),
            other => Err(runtime_mismatch(&e.to_string(), "bool", &other)),
        }
    }

    fn call_builtin(&mut self, name: &str, args: Vec<Value<'a>>) -> Result<Value<'a>, DslError> {
        let b = self.catalogue.get(name).ok_or_else(|| DslError::UnknownBuiltin {
            name: name.to_string(),
            position: None,
        })?;
        if b.arity() != args.len() {
            return Err(DslError::ArityMismatch {
                name: name.to_string(),
                expected: b.arity(),
                got: args.len(),
                position: None,
            });
        }
        (b.eval)(self, args)
    }

    /// Applies a function value (lambda or builtin reference) to arguments.
    pub fn apply(&mut self, f: &Value<'a>, mut args: Vec<Value<'a>>) -> Result<Value<'a>, DslError> {
        match f {
            Value::Func(Function::Lambda { param, body, scope }) => {
                if args.len() != 1 {
                    return Err(DslError::ArityMismatch {
                        name: "lambda".into(),
                        expected: 1,
                        got: args.len(),
                        position: None,
                    });
                }
                let (param, body) = (*param, *body);
                let inner = scope.bind(param, args.pop().unwrap_or(Value::Bool(false)));
                self.eval(body, &inner)
            }
            Value::Func(Function::Builtin(name)) => self.call_builtin(name, args),
            other => Err(runtime_mismatch("call target", "function", other)),
        }
    }
}

pub(crate) fn run(
    e: &Expr,
    scene: &Scene,
    options: EvalOptions,
    catalogue: &BuiltinCatalogue,
) -> Result<bool, DslError> {
    let world = World::new(scene, options);
    let mut interp = Interp::new(&world, catalogue);
    interp.eval_bool(e, &Scope::default())
}
